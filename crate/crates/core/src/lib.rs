//! Nonparametric maximum likelihood for random-coefficient binary response
//! models.
//!
//! An observation `(y, z, v)` with `y = 1{Z . eta >= v}`, `Z = (1, z)`, cuts
//! coefficient space along the hyperplane `Z . eta = v`. The likelihood only
//! depends on how much mass the mixing distribution places on each cell of the
//! resulting arrangement, so the estimator is computed by enumerating the cells
//! ([`arrangement`]), keeping those that can carry mass, and solving a finite
//! convex mixture problem ([`mixsolver`]).

pub mod arrangement;
pub mod effects;
pub mod error;
pub mod harness;
pub mod lp;
pub mod matrix;
pub mod mixsolver;
pub mod model;
pub mod scalar;
pub mod sign;
pub mod univariate;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use sign::SignVector;

pub type Hyperplane64 = arrangement::Hyperplane<f64>;
pub type Hyperplane32 = arrangement::Hyperplane<f32>;
pub type Arrangement64 = arrangement::Arrangement<f64>;
pub type Arrangement32 = arrangement::Arrangement<f32>;
pub type Cell64 = arrangement::Cell<f64>;
pub type Dataset64 = model::Dataset<f64>;
pub type Dataset32 = model::Dataset<f32>;
pub type ModelFit64 = model::ModelFit<f64>;
pub type ModelFit32 = model::ModelFit<f32>;
pub type MixtureSolution64 = mixsolver::MixtureSolution<f64>;
pub type MixtureSolution32 = mixsolver::MixtureSolution<f32>;
pub type UnivariateFit64 = univariate::UnivariateFit<f64>;
pub type EffectBound64 = effects::EffectBound<f64>;
