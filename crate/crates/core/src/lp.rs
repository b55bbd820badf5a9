//! Dense simplex kernel for the max-slack feasibility LP.
//!
//! The problem solved is
//!
//! ```text
//!     maximize  eps
//!     s.t.      a_i . x - b_i >= eps     i = 1..n
//!               eps <= cap
//! ```
//!
//! over free `x` in R^d and free `eps`. The optimum `eps*` is positive exactly
//! when the open polyhedron `{x : a_i . x > b_i}` is nonempty.
//!
//! Rather than running the simplex on this `n x (d + 1)` inequality system we
//! solve its dual, which is in standard form with only `d + 1` equality rows:
//!
//! ```text
//!     minimize  -sum_i b_i y_i + cap * y_cap
//!     s.t.      sum_i y_i a_i          = 0
//!               sum_i y_i + y_cap      = 1,    y >= 0
//! ```
//!
//! `y_cap = 1` is a feasible start, so only the zero rows need artificial
//! columns and those sit at level zero from the outset. The primal point is
//! read off the simplex multipliers of the optimal basis.

use crate::scalar::{dot, Scalar};

/// A max-slack LP. Rows are stored densely, row-major.
#[derive(Debug, Clone)]
pub struct SlackProblem<T> {
    dim: usize,
    rows: Vec<T>,
    rhs: Vec<T>,
    cap: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackSolution<T> {
    /// Maximizer of the smallest slack.
    pub point: Vec<T>,
    /// `min(cap, min_i a_i . point - b_i)` evaluated at `point`; may be negative.
    pub slack: T,
    /// Simplex pivots performed.
    pub pivots: usize,
}

impl<T: Scalar> SlackProblem<T> {
    pub fn new(dim: usize, cap: T) -> Self {
        SlackProblem {
            dim,
            rows: Vec::new(),
            rhs: Vec::new(),
            cap,
        }
    }

    pub fn with_capacity(dim: usize, cap: T, n: usize) -> Self {
        SlackProblem {
            dim,
            rows: Vec::with_capacity(n * dim),
            rhs: Vec::with_capacity(n),
            cap,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    /// Adds the constraint `sign * (a . x - b) >= eps`.
    pub fn push(&mut self, a: &[T], b: T, positive: bool) {
        assert_eq!(a.len(), self.dim, "constraint length must equal dimension");
        if positive {
            self.rows.extend_from_slice(a);
            self.rhs.push(b);
        } else {
            self.rows.extend(a.iter().map(|&x| -x));
            self.rhs.push(-b);
        }
    }

    /// Drops the most recently pushed constraint.
    pub fn pop(&mut self) {
        if self.rhs.pop().is_some() {
            self.rows.truncate(self.rhs.len() * self.dim);
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Smallest slack of `x`, capped at `cap`.
    pub fn min_slack(&self, x: &[T]) -> T {
        (0..self.len()).fold(self.cap, |m, i| m.min(dot(self.row(i), x) - self.rhs[i]))
    }

    pub fn solve(&self) -> SlackSolution<T> {
        let point = Tableau::build(self).run();
        let (point, pivots) = point;
        let slack = self.min_slack(&point);
        SlackSolution {
            point,
            slack,
            pivots,
        }
    }

    /// Same optimum by row generation: solves on the rows tightest at `hint`
    /// plus the last row, then adds rows the solution violates until none are
    /// left. A restricted optimum at or below `T::interior_tol()` already proves
    /// the full problem empty and is returned as is.
    pub fn solve_from(&self, hint: &[T]) -> SlackSolution<T> {
        let n = self.len();
        let start = 4 * (self.dim + 1);
        if n <= 2 * start || hint.len() != self.dim {
            return self.solve();
        }
        let slack_at = |x: &[T]| -> Vec<T> { (0..n).map(|i| dot(self.row(i), x) - self.rhs[i]).collect() };

        let s0 = slack_at(hint);
        let mut order: Vec<usize> = (0..n - 1).collect();
        order.select_nth_unstable_by(start - 1, |&a, &b| s0[a].partial_cmp(&s0[b]).unwrap().then(a.cmp(&b)));
        let mut active: Vec<usize> = order[..start].to_vec();
        active.push(n - 1);
        let mut in_active = vec![false; n];
        active.iter().for_each(|&i| in_active[i] = true);

        let mut pivots = 0;
        loop {
            let mut sub = SlackProblem::with_capacity(self.dim, self.cap, active.len());
            for &i in &active {
                sub.rows.extend_from_slice(self.row(i));
                sub.rhs.push(self.rhs[i]);
            }
            let sol = sub.solve();
            pivots += sol.pivots;
            if sol.slack <= T::interior_tol() {
                return SlackSolution {
                    point: sol.point,
                    slack: sol.slack,
                    pivots,
                };
            }
            let s = slack_at(&sol.point);
            let floor = sol.slack - T::epsilon() * T::lit(64.0) * (T::one() + sol.slack.abs());
            let mut violated: Vec<usize> = (0..n).filter(|&i| !in_active[i] && s[i] < floor).collect();
            if violated.is_empty() {
                let slack = s.iter().fold(self.cap, |m, &v| m.min(v));
                return SlackSolution {
                    point: sol.point,
                    slack,
                    pivots,
                };
            }
            violated.sort_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap().then(a.cmp(&b)));
            violated.truncate(start);
            for i in violated {
                in_active[i] = true;
                active.push(i);
            }
        }
    }
}

/// Dual simplex tableau. Columns: `n` structural, one cap column, `d` artificials.
struct Tableau<T> {
    m: usize,
    ncol: usize,
    n: usize,
    dim: usize,
    a: Vec<T>,
    rhs: Vec<T>,
    /// Reduced costs `c_j - pi . M_j`.
    z: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
}

impl<T: Scalar> Tableau<T> {
    fn build(p: &SlackProblem<T>) -> Self {
        let n = p.len();
        let dim = p.dim;
        let m = dim + 1;
        let ncol = n + 1 + dim;
        let mut a = vec![T::zero(); m * ncol];
        for i in 0..n {
            for (r, &v) in p.row(i).iter().enumerate() {
                a[r * ncol + i] = v;
            }
            a[dim * ncol + i] = T::one();
        }
        a[dim * ncol + n] = T::one();
        for r in 0..dim {
            a[r * ncol + n + 1 + r] = T::one();
        }
        let mut rhs = vec![T::zero(); m];
        rhs[dim] = T::one();

        // Only the cap column carries cost in the starting basis.
        let mut z = vec![T::zero(); ncol];
        for i in 0..n {
            z[i] = -p.rhs[i] - p.cap;
        }

        let mut basis = Vec::with_capacity(m);
        let mut is_basic = vec![false; ncol];
        for r in 0..dim {
            basis.push(n + 1 + r);
            is_basic[n + 1 + r] = true;
        }
        basis.push(n);
        is_basic[n] = true;

        Tableau {
            m,
            ncol,
            n,
            dim,
            a,
            rhs,
            z,
            basis,
            is_basic,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> T {
        self.a[r * self.ncol + c]
    }

    fn is_artificial(&self, c: usize) -> bool {
        c > self.n
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let ncol = self.ncol;
        let inv = T::one() / self.at(r, c);
        for v in &mut self.a[r * ncol..(r + 1) * ncol] {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        let (before, rest) = self.a.split_at_mut(r * ncol);
        let (prow, after) = rest.split_at_mut(ncol);
        for (k, row) in before
            .chunks_exact_mut(ncol)
            .chain(after.chunks_exact_mut(ncol))
            .enumerate()
        {
            let rr = if k < r { k } else { k + 1 };
            let f = row[c];
            if f != T::zero() {
                for (x, &pv) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pv;
                }
                let br = self.rhs[r];
                self.rhs[rr] -= f * br;
            }
        }
        let f = self.z[c];
        if f != T::zero() {
            for (x, &pv) in self.z.iter_mut().zip(prow.iter()) {
                *x -= f * pv;
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.basis[r] = c;
        self.is_basic[c] = true;
    }

    /// Drives the zero-level artificials out of the basis; rows with no usable
    /// pivot are linearly dependent and keep their artificial forever.
    fn expel_artificials(&mut self) -> usize {
        let mut pivots = 0;
        for r in 0..self.dim {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row = &self.a[r * self.ncol..r * self.ncol + self.n + 1];
            let scale = row.iter().fold(T::one(), |m, v| m.max(v.abs()));
            let best = row
                .iter()
                .enumerate()
                .filter(|(c, _)| !self.is_basic[*c])
                .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap());
            if let Some((c, v)) = best {
                if v.abs() > T::pivot_tol() * scale {
                    self.pivot(r, c);
                    pivots += 1;
                }
            }
        }
        pivots
    }

    fn run(mut self) -> (Vec<T>, usize) {
        let mut pivots = self.expel_artificials();
        let tol = T::pivot_tol();
        let max_iter = 10_000 + 50 * self.ncol;
        let mut degenerate_streak = 0usize;
        let bland_after = 20 * self.m + 20;

        for _ in 0..max_iter {
            let bland = degenerate_streak > bland_after;
            let mut enter = None;
            let mut best = -tol;
            for c in 0..=self.n {
                if self.is_basic[c] {
                    continue;
                }
                let zc = self.z[c];
                if zc < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = zc;
                }
            }
            let Some(c) = enter else { break };

            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.m {
                let v = self.at(r, c);
                if v > tol {
                    let ratio = self.rhs[r] / v;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio
                                || (ratio == lratio && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            // The primal is always feasible, so the dual cannot be unbounded;
            // a missing ratio row only arises from round-off.
            let Some((r, ratio)) = leave else { break };
            if ratio <= tol {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, c);
            pivots += 1;
        }

        let point = (0..self.dim).map(|r| self.z[self.n + 1 + r]).collect();
        (point, pivots)
    }
}
