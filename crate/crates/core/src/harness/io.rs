//! CSV layouts.
//!
//! Input: a header row naming `y`, `v`, `z1..`, `w1..`; with
//! [`Normalization::LastUnit`] the design is read from `x0..xd` instead of
//! `v` and `z*`. An optional grouping column splits the rows into independent
//! samples.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::EvalReport;
use crate::effects::EffectBound;
use crate::error::{Error, Result};
use crate::mixsolver::DensityGrid;
use crate::model::{normalize, Dataset, ModelFit, Normalization};

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub normalize: Option<Normalization>,
    pub group_col: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Group {
    /// Value of the grouping column; `None` without grouping.
    pub name: Option<String>,
    pub data: Dataset<f64>,
}

fn parse_y(s: &str, row: usize) -> Result<bool> {
    match s.trim() {
        "1" | "true" | "TRUE" | "True" => Ok(true),
        "0" | "false" | "FALSE" | "False" => Ok(false),
        other => Err(Error::invalid(format!("row {row}: response {other:?} is not binary"))),
    }
}

fn parse_f(s: &str, row: usize, col: &str) -> Result<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("row {row}, column {col}: {s:?} is not a number")))?;
    if !x.is_finite() {
        return Err(Error::NonFinite("csv input"));
    }
    Ok(x)
}

/// Indices of columns `prefix1, prefix2, ...` (or `prefix0, ...`) in numeric order.
fn numbered(headers: &csv::StringRecord, prefix: &str) -> Vec<usize> {
    let mut cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let rest = h.trim().strip_prefix(prefix)?;
            rest.parse::<usize>().ok().map(|k| (k, i))
        })
        .collect();
    cols.sort();
    cols.into_iter().map(|(_, i)| i).collect()
}

fn find(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

pub fn read_dataset<R: Read>(reader: R, opts: &CsvOptions) -> Result<Vec<Group>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let y_col = find(&headers, "y").ok_or_else(|| Error::invalid("missing column y"))?;
    let w_cols = numbered(&headers, "w");
    let group_col = match &opts.group_col {
        Some(g) => Some(find(&headers, g).ok_or_else(|| Error::invalid(format!("missing group column {g}")))?),
        None => None,
    };
    let last_unit = opts.normalize == Some(Normalization::LastUnit);
    let x_cols = numbered(&headers, "x");
    let z_cols = numbered(&headers, "z");
    let v_col = find(&headers, "v");
    if last_unit && x_cols.len() < 2 {
        return Err(Error::invalid("normalization `last` needs columns x0..xd"));
    }
    if !last_unit && v_col.is_none() {
        return Err(Error::invalid("missing column v"));
    }

    struct Raw {
        y: Vec<bool>,
        x: Vec<Vec<f64>>,
        w: Vec<Vec<f64>>,
    }
    let mut groups: BTreeMap<Option<String>, Raw> = BTreeMap::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let y = parse_y(&rec[y_col], row)?;
        let cols: Vec<usize> = if last_unit {
            x_cols.clone()
        } else {
            std::iter::once(v_col.unwrap()).chain(z_cols.iter().copied()).collect()
        };
        let x = cols.iter().map(|&c| parse_f(&rec[c], row, &headers[c])).collect::<Result<Vec<_>>>()?;
        let w = w_cols.iter().map(|&c| parse_f(&rec[c], row, &headers[c])).collect::<Result<Vec<_>>>()?;
        let key = group_col.map(|g| rec[g].to_string());
        let g = groups.entry(key).or_insert_with(|| Raw { y: vec![], x: vec![], w: vec![] });
        g.y.push(y);
        g.x.push(x);
        g.w.push(w);
    }
    if groups.is_empty() {
        return Err(Error::invalid("no data rows"));
    }

    groups
        .into_iter()
        .map(|(name, raw)| {
            let data = if last_unit {
                let base = normalize(&raw.x, &raw.y, Normalization::LastUnit)?;
                Dataset::new(base.y, base.z, base.v, raw.w)?
            } else {
                let scale = match opts.normalize {
                    Some(Normalization::Price { scale }) => scale,
                    _ => 1.0,
                };
                let base = normalize(&raw.x, &raw.y, Normalization::Price { scale })?;
                Dataset::new(base.y, base.z, base.v, raw.w)?
            };
            Ok(Group { name, data })
        })
        .collect()
}

pub fn write_dataset<W: Write>(w: W, data: &Dataset<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["y".to_string(), "v".to_string()];
    header.extend((1..data.dim()).map(|k| format!("z{k}")));
    header.extend((1..=data.p()).map(|k| format!("w{k}")));
    out.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec = vec![u8::from(data.y[i]).to_string(), data.v[i].to_string()];
        rec.extend(data.z[i].iter().map(f64::to_string));
        rec.extend(data.w[i].iter().map(f64::to_string));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Interior points and masses of cells with mass at least `threshold`.
/// The coordinates are an arbitrary point of each cell.
pub fn write_masses<W: Write>(w: W, fit: &ModelFit<f64>, threshold: f64) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=fit.dim()).map(|k| format!("eta{k}")).collect();
    header.extend(["mass".into(), "eps".into(), "count".into()]);
    out.write_record(&header)?;
    for c in fit.significant(threshold) {
        let mut rec: Vec<String> = c.interior.iter().map(f64::to_string).collect();
        rec.extend([c.mass.to_string(), c.eps.to_string(), c.count.to_string()]);
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_density<W: Write>(w: W, grid: &DensityGrid<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=grid.axes.len()).map(|k| format!("eta{k}")).collect();
    header.push("density".into());
    out.write_record(&header)?;
    for (k, v) in grid.values.iter().enumerate() {
        let mut rec: Vec<String> = grid.node(k).iter().map(f64::to_string).collect();
        rec.push(v.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_effects<W: Write>(w: W, rows: &[(EffectBound<f64>, Option<String>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["delta", "lower", "upper", "kind", "subgroup"])?;
    for (b, g) in rows {
        out.write_record([
            b.delta.to_string(),
            b.lower.to_string(),
            b.upper.to_string(),
            b.kind.to_string(),
            g.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_reports<W: Write>(w: W, reports: &[EvalReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rep", "seed", "estimator", "mae", "rmse"])?;
    for r in reports {
        for s in &r.scores {
            out.write_record([
                r.rep.to_string(),
                r.seed.to_string(),
                s.estimator.name().to_string(),
                s.mae.to_string(),
                s.rmse.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, S: serde::Serialize>(w: W, value: &S) -> Result<()> {
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

pub fn read_fit<R: Read>(r: R) -> Result<ModelFit<f64>> {
    Ok(serde_json::from_reader(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_dataset() {
        let data = Dataset::new(
            vec![true, false, true],
            vec![vec![0.5], vec![-1.0], vec![2.0]],
            vec![0.1, 0.2, -0.3],
            vec![vec![1.0], vec![0.0], vec![3.5]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let back = read_dataset(buf.as_slice(), &CsvOptions::default()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].data, data);
    }

    #[test]
    fn groups_and_price_scale() {
        let csv = "y,v,z1,car\n1,250,3,0\n0,-40,1.5,1\n1,100,2,0\n0,20,1,1\n";
        let opts = CsvOptions {
            normalize: Some(Normalization::Price { scale: 100.0 }),
            group_col: Some("car".into()),
        };
        let g = read_dataset(csv.as_bytes(), &opts).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].name.as_deref(), Some("0"));
        assert_eq!(g[0].data.v, vec![2.5, 1.0]);
        assert_eq!(g[1].data.z, vec![vec![1.5], vec![1.0]]);
    }

    #[test]
    fn last_unit_columns() {
        let csv = "y,x0,x1,x2\n1,2,1,-4\n0,-1,0.5,1\n";
        let opts = CsvOptions {
            normalize: Some(Normalization::LastUnit),
            group_col: None,
        };
        let g = read_dataset(csv.as_bytes(), &opts).unwrap();
        assert_eq!(g[0].data.v, vec![2.0, 1.0]);
        assert_eq!(g[0].data.z, vec![vec![0.5], vec![-0.5]]);
        assert_eq!(g[0].data.y, vec![true, true]);
    }

    #[test]
    fn bad_inputs() {
        assert!(read_dataset("y,z1\n1,2\n".as_bytes(), &CsvOptions::default()).is_err());
        assert!(read_dataset("y,v\n2,1\n".as_bytes(), &CsvOptions::default()).is_err());
        assert!(read_dataset("y,v\n1,abc\n".as_bytes(), &CsvOptions::default()).is_err());
        assert!(read_dataset("y,v\n".as_bytes(), &CsvOptions::default()).is_err());
    }
}
