use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Dense { grid: Vec<f64>, y: DMatrix<f64> },
    Sparse { curves: Vec<SparseCurve> },
}

/// Noisy curve observations, either on a common grid or curve-specific times.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    pub ids: Vec<String>,
    pub layout: Layout,
    pub domain: (f64, f64),
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what} contains NaN or infinite values")));
    }
    Ok(())
}

impl FunctionalDataset {
    pub fn dense(ids: Vec<String>, grid: Vec<f64>, y: DMatrix<f64>) -> Result<Self> {
        if y.nrows() != ids.len() || y.ncols() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "dense data is {}x{} but there are {} ids and {} grid points",
                y.nrows(),
                y.ncols(),
                ids.len(),
                grid.len()
            )));
        }
        if ids.is_empty() || grid.len() < 2 {
            return Err(Error::InsufficientData("need at least one curve and two grid points".into()));
        }
        check_finite(grid.iter().copied(), "grid")?;
        check_finite(y.iter().copied(), "observations")?;
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("grid times must be strictly increasing".into()));
        }
        let domain = (grid[0], grid[grid.len() - 1]);
        Ok(Self { ids, layout: Layout::Dense { grid, y }, domain })
    }

    /// Curves are sorted by time; repeated times and curves with fewer than three
    /// observations are rejected.
    pub fn sparse(ids: Vec<String>, curves: Vec<SparseCurve>, domain: Option<(f64, f64)>) -> Result<Self> {
        if ids.len() != curves.len() || ids.is_empty() {
            return Err(Error::DimensionMismatch("ids and curves differ in length".into()));
        }
        let mut sorted = Vec::with_capacity(curves.len());
        for (id, c) in ids.iter().zip(curves) {
            if c.times.len() != c.values.len() {
                return Err(Error::DimensionMismatch(format!("curve {id}: times and values differ")));
            }
            if c.times.len() < 3 {
                return Err(Error::Validation(format!(
                    "curve {id} has {} observations; each curve needs n_i ≥ 3",
                    c.times.len()
                )));
            }
            check_finite(c.times.iter().chain(&c.values).copied(), "observations")?;
            let mut pairs: Vec<(f64, f64)> = c.times.iter().copied().zip(c.values.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Validation(format!("curve {id} has repeated observation times")));
            }
            sorted.push(SparseCurve {
                times: pairs.iter().map(|p| p.0).collect(),
                values: pairs.iter().map(|p| p.1).collect(),
            });
        }
        let lo = sorted.iter().map(|c| c.times[0]).fold(f64::INFINITY, f64::min);
        let hi = sorted.iter().map(|c| *c.times.last().unwrap()).fold(f64::NEG_INFINITY, f64::max);
        let domain = match domain {
            Some((a, b)) => {
                if lo < a || hi > b {
                    return Err(Error::Validation(format!("observation times outside domain [{a}, {b}]")));
                }
                (a, b)
            }
            None => (lo, hi),
        };
        if !(domain.1 > domain.0) {
            return Err(Error::Validation("domain must have positive length".into()));
        }
        Ok(Self { ids, layout: Layout::Sparse { curves: sorted }, domain })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.layout, Layout::Sparse { .. })
    }

    pub fn min_obs(&self) -> usize {
        match &self.layout {
            Layout::Dense { grid, .. } => grid.len(),
            Layout::Sparse { curves } => curves.iter().map(|c| c.times.len()).min().unwrap_or(0),
        }
    }

    pub fn curve(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        match &self.layout {
            Layout::Dense { grid, y } => (grid.clone(), y.row(i).iter().copied().collect()),
            Layout::Sparse { curves } => (curves[i].times.clone(), curves[i].values.clone()),
        }
    }

    pub fn total_obs(&self) -> usize {
        match &self.layout {
            Layout::Dense { grid, y } => grid.len() * y.nrows(),
            Layout::Sparse { curves } => curves.iter().map(|c| c.times.len()).sum(),
        }
    }

    /// Dense CSV (`t,<t_1>,...`) or long sparse CSV (`curve_id,t,y`), detected from the header.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse(format!("cannot parse number '{s}'")))?;
            if !v.is_finite() {
                return Err(Error::Validation(format!("non-finite value '{s}'")));
            }
            Ok(v)
        };
        if header.len() == 3 && header[0] == "curve_id" && header[1] == "t" && header[2] == "y" {
            let mut order: Vec<String> = Vec::new();
            let mut map: BTreeMap<String, SparseCurve> = BTreeMap::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
                if rec.len() != 3 {
                    return Err(Error::Parse("sparse rows need curve_id,t,y".into()));
                }
                let id = rec[0].to_string();
                let entry = map.entry(id.clone()).or_insert_with(|| {
                    order.push(id.clone());
                    SparseCurve { times: vec![], values: vec![] }
                });
                entry.times.push(parse(&rec[1])?);
                entry.values.push(parse(&rec[2])?);
            }
            let curves = order.iter().map(|id| map.remove(id).unwrap()).collect();
            return Self::sparse(order, curves, None);
        }
        if header.first().map(|s| s.as_str()) == Some("t") && header.len() >= 3 {
            let grid = header[1..].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
            let mut ids = Vec::new();
            let mut values = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
                if rec.len() != grid.len() + 1 {
                    return Err(Error::Parse(format!(
                        "row for curve '{}' has {} values, expected {}",
                        &rec[0],
                        rec.len().saturating_sub(1),
                        grid.len()
                    )));
                }
                ids.push(rec[0].to_string());
                for s in rec.iter().skip(1) {
                    values.push(parse(s)?);
                }
            }
            let y = DMatrix::from_row_slice(ids.len(), grid.len(), &values);
            return Self::dense(ids, grid, y);
        }
        Err(Error::Parse("unrecognized header: expected 't,<times>' or 'curve_id,t,y'".into()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        match &self.layout {
            Layout::Dense { grid, y } => {
                write!(out, "t")?;
                for t in grid {
                    write!(out, ",{}", fmt_f64(*t))?;
                }
                writeln!(out)?;
                for (i, id) in self.ids.iter().enumerate() {
                    write!(out, "{id}")?;
                    for j in 0..grid.len() {
                        write!(out, ",{}", fmt_f64(y[(i, j)]))?;
                    }
                    writeln!(out)?;
                }
            }
            Layout::Sparse { curves } => {
                writeln!(out, "curve_id,t,y")?;
                for (id, c) in self.ids.iter().zip(curves) {
                    for (t, v) in c.times.iter().zip(&c.values) {
                        writeln!(out, "{id},{},{}", fmt_f64(*t), fmt_f64(*v))?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
