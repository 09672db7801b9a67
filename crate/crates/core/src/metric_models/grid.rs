//! Grid-sampled metrics.
//!
//! File format (UTF-8 CSV):
//!
//! ```text
//! # ahgrid v1 n=<n> K=<radial> A=<angular>
//! r, u_1, …, u_n, g_11, g_12, …, g_1n, g_22, …, g_nn
//! ```
//!
//! `K` blocks of `A` rows each; every block shares one radius, radii strictly
//! increase between blocks and each block lists the same directions in the
//! same order. Metric entries are frame components (upper triangle,
//! row-major). Blank lines and further `#` lines are ignored.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_domain, ChartDescriptor, EndChart};
use crate::hyperbolic::{Dimension, PolarPoint};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    #[default]
    Cubic,
}

impl Interpolation {
    /// From a polynomial order, 1 or 3.
    pub fn from_order(order: u8) -> Result<Self> {
        match order {
            1 => Ok(Interpolation::Linear),
            3 => Ok(Interpolation::Cubic),
            _ => Err(Error::usage(format!("interpolation order must be 1 or 3, got {order}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct GridOptions {
    pub order: Interpolation,
    /// Raise the inner radius above the first sampled radius.
    pub r_min: Option<f64>,
}

/// A chart interpolating sampled frame components.
///
/// Radially: piecewise linear, or a cubic spline clamped with four-point end
/// slopes. Angularly: inverse-distance (Shepard) weighting with power 4 in
/// the chordal distance, exact at the nodes; a single direction means the
/// data are isotropic.
#[derive(Clone, Debug)]
pub struct GridChart {
    n: Dimension,
    radii: Vec<f64>,
    dirs: Vec<Vec<f64>>,
    order: Interpolation,
    /// `e` samples, layout `[(a·C + c)·K + k]` with `C = n(n+1)/2`.
    values: Vec<f64>,
    /// Spline second derivatives, same layout (cubic only).
    second: Vec<f64>,
    r_min: f64,
}

pub fn load_grid_metric(path: impl AsRef<Path>, options: GridOptions) -> Result<GridChart> {
    let text = std::fs::read_to_string(path)?;
    parse_grid_metric(&text, options)
}

fn ingest(line: usize, msg: impl Into<String>) -> Error {
    Error::Ingestion { line, msg: msg.into() }
}

fn parse_header(line: &str) -> Option<(usize, usize, usize)> {
    let mut it = line.trim().strip_prefix('#')?.split_whitespace();
    if it.next()? != "ahgrid" || it.next()? != "v1" {
        return None;
    }
    let mut n = None;
    let mut k = None;
    let mut a = None;
    for tok in it {
        let (key, val) = tok.split_once('=')?;
        let v: usize = val.parse().ok()?;
        match key {
            "n" => n = Some(v),
            "K" => k = Some(v),
            "A" => a = Some(v),
            _ => return None,
        }
    }
    Some((n?, k?, a?))
}

pub fn parse_grid_metric(text: &str, options: GridOptions) -> Result<GridChart> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| ingest(1, "empty file: missing `# ahgrid v1` header"))?;
    let (n, kr, na) = parse_header(header)
        .ok_or_else(|| ingest(hline, "malformed header, expected `# ahgrid v1 n=<n> K=<radial> A=<angular>`"))?;
    let dim = Dimension::new(n).map_err(|_| ingest(hline, format!("dimension must be at least 3, got {n}")))?;
    if kr < 2 || na < 1 {
        return Err(ingest(hline, format!("need K ≥ 2 radial blocks and A ≥ 1 directions, got K={kr} A={na}")));
    }
    if options.order == Interpolation::Cubic && kr < 4 {
        return Err(ingest(hline, "cubic interpolation needs K ≥ 4 radial blocks"));
    }
    let ncomp = n * (n + 1) / 2;
    let width = 1 + n + ncomp;
    let mut radii = Vec::with_capacity(kr);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(na);
    let mut values = vec![0.0; na * ncomp * kr];
    let mut row = 0usize;
    for (ln, raw) in lines {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if row >= kr * na {
            return Err(ingest(ln, format!("more than K·A = {} data rows", kr * na)));
        }
        let fields: Vec<f64> = l
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ingest(ln, format!("non-numeric field: {e}")))?;
        if fields.len() != width {
            return Err(ingest(ln, format!("expected {width} fields, found {}", fields.len())));
        }
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(ingest(ln, "non-finite value"));
        }
        let (k, a) = (row / na, row % na);
        let r = fields[0];
        if !(r > 0.0) {
            return Err(ingest(ln, format!("radius must be positive, got {r}")));
        }
        if a == 0 {
            if let Some(&prev) = radii.last() {
                if !(r > prev) {
                    return Err(ingest(ln, format!("radii must strictly increase between blocks ({r} after {prev})")));
                }
            }
            radii.push(r);
        } else if (r - radii[k]).abs() > 1e-12 * r {
            return Err(ingest(ln, format!("radius {r} differs from its block radius {}", radii[k])));
        }
        let u = &fields[1..=n];
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(ingest(ln, "zero direction vector"));
        }
        let u: Vec<f64> = u.iter().map(|x| x / norm).collect();
        if k == 0 {
            dirs.push(u);
        } else if dirs[a].iter().zip(&u).any(|(x, y)| (x - y).abs() > 1e-9) {
            return Err(ingest(ln, format!("direction differs from direction {} of the first block", a + 1)));
        }
        let mut g = DMatrix::zeros(n, n);
        let mut c = 0;
        for i in 0..n {
            for j in i..n {
                let v = fields[1 + n + c];
                g[(i, j)] = v;
                g[(j, i)] = v;
                values[(a * ncomp + c) * kr + k] = v - if i == j { 1.0 } else { 0.0 };
                c += 1;
            }
        }
        if g.cholesky().is_none() {
            return Err(ingest(ln, "metric sample is not positive definite"));
        }
        row += 1;
    }
    if row != kr * na {
        return Err(ingest(hline, format!("expected K·A = {} data rows, found {row}", kr * na)));
    }
    let mut second = Vec::new();
    if options.order == Interpolation::Cubic {
        second = vec![0.0; values.len()];
        for s in 0..na * ncomp {
            let ys = &values[s * kr..(s + 1) * kr];
            second[s * kr..(s + 1) * kr].copy_from_slice(&clamped_spline(&radii, ys));
        }
    }
    let r_min = match options.r_min {
        Some(r) if r < radii[0] => {
            return Err(Error::usage(format!("r_min = {r} is below the first sampled radius {}", radii[0])))
        }
        Some(r) => r,
        None => radii[0],
    };
    Ok(GridChart { n: dim, radii, dirs, order: options.order, values, second, r_min })
}

/// Derivative at `x[at]` of the cubic through four consecutive samples.
fn lagrange_slope(x: &[f64], y: &[f64], at: usize) -> f64 {
    let x0 = x[at];
    let mut s = 0.0;
    for j in 0..4 {
        let w = if j == at {
            (0..4).filter(|&m| m != j).map(|m| 1.0 / (x0 - x[m])).sum::<f64>()
        } else {
            let num: f64 = (0..4).filter(|&m| m != j && m != at).map(|m| x0 - x[m]).product();
            let den: f64 = (0..4).filter(|&m| m != j).map(|m| x[j] - x[m]).product();
            num / den
        };
        s += w * y[j];
    }
    s
}

/// Second derivatives of the clamped cubic spline through `(x, y)`.
fn clamped_spline(x: &[f64], y: &[f64]) -> Vec<f64> {
    let k = x.len();
    let s0 = lagrange_slope(&x[..4], &y[..4], 0);
    let s1 = lagrange_slope(&x[k - 4..], &y[k - 4..], 3);
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    // Tridiagonal system, Thomas algorithm.
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    diag[0] = 2.0 * h[0];
    sup[0] = h[0];
    rhs[0] = 6.0 * ((y[1] - y[0]) / h[0] - s0);
    for i in 1..k - 1 {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    sub[k - 1] = h[k - 2];
    diag[k - 1] = 2.0 * h[k - 2];
    rhs[k - 1] = 6.0 * (s1 - (y[k - 1] - y[k - 2]) / h[k - 2]);
    for i in 1..k {
        let m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    let mut out = vec![0.0; k];
    out[k - 1] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        out[i] = (rhs[i] - sup[i] * out[i + 1]) / diag[i];
    }
    out
}

impl GridChart {
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    fn radial_value(&self, series: usize, i: usize, r: f64) -> f64 {
        let kr = self.radii.len();
        let ys = &self.values[series * kr..(series + 1) * kr];
        let (x0, x1) = (self.radii[i], self.radii[i + 1]);
        let h = x1 - x0;
        match self.order {
            Interpolation::Linear => {
                let t = (r - x0) / h;
                ys[i] * (1.0 - t) + ys[i + 1] * t
            }
            Interpolation::Cubic => {
                let m = &self.second[series * kr..(series + 1) * kr];
                let (a, b) = (x1 - r, r - x0);
                m[i] * a.powi(3) / (6.0 * h)
                    + m[i + 1] * b.powi(3) / (6.0 * h)
                    + (ys[i] / h - m[i] * h / 6.0) * a
                    + (ys[i + 1] / h - m[i + 1] * h / 6.0) * b
            }
        }
    }

    fn node_matrix(&self, a: usize, i: usize, r: f64) -> DMatrix<f64> {
        let n = self.n.get();
        let ncomp = n * (n + 1) / 2;
        let mut e = DMatrix::zeros(n, n);
        let mut c = 0;
        for p in 0..n {
            for q in p..n {
                let v = self.radial_value(a * ncomp + c, i, r);
                e[(p, q)] = v;
                e[(q, p)] = v;
                c += 1;
            }
        }
        e
    }
}

impl EndChart for GridChart {
    fn dimension(&self) -> Dimension {
        self.n
    }

    fn r_min(&self) -> f64 {
        self.r_min
    }

    fn r_max(&self) -> f64 {
        *self.radii.last().expect("non-empty grid")
    }

    fn descriptor(&self) -> ChartDescriptor {
        ChartDescriptor::new("grid")
            .with("n", self.n.get())
            .with("K", self.radii.len())
            .with("A", self.dirs.len())
            .with("order", serde_json::to_value(self.order).expect("enum"))
            .with("r_min", self.r_min)
            .with("r_max", self.r_max())
    }

    fn perturbation(&self, p: &PolarPoint) -> Result<DMatrix<f64>> {
        check_domain(self, p)
            .map_err(|e| Error::domain(format!("grid extrapolation refused: {e}")))?;
        let r = p.r().clamp(self.radii[0], self.r_max());
        let i = self.radii.partition_point(|&x| x <= r).clamp(1, self.radii.len() - 1) - 1;
        if self.dirs.len() == 1 {
            return Ok(self.node_matrix(0, i, r));
        }
        let mut acc = DMatrix::zeros(self.n.get(), self.n.get());
        let mut wsum = 0.0;
        for (a, d) in self.dirs.iter().enumerate() {
            let dot: f64 = d.iter().zip(p.u()).map(|(x, y)| x * y).sum();
            let d2 = (2.0 * (1.0 - dot)).max(0.0);
            if d2 < 1e-24 {
                return Ok(self.node_matrix(a, i, r));
            }
            let w = 1.0 / (d2 * d2);
            acc += self.node_matrix(a, i, r) * w;
            wsum += w;
        }
        Ok(acc / wsum)
    }
}
