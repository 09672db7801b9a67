//! Scalar curvature of end charts, the L¹ check on `r(R_g + n(n−1))` and the
//! pointwise hypothesis functionals `θ_ψ`, `θ̄_ψ`, `η_ψ`, `η̄_ψ`.
//!
//! Curvature is always reported through its excess `R + n(n−1)`, computed
//! from quantities that vanish with the perturbation, so that small
//! deviations from the model space survive rounding.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::Profile;
use crate::hyperbolic::{Dimension, PolarPoint};
use crate::metric_models::{fd_step, frame_to_coordinates, perturbation_derivatives, EndChart, SharedChart};
use crate::quadrature::{gauss_legendre, QuadSpec, SphereRule};
use crate::serde_ext::extended_real;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureMethod {
    /// One-dimensional reduction for `g = g_nn(r) f^n⊗f^n + (tangential identity)`.
    AnalyticRadial,
    /// Coordinate Christoffel symbols from central differences.
    FiniteDifference,
    /// Analytic when the chart is radially warped, finite differences otherwise.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub r: f64,
    pub u: Vec<f64>,
    pub scalar_curvature: f64,
    /// `R + n(n−1)`
    pub excess: f64,
    pub method: CurvatureMethod,
    pub est_error: f64,
}

pub fn scalar_curvature(chart: &dyn EndChart, p: &PolarPoint, method: CurvatureMethod) -> Result<CurvatureSample> {
    let n = chart.dimension().as_f64();
    let method = match method {
        CurvatureMethod::Auto if chart.is_radially_warped() => CurvatureMethod::AnalyticRadial,
        CurvatureMethod::Auto => CurvatureMethod::FiniteDifference,
        m => m,
    };
    let (excess, est_error) = match method {
        CurvatureMethod::AnalyticRadial => radial_excess(chart, p)?,
        _ => {
            let h = fd_step(p.r());
            let fine = fd_excess(chart, p, h)?;
            let coarse = fd_excess(chart, p, 2.0 * h)?;
            (fine, (fine - coarse).abs() / 3.0)
        }
    };
    if !excess.is_finite() {
        return Err(Error::Data(format!("non-finite scalar curvature at r = {}", p.r())));
    }
    Ok(CurvatureSample {
        r: p.r(),
        u: p.u().to_vec(),
        scalar_curvature: excess - n * (n - 1.0),
        excess,
        method,
        est_error,
    })
}

/// Smallest radius whose finite-difference curvature stencil stays in `r ≥ r_min`.
/// The coarse nested stencil reaches `4h` below the sample radius.
pub fn stencil_safe_radius(r_min: f64) -> f64 {
    let reach = 4.0 * 1.01;
    let r = r_min + reach * fd_step(r_min);
    if r >= 1.0 {
        r_min / (1.0 - reach * fd_step(1.0))
    } else {
        r
    }
}

/// For `g = ds² + r(s)² g_𝕊` with `ds = √(g_nn/(1+r²)) dr`,
/// `R + n(n−1) = (n−1) r^{1−n} (r^{n−2} z)'` where `z = (1+r²) e/(1+e)`.
fn radial_excess(chart: &dyn EndChart, p: &PolarPoint) -> Result<(f64, f64)> {
    if !chart.is_radially_warped() {
        return Err(Error::usage("analytic-radial curvature needs a radially warped chart"));
    }
    let n = chart.dimension().get();
    let nf = n as f64;
    let last = n - 1;
    let e = chart.perturbation(p)?[(last, last)];
    let (de, _) = perturbation_derivatives(chart, p)?;
    let r = p.r();
    let er = de[last][(last, last)] / p.lapse();
    let q = 1.0 + r * r;
    let one_e = 1.0 + e;
    if !(one_e > 0.0) {
        return Err(Error::Data(format!("g_nn is not positive at r = {r}")));
    }
    let z = q * e / one_e;
    let dz = 2.0 * r * e / one_e + q * er / (one_e * one_e);
    let excess = (nf - 1.0) * (dz / r + (nf - 2.0) * z / (r * r));
    let scale = (nf - 1.0) * (dz.abs() / r + (nf - 2.0) * z.abs() / (r * r));
    Ok((excess, 16.0 * f64::EPSILON * scale))
}

/// Coordinate perturbation `E = G − b` at the chart point `x`.
fn coordinate_perturbation(chart: &dyn EndChart, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let p = PolarPoint::from_cartesian(x.as_slice())?;
    if p.frame_pole_distance() < 1e-8 {
        return Err(Error::numeric("curvature stencil too close to the frame pole"));
    }
    let e = chart.perturbation(&p)?;
    Ok(frame_to_coordinates(&p, &e))
}

/// `b` Christoffel symbols `Γᵐ_ij = −x_m b_ij`, indexed `[m][(i, j)]`.
fn background_christoffel(x: &DVector<f64>) -> Vec<DMatrix<f64>> {
    let b = crate::hyperbolic::background_metric(x);
    (0..x.len()).map(|m| &b * (-x[m])).collect()
}

type DifferenceTensor = (Vec<DMatrix<f64>>, DMatrix<f64>, DMatrix<f64>);

/// Difference tensor `D^k_ij = Γ(G)^k_ij − Γ(b)^k_ij` at `x`, indexed `[k][(i, j)]`,
/// together with `E` and `G⁻¹` at `x`.
fn difference_tensor(chart: &dyn EndChart, x: &DVector<f64>, h: f64) -> Result<DifferenceTensor> {
    let n = x.len();
    let e0 = coordinate_perturbation(chart, x)?;
    let mut de = Vec::with_capacity(n);
    for m in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[m] += h;
        xm[m] -= h;
        de.push((coordinate_perturbation(chart, &xp)? - coordinate_perturbation(chart, &xm)?) / (2.0 * h));
    }
    let gam = background_christoffel(x);
    // ∇_m E_jl
    let nab = |m: usize, j: usize, l: usize| -> f64 {
        let mut v = de[m][(j, l)];
        for q in 0..n {
            v -= gam[q][(m, j)] * e0[(q, l)] + gam[q][(m, l)] * e0[(j, q)];
        }
        v
    };
    let g = crate::hyperbolic::background_metric(x) + &e0;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::Data("singular metric sample in curvature stencil".into()))?;
    let mut lowered = vec![DMatrix::zeros(n, n); n]; // [l][(i, j)]
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                lowered[l][(i, j)] = 0.5 * (nab(i, j, l) + nab(j, i, l) - nab(l, i, j));
            }
        }
    }
    let mut d = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for l in 0..n {
            let c = ginv[(k, l)];
            if c != 0.0 {
                d[k] += &lowered[l] * c;
            }
        }
    }
    Ok((d, e0, ginv))
}

fn fd_excess(chart: &dyn EndChart, p: &PolarPoint, h: f64) -> Result<f64> {
    let n = p.dim();
    let x = p.cartesian();
    let (d, e0, ginv) = difference_tensor(chart, &x, h)?;
    let mut dd = Vec::with_capacity(n); // [m][k][(i, j)] = ∂_m D^k_ij
    for m in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[m] += h;
        xm[m] -= h;
        let (dp, _, _) = difference_tensor(chart, &xp, h)?;
        let (dm, _, _) = difference_tensor(chart, &xm, h)?;
        dd.push((0..n).map(|k| (&dp[k] - &dm[k]) / (2.0 * h)).collect::<Vec<_>>());
    }
    let gam = background_christoffel(&x);
    // ∇_m D^k_ij
    let cov = |m: usize, k: usize, i: usize, j: usize| -> f64 {
        let mut v = dd[m][k][(i, j)];
        for q in 0..n {
            v += gam[k][(m, q)] * d[q][(i, j)] - gam[q][(m, i)] * d[k][(q, j)] - gam[q][(m, j)] * d[k][(i, q)];
        }
        v
    };
    let nf = n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = ginv[(i, j)];
            let mut ric = 0.0;
            for k in 0..n {
                ric += cov(k, k, i, j) - cov(j, k, i, k);
                for l in 0..n {
                    ric += d[k][(k, l)] * d[l][(i, j)] - d[k][(j, l)] * d[l][(i, k)];
                }
            }
            total += w * ((nf - 1.0) * e0[(i, j)] + ric);
        }
    }
    Ok(total)
}

/// Settings of [`l1_mass_density_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Spec {
    /// Geometric radial panels.
    pub panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
    pub sphere: QuadSpec,
    /// Required excess of the tail exponent over 1.
    pub margin: f64,
    pub method: CurvatureMethod,
}

impl L1Spec {
    pub fn default_for(n: usize) -> Self {
        let sphere = if n == 3 { QuadSpec { polar: 8, azimuth: 16 } } else { QuadSpec { polar: 4, azimuth: 8 } };
        L1Spec { panels: 16, nodes_per_panel: 4, sphere, margin: 0.1, method: CurvatureMethod::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellValue {
    pub r: f64,
    /// `∫_{S_r} r|R + n(n−1)| dvol_g / dr`
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L1Report {
    pub r_lo: f64,
    pub r_hi: f64,
    /// `∫ r|R_g + n(n−1)| dvol_g` over `[r_lo, r_hi] × 𝕊ⁿ⁻¹`
    pub integral: f64,
    /// Fitted `q` in shell ≈ `c·r^{−q}`; the tail is integrable when `q > 1`.
    #[serde(serialize_with = "extended_real")]
    pub tail_exponent: f64,
    pub margin: f64,
    pub shells: Vec<ShellValue>,
    pub pass: bool,
}

/// Integrates `r|R_g + n(n−1)|` against the volume of `g` over the chart
/// exterior up to `r_max` and fits the decay of the shell integrals.
///
/// Excess values below the method's own error estimate are treated as zero.
pub fn l1_mass_density_check(chart: &dyn EndChart, r_max: f64, spec: &L1Spec) -> Result<L1Report> {
    let n = chart.dimension().get();
    let r_min = chart.r_min();
    if !(r_max > 2.0 * r_min) {
        return Err(Error::usage(format!("r_max = {r_max} must exceed 2·r_min = {}", 2.0 * r_min)));
    }
    if r_max > chart.r_max() {
        return Err(Error::domain(format!("r_max = {r_max} beyond the chart data ({})", chart.r_max())));
    }
    if spec.panels == 0 || spec.nodes_per_panel == 0 {
        return Err(Error::usage("L¹ check needs at least one panel and one node per panel"));
    }
    spec.sphere.validate()?;
    let rule = SphereRule::new(n, spec.sphere)?;
    let margin_room = 1e-3;
    let r_lo = r_min * (1.0 + margin_room);
    let r_hi = if chart.r_max().is_finite() { r_max * (1.0 - margin_room) } else { r_max };
    let (gx, gw) = gauss_legendre(spec.nodes_per_panel);
    let ratio = (r_hi / r_lo).powf(1.0 / spec.panels as f64);
    let mut radial: Vec<(f64, f64)> = Vec::new();
    for k in 0..spec.panels {
        let a = r_lo * ratio.powi(k as i32);
        let b = a * ratio;
        for (x, w) in gx.iter().zip(&gw) {
            radial.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
        }
    }
    let points: Vec<(usize, usize)> =
        (0..radial.len()).flat_map(|i| (0..rule.len()).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = points
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let p = PolarPoint::new(radial[i].0, rule.nodes[j].clone())?;
            let s = scalar_curvature(chart, &p, spec.method)?;
            let floor = (3.0 * s.est_error).max(1e-12 * (n * (n - 1)) as f64);
            if s.excess.abs() <= floor {
                return Ok(0.0);
            }
            let det = chart.metric(&p)?.determinant();
            if !(det > 0.0) {
                return Err(Error::Data(format!("degenerate metric at r = {}", p.r())));
            }
            Ok(s.excess.abs() * det.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut shells = Vec::with_capacity(radial.len());
    let mut integral = 0.0;
    for (i, &(r, w)) in radial.iter().enumerate() {
        let sphere = rule.sum(&vals[i * rule.len()..(i + 1) * rule.len()]);
        let value = r * sphere * r.powi(n as i32 - 1) / r.hypot(1.0);
        integral += w * value;
        shells.push(ShellValue { r, value });
    }
    let top = &shells[shells.len() / 2..];
    let tail_exponent = if top.iter().all(|s| s.value == 0.0) || top.last().is_some_and(|s| s.value == 0.0) {
        f64::INFINITY
    } else {
        let pos: Vec<&ShellValue> = top.iter().filter(|s| s.value > 0.0).collect();
        if pos.len() < 2 {
            f64::INFINITY
        } else {
            let xs: Vec<f64> = pos.iter().map(|s| s.r.ln()).collect();
            let ys: Vec<f64> = pos.iter().map(|s| s.value.ln()).collect();
            -crate::metric_models::linear_fit(&xs, &ys).0
        }
    };
    let pass = tail_exponent - spec.margin > 1.0;
    Ok(L1Report { r_lo, r_hi, integral, tail_exponent, margin: spec.margin, shells, pass })
}

/// `θ_ψ = (R + n(n−1))/4 + ψ² − |dψ| + nψ`
pub fn theta_psi(r_g: f64, psi: f64, dpsi_norm: f64, n: Dimension) -> f64 {
    let nf = n.as_f64();
    (r_g + nf * (nf - 1.0)) / 4.0 + psi * psi - dpsi_norm + nf * psi
}

/// `θ̄_ψ = n/(n−1)·(R + n(n−1))/4 + ψ² − |dψ| + nψ`
pub fn theta_bar_psi(r_g: f64, psi: f64, dpsi_norm: f64, n: Dimension) -> f64 {
    let nf = n.as_f64();
    nf / (nf - 1.0) * (r_g + nf * (nf - 1.0)) / 4.0 + psi * psi - dpsi_norm + nf * psi
}

/// `η_ψ = H/2 + (n−1)/2 + ψ`
pub fn eta_psi(h: f64, psi: f64, n: Dimension) -> f64 {
    h / 2.0 + (n.as_f64() - 1.0) / 2.0 + psi
}

/// `η̄_ψ = n/(2(n−1))·H + n/2 + ψ`
pub fn eta_bar_psi(h: f64, psi: f64, n: Dimension) -> f64 {
    let nf = n.as_f64();
    nf / (2.0 * (nf - 1.0)) * h + nf / 2.0 + psi
}

/// Source of scalar-curvature values at sample points.
pub trait CurvatureField: Sync {
    fn scalar_curvature_at(&self, p: &PolarPoint) -> Result<f64>;
}

/// Curvature computed from a chart.
///
/// Finite-difference samples closer to `r_min` than the stencil reach are
/// evaluated at [`stencil_safe_radius`] on the same ray.
pub struct ChartCurvature<'a> {
    pub chart: &'a dyn EndChart,
    pub method: CurvatureMethod,
}

impl CurvatureField for ChartCurvature<'_> {
    fn scalar_curvature_at(&self, p: &PolarPoint) -> Result<f64> {
        let fd = match self.method {
            CurvatureMethod::FiniteDifference => true,
            CurvatureMethod::Auto => !self.chart.is_radially_warped(),
            CurvatureMethod::AnalyticRadial => false,
        };
        let r_safe = stencil_safe_radius(self.chart.r_min());
        if fd && p.r() < r_safe {
            let q = PolarPoint::new(r_safe, p.u().to_vec())?;
            return Ok(scalar_curvature(self.chart, &q, self.method)?.scalar_curvature);
        }
        Ok(scalar_curvature(self.chart, p, self.method)?.scalar_curvature)
    }
}

/// Prescribed curvature: `neck` on the shell `r_lo ≤ r ≤ r_hi`, `base`
/// elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCurvature {
    pub base: f64,
    pub neck: Option<(f64, f64, f64)>,
}

impl CurvatureField for PiecewiseCurvature {
    fn scalar_curvature_at(&self, p: &PolarPoint) -> Result<f64> {
        let r = p.r();
        Ok(match self.neck {
            Some((value, lo, hi)) if r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12) => value,
            _ => self.base,
        })
    }
}

/// `(ψ, |dψ|)` at sample points.
pub trait PsiField: Sync {
    fn psi_at(&self, p: &PolarPoint) -> Result<(f64, f64)>;
}

/// `ψ ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroPsi;

impl PsiField for ZeroPsi {
    fn psi_at(&self, _p: &PolarPoint) -> Result<(f64, f64)> {
        Ok((0.0, 0.0))
    }
}

/// A 1-D profile composed with `x(r) = t_end − (asinh r − asinh r_b)`, the
/// signed `b`-distance to the boundary sphere `r = r_b` measured inward from
/// the profile's last node.
///
/// Beyond the profile's first node the field continues with the first value.
/// `|dψ|` is bounded by `|profile′|·max(1, |dx|_g)`.
#[derive(Clone, Debug)]
pub struct RadialProfilePsi {
    pub profile: Profile,
    pub r_boundary: f64,
    pub chart: Option<SharedChart>,
}

impl RadialProfilePsi {
    /// Profile variable at radius `r`.
    pub fn profile_variable(&self, r: f64) -> f64 {
        self.profile.t_end() - (r.asinh() - self.r_boundary.asinh())
    }

    /// Radius at which the profile variable equals `t`.
    pub fn radius_for(&self, t: f64) -> f64 {
        (self.r_boundary.asinh() + self.profile.t_end() - t).sinh()
    }
}

impl PsiField for RadialProfilePsi {
    fn psi_at(&self, p: &PolarPoint) -> Result<(f64, f64)> {
        let t = self.profile_variable(p.r());
        let (v, d) = self.profile.sample_at(t)?;
        let dx = match &self.chart {
            Some(c) => {
                let g = c.metric(p)?;
                let inv = g.try_inverse().ok_or_else(|| Error::Data("singular metric sample".into()))?;
                let last = p.dim() - 1;
                inv[(last, last)].max(0.0).sqrt()
            }
            None => 1.0,
        };
        Ok((v, d * dx.max(1.0)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub value: f64,
    pub index: usize,
    pub r: f64,
    pub u: Vec<f64>,
    pub psi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    /// `min ≥ −tolerance`
    pub nonnegative: bool,
    /// `min > tolerance`
    pub strict: bool,
}

impl Verdict {
    fn of(w: Option<&Witness>, tol: f64) -> Self {
        match w {
            Some(w) => Verdict { nonnegative: w.value >= -tol, strict: w.value > tol },
            None => Verdict { nonnegative: true, strict: true },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisVerdicts {
    pub theta_bar: Verdict,
    pub eta_bar: Verdict,
    pub theta: Verdict,
    pub eta: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub n: usize,
    pub tolerance: f64,
    pub interior_count: usize,
    pub boundary_count: usize,
    pub min_theta_bar: Option<Witness>,
    pub min_theta: Option<Witness>,
    pub min_eta_bar: Option<Witness>,
    pub min_eta: Option<Witness>,
    pub verdicts: HypothesisVerdicts,
    /// `θ̄_ψ ≥ 0` on the interior and `η̄_ψ ≥ 0` on the boundary, within tolerance.
    pub pass: bool,
}

/// Default verdict tolerance.
pub const HYPOTHESIS_TOLERANCE: f64 = 1e-8;

/// A boundary sample: point and mean curvature `H_g` there.
#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    pub point: PolarPoint,
    pub mean_curvature: f64,
}

fn fold_min(values: &[(f64, f64)], pts: &[&PolarPoint]) -> Option<Witness> {
    let mut best: Option<Witness> = None;
    for (i, (v, psi)) in values.iter().enumerate() {
        if best.as_ref().is_none_or(|b| *v < b.value) {
            best = Some(Witness { value: *v, index: i, r: pts[i].r(), u: pts[i].u().to_vec(), psi: *psi });
        }
    }
    best
}

/// Evaluates `θ_ψ`, `θ̄_ψ` on the interior samples and `η_ψ`, `η̄_ψ` on the
/// boundary samples, recording the minimizing sample of each.
pub fn hypothesis_report(
    n: Dimension,
    curvature: &dyn CurvatureField,
    psi: &dyn PsiField,
    interior: &[PolarPoint],
    boundary: &[BoundaryPoint],
    tolerance: f64,
) -> Result<HypothesisReport> {
    let inner: Vec<(f64, f64, f64)> = interior
        .par_iter()
        .map(|p| -> Result<(f64, f64, f64)> {
            let r = curvature.scalar_curvature_at(p)?;
            let (v, d) = psi.psi_at(p)?;
            Ok((theta_bar_psi(r, v, d, n), theta_psi(r, v, d, n), v))
        })
        .collect::<Result<_>>()?;
    let outer: Vec<(f64, f64, f64)> = boundary
        .par_iter()
        .map(|b| -> Result<(f64, f64, f64)> {
            let (v, _) = psi.psi_at(&b.point)?;
            Ok((eta_bar_psi(b.mean_curvature, v, n), eta_psi(b.mean_curvature, v, n), v))
        })
        .collect::<Result<_>>()?;
    let ipts: Vec<&PolarPoint> = interior.iter().collect();
    let bpts: Vec<&PolarPoint> = boundary.iter().map(|b| &b.point).collect();
    let tb: Vec<(f64, f64)> = inner.iter().map(|x| (x.0, x.2)).collect();
    let th: Vec<(f64, f64)> = inner.iter().map(|x| (x.1, x.2)).collect();
    let eb: Vec<(f64, f64)> = outer.iter().map(|x| (x.0, x.2)).collect();
    let et: Vec<(f64, f64)> = outer.iter().map(|x| (x.1, x.2)).collect();
    let min_theta_bar = fold_min(&tb, &ipts);
    let min_theta = fold_min(&th, &ipts);
    let min_eta_bar = fold_min(&eb, &bpts);
    let min_eta = fold_min(&et, &bpts);
    let verdicts = HypothesisVerdicts {
        theta_bar: Verdict::of(min_theta_bar.as_ref(), tolerance),
        eta_bar: Verdict::of(min_eta_bar.as_ref(), tolerance),
        theta: Verdict::of(min_theta.as_ref(), tolerance),
        eta: Verdict::of(min_eta.as_ref(), tolerance),
    };
    let pass = verdicts.theta_bar.nonnegative && verdicts.eta_bar.nonnegative;
    Ok(HypothesisReport {
        n: n.get(),
        tolerance,
        interior_count: interior.len(),
        boundary_count: boundary.len(),
        min_theta_bar,
        min_theta,
        min_eta_bar,
        min_eta,
        verdicts,
        pass,
    })
}
