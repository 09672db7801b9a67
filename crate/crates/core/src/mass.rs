//! The charge integrand `𝕌(V, e)`, its sphere integrals, extrapolation in
//! the radius and the assembled mass vector.
//!
//! With `e = g − b` in the frame and `V` a static potential,
//! `𝕌(V,e) = V(div_b e − d tr_b e) − i_{∇V} e + tr_b e · dV`, integrated
//! against the outward normal `f_{n−1}` over coordinate spheres with the
//! measure `r^{n−1} dσ`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hyperbolic::{frame_connection_b, CausalClass, Dimension, MassVector, PolarPoint, StaticPotential};
use crate::metric_models::{
    equivalence_bounds, fd_perturbation_derivatives, fd_step, perturbation_derivatives, validate_decay,
    ChartDescriptor, DecayReport, DecaySpec, DerivativeSource, EndChart, EquivalenceBounds,
};
use crate::quadrature::{QuadSpec, SphereRule};
use crate::serde_ext::{extended_real, extended_real_vec};
use crate::{Error, Result};

/// `e` and its frame derivatives at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationTensor {
    pub e: DMatrix<f64>,
    /// `de[k][(i, j)] = f_k(e_ij)`
    pub de: Vec<DMatrix<f64>>,
    pub source: DerivativeSource,
}

pub fn perturbation(chart: &dyn EndChart, p: &PolarPoint) -> Result<PerturbationTensor> {
    let e = chart.perturbation(p)?;
    let (de, source) = perturbation_derivatives(chart, p)?;
    Ok(PerturbationTensor { e, de, source })
}

/// `𝕌(V, e)(f_{n−1})` from precomputed `e`, `f_k(e)`.
pub fn charge_integrand_at(t: &PerturbationTensor, v: &StaticPotential, p: &PolarPoint) -> f64 {
    let n = p.dim();
    let nn = n - 1;
    let (e, de) = (&t.e, &t.de);
    let gam = frame_connection_b(p);
    let mut div = 0.0;
    for i in 0..n {
        div += de[i][(i, nn)];
        for k in 0..n {
            div -= gam.get(i, i, k) * e[(k, nn)] + gam.get(i, nn, k) * e[(i, k)];
        }
    }
    let dtr: f64 = (0..n).map(|i| de[nn][(i, i)]).sum();
    let dv = v.grad(p);
    let contraction: f64 = (0..n).map(|i| dv[i] * e[(i, nn)]).sum();
    v.eval(p) * (div - dtr) - contraction + e.trace() * dv[nn]
}

pub fn charge_integrand(chart: &dyn EndChart, v: &StaticPotential, p: &PolarPoint) -> Result<f64> {
    let t = perturbation(chart, p)?;
    Ok(charge_integrand_at(&t, v, p))
}

/// One sphere integral `∮_{S_r} 𝕌(V,e)(ν) dS`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChargeSample {
    pub r: f64,
    /// Coefficients of `V` in the basis `V₍₀₎, …, V₍ₙ₎`.
    pub potential: Vec<f64>,
    pub value: f64,
    /// `|I_full − I_half|`, plus the finite-difference estimate when derivatives
    /// were not analytic.
    pub quad_error: f64,
    pub fd_error: f64,
    pub nodes: usize,
    pub jittered: bool,
    pub derivative_source: DerivativeSource,
}

fn integrate_rule(
    chart: &dyn EndChart,
    potentials: &[StaticPotential],
    r: f64,
    rule: &SphereRule,
    fd_h: Option<f64>,
) -> Result<(Vec<f64>, DerivativeSource)> {
    let per_node: Vec<(Vec<f64>, DerivativeSource)> = rule
        .nodes
        .par_iter()
        .map(|u| {
            let p = PolarPoint::new(r, u.clone())?;
            let t = match fd_h {
                None => perturbation(chart, &p)?,
                Some(h) => PerturbationTensor {
                    e: chart.perturbation(&p)?,
                    de: fd_perturbation_derivatives(chart, &p, h)?,
                    source: DerivativeSource::FiniteDifference,
                },
            };
            let vals = potentials.iter().map(|v| charge_integrand_at(&t, v, &p)).collect();
            Ok((vals, t.source))
        })
        .collect::<Result<_>>()?;
    let source = if per_node.iter().any(|(_, s)| *s == DerivativeSource::FiniteDifference) {
        DerivativeSource::FiniteDifference
    } else {
        DerivativeSource::Analytic
    };
    let scale = r.powi(p_dim(rule) as i32 - 1);
    let sums = (0..potentials.len())
        .map(|j| {
            let mut s = 0.0;
            for (w, (vals, _)) in rule.weights.iter().zip(&per_node) {
                s += w * vals[j];
            }
            s * scale
        })
        .collect();
    Ok((sums, source))
}

fn p_dim(rule: &SphereRule) -> usize {
    rule.nodes.first().map_or(0, |u| u.len())
}

/// Sphere integrals of several potentials at one radius, sharing the metric
/// evaluations.
pub fn sphere_integrals(
    chart: &dyn EndChart,
    potentials: &[StaticPotential],
    r: f64,
    spec: QuadSpec,
) -> Result<Vec<ChargeSample>> {
    let n = chart.dimension().get();
    spec.validate()?;
    if let Some(v) = potentials.iter().find(|v| v.coeffs().len() != n + 1) {
        return Err(Error::usage(format!("potential has {} coefficients, expected {}", v.coeffs().len(), n + 1)));
    }
    let full = SphereRule::new(n, spec)?;
    let half = SphereRule::new(n, spec.half())?;
    let (fv, source) = integrate_rule(chart, potentials, r, &full, None)?;
    let (hv, _) = integrate_rule(chart, potentials, r, &half, None)?;
    let fd = if source == DerivativeSource::FiniteDifference {
        // Central differences are second order: |I_h − I_2h|/3 estimates the error of I_h.
        let (f2, _) = integrate_rule(chart, potentials, r, &full, Some(2.0 * fd_step(r)))?;
        fv.iter().zip(&f2).map(|(a, b)| (a - b).abs() / 3.0).collect()
    } else {
        vec![0.0; potentials.len()]
    };
    let mut out = Vec::with_capacity(potentials.len());
    for (j, v) in potentials.iter().enumerate() {
        if !fv[j].is_finite() {
            return Err(Error::Data(format!("non-finite charge integral at r = {r}")));
        }
        out.push(ChargeSample {
            r,
            potential: v.coeffs().to_vec(),
            value: fv[j],
            quad_error: (fv[j] - hv[j]).abs() + fd[j],
            fd_error: fd[j],
            nodes: full.len(),
            jittered: full.jittered || half.jittered,
            derivative_source: source,
        });
    }
    Ok(out)
}

pub fn sphere_integral(chart: &dyn EndChart, v: &StaticPotential, r: f64, spec: QuadSpec) -> Result<ChargeSample> {
    Ok(sphere_integrals(chart, std::slice::from_ref(v), r, spec)?.remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// Fitted `q > 0` with a residual below the last increment.
    Converged,
    /// The sequence is constant to within its noise floor.
    Constant,
    /// A limit was fitted but the fit is not trustworthy.
    Unstable,
    /// Fitted `q ≤ 0`: no limit is claimed.
    Divergent,
}

/// Least-squares fit of `I(r) = I_∞ + c·r^{−q}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtrapolationResult {
    pub status: FitStatus,
    /// `I_∞`, absent when divergent.
    pub limit: Option<f64>,
    /// Fitted `q`; infinite for a constant sequence.
    #[serde(serialize_with = "extended_real")]
    pub exponent: f64,
    /// `c` relative to `(r/r₀)^{−q}`.
    pub coefficient: f64,
    /// `√(RSS/K)`
    pub residual: f64,
    pub last_increment: f64,
    /// `max(residual, last increment)` plus the quadrature error of the last sample.
    pub error: f64,
    pub samples: Vec<ChargeSample>,
}

const Q_MIN: f64 = -8.0;
const Q_MAX: f64 = 12.0;
const Q_STEP: f64 = 0.05;

/// `(rss, I_∞, c)` for fixed `q`.
fn fit_fixed_q(x: &[f64], y: &[f64], q: f64) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let phi: Vec<f64> = x.iter().map(|v| v.powf(-q)).collect();
    let mp = phi.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let spp: f64 = phi.iter().map(|p| (p - mp).powi(2)).sum();
    if !(spp > 1e-14 * mp * mp * k) || !spp.is_finite() {
        return (f64::INFINITY, my, 0.0);
    }
    let spy: f64 = phi.iter().zip(y).map(|(p, v)| (p - mp) * (v - my)).sum();
    let c = spy / spp;
    let a = my - c * mp;
    let rss = phi.iter().zip(y).map(|(p, v)| (v - a - c * p).powi(2)).sum();
    (rss, a, c)
}

/// Fits `values ≈ I_∞ + c (r/r₀)^{−q}` by a grid search over `q` followed by
/// golden-section refinement. Sequences whose spread is at most `noise_floor`
/// are treated as constant.
pub fn fit_power_law(radii: &[f64], values: &[f64], noise_floor: f64) -> Result<(FitStatus, f64, f64, f64, f64)> {
    if radii.len() != values.len() {
        return Err(Error::usage("radii and values differ in length"));
    }
    if radii.len() < 4 {
        return Err(Error::usage(format!("extrapolation needs at least 4 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::usage("radii must be positive and strictly increasing"));
    }
    let last = *values.last().expect("non-empty");
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= noise_floor {
        return Ok((FitStatus::Constant, last, f64::INFINITY, 0.0, 0.0));
    }
    let x: Vec<f64> = radii.iter().map(|r| r / radii[0]).collect();
    let steps = ((Q_MAX - Q_MIN) / Q_STEP).round() as usize;
    let mut best = (f64::INFINITY, Q_MIN);
    for i in 0..=steps {
        let q = Q_MIN + Q_STEP * i as f64;
        let (rss, _, _) = fit_fixed_q(&x, values, q);
        if rss < best.0 {
            best = (rss, q);
        }
    }
    let (mut a, mut b) = ((best.1 - Q_STEP).max(Q_MIN), (best.1 + Q_STEP).min(Q_MAX));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c1 = b - g * (b - a);
        let c2 = a + g * (b - a);
        if fit_fixed_q(&x, values, c1).0 <= fit_fixed_q(&x, values, c2).0 {
            b = c2;
        } else {
            a = c1;
        }
    }
    let q_ref = 0.5 * (a + b);
    let q = if fit_fixed_q(&x, values, q_ref).0 <= best.0 { q_ref } else { best.1 };
    let (rss, limit, coeff) = fit_fixed_q(&x, values, q);
    let residual = (rss / x.len() as f64).sqrt();
    let increment = (last - values[values.len() - 2]).abs();
    let status = if q <= 0.0 {
        FitStatus::Divergent
    } else if q <= Q_MIN + 2.0 * Q_STEP || q >= Q_MAX - 2.0 * Q_STEP || residual > increment {
        FitStatus::Unstable
    } else {
        FitStatus::Converged
    };
    Ok((status, limit, q, coeff, residual))
}

fn extrapolate(samples: Vec<ChargeSample>, noise_floor: f64) -> Result<ExtrapolationResult> {
    let radii: Vec<f64> = samples.iter().map(|s| s.r).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let last = samples.last().expect("non-empty");
    let increment = (values[values.len() - 1] - values[values.len() - 2]).abs();
    let (status, limit, exponent, coefficient, residual) = fit_power_law(&radii, &values, noise_floor)?;
    let error = match status {
        FitStatus::Constant => (values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().copied().fold(f64::INFINITY, f64::min))
        .max(last.quad_error),
        _ => residual.max(increment) + last.quad_error,
    };
    Ok(ExtrapolationResult {
        status,
        limit: if status == FitStatus::Divergent { None } else { Some(limit) },
        exponent,
        coefficient,
        residual,
        last_increment: increment,
        error,
        samples,
    })
}

/// Settings shared by [`mass_component`] and [`mass_vector`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassConfig {
    /// Radii schedule; defaults to [`default_radii`].
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub quadrature: Option<QuadSpec>,
    /// Sequences whose spread is below `noise_rel · max|I|` plus twice the
    /// largest quadrature error count as constant.
    #[serde(default = "default_noise_rel")]
    pub noise_rel: f64,
    /// Run even if the decay precondition fails; recorded in the report.
    #[serde(default)]
    pub skip_decay_check: bool,
    #[serde(default)]
    pub decay: Option<DecaySpec>,
    /// Classification tolerance; defaults to three times the error norm.
    #[serde(default)]
    pub eps: Option<f64>,
}

fn default_noise_rel() -> f64 {
    1e-9
}

impl Default for MassConfig {
    fn default() -> Self {
        MassConfig {
            radii: None,
            quadrature: None,
            noise_rel: default_noise_rel(),
            skip_decay_check: false,
            decay: None,
            eps: None,
        }
    }
}

/// `r_k = max(4·r_min, 10)·2^k`, `k = 0..4`; for charts with bounded data the
/// schedule ends just inside the outer radius instead.
pub fn default_radii(chart: &dyn EndChart) -> Result<Vec<f64>> {
    let r_min = chart.r_min();
    let r_max = chart.r_max();
    if r_max.is_finite() {
        let top = r_max - 3.0 * fd_step(r_max);
        let start = top / 16.0;
        if !(start >= r_min) {
            return Err(Error::usage(format!(
                "chart data [{r_min}, {r_max}] too short for a default radii schedule spanning a factor 16"
            )));
        }
        return Ok((0..5).map(|k| start * 2f64.powi(k)).collect());
    }
    let start = (4.0 * r_min).max(10.0);
    Ok((0..5).map(|k| start * 2f64.powi(k)).collect())
}

fn check_radii(chart: &dyn EndChart, radii: &[f64]) -> Result<()> {
    if radii.len() < 4 {
        return Err(Error::usage(format!("mass extrapolation needs at least 4 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::usage("radii must be strictly increasing"));
    }
    if radii[0] < chart.r_min() || radii[radii.len() - 1] > chart.r_max() {
        return Err(Error::domain(format!(
            "radii [{}, {}] leave the chart domain [{}, {}]",
            radii[0],
            radii[radii.len() - 1],
            chart.r_min(),
            chart.r_max()
        )));
    }
    Ok(())
}

fn noise_floor(all: &[&[ChargeSample]], rel: f64) -> f64 {
    let scale = all.iter().flat_map(|s| s.iter()).map(|s| s.value.abs()).fold(0.0, f64::max);
    let err = all.iter().flat_map(|s| s.iter()).map(|s| s.quad_error).fold(0.0, f64::max);
    rel * scale + 2.0 * err
}

/// `lim_{r→∞} ∮_{S_r} 𝕌(V, e)(ν) dS`.
pub fn mass_component(
    chart: &dyn EndChart,
    v: &StaticPotential,
    radii: &[f64],
    config: &MassConfig,
) -> Result<ExtrapolationResult> {
    check_radii(chart, radii)?;
    let n = chart.dimension().get();
    let spec = config.quadrature.unwrap_or_else(|| QuadSpec::default_for(n));
    let samples = radii.iter().map(|&r| sphere_integral(chart, v, r, spec)).collect::<Result<Vec<_>>>()?;
    let floor = noise_floor(&[&samples], config.noise_rel);
    extrapolate(samples, floor)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "reason")]
pub enum MassStatus {
    Defined,
    /// Some component diverges; no mass vector is claimed.
    Undefined(String),
    /// Decay validation failed and was not overridden.
    DecayPreconditionFailed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassDiagnostics {
    pub decay: Option<DecayReport>,
    pub decay_check_skipped: bool,
    pub derivative_source: DerivativeSource,
    pub jittered: bool,
    /// Observed extreme eigenvalues of `g` on the sampled spheres.
    pub equivalence: Option<EquivalenceBounds>,
    pub unstable_components: Vec<usize>,
    pub noise_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassReport {
    pub n: usize,
    pub chart: ChartDescriptor,
    pub status: MassStatus,
    pub mass: Option<Vec<f64>>,
    pub err: Option<Vec<f64>>,
    /// `η(m, m)`
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    pub class: Option<CausalClass>,
    pub radii: Vec<f64>,
    #[serde(serialize_with = "extended_real_vec")]
    pub fitted_exponents: Vec<f64>,
    pub quadrature: QuadSpec,
    pub components: Vec<ExtrapolationResult>,
    pub diagnostics: MassDiagnostics,
}

impl MassReport {
    pub fn mass_vector(&self) -> Option<MassVector> {
        match (&self.mass, &self.err) {
            (Some(m), Some(e)) => MassVector::new(m.clone(), e.clone()).ok(),
            _ => None,
        }
    }

    /// One row per component and radius.
    pub fn samples_csv(&self) -> String {
        let mut s = String::from("component,r,value,quad_error,fd_error\n");
        for (k, c) in self.components.iter().enumerate() {
            for x in &c.samples {
                s.push_str(&format!("{k},{},{},{},{}\n", x.r, x.value, x.quad_error, x.fd_error));
            }
        }
        s
    }
}

/// The mass vector `(𝔪(V₍₀₎), …, 𝔪(V₍ₙ₎))` with errors and causal class.
pub fn mass_vector(chart: &dyn EndChart, config: &MassConfig) -> Result<MassReport> {
    let n = chart.dimension();
    let nu = n.get();
    let radii = match &config.radii {
        Some(r) => r.clone(),
        None => default_radii(chart)?,
    };
    check_radii(chart, &radii)?;
    let spec = config.quadrature.unwrap_or_else(|| QuadSpec::default_for(nu));
    spec.validate()?;
    let decay_spec = config.decay.unwrap_or_else(|| DecaySpec::default_for(nu));
    let decay = validate_decay(chart, &radii, &decay_spec)?;
    let mut diagnostics = MassDiagnostics {
        decay: Some(decay.clone()),
        decay_check_skipped: config.skip_decay_check,
        derivative_source: DerivativeSource::Analytic,
        jittered: false,
        equivalence: None,
        unstable_components: Vec::new(),
        noise_floor: 0.0,
    };
    let empty = |status, diagnostics| MassReport {
        n: nu,
        chart: chart.descriptor(),
        status,
        mass: None,
        err: None,
        q: None,
        class: None,
        radii: radii.clone(),
        fitted_exponents: Vec::new(),
        quadrature: spec,
        components: Vec::new(),
        diagnostics,
    };
    if !decay.pass && !config.skip_decay_check {
        let reason = format!(
            "fitted decay exponent {} does not exceed n/2 + margin = {}",
            decay.exponent,
            decay.threshold + decay.margin
        );
        return Ok(empty(MassStatus::DecayPreconditionFailed(reason), diagnostics));
    }

    let potentials: Vec<StaticPotential> = (0..=nu).map(|k| StaticPotential::basis(n, k)).collect();
    let per_radius = radii
        .iter()
        .map(|&r| sphere_integrals(chart, &potentials, r, spec))
        .collect::<Result<Vec<_>>>()?;
    let mut by_component: Vec<Vec<ChargeSample>> = vec![Vec::with_capacity(radii.len()); nu + 1];
    for row in per_radius {
        for (k, s) in row.into_iter().enumerate() {
            by_component[k].push(s);
        }
    }
    let refs: Vec<&[ChargeSample]> = by_component.iter().map(|v| v.as_slice()).collect();
    let floor = noise_floor(&refs, config.noise_rel);
    diagnostics.noise_floor = floor;
    diagnostics.jittered = by_component.iter().flatten().any(|s| s.jittered);
    if by_component.iter().flatten().any(|s| s.derivative_source == DerivativeSource::FiniteDifference) {
        diagnostics.derivative_source = DerivativeSource::FiniteDifference;
    }
    let eq_rule = SphereRule::new(nu, DecaySpec::default_for(nu).sample)?;
    let mut eq_points = Vec::new();
    for &r in &radii {
        for u in &eq_rule.nodes {
            eq_points.push(PolarPoint::new(r, u.clone())?);
        }
    }
    diagnostics.equivalence = Some(equivalence_bounds(chart, &eq_points)?);

    let components = by_component.into_iter().map(|s| extrapolate(s, floor)).collect::<Result<Vec<_>>>()?;
    diagnostics.unstable_components =
        components.iter().enumerate().filter(|(_, c)| c.status == FitStatus::Unstable).map(|(k, _)| k).collect();
    let fitted_exponents = components.iter().map(|c| c.exponent).collect();
    if let Some(k) = components.iter().position(|c| c.status == FitStatus::Divergent) {
        let reason = format!("component {k} diverges (fitted exponent {:.3} ≤ 0)", components[k].exponent);
        let mut report = empty(MassStatus::Undefined(reason), diagnostics);
        report.fitted_exponents = fitted_exponents;
        report.components = components;
        return Ok(report);
    }
    let m: Vec<f64> = components.iter().map(|c| c.limit.expect("non-divergent")).collect();
    let err: Vec<f64> = components.iter().map(|c| c.error).collect();
    let mv = MassVector::new(m.clone(), err.clone())?;
    let class = match config.eps {
        Some(eps) => crate::hyperbolic::classify_causal(&m, eps),
        None => mv.classify(),
    };
    Ok(MassReport {
        n: nu,
        chart: chart.descriptor(),
        status: MassStatus::Defined,
        mass: Some(m),
        err: Some(err),
        q: Some(mv.eta_norm()),
        class: Some(class),
        radii,
        fitted_exponents,
        quadrature: spec,
        components,
        diagnostics,
    })
}

/// `2m(n−1)ω_{n−1}`: the value of `𝔪(V₍₀₎)` for Schwarzschild–AdS of mass
/// parameter `m`.
pub fn sads_calibration(n: Dimension, m: f64) -> f64 {
    2.0 * m * (n.as_f64() - 1.0) * crate::hyperbolic::sphere_area(n.get() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::CausalTag;
    use crate::metric_models::{hyperbolic_model, perturbation_model, schwarzschild_ads, AngularMode, Component};
    use std::f64::consts::PI;

    fn n3() -> Dimension {
        Dimension::new(3).unwrap()
    }

    #[test]
    fn sads_perturbation_at_two() {
        let c = schwarzschild_ads(n3(), 1.0).unwrap();
        let p = PolarPoint::new(2.0, vec![0.0, 0.6, 0.8]).unwrap();
        let t = perturbation(&c, &p).unwrap();
        assert!((t.e[(2, 2)] - 0.25).abs() < 1e-14);
        assert!(t.e.iter().enumerate().all(|(k, v)| k == 8 || *v == 0.0));
        assert_eq!(t.e, t.e.transpose());
    }

    #[test]
    fn hyperbolic_integrand_vanishes() {
        let c = hyperbolic_model(n3());
        let p = PolarPoint::new(3.0, vec![0.6, 0.0, 0.8]).unwrap();
        for k in 0..4 {
            assert_eq!(charge_integrand(&c, &StaticPotential::basis(n3(), k), &p).unwrap(), 0.0);
        }
        let s = sphere_integral(&c, &StaticPotential::basis(n3(), 0), 10.0, QuadSpec::default_for(3)).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn sads_sphere_integral_at_fifty() {
        let c = schwarzschild_ads(n3(), 1.0).unwrap();
        let s = sphere_integral(&c, &StaticPotential::basis(n3(), 0), 50.0, QuadSpec::default_for(3)).unwrap();
        assert!((s.value / (16.0 * PI) - 1.0).abs() < 0.01, "{}", s.value);
        for k in 1..4 {
            let s = sphere_integral(&c, &StaticPotential::basis(n3(), k), 50.0, QuadSpec::default_for(3)).unwrap();
            assert!(s.value.abs() < 1e-10, "{k}: {}", s.value);
        }
    }

    #[test]
    fn power_law_fit_recovers_model() {
        let r: Vec<f64> = (0..5).map(|k| 20.0 * 2f64.powi(k)).collect();
        let v: Vec<f64> = r.iter().map(|x| 3.0 + 7.0 * x.powf(-1.5)).collect();
        let (st, lim, q, _, res) = fit_power_law(&r, &v, 0.0).unwrap();
        assert_eq!(st, FitStatus::Converged);
        assert!((lim - 3.0).abs() < 1e-9, "{lim}");
        assert!((q - 1.5).abs() < 1e-5, "{q}");
        assert!(res < 1e-9);
        let grow: Vec<f64> = r.iter().map(|x| x.sqrt()).collect();
        assert_eq!(fit_power_law(&r, &grow, 0.0).unwrap().0, FitStatus::Divergent);
        assert_eq!(fit_power_law(&r, &[1.0; 5], 0.0).unwrap().0, FitStatus::Constant);
        assert!(fit_power_law(&r[..3], &v[..3], 0.0).is_err());
    }

    #[test]
    fn hyperbolic_mass_is_zero() {
        let rep = mass_vector(&hyperbolic_model(n3()), &MassConfig::default()).unwrap();
        assert_eq!(rep.status, MassStatus::Defined);
        assert_eq!(rep.class.unwrap().tag, CausalTag::Zero);
        assert!(rep.mass.unwrap().iter().all(|m| *m == 0.0));
        assert!(rep.err.unwrap().iter().all(|e| *e == 0.0));
    }

    #[test]
    fn sads_mass_vector() {
        let c = schwarzschild_ads(n3(), 1.0).unwrap();
        let cfg = MassConfig { radii: Some((0..5).map(|k| 20.0 * 2f64.powi(k)).collect()), ..Default::default() };
        let rep = mass_vector(&c, &cfg).unwrap();
        let m = rep.mass.clone().unwrap();
        assert!((m[0] / (16.0 * PI) - 1.0).abs() < 1e-3, "{m:?}");
        assert!(m[1..].iter().all(|x| x.abs() < 1e-6), "{m:?}");
        assert_eq!(rep.class.unwrap().tag, CausalTag::TimelikeFuture);
        assert!(rep.samples_csv().lines().count() == 1 + 4 * 5);
    }

    #[test]
    fn borderline_perturbation_is_flagged() {
        let c = perturbation_model(n3(), 1.0, 1.5, AngularMode::Symmetric, Component::Nn).unwrap();
        let v = StaticPotential::basis(n3(), 0);
        let radii: Vec<f64> = (0..5).map(|k| 10.0 * 2f64.powi(k)).collect();
        let res = mass_component(&c, &v, &radii, &MassConfig::default()).unwrap();
        assert!(matches!(res.status, FitStatus::Divergent | FitStatus::Unstable), "{:?}", res.status);
        let rep = mass_vector(&c, &MassConfig::default()).unwrap();
        assert!(matches!(rep.status, MassStatus::DecayPreconditionFailed(_)));
    }

    #[test]
    fn calibration_constant() {
        assert!((sads_calibration(n3(), 1.0) - 16.0 * PI).abs() < 1e-12);
    }
}
