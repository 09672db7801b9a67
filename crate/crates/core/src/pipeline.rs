//! Serializable run configurations and the report builders used by the
//! command-line front end.
//!
//! A [`RunConfig`] fully determines its output: [`run`] returns the exit code,
//! the pretty-printed JSON report (which embeds the configuration and the
//! library version) and any CSV tables.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curvature::{
    hypothesis_report, l1_mass_density_check, scalar_curvature, BoundaryPoint, ChartCurvature, CurvatureField,
    CurvatureMethod, HypothesisReport, L1Report, L1Spec, PiecewiseCurvature, PsiField, RadialProfilePsi, ZeroPsi,
    HYPOTHESIS_TOLERANCE,
};
use crate::distance::{
    build_h_profile, build_p_profile, default_epsilon, glue_neck_potential, lambda_delta, mean_curvature_check,
    psi_threshold, t0, MeanCurvatureVerdict, NeckParameters, Profile, ProfileVerification, Threshold,
    ThresholdReport,
};
use crate::hyperbolic::{Dimension, PolarPoint};
use crate::mass::{default_radii, mass_vector, MassConfig, MassReport, MassStatus};
use crate::metric_models::{
    boost_chart, hyperbolic_model, load_grid_metric, perturbation_model, schwarzschild_ads, validate_decay,
    AngularMode, Component, DecayReport, DecaySpec, GridOptions, Interpolation, RadialProfile, SharedChart,
};
use crate::quadrature::{QuadSpec, SphereRule};
use crate::{Error, Result, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MASS_UNDEFINED: i32 = 2;
pub const EXIT_VALIDATION_FAILED: i32 = 3;
pub const EXIT_PROFILE_FAILED: i32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Hyperbolic {
        n: usize,
        #[serde(default)]
        r_min: Option<f64>,
    },
    Sads {
        n: usize,
        m: f64,
        #[serde(default)]
        r_min: Option<f64>,
    },
    Perturbation {
        n: usize,
        amplitude: f64,
        exponent: f64,
        mode: AngularMode,
        component: Component,
        #[serde(default)]
        profile: RadialProfile,
        #[serde(default)]
        r_min: Option<f64>,
    },
    Grid {
        path: PathBuf,
        #[serde(default)]
        order: Interpolation,
        #[serde(default)]
        r_min: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostSpec {
    pub axis: usize,
    pub rapidity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    #[serde(default)]
    pub boost: Option<BoostSpec>,
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        ModelSpec { family, boost: None }
    }

    pub fn build(&self) -> Result<SharedChart> {
        let chart: SharedChart = match &self.family {
            Family::Hyperbolic { n, r_min } => {
                let c = hyperbolic_model(Dimension::new(*n)?);
                Arc::new(match r_min {
                    Some(r) => c.with_r_min(*r)?,
                    None => c,
                })
            }
            Family::Sads { n, m, r_min } => {
                let c = schwarzschild_ads(Dimension::new(*n)?, *m)?;
                Arc::new(match r_min {
                    Some(r) => c.with_r_min(*r)?,
                    None => c,
                })
            }
            Family::Perturbation { n, amplitude, exponent, mode, component, profile, r_min } => {
                let c = perturbation_model(Dimension::new(*n)?, *amplitude, *exponent, *mode, *component)?
                    .with_profile(*profile);
                Arc::new(match r_min {
                    Some(r) => c.with_r_min(*r)?,
                    None => c,
                })
            }
            Family::Grid { path, order, r_min } => {
                Arc::new(load_grid_metric(path, GridOptions { order: *order, r_min: *r_min })?)
            }
        };
        match self.boost {
            Some(b) => Ok(Arc::new(boost_chart(chart, b.axis, b.rapidity)?)),
            None => Ok(chart),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRun {
    pub model: ModelSpec,
    #[serde(default)]
    pub settings: MassConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateRun {
    pub model: ModelSpec,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub decay: Option<DecaySpec>,
    #[serde(default)]
    pub l1: Option<L1Spec>,
    /// Outer radius of the L¹ integral; defaults to the last radius.
    #[serde(default)]
    pub l1_r_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeckRun {
    pub n: usize,
    pub kappa: f64,
    pub d: f64,
    pub l: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_neck_grid")]
    pub grid_size: usize,
    /// Boundary mean-curvature samples.
    #[serde(default)]
    pub h_samples: Vec<f64>,
    #[serde(default)]
    pub d_values: Option<Vec<f64>>,
    #[serde(default)]
    pub l_values: Option<Vec<f64>>,
}

fn default_neck_grid() -> usize {
    2001
}

/// Neck parameters of the potential `ψ` in a hypothesis run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeckSpec {
    pub kappa: f64,
    pub d: f64,
    pub l: f64,
    /// Width of the `p` ramp; defaults to `d`, and must be given when `d ≥ −t₀`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_hypothesis_grid")]
    pub grid_size: usize,
}

fn default_hypothesis_grid() -> usize {
    401
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CurvatureSource {
    Chart {
        #[serde(default)]
        method: CurvatureMethod,
    },
    /// `R = base`, except `R = neck` on the shell carrying the `p` profile.
    Synthetic {
        base: f64,
        #[serde(default)]
        neck: Option<f64>,
    },
}

impl Default for CurvatureSource {
    fn default() -> Self {
        CurvatureSource::Chart { method: CurvatureMethod::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRun {
    pub model: ModelSpec,
    #[serde(default)]
    pub neck: Option<NeckSpec>,
    #[serde(default)]
    pub curvature: CurvatureSource,
    /// Boundary sphere radius; defaults to the chart's inner radius.
    #[serde(default)]
    pub r_boundary: Option<f64>,
    #[serde(default)]
    pub h_samples: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_directions")]
    pub directions: QuadSpec,
    /// Geometric radii sampled beyond the neck.
    #[serde(default = "default_end_radii")]
    pub end_radii: usize,
}

fn default_tolerance() -> f64 {
    HYPOTHESIS_TOLERANCE
}

fn default_directions() -> QuadSpec {
    QuadSpec { polar: 2, azimuth: 4 }
}

fn default_end_radii() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Mass(MassRun),
    Validate(ValidateRun),
    Neck(NeckRun),
    Hypothesis(HypothesisRun),
}

/// Exit code, JSON report and named CSV tables of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub json: String,
    pub csv: Vec<(String, String)>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

fn envelope<T: Serialize>(config: &RunConfig, result: T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { version: VERSION, config, result })?;
    s.push('\n');
    Ok(s)
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    match config {
        RunConfig::Mass(r) => run_mass(config, r),
        RunConfig::Validate(r) => run_validate(config, r),
        RunConfig::Neck(r) => run_neck(config, r),
        RunConfig::Hypothesis(r) => run_hypothesis(config, r),
    }
}

fn run_mass(config: &RunConfig, r: &MassRun) -> Result<RunOutcome> {
    let chart = r.model.build()?;
    let report: MassReport = mass_vector(chart.as_ref(), &r.settings)?;
    let exit_code = match report.status {
        MassStatus::Defined => EXIT_OK,
        MassStatus::Undefined(_) => EXIT_MASS_UNDEFINED,
        MassStatus::DecayPreconditionFailed(_) => EXIT_VALIDATION_FAILED,
    };
    let csv = vec![("charge_samples.csv".to_string(), report.samples_csv())];
    Ok(RunOutcome { exit_code, json: envelope(config, &report)?, csv })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSummary {
    pub samples: usize,
    pub method: CurvatureMethod,
    /// Extremes of `R + n(n−1)`.
    pub min_excess: f64,
    pub max_excess: f64,
    pub max_est_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidateReport {
    pub decay: DecayReport,
    pub curvature: CurvatureSummary,
    pub l1: L1Report,
    pub pass: bool,
}

fn run_validate(config: &RunConfig, r: &ValidateRun) -> Result<RunOutcome> {
    let chart = r.model.build()?;
    let n = chart.dimension().get();
    let radii = match &r.radii {
        Some(v) => v.clone(),
        None => default_radii(chart.as_ref())?,
    };
    let decay_spec = r.decay.unwrap_or_else(|| DecaySpec::default_for(n));
    let decay = validate_decay(chart.as_ref(), &radii, &decay_spec)?;
    let l1_spec = r.l1.unwrap_or_else(|| L1Spec::default_for(n));
    let rule = SphereRule::new(n, DecaySpec::default_for(n).sample)?;
    let mut min_excess = f64::INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_err: f64 = 0.0;
    let mut count = 0;
    let mut method = l1_spec.method;
    for &radius in &radii {
        for u in &rule.nodes {
            let s = scalar_curvature(chart.as_ref(), &PolarPoint::new(radius, u.clone())?, l1_spec.method)?;
            min_excess = min_excess.min(s.excess);
            max_excess = max_excess.max(s.excess);
            max_err = max_err.max(s.est_error);
            method = s.method;
            count += 1;
        }
    }
    let l1_r_max = r.l1_r_max.unwrap_or(*radii.last().expect("validated radii"));
    let l1 = l1_mass_density_check(chart.as_ref(), l1_r_max, &l1_spec)?;
    let pass = decay.pass && l1.pass;
    let report = ValidateReport {
        decay,
        curvature: CurvatureSummary { samples: count, method, min_excess, max_excess, max_est_error: max_err },
        l1,
        pass,
    };
    let mut table = String::from("r,sup_deviation,scaled\n");
    for i in 0..report.decay.radii.len() {
        table.push_str(&format!(
            "{},{},{}\n",
            report.decay.radii[i], report.decay.sup_deviation[i], report.decay.scaled[i]
        ));
    }
    let exit_code = if pass { EXIT_OK } else { EXIT_VALIDATION_FAILED };
    Ok(RunOutcome { exit_code, json: envelope(config, &report)?, csv: vec![("decay.csv".to_string(), table)] })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeckProfiles {
    pub epsilon: f64,
    pub p: ProfileVerification,
    pub h: ProfileVerification,
    pub glued_nodes: usize,
    pub junction_t: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeckReport {
    pub t0: f64,
    pub threshold: ThresholdReport,
    pub profiles: Option<NeckProfiles>,
    pub profile_note: Option<String>,
    pub mean_curvature: Option<MeanCurvatureVerdict>,
    pub pass: bool,
}

fn threshold_cell(t: &Threshold) -> String {
    match t {
        Threshold::Finite(v) => v.to_string(),
        Threshold::Infinite => "inf".to_string(),
    }
}

/// `(p, h, glued, ε)` for a finite threshold branch.
fn neck_profiles(
    n: Dimension,
    kappa: f64,
    delta: f64,
    l: f64,
    epsilon: Option<f64>,
    grid: usize,
) -> Result<(Profile, ProfileVerification, Profile, ProfileVerification, Profile, f64)> {
    let eps = match epsilon {
        Some(e) => e,
        None => default_epsilon(n, kappa, delta)?,
    };
    let lambda = lambda_delta(n, kappa, delta)?;
    let (p, pv) = build_p_profile(n, kappa, delta, eps, grid)?;
    let (h, hv) = build_h_profile(n, lambda, l, grid)?;
    let g = glue_neck_potential(&p, &h)?;
    Ok((p, pv, h, hv, g, eps))
}

fn run_neck(config: &RunConfig, r: &NeckRun) -> Result<RunOutcome> {
    let n = Dimension::new(r.n)?;
    let params = NeckParameters::new(n, r.kappa, r.d, r.l)?;
    let minus_t0 = -t0(n, r.kappa)?;
    let threshold = psi_threshold(&params)?;
    let d_values = r.d_values.clone().unwrap_or_else(|| (1..=15).map(|k| k as f64 * minus_t0 / 10.0).collect());
    let l_values = r.l_values.clone().unwrap_or_else(|| (0..=10).map(|k| k as f64 * 0.05).collect());
    let mut table = String::from("d,l,psi\n");
    for &d in &d_values {
        for &l in &l_values {
            let t = psi_threshold(&NeckParameters::new(n, r.kappa, d, l)?)?;
            table.push_str(&format!("{d},{l},{}\n", threshold_cell(&t.psi)));
        }
    }
    let mut csv = vec![("psi_table.csv".to_string(), table)];
    let (profiles, profile_note) = match (threshold.psi, threshold.lambda) {
        (Threshold::Finite(_), Some(lam)) if lam > 0.0 => {
            let (p, pv, h, hv, g, eps) = neck_profiles(n, r.kappa, r.d, r.l, r.epsilon, r.grid_size)?;
            csv.push(("p_profile.csv".to_string(), p.to_csv()));
            csv.push(("h_profile.csv".to_string(), h.to_csv()));
            csv.push(("glued_psi.csv".to_string(), g.to_csv()));
            let pass = pv.pass && hv.pass;
            let summary =
                NeckProfiles { epsilon: eps, p: pv, h: hv, glued_nodes: g.len(), junction_t: p.t_end(), pass };
            (Some(summary), None)
        }
        (Threshold::Finite(_), _) => (None, Some("d = 0: λ(0) = 0 and no profile is needed".to_string())),
        (Threshold::Infinite, _) => (None, threshold.reason.clone()),
    };
    let mean_curvature = if r.h_samples.is_empty() {
        None
    } else {
        Some(mean_curvature_check(n, &r.h_samples, threshold.psi)?)
    };
    let profiles_ok = profiles.as_ref().is_none_or(|p| p.pass);
    let mcc_ok = mean_curvature.as_ref().is_none_or(|m| m.pass);
    let exit_code = if !profiles_ok {
        EXIT_PROFILE_FAILED
    } else if !mcc_ok {
        EXIT_VALIDATION_FAILED
    } else {
        EXIT_OK
    };
    let report = NeckReport {
        t0: -minus_t0,
        threshold,
        profiles,
        profile_note,
        mean_curvature,
        pass: profiles_ok && mcc_ok,
    };
    Ok(RunOutcome { exit_code, json: envelope(config, &report)?, csv })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisOutcome {
    pub r_boundary: f64,
    pub threshold: Option<ThresholdReport>,
    pub profiles: Option<NeckProfiles>,
    pub mean_curvature: Option<MeanCurvatureVerdict>,
    pub report: HypothesisReport,
    pub pass: bool,
}

fn run_hypothesis(config: &RunConfig, r: &HypothesisRun) -> Result<RunOutcome> {
    let chart = r.model.build()?;
    let n = chart.dimension();
    let r_b = r.r_boundary.unwrap_or_else(|| chart.r_min());
    if r_b < chart.r_min() {
        return Err(Error::usage(format!("boundary radius {r_b} is inside the chart (r_min = {})", chart.r_min())));
    }
    let directions = SphereRule::new(n.get(), r.directions)?.nodes;
    let mut csv = Vec::new();

    let mut threshold = None;
    let mut profiles = None;
    let mut psi_field: Option<RadialProfilePsi> = None;
    let mut neck_shell = None;
    let mut radii: Vec<f64> = Vec::new();
    if let Some(spec) = &r.neck {
        let params = NeckParameters::new(n, spec.kappa, spec.d, spec.l)?;
        let minus_t0 = -params.t0();
        let delta = match spec.delta {
            Some(d) => d,
            None if spec.d < minus_t0 => spec.d,
            None => {
                return Err(Error::usage(format!(
                    "d = {} ≥ −t₀ = {minus_t0}: give a profile width δ < −t₀",
                    spec.d
                )))
            }
        };
        let (p, pv, _h, hv, g, eps) = neck_profiles(n, spec.kappa, delta, spec.l, spec.epsilon, spec.grid_size)?;
        csv.push(("glued_psi.csv".to_string(), g.to_csv()));
        let field = RadialProfilePsi { profile: g.clone(), r_boundary: r_b, chart: Some(chart.clone()) };
        neck_shell = Some((field.radius_for(p.t_end()), field.radius_for(p.t_start())));
        radii.extend(g.t.iter().map(|&t| field.radius_for(t)));
        let far = field.radius_for(g.t_start());
        radii.extend((1..=r.end_radii).map(|k| far * 2f64.powi(k as i32)));
        profiles = Some(NeckProfiles {
            epsilon: eps,
            pass: pv.pass && hv.pass,
            p: pv,
            h: hv,
            glued_nodes: g.len(),
            junction_t: p.t_end(),
        });
        threshold = Some(psi_threshold(&params)?);
        psi_field = Some(field);
    } else {
        radii.extend((0..=2 * r.end_radii).map(|k| r_b * 1.5f64.powi(k as i32)));
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if chart.r_max().is_finite() {
        radii.retain(|&x| x <= chart.r_max());
    }
    let mut interior = Vec::with_capacity(radii.len() * directions.len());
    for &rad in &radii {
        for u in &directions {
            interior.push(PolarPoint::new(rad.max(r_b), u.clone())?);
        }
    }
    let boundary: Vec<BoundaryPoint> = r
        .h_samples
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let u = directions[i % directions.len()].clone();
            Ok(BoundaryPoint { point: PolarPoint::new(r_b, u)?, mean_curvature: h })
        })
        .collect::<Result<_>>()?;

    let chart_field;
    let piecewise;
    let curvature: &dyn CurvatureField = match &r.curvature {
        CurvatureSource::Chart { method } => {
            chart_field = ChartCurvature { chart: chart.as_ref(), method: *method };
            &chart_field
        }
        CurvatureSource::Synthetic { base, neck } => {
            piecewise = PiecewiseCurvature {
                base: *base,
                neck: match (neck, neck_shell) {
                    (Some(v), Some((lo, hi))) => Some((*v, lo, hi)),
                    _ => None,
                },
            };
            &piecewise
        }
    };
    let psi: &dyn PsiField = match &psi_field {
        Some(f) => f,
        None => &ZeroPsi,
    };
    let report = hypothesis_report(n, curvature, psi, &interior, &boundary, r.tolerance)?;
    let mean_curvature = if r.h_samples.is_empty() {
        None
    } else {
        let psi_value = match &threshold {
            Some(t) => t.psi,
            None => Threshold::Finite(0.0),
        };
        Some(mean_curvature_check(n, &r.h_samples, psi_value)?)
    };
    let profiles_ok = profiles.as_ref().is_none_or(|p| p.pass);
    let pass = report.pass && mean_curvature.as_ref().is_none_or(|m| m.pass);
    let exit_code = if !profiles_ok {
        EXIT_PROFILE_FAILED
    } else if !pass {
        EXIT_VALIDATION_FAILED
    } else {
        EXIT_OK
    };
    let outcome = HypothesisOutcome { r_boundary: r_b, threshold, profiles, mean_curvature, report, pass };
    Ok(RunOutcome { exit_code, json: envelope(config, &outcome)?, csv })
}
