//! Asymptotically hyperbolic end charts.
//!
//! An [`EndChart`] reports the frame components `g_ij = g(f_i, f_j)` of a
//! metric on `{r ≥ r_min}` in the orthonormal frame of [`crate::hyperbolic`].
//! Charts report the deviation `e = g − δ` directly so that small
//! perturbations do not lose digits to cancellation.

mod analytic;
mod boost;
mod decay;
mod grid;
mod perturbation;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hyperbolic::{frame, Dimension, PolarPoint};
use crate::{Error, Result};

pub use analytic::{hyperbolic_model, schwarzschild_ads, HyperbolicModel, SchwarzschildAds};
pub use boost::{boost_chart, BoostedChart};
pub use decay::{validate_decay, DecayReport, DecaySpec};
pub(crate) use decay::linear_fit;
pub use grid::{load_grid_metric, parse_grid_metric, GridChart, GridOptions, Interpolation};
pub use perturbation::{perturbation_model, AngularMode, Component, PerturbationModel, RadialProfile};

/// Family tag and parameters of a chart, for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDescriptor {
    pub family: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl ChartDescriptor {
    pub(crate) fn new(family: &str) -> Self {
        ChartDescriptor { family: family.to_string(), params: BTreeMap::new() }
    }

    pub(crate) fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// A metric model on the exterior region `{r ≥ r_min}` of the hyperbolic chart.
///
/// Implementations must be pure: the same point always yields the same value.
pub trait EndChart: Send + Sync + std::fmt::Debug {
    fn dimension(&self) -> Dimension;

    /// Inner chart radius `r₀`.
    fn r_min(&self) -> f64;

    /// Outer limit of the data, infinite for closed-form models.
    fn r_max(&self) -> f64 {
        f64::INFINITY
    }

    fn descriptor(&self) -> ChartDescriptor;

    /// `e_ij = g_ij − δ_ij` in the frame at `p`.
    fn perturbation(&self, p: &PolarPoint) -> Result<DMatrix<f64>>;

    /// Analytic frame derivatives `f_k(e_ij)`, one matrix per `k`, if known.
    fn perturbation_derivatives(&self, _p: &PolarPoint) -> Result<Option<Vec<DMatrix<f64>>>> {
        Ok(None)
    }

    /// True when `g_ab = δ_ab`, `g_an = 0` and `g_nn` depends on `r` only.
    fn is_radially_warped(&self) -> bool {
        false
    }

    /// Frame components `g_ij`.
    fn metric(&self, p: &PolarPoint) -> Result<DMatrix<f64>> {
        let mut g = self.perturbation(p)?;
        for i in 0..g.nrows() {
            g[(i, i)] += 1.0;
        }
        Ok(g)
    }
}

pub type SharedChart = Arc<dyn EndChart>;

pub(crate) fn check_domain(chart: &dyn EndChart, p: &PolarPoint) -> Result<()> {
    let n = chart.dimension().get();
    if p.dim() != n {
        return Err(Error::usage(format!("point has dimension {} but chart has {n}", p.dim())));
    }
    // Small slack so that stencils centred at r_min are not rejected by rounding.
    let lo = chart.r_min() * (1.0 - 1e-12);
    if p.r() < lo || p.r() > chart.r_max() {
        return Err(Error::domain(format!(
            "r = {} outside the chart domain [{}, {}]",
            p.r(),
            chart.r_min(),
            chart.r_max()
        )));
    }
    Ok(())
}

/// Finite-difference step for frame derivatives at radius `r`.
pub fn fd_step(r: f64) -> f64 {
    1e-4 * r.max(1.0)
}

/// Where frame derivatives of `e` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

/// `f_k(e_ij)` by central differences with Euclidean chart step `h` along each
/// frame vector.
pub fn fd_perturbation_derivatives(
    chart: &dyn EndChart,
    p: &PolarPoint,
    h: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let x = p.cartesian();
    let f = frame(p);
    f.iter()
        .map(|v| {
            let len = v.norm();
            let step = v * (h / len);
            let plus = PolarPoint::from_cartesian((&x + &step).as_slice())?;
            let minus = PolarPoint::from_cartesian((&x - &step).as_slice())?;
            let ep = chart.perturbation(&plus)?;
            let em = chart.perturbation(&minus)?;
            Ok((ep - em) * (len / (2.0 * h)))
        })
        .collect()
}

/// Frame derivatives of `e`, analytic when the chart supplies them.
pub fn perturbation_derivatives(
    chart: &dyn EndChart,
    p: &PolarPoint,
) -> Result<(Vec<DMatrix<f64>>, DerivativeSource)> {
    if let Some(d) = chart.perturbation_derivatives(p)? {
        return Ok((d, DerivativeSource::Analytic));
    }
    Ok((fd_perturbation_derivatives(chart, p, fd_step(p.r()))?, DerivativeSource::FiniteDifference))
}

/// Observed uniform-equivalence constants: extreme eigenvalues of `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceBounds {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl EquivalenceBounds {
    pub fn condition_number(&self) -> f64 {
        self.max_eigenvalue / self.min_eigenvalue
    }
}

pub fn equivalence_bounds(chart: &dyn EndChart, points: &[PolarPoint]) -> Result<EquivalenceBounds> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in points {
        let g = chart.metric(p)?;
        let eig = g.symmetric_eigen().eigenvalues;
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    if !(lo > 0.0) {
        return Err(Error::Data(format!("metric is not positive definite (min eigenvalue {lo})")));
    }
    Ok(EquivalenceBounds { min_eigenvalue: lo, max_eigenvalue: hi })
}

/// Converts frame components to chart (coordinate) components:
/// `G = Θᵀ e Θ` with the coframe `Θ = Fᵀ b`.
pub fn frame_to_coordinates(p: &PolarPoint, e: &DMatrix<f64>) -> DMatrix<f64> {
    let x: DVector<f64> = p.cartesian();
    let b = crate::hyperbolic::background_metric(&x);
    let f = crate::hyperbolic::frame_matrix(p);
    let theta = f.transpose() * b;
    theta.transpose() * e * theta
}
