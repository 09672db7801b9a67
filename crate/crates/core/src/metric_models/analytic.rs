use nalgebra::DMatrix;

use super::{check_domain, ChartDescriptor, EndChart};
use crate::hyperbolic::{Dimension, PolarPoint};
use crate::{Error, Result};

/// The hyperbolic metric itself, `e ≡ 0`.
#[derive(Clone, Debug)]
pub struct HyperbolicModel {
    n: Dimension,
    r_min: f64,
}

pub fn hyperbolic_model(n: Dimension) -> HyperbolicModel {
    HyperbolicModel { n, r_min: 1.0 }
}

impl HyperbolicModel {
    pub fn with_r_min(mut self, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0) {
            return Err(Error::usage(format!("r_min must be positive, got {r_min}")));
        }
        self.r_min = r_min;
        Ok(self)
    }
}

impl EndChart for HyperbolicModel {
    fn dimension(&self) -> Dimension {
        self.n
    }

    fn r_min(&self) -> f64 {
        self.r_min
    }

    fn descriptor(&self) -> ChartDescriptor {
        ChartDescriptor::new("hyperbolic").with("n", self.n.get())
    }

    fn perturbation(&self, p: &PolarPoint) -> Result<DMatrix<f64>> {
        check_domain(self, p)?;
        let n = self.n.get();
        Ok(DMatrix::zeros(n, n))
    }

    fn perturbation_derivatives(&self, p: &PolarPoint) -> Result<Option<Vec<DMatrix<f64>>>> {
        check_domain(self, p)?;
        let n = self.n.get();
        Ok(Some(vec![DMatrix::zeros(n, n); n]))
    }

    fn is_radially_warped(&self) -> bool {
        true
    }
}

/// Time-symmetric slice of Schwarzschild–anti-de Sitter:
/// `g = dr²/(1 + r² − 2m r^{2−n}) + r² g_𝕊`.
#[derive(Clone, Debug)]
pub struct SchwarzschildAds {
    n: Dimension,
    m: f64,
    horizon: Option<f64>,
    r_min: f64,
}

/// Schwarzschild–AdS with mass parameter `m ≥ 0`; `r_min` defaults to
/// `1.05·r_h` (or 1 when `m = 0`).
pub fn schwarzschild_ads(n: Dimension, m: f64) -> Result<SchwarzschildAds> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::usage(format!("mass parameter must be finite and non-negative, got {m}")));
    }
    let horizon = if m > 0.0 { Some(horizon_radius(n, m)) } else { None };
    let r_min = horizon.map_or(1.0, |h| 1.05 * h);
    Ok(SchwarzschildAds { n, m, horizon, r_min })
}

/// Largest root of `1 + r² − 2m r^{2−n}` by bisection; the function is
/// increasing in `r` for `m > 0`.
fn horizon_radius(n: Dimension, m: f64) -> f64 {
    let k = n.as_f64() - 2.0;
    let f = |r: f64| 1.0 + r * r - 2.0 * m * r.powf(-k);
    let mut hi = (2.0 * m).powf(1.0 / k).max(1.0);
    let mut lo = hi;
    while f(lo) > 0.0 {
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

impl SchwarzschildAds {
    pub fn with_r_min(mut self, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0) {
            return Err(Error::usage(format!("r_min must be positive, got {r_min}")));
        }
        if let Some(h) = self.horizon {
            if r_min <= h {
                return Err(Error::domain(format!("r_min = {r_min} is not above the horizon r_h = {h}")));
            }
        }
        self.r_min = r_min;
        Ok(self)
    }

    pub fn mass_parameter(&self) -> f64 {
        self.m
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    /// `(e_nn, ∂_r e_nn)` at radius `r`.
    pub fn radial_perturbation(&self, r: f64) -> (f64, f64) {
        let n = self.n.as_f64();
        let a = 2.0 * self.m * r.powf(2.0 - n);
        let da = (2.0 - n) * a / r;
        let v = 1.0 + r * r - a;
        let dv = 2.0 * r - da;
        (a / v, (da * v - a * dv) / (v * v))
    }
}

impl EndChart for SchwarzschildAds {
    fn dimension(&self) -> Dimension {
        self.n
    }

    fn r_min(&self) -> f64 {
        self.r_min
    }

    fn descriptor(&self) -> ChartDescriptor {
        ChartDescriptor::new("sads").with("n", self.n.get()).with("m", self.m).with("r_min", self.r_min)
    }

    fn perturbation(&self, p: &PolarPoint) -> Result<DMatrix<f64>> {
        check_domain(self, p)?;
        let n = self.n.get();
        let mut e = DMatrix::zeros(n, n);
        e[(n - 1, n - 1)] = self.radial_perturbation(p.r()).0;
        Ok(e)
    }

    fn perturbation_derivatives(&self, p: &PolarPoint) -> Result<Option<Vec<DMatrix<f64>>>> {
        check_domain(self, p)?;
        let n = self.n.get();
        let mut out = vec![DMatrix::zeros(n, n); n];
        out[n - 1][(n - 1, n - 1)] = p.lapse() * self.radial_perturbation(p.r()).1;
        Ok(Some(out))
    }

    fn is_radially_warped(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_models::fd_perturbation_derivatives;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn hyperbolic_is_identity() {
        let c = hyperbolic_model(dim(3));
        let p = PolarPoint::new(2.5, vec![0.3, 0.1, -0.2]).unwrap();
        assert_eq!(c.metric(&p).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn sads_direct_substitution() {
        let c = schwarzschild_ads(dim(3), 1.0).unwrap();
        let p = PolarPoint::new(2.0, vec![0.0, 0.0, 1.0]).unwrap();
        let g = c.metric(&p).unwrap();
        assert!((g[(2, 2)] - 1.25).abs() < 1e-15);
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(0, 2)], 0.0);
    }

    #[test]
    fn sads_horizon_and_default_r_min() {
        let c = schwarzschild_ads(dim(3), 1.0).unwrap();
        assert!((c.horizon().unwrap() - 1.0).abs() < 1e-12);
        assert!((c.r_min() - 1.05).abs() < 1e-12);
        assert!(c.clone().with_r_min(0.9).is_err());
        let p = PolarPoint::new(0.95, vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(c.perturbation(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn sads_zero_mass_is_hyperbolic() {
        let c = schwarzschild_ads(dim(4), 0.0).unwrap();
        let p = PolarPoint::new(3.0, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(c.perturbation(&p).unwrap(), DMatrix::zeros(4, 4));
    }

    #[test]
    fn sads_analytic_derivatives_match_differences() {
        let c = schwarzschild_ads(dim(3), 1.0).unwrap();
        for &(r, ref u) in &[(1.7, vec![0.2, 0.9, -0.3]), (6.0, vec![-0.5, 0.1, 0.4])] {
            let p = PolarPoint::new(r, u.clone()).unwrap();
            let exact = c.perturbation_derivatives(&p).unwrap().unwrap();
            let fd = fd_perturbation_derivatives(&c, &p, 1e-5).unwrap();
            for k in 0..3 {
                assert!((&exact[k] - &fd[k]).abs().max() < 1e-7, "k={k}");
            }
        }
    }
}
