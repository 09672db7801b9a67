use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_domain, ChartDescriptor, EndChart};
use crate::hyperbolic::{frame, tangential_frame_derivative, Dimension, PolarPoint};
use crate::{Error, Result};

/// Angular factor `φ(u)` of a synthetic perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularMode {
    /// `φ ≡ 1`
    Symmetric,
    /// `φ = u₁`
    Dipole,
}

/// Which frame components carry the perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// `e_nn`
    Nn,
    /// `e_ab = δ_ab·(…)` on the whole tangential block
    Aa,
    /// `e_an = e_na = (…)·⟨ε_a, e₁⟩`
    Mixed,
}

/// Radial factor `a(r)` of a synthetic perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadialProfile {
    /// `A r^{−p}`
    #[default]
    Power,
    /// `A r²(1 + r²)^{−(p+2)/2}`, same leading decay but smooth through the
    /// origin of the chart.
    Regularized,
}

/// `e_ij = a(r) φ(u)` in one block of frame components.
#[derive(Clone, Debug)]
pub struct PerturbationModel {
    n: Dimension,
    amplitude: f64,
    exponent: f64,
    mode: AngularMode,
    component: Component,
    profile: RadialProfile,
    r_min: f64,
}

pub fn perturbation_model(
    n: Dimension,
    amplitude: f64,
    exponent: f64,
    mode: AngularMode,
    component: Component,
) -> Result<PerturbationModel> {
    if !(exponent > 0.0) || !exponent.is_finite() {
        return Err(Error::usage(format!("decay exponent must be positive, got {exponent}")));
    }
    if !amplitude.is_finite() {
        return Err(Error::usage("amplitude must be finite"));
    }
    Ok(PerturbationModel {
        n,
        amplitude,
        exponent,
        mode,
        component,
        profile: RadialProfile::Power,
        r_min: 1.0,
    })
}

impl PerturbationModel {
    pub fn with_profile(mut self, profile: RadialProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_r_min(mut self, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0) {
            return Err(Error::usage(format!("r_min must be positive, got {r_min}")));
        }
        self.r_min = r_min;
        Ok(self)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `(a(r), a'(r))`.
    pub fn radial(&self, r: f64) -> (f64, f64) {
        let (amp, p) = (self.amplitude, self.exponent);
        match self.profile {
            RadialProfile::Power => {
                let a = amp * r.powf(-p);
                (a, -p * a / r)
            }
            RadialProfile::Regularized => {
                let q = 1.0 + r * r;
                let a = amp * r * r * q.powf(-(p + 2.0) / 2.0);
                (a, amp * r * q.powf(-(p + 4.0) / 2.0) * (2.0 - p * r * r))
            }
        }
    }

    fn angular(&self, u: &[f64]) -> f64 {
        match self.mode {
            AngularMode::Symmetric => 1.0,
            AngularMode::Dipole => u[0],
        }
    }

    /// Scalar field `a φ` and its frame derivatives.
    fn scalar(&self, p: &PolarPoint, f: &[DVector<f64>]) -> (f64, Vec<f64>) {
        let n = self.n.get();
        let (a, da) = self.radial(p.r());
        let phi = self.angular(p.u());
        let mut d = vec![0.0; n];
        if self.mode == AngularMode::Dipole {
            for c in 0..n - 1 {
                d[c] = a * f[c][0] / p.r();
            }
        }
        d[n - 1] = p.lapse() * da * phi;
        (a * phi, d)
    }
}

impl EndChart for PerturbationModel {
    fn dimension(&self) -> Dimension {
        self.n
    }

    fn r_min(&self) -> f64 {
        self.r_min
    }

    fn descriptor(&self) -> ChartDescriptor {
        ChartDescriptor::new("perturbation")
            .with("n", self.n.get())
            .with("amplitude", self.amplitude)
            .with("exponent", self.exponent)
            .with("mode", serde_json::to_value(self.mode).expect("enum"))
            .with("component", serde_json::to_value(self.component).expect("enum"))
            .with("profile", serde_json::to_value(self.profile).expect("enum"))
            .with("r_min", self.r_min)
    }

    fn perturbation(&self, p: &PolarPoint) -> Result<DMatrix<f64>> {
        check_domain(self, p)?;
        let n = self.n.get();
        let f = frame(p);
        let (s, _) = self.scalar(p, &f);
        let mut e = DMatrix::zeros(n, n);
        match self.component {
            Component::Nn => e[(n - 1, n - 1)] = s,
            Component::Aa => {
                for b in 0..n - 1 {
                    e[(b, b)] = s;
                }
            }
            Component::Mixed => {
                for b in 0..n - 1 {
                    let v = s * f[b][0];
                    e[(b, n - 1)] = v;
                    e[(n - 1, b)] = v;
                }
            }
        }
        Ok(e)
    }

    fn perturbation_derivatives(&self, p: &PolarPoint) -> Result<Option<Vec<DMatrix<f64>>>> {
        check_domain(self, p)?;
        let n = self.n.get();
        let f = frame(p);
        let (s, ds) = self.scalar(p, &f);
        let mut out = vec![DMatrix::zeros(n, n); n];
        for (k, dk) in out.iter_mut().enumerate() {
            match self.component {
                Component::Nn => dk[(n - 1, n - 1)] = ds[k],
                Component::Aa => {
                    for b in 0..n - 1 {
                        dk[(b, b)] = ds[k];
                    }
                }
                Component::Mixed => {
                    for b in 0..n - 1 {
                        // f_k⟨ε_b, e₁⟩ vanishes radially; tangentially it is the
                        // sphere derivative of ε_b scaled by 1/r.
                        let dzeta = if k + 1 == n {
                            0.0
                        } else {
                            tangential_frame_derivative(p.u(), b, &f[k])[0] / p.r()
                        };
                        let v = ds[k] * f[b][0] + s * dzeta;
                        dk[(b, n - 1)] = v;
                        dk[(n - 1, b)] = v;
                    }
                }
            }
        }
        Ok(Some(out))
    }

    fn is_radially_warped(&self) -> bool {
        self.component == Component::Nn && self.mode == AngularMode::Symmetric
    }
}
