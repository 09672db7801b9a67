//! Exact reference geometry of the hyperboloid model.
//!
//! Points of ℍⁿ are parametrized by the chart `x' = r·u ∈ ℝⁿ`, the spatial part
//! of the ambient point `(√(1+r²), x')` of the upper unit hyperboloid in
//! Minkowski space. In these coordinates the hyperbolic metric reads
//! `b_ij = δ_ij − x_i x_j / (1 + |x|²)`.
//!
//! The orthonormal frame used throughout the crate is `f_a = ε_a(u)` for
//! `a < n−1` (tangent to the coordinate sphere, Euclidean-unit in `x'`) and
//! `f_{n−1} = √(1+r²)·u` (the outward radial direction). The tangential vectors
//! are the images of `e_0, …, e_{n−2}` under the rotation carrying `e_{n−1}` to
//! `u`, which is smooth everywhere except at the pole `u = −e_{n−1}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Points closer than this (in `1 + u_{n−1}`) to the frame pole are rejected.
pub const FRAME_POLE_GUARD: f64 = 1e-10;

/// Dimension `n ≥ 3` of the manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::usage(format!("dimension must be at least 3, got {n}")));
        }
        Ok(Dimension(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// `n` as a float, for formulas.
    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

/// A point `(r, u)` of ℍⁿ with `r > 0` and `u` a unit vector of ℝⁿ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolarPoint {
    r: f64,
    u: Vec<f64>,
}

impl PolarPoint {
    /// Builds a point, renormalizing `u`.
    pub fn new(r: f64, u: Vec<f64>) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("radius must be positive and finite, got {r}")));
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::domain("direction vector must be non-zero and finite"));
        }
        Ok(PolarPoint { r, u: u.into_iter().map(|x| x / norm).collect() })
    }

    /// The point with chart coordinates `x' = x`.
    pub fn from_cartesian(x: &[f64]) -> Result<Self> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        PolarPoint::new(r, x.to_vec())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `√(1 + r²)`, the value of `V₍₀₎` and the length of `∂_r` scaled.
    pub fn lapse(&self) -> f64 {
        self.r.hypot(1.0)
    }

    /// Chart coordinates `x' = r·u`.
    pub fn cartesian(&self) -> DVector<f64> {
        DVector::from_iterator(self.u.len(), self.u.iter().map(|c| c * self.r))
    }

    /// Ambient Minkowski coordinates `(x₀, x')` on the hyperboloid.
    pub fn ambient(&self) -> DVector<f64> {
        let n = self.u.len();
        let mut out = DVector::zeros(n + 1);
        out[0] = self.lapse();
        for i in 0..n {
            out[i + 1] = self.r * self.u[i];
        }
        out
    }

    /// Distance of `u` from the pole where the tangential frame is singular.
    pub fn frame_pole_distance(&self) -> f64 {
        1.0 + self.u[self.u.len() - 1]
    }

    /// Geodesic distance from the origin of ℍⁿ.
    pub fn geodesic_radius(&self) -> f64 {
        self.r.asinh()
    }
}

/// Hyperbolic metric `b` in chart coordinates at `x`.
pub fn background_metric(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let q = 1.0 + x.norm_squared();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - x[i] * x[j] / q)
}

/// `b(v, w)` at the chart point `x`.
pub fn background_inner(x: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    v.dot(w) - x.dot(v) * x.dot(w) / (1.0 + x.norm_squared())
}

fn tangential_vector(u: &[f64], a: usize) -> DVector<f64> {
    let n = u.len();
    let s = 1.0 + u[n - 1];
    let mut v = DVector::zeros(n);
    v[a] = 1.0;
    let c = u[a] / s;
    for k in 0..n {
        v[k] -= u[k] * c;
    }
    v[n - 1] -= c;
    v
}

/// Derivative of the tangential frame vector `ε_a(u)` along the direction `t`
/// of the unit sphere (the input need only be tangent to first order).
pub fn tangential_frame_derivative(u: &[f64], a: usize, t: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    let s = 1.0 + u[n - 1];
    let mut out = DVector::zeros(n);
    // ε_a = e_a − (e_n + u) u_a / s
    for k in 0..n {
        out[k] = -t[k] * u[a] / s;
    }
    let coef = -t[a] / s + u[a] * t[n - 1] / (s * s);
    for k in 0..n {
        out[k] += u[k] * coef;
    }
    out[n - 1] += coef;
    out
}

/// The orthonormal frame `f_0, …, f_{n−1}` of `b` at `p`, in chart components.
pub fn frame(p: &PolarPoint) -> Vec<DVector<f64>> {
    let n = p.dim();
    let mut out: Vec<DVector<f64>> = (0..n - 1).map(|a| tangential_vector(p.u(), a)).collect();
    out.push(DVector::from_iterator(n, p.u().iter().map(|c| c * p.lapse())));
    out
}

/// Frame matrix whose columns are the frame vectors.
pub fn frame_matrix(p: &PolarPoint) -> DMatrix<f64> {
    let cols = frame(p);
    DMatrix::from_columns(&cols)
}

/// Directional derivative `D f_j [X]` of the frame field `f_j` along the chart
/// vector `X` at `p`.
pub fn frame_field_derivative(p: &PolarPoint, j: usize, x_dir: &DVector<f64>) -> DVector<f64> {
    let n = p.dim();
    let u = DVector::from_column_slice(p.u());
    let r = p.r();
    let w = p.lapse();
    let ux = u.dot(x_dir);
    if j + 1 == n {
        x_dir * (w / r) - &u * (ux / (w * r))
    } else {
        let t = (x_dir - &u * ux) / r;
        tangential_frame_derivative(p.u(), j, &t)
    }
}

/// Connection coefficients `⟨∇_{f_i} f_j, f_k⟩` of `b` in the frame.
#[derive(Clone, Debug)]
pub struct FrameConnection {
    n: usize,
    coeffs: Vec<f64>,
}

impl FrameConnection {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeffs[(i * self.n + j) * self.n + k]
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Connection coefficients of `b` at `p`.
///
/// In chart coordinates the Christoffel symbols of `b` are `Γᵐ_ij = −x_m b_ij`,
/// so `∇_{f_i} f_j = D f_j[f_i] − δ_ij x`.
pub fn frame_connection_b(p: &PolarPoint) -> FrameConnection {
    let n = p.dim();
    let x = p.cartesian();
    let f = frame(p);
    let mut coeffs = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = frame_field_derivative(p, j, &f[i]);
            if i == j {
                v -= &x;
            }
            for k in 0..n {
                coeffs[(i * n + j) * n + k] = background_inner(&x, &v, &f[k]);
            }
        }
    }
    FrameConnection { n, coeffs }
}

/// An element `a₀V₍₀₎ + Σ aᵢV₍ᵢ₎` of the space of static potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticPotential {
    coeffs: Vec<f64>,
}

impl StaticPotential {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 4 {
            return Err(Error::usage("a static potential needs n + 1 ≥ 4 coefficients"));
        }
        Ok(StaticPotential { coeffs })
    }

    /// The basis potential `V₍ₖ₎`, `k = 0..=n`.
    pub fn basis(n: Dimension, k: usize) -> Self {
        let mut coeffs = vec![0.0; n.get() + 1];
        coeffs[k] = 1.0;
        StaticPotential { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn check(&self, p: &PolarPoint) {
        debug_assert_eq!(self.coeffs.len(), p.dim() + 1, "potential/point dimension mismatch");
    }

    /// `a₀√(1+r²) + Σᵢ aᵢ r uᵢ`.
    pub fn eval(&self, p: &PolarPoint) -> f64 {
        self.check(p);
        let spatial: f64 = self.coeffs[1..].iter().zip(p.u()).map(|(a, u)| a * u).sum();
        self.coeffs[0] * p.lapse() + p.r() * spatial
    }

    /// Frame components `(f_0(V), …, f_{n−1}(V))` of the gradient.
    pub fn grad(&self, p: &PolarPoint) -> Vec<f64> {
        self.check(p);
        let n = p.dim();
        let a = DVector::from_column_slice(&self.coeffs[1..]);
        let f = frame(p);
        let mut out: Vec<f64> = f[..n - 1].iter().map(|e| a.dot(e)).collect();
        let au: f64 = a.iter().zip(p.u()).map(|(x, y)| x * y).sum();
        out.push(self.coeffs[0] * p.r() + p.lapse() * au);
        out
    }
}

/// Lorentzian inner product `η(m1, m2) = m1₀m2₀ − Σ m1ᵢm2ᵢ`.
pub fn eta_inner(m1: &[f64], m2: &[f64]) -> Result<f64> {
    if m1.len() != m2.len() {
        return Err(Error::usage(format!(
            "eta_inner: length mismatch ({} vs {})",
            m1.len(),
            m2.len()
        )));
    }
    if m1.is_empty() {
        return Err(Error::usage("eta_inner: empty vectors"));
    }
    Ok(m1[0] * m2[0] - m1[1..].iter().zip(&m2[1..]).map(|(a, b)| a * b).sum::<f64>())
}

/// Ambient Lorentz boost of rapidity `s` in the `(x₀, x_axis)` plane, `axis ∈ 1..=n`.
pub fn lorentz_boost(n: Dimension, axis: usize, rapidity: f64) -> Result<DMatrix<f64>> {
    if axis == 0 || axis > n.get() {
        return Err(Error::usage(format!("boost axis must be in 1..={}, got {axis}", n.get())));
    }
    let mut m = DMatrix::identity(n.get() + 1, n.get() + 1);
    let (c, s) = (rapidity.cosh(), rapidity.sinh());
    m[(0, 0)] = c;
    m[(axis, axis)] = c;
    m[(0, axis)] = s;
    m[(axis, 0)] = s;
    Ok(m)
}

/// The vector `(𝔪(V₍₀₎), …, 𝔪(V₍ₙ₎))` with per-component error estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassVector {
    pub m: Vec<f64>,
    pub err: Vec<f64>,
}

impl MassVector {
    pub fn new(m: Vec<f64>, err: Vec<f64>) -> Result<Self> {
        if m.len() != err.len() {
            return Err(Error::usage("mass vector and error vector lengths differ"));
        }
        if err.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::usage("error estimates must be non-negative"));
        }
        Ok(MassVector { m, err })
    }

    /// η-norm `Q = m₀² − Σ mᵢ²`.
    pub fn eta_norm(&self) -> f64 {
        eta_inner(&self.m, &self.m).expect("same vector")
    }

    /// `max(1e-9, 3‖err‖)`.
    pub fn default_tolerance(&self) -> f64 {
        let e = self.err.iter().map(|x| x * x).sum::<f64>().sqrt();
        (3.0 * e).max(1e-9)
    }

    pub fn classify(&self) -> CausalClass {
        classify_causal(&self.m, self.default_tolerance())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalTag {
    Zero,
    TimelikeFuture,
    NullFuture,
    CausalFuture,
    Spacelike,
    TimelikePast,
    NullPast,
    CausalPast,
}

impl CausalTag {
    /// The tag of `−m` given the tag of `m`.
    pub fn time_reflection(self) -> Self {
        use CausalTag::*;
        match self {
            TimelikeFuture => TimelikePast,
            NullFuture => NullPast,
            CausalFuture => CausalPast,
            TimelikePast => TimelikeFuture,
            NullPast => NullFuture,
            CausalPast => CausalFuture,
            other => other,
        }
    }

    /// Causal and future-directed, or zero.
    pub fn is_future_or_zero(self) -> bool {
        matches!(
            self,
            CausalTag::Zero | CausalTag::TimelikeFuture | CausalTag::NullFuture | CausalTag::CausalFuture
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalClass {
    pub tag: CausalTag,
    pub tolerance: f64,
}

/// Causal character of `m` at tolerance `eps`.
///
/// `|m| < eps` is `Zero`. Otherwise `Q` is compared against the error band
/// `τ = 2·eps·|m| + eps²` (first-order propagation of an `eps` perturbation of
/// `m` into `Q`): `Q > τ` is timelike, `|Q| ≤ eps²` null, the remainder of the
/// band causal, and `Q < −τ` spacelike. The sign of `m₀` picks future or past.
pub fn classify_causal(m: &[f64], eps: f64) -> CausalClass {
    let eps = eps.max(0.0);
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tag = if norm < eps {
        CausalTag::Zero
    } else {
        let q = m[0] * m[0] - m[1..].iter().map(|x| x * x).sum::<f64>();
        let band = 2.0 * eps * norm + eps * eps;
        if q < -band || m[0] == 0.0 {
            CausalTag::Spacelike
        } else {
            let future = if q > band {
                CausalTag::TimelikeFuture
            } else if q.abs() <= eps * eps {
                CausalTag::NullFuture
            } else {
                CausalTag::CausalFuture
            };
            if m[0] > 0.0 {
                future
            } else {
                future.time_reflection()
            }
        }
    };
    CausalClass { tag, tolerance: eps }
}

/// Area `ω_k` of the unit sphere `𝕊ᵏ ⊂ ℝᵏ⁺¹`.
pub fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n3() -> Dimension {
        Dimension::new(3).unwrap()
    }

    fn e1(n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n];
        u[0] = 1.0;
        u
    }

    #[test]
    fn dimension_rejects_small() {
        assert!(Dimension::new(2).is_err());
        assert_eq!(Dimension::new(5).unwrap().get(), 5);
    }

    #[test]
    fn polar_point_renormalizes() {
        let p = PolarPoint::new(2.0, vec![3.0, 0.0, 4.0]).unwrap();
        let norm: f64 = p.u().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(PolarPoint::new(0.0, e1(3)).is_err());
        assert!(PolarPoint::new(1.0, vec![0.0; 3]).is_err());
    }

    #[test]
    fn potential_values() {
        let n = n3();
        let v0 = StaticPotential::basis(n, 0);
        let v1 = StaticPotential::basis(n, 1);
        // r → 0 is outside the chart; the value tends to 1
        let p = PolarPoint::new(1e-300, e1(3)).unwrap();
        assert!((v0.eval(&p) - 1.0).abs() < 1e-15);
        let p = PolarPoint::new(1.0, e1(3)).unwrap();
        assert!((v1.eval(&p) - 1.0).abs() < 1e-15);
        let p = PolarPoint::new(3f64.sqrt(), vec![0.2, 0.3, 0.5]).unwrap();
        assert!((v0.eval(&p) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn potential_gradients() {
        let n = n3();
        let p = PolarPoint::new(2.0, vec![0.3, -0.4, 0.5]).unwrap();
        let g = StaticPotential::basis(n, 0).grad(&p);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        assert!((g[2] - 2.0).abs() < 1e-14);
        let p = PolarPoint::new(1.0, e1(3)).unwrap();
        let g = StaticPotential::basis(n, 1).grad(&p);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        assert!((g[2] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn eta_table() {
        assert_eq!(eta_inner(&[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(eta_inner(&[0.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(eta_inner(&[1.0, 1.0, 0.0, 0.0], &[1.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(eta_inner(&[1.0, 0.0], &[1.0, 0.0, 0.0]), Err(Error::Usage(_))));
        for i in 0..5 {
            for j in 0..5 {
                let mut a = vec![0.0; 5];
                let mut b = vec![0.0; 5];
                a[i] = 1.0;
                b[j] = 1.0;
                let want = if i != j { 0.0 } else if i == 0 { 1.0 } else { -1.0 };
                assert_eq!(eta_inner(&a, &b).unwrap(), want);
            }
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_causal(&[1.0, 0.0, 0.0, 0.0], 1e-9).tag, CausalTag::TimelikeFuture);
        assert_eq!(classify_causal(&[1.0, 1.0, 0.0, 0.0], 1e-9).tag, CausalTag::NullFuture);
        assert_eq!(classify_causal(&[1.0, 2.0, 0.0, 0.0], 1e-9).tag, CausalTag::Spacelike);
        assert_eq!(classify_causal(&[0.0; 4], 1e-9).tag, CausalTag::Zero);
        assert_eq!(classify_causal(&[-1.0, 0.5, 0.0, 0.0], 1e-9).tag, CausalTag::TimelikePast);
        // inside the error band but not null to eps²
        assert_eq!(classify_causal(&[1.0, 0.9999, 0.0, 0.0], 1e-3).tag, CausalTag::CausalFuture);
    }

    #[test]
    fn connection_normal_coefficient() {
        let p = PolarPoint::new(1.0, vec![0.3, 0.1, 0.2]).unwrap();
        let c = frame_connection_b(&p);
        for a in 0..2 {
            assert!((c.get(a, 2, a) - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let p = PolarPoint::new(2.5, vec![0.1, -0.7, 0.3, 0.2]).unwrap();
        let x = p.cartesian();
        let f = frame(&p);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((background_inner(&x, &f[i], &f[j]) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    fn unit_dir(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, n)
            .prop_filter("away from zero and the frame pole", |v| {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                norm > 0.1 && 1.0 + v[v.len() - 1] / norm > 0.05
            })
    }

    proptest! {
        #[test]
        fn connection_is_antisymmetric(r in 0.05f64..50.0, u in unit_dir(4)) {
            let p = PolarPoint::new(r, u).unwrap();
            let c = frame_connection_b(&p);
            for i in 0..4 { for j in 0..4 { for k in 0..4 {
                let s = c.get(i, j, k) + c.get(i, k, j);
                prop_assert!(s.abs() < 1e-12 * (1.0 + c.get(i, j, k).abs()));
            }}}
        }

        #[test]
        fn potential_matches_ambient_coordinates(
            r in 0.01f64..100.0,
            u in unit_dir(3),
            a in prop::collection::vec(-3.0f64..3.0, 4),
        ) {
            let p = PolarPoint::new(r, u).unwrap();
            let amb = p.ambient();
            let direct: f64 = a.iter().zip(amb.iter()).map(|(c, x)| c * x).sum();
            let v = StaticPotential::new(a).unwrap().eval(&p);
            prop_assert!((v - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }

        #[test]
        fn classification_time_reflection(m in prop::collection::vec(-5.0f64..5.0, 4), eps in 0.0f64..0.5) {
            let neg: Vec<f64> = m.iter().map(|x| -x).collect();
            let a = classify_causal(&m, eps).tag;
            let b = classify_causal(&neg, eps).tag;
            prop_assert_eq!(a.time_reflection(), b);
        }

        #[test]
        fn classification_scale_invariant(m in prop::collection::vec(-5.0f64..5.0, 4), eps in 0.0f64..0.5, k in -20i32..20) {
            let s = 2f64.powi(k);
            let scaled: Vec<f64> = m.iter().map(|x| s * x).collect();
            prop_assert_eq!(classify_causal(&m, eps).tag, classify_causal(&scaled, s * eps).tag);
        }

        #[test]
        fn eta_norm_is_boost_invariant(m in prop::collection::vec(-5.0f64..5.0, 4), s in -2.0f64..2.0, axis in 1usize..4) {
            let l = lorentz_boost(n3(), axis, s).unwrap();
            let v = DVector::from_column_slice(&m);
            let w = &l * &v;
            let q0 = eta_inner(&m, &m).unwrap();
            let q1 = eta_inner(w.as_slice(), w.as_slice()).unwrap();
            let scale = 1.0 + v.norm_squared() * (2.0 * s).cosh();
            prop_assert!((q0 - q1).abs() < 1e-12 * scale);
        }
    }
}
