//! The neck ODE, its explicit constants, the threshold `Ψ(d, l)` and the
//! potential profiles `p`, `h` and their gluing.
//!
//! With `s = √(1−κ)` and `a = (n/2)s`, the model solution of
//! `κn²/4 + y² − y′ + ny = 0` on `(−∞, 0)` is
//! `y(t) = −(n/2)(1 + s·coth(a t))`, vanishing at `t₀ = ln((1−s)/(1+s))/(ns)`.

use serde::{Serialize, Serializer};

use crate::hyperbolic::Dimension;
use crate::{Error, Result};

/// Default verification tolerance of profile inequalities.
pub const PROFILE_TOLERANCE: f64 = 1e-10;
/// Bound on the pointwise residual of the `h` equation.
pub const H_RESIDUAL_TOLERANCE: f64 = 1e-8;

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain(format!("κ must lie in (0, 1), got {kappa}")));
    }
    Ok(())
}

/// Validated `(n, κ, d, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NeckParameters {
    pub n: Dimension,
    pub kappa: f64,
    pub d: f64,
    pub l: f64,
}

impl NeckParameters {
    pub fn new(n: Dimension, kappa: f64, d: f64, l: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("d must be finite and non-negative, got {d}")));
        }
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::domain(format!("l must be finite and non-negative, got {l}")));
        }
        Ok(NeckParameters { n, kappa, d, l })
    }

    pub fn t0(&self) -> f64 {
        t0(self.n, self.kappa).expect("validated κ")
    }
}

/// `y(t) = −(n/2)(1 + √(1−κ) coth((n/2)√(1−κ) t))` for `t < 0`.
pub fn y_profile(n: Dimension, kappa: f64, t: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if t == 0.0 {
        return Err(Error::domain("y is singular at t = 0"));
    }
    if !(t < 0.0) {
        return Err(Error::domain(format!("y is defined on (−∞, 0), got t = {t}")));
    }
    let nf = n.as_f64();
    let s = (1.0 - kappa).sqrt();
    let a = 0.5 * nf * s;
    Ok(-0.5 * nf * (1.0 + s / (a * t).tanh()))
}

/// `y′(t) = a²/sinh²(a t)` with `a = (n/2)√(1−κ)`.
pub fn y_derivative(n: Dimension, kappa: f64, t: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(t < 0.0) {
        return Err(Error::domain(format!("y is defined on (−∞, 0), got t = {t}")));
    }
    let a = 0.5 * n.as_f64() * (1.0 - kappa).sqrt();
    let sh = (a * t).sinh();
    Ok(a * a / (sh * sh))
}

/// `t₀ = 2/(n√(1−κ))·arccoth(−1/√(1−κ))`, always negative.
pub fn t0(n: Dimension, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let s = (1.0 - kappa).sqrt();
    // arccoth(x) = ½ ln((x+1)/(x−1)); at x = −1/s the ratio is (1−s)/(1+s).
    Ok(((1.0 - s) / (1.0 + s)).ln() / (n.as_f64() * s))
}

/// `λ(δ) = −(n/2)(1 + √(1−κ) coth((n/2)√(1−κ)(δ + t₀)))`.
///
/// Evaluated both directly and through `(n/2)·κ/(√(1−κ) coth((n/2)√(1−κ)δ) − 1)`,
/// which must agree to `1e-10` relative to `max(1, |λ|)`; the second,
/// cancellation-free form is returned. Near `δ = −t₀` the direct form loses
/// `|t₀|/|δ+t₀|` in relative accuracy, and the tolerance widens by that factor.
pub fn lambda_delta(n: Dimension, kappa: f64, delta: f64) -> Result<f64> {
    let t = t0(n, kappa)?;
    if !(delta > 0.0) {
        return Err(Error::domain(format!("δ must be positive, got {delta}")));
    }
    if !(delta + t < 0.0) {
        return Err(Error::domain(format!(
            "λ undefined for δ = {delta} ≥ −t₀ = {}; threshold is infinite",
            -t
        )));
    }
    let nf = n.as_f64();
    let s = (1.0 - kappa).sqrt();
    let a = 0.5 * nf * s;
    let first = -0.5 * nf * (1.0 + s / (a * (delta + t)).tanh());
    let second = 0.5 * nf * kappa / (s / (a * delta).tanh() - 1.0);
    let conditioning = (t / (delta + t)).abs().max(1.0);
    if (first - second).abs() > 1e-10 * conditioning * second.abs().max(1.0) {
        return Err(Error::numeric(format!("closed forms of λ disagree: {first} vs {second}")));
    }
    Ok(second)
}

/// `(1/n)·ln(1 + n/λ)`.
pub fn neighborhood_radius_bound(n: Dimension, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("λ must be positive, got {lambda}")));
    }
    let nf = n.as_f64();
    Ok((nf / lambda).ln_1p() / nf)
}

/// A threshold that may be infinite; infinity compares above every real and
/// serializes as `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Finite(f64),
    Infinite,
}

impl Threshold {
    pub fn is_finite(&self) -> bool {
        matches!(self, Threshold::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            Threshold::Finite(v) => *v,
            Threshold::Infinite => f64::INFINITY,
        }
    }

    /// `x > −Ψ`
    pub fn exceeded_by_negative(&self, x: f64) -> bool {
        match self {
            Threshold::Finite(v) => x > -v,
            Threshold::Infinite => x.is_finite(),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::Finite(v) => s.serialize_f64(*v),
            Threshold::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `Ψ(d, l)` together with the quantities that decide its branch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub params: NeckParameters,
    pub psi: Threshold,
    pub minus_t0: f64,
    pub lambda: Option<f64>,
    /// `(1/n)·ln(1 + n/λ(d))`
    pub l_bound: Option<f64>,
    /// Why the infinite branch was taken.
    pub reason: Option<String>,
}

/// `Ψ(d,l) = 2(n−1)/((n/λ(d)+1)e^{−nl} − 1)` when `d < −t₀` and
/// `l < (1/n)ln(1+n/λ(d))`, infinite otherwise.
pub fn psi_threshold(params: &NeckParameters) -> Result<ThresholdReport> {
    let n = params.n;
    let nf = n.as_f64();
    let minus_t0 = -params.t0();
    if !(params.d < minus_t0) {
        return Ok(ThresholdReport {
            params: *params,
            psi: Threshold::Infinite,
            minus_t0,
            lambda: None,
            l_bound: None,
            reason: Some(format!("d = {} ≥ −t₀ = {minus_t0}", params.d)),
        });
    }
    if params.d == 0.0 {
        // λ(0⁺) = 0: the finite branch degenerates to Ψ = 0.
        return Ok(ThresholdReport {
            params: *params,
            psi: Threshold::Finite(0.0),
            minus_t0,
            lambda: Some(0.0),
            l_bound: Some(f64::INFINITY),
            reason: None,
        });
    }
    let lambda = lambda_delta(n, params.kappa, params.d)?;
    let bound = neighborhood_radius_bound(n, lambda)?;
    // Cross-check n/λ + 1 against its simplified form.
    let s = (1.0 - params.kappa).sqrt();
    let ratio = (2.0 * s / (0.5 * nf * s * params.d).tanh() - 2.0 + params.kappa) / params.kappa;
    if (ratio - (nf / lambda + 1.0)).abs() > 1e-10 * ratio.abs().max(1.0) {
        return Err(Error::numeric(format!("n/λ + 1 cross-check failed: {ratio} vs {}", nf / lambda + 1.0)));
    }
    if !(params.l < bound) {
        return Ok(ThresholdReport {
            params: *params,
            psi: Threshold::Infinite,
            minus_t0,
            lambda: Some(lambda),
            l_bound: Some(bound),
            reason: Some(format!("l = {} ≥ (1/n)ln(1+n/λ) = {bound}", params.l)),
        });
    }
    // (n/λ+1)e^{−nl} − 1 = expm1(n(bound − l)), positive on this branch.
    let denom = (nf * (bound - params.l)).exp_m1();
    let psi = (2.0 * (nf - 1.0) / denom).min(f64::MAX);
    Ok(ThresholdReport { params: *params, psi: Threshold::Finite(psi), minus_t0, lambda: Some(lambda), l_bound: Some(bound), reason: None })
}

/// Default smoothing width `min(0.05, 0.1·(−t₀ − δ))`.
pub fn default_epsilon(n: Dimension, kappa: f64, delta: f64) -> Result<f64> {
    let t = t0(n, kappa)?;
    Ok(0.05f64.min(0.1 * (-t - delta)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileRole {
    P,
    H,
    GluedPsi,
}

/// A sampled 1-D potential with one-sided derivatives at every node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub role: ProfileRole,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub left_deriv: Vec<f64>,
    pub right_deriv: Vec<f64>,
    pub params: serde_json::Value,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("non-empty profile")
    }

    /// `max(|left|, |right|)` at node `i`.
    pub fn slope_bound(&self, i: usize) -> f64 {
        self.left_deriv[i].abs().max(self.right_deriv[i].abs())
    }

    /// `(value, |derivative| bound)` at `t`.
    ///
    /// Exact at nodes; between nodes the value is interpolated linearly and the
    /// slope bound is the larger of the two neighbouring bounds. Before the
    /// first node the profile continues constantly.
    pub fn sample_at(&self, t: f64) -> Result<(f64, f64)> {
        let tol = 1e-12 * t.abs().max(1.0);
        if t < self.t_start() - tol {
            return Ok((self.values[0], 0.0));
        }
        if t > self.t_end() + tol {
            return Err(Error::domain(format!("t = {t} beyond the profile end {}", self.t_end())));
        }
        let i = self.t.partition_point(|&x| x < t - tol);
        if i < self.len() && (self.t[i] - t).abs() <= tol {
            return Ok((self.values[i], self.slope_bound(i)));
        }
        let i = i.clamp(1, self.len() - 1);
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (t - t0) / (t1 - t0);
        let v = self.values[i - 1] * (1.0 - w) + self.values[i] * w;
        Ok((v, self.slope_bound(i - 1).max(self.slope_bound(i))))
    }

    /// CSV with columns `t,value,left_derivative,right_derivative`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value,left_derivative,right_derivative\n");
        for i in 0..self.len() {
            s.push_str(&format!("{},{},{},{}\n", self.t[i], self.values[i], self.left_deriv[i], self.right_deriv[i]));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileVerification {
    pub role: ProfileRole,
    /// Minimum over the grid of the profile's differential expression.
    pub min_expression: f64,
    pub witness_index: usize,
    pub witness_t: f64,
    /// Largest `|h² − h′ + nh|` (h-profiles only).
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub residual_tolerance: Option<f64>,
    pub range_ok: bool,
    pub pass: bool,
}

fn smoothstep(s: f64) -> f64 {
    s * s * (3.0 - 2.0 * s)
}

/// `∫₀ˢ smoothstep`
fn smoothstep_integral(s: f64) -> f64 {
    s * s * s - 0.5 * s * s * s * s
}

/// The profile `p` on `[t₀ − ε, t₀ + δ + ε]`: zero, then `y`, then `λ(δ)`,
/// with the two joints smoothed over width `w = min(ε/2, δ)`.
///
/// The smoothed profile solves `p′ = σ(t)·(κn²/4 + p² + np)` where the slope
/// factor `σ` ramps between 0 and 1 by a cubic smoothstep; it equals `y` where
/// `σ ≡ 1`. Verification uses `|p′|` from the closed-form `y′` on that piece.
pub fn build_p_profile(
    n: Dimension,
    kappa: f64,
    delta: f64,
    epsilon: f64,
    grid_size: usize,
) -> Result<(Profile, ProfileVerification)> {
    let t_0 = t0(n, kappa)?;
    let lambda = lambda_delta(n, kappa, delta)?;
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("ε must be positive, got {epsilon}")));
    }
    if !(t_0 + delta + epsilon < 0.0) {
        return Err(Error::domain(format!(
            "construction interval [t₀−ε, t₀+δ+ε] must stay in (−∞, 0); t₀+δ+ε = {}",
            t_0 + delta + epsilon
        )));
    }
    if grid_size < 2 {
        return Err(Error::usage("profiles need at least 2 grid points"));
    }
    let nf = n.as_f64();
    let s = (1.0 - kappa).sqrt();
    let c = kappa * nf * nf / 4.0;
    let (pp, pm) = (0.5 * nf * (s - 1.0), -0.5 * nf * (1.0 + s));
    let big_f = |p: f64| c + p * p + nf * p;
    let g_of = |p: f64| ((p - pp) / (p - pm)).ln() / (nf * s);
    let g_inv = |g: f64| {
        let q = (nf * s * g).exp();
        (pp - q * pm) / (1.0 - q)
    };
    let g0 = g_of(0.0);
    let w = (0.5 * epsilon).min(delta);
    let ta = t_0 - 0.5 * w;
    let tb = t_0 + delta + 0.5 * w;
    let (lo, hi) = (t_0 - epsilon, t_0 + delta + epsilon);
    let step = (hi - lo) / (grid_size - 1) as f64;
    let mut t = Vec::with_capacity(grid_size);
    let mut values = Vec::with_capacity(grid_size);
    let mut deriv = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let ti = if i + 1 == grid_size { hi } else { lo + step * i as f64 };
        let (v, d) = if ti <= ta {
            (0.0, 0.0)
        } else if ti < ta + w {
            let u = (ti - ta) / w;
            let v = g_inv(g0 + w * smoothstep_integral(u));
            (v, smoothstep(u) * big_f(v))
        } else if ti <= tb - w {
            (y_profile(n, kappa, ti)?, y_derivative(n, kappa, ti)?)
        } else if ti < tb {
            let u = (ti - (tb - w)) / w;
            let tau = delta - 0.5 * w + w * (u - smoothstep_integral(u));
            let v = g_inv(g0 + tau);
            (v, (1.0 - smoothstep(u)) * big_f(v))
        } else {
            (lambda, 0.0)
        };
        t.push(ti);
        values.push(v);
        deriv.push(d);
    }
    let params = serde_json::json!({
        "n": n.get(), "kappa": kappa, "delta": delta, "epsilon": epsilon,
        "grid_size": grid_size, "t0": t_0, "lambda": lambda, "smoothing_width": w,
    });
    let profile = Profile { role: ProfileRole::P, t, values, left_deriv: deriv.clone(), right_deriv: deriv, params };
    let verification = verify_p_profile(&profile, n, kappa, lambda);
    Ok((profile, verification))
}

/// Minimum over the grid of `κn²/4 + p² − |p′| + np`, and `0 ≤ p ≤ λ`.
pub fn verify_p_profile(profile: &Profile, n: Dimension, kappa: f64, lambda: f64) -> ProfileVerification {
    let nf = n.as_f64();
    let c = kappa * nf * nf / 4.0;
    let mut min = f64::INFINITY;
    let mut at = 0;
    for i in 0..profile.len() {
        let p = profile.values[i];
        let e = c + p * p - profile.slope_bound(i) + nf * p;
        if e < min {
            min = e;
            at = i;
        }
    }
    let slack = 1e-12 * lambda.max(1.0);
    let range_ok = profile.values.iter().all(|&v| v >= -slack && v <= lambda + slack)
        && profile.values[0] == 0.0
        && *profile.values.last().expect("non-empty") == lambda;
    ProfileVerification {
        role: ProfileRole::P,
        min_expression: min,
        witness_index: at,
        witness_t: profile.t[at],
        max_residual: None,
        tolerance: PROFILE_TOLERANCE,
        residual_tolerance: None,
        range_ok,
        pass: min >= -PROFILE_TOLERANCE && range_ok,
    }
}

/// `h̃(t) = n/((n/λ+1)e^{−nt} − 1)` on `[0, l]`.
pub fn build_h_profile(n: Dimension, lambda: f64, l: f64, grid_size: usize) -> Result<(Profile, ProfileVerification)> {
    let bound = neighborhood_radius_bound(n, lambda)?;
    if !(l >= 0.0) {
        return Err(Error::domain(format!("l must be non-negative, got {l}")));
    }
    if !(l < bound) {
        return Err(Error::domain(format!("l = {l} must be below (1/n)ln(1+n/λ) = {bound}")));
    }
    if grid_size < 2 && l > 0.0 {
        return Err(Error::usage("profiles need at least 2 grid points"));
    }
    let nf = n.as_f64();
    let ln_a = (nf / lambda).ln_1p();
    let count = if l == 0.0 { 1 } else { grid_size };
    let step = if count > 1 { l / (count - 1) as f64 } else { 0.0 };
    let mut t = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    let mut deriv = Vec::with_capacity(count);
    for i in 0..count {
        let ti = if i + 1 == count { l } else { step * i as f64 };
        let d = (ln_a - nf * ti).exp_m1();
        let v = if i == 0 { lambda } else { nf / d };
        t.push(ti);
        values.push(v);
        deriv.push(nf * nf * (d + 1.0) / (d * d));
    }
    let params = serde_json::json!({
        "n": n.get(), "lambda": lambda, "l": l, "grid_size": count, "l_bound": bound,
    });
    let profile = Profile { role: ProfileRole::H, t, values, left_deriv: deriv.clone(), right_deriv: deriv, params };
    let verification = verify_h_profile(&profile, n, lambda);
    Ok((profile, verification))
}

/// Minimum of `h² − |h′| + nh` and the largest `|h² − h′ + nh|`.
pub fn verify_h_profile(profile: &Profile, n: Dimension, lambda: f64) -> ProfileVerification {
    let nf = n.as_f64();
    let mut min = f64::INFINITY;
    let mut at = 0;
    let mut residual: f64 = 0.0;
    for i in 0..profile.len() {
        let h = profile.values[i];
        let e = h * h - profile.slope_bound(i) + nf * h;
        residual = residual.max((h * h - profile.left_deriv[i] + nf * h).abs());
        residual = residual.max((h * h - profile.right_deriv[i] + nf * h).abs());
        if e < min {
            min = e;
            at = i;
        }
    }
    let range_ok = profile.values[0] == lambda && profile.values.iter().all(|&v| v >= lambda);
    ProfileVerification {
        role: ProfileRole::H,
        min_expression: min,
        witness_index: at,
        witness_t: profile.t[at],
        max_residual: Some(residual),
        tolerance: PROFILE_TOLERANCE,
        residual_tolerance: Some(H_RESIDUAL_TOLERANCE),
        range_ok,
        pass: min >= -PROFILE_TOLERANCE && residual <= H_RESIDUAL_TOLERANCE && range_ok,
    }
}

/// `ψ = p` followed by `h`, sharing the junction node `p(end) = h(0) = λ`.
/// The variable of `h` is shifted to start at the end of `p`.
pub fn glue_neck_potential(p: &Profile, h: &Profile) -> Result<Profile> {
    if p.role != ProfileRole::P || h.role != ProfileRole::H {
        return Err(Error::usage("gluing expects a p-profile followed by an h-profile"));
    }
    if p.is_empty() || h.is_empty() {
        return Err(Error::usage("cannot glue empty profiles"));
    }
    let (pl, h0) = (*p.values.last().expect("non-empty"), h.values[0]);
    if (pl - h0).abs() > 1e-10 * pl.abs().max(1.0) {
        return Err(Error::usage(format!("junction mismatch: p ends at {pl}, h starts at {h0}")));
    }
    let shift = p.t_end() - h.t_start();
    let mut out = p.clone();
    out.role = ProfileRole::GluedPsi;
    let last = out.len() - 1;
    out.right_deriv[last] = h.right_deriv[0];
    for i in 1..h.len() {
        out.t.push(h.t[i] + shift);
        out.values.push(h.values[i]);
        out.left_deriv.push(h.left_deriv[i]);
        out.right_deriv.push(h.right_deriv[i]);
    }
    out.params = serde_json::json!({ "p": p.params, "h": h.params, "junction_t": p.t_end() });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanCurvatureVerdict {
    pub min_mean_curvature: f64,
    /// `min H + (n−1)`
    pub lhs: f64,
    pub threshold: Threshold,
    pub pass: bool,
}

/// `min H + (n−1) > −Ψ`.
pub fn mean_curvature_check(n: Dimension, h_samples: &[f64], threshold: Threshold) -> Result<MeanCurvatureVerdict> {
    if h_samples.is_empty() {
        return Err(Error::usage("mean-curvature check needs at least one sample"));
    }
    let min = h_samples.iter().copied().fold(f64::INFINITY, f64::min);
    let lhs = min + n.as_f64() - 1.0;
    Ok(MeanCurvatureVerdict { min_mean_curvature: min, lhs, threshold, pass: threshold.exceeded_by_negative(lhs) })
}
