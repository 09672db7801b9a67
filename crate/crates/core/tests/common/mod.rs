//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ahmass_core::hyperbolic::sphere_area;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Ridders' polynomial extrapolation of central differences.
/// Returns the derivative and an error estimate.
pub fn ridders(f: impl Fn(f64) -> f64, x: f64, h0: f64) -> (f64, f64) {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let mut best = a[0][0];
    let mut err = f64::MAX;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

// Charge of a radial perturbation.
//
// Take e = ε(r) ν⊗ν with ν = √(1+r²)∂_r the outward unit normal of b. Radial
// lines are b-geodesics, so ∇_ν ν = 0 and div_b ν = H_b = (n−1)√(1+r²)/r, the
// mean curvature of the coordinate spheres. Hence
//
//   div_b e(ν) = ν(ε) + ε·H_b,        d tr_b e(ν) = ν(ε),
//
// and the derivative terms cancel: div_b e − d tr_b e = (n−1)√(1+r²)ε/r on ν.
// For V₍₀₎ = √(1+r²) one has dV₍₀₎(ν) = r, so
//
//   i_{∇V} e(ν) = r ε = tr_b e · dV(ν),
//
// and those two terms cancel as well. What is left is
//
//   𝕌(V₍₀₎, e)(ν) = (n−1)(1+r²) ε / r.
//
// Schwarzschild–AdS with mass parameter m has g_rr = 1/(1 + r² − 2m r^{2−n})
// in the same radial coordinate, so g(ν,ν) = (1+r²)/(1+r²−2m r^{2−n}) and
//
//   ε = 2m r^{2−n} / (1 + r² − 2m r^{2−n}),
//   𝕌 = 2m(n−1) r^{1−n} (1+r²)/(1+r²−2m r^{2−n}).
//
// The integrand is constant on S_r. Multiplying by the area r^{n−1}ω_{n−1}
// gives
//
//   I(r) = 2m(n−1)ω_{n−1} · (1+r²)/(1+r²−2m r^{2−n}) = 2m(n−1)ω_{n−1}(1 + O(r^{−n})),
//
// with limit 2m(n−1)ω_{n−1}, i.e. 16πm for n = 3.

/// `e_nn` of Schwarzschild–AdS at radius `r`.
pub fn sads_e_nn(n: usize, m: f64, r: f64) -> f64 {
    let k = 2.0 * m * r.powi(2 - n as i32);
    k / (1.0 + r * r - k)
}

/// `𝕌(V₍₀₎, e)(ν)` of Schwarzschild–AdS.
pub fn sads_charge_integrand(n: usize, m: f64, r: f64) -> f64 {
    (n as f64 - 1.0) * (1.0 + r * r) * sads_e_nn(n, m, r) / r
}

/// Exact sphere integral `I(r)` of Schwarzschild–AdS.
pub fn sads_sphere_integral(n: usize, m: f64, r: f64) -> f64 {
    sads_charge_integrand(n, m, r) * r.powi(n as i32 - 1) * sphere_area(n - 1)
}

/// `lim I(r) = 2m(n−1)ω_{n−1}`.
pub fn sads_mass_limit(n: usize, m: f64) -> f64 {
    2.0 * m * (n as f64 - 1.0) * sphere_area(n - 1)
}

/// Sphere integral for `e_nn = A r^{−p}` (angularly constant):
/// `I(r) = (n−1)ω_{n−1} A (1+r²) r^{n−2−p}`.
pub fn power_nn_sphere_integral(n: usize, amplitude: f64, p: f64, r: f64) -> f64 {
    (n as f64 - 1.0) * sphere_area(n - 1) * amplitude * (1.0 + r * r) * r.powf(n as f64 - 2.0 - p)
}

/// `t₀` from `arccoth(x) = ½ ln((x+1)/(x−1))`.
pub fn t0_oracle(n: usize, kappa: f64) -> f64 {
    let s = (1.0 - kappa).sqrt();
    let x = -1.0 / s;
    2.0 / (n as f64 * s) * 0.5 * ((x + 1.0) / (x - 1.0)).ln()
}

/// `λ(δ) = y(δ + t₀)` evaluated from the definition.
pub fn lambda_first_form(n: usize, kappa: f64, delta: f64) -> f64 {
    let nf = n as f64;
    let s = (1.0 - kappa).sqrt();
    let a = 0.5 * nf * s;
    -0.5 * nf * (1.0 + s / (a * (delta + t0_oracle(n, kappa))).tanh())
}

/// `λ(δ)` by the addition theorem for coth, using `coth(a t₀) = −1/s`.
pub fn lambda_second_form(n: usize, kappa: f64, delta: f64) -> f64 {
    let nf = n as f64;
    let s = (1.0 - kappa).sqrt();
    let a = 0.5 * nf * s;
    0.5 * nf * kappa / (s / (a * delta).tanh() - 1.0)
}

/// `δ` with `λ(δ) = lambda`, inverting the second form.
pub fn delta_for_lambda(n: usize, kappa: f64, lambda: f64) -> f64 {
    let nf = n as f64;
    let s = (1.0 - kappa).sqrt();
    let a = 0.5 * nf * s;
    (s / (1.0 + 0.5 * nf * kappa / lambda)).atanh() / a
}

/// Seeded generator for reproducible parameter sweeps.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
