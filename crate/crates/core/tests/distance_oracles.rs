mod common;

use ahmass_core::distance::{
    build_h_profile, build_p_profile, glue_neck_potential, lambda_delta, neighborhood_radius_bound, psi_threshold,
    t0, y_derivative, y_profile, NeckParameters, Threshold,
};
use ahmass_core::hyperbolic::Dimension;
use common::*;

fn dim(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

#[test]
fn y_derivative_matches_ridders() {
    for n in 3..8 {
        for kappa in [0.1, 0.5, 0.75, 0.95] {
            for t in [-3.0, -1.0, -0.4, -0.05] {
                let (want, err) = ridders(|x| y_profile(dim(n), kappa, x).unwrap(), t, 0.01 * t.abs());
                let got = y_derivative(dim(n), kappa, t).unwrap();
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0) + 10.0 * err, "n={n} κ={kappa} t={t}");
            }
        }
    }
}

#[test]
fn y_solves_the_riccati_equation() {
    // y′ = κn²/4 + y² + ny
    for n in 3..8 {
        let nf = n as f64;
        for kappa in [0.2, 0.75] {
            for k in 1..200 {
                let t = -0.02 * k as f64;
                let y = y_profile(dim(n), kappa, t).unwrap();
                let (dy, _) = ridders(|x| y_profile(dim(n), kappa, x).unwrap(), t, 0.005);
                let rhs = kappa * nf * nf / 4.0 + y * y + nf * y;
                assert!((dy - rhs).abs() < 1e-8 * rhs.abs().max(1.0), "n={n} t={t}: {dy} vs {rhs}");
            }
        }
    }
}

#[test]
fn t0_matches_arccoth_and_is_a_root() {
    for n in 3..8 {
        for kappa in [0.05, 0.3, 0.75, 0.99] {
            let t = t0(dim(n), kappa).unwrap();
            assert!((t - t0_oracle(n, kappa)).abs() < 1e-13 * t.abs());
            assert!(y_profile(dim(n), kappa, t).unwrap().abs() < 1e-10);
        }
    }
    assert!((t0(dim(3), 0.75).unwrap() + 0.732_408_192_445_406_5).abs() < 1e-14);
}

#[test]
fn lambda_agrees_with_both_forms() {
    for n in 3..8 {
        for kappa in [0.1, 0.5, 0.75, 0.9] {
            let m = -t0_oracle(n, kappa);
            for f in [0.01, 0.2, 0.5, 0.9, 0.99] {
                let delta = f * m;
                let got = lambda_delta(dim(n), kappa, delta).unwrap();
                let a = lambda_first_form(n, kappa, delta);
                let b = lambda_second_form(n, kappa, delta);
                assert!((got - a).abs() < 1e-10 * a.abs().max(1.0), "first n={n} κ={kappa} δ={delta}");
                assert!((got - b).abs() < 1e-13 * b.abs().max(1.0));
                assert!((delta_for_lambda(n, kappa, got) - delta).abs() < 1e-9 * delta.max(1.0));
            }
        }
    }
    assert!((lambda_delta(dim(3), 0.75, 0.5).unwrap() - 2.846_262_836_537_437).abs() < 1e-12);
}

#[test]
fn threshold_matches_direct_formula() {
    for n in 3..7 {
        let nf = n as f64;
        for kappa in [0.3, 0.75] {
            let m = -t0_oracle(n, kappa);
            for d in [0.1 * m, 0.5 * m, 0.9 * m] {
                let lam = lambda_first_form(n, kappa, d);
                let bound = (1.0 + nf / lam).ln() / nf;
                for l in [0.0, 0.3 * bound, 0.8 * bound] {
                    let rep = psi_threshold(&NeckParameters::new(dim(n), kappa, d, l).unwrap()).unwrap();
                    let want = 2.0 * (nf - 1.0) / ((nf / lam + 1.0) * (-nf * l).exp() - 1.0);
                    match rep.psi {
                        Threshold::Finite(v) => assert!((v - want).abs() < 1e-9 * want, "{v} vs {want}"),
                        Threshold::Infinite => panic!("unexpected infinite branch"),
                    }
                    // l = 0 reduces to 2(n−1)λ/n.
                    if l == 0.0 {
                        assert!((rep.psi.value() - 2.0 * (nf - 1.0) * lam / nf).abs() < 1e-9 * lam);
                    }
                }
                let rep = psi_threshold(&NeckParameters::new(dim(n), kappa, d, 1.01 * bound).unwrap()).unwrap();
                assert_eq!(rep.psi, Threshold::Infinite);
            }
            let edge = -t0(dim(n), kappa).unwrap();
            let rep = psi_threshold(&NeckParameters::new(dim(n), kappa, edge, 0.0).unwrap()).unwrap();
            assert_eq!(rep.psi, Threshold::Infinite);
            assert_eq!(rep.minus_t0, edge);
            // Just below the edge λ blows up but stays finite.
            let below = edge * (1.0 - 1e-9);
            let rep = psi_threshold(&NeckParameters::new(dim(n), kappa, below, 0.0).unwrap()).unwrap();
            assert!(rep.psi.is_finite() && rep.psi.value() > 1e6, "{:?}", rep.psi);
        }
    }
    let rep = psi_threshold(&NeckParameters::new(dim(3), 0.75, 0.5, 0.1).unwrap()).unwrap();
    assert!((rep.psi.value() - 7.667_965_318_053_08).abs() < 1e-9);
    assert!((rep.l_bound.unwrap() - 0.239_931_925_791_630).abs() < 1e-12);
}

#[test]
fn h_profile_matches_closed_form_and_its_ode() {
    let n = 3;
    let nf = 3.0;
    let lam = lambda_delta(dim(n), 0.75, 0.5).unwrap();
    let bound = neighborhood_radius_bound(dim(n), lam).unwrap();
    let (h, ver) = build_h_profile(dim(n), lam, 0.9 * bound, 501).unwrap();
    assert!(ver.pass, "{ver:?}");
    let oracle = |t: f64| nf / ((nf / lam + 1.0) * (-nf * t).exp() - 1.0);
    for i in (0..h.len()).step_by(25) {
        let t = h.t[i];
        assert!((h.values[i] - oracle(t)).abs() < 1e-10 * oracle(t));
        if t > 1e-3 && t < 0.9 * bound - 1e-3 {
            let (d, _) = ridders(oracle, t, 1e-3);
            assert!((h.right_deriv[i] - d).abs() < 1e-7 * d, "t={t}");
        }
    }
    assert!((oracle(0.1) - 5.750_973_988_539_81).abs() < 1e-10);
}

#[test]
fn p_profile_pieces() {
    let (n, kappa, delta) = (3, 0.75, 0.5);
    let eps = 0.02;
    let (p, ver) = build_p_profile(dim(n), kappa, delta, eps, 4001).unwrap();
    assert!(ver.pass, "{ver:?}");
    let t_0 = t0_oracle(n, kappa);
    let w = (0.5 * eps).min(delta);
    let lam = lambda_second_form(n, kappa, delta);
    for i in 0..p.len() {
        let t = p.t[i];
        if t <= t_0 - 0.5 * w {
            assert_eq!(p.values[i], 0.0);
        } else if t >= t_0 + 0.5 * w && t <= t_0 + delta - 0.5 * w {
            let y = lambda_first_form(n, kappa, t - t_0);
            assert!((p.values[i] - y).abs() < 1e-10 * y.abs().max(1.0), "t={t}");
        } else if t >= t_0 + delta + 0.5 * w {
            assert_eq!(p.values[i], lam);
        }
    }
    // Recorded derivatives agree with five-point differences of the samples,
    // away from the joints where p″ jumps.
    let h = p.t[1] - p.t[0];
    let joints = [t_0 - 0.5 * w, t_0 + 0.5 * w, t_0 + delta - 0.5 * w, t_0 + delta + 0.5 * w];
    let mut checked = 0;
    for i in 2..p.len() - 2 {
        if joints.iter().any(|&j| (p.t[i] - j).abs() < 2.5 * h) {
            continue;
        }
        let v = &p.values;
        let fd = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
        assert!((fd - p.right_deriv[i]).abs() < 1e-4 * (1.0 + p.right_deriv[i].abs()), "i={i}: {fd} vs {}", p.right_deriv[i]);
        checked += 1;
    }
    assert!(checked > p.len() - 30);
    // Gluing shares the junction node and keeps h's slope on the right.
    let bound = neighborhood_radius_bound(dim(n), lam).unwrap();
    let (hp, _) = build_h_profile(dim(n), lam, 0.5 * bound, 101).unwrap();
    let g = glue_neck_potential(&p, &hp).unwrap();
    assert_eq!(g.len(), p.len() + hp.len() - 1);
    let j = p.len() - 1;
    assert_eq!(g.values[j], lam);
    assert_eq!(g.left_deriv[j], 0.0);
    assert_eq!(g.right_deriv[j], hp.right_deriv[0]);
    assert!((g.t_end() - (p.t_end() + 0.5 * bound)).abs() < 1e-14);
}
