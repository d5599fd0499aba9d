//! The Fricke cubic surface: coefficients, gradient, lines, smoothness, fibers, Jimbo
//! parameterisation and involutions.

mod common;

use common::{c, rng, unit};
use qmano::fricke::{
    a_to_coeffs, classify_fiber, fricke_eval, goldman_bracket, gradient_determinant, involution, jimbo_param,
    lines_24, orbit, smoothness, two_line_values, FiberClass, Line, SurfacePoint, ThetaParams, Var,
};
use qmano::C64;
use rand::Rng;

fn random_params<R: Rng>(g: &mut R) -> ThetaParams {
    ThetaParams::from_e([unit(g), unit(g), unit(g), unit(g)]).unwrap()
}

/// A point of the surface: random `X_0, X_t`, then a root of the quadratic in `X_1`.
fn surface_point<R: Rng>(g: &mut R, a: &[C64; 4]) -> [C64; 3] {
    let cf = a_to_coeffs(a).a;
    let (x0, xt) = (unit(g) * 1.5, unit(g) * 1.5);
    let b = x0 * xt - cf[2];
    let k = x0 * x0 + xt * xt - cf[0] * x0 - cf[1] * xt + cf[3];
    let x1 = (-b + (b * b - 4.0 * k).sqrt()) / 2.0;
    [x0, xt, x1]
}

fn on_line(l: &Line, x: &[C64; 3], tol: f64) -> bool {
    let (i, j) = l.k.others();
    (x[l.k.index()] - l.constant).norm() <= tol
        && (l.u * x[i.index()] + l.v * x[j.index()] - l.w).norm() <= tol * (1.0 + l.w.norm())
}

#[test]
fn coefficient_examples() {
    assert_eq!(a_to_coeffs(&[c(0.0); 4]).a, [c(0.0), c(0.0), c(0.0), c(-4.0)]);
    assert_eq!(a_to_coeffs(&[c(2.0); 4]).a, [c(8.0), c(8.0), c(8.0), c(28.0)]);
    let mut g = rng(70);
    let a = [unit(&mut g), unit(&mut g), unit(&mut g), unit(&mut g)];
    let base = a_to_coeffs(&a).a;
    // A_0 = a_0a_∞ + a_ta_1 is unchanged by swapping t and 1
    let swapped = a_to_coeffs(&[a[0], a[2], a[1], a[3]]).a;
    assert!((swapped[0] - base[0]).norm() < 1e-15);
    assert!((swapped[1] - base[2]).norm() < 1e-15);
    assert!((swapped[3] - base[3]).norm() < 1e-14);
}

#[test]
fn cayley_point() {
    let (f, _) = fricke_eval(&[c(0.0), c(0.0), c(2.0)], &[c(0.0); 4]);
    assert_eq!(f, c(0.0));
    let tp = ThetaParams::from_e([C64::new(0.0, 1.0); 4]).unwrap();
    assert!(tp.a.iter().all(|v| v.norm() < 1e-15));
}

#[test]
fn gradient_matches_finite_differences() {
    let mut g = rng(71);
    for _ in 0..20 {
        let tp = random_params(&mut g);
        let x = [unit(&mut g), unit(&mut g), unit(&mut g)];
        let (_, grad) = fricke_eval(&x, &tp.a);
        for i in 0..3 {
            let h = 1e-6;
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            let fd = (fricke_eval(&xp, &tp.a).0 - fricke_eval(&xm, &tp.a).0) / (2.0 * h);
            assert!((fd - grad[i]).norm() < 1e-6 * (1.0 + grad[i].norm()));
        }
    }
}

#[test]
fn determinant_identity() {
    let mut g = rng(72);
    for _ in 0..20 {
        let tp = random_params(&mut g);
        let x = surface_point(&mut g, &tp.a);
        let (f, grad) = fricke_eval(&x, &tp.a);
        assert!(f.norm() < 1e-10 * (1.0 + grad.iter().map(|v| v.norm_sqr()).sum::<f64>()));
        for k in Var::ALL {
            let d = gradient_determinant(&x, &tp.a, k);
            let gk = grad[k.index()];
            assert!((d - gk * gk).norm() < 1e-9 * (1.0 + gk.norm_sqr()));
        }
        // off the surface the determinant is F_{X_k}² - 4F
        let y = [x[0] + 0.3, x[1], x[2]];
        let (f, grad) = fricke_eval(&y, &tp.a);
        let d = gradient_determinant(&y, &tp.a, Var::One);
        assert!((d - (grad[2] * grad[2] - 4.0 * f)).norm() < 1e-9 * (1.0 + d.norm()));
    }
}

#[test]
fn goldman_bracket_conventions() {
    let mut g = rng(73);
    for _ in 0..20 {
        let tp = random_params(&mut g);
        let x = [unit(&mut g), unit(&mut g), unit(&mut g)];
        let (_, grad) = fricke_eval(&x, &tp.a);
        assert_eq!(goldman_bracket(&x, &tp.a, Var::Zero, Var::T), grad[2]);
        assert_eq!(goldman_bracket(&x, &tp.a, Var::T, Var::One), grad[0]);
        assert_eq!(goldman_bracket(&x, &tp.a, Var::One, Var::Zero), grad[1]);
        for i in Var::ALL {
            assert_eq!(goldman_bracket(&x, &tp.a, i, i), c(0.0));
            for j in Var::ALL {
                assert_eq!(goldman_bracket(&x, &tp.a, i, j), -goldman_bracket(&x, &tp.a, j, i));
            }
        }
    }
}

#[test]
fn lines_lie_on_the_surface_and_are_distinct() {
    let mut g = rng(74);
    for _ in 0..10 {
        let tp = random_params(&mut g);
        let lines = lines_24(&tp);
        assert_eq!(lines.len(), 24);
        for l in &lines {
            for t in 0..5 {
                let x = l.point(C64::new(t as f64 - 2.0, 0.5 * t as f64));
                let (f, _) = fricke_eval(&x, &tp.a);
                let s = qmano::fricke::fricke_scale(&x, &tp.a);
                assert!(f.norm() < 1e-10 * s, "{:?}", l.family);
            }
            assert!(l.duplicate_of.is_none());
        }
        assert!(smoothness(&tp).smooth && smoothness(&tp).lines_distinct);
    }
}

#[test]
fn reducible_parameters_give_duplicate_lines() {
    let i = C64::new(0.0, 1.0);
    let tp = ThetaParams::from_e([i, i, i, i]).unwrap();
    let rep = smoothness(&tp);
    assert!(!rep.smooth);
    assert!(!rep.lines_distinct);
    assert!(rep.products.iter().any(|p| p.signs == [-1, 1, -1] && p.equals_one));

    let mut g = rng(75);
    let (e0, et, e1) = (unit(&mut g), unit(&mut g), unit(&mut g));
    let tp = ThetaParams::from_e([e0, et, e1, 1.0 / (e0 * et * e1)]).unwrap();
    let rep = smoothness(&tp);
    assert!(!rep.smooth && !rep.lines_distinct);
}

#[test]
fn resonant_trace_is_flagged() {
    let mut g = rng(76);
    let tp = ThetaParams::from_e([c(1.0), unit(&mut g), unit(&mut g), unit(&mut g)]).unwrap();
    assert!((tp.a[0] - 2.0).norm() < 1e-15);
    let rep = smoothness(&tp);
    assert_eq!(rep.resonant, [true, false, false, false]);
    assert!(!rep.smooth);
}

/// Newton iteration on `∇F = 0` from many starts; returns the smallest relative `|F|` at a
/// converged critical point.
fn min_critical_value<R: Rng>(g: &mut R, a: &[C64; 4], starts: usize) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let mut x = [unit(g) * 2.0, unit(g) * 2.0, unit(g) * 2.0];
        for _ in 0..60 {
            let (_, gr) = fricke_eval(&x, a);
            let h = nalgebra::Matrix3::new(c(2.0), x[2], x[1], x[2], c(2.0), x[0], x[1], x[0], c(2.0));
            let Some(inv) = h.try_inverse() else { break };
            let step = inv * nalgebra::Vector3::new(gr[0], gr[1], gr[2]);
            for k in 0..3 {
                x[k] -= step[k];
            }
            if step.norm() < 1e-14 * (1.0 + x.iter().map(|v| v.norm()).sum::<f64>()) {
                break;
            }
        }
        let (f, gr) = fricke_eval(&x, a);
        let s = qmano::fricke::fricke_scale(&x, a);
        if gr.iter().all(|v| v.norm() < 1e-10 * s) {
            best = best.min(f.norm() / s);
        }
    }
    best
}

#[test]
fn smoothness_agrees_with_a_search_for_singular_points() {
    let mut g = rng(77);
    for _ in 0..3 {
        let tp = random_params(&mut g);
        assert!(smoothness(&tp).smooth);
        assert!(min_critical_value(&mut g, &tp.a, 300) > 1e-8);
    }
    let i = C64::new(0.0, 1.0);
    let tp = ThetaParams::from_e([i, i, i, i]).unwrap();
    assert!(min_critical_value(&mut g, &tp.a, 300) < 1e-10);
}

#[test]
fn fiber_classification() {
    let mut g = rng(78);
    let tp = random_params(&mut g);
    assert_eq!(classify_fiber(&tp, c(2.0)), FiberClass::Parabola);
    assert_eq!(classify_fiber(&tp, c(-2.0)), FiberClass::Parabola);
    let (et, e1) = (tp.e[1], tp.e[2]);
    let special = et / e1 + e1 / et;
    match classify_fiber(&tp, special) {
        FiberClass::TwoLines { lines } => {
            assert_eq!(lines.len(), 2);
            for l in &lines {
                assert_eq!(l.k, Var::Zero);
                assert!((l.constant - special).norm() < 1e-12);
            }
        }
        other => panic!("{other:?}"),
    }
    for v in two_line_values(&tp, Var::Zero) {
        let FiberClass::TwoLines { lines } = classify_fiber(&tp, v) else { panic!("{v}") };
        assert!(!lines.is_empty());
        assert!(lines.iter().all(|l| (l.constant - v).norm() < 1e-12));
    }

    // a random value: over a random X_t, the conic meets the line in two distinct points
    let cf = a_to_coeffs(&tp.a).a;
    let x0 = unit(&mut g) * 3.0;
    assert_eq!(classify_fiber(&tp, x0), FiberClass::GenericConic);
    let xt = unit(&mut g);
    let b = x0 * xt - cf[2];
    let k = x0 * x0 + xt * xt - cf[0] * x0 - cf[1] * xt + cf[3];
    let disc = b * b - 4.0 * k;
    assert!(disc.norm() > 1e-6);
    for sgn in [1.0, -1.0] {
        let x1 = (-b + sgn * disc.sqrt()) / 2.0;
        assert!(SurfacePoint::new([x0, xt, x1], &tp.a).on_surface);
    }
}

#[test]
fn jimbo_parameterisation() {
    let mut g = rng(79);
    for _ in 0..100 {
        let tp = random_params(&mut g);
        let x1 = unit(&mut g) * 2.5;
        let s = unit(&mut g);
        let (x0, xt) = jimbo_param(&tp.a, x1, s).unwrap();
        let x = [x0, xt, x1];
        let (f, _) = fricke_eval(&x, &tp.a);
        assert!(f.norm() <= 1e-9 * qmano::fricke::fricke_scale(&x, &tp.a));
        assert!(!lines_24(&tp).iter().any(|l| on_line(l, &x, 1e-9)));
        let (y0, yt) = jimbo_param(&tp.a, x1, s * C64::new(1.3, 0.2)).unwrap();
        assert!((y0 - x0).norm() + (yt - xt).norm() > 1e-8);
    }
}

#[test]
fn jimbo_rejects_excluded_fibers() {
    let mut g = rng(80);
    let tp = random_params(&mut g);
    assert!(jimbo_param(&tp.a, c(2.0), c(1.0)).is_err());
    assert!(jimbo_param(&tp.a, c(-2.0), c(1.0)).is_err());
    assert!(jimbo_param(&tp.a, c(0.3), c(0.0)).is_err());
    for v in two_line_values(&tp, Var::One) {
        let err = jimbo_param(&tp.a, v, c(1.0)).unwrap_err();
        assert!(err.to_string().contains("two lines"));
    }
}

#[test]
fn involutions() {
    let mut g = rng(81);
    for _ in 0..20 {
        let tp = random_params(&mut g);
        let x = surface_point(&mut g, &tp.a);
        for l in Var::ALL {
            let y = involution(&x, &tp.a, l);
            assert!(y.on_surface);
            let back = involution(&y.x, &tp.a, l);
            for k in 0..3 {
                assert!((back.x[k] - x[k]).norm() < 1e-12 * (1.0 + x[k].norm()));
            }
        }
    }
}

#[test]
fn orbits_are_long_on_a_smooth_surface() {
    let tp = ThetaParams::from_e([
        C64::from_polar(1.0, 0.7),
        C64::from_polar(1.0, 1.9),
        C64::from_polar(1.0, 2.6),
        C64::from_polar(1.0, 0.4),
    ])
    .unwrap();
    assert!(smoothness(&tp).smooth);
    // real traces and a real starting point keep the orbit on the real slice
    let x0 = c(0.3);
    let xt = c(-0.2);
    let cf = a_to_coeffs(&tp.a).a;
    let b = x0 * xt - cf[2];
    let k = x0 * x0 + xt * xt - cf[0] * x0 - cf[1] * xt + cf[3];
    let x1 = (-b + (b * b - 4.0 * k).sqrt()) / 2.0;
    let pts = orbit(&[x0, xt, x1], &tp.a, 80);
    let mut distinct: Vec<[C64; 3]> = Vec::new();
    for p in &pts {
        assert!(p.on_surface || p.x.iter().any(|v| v.norm() > 1e6));
        if !distinct.iter().any(|d| (0..3).all(|k| (d[k] - p.x[k]).norm() < 1e-8)) {
            distinct.push(p.x);
        }
    }
    assert!(distinct.len() > 50, "{}", distinct.len());
}

#[test]
fn theta_params_json() {
    let tp: ThetaParams = serde_json::from_str(r#"{"e": [[0,1],[0,1],[0,1],[0,1]]}"#).unwrap();
    assert!(tp.a.iter().all(|v| v.norm() < 1e-15));
    let bad = r#"{"e": [[1,0],[1,0],[1,0],[1,0]], "a": [[3,0],[2,0],[2,0],[2,0]]}"#;
    assert!(serde_json::from_str::<ThetaParams>(bad).is_err());
}
