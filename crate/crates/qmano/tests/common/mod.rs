//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use qmano::jsfamily::{LocalData, MonodromyMatrix, Pair};
use qmano::qcore::{annulus_rep, QParam};
use qmano::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The three bases used by the special-function suites.
pub fn test_bases() -> [QParam; 3] {
    [
        QParam::new(c(0.5)).unwrap(),
        QParam::new(C64::new(0.3, 0.1)).unwrap(),
        QParam::new(C64::from_polar(0.8, 0.3)).unwrap(),
    ]
}

/// Bilateral theta series summed term by term over `|n| <= terms`, without any
/// reduction of the argument.
pub fn naive_theta(q: C64, x: C64, terms: i32) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for n in -terms..=terms {
        let e = n * (n - 1) / 2;
        let qn = q.powi(e);
        let xn = if n >= 0 { x.powi(n) } else { (1.0 / x).powi(-n) };
        s += qn * xn;
    }
    s
}

/// `Π_{i<n} (1 - a q^i)` as a plain loop.
pub fn naive_pochhammer(q: C64, a: C64, n: usize) -> C64 {
    (0..n).fold(c(1.0), |acc, i| acc * (1.0 - a * q.powi(i as i32)))
}

/// A point of the fundamental annulus, uniform in `ln|x|` over its interior band and in
/// argument.
pub fn annulus_point<R: Rng + ?Sized>(rng: &mut R, qp: &QParam) -> C64 {
    let r = qp.q.norm().powf(0.02 + 0.96 * rng.random::<f64>());
    C64::from_polar(r, 2.0 * PI * rng.random::<f64>())
}

/// A point of the fundamental annulus at distance at least `gap` from the zero spiral
/// `-q^Z` of `θ_q`.
pub fn regular_point<R: Rng + ?Sized>(rng: &mut R, qp: &QParam, gap: f64) -> C64 {
    loop {
        let x = annulus_point(rng, qp);
        if spiral_distance(qp, x, c(-1.0)) >= gap {
            return x;
        }
    }
}

/// Distance in the annulus from `x` to the class of `s` (both boundary copies included).
pub fn spiral_distance(qp: &QParam, x: C64, s: C64) -> f64 {
    let xv = annulus_rep(qp, x).value;
    let sv = annulus_rep(qp, s).value;
    [sv, sv * qp.q, sv / qp.q].iter().map(|t| (xv - t).norm()).fold(f64::INFINITY, f64::min)
}

/// A unit-order complex number with modulus in `[0.5, 1.5)`.
pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(0.5 + rng.random::<f64>(), 2.0 * PI * rng.random::<f64>())
}

/// The twelve special points `Ξ' ∪ Ξ'' ∪ Υ` of a pair.
pub fn special_points(local: &LocalData, p: Pair) -> Vec<C64> {
    let mut out: Vec<C64> = local.xi_prime(p).iter().map(|z| z.value).collect();
    out.extend(local.xi_dblprime(p).iter().map(|z| z.value));
    out.extend(local.upsilon(p).iter().map(|z| z.value));
    out
}

/// `ξ` uniform in area on the fundamental annulus, at distance at least `gap` from every
/// special point of the pair.
pub fn sample_xi<R: Rng + ?Sized>(rng: &mut R, local: &LocalData, p: Pair, gap: f64) -> C64 {
    let qp = &local.qp;
    let rq2 = qp.q.norm_sqr();
    let specials = special_points(local, p);
    loop {
        let r = (rq2 + (1.0 - rq2) * rng.random::<f64>()).sqrt();
        let xi = C64::from_polar(r, PI * (2.0 * rng.random::<f64>() - 1.0));
        if r <= qp.q.norm() * (1.0 + 1e-9) {
            continue;
        }
        if specials.iter().all(|s| spiral_distance(qp, xi, *s) >= gap) {
            return xi;
        }
    }
}

/// Points on `|x| = |q|^{1/2}` shared by entrywise comparisons.
pub fn probe_points(qp: &QParam, n: usize) -> Vec<C64> {
    let r = qp.q.norm().sqrt();
    (0..n).map(|t| C64::from_polar(r, 2.0 * PI * (t as f64 + 0.31) / n as f64)).collect()
}

/// Largest entrywise relative difference of two matrices over the probe points, each
/// entry measured against its own maximum modulus.
pub fn matrix_distance(a: &MonodromyMatrix, b: &MonodromyMatrix) -> f64 {
    let pts = probe_points(&a.local.qp, 12);
    let va: Vec<_> = pts.iter().map(|x| a.eval(*x).unwrap()).collect();
    let vb: Vec<_> = pts.iter().map(|x| b.eval(*x).unwrap()).collect();
    let mut worst = 0.0f64;
    for k in 0..2 {
        for l in 0..2 {
            let scale = vb.iter().map(|v| v[k][l].norm()).fold(0.0, f64::max);
            let diff = va.iter().zip(&vb).map(|(u, v)| (u[k][l] - v[k][l]).norm()).fold(0.0, f64::max);
            worst = worst.max(diff / scale);
        }
    }
    worst
}
