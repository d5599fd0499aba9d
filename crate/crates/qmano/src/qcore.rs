//! Complex q-special functions.
//!
//! Everything here is built on the theta function
//! `θ_q(x) = Σ_{n∈Z} q^{n(n-1)/2} x^n`, which satisfies
//! `θ_q(qx) = θ_q(x)/x = θ_q(1/x)` and has simple zeros exactly on the spiral `-q^Z`.
//! Arguments are first reduced into the fundamental annulus `C_q = { |q| < |z| <= 1 }`
//! with the functional equation. There the bilateral series is summed, unless its terms
//! cancel heavily (near a zero, or for `|q|` close to 1), in which case the Jacobi triple
//! product is used.

use crate::{QError, QResult, C64};
use serde::{Deserialize, Serialize};

/// Relative width of the band around the annulus boundary inside which a representative
/// is flagged as `near_boundary`.
const BOUNDARY_BAND: f64 = 1e-12;

/// Hard cap on the number of series terms per side.
const SERIES_BUDGET: usize = 4000;

/// The base `q` together with the default comparison tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParam {
    /// The base, with `0 < |q| < 1`.
    pub q: C64,
    /// Default tolerance for numerical equality tests.
    pub tol_eq: f64,
    /// Relative tolerance used when matching annulus representatives.
    pub tol_cong: f64,
}

impl QParam {
    /// Default numerical equality tolerance.
    pub const DEFAULT_TOL_EQ: f64 = 1e-10;
    /// Default congruence-match tolerance.
    pub const DEFAULT_TOL_CONG: f64 = 1e-9;

    /// Builds a parameter set with default tolerances.
    pub fn new(q: C64) -> QResult<Self> {
        Self::with_tolerances(q, Self::DEFAULT_TOL_EQ, Self::DEFAULT_TOL_CONG)
    }

    /// Builds a parameter set with explicit tolerances.
    pub fn with_tolerances(q: C64, tol_eq: f64, tol_cong: f64) -> QResult<Self> {
        let r = q.norm();
        if !(r > 0.0 && r < 1.0) || !r.is_finite() {
            return Err(QError::Domain(format!("|q| must lie in (0,1), got |q| = {r}")));
        }
        for (name, t) in [("tol_eq", tol_eq), ("tol_cong", tol_cong)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(QError::Domain(format!("{name} must be finite and positive, got {t}")));
            }
        }
        Ok(Self { q, tol_eq, tol_cong })
    }

    /// `q^m` for an integer exponent.
    pub fn pow(&self, m: i64) -> C64 {
        qpow(self.q, m)
    }

    /// `ln |q|` (negative).
    pub fn ln_abs(&self) -> f64 {
        self.q.norm().ln()
    }
}

/// `q^m` by binary exponentiation on 64-bit exponents.
pub fn qpow(q: C64, m: i64) -> C64 {
    let base = if m < 0 { q.inv() } else { q };
    let mut e = m.unsigned_abs();
    let mut acc = C64::new(1.0, 0.0);
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

/// A representative of a class of `C^*/q^Z` in the fundamental annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPoint {
    /// The representative, with `|q| < |value| <= 1`.
    #[serde(with = "crate::cser::c64")]
    pub value: C64,
    /// The integer `k` with `original = value * q^k`.
    pub shift: i64,
    /// Set when `|value|` lies within a relative band of `1e-12` of either boundary circle.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub near_boundary: bool,
}

impl AnnulusPoint {
    /// Reconstructs the original point `value * q^shift`.
    pub fn original(&self, qp: &QParam) -> C64 {
        self.value * qp.pow(self.shift)
    }
}

/// Reduces `x` into `C_q`: returns `(v, m)` with `x = v q^m` and `|q| < |v| <= 1`.
fn reduce(qp: &QParam, x: C64) -> (C64, i64) {
    let lq = qp.ln_abs();
    let t = x.norm().ln() / lq;
    let mut m = t.floor() as i64;
    let mut v = x * qp.pow(-m);
    let rq = qp.q.norm();
    for _ in 0..4 {
        if v.norm() > 1.0 {
            v *= qp.q;
            m -= 1;
        } else if v.norm() <= rq {
            v /= qp.q;
            m += 1;
        } else {
            break;
        }
    }
    (v, m)
}

/// Annulus representative `R(x)` of a nonzero complex number.
///
/// Boundary convention: `|value| = 1` is inside, `|value| = |q|` is outside.
pub fn annulus_rep(qp: &QParam, x: C64) -> AnnulusPoint {
    let (v, m) = reduce(qp, x);
    let lv = v.norm().ln();
    let lq = qp.ln_abs();
    let near = lv.abs() <= BOUNDARY_BAND * lq.abs() || (lv - lq).abs() <= BOUNDARY_BAND * lq.abs();
    AnnulusPoint { value: v, shift: m, near_boundary: near }
}

/// Returns `k` with `a ≈ b q^k` (relative tolerance `tol_cong`), or `None`.
pub fn congruent(qp: &QParam, a: C64, b: C64) -> Option<i64> {
    let ra = annulus_rep(qp, a);
    let rb = annulus_rep(qp, b);
    let tol = qp.tol_cong * ra.value.norm();
    let base = ra.shift - rb.shift;
    if (ra.value - rb.value).norm() <= tol {
        return Some(base);
    }
    // Representatives straddling the boundary circle of the annulus.
    if (ra.value - rb.value * qp.q).norm() <= tol {
        return Some(base + 1);
    }
    if (ra.value * qp.q - rb.value).norm() <= tol * qp.q.norm() {
        return Some(base - 1);
    }
    None
}

/// Value and first two derivatives of `θ_q` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaJet {
    pub value: C64,
    pub d1: C64,
    pub d2: C64,
}

/// Number of terms per side so that `|q|^{N(N-1)/2} < 1e-18`.
fn series_len(qp: &QParam) -> QResult<usize> {
    let target = 18.0 * std::f64::consts::LN_10 / (-qp.ln_abs());
    // N(N-1)/2 > target
    let n = ((1.0 + (1.0 + 8.0 * target).sqrt()) / 2.0).ceil() as usize + 1;
    if n > SERIES_BUDGET {
        return Err(QError::Convergence(format!(
            "theta series needs {n} terms per side for |q| = {} (budget {SERIES_BUDGET})",
            qp.q.norm()
        )));
    }
    Ok(n)
}

/// Largest tolerated ratio between the sum of the moduli of the series terms and the
/// modulus of the sum, before the product form is used instead.
const CANCELLATION_LIMIT: f64 = 1000.0;

/// Sums the series and its termwise derivatives at a point of the annulus, together with
/// the sum of the moduli of the terms.
fn theta_series(qp: &QParam, v: C64, n: usize) -> (ThetaJet, f64) {
    let q = qp.q;
    let vinv = v.inv();
    // positive side: t_k = q^{k(k-1)/2} v^k, k >= 0
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0);
    let mut s2 = C64::new(0.0, 0.0);
    let mut a0 = 0.0f64;
    let mut t = C64::new(1.0, 0.0);
    let mut qk = C64::new(1.0, 0.0);
    for k in 0..=n {
        let kf = k as f64;
        s0 += t;
        s1 += t * kf;
        s2 += t * (kf * (kf - 1.0));
        a0 += t.l1_norm();
        t *= qk * v;
        qk *= q;
    }
    // negative side: u_k = q^{k(k+1)/2} v^{-k}, k >= 1
    let mut u = q * vinv;
    let mut qk = q * q;
    for k in 1..=n {
        let kf = k as f64;
        s0 += u;
        s1 -= u * kf;
        s2 += u * (kf * (kf + 1.0));
        a0 += u.l1_norm();
        u *= qk * vinv;
        qk *= q;
    }
    (ThetaJet { value: s0, d1: s1 * vinv, d2: s2 * vinv * vinv }, a0)
}

/// The jet from the triple product `(q;q)_∞ (1 + v)(1 + q/v) R(v)` with
/// `R(v) = Π_{k≥1} (1 + v q^k)(1 + q^{k+1}/v)`. In the annulus only `1 + v` and `1 + q/v`
/// can vanish; they are differentiated directly and `R` through its logarithmic
/// derivatives, so no term cancels except at a genuine zero.
fn theta_product_jet(qp: &QParam, v: C64) -> ThetaJet {
    let q = qp.q;
    let one = C64::new(1.0, 0.0);
    let vinv = v.inv();
    let mut r = one;
    let (mut l1, mut l2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    // factors 1 + v q^k and 1 + q^{k+1}/v for k >= 1
    let mut qk = q;
    while qk.norm_sqr() >= 1e-34 {
        let a = one + v * qk;
        let ra = qk / a;
        r *= a;
        l1 += ra;
        l2 -= ra * ra;
        let qk1 = qk * q;
        let b = one + qk1 * vinv;
        let rb = qk1 * vinv / b;
        r *= b;
        // d/dv log(1 + c/v) = -c/(v² + c v); d²/dv² = c(2v + c)/(v² + c v)²
        l1 -= rb * vinv;
        l2 += rb * vinv * vinv * (2.0 * one - rb);
        qk = qk1;
    }
    let c = pochhammer(qp, q, PochhammerOrder::Infinite);
    let g = (one + v) * (one + q * vinv);
    let g1 = one - q * vinv * vinv;
    let g2 = 2.0 * q * vinv * vinv * vinv;
    let r1 = r * l1;
    let r2 = r * (l1 * l1 + l2);
    ThetaJet { value: c * r * g, d1: c * (r1 * g + r * g1), d2: c * (r2 * g + 2.0 * r1 * g1 + r * g2) }
}

/// `θ_q` alone at a point of the annulus, with the same choice between series and product.
fn theta_value_annulus(qp: &QParam, v: C64, n: usize) -> C64 {
    let q = qp.q;
    let vinv = v.inv();
    let mut s0 = C64::new(0.0, 0.0);
    let mut a0 = 0.0f64;
    let mut t = C64::new(1.0, 0.0);
    let mut qk = C64::new(1.0, 0.0);
    for _ in 0..=n {
        s0 += t;
        a0 += t.l1_norm();
        t *= qk * v;
        qk *= q;
    }
    let mut u = q * vinv;
    let mut qk = q * q;
    for _ in 1..=n {
        s0 += u;
        a0 += u.l1_norm();
        u *= qk * vinv;
        qk *= q;
    }
    if a0 <= CANCELLATION_LIMIT * s0.l1_norm() {
        return s0;
    }
    let one = C64::new(1.0, 0.0);
    let mut r = (one + v) * (one + q * vinv);
    let mut qk = q;
    while qk.norm_sqr() >= 1e-34 {
        let qk1 = qk * q;
        r *= (one + v * qk) * (one + qk1 * vinv);
        qk = qk1;
    }
    pochhammer(qp, q, PochhammerOrder::Infinite) * r
}

/// The jet of `θ_q` at a point of the annulus: the series where its value sums without
/// heavy cancellation, the product form otherwise.
fn theta_annulus(qp: &QParam, v: C64, n: usize) -> ThetaJet {
    let (j, a0) = theta_series(qp, v, n);
    if a0 <= CANCELLATION_LIMIT * j.value.l1_norm() {
        j
    } else {
        theta_product_jet(qp, v)
    }
}

fn check_nonzero(x: C64, what: &str) -> QResult<()> {
    if x.norm() == 0.0 || !x.re.is_finite() || !x.im.is_finite() {
        return Err(QError::Domain(format!("{what} must be a finite nonzero complex number, got {x}")));
    }
    Ok(())
}

/// Value, first and second derivative of `θ_q` at `x`.
pub fn theta_jet(qp: &QParam, x: C64) -> QResult<ThetaJet> {
    check_nonzero(x, "theta argument")?;
    let n = series_len(qp)?;
    let (v, m) = reduce(qp, x);
    let j = theta_annulus(qp, v, n);
    if m == 0 {
        return Ok(j);
    }
    // θ(v q^m) = θ(v) v^{-m} q^{-m(m-1)/2}
    let mf = m as f64;
    let k = qpow(qp.q, -(m * (m - 1) / 2)) * qpow(v, -m);
    let vinv = v.inv();
    let g0 = k * j.value;
    let g1 = k * (j.d1 - j.value * mf * vinv);
    let g2 = k * (j.d2 - j.d1 * (2.0 * mf) * vinv + j.value * (mf * (mf + 1.0)) * vinv * vinv);
    let qm = qp.pow(-m);
    Ok(ThetaJet { value: g0, d1: g1 * qm, d2: g2 * qm * qm })
}

/// `θ_q(x) = Σ q^{n(n-1)/2} x^n`.
pub fn theta(qp: &QParam, x: C64) -> QResult<C64> {
    check_nonzero(x, "theta argument")?;
    let n = series_len(qp)?;
    let (v, m) = reduce(qp, x);
    let t = theta_value_annulus(qp, v, n);
    if m == 0 {
        return Ok(t);
    }
    // θ(v q^m) = θ(v) v^{-m} q^{-m(m-1)/2}
    Ok(t * qpow(qp.q, -(m * (m - 1) / 2)) * qpow(v, -m))
}

/// `θ_q'(x) = Σ n q^{n(n-1)/2} x^{n-1}`.
pub fn theta_deriv(qp: &QParam, x: C64) -> QResult<C64> {
    theta_jet(qp, x).map(|j| j.d1)
}

/// Order of a q-Pochhammer symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PochhammerOrder {
    Finite(u32),
    Infinite,
}

/// `(a;q)_n = Π_{i<n} (1 - a q^i)`; for `n = ∞` the product stops once `|a q^i| < 1e-17`.
pub fn pochhammer(qp: &QParam, a: C64, n: PochhammerOrder) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    let mut term = a;
    match n {
        PochhammerOrder::Finite(n) => {
            for _ in 0..n {
                acc *= C64::new(1.0, 0.0) - term;
                term *= qp.q;
            }
        }
        PochhammerOrder::Infinite => {
            while term.norm_sqr() >= 1e-34 {
                acc *= C64::new(1.0, 0.0) - term;
                term *= qp.q;
            }
        }
    }
    acc
}

/// Jacobi triple product `(q;q)_∞ (-x;q)_∞ (-q/x;q)_∞`, equal to `θ_q(x)`.
pub fn theta_product(qp: &QParam, x: C64) -> QResult<C64> {
    check_nonzero(x, "theta argument")?;
    let inf = PochhammerOrder::Infinite;
    Ok(pochhammer(qp, qp.q, inf) * pochhammer(qp, -x, inf) * pochhammer(qp, -qp.q / x, inf))
}

fn pole_guard(qp: &QParam, x: C64) -> QResult<()> {
    if congruent(qp, -x, C64::new(1.0, 0.0)).is_some() {
        return Err(QError::Pole { x, spiral: "[-1; q]".into() });
    }
    Ok(())
}

/// Elementary character `e_{q,c}(x) = θ_q(x/c)/θ_q(x)`, solution of `σ_q f = c f`.
pub fn e_char(qp: &QParam, c: C64, x: C64) -> QResult<C64> {
    check_nonzero(c, "character")?;
    check_nonzero(x, "e_char argument")?;
    pole_guard(qp, x)?;
    Ok(theta(qp, x / c)? / theta(qp, x)?)
}

/// q-logarithm `l_q(x) = x θ_q'(x)/θ_q(x)`, solution of `σ_q l_q - l_q = -1`.
pub fn q_log(qp: &QParam, x: C64) -> QResult<C64> {
    check_nonzero(x, "q_log argument")?;
    pole_guard(qp, x)?;
    let j = theta_jet(qp, x)?;
    Ok(x * j.d1 / j.value)
}
