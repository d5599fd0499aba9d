//! The Fricke cubic surface `S(a)`: the character variety of the sixth Painlevé equation.
//!
//! Coordinates are `X = (X_0, X_t, X_1)` and parameters `a = (a_0, a_t, a_1, a_∞)` with
//! `a_l = e_l + e_l^{-1}`. The surface is
//! `F(X, a) = X_0X_tX_1 + X_0² + X_t² + X_1² - A_0X_0 - A_tX_t - A_1X_1 + A_∞ = 0`.
//! Array index `0, 1, 2` stands for the punctures `0, t, 1` and index `3` for `∞`.

use crate::{QError, QResult, C64};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};
use std::fmt;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// One of the three finite punctures indexing the variables `X_0, X_t, X_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "t")]
    T,
    #[serde(rename = "1")]
    One,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::Zero, Var::T, Var::One];

    pub fn index(self) -> usize {
        match self {
            Var::Zero => 0,
            Var::T => 1,
            Var::One => 2,
        }
    }

    pub fn from_index(i: usize) -> QResult<Var> {
        Var::ALL.get(i).copied().ok_or_else(|| QError::Domain(format!("variable index {i} is not 0, 1 or 2")))
    }

    /// The other two variables `(i, j)` in the cyclic order `(0, t, 1)` starting after `self`.
    pub fn others(self) -> (Var, Var) {
        match self {
            Var::Zero => (Var::T, Var::One),
            Var::T => (Var::One, Var::Zero),
            Var::One => (Var::Zero, Var::T),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::Zero => "0",
            Var::T => "t",
            Var::One => "1",
        })
    }
}

impl std::str::FromStr for Var {
    type Err = QError;
    fn from_str(s: &str) -> QResult<Var> {
        match s {
            "0" => Ok(Var::Zero),
            "t" => Ok(Var::T),
            "1" => Ok(Var::One),
            _ => Err(QError::Domain(format!("unknown variable {s:?}, expected 0, t or 1"))),
        }
    }
}

/// Eigenvalue data `e_l` and traces `a_l = e_l + e_l^{-1}`, `l = 0, t, 1, ∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaParams {
    #[serde(with = "crate::cser::arr")]
    pub e: [C64; 4],
    #[serde(with = "crate::cser::arr")]
    pub a: [C64; 4],
}

impl ThetaParams {
    pub fn from_e(e: [C64; 4]) -> QResult<Self> {
        if let Some(z) = e.iter().find(|z| z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QError::Domain(format!("eigenvalue {z} must be nonzero and finite")));
        }
        Ok(Self { e, a: e.map(|z| z + 1.0 / z) })
    }

    /// Consistency of `a` with `e` to `1e-12` (relative to `1 + |a_l|`).
    pub fn check(&self) -> QResult<()> {
        for l in 0..4 {
            let expect = self.e[l] + 1.0 / self.e[l];
            if (expect - self.a[l]).norm() > 1e-12 * (1.0 + expect.norm()) {
                return Err(QError::Inconsistent(format!("a[{l}] = {} differs from e + 1/e = {expect}", self.a[l])));
            }
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for ThetaParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(with = "crate::cser::arr")]
            e: [C64; 4],
            #[serde(default, with = "opt_arr")]
            a: Option<[C64; 4]>,
        }
        mod opt_arr {
            use super::C64;
            use serde::{Deserialize, Deserializer};
            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[C64; 4]>, D::Error> {
                #[derive(Deserialize)]
                struct W(#[serde(with = "crate::cser::arr")] [C64; 4]);
                Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
            }
        }
        use serde::de::Error;
        let raw = Raw::deserialize(d)?;
        let mut tp = ThetaParams::from_e(raw.e).map_err(D::Error::custom)?;
        if let Some(a) = raw.a {
            tp.a = a;
            tp.check().map_err(D::Error::custom)?;
        }
        Ok(tp)
    }
}

/// Coefficients `A_0, A_t, A_1, A_∞` of the cubic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ACoeffs {
    #[serde(with = "crate::cser::arr")]
    pub a: [C64; 4],
}

/// `A_i = a_ia_∞ + a_ja_k` and `A_∞ = a_0a_ta_1a_∞ + a_0² + a_t² + a_1² + a_∞² - 4`.
pub fn a_to_coeffs(a: &[C64; 4]) -> ACoeffs {
    let [a0, at, a1, ai] = *a;
    ACoeffs {
        a: [
            a0 * ai + at * a1,
            at * ai + a0 * a1,
            a1 * ai + a0 * at,
            a0 * at * a1 * ai + a0 * a0 + at * at + a1 * a1 + ai * ai - 4.0,
        ],
    }
}

/// A point of `C³` with the value of `F` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    #[serde(with = "crate::cser::arr")]
    pub x: [C64; 3],
    #[serde(with = "crate::cser::c64")]
    pub f: C64,
    pub on_surface: bool,
}

/// Tolerance of the on-surface flag, relative to the size of the monomials of `F`.
pub const SURFACE_TOL: f64 = 1e-9;

impl SurfacePoint {
    pub fn new(x: [C64; 3], a: &[C64; 4]) -> Self {
        let (f, _) = fricke_eval(&x, a);
        let on_surface = f.norm() <= SURFACE_TOL * fricke_scale(&x, a);
        Self { x, f, on_surface }
    }
}

/// `F(X, a)` and its gradient `F_{X_i} = X_jX_k + 2X_i - A_i`.
pub fn fricke_eval(x: &[C64; 3], a: &[C64; 4]) -> (C64, [C64; 3]) {
    let cf = a_to_coeffs(a).a;
    let [x0, xt, x1] = *x;
    let f = x0 * xt * x1 + x0 * x0 + xt * xt + x1 * x1 - cf[0] * x0 - cf[1] * xt - cf[2] * x1 + cf[3];
    let grad = [xt * x1 + 2.0 * x0 - cf[0], x0 * x1 + 2.0 * xt - cf[1], x0 * xt + 2.0 * x1 - cf[2]];
    (f, grad)
}

/// Sum of the moduli of the monomials of `F`, the natural scale of its rounding error.
pub fn fricke_scale(x: &[C64; 3], a: &[C64; 4]) -> f64 {
    let cf = a_to_coeffs(a).a;
    let [x0, xt, x1] = *x;
    1.0 + (x0 * xt * x1).norm()
        + x.iter().map(|v| v.norm_sqr()).sum::<f64>()
        + (0..3).map(|i| (cf[i] * x[i]).norm()).sum::<f64>()
        + cf[3].norm()
}

/// The 4×4 determinant whose value is `F_{X_k}² - 4F`; it equals `F_{X_k}²` on the surface.
///
/// For `k = 1` the matrix is
/// `[[2, -a_0, -a_1, X_0], [-a_0, 2, X_t, -a_∞], [-a_1, X_t, 2, -a_t], [X_0, -a_∞, -a_t, 2]]`,
/// and the other two follow by the cyclic substitution `(0, t, 1) → (t, 1, 0)`.
pub fn gradient_determinant(x: &[C64; 3], a: &[C64; 4], k: Var) -> C64 {
    // cyclic relabelling sending the k = 1 case to k
    let (i, j) = k.others();
    let (ai_, aj, ak, ainf) = (a[i.index()], a[j.index()], a[k.index()], a[3]);
    let (xi, xj) = (x[i.index()], x[j.index()]);
    let m = nalgebra::Matrix4::new(
        c(2.0), -ai_, -ak, xi,
        -ai_, c(2.0), xj, -ainf,
        -ak, xj, c(2.0), -aj,
        xi, -ainf, -aj, c(2.0),
    );
    m.determinant()
}

/// The Goldman bracket `{X_i, X_j}`: `F_{X_k}` when `(i, j, k)` is a cyclic permutation of
/// `(0, t, 1)`, its negative for the reversed order, and `0` when `i = j`.
pub fn goldman_bracket(x: &[C64; 3], a: &[C64; 4], i: Var, j: Var) -> C64 {
    if i == j {
        return c(0.0);
    }
    let (_, grad) = fricke_eval(x, a);
    let (next, _) = i.others();
    if next == j {
        let (_, k) = i.others();
        grad[k.index()]
    } else {
        let (_, k) = j.others();
        -grad[k.index()]
    }
}

/// Which of the eight families of lines a line belongs to, for a plane `X_k = const`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineFamily {
    /// `X_k = e_i/e_j + e_j/e_i`, `e_iX_i + e_jX_j = a_∞ + e_ie_ja_k`.
    RatioA,
    /// `X_k = e_i/e_j + e_j/e_i`, `e_iX_j + e_jX_i = a_k + e_ie_ja_∞`.
    RatioB,
    /// `X_k = e_ie_j + (e_ie_j)^{-1}`, `X_i + e_ie_jX_j = e_ja_k + e_ia_∞`.
    ProductA,
    /// `X_k = e_ie_j + (e_ie_j)^{-1}`, `X_j + e_ie_jX_i = e_ja_∞ + e_ia_k`.
    ProductB,
    /// `X_k = e_k/e_∞ + e_∞/e_k`, `e_∞X_i + e_kX_j = a_i + e_ke_∞a_j`.
    InfRatioA,
    /// `X_k = e_k/e_∞ + e_∞/e_k`, `e_kX_i + e_∞X_j = a_j + e_ke_∞a_i`.
    InfRatioB,
    /// `X_k = e_ke_∞ + (e_ke_∞)^{-1}`, `X_i + e_ke_∞X_j = e_ka_j + e_∞a_i`.
    InfProductA,
    /// `X_k = e_ke_∞ + (e_ke_∞)^{-1}`, `X_j + e_ke_∞X_i = e_ka_i + e_∞a_j`.
    InfProductB,
}

/// A line `{X_k = constant, u X_i + v X_j = w}` on the cubic, with `(i, j)` the two other
/// variables in cyclic order after `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub k: Var,
    pub family: LineFamily,
    #[serde(with = "crate::cser::c64")]
    pub constant: C64,
    #[serde(with = "crate::cser::c64")]
    pub u: C64,
    #[serde(with = "crate::cser::c64")]
    pub v: C64,
    #[serde(with = "crate::cser::c64")]
    pub w: C64,
    /// Index of an earlier line in the list that coincides with this one.
    pub duplicate_of: Option<usize>,
}

impl Line {
    /// The point with parameter `s` and the direction of the line in `C³`.
    pub fn point(&self, s: C64) -> [C64; 3] {
        let (i, j) = self.k.others();
        let (base, dir) = self.base_and_direction();
        let mut x = [c(0.0); 3];
        x[self.k.index()] = self.constant;
        x[i.index()] = base.0 + s * dir.0;
        x[j.index()] = base.1 + s * dir.1;
        x
    }

    fn base_and_direction(&self) -> ((C64, C64), (C64, C64)) {
        let dir = (self.v, -self.u);
        let base = if self.v.norm() >= self.u.norm() {
            (c(0.0), self.w / self.v)
        } else {
            (self.w / self.u, c(0.0))
        };
        (base, dir)
    }

    fn as_affine(&self) -> ([C64; 3], [C64; 3]) {
        let p = self.point(c(0.0));
        let q = self.point(c(1.0));
        (p, [q[0] - p[0], q[1] - p[1], q[2] - p[2]])
    }

    /// Whether two lines coincide as subsets of `C³`, to a relative tolerance.
    pub fn same_as(&self, other: &Line, tol: f64) -> bool {
        let (p1, d1) = self.as_affine();
        let (p2, d2) = other.as_affine();
        let n1 = d1.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let n2 = d2.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = 1.0 + p1.iter().chain(p2.iter()).map(|v| v.norm()).fold(0.0, f64::max);
        let cross = |a: &[C64; 3], b: &[C64; 3]| {
            [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
        };
        let par = cross(&d1, &d2).iter().map(|v| v.norm()).fold(0.0, f64::max) / (n1 * n2);
        let diff = [p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2]];
        let off = cross(&diff, &d1).iter().map(|v| v.norm()).fold(0.0, f64::max) / (n1 * scale);
        par <= tol && off <= tol
    }
}

/// Relative tolerance used to flag coinciding lines.
pub const LINE_DUPLICATE_TOL: f64 = 1e-9;

/// The 24 lines of `S(a)`, eight in each family of planes `X_k = const`; coinciding lines
/// (non-generic `e`) are flagged through [`Line::duplicate_of`].
pub fn lines_24(tp: &ThetaParams) -> Vec<Line> {
    let e = tp.e;
    let a = tp.a;
    let (ei_, ai_) = (e[3], a[3]);
    let mut out: Vec<Line> = Vec::with_capacity(24);
    for k in Var::ALL {
        let (i, j) = k.others();
        let (ei, ej, ek) = (e[i.index()], e[j.index()], e[k.index()]);
        let (ai, aj, ak) = (a[i.index()], a[j.index()], a[k.index()]);
        let ratio = ei / ej + ej / ei;
        let prod = ei * ej + 1.0 / (ei * ej);
        let iratio = ek / ei_ + ei_ / ek;
        let iprod = ek * ei_ + 1.0 / (ek * ei_);
        let one = c(1.0);
        let rows = [
            (LineFamily::RatioA, ratio, ei, ej, ai_ + ei * ej * ak),
            (LineFamily::RatioB, ratio, ej, ei, ak + ei * ej * ai_),
            (LineFamily::ProductA, prod, one, ei * ej, ej * ak + ei * ai_),
            (LineFamily::ProductB, prod, ei * ej, one, ej * ai_ + ei * ak),
            (LineFamily::InfRatioA, iratio, ei_, ek, ai + ek * ei_ * aj),
            (LineFamily::InfRatioB, iratio, ek, ei_, aj + ek * ei_ * ai),
            (LineFamily::InfProductA, iprod, one, ek * ei_, ek * aj + ei_ * ai),
            (LineFamily::InfProductB, iprod, ek * ei_, one, ek * ai + ei_ * aj),
        ];
        for (family, constant, u, v, w) in rows {
            out.push(Line { k, family, constant, u, v, w, duplicate_of: None });
        }
    }
    for n in 0..out.len() {
        out[n].duplicate_of = (0..n).find(|&m| out[m].same_as(&out[n], LINE_DUPLICATE_TOL));
    }
    out
}

/// One of the eight reducibility conditions `e_0 e_t^{±1} e_1^{±1} e_∞^{±1} = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityProduct {
    /// Exponents of `e_t, e_1, e_∞`.
    pub signs: [i8; 3],
    #[serde(with = "crate::cser::c64")]
    pub value: C64,
    pub equals_one: bool,
}

/// Smoothness of `S(a)` through the eight product conditions, with the non-resonance
/// flags `a_l ≠ ±2` and the distinctness of the 24 lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    /// `a_l = ±2` for `l = 0, t, 1, ∞`.
    pub resonant: [bool; 4],
    pub products: Vec<ReducibilityProduct>,
    pub lines_distinct: bool,
    /// No resonance and none of the eight products equals `1`.
    pub smooth: bool,
}

/// Tolerance for the product and resonance conditions.
pub const SMOOTHNESS_TOL: f64 = 1e-10;

pub fn smoothness(tp: &ThetaParams) -> SmoothnessReport {
    let e = tp.e;
    let resonant = tp.a.map(|al| (al - 2.0).norm() <= SMOOTHNESS_TOL || (al + 2.0).norm() <= SMOOTHNESS_TOL);
    let mut products = Vec::with_capacity(8);
    for st in [1i8, -1] {
        for s1 in [1i8, -1] {
            for si in [1i8, -1] {
                let value = e[0] * e[1].powi(st as i32) * e[2].powi(s1 as i32) * e[3].powi(si as i32);
                products.push(ReducibilityProduct {
                    signs: [st, s1, si],
                    value,
                    equals_one: (value - 1.0).norm() <= SMOOTHNESS_TOL,
                });
            }
        }
    }
    let lines_distinct = lines_24(tp).iter().all(|l| l.duplicate_of.is_none());
    let smooth = !resonant.iter().any(|r| *r) && !products.iter().any(|p| p.equals_one);
    SmoothnessReport { resonant, products, lines_distinct, smooth }
}

/// Type of the fiber `{X_0 = c}` of the projection to `X_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FiberClass {
    GenericConic,
    Parabola,
    TwoLines { lines: Vec<Line> },
}

/// The conic `X_t² + X_1² + cX_tX_1 - A_tX_t - A_1X_1 + c² - cA_0 + A_∞ = 0` of the fiber
/// `X_0 = c`, as the symmetric 3×3 matrix of its homogenisation in `(X_t, X_1, 1)`.
pub fn fiber_conic(a: &[C64; 4], x0: C64) -> nalgebra::Matrix3<C64> {
    let cf = a_to_coeffs(a).a;
    let half = c(0.5);
    nalgebra::Matrix3::new(
        c(1.0), half * x0, -half * cf[1],
        half * x0, c(1.0), -half * cf[2],
        -half * cf[1], -half * cf[2], x0 * x0 - x0 * cf[0] + cf[3],
    )
}

/// Relative tolerance on the conic determinant for a fiber to count as two lines.
pub const FIBER_TOL: f64 = 1e-10;

/// Classifies the fiber `X_0 = c`: two lines when the conic degenerates (the four
/// partially reducible values), a parabola for `c = ±2`, a smooth conic otherwise.
pub fn classify_fiber(tp: &ThetaParams, x0: C64) -> FiberClass {
    let m = fiber_conic(&tp.a, x0);
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).powi(3);
    if m.determinant().norm() <= FIBER_TOL * scale {
        let tol = 1e-7 * (1.0 + x0.norm());
        let lines: Vec<Line> = lines_24(tp)
            .into_iter()
            .filter(|l| l.k == Var::Zero && (l.constant - x0).norm() <= tol)
            .collect();
        return FiberClass::TwoLines { lines };
    }
    if (x0 - 2.0).norm() <= FIBER_TOL || (x0 + 2.0).norm() <= FIBER_TOL {
        return FiberClass::Parabola;
    }
    FiberClass::GenericConic
}

/// The four values of `X_l` whose fiber splits into two lines.
pub fn two_line_values(tp: &ThetaParams, l: Var) -> [C64; 4] {
    let e = tp.e;
    let (i, j) = l.others();
    let (ei, ej, el, ei_) = (e[i.index()], e[j.index()], e[l.index()], e[3]);
    [ei / ej + ej / ei, ei * ej + 1.0 / (ei * ej), el / ei_ + ei_ / el, el * ei_ + 1.0 / (el * ei_)]
}

/// Rational parameterisation of the fiber `X_1 = const` by `s ∈ C*`.
///
/// With `λ + λ^{-1} = X_1`, the quadratic part of the conic in `(X_0, X_t)` factors as
/// `u w` with `u = X_0 + λX_t`, `w = X_0 + λ^{-1}X_t`; the conic reads
/// `(u + L_w)(w + L_u) = γ` and the point with parameter `s` has `u + L_w = s`,
/// `w + L_u = γ/s`. The parabolas `X_1 = ±2` (`λ = λ^{-1}`) and the two-line fibers
/// (`γ = 0`) are excluded.
pub fn jimbo_param(a: &[C64; 4], x1: C64, s: C64) -> QResult<(C64, C64)> {
    if s.norm() == 0.0 || !s.re.is_finite() || !s.im.is_finite() {
        return Err(QError::Domain("s must be a nonzero finite number".into()));
    }
    if (x1 - 2.0).norm() <= FIBER_TOL || (x1 + 2.0).norm() <= FIBER_TOL {
        return Err(QError::Domain(format!("X_1 = {x1} is ±2: the fiber is a parabola")));
    }
    let cf = a_to_coeffs(a).a;
    let disc = (x1 * x1 - 4.0).sqrt();
    let lam = (x1 + disc) / 2.0;
    let d = lam - 1.0 / lam;
    // X_0 = p1 u + p2 w, X_t = (u - w)/d
    let (p1, p2) = (-1.0 / (lam * d), lam / d);
    let (r1, r2) = (1.0 / d, -1.0 / d);
    let lu = -cf[0] * p1 - cf[1] * r1;
    let lw = -cf[0] * p2 - cf[1] * r2;
    let k = x1 * x1 - cf[2] * x1 + cf[3];
    let gamma = lu * lw - k;
    let scale = (lu * lw).norm() + k.norm() + 1.0;
    if gamma.norm() <= FIBER_TOL * scale {
        return Err(QError::Domain(format!(
            "X_1 = {x1} is a partially reducible value: the fiber is two lines"
        )));
    }
    let u = s - lw;
    let w = gamma / s - lu;
    Ok((p1 * u + p2 * w, (u - w) / d))
}

/// The involution `s_l`: `X_l ↦ A_l - X_iX_j - X_l`, exchanging the two roots of `F` seen
/// as a monic quadratic in `X_l`.
pub fn involution(x: &[C64; 3], a: &[C64; 4], l: Var) -> SurfacePoint {
    let cf = a_to_coeffs(a).a;
    let (i, j) = l.others();
    let mut y = *x;
    y[l.index()] = cf[l.index()] - x[i.index()] * x[j.index()] - x[l.index()];
    SurfacePoint::new(y, a)
}

/// The orbit `X, g(X), g²(X), …` of `g = s_0 ∘ s_t` with `n` points.
pub fn orbit(x: &[C64; 3], a: &[C64; 4], n: usize) -> Vec<SurfacePoint> {
    let mut out = Vec::with_capacity(n);
    let mut cur = SurfacePoint::new(*x, a);
    for _ in 0..n {
        let next = involution(&involution(&cur.x, a, Var::T).x, a, Var::Zero);
        out.push(cur);
        cur = next;
    }
    out
}

/// Orbits from several starting points, computed in parallel and returned in input order.
#[cfg(feature = "parallel")]
pub fn orbits(starts: &[[C64; 3]], a: &[C64; 4], n: usize) -> Vec<Vec<SurfacePoint>> {
    starts.par_iter().map(|x| orbit(x, a, n)).collect()
}

/// Orbits from several starting points, returned in input order.
#[cfg(not(feature = "parallel"))]
pub fn orbits(starts: &[[C64; 3]], a: &[C64; 4], n: usize) -> Vec<Vec<SurfacePoint>> {
    starts.iter().map(|x| orbit(x, a, n)).collect()
}
