//! The elliptic function `Φ`, Mano decompositions `M = P Q` and the q-pants charts.
//!
//! For a pair `(i, j)` of singularities with complement `(k, l)` and class
//! `a = ρ_1ρ_2/(x_i x_j)`, the left factor `P` carries the singularities `x_i, x_j` and the
//! right factor `Q` carries `x_k, x_l`. The central factor `C` is either
//! `Diag(ξ_1, ξ_2)` with `ξ_1 ξ_2 ≡ a` (generic form) or `[[ξ, ξ], [0, ξ]]` with
//! `ξ^2 ≡ a` (logarithmic form); it is encoded through the functional equations
//! `σ_q P = R P (Cx)^{-1}` and `σ_q Q = C Q (Sx)^{-1}`.

use crate::jsfamily::{
    det_profile, lines_containing, nonzero_column, LineId, LineKind, LocalData, MonodromyMatrix,
    Pair,
};
use crate::qcore::{annulus_rep, congruent, theta, theta_jet, AnnulusPoint, QParam};
use crate::qspaces::{find_zeros_fn, refit};
use crate::{ProjectivePoint, QError, QResult, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type Jet = (C64, C64);
type Mat2 = [[C64; 2]; 2];

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `θ(c x)` with its first two `x`-derivatives.
fn th(qp: &QParam, c: C64, x: C64) -> QResult<(C64, C64, C64)> {
    let j = theta_jet(qp, c * x)?;
    Ok((j.value, c * j.d1, c * c * j.d2))
}

fn th1(qp: &QParam, c: C64, x: C64) -> QResult<Jet> {
    let (v, d, _) = th(qp, c, x)?;
    Ok((v, d))
}

/// `(ψ, ψ')` for `ψ = x φ'` with `φ = θ(c x)`.
fn psi(qp: &QParam, c: C64, x: C64) -> QResult<Jet> {
    let (_, d1, d2) = th(qp, c, x)?;
    Ok((x * d1, d1 + x * d2))
}

fn jmul(a: Jet, b: Jet) -> Jet {
    (a.0 * b.0, a.0 * b.1 + a.1 * b.0)
}

fn jscale(s: C64, a: Jet) -> Jet {
    (s * a.0, s * a.1)
}

fn jadd(a: Jet, b: Jet) -> Jet {
    (a.0 + b.0, a.1 + b.1)
}

/// Lexicographic order on (principal argument, modulus).
fn canonical_less(a: C64, b: C64) -> bool {
    let (aa, ba) = (a.arg(), b.arg());
    if (aa - ba).abs() > 1e-12 {
        aa < ba
    } else {
        a.norm() < b.norm()
    }
}

/// `Φ_{i,j}(ξ) = θ(x_iξ/ρ_1)θ(x_jξ/ρ_2) / (θ(x_iξ/ρ_2)θ(x_jξ/ρ_1))` as a point of `P^1`.
pub fn phi(local: &LocalData, p: Pair, xi: C64) -> QResult<ProjectivePoint> {
    let qp = &local.qp;
    let (xi_, xj) = (local.xs[p.i], local.xs[p.j]);
    let (r1, r2) = (local.rho[0], local.rho[1]);
    let num = theta(qp, xi_ * xi / r1)? * theta(qp, xj * xi / r2)?;
    let den = theta(qp, xi_ * xi / r2)? * theta(qp, xj * xi / r1)?;
    let scale = theta(qp, xi_ * xi / r1)?.norm().max(theta(qp, xj * xi / r1)?.norm())
        * theta(qp, xj * xi / r2)?.norm().max(theta(qp, xi_ * xi / r2)?.norm());
    if num.norm() <= 1e-14 * scale && den.norm() <= 1e-14 * scale {
        return Err(QError::Ambiguous(format!("Phi{p} is 0/0 at xi = {xi}")));
    }
    ProjectivePoint::new(num, den)
}

/// The two points `{ξ_1, ξ_2}` of `Φ^{-1}(v)` in the fundamental annulus, ordered
/// canonically, with `ξ_1 ξ_2 ≡ a`; a double point at a critical value.
pub fn phi_fiber(local: &LocalData, p: Pair, v: &ProjectivePoint) -> QResult<[AnnulusPoint; 2]> {
    let qp = &local.qp;
    let (xi_, xj) = (local.xs[p.i], local.xs[p.j]);
    let (r1, r2) = (local.rho[0], local.rho[1]);
    let (n, d) = (v.num, v.den);
    let f = |s: C64| -> QResult<Jet> {
        let a = jmul(th1(qp, xi_ / r1, s)?, th1(qp, xj / r2, s)?);
        let b = jmul(th1(qp, xi_ / r2, s)?, th1(qp, xj / r1, s)?);
        Ok(jadd(jscale(d, a), jscale(-n, b)))
    };
    let a = local.pair_class(p);
    let zs = find_zeros_fn(qp, 2, a, &f)?;
    let mut x1 = zs.zeros[0].value;
    let mut x2 = zs.zeros[1].value;
    if canonical_less(x2, x1) {
        std::mem::swap(&mut x1, &mut x2);
    }
    // snap the second point onto the exact involution partner of the first
    let partner = annulus_rep(qp, a / x1);
    let second = if (partner.value - x2).norm() <= 1e-6 * x2.norm() { partner } else { annulus_rep(qp, x2) };
    let first = annulus_rep(qp, x1);
    for z in [&first, &second] {
        let w = phi(local, p, z.value)?;
        if w.chordal(v) > 1e-7 {
            return Err(QError::RootFinding(format!(
                "fiber point {} has Phi = {:?}, chordal distance {:e} from target",
                z.value,
                w,
                w.chordal(v)
            )));
        }
    }
    Ok([first, second])
}

/// Special sets of a pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecialValues {
    pub pair: Pair,
    pub xi_prime: [AnnulusPoint; 4],
    pub xi_dblprime: [AnnulusPoint; 4],
    pub upsilon: [AnnulusPoint; 4],
    /// `0, ∞, e_q^{1;i,j;k}, e_q^{2;i,j;k}`.
    pub crit_values: [ProjectivePoint; 4],
    pub hyp8: bool,
}

/// `Ξ'`, `Ξ''`, `Υ` and the four critical values of `Φ_{i,j}`.
pub fn special_values(local: &LocalData, p: Pair) -> QResult<SpecialValues> {
    let (k, _) = p.complement();
    let e1 = phi(local, p, -local.sigma[0] * local.xs[k])?;
    let e2 = phi(local, p, -local.sigma[1] * local.xs[k])?;
    let rep = crate::jsfamily::validate(local);
    Ok(SpecialValues {
        pair: p,
        xi_prime: local.xi_prime(p),
        xi_dblprime: local.xi_dblprime(p),
        upsilon: local.upsilon(p),
        crit_values: [ProjectivePoint::zero(), ProjectivePoint::infinity(), e1, e2],
        hyp8: rep.pair(p).hyp8,
    })
}

/// `e_q^{h;i,j;k} = Φ_{i,j}(-σ_h x_k)` for `k ∉ {i, j}` (all indices 0-based).
pub fn q_invariant(local: &LocalData, h: usize, p: Pair, k: usize) -> QResult<C64> {
    if p.contains(k) || h > 1 || k > 3 {
        return Err(QError::Domain(format!("invalid indices h={}, k={} for pair {p}", h + 1, k + 1)));
    }
    let v = phi(local, p, -local.sigma[h] * local.xs[k])?;
    v.value()
        .ok_or_else(|| QError::Degenerate(format!("e_q^{{{};{};{}}} is infinite", h + 1, p, k + 1)))
}

/// Closed theta-quotient form of the critical value `Φ_{i,j}(-σ_h x_k)`:
/// `θ(-σ x_i x_k/ρ_1) θ(-σ x_j x_k/ρ_2) / (θ(-σ x_j x_k/ρ_1) θ(-σ x_i x_k/ρ_2))`.
pub fn critical_value_closed_form(local: &LocalData, h: usize, p: Pair, k: usize) -> QResult<C64> {
    let qp = &local.qp;
    let s = -local.sigma[h] * local.xs[k];
    let (xi_, xj) = (local.xs[p.i], local.xs[p.j]);
    let (r1, r2) = (local.rho[0], local.rho[1]);
    Ok(theta(qp, s * xi_ / r1)? * theta(qp, s * xj / r2)? / (theta(qp, s * xj / r1)? * theta(qp, s * xi_ / r2)?))
}

/// The normal form of the central factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum CentralFactor {
    Generic { xi1: AnnulusPoint, xi2: AnnulusPoint },
    Logarithmic { xi: AnnulusPoint },
    Trivial { xi: AnnulusPoint },
}

impl CentralFactor {
    /// The matrix `C`.
    pub fn matrix(&self) -> Mat2 {
        match self {
            CentralFactor::Generic { xi1, xi2 } => [[xi1.value, zero()], [zero(), xi2.value]],
            CentralFactor::Logarithmic { xi } => [[xi.value, xi.value], [zero(), xi.value]],
            CentralFactor::Trivial { xi } => [[xi.value, zero()], [zero(), xi.value]],
        }
    }
}

/// A Mano decomposition `M = P Q`.
///
/// Generic form: `P_kj = α_kj θ(ξ_j x/ρ_k)`, `Q_jl = β_jl θ(σ_l x/ξ_j)`.
/// Logarithmic form, with `φ_k = θ(ξx/ρ_k)`, `ψ_k = xφ_k'`, `φ̄_l = θ(σ_l x/ξ)`,
/// `ψ̄_l = xφ̄_l'`: `P_k1 = α_k1 φ_k`, `P_k2 = α_k1 ψ_k + α_k2 φ_k`,
/// `Q_1l = β_1l φ̄_l - β_2l ψ̄_l`, `Q_2l = β_2l φ̄_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManoFactors {
    pub local: LocalData,
    pub pair: Pair,
    #[serde(flatten)]
    pub central: CentralFactor,
    #[serde(with = "crate::cser::mat2")]
    pub alpha: Mat2,
    #[serde(with = "crate::cser::mat2")]
    pub beta: Mat2,
}

impl ManoFactors {
    fn xis(&self) -> (C64, C64) {
        match &self.central {
            CentralFactor::Generic { xi1, xi2 } => (xi1.value, xi2.value),
            CentralFactor::Logarithmic { xi } | CentralFactor::Trivial { xi } => (xi.value, xi.value),
        }
    }

    fn is_log(&self) -> bool {
        matches!(self.central, CentralFactor::Logarithmic { .. })
    }

    /// Entries of `P` with derivatives.
    pub fn p_jet(&self, x: C64) -> QResult<[[Jet; 2]; 2]> {
        let qp = &self.local.qp;
        let (x1, x2) = self.xis();
        let r = self.local.rho;
        let a = &self.alpha;
        let mut out = [[(zero(), zero()); 2]; 2];
        for k in 0..2 {
            if self.is_log() {
                let ph = th1(qp, x1 / r[k], x)?;
                let ps = psi(qp, x1 / r[k], x)?;
                out[k][0] = jscale(a[k][0], ph);
                out[k][1] = jadd(jscale(a[k][0], ps), jscale(a[k][1], ph));
            } else {
                out[k][0] = jscale(a[k][0], th1(qp, x1 / r[k], x)?);
                out[k][1] = jscale(a[k][1], th1(qp, x2 / r[k], x)?);
            }
        }
        Ok(out)
    }

    /// Entries of `Q` with derivatives.
    pub fn q_jet(&self, x: C64) -> QResult<[[Jet; 2]; 2]> {
        let qp = &self.local.qp;
        let (x1, x2) = self.xis();
        let s = self.local.sigma;
        let b = &self.beta;
        let mut out = [[(zero(), zero()); 2]; 2];
        for l in 0..2 {
            if self.is_log() {
                let ph = th1(qp, s[l] / x1, x)?;
                let ps = psi(qp, s[l] / x1, x)?;
                out[0][l] = jadd(jscale(b[0][l], ph), jscale(-b[1][l], ps));
                out[1][l] = jscale(b[1][l], ph);
            } else {
                out[0][l] = jscale(b[0][l], th1(qp, s[l] / x1, x)?);
                out[1][l] = jscale(b[1][l], th1(qp, s[l] / x2, x)?);
            }
        }
        Ok(out)
    }

    pub fn p_matrix(&self, x: C64) -> QResult<Mat2> {
        let j = self.p_jet(x)?;
        Ok([[j[0][0].0, j[0][1].0], [j[1][0].0, j[1][1].0]])
    }

    pub fn q_matrix(&self, x: C64) -> QResult<Mat2> {
        let j = self.q_jet(x)?;
        Ok([[j[0][0].0, j[0][1].0], [j[1][0].0, j[1][1].0]])
    }

    /// `(P D Q)_{kl}` with derivative, `D = Diag(1, η)`.
    fn product_jet(&self, x: C64, k: usize, l: usize, eta: C64) -> QResult<Jet> {
        let p = self.p_jet(x)?;
        let q = self.q_jet(x)?;
        let d = [one(), eta];
        let mut acc = (zero(), zero());
        for j in 0..2 {
            acc = jadd(acc, jscale(d[j], jmul(p[k][j], q[j][l])));
        }
        Ok(acc)
    }

    /// `P(x) Q(x)`.
    pub fn product(&self, x: C64) -> QResult<Mat2> {
        Ok(mat_mul(&self.p_matrix(x)?, &self.q_matrix(x)?))
    }

    /// Largest relative defect of the functional equations
    /// `σ_q P = R P (Cx)^{-1}` and `σ_q Q = C Q (Sx)^{-1}` over probe points.
    pub fn functional_equation_defect(&self) -> QResult<f64> {
        let qp = &self.local.qp;
        let c = self.central.matrix();
        let cinv = mat_inv(&c)?;
        let r = self.local.rho;
        let s = self.local.sigma;
        let mut worst = 0.0f64;
        for x in probe_circle(qp, 16, 0.37) {
            let p = self.p_matrix(x)?;
            let pq = self.p_matrix(qp.q * x)?;
            let rhs = mat_mul(&[[r[0], zero()], [zero(), r[1]]], &p);
            let rhs = mat_mul(&rhs, &cinv);
            let rhs = rhs.map(|row| row.map(|v| v / x));
            worst = worst.max(rel_diff(&pq, &rhs));
            let q = self.q_matrix(x)?;
            let qq = self.q_matrix(qp.q * x)?;
            let mut rhs = mat_mul(&c, &q);
            for row in rhs.iter_mut() {
                for (l, v) in row.iter_mut().enumerate() {
                    *v /= s[l] * x;
                }
            }
            worst = worst.max(rel_diff(&qq, &rhs));
        }
        Ok(worst)
    }

    /// `det P` and `det Q` at the four singularities, relative to the factor norms.
    pub fn determinant_zeros(&self) -> QResult<([f64; 2], [f64; 2])> {
        let (k, l) = self.pair.complement();
        let rel = |m: Mat2| {
            let n: f64 = m.iter().flatten().map(|v| v.norm_sqr()).sum();
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm() / n
        };
        let xs = self.local.xs;
        Ok((
            [rel(self.p_matrix(xs[self.pair.i])?), rel(self.p_matrix(xs[self.pair.j])?)],
            [rel(self.q_matrix(xs[k])?), rel(self.q_matrix(xs[l])?)],
        ))
    }
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_inv(a: &Mat2) -> QResult<Mat2> {
    let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if d.norm() == 0.0 {
        return Err(QError::Degenerate("singular 2x2 matrix".into()));
    }
    Ok([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

fn rel_diff(a: &Mat2, b: &Mat2) -> f64 {
    let n = a.iter().flatten().chain(b.iter().flatten()).map(|v| v.norm()).fold(0.0, f64::max);
    let d = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if n == 0.0 {
        0.0
    } else {
        d / n
    }
}

fn probe_circle(qp: &QParam, n: usize, rot: f64) -> Vec<C64> {
    let r = qp.q.norm().powf(0.25);
    (0..n).map(|j| C64::from_polar(r, 2.0 * PI * (j as f64 + rot) / n as f64)).collect()
}

/// Distance between the classes of `x` and `z` in logarithmic coordinates on `E_q`.
fn torus_distance(qp: &QParam, x: C64, z: C64) -> f64 {
    let lq = qp.q.norm().ln();
    let w = (x / z).ln();
    let t = (w.re / lq).round();
    let w = w - t * qp.q.ln();
    let re = w.re;
    let im = (w.im + PI).rem_euclid(2.0 * PI) - PI;
    (re * re + im * im).sqrt()
}

/// Eight probe points at log-distance at least 0.05 from the given spirals where the
/// left factor `p` is best conditioned, ranked by `|det P| / (|P_11 P_22| + |P_12 P_21|)`.
fn conditioned_probes(qp: &QParam, avoid: &[C64], p: &dyn Fn(C64) -> QResult<Mat2>) -> QResult<Vec<C64>> {
    let rq = qp.q.norm();
    let mut ranked: Vec<(f64, C64)> = Vec::new();
    for r in 0..8 {
        let radius = rq.powf((r as f64 + 0.5) / 8.0);
        for t in 0..64 {
            let x = C64::from_polar(radius, 2.0 * PI * (t as f64 + 0.3) / 64.0);
            if avoid.iter().any(|z| torus_distance(qp, x, *z) < 0.05) {
                continue;
            }
            let m = p(x)?;
            let den = (m[0][0] * m[1][1]).norm() + (m[0][1] * m[1][0]).norm();
            let score = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm() / den;
            if score.is_finite() {
                ranked.push((score, x));
            }
        }
    }
    if ranked.len() < 8 {
        return Err(QError::Decomposition("could not place probe points away from the singular spirals".into()));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ranked.into_iter().take(8).map(|(_, x)| x).collect())
}

/// `s = θ(ξ_2x_i/ρ_1)θ(ξ_1x_i/ρ_2) / (θ(ξ_1x_i/ρ_1)θ(ξ_2x_i/ρ_2))`, making `det P(x_i) = 0`.
pub fn s_param(local: &LocalData, p: Pair, xi1: C64, xi2: C64) -> QResult<C64> {
    let qp = &local.qp;
    let x = local.xs[p.i];
    let r = local.rho;
    let den = theta(qp, xi1 * x / r[0])? * theta(qp, xi2 * x / r[1])?;
    if den.norm() == 0.0 {
        return Err(QError::Domain("s is infinite on the special set".into()));
    }
    Ok(theta(qp, xi2 * x / r[0])? * theta(qp, xi1 * x / r[1])? / den)
}

/// `t = θ(σ_2x_k/ξ_1)θ(σ_1x_k/ξ_2) / (θ(σ_1x_k/ξ_1)θ(σ_2x_k/ξ_2))`, making `det Q(x_k) = 0`.
pub fn t_param(local: &LocalData, p: Pair, xi1: C64, xi2: C64) -> QResult<C64> {
    let qp = &local.qp;
    let (k, _) = p.complement();
    let x = local.xs[k];
    let s = local.sigma;
    let den = theta(qp, s[0] * x / xi1)? * theta(qp, s[1] * x / xi2)?;
    if den.norm() == 0.0 {
        return Err(QError::Domain("t is infinite on the special set".into()));
    }
    Ok(theta(qp, s[1] * x / xi1)? * theta(qp, s[0] * x / xi2)? / den)
}

/// `u = x_i (φ_1'/φ_1 - φ_2'/φ_2)(x_i)` of the logarithmic left factor.
pub fn u_param(local: &LocalData, p: Pair, xi: C64) -> QResult<C64> {
    let qp = &local.qp;
    let x = local.xs[p.i];
    let ld = |c: C64| -> QResult<C64> {
        let (v, d) = th1(qp, c, x)?;
        Ok(d / v)
    };
    Ok(x * (ld(xi / local.rho[0])? - ld(xi / local.rho[1])?))
}

/// `v = x_k (φ̄_1'/φ̄_1 - φ̄_2'/φ̄_2)(x_k)` of the logarithmic right factor.
pub fn v_param(local: &LocalData, p: Pair, xi: C64) -> QResult<C64> {
    let qp = &local.qp;
    let (k, _) = p.complement();
    let x = local.xs[k];
    let ld = |c: C64| -> QResult<C64> {
        let (v, d) = th1(qp, c, x)?;
        Ok(d / v)
    };
    Ok(x * (ld(local.sigma[0] / xi)? - ld(local.sigma[1] / xi)?))
}

/// A point `(ξ, η)` of the q-pants chart of a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PantsPoint {
    pub pair: Pair,
    pub xi: AnnulusPoint,
    #[serde(with = "crate::cser::c64")]
    pub eta: C64,
}

/// Where a value of `ξ` sits relative to the special sets of a pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum XiClass {
    General,
    /// `ξ ∈ Ξ`: the fiber of `Φ(ξ)` is the union of two lines.
    Special { lines: [LineId; 2] },
    /// `ξ ∈ Υ`: the fiber is handled by the logarithmic chart.
    Critical { xi: AnnulusPoint },
}

/// Classifies `ξ` with relative tolerance `tol` on annulus representatives.
pub fn classify_xi(local: &LocalData, p: Pair, xi: C64, tol: f64) -> XiClass {
    let qp = QParam::with_tolerances(local.qp.q, local.qp.tol_eq, tol).expect("positive tolerance");
    let (k, l) = p.complement();
    let (i, j) = (p.i, p.j);
    let r = local.rho;
    let s = local.sigma;
    let line = |kind, h, t| LineId { kind, h, i: t };
    let table = [
        (-r[0] / local.xs[i], [line(LineKind::Rho, 0, i), line(LineKind::Rho, 1, j)]),
        (-r[1] / local.xs[j], [line(LineKind::Rho, 0, i), line(LineKind::Rho, 1, j)]),
        (-r[0] / local.xs[j], [line(LineKind::Rho, 0, j), line(LineKind::Rho, 1, i)]),
        (-r[1] / local.xs[i], [line(LineKind::Rho, 0, j), line(LineKind::Rho, 1, i)]),
        (-s[0] * local.xs[k], [line(LineKind::Sigma, 0, k), line(LineKind::Sigma, 1, l)]),
        (-s[1] * local.xs[l], [line(LineKind::Sigma, 0, k), line(LineKind::Sigma, 1, l)]),
        (-s[1] * local.xs[k], [line(LineKind::Sigma, 1, k), line(LineKind::Sigma, 0, l)]),
        (-s[0] * local.xs[l], [line(LineKind::Sigma, 1, k), line(LineKind::Sigma, 0, l)]),
    ];
    for (z, lines) in table {
        if congruent(&qp, xi, z).is_some() {
            return XiClass::Special { lines };
        }
    }
    for u in local.upsilon(p) {
        if congruent(&qp, xi, u.value).is_some() {
            return XiClass::Critical { xi: u };
        }
    }
    XiClass::General
}

/// Builds a generic-form factorisation from explicit coefficients.
pub fn generic_factors(local: &LocalData, p: Pair, xi1: C64, xi2: C64, alpha: Mat2, beta: Mat2) -> ManoFactors {
    let qp = &local.qp;
    ManoFactors {
        local: local.clone(),
        pair: p,
        central: CentralFactor::Generic { xi1: annulus_rep(qp, xi1), xi2: annulus_rep(qp, xi2) },
        alpha,
        beta,
    }
}

/// `(ξ_1, ξ_2) = (R(ξ), R(a/R(ξ)))`.
fn xi_pair(local: &LocalData, p: Pair, xi: C64) -> (C64, C64) {
    let qp = &local.qp;
    let x1 = annulus_rep(qp, xi).value;
    let x2 = annulus_rep(qp, local.pair_class(p) / x1).value;
    (x1, x2)
}

/// The q-pants factors at `(ξ, η)`: `A = [[1,1],[1,s]]`, `B = [[1,1],[η, ηt]]`.
pub fn pants_factors(local: &LocalData, pt: &PantsPoint) -> QResult<ManoFactors> {
    let p = pt.pair;
    let xi = pt.xi.original(&local.qp);
    match classify_xi(local, p, xi, 1e-7) {
        XiClass::General => {}
        XiClass::Special { lines } => {
            return Err(QError::Domain(format!(
                "xi = {xi} lies in the special set: the fiber is {} ∪ {}",
                lines[0], lines[1]
            )))
        }
        XiClass::Critical { xi } => {
            return Err(QError::Domain(format!(
                "xi = {} is a square root of the class a: use the logarithmic chart",
                xi.value
            )))
        }
    }
    if pt.eta.norm() == 0.0 || !pt.eta.re.is_finite() || !pt.eta.im.is_finite() {
        return Err(QError::Domain("eta must be a nonzero finite number".into()));
    }
    let (x1, x2) = xi_pair(local, p, xi);
    let s = s_param(local, p, x1, x2)?;
    let t = t_param(local, p, x1, x2)?;
    let alpha = [[one(), one()], [one(), s]];
    let beta = [[one(), one()], [pt.eta, pt.eta * t]];
    Ok(generic_factors(local, p, x1, x2, alpha, beta))
}

/// Factors of the logarithmic chart at `ξ ∈ Υ` with coordinate `y`:
/// `P = [[φ_1, ψ_1], [φ_2, ψ_2 + uφ_2]]`, `B = [[y + v, y], [1, 1]]`.
pub fn log_factors(local: &LocalData, p: Pair, xi: C64, y: C64) -> QResult<ManoFactors> {
    let xi_rep = match classify_xi(local, p, xi, 1e-6) {
        XiClass::Critical { xi } => xi,
        _ => return Err(QError::Domain(format!("xi = {xi} is not a square root of the class a"))),
    };
    let u = u_param(local, p, xi_rep.value)?;
    let v = v_param(local, p, xi_rep.value)?;
    Ok(ManoFactors {
        local: local.clone(),
        pair: p,
        central: CentralFactor::Logarithmic { xi: xi_rep },
        alpha: [[one(), zero()], [one(), u]],
        beta: [[y + v, y], [one(), one()]],
    })
}

/// `compose`: samples `P Diag(1, η) Q` entrywise and refits each entry into
/// `V_{2, ρ_k/σ_l}`; the result must pass the determinant profile.
pub fn compose(f: &ManoFactors, eta_inserted: Option<C64>) -> QResult<MonodromyMatrix> {
    let local = &f.local;
    let qp = &local.qp;
    let eta = eta_inserted.unwrap_or(one());
    let mut m: Vec<crate::qspaces::VElement> = Vec::with_capacity(4);
    for k in 0..2 {
        for l in 0..2 {
            let g = |x: C64| f.product_jet(x, k, l, eta);
            m.push(refit(qp, 2, local.entry_char(k, l), 0, &g)?);
        }
    }
    let mut it = m.into_iter();
    let mut next = || it.next().expect("four entries");
    let m = [[next(), next()], [next(), next()]];
    let mm = MonodromyMatrix { local: local.clone(), m };
    let prof = det_profile(&mm)?;
    if !prof.passed {
        return Err(QError::Decomposition(format!("composed matrix fails the determinant profile (residual {:e})", prof.residual)));
    }
    Ok(mm)
}

/// `pants_matrix`: the monodromy matrix at a pants point with its factors.
pub fn pants_matrix(local: &LocalData, pt: &PantsPoint) -> QResult<(MonodromyMatrix, ManoFactors)> {
    let f = pants_factors(local, pt)?;
    Ok((compose(&f, None)?, f))
}

/// The matrix of the logarithmic chart.
pub fn log_matrix(local: &LocalData, p: Pair, xi: C64, y: C64) -> QResult<(MonodromyMatrix, ManoFactors)> {
    let f = log_factors(local, p, xi, y)?;
    Ok((compose(&f, None)?, f))
}

/// Least-squares constant fits `h_n ≈ β g_n`; residual relative to `scale`.
fn fit_beta(h: &[C64], g: &[C64], scale: f64) -> (C64, f64) {
    let num: C64 = h.iter().zip(g).map(|(a, b)| b.conj() * a).sum();
    let den: f64 = g.iter().map(|b| b.norm_sqr()).sum();
    let beta = if den == 0.0 { zero() } else { num / den };
    let res = h.iter().zip(g).map(|(a, b)| (a - beta * b).norm()).fold(0.0, f64::max);
    (beta, if scale == 0.0 { 0.0 } else { res / scale })
}

/// Residual table of a decomposition failure.
fn residual_error(kind: &str, table: &[(usize, usize, f64)]) -> QError {
    let rows: Vec<String> = table.iter().map(|(j, l, r)| format!("beta{}{}: {:e}", j + 1, l + 1, r)).collect();
    QError::Decomposition(format!("{kind} coefficient fit exceeds 1e-7: {}", rows.join(", ")))
}

const FIT_TOL: f64 = 1e-7;

/// `Q = P^{-1} M` at the probe points.
fn left_quotient(f: &ManoFactors, mm: &MonodromyMatrix, probes: &[C64]) -> QResult<Vec<Mat2>> {
    probes
        .iter()
        .map(|x| {
            let p = f.p_matrix(*x)?;
            Ok(mat_mul(&mat_inv(&p)?, &mm.eval(*x)?))
        })
        .collect()
}

fn fit_generic_q(f: &mut ManoFactors, mm: &MonodromyMatrix) -> QResult<()> {
    let local = &f.local;
    let qp = &local.qp;
    let (x1, x2) = f.xis();
    let mut avoid: Vec<C64> = local.xs.to_vec();
    for s in local.sigma {
        avoid.push(-x1 / s);
        avoid.push(-x2 / s);
    }
    let probes = conditioned_probes(qp, &avoid, &|x| f.p_matrix(x))?;
    let qs = left_quotient(f, mm, &probes)?;
    let scale = qs.iter().flat_map(|m| m.iter().flatten()).map(|v| v.norm()).fold(0.0, f64::max);
    let xis = [x1, x2];
    let mut table = Vec::new();
    for j in 0..2 {
        for l in 0..2 {
            let h: Vec<C64> = qs.iter().map(|m| m[j][l]).collect();
            let g: Vec<C64> = probes.iter().map(|x| theta(qp, local.sigma[l] * x / xis[j])).collect::<QResult<_>>()?;
            let (b, r) = fit_beta(&h, &g, scale);
            f.beta[j][l] = b;
            table.push((j, l, r));
        }
    }
    if table.iter().any(|t| t.2 > FIT_TOL) {
        return Err(residual_error("generic", &table));
    }
    Ok(())
}

fn fit_log_q(f: &mut ManoFactors, mm: &MonodromyMatrix) -> QResult<()> {
    let local = &f.local;
    let qp = &local.qp;
    let (xi, _) = f.xis();
    let mut avoid: Vec<C64> = local.xs.to_vec();
    for s in local.sigma {
        avoid.push(-xi / s);
    }
    let probes = conditioned_probes(qp, &avoid, &|x| f.p_matrix(x))?;
    let qs = left_quotient(f, mm, &probes)?;
    let scale = qs.iter().flat_map(|m| m.iter().flatten()).map(|v| v.norm()).fold(0.0, f64::max);
    let mut table = Vec::new();
    for l in 0..2 {
        let c = local.sigma[l] / xi;
        let phis: Vec<C64> = probes.iter().map(|x| theta(qp, c * x)).collect::<QResult<_>>()?;
        let psis: Vec<C64> = probes.iter().map(|x| psi(qp, c, *x).map(|v| v.0)).collect::<QResult<_>>()?;
        let h2: Vec<C64> = qs.iter().map(|m| m[1][l]).collect();
        let (b2, r2) = fit_beta(&h2, &phis, scale);
        let h1: Vec<C64> = qs.iter().zip(&psis).map(|(m, ps)| m[0][l] + b2 * ps).collect();
        let (b1, r1) = fit_beta(&h1, &phis, scale);
        f.beta[1][l] = b2;
        f.beta[0][l] = b1;
        table.push((1, l, r2));
        table.push((0, l, r1));
    }
    if table.iter().any(|t| t.2 > FIT_TOL) {
        return Err(residual_error("logarithmic", &table));
    }
    Ok(())
}

/// Tolerance for `Π ∈ {0, ∞}` in the chordal metric.
pub const SPECIAL_FIBER_TOL: f64 = 1e-8;
/// Separation below which a fiber is treated as a double point.
pub const LOG_FIBER_TOL: f64 = 1e-6;

fn special_fiber_factors(mm: &MonodromyMatrix, p: Pair, at_zero: bool) -> QResult<ManoFactors> {
    let local = &mm.local;
    let qp = &local.qp;
    // at ∞ the roles of x_i and x_j are exchanged
    let (a, b) = if at_zero { (p.i, p.j) } else { (p.j, p.i) };
    let (fa, ga) = nonzero_column(mm, a)?;
    let (fb, gb) = nonzero_column(mm, b)?;
    let xa = local.xs[a];
    let xb = local.xs[b];
    let r = local.rho;
    let xi1 = annulus_rep(qp, -r[0] / xa).value;
    let xi2 = annulus_rep(qp, -r[1] / xb).value;
    let fa_rel = fa.norm() / (fa.norm() + ga.norm());
    let gb_rel = gb.norm() / (fb.norm() + gb.norm());
    let alpha = if fa_rel <= gb_rel {
        // f_a = 0: P = [[θ(ξ_1x/ρ_1), 0], [α θ(ξ_1x/ρ_2), θ(ξ_2x/ρ_2)]]
        let al = gb * theta(qp, xi1 * xb / r[0])? / (fb * theta(qp, xi1 * xb / r[1])?);
        [[one(), zero()], [al, one()]]
    } else {
        // g_b = 0: P = [[θ(ξ_1x/ρ_1), α θ(ξ_2x/ρ_1)], [0, θ(ξ_2x/ρ_2)]]
        let al = fa * theta(qp, xi2 * xa / r[1])? / (ga * theta(qp, xi2 * xa / r[0])?);
        [[one(), al], [zero(), one()]]
    };
    let mut f = generic_factors(local, p, xi1, xi2, alpha, [[zero(); 2]; 2]);
    fit_generic_q(&mut f, mm)?;
    Ok(f)
}

/// `decompose`: the Mano decomposition of `M` relative to a pair.
///
/// Special fibers `Π ∈ {0, ∞}` use the triangular normal forms. Otherwise the
/// logarithmic form is tried at every square root `υ` of the class with `Φ(υ) = Π(M)`,
/// and the generic form is located from the fiber `Φ^{-1}(Π(M))`, falling back to a
/// search over `E_q` where `Φ` is too flat to invert, and polished on the factorisation
/// structure of `M`.
pub fn decompose(mm: &MonodromyMatrix, p: Pair) -> QResult<ManoFactors> {
    let local = &mm.local;
    let v = crate::jsfamily::pi_invariant(mm, p)?;
    if v.chordal_scalar() <= SPECIAL_FIBER_TOL {
        return verified(special_fiber_factors(mm, p, true)?, mm);
    }
    if v.chordal(&ProjectivePoint::infinity()) <= SPECIAL_FIBER_TOL {
        return verified(special_fiber_factors(mm, p, false)?, mm);
    }
    let col = nonzero_column(mm, p.i)?;
    for ups in local.upsilon(p) {
        if phi(local, p, ups.value)?.chordal(&v) <= LOG_FIBER_TOL {
            if let Ok(f) = log_decomposition(mm, p, ups.value, col) {
                return Ok(f);
            }
        }
    }
    let mut last = None;
    if let Ok([z1, z2]) = phi_fiber(local, p, &v) {
        if (z1.value - z2.value).norm() >= LOG_FIBER_TOL {
            match generic_decomposition(mm, p, z1.value, z2.value, col) {
                Ok(f) => return Ok(f),
                Err(e) => last = Some(e),
            }
        }
    }
    for (z1, z2) in search_fiber(mm, p, col)? {
        match generic_decomposition(mm, p, z1, z2, col) {
            Ok(f) => return Ok(f),
            Err(e) => {
                last.get_or_insert(e);
            }
        }
    }
    Err(last.unwrap_or_else(|| QError::Decomposition("no fiber point reproduces the structure of M".into())))
}

fn log_decomposition(mm: &MonodromyMatrix, p: Pair, xi: C64, col: (C64, C64)) -> QResult<ManoFactors> {
    let local = &mm.local;
    let qp = &local.qp;
    let mut f = log_factors(local, p, xi, zero())?;
    let x = local.xs[p.i];
    let c1 = theta(qp, xi * x / local.rho[0])?;
    let c2 = theta(qp, xi * x / local.rho[1])?;
    let (g1, g2) = (col.0 / c1, col.1 / c2);
    let u = f.alpha[1][1];
    f.alpha = [[g1, zero()], [g2, g2 * u]];
    fit_log_q(&mut f, mm)?;
    verified(f, mm)
}

fn generic_decomposition(mm: &MonodromyMatrix, p: Pair, z1: C64, z2: C64, col: (C64, C64)) -> QResult<ManoFactors> {
    let local = &mm.local;
    let (x1, x2) = refine_xi(mm, p, z1, z2, col)?;
    let alpha = generic_left_coefficients(local, p, x1, x2, col)?;
    let mut f = generic_factors(local, p, x1, x2, alpha, [[zero(); 2]; 2]);
    fit_generic_q(&mut f, mm)?;
    verified(f, mm)
}

/// Largest relative residual of the constant fits `(P^{-1}M)_{jl} ≈ β_{jl} θ(σ_l x/ξ_j)`.
fn structure_cost(mm: &MonodromyMatrix, p: Pair, x1: C64, x2: C64, col: (C64, C64), probes: &[C64]) -> QResult<f64> {
    let local = &mm.local;
    let qp = &local.qp;
    let alpha = generic_left_coefficients(local, p, x1, x2, col)?;
    let f = generic_factors(local, p, x1, x2, alpha, [[zero(); 2]; 2]);
    let qs = left_quotient(&f, mm, probes)?;
    let scale = qs.iter().flat_map(|m| m.iter().flatten()).map(|v| v.norm()).fold(0.0, f64::max);
    let xis = [x1, x2];
    let mut worst = 0.0f64;
    for j in 0..2 {
        for l in 0..2 {
            let h: Vec<C64> = qs.iter().map(|m| m[j][l]).collect();
            let g: Vec<C64> = probes.iter().map(|x| theta(qp, local.sigma[l] * x / xis[j])).collect::<QResult<_>>()?;
            worst = worst.max(fit_beta(&h, &g, scale).1);
        }
    }
    Ok(if worst.is_finite() { worst } else { f64::INFINITY })
}

/// Candidate generic fiber points: the local minima of [`structure_cost`] over a polar
/// grid of the fundamental annulus, best first, each sharpened by two local grid
/// refinements.
fn search_fiber(mm: &MonodromyMatrix, p: Pair, col: (C64, C64)) -> QResult<Vec<(C64, C64)>> {
    let local = &mm.local;
    let qp = &local.qp;
    let a = local.pair_class(p);
    let probes = crate::jsfamily::conditioned_points(mm, 8)?;
    let lq = qp.q.norm().ln();
    let cost = |lr: f64, ang: f64| -> f64 {
        let z = C64::from_polar(lr.exp(), ang);
        let z2 = annulus_rep(qp, a / z).value;
        structure_cost(mm, p, z, z2, col, &probes).unwrap_or(f64::INFINITY)
    };
    let (nr, na) = (16usize, 64usize);
    let at = |r: usize, t: usize| (lq * (r as f64 + 0.5) / nr as f64, 2.0 * PI * (t as f64 + 0.5) / na as f64);
    let grid: Vec<Vec<f64>> = (0..nr).map(|r| (0..na).map(|t| { let (lr, ang) = at(r, t); cost(lr, ang) }).collect()).collect();
    let mut minima: Vec<(f64, f64, f64)> = Vec::new();
    for r in 0..nr {
        for t in 0..na {
            let c = grid[r][t];
            if !c.is_finite() {
                continue;
            }
            let mut lowest = true;
            for dr in -1i64..=1 {
                for dt in -1i64..=1 {
                    let rr = r as i64 + dr;
                    if (dr, dt) == (0, 0) || rr < 0 || rr >= nr as i64 {
                        continue;
                    }
                    let tt = (t as i64 + dt).rem_euclid(na as i64) as usize;
                    if grid[rr as usize][tt] < c {
                        lowest = false;
                    }
                }
            }
            if lowest {
                let (lr, ang) = at(r, t);
                minima.push((c, lr, ang));
            }
        }
    }
    minima.sort_by(|u, v| u.0.total_cmp(&v.0));
    minima.truncate(4);
    if minima.is_empty() {
        return Err(QError::Decomposition("no fiber point reproduces the structure of M".into()));
    }
    let mut out = Vec::with_capacity(minima.len());
    for mut best in minima {
        let (mut dr, mut da) = (lq.abs() / nr as f64, 2.0 * PI / na as f64);
        for _ in 0..2 {
            let (_, lr0, a0) = best;
            for r in -4..=4 {
                for t in -4..=4 {
                    let lr = lr0 + dr * r as f64 / 4.0;
                    let ang = a0 + da * t as f64 / 4.0;
                    let c = cost(lr, ang);
                    if c < best.0 {
                        best = (c, lr, ang);
                    }
                }
            }
            dr /= 4.0;
            da /= 4.0;
        }
        let z = annulus_rep(qp, C64::from_polar(best.1.exp(), best.2)).value;
        out.push((z, annulus_rep(qp, a / z).value));
    }
    Ok(out)
}

/// `α = [[g_1, g_1], [g_2, g_2 s]]` matching the nonzero column `(f_i, g_i)` of `M(x_i)`.
fn generic_left_coefficients(local: &LocalData, p: Pair, x1: C64, x2: C64, col: (C64, C64)) -> QResult<Mat2> {
    let qp = &local.qp;
    let s = s_param(local, p, x1, x2)?;
    let x = local.xs[p.i];
    let g1 = col.0 / theta(qp, x1 * x / local.rho[0])?;
    let g2 = col.1 / theta(qp, x1 * x / local.rho[1])?;
    Ok([[g1, g1], [g2, g2 * s]])
}

/// Deviation of `(P^{-1}M)_{jl} / θ(σ_l x/ξ_j)` from its value at the first probe, with
/// fixed real weights so that the defect stays holomorphic in `ξ_1`.
fn structure_defect(mm: &MonodromyMatrix, p: Pair, x1: C64, x2: C64, col: (C64, C64), probes: &[C64], weights: &[f64]) -> QResult<Vec<C64>> {
    let local = &mm.local;
    let qp = &local.qp;
    let alpha = generic_left_coefficients(local, p, x1, x2, col)?;
    let f = generic_factors(local, p, x1, x2, alpha, [[zero(); 2]; 2]);
    let qs = left_quotient(&f, mm, probes)?;
    let xis = [x1, x2];
    let mut out = Vec::with_capacity(4 * probes.len());
    for j in 0..2 {
        for l in 0..2 {
            let ratio = |n: usize| -> QResult<C64> { Ok(qs[n][j][l] / theta(qp, local.sigma[l] * probes[n] / xis[j])?) };
            let r0 = ratio(0)?;
            for n in 1..probes.len() {
                out.push((ratio(n)? - r0) * weights[4 * n + 2 * j + l]);
            }
        }
    }
    Ok(out)
}

/// Gauss-Newton refinement of the fiber point from the factorisation structure of `M`.
///
/// `Φ` can be nearly constant on large parts of `E_q`, so the fiber of `Π(M)` determines
/// `ξ` only coarsely there, while `M` itself still depends strongly on `ξ`. The second
/// point follows the first as `ξ_2 = k/ξ_1` with `k ≡ a` fixed.
fn refine_xi(mm: &MonodromyMatrix, p: Pair, x1: C64, x2: C64, col: (C64, C64)) -> QResult<(C64, C64)> {
    let local = &mm.local;
    let qp = &local.qp;
    let k = x1 * x2;
    let start = generic_factors(local, p, x1, x2, generic_left_coefficients(local, p, x1, x2, col)?, [[zero(); 2]; 2]);
    let mut avoid: Vec<C64> = local.xs.to_vec();
    for s in local.sigma {
        avoid.push(-x1 / s);
        avoid.push(-x2 / s);
    }
    let probes = conditioned_probes(qp, &avoid, &|x| start.p_matrix(x))?;
    let qs = left_quotient(&start, mm, &probes)?;
    let scale = qs.iter().flat_map(|m| m.iter().flatten()).map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok((x1, x2));
    }
    let xis = [x1, x2];
    let mut weights = Vec::with_capacity(4 * probes.len());
    for x in &probes {
        for xj in xis {
            for s in local.sigma {
                weights.push(theta(qp, s * x / xj)?.norm() / scale);
            }
        }
    }
    let defect = |z: C64| structure_defect(mm, p, z, k / z, col, &probes, &weights);
    let norm2 = |v: &[C64]| v.iter().map(|e| e.norm_sqr()).sum::<f64>();
    let mut z = x1;
    let mut eps = defect(z)?;
    for _ in 0..12 {
        let h = 1e-6 * z.norm();
        let plus = defect(z + h)?;
        let minus = defect(z - h)?;
        let jac: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let jj = norm2(&jac);
        if jj == 0.0 {
            break;
        }
        let step = -jac.iter().zip(&eps).map(|(j, e)| j.conj() * e).sum::<C64>() / jj;
        // damp until the defect decreases
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1.0 / 64.0 {
            let cand = z + step * t;
            if let Ok(e) = defect(cand) {
                if norm2(&e) < norm2(&eps) {
                    z = cand;
                    eps = e;
                    accepted = true;
                    break;
                }
            }
            t /= 2.0;
        }
        if !accepted || (step * t).norm() <= 1e-15 * z.norm() {
            break;
        }
    }
    let (mut a, mut b) = (annulus_rep(qp, z).value, annulus_rep(qp, k / z).value);
    if canonical_less(b, a) {
        std::mem::swap(&mut a, &mut b);
    }
    Ok((a, b))
}

fn verified(f: ManoFactors, mm: &MonodromyMatrix) -> QResult<ManoFactors> {
    let qp = &mm.local.qp;
    let mut worst = 0.0f64;
    for x in probe_circle(qp, 8, 0.11) {
        let a = f.product(x)?;
        let b = mm.eval(x)?;
        worst = worst.max(rel_diff(&a, &b));
    }
    if worst > FIT_TOL {
        return Err(QError::Decomposition(format!("P Q differs from M by {worst:e}")));
    }
    Ok(f)
}

/// The chart coordinate recovered from a matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "chart", rename_all = "lowercase")]
pub enum ChartPoint {
    Generic(PantsPoint),
    Logarithmic {
        pair: Pair,
        xi: AnnulusPoint,
        #[serde(with = "crate::cser::c64")]
        y: C64,
    },
    /// A special fiber: the matrix lies on distinguished lines instead of a chart.
    Special { pair: Pair, value: ProjectivePoint, lines: Vec<LineId> },
}

/// `η = α_12 β_21 / (α_11 β_11)`, invariant under the gauge freedom of the generic form.
pub fn eta_of(f: &ManoFactors) -> QResult<C64> {
    let den = f.alpha[0][0] * f.beta[0][0];
    if den.norm() == 0.0 {
        return Err(QError::Degenerate("eta is undefined (alpha11 beta11 = 0)".into()));
    }
    Ok(f.alpha[0][1] * f.beta[1][0] / den)
}

/// `y = β_12/β_22` of the logarithmic normal form.
pub fn y_of(f: &ManoFactors) -> QResult<C64> {
    if f.beta[1][1].norm() == 0.0 {
        return Err(QError::Degenerate("y is undefined (beta22 = 0)".into()));
    }
    Ok(f.beta[0][1] / f.beta[1][1])
}

/// `recover_pants`: the canonical chart point of `M`.
pub fn recover_pants(mm: &MonodromyMatrix, p: Pair) -> QResult<ChartPoint> {
    let local = &mm.local;
    let f = decompose(mm, p)?;
    let value = crate::jsfamily::pi_invariant(mm, p)?;
    match &f.central {
        CentralFactor::Logarithmic { xi } => {
            Ok(ChartPoint::Logarithmic { pair: p, xi: *xi, y: y_of(&f)? })
        }
        CentralFactor::Generic { xi1, .. } => match classify_xi(local, p, xi1.value, 1e-7) {
            XiClass::Special { .. } => Ok(ChartPoint::Special { pair: p, value, lines: lines_containing(mm)? }),
            _ => Ok(ChartPoint::Generic(PantsPoint { pair: p, xi: *xi1, eta: eta_of(&f)? })),
        },
        CentralFactor::Trivial { .. } => Err(QError::Inconsistent("trivial central factor under Hyp8".into())),
    }
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(0.5 + rng.random::<f64>(), 2.0 * PI * rng.random::<f64>())
}

/// A pair used to represent the line and the coordinates of its special `ξ_1`.
fn line_chart(local: &LocalData, line: LineId) -> (Pair, C64) {
    let t = line.i;
    let other = (t + 1) % 4;
    match line.kind {
        LineKind::Rho => (Pair::new(t, other).expect("distinct"), -local.rho[line.h] / local.xs[t]),
        LineKind::Sigma => {
            let rest: Vec<usize> = (0..4).filter(|&u| u != t && u != other).collect();
            (Pair::new(rest[0], rest[1]).expect("distinct"), -local.sigma[line.h] * local.xs[t])
        }
    }
}

/// Random generic left coefficients with `det P(x_i) = 0`.
fn generic_alpha<R: Rng + ?Sized>(rng: &mut R, local: &LocalData, p: Pair, x1: C64, x2: C64) -> QResult<Mat2> {
    let s = s_param(local, p, x1, x2)?;
    let (a12, a21) = (random_unit(rng), random_unit(rng));
    Ok([[one(), a12], [a21, a12 * a21 * s]])
}

/// Random generic right coefficients with `det Q(x_k) = 0`.
fn generic_beta<R: Rng + ?Sized>(rng: &mut R, local: &LocalData, p: Pair, x1: C64, x2: C64) -> QResult<Mat2> {
    let t = t_param(local, p, x1, x2)?;
    let (b12, b21) = (random_unit(rng), random_unit(rng));
    Ok([[one(), b12], [b21, b12 * b21 * t]])
}

/// A random matrix on the given line.
pub fn line_representative<R: Rng + ?Sized>(rng: &mut R, local: &LocalData, line: LineId) -> QResult<(MonodromyMatrix, ManoFactors)> {
    let (p, xi) = line_chart(local, line);
    let (x1, x2) = xi_pair(local, p, xi);
    let f = match line.kind {
        LineKind::Rho => {
            let mut alpha = [[random_unit(rng), random_unit(rng)], [random_unit(rng), random_unit(rng)]];
            alpha[line.h][1] = zero();
            let beta = generic_beta(rng, local, p, x1, x2)?;
            generic_factors(local, p, x1, x2, alpha, beta)
        }
        LineKind::Sigma => {
            let alpha = generic_alpha(rng, local, p, x1, x2)?;
            let mut beta = [[random_unit(rng), random_unit(rng)], [random_unit(rng), random_unit(rng)]];
            beta[1][line.h] = zero();
            generic_factors(local, p, x1, x2, alpha, beta)
        }
    };
    Ok((compose(&f, None)?, f))
}

/// Whether two distinguished lines meet: `L_{ρ_h,x_i}` meets `L_{ρ_h',x_j}` and
/// `L_{σ_h,x_i}` meets `L_{σ_h',x_j}` exactly when `h ≠ h'` and `i ≠ j`.
pub fn lines_meet(a: LineId, b: LineId) -> bool {
    a.kind == b.kind && a.h != b.h && a.i != b.i
}

/// A random matrix on the intersection of two lines, or `None` if they are disjoint.
pub fn line_intersection<R: Rng + ?Sized>(
    rng: &mut R,
    local: &LocalData,
    a: LineId,
    b: LineId,
) -> QResult<Option<(MonodromyMatrix, ManoFactors)>> {
    if !lines_meet(a, b) {
        return Ok(None);
    }
    let f = match a.kind {
        LineKind::Rho => {
            let p = Pair::new(a.i, b.i)?;
            let (x1, x2) = xi_pair(local, p, -local.rho[a.h] / local.xs[a.i]);
            let mut alpha = [[random_unit(rng), random_unit(rng)], [random_unit(rng), random_unit(rng)]];
            alpha[a.h][1] = zero();
            alpha[b.h][0] = zero();
            let beta = generic_beta(rng, local, p, x1, x2)?;
            generic_factors(local, p, x1, x2, alpha, beta)
        }
        LineKind::Sigma => {
            let rest: Vec<usize> = (0..4).filter(|&u| u != a.i && u != b.i).collect();
            let p = Pair::new(rest[0], rest[1])?;
            let (x1, x2) = xi_pair(local, p, -local.sigma[a.h] * local.xs[a.i]);
            let alpha = generic_alpha(rng, local, p, x1, x2)?;
            let mut beta = [[random_unit(rng), random_unit(rng)], [random_unit(rng), random_unit(rng)]];
            beta[1][a.h] = zero();
            beta[0][b.h] = zero();
            generic_factors(local, p, x1, x2, alpha, beta)
        }
    };
    Ok(Some((compose(&f, None)?, f)))
}

/// The value of `Π_{i,j}` forced on a line, when the line lies in a fiber of `Π_{i,j}`:
/// `L_{ρ_1,x_i} ⊂ Π_{i,j}^{-1}(0)`, `L_{ρ_2,x_i} ⊂ Π_{i,j}^{-1}(∞)` (swapped when the line
/// sits at `x_j`), and `L_{σ_h,x_k} ⊂ Π_{i,j}^{-1}(e_q^{h;i,j;k})` for `k ∉ {i,j}`.
pub fn line_pi_value(local: &LocalData, line: LineId, p: Pair) -> QResult<Option<ProjectivePoint>> {
    match line.kind {
        LineKind::Rho => {
            if !p.contains(line.i) {
                return Ok(None);
            }
            let zero_side = (line.h == 0) == (line.i == p.i);
            Ok(Some(if zero_side { ProjectivePoint::zero() } else { ProjectivePoint::infinity() }))
        }
        LineKind::Sigma => {
            if p.contains(line.i) {
                return Ok(None);
            }
            Ok(Some(ProjectivePoint::finite(q_invariant(local, line.h, p, line.i)?)))
        }
    }
}
