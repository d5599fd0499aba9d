//! Local data of the Jimbo–Sakai family, monodromy matrices `M ∈ F_{R,S,x}` and their
//! projective invariants.
//!
//! Indices of singularities and of the entries of `R`, `S` are 0-based in the API; the
//! JSON encoding of a [`Pair`] and the CLI use the 1-based labels of the mathematics.

use crate::qcore::{annulus_rep, congruent, theta, AnnulusPoint, QParam};
use crate::qspaces::{
    check_points, fit_constant, quadric_factor, v_add, QuadricChart, VElement,
};
use crate::{ProjectivePoint, QError, QResult, C64};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;

/// An unordered pair `{i, j}` of singularity indices, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
}

impl Pair {
    pub fn new(i: usize, j: usize) -> QResult<Self> {
        if i == j || i > 3 || j > 3 {
            return Err(QError::Domain(format!("invalid pair ({}, {})", i + 1, j + 1)));
        }
        Ok(Self { i: i.min(j), j: i.max(j) })
    }

    /// The six pairs in lexicographic order.
    pub fn all() -> [Pair; 6] {
        let mut out = [Pair { i: 0, j: 1 }; 6];
        let mut n = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                out[n] = Pair { i, j };
                n += 1;
            }
        }
        out
    }

    /// The complementary pair `(k, l)`, `k < l`.
    pub fn complement(&self) -> (usize, usize) {
        let mut rest = (0..4).filter(|&t| t != self.i && t != self.j);
        let k = rest.next().expect("two indices remain");
        let l = rest.next().expect("two indices remain");
        (k, l)
    }

    pub fn contains(&self, t: usize) -> bool {
        self.i == t || self.j == t
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i + 1, self.j + 1)
    }
}

impl Serialize for Pair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.i + 1, self.j + 1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [i, j] = <[usize; 2]>::deserialize(d)?;
        if i == 0 || j == 0 {
            return Err(serde::de::Error::custom("pair labels are 1-based"));
        }
        Pair::new(i - 1, j - 1).map_err(serde::de::Error::custom)
    }
}

/// The base `q` with the local data `ρ_1, ρ_2, σ_1, σ_2, x_1..x_4`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalData {
    pub qp: QParam,
    pub rho: [C64; 2],
    pub sigma: [C64; 2],
    pub xs: [C64; 4],
}

#[derive(Serialize, Deserialize)]
struct LocalDataJson {
    #[serde(with = "crate::cser::c64")]
    q: C64,
    #[serde(with = "crate::cser::arr")]
    rho: [C64; 2],
    #[serde(with = "crate::cser::arr")]
    sigma: [C64; 2],
    #[serde(with = "crate::cser::arr")]
    xs: [C64; 4],
}

impl Serialize for LocalData {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LocalDataJson { q: self.qp.q, rho: self.rho, sigma: self.sigma, xs: self.xs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalData {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = LocalDataJson::deserialize(d)?;
        LocalData::new(QParam::new(raw.q).map_err(serde::de::Error::custom)?, raw.rho, raw.sigma, raw.xs)
            .map_err(serde::de::Error::custom)
    }
}

impl LocalData {
    pub fn new(qp: QParam, rho: [C64; 2], sigma: [C64; 2], xs: [C64; 4]) -> QResult<Self> {
        let all = rho.iter().chain(&sigma).chain(&xs);
        if all.clone().any(|v| v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite()) {
            return Err(QError::Domain("local data must be finite and nonzero".into()));
        }
        Ok(Self { qp, rho, sigma, xs })
    }

    /// The reference data set: `q = 0.5`, `ρ = (1, 3)`, `σ = (1, 5)`,
    /// `x = (0.6, 0.7, 0.8, 25/14)`.
    pub fn reference() -> Self {
        let r = |v: f64| C64::new(v, 0.0);
        Self {
            qp: QParam::new(r(0.5)).expect("valid q"),
            rho: [r(1.0), r(3.0)],
            sigma: [r(1.0), r(5.0)],
            xs: [r(0.6), r(0.7), r(0.8), r(25.0 / 14.0)],
        }
    }

    /// The same data with other tolerances.
    pub fn with_qparam(&self, qp: QParam) -> Self {
        Self { qp, ..self.clone() }
    }

    /// `c = ρ_1ρ_2/(σ_1σ_2)`, the exact character of `W = V_{4,c}` containing `det M`.
    pub fn w_char(&self) -> C64 {
        self.rho[0] * self.rho[1] / (self.sigma[0] * self.sigma[1])
    }

    /// Exact character `ρ_i/σ_j` of the entry `m_ij`.
    pub fn entry_char(&self, i: usize, j: usize) -> C64 {
        self.rho[i] / self.sigma[j]
    }

    /// `u = Π θ(-x/x_i)`, normalised to lie exactly in `W` (the last root absorbs the
    /// power of `q` allowed by the congruence in the Fuchs relation).
    pub fn u_element(&self) -> VElement {
        let mut roots: Vec<C64> = self.xs.iter().map(|x| -*x).collect();
        let p: C64 = roots[..3].iter().product();
        roots[3] = self.w_char() / p;
        VElement { k: 4, a: self.w_char(), scale: C64::new(1.0, 0.0), roots, shift: 0 }
    }

    /// The class `a = ρ_1ρ_2/(x_i x_j)` of the pair.
    pub fn pair_class(&self, p: Pair) -> C64 {
        self.rho[0] * self.rho[1] / (self.xs[p.i] * self.xs[p.j])
    }

    /// `Ξ' = {R(-ρ_h/x_i), R(-ρ_h/x_j)}` in the order `(h, i) = (1,i), (1,j), (2,i), (2,j)`.
    pub fn xi_prime(&self, p: Pair) -> [AnnulusPoint; 4] {
        let q = &self.qp;
        [
            annulus_rep(q, -self.rho[0] / self.xs[p.i]),
            annulus_rep(q, -self.rho[0] / self.xs[p.j]),
            annulus_rep(q, -self.rho[1] / self.xs[p.i]),
            annulus_rep(q, -self.rho[1] / self.xs[p.j]),
        ]
    }

    /// `Ξ'' = {R(-σ_h x_k)}` over the complementary pair, in the order
    /// `(h, k) = (1,k), (1,l), (2,k), (2,l)`.
    pub fn xi_dblprime(&self, p: Pair) -> [AnnulusPoint; 4] {
        let q = &self.qp;
        let (k, l) = p.complement();
        [
            annulus_rep(q, -self.sigma[0] * self.xs[k]),
            annulus_rep(q, -self.sigma[0] * self.xs[l]),
            annulus_rep(q, -self.sigma[1] * self.xs[k]),
            annulus_rep(q, -self.sigma[1] * self.xs[l]),
        ]
    }

    /// The four square roots `ξ` of the class `a` in `E_q`, as annulus representatives.
    pub fn upsilon(&self, p: Pair) -> [AnnulusPoint; 4] {
        let a = annulus_rep(&self.qp, self.pair_class(p)).value;
        let s0 = a.sqrt();
        let s1 = (a / self.qp.q).sqrt();
        let q = &self.qp;
        [annulus_rep(q, s0), annulus_rep(q, -s0), annulus_rep(q, s1), annulus_rep(q, -s1)]
    }
}

/// One splitting of the Fuchs relation: `x_i x_j ≡ ρ_m/σ_n` for the given pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Splitting {
    pub pair: Pair,
    /// 1-based index `m` of `ρ_m`.
    pub rho: usize,
    /// 1-based index `n` of `σ_n`.
    pub sigma: usize,
}

/// Conditions checked on a pair of singularities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub pair: Pair,
    pub ns: bool,
    pub hyp8: bool,
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub fr: bool,
    /// `m` with `x_1x_2x_3x_4 = c q^m` when the Fuchs relation holds.
    pub fr_shift: Option<i64>,
    pub nr: bool,
    pub nr_failures: Vec<String>,
    pub pairs: Vec<PairReport>,
    pub hyp48: bool,
    pub splittings: Vec<Splitting>,
}

impl ValidityReport {
    pub fn pair(&self, p: Pair) -> &PairReport {
        self.pairs.iter().find(|r| r.pair == p).expect("all six pairs are reported")
    }
}

fn distinct_classes(qp: &QParam, pts: &[AnnulusPoint]) -> bool {
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            if congruent(qp, pts[a].value, pts[b].value).is_some() {
                return false;
            }
        }
    }
    true
}

/// Checks (FR), (NR), (NS) and Hyp₈ for every pair, and lists splittings of (FR).
pub fn validate(local: &LocalData) -> ValidityReport {
    let qp = &local.qp;
    let one = C64::new(1.0, 0.0);
    let xprod: C64 = local.xs.iter().product();
    let fr_shift = congruent(qp, xprod, local.w_char());
    let mut nr_failures = Vec::new();
    if congruent(qp, local.rho[0] / local.rho[1], one).is_some() {
        nr_failures.push("rho1/rho2 in q^Z".to_string());
    }
    if congruent(qp, local.sigma[0] / local.sigma[1], one).is_some() {
        nr_failures.push("sigma1/sigma2 in q^Z".to_string());
    }
    for k in 0..4 {
        for l in k + 1..4 {
            if congruent(qp, local.xs[k] / local.xs[l], one).is_some() {
                nr_failures.push(format!("x{}/x{} in q^Z", k + 1, l + 1));
            }
        }
    }
    let mut pairs = Vec::new();
    let mut splittings = Vec::new();
    for p in Pair::all() {
        let xx = local.xs[p.i] * local.xs[p.j];
        let mut ns = true;
        for m in 0..2 {
            for n in 0..2 {
                if congruent(qp, xx, local.entry_char(m, n)).is_some() {
                    ns = false;
                    if m != n {
                        splittings.push(Splitting { pair: p, rho: m + 1, sigma: n + 1 });
                    }
                }
            }
        }
        let mut all: Vec<AnnulusPoint> = local.xi_prime(p).to_vec();
        all.extend(local.xi_dblprime(p));
        pairs.push(PairReport { pair: p, ns, hyp8: distinct_classes(qp, &all) });
    }
    let hyp48 = pairs.iter().all(|r| r.hyp8);
    ValidityReport { fr: fr_shift.is_some(), fr_shift, nr: nr_failures.is_empty(), nr_failures, pairs, hyp48, splittings }
}

fn random_annulus<R: Rng + ?Sized>(rng: &mut R, qp: &QParam) -> C64 {
    let r = qp.q.norm().powf(rng.random::<f64>() * 0.9 + 0.05);
    C64::from_polar(r, 2.0 * PI * rng.random::<f64>())
}

/// Draws random local data satisfying (FR) exactly, (NR) and Hyp₈ for all six pairs.
pub fn random_local_data<R: Rng + ?Sized>(rng: &mut R, qp: &QParam) -> LocalData {
    loop {
        let rho = [random_annulus(rng, qp), random_annulus(rng, qp)];
        let sigma = [random_annulus(rng, qp), random_annulus(rng, qp)];
        let x1 = random_annulus(rng, qp);
        let x2 = random_annulus(rng, qp);
        let x3 = random_annulus(rng, qp);
        let c = rho[0] * rho[1] / (sigma[0] * sigma[1]);
        let x4 = annulus_rep(qp, c / (x1 * x2 * x3)).original(qp);
        let local = LocalData { qp: *qp, rho, sigma, xs: [x1, x2, x3, x4] };
        let rep = validate(&local);
        // keep a margin from the excluded configurations
        let margin = QParam::with_tolerances(qp.q, qp.tol_eq, 5e-2).expect("valid tolerances");
        let strict = validate(&local.with_qparam(margin));
        if rep.fr && strict.nr && strict.hyp48 && strict.splittings.is_empty() {
            return local;
        }
    }
}

/// A monodromy matrix `M ∈ F_{R,S,x}`, entries `m_ij ∈ V_{2, ρ_i/σ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyMatrix {
    pub local: LocalData,
    pub m: [[VElement; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    local: LocalData,
    m11: VElement,
    m12: VElement,
    m21: VElement,
    m22: VElement,
}

impl Serialize for MonodromyMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson {
            local: self.local.clone(),
            m11: self.m[0][0].clone(),
            m12: self.m[0][1].clone(),
            m21: self.m[1][0].clone(),
            m22: self.m[1][1].clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MonodromyMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        Ok(Self { local: raw.local, m: [[raw.m11, raw.m12], [raw.m21, raw.m22]] })
    }
}

impl MonodromyMatrix {
    /// Values of the four entries at `x`.
    pub fn eval(&self, x: C64) -> QResult<[[C64; 2]; 2]> {
        let qp = &self.local.qp;
        Ok([
            [self.m[0][0].eval(qp, x)?, self.m[0][1].eval(qp, x)?],
            [self.m[1][0].eval(qp, x)?, self.m[1][1].eval(qp, x)?],
        ])
    }

    pub fn det(&self, x: C64) -> QResult<C64> {
        let v = self.eval(x)?;
        Ok(v[0][0] * v[1][1] - v[0][1] * v[1][0])
    }

    /// The transpose, an element of `F_{S^{-1}, R^{-1}, x}`.
    pub fn transpose(&self) -> Self {
        let one = C64::new(1.0, 0.0);
        let local = LocalData {
            qp: self.local.qp,
            rho: [one / self.local.sigma[0], one / self.local.sigma[1]],
            sigma: [one / self.local.rho[0], one / self.local.rho[1]],
            xs: self.local.xs,
        };
        let m = &self.m;
        Self { local, m: [[m[0][0].clone(), m[1][0].clone()], [m[0][1].clone(), m[1][1].clone()]] }
    }
}

fn frob2(v: &[[C64; 2]; 2]) -> f64 {
    v.iter().flatten().map(|z| z.norm_sqr()).sum()
}

/// The constant `C` in `det M = C Π θ(-x/x_i)`, with the fit residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetProfile {
    #[serde(with = "crate::cser::c64")]
    pub c: C64,
    /// Maximal relative deviation of `det M` from `C u` over the sample points.
    pub residual: f64,
    pub passed: bool,
}

/// Sample points where `det M` is computed without heavy cancellation.
///
/// Candidates cover a polar grid of the fundamental annulus and are ranked by
/// `κ(x) = (|m_11 m_22| + |m_12 m_21|) / |det M(x)|`; the `n` best are returned.
pub fn conditioned_points(mm: &MonodromyMatrix, n: usize) -> QResult<Vec<C64>> {
    let qp = &mm.local.qp;
    let rq = qp.q.norm();
    let mut ranked: Vec<(f64, C64)> = Vec::with_capacity(12 * 64);
    for r in 0..12 {
        let radius = rq.powf((r as f64 + 0.5) / 12.0);
        for t in 0..64 {
            let x = C64::from_polar(radius, 2.0 * PI * (t as f64 + 0.37) / 64.0);
            let v = mm.eval(x)?;
            let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
            let kappa = ((v[0][0] * v[1][1]).norm() + (v[0][1] * v[1][0]).norm()) / det.norm();
            if kappa.is_finite() {
                ranked.push((kappa, x));
            }
        }
    }
    if ranked.len() < n {
        return Err(QError::Degenerate("det M vanishes identically".into()));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ranked.into_iter().take(n).map(|(_, x)| x).collect())
}

/// Least-squares fit of `det M / Π θ(-x/x_i)` over the 16 best conditioned sample points.
pub fn det_profile(mm: &MonodromyMatrix) -> QResult<DetProfile> {
    let qp = &mm.local.qp;
    let u = mm.local.u_element();
    let pts = conditioned_points(mm, 16)?;
    let mut dets = Vec::with_capacity(16);
    let mut us = Vec::with_capacity(16);
    let mut scale = 0.0f64;
    for x in &pts {
        let v = mm.eval(*x)?;
        dets.push(v[0][0] * v[1][1] - v[0][1] * v[1][0]);
        scale = scale.max((v[0][0] * v[1][1]).norm()).max((v[0][1] * v[1][0]).norm());
        us.push(u.eval(qp, *x)?);
    }
    let dmax = dets.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if dmax <= 1e-12 * scale || dmax == 0.0 {
        return Err(QError::Degenerate("det M vanishes identically".into()));
    }
    let (c, residual) = fit_constant(&dets, &us);
    Ok(DetProfile { c, residual, passed: residual <= 1e-7 })
}

fn rank_one_values(mm: &MonodromyMatrix, i: usize) -> QResult<[[C64; 2]; 2]> {
    let v = mm.eval(mm.local.xs[i])?;
    let n2 = frob2(&v);
    if n2 == 0.0 {
        return Err(QError::Inconsistent(format!("M(x{}) vanishes, det M would have a multiple zero", i + 1)));
    }
    let d = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    if d.norm() > 1e-8 * n2 {
        return Err(QError::Inconsistent(format!(
            "M(x{}) is not of rank one: |det| / |M|^2 = {:e}",
            i + 1,
            d.norm() / n2
        )));
    }
    Ok(v)
}

/// Column `col` of `M(x_i)`.
pub fn column(mm: &MonodromyMatrix, i: usize, col: usize) -> QResult<(C64, C64)> {
    let v = rank_one_values(mm, i)?;
    Ok((v[0][col], v[1][col]))
}

/// Row `row` of `M(x_i)`.
pub fn row(mm: &MonodromyMatrix, i: usize, row: usize) -> QResult<(C64, C64)> {
    let v = rank_one_values(mm, i)?;
    Ok((v[row][0], v[row][1]))
}

fn pick(a: f64, b: f64) -> usize {
    if b > a * (1.0 + 1e-12) {
        1
    } else {
        0
    }
}

/// `(f_i, g_i)`: the nonzero column of the rank-one value `M(x_i)` of larger norm.
pub fn nonzero_column(mm: &MonodromyMatrix, i: usize) -> QResult<(C64, C64)> {
    let v = rank_one_values(mm, i)?;
    let n0 = v[0][0].norm_sqr() + v[1][0].norm_sqr();
    let n1 = v[0][1].norm_sqr() + v[1][1].norm_sqr();
    let c = pick(n0, n1);
    Ok((v[0][c], v[1][c]))
}

/// `(u_i, v_i)`: the nonzero row of `M(x_i)` of larger norm.
pub fn nonzero_row(mm: &MonodromyMatrix, i: usize) -> QResult<(C64, C64)> {
    let v = rank_one_values(mm, i)?;
    let n0 = v[0][0].norm_sqr() + v[0][1].norm_sqr();
    let n1 = v[1][0].norm_sqr() + v[1][1].norm_sqr();
    let r = pick(n0, n1);
    Ok((v[r][0], v[r][1]))
}

fn cross_point(a: (C64, C64), b: (C64, C64), what: &str) -> QResult<ProjectivePoint> {
    let num = a.0 * b.1;
    let den = b.0 * a.1;
    let scale = (a.0.norm() + a.1.norm()) * (b.0.norm() + b.1.norm());
    if num.norm() <= 1e-12 * scale && den.norm() <= 1e-12 * scale {
        return Err(QError::Ambiguous(format!("{what}: both homogeneous components vanish")));
    }
    ProjectivePoint::new(num, den)
}

/// `Π_{i,j}(M) = (f_i g_j : f_j g_i)`.
pub fn pi_invariant(mm: &MonodromyMatrix, p: Pair) -> QResult<ProjectivePoint> {
    let a = nonzero_column(mm, p.i)?;
    let b = nonzero_column(mm, p.j)?;
    cross_point(a, b, &format!("Pi{p}"))
}

/// `Π'_{i,j}(M) = (u_i v_j : u_j v_i)` from the nonzero rows.
pub fn pi_prime(mm: &MonodromyMatrix, p: Pair) -> QResult<ProjectivePoint> {
    let a = nonzero_row(mm, p.i)?;
    let b = nonzero_row(mm, p.j)?;
    cross_point(a, b, &format!("Pi'{p}"))
}

/// Returns the first entry `(i, j)` (0-based) of `M` that vanishes identically, if any.
pub fn reducible(mm: &MonodromyMatrix) -> QResult<Option<(usize, usize)>> {
    let qp = &mm.local.qp;
    let pts = check_points(qp, 8);
    let mut maxes = [[0.0f64; 2]; 2];
    for x in &pts {
        let v = mm.eval(*x)?;
        for i in 0..2 {
            for j in 0..2 {
                maxes[i][j] = maxes[i][j].max(v[i][j].norm());
            }
        }
    }
    let top = maxes.iter().flatten().cloned().fold(0.0, f64::max);
    for i in 0..2 {
        for j in 0..2 {
            if mm.m[i][j].is_zero() || maxes[i][j] <= 1e-12 * top {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// The two families of distinguished lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Rho,
    Sigma,
}

/// A distinguished line `L_{ρ_h,x_i}` (row `h` of `M(x_i)` null) or `L_{σ_h,x_i}`
/// (column `h` null); `h` and `i` are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineId {
    pub kind: LineKind,
    pub h: usize,
    pub i: usize,
}

impl LineId {
    /// All 16 lines, ρ-lines first.
    pub fn all() -> Vec<LineId> {
        let mut out = Vec::new();
        for kind in [LineKind::Rho, LineKind::Sigma] {
            for h in 0..2 {
                for i in 0..4 {
                    out.push(LineId { kind, h, i });
                }
            }
        }
        out
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            LineKind::Rho => "rho",
            LineKind::Sigma => "sigma",
        };
        write!(f, "L_{{{}{},x{}}}", k, self.h + 1, self.i + 1)
    }
}

/// Relative tolerance for a null row or column of `M(x_i)`.
pub const LINE_TOL: f64 = 1e-7;

/// Whether `M` lies on the given line.
pub fn line_membership(mm: &MonodromyMatrix, line: LineId) -> QResult<bool> {
    let v = mm.eval(mm.local.xs[line.i])?;
    let n = frob2(&v).sqrt();
    if n == 0.0 {
        return Err(QError::Inconsistent(format!("M(x{}) vanishes", line.i + 1)));
    }
    let (a, b) = match line.kind {
        LineKind::Rho => (v[line.h][0], v[line.h][1]),
        LineKind::Sigma => (v[0][line.h], v[1][line.h]),
    };
    Ok((a.norm_sqr() + b.norm_sqr()).sqrt() <= LINE_TOL * n)
}

/// All lines containing `M`.
pub fn lines_containing(mm: &MonodromyMatrix) -> QResult<Vec<LineId>> {
    let mut out = Vec::new();
    for l in LineId::all() {
        if line_membership(mm, l)? {
            out.push(l);
        }
    }
    Ok(out)
}

/// Diagonal gauge `(Γ, Δ)` acting by `M ↦ Γ M Δ^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugePair {
    #[serde(with = "crate::cser::arr")]
    pub gamma: [C64; 2],
    #[serde(with = "crate::cser::arr")]
    pub delta: [C64; 2],
}

/// `Γ M Δ^{-1}`.
pub fn gauge_apply(mm: &MonodromyMatrix, g: &GaugePair) -> QResult<MonodromyMatrix> {
    if g.gamma.iter().chain(&g.delta).any(|v| v.norm() == 0.0) {
        return Err(QError::Domain("gauge entries must be nonzero".into()));
    }
    let mut out = mm.clone();
    for i in 0..2 {
        for j in 0..2 {
            out.m[i][j] = mm.m[i][j].scaled(g.gamma[i] / g.delta[j]);
        }
    }
    Ok(out)
}

/// Seed for the quadric generator: `m_11`, `m_22` and the choice of root of the quadratic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadricSeed {
    pub m11: VElement,
    pub m22: VElement,
    pub branch: usize,
}

impl QuadricSeed {
    /// Random exact-character diagonal entries.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, local: &LocalData) -> Self {
        let qp = &local.qp;
        let mut entry = |i: usize| {
            let c = local.entry_char(i, i);
            let r = random_annulus(rng, qp);
            let s = C64::from_polar(0.5 + rng.random::<f64>(), 2.0 * PI * rng.random::<f64>());
            VElement { k: 2, a: c, scale: s, roots: vec![r, c / r], shift: 0 }
        };
        let m11 = entry(0);
        let m22 = entry(1);
        Self { m11, m22, branch: rng.random_range(0..2) }
    }
}

/// Output of [`generate_quadric`].
#[derive(Debug, Clone)]
pub struct QuadricGenerated {
    pub matrix: MonodromyMatrix,
    pub lambda: C64,
    /// The affine line is tangent to the quadric (double root).
    pub tangent: bool,
}

/// Builds `M` from `f_1 = m_11 m_22` by intersecting the affine line `f_1 - λ u` with
/// the quadric `Σ_2` of products `m_12 m_21`, then factoring `f_2 = f_1 - λ u`.
/// Returns `None` when no admissible `λ ≠ 0` exists.
pub fn generate_quadric(local: &LocalData, seed: &QuadricSeed) -> QResult<Option<QuadricGenerated>> {
    let qp = &local.qp;
    for (e, i) in [(&seed.m11, 0), (&seed.m22, 1)] {
        let want = local.entry_char(i, i);
        if e.k != 2 || (e.exact_char() - want).norm() > 1e-10 * want.norm() {
            return Err(QError::Incompatible(format!("seed entry m{0}{0} is not in V_2,rho/sigma", i + 1)));
        }
    }
    let f1 = crate::qspaces::product_map(&seed.m11, &seed.m22);
    let u = local.u_element();
    let a2 = local.entry_char(0, 1);
    let b2 = local.entry_char(1, 0);
    let chart = QuadricChart::new(qp, a2, b2)?;
    let xf = chart.coords(&|x| f1.eval(qp, x))?;
    let xu = chart.coords(&|x| u.eval(qp, x))?;
    let qa = xu[0] * xu[3] - xu[1] * xu[2];
    let qb = -(xf[0] * xu[3] + xu[0] * xf[3]) + (xf[1] * xu[2] + xu[1] * xf[2]);
    let qc = xf[0] * xf[3] - xf[1] * xf[2];
    let scale = qa.norm() + qb.norm() + qc.norm();
    if qc.norm() <= 1e-12 * scale {
        // f_1 already lies on Σ_2: the only intersection is λ = 0.
        return Ok(None);
    }
    let (lambda, tangent) = if qa.norm() <= 1e-12 * scale {
        if qb.norm() <= 1e-12 * scale {
            return Ok(None);
        }
        (-qc / qb, false)
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        let tangent = disc.norm() <= 1e-10 * qb.norm_sqr().max((qa * qc).norm());
        let sq = disc.sqrt();
        let r1 = (-qb + sq) / (2.0 * qa);
        let r2 = (-qb - sq) / (2.0 * qa);
        (if seed.branch.is_multiple_of(2) { r1 } else { r2 }, tangent)
    };
    if lambda.norm() <= 1e-12 * (qc.norm() / scale) {
        return Ok(None);
    }
    let f2 = v_add(qp, &f1, &u.scaled(-lambda))?.element;
    if f2.is_zero() {
        return Ok(None);
    }
    let loose = QParam::with_tolerances(qp.q, qp.tol_eq, 1e-6)?;
    let fac = match quadric_factor(&loose, &f2, a2)? {
        Some(f) => f,
        None => {
            return Err(QError::Inconsistent(
                "f1 - lambda u lies on the quadric but its zeros do not split".into(),
            ))
        }
    };
    let m = [[seed.m11.clone(), fac.f], [fac.g, seed.m22.clone()]];
    let matrix = MonodromyMatrix { local: local.clone(), m };
    Ok(Some(QuadricGenerated { matrix, lambda, tangent }))
}

/// `θ(-x/x_1)⋯θ(-x/x_4)` at `x`, the generator of the line `∩ H_{x_i}` of `W`.
pub fn u_eval(local: &LocalData, x: C64) -> QResult<C64> {
    local.u_element().eval(&local.qp, x)
}

/// Whether two matrices define the same point for all twelve projective invariants.
pub fn same_invariants(a: &MonodromyMatrix, b: &MonodromyMatrix, tol: f64) -> QResult<bool> {
    for p in Pair::all() {
        if !pi_invariant(a, p)?.approx_eq(&pi_invariant(b, p)?, tol) {
            return Ok(false);
        }
        if !pi_prime(a, p)?.approx_eq(&pi_prime(b, p)?, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Relative agreement of `σ_q(det M)/det M` with `x_1x_2x_3x_4/x^4` at `x`.
pub fn det_character_defect(mm: &MonodromyMatrix, x: C64) -> QResult<f64> {
    let qp = &mm.local.qp;
    let ratio = mm.det(qp.q * x)? / mm.det(x)?;
    let expect = mm.local.xs.iter().product::<C64>() / x.powi(4);
    Ok((ratio - expect).norm() / expect.norm())
}

/// `θ(-x/x_i)` at `x`.
pub fn theta_at_singularity(local: &LocalData, i: usize, x: C64) -> QResult<C64> {
    theta(&local.qp, -x / local.xs[i])
}
