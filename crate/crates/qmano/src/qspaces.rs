//! The spaces `V_{k,a} = { f holomorphic on C^* : f(qx) = a x^{-k} f(x) }`.
//!
//! Every nonzero element factors as `λ Π θ_q(x/α_i)` with `Π α_i = a`; its zeros are the
//! spirals `-α_i q^Z`. A [`VElement`] stores this factored form. The integer `shift`
//! records the exact character: the stored function lies in `V_{k, a q^shift}` and
//! `Π α_i = a q^shift` holds to rounding.

use crate::qcore::{annulus_rep, congruent, theta, theta_jet, AnnulusPoint, QParam};
use crate::{QError, QResult, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// An element `scale * Π θ_q(x/roots_i)` of `V_{k, a q^shift}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VElement {
    pub k: usize,
    /// Character class label.
    #[serde(with = "crate::cser::c64")]
    pub a: C64,
    #[serde(with = "crate::cser::c64")]
    pub scale: C64,
    #[serde(with = "crate::cser::vec")]
    pub roots: Vec<C64>,
    pub shift: i64,
}

impl VElement {
    /// Builds an element from its roots; the product of the roots must be congruent to
    /// `a`. The last root is rescaled by a unit-size factor so that the product equals
    /// `a q^shift` exactly.
    pub fn new(qp: &QParam, a: C64, scale: C64, roots: Vec<C64>) -> QResult<Self> {
        if roots.is_empty() {
            return Err(QError::Domain("an element needs at least one root".into()));
        }
        if roots.iter().any(|r| r.norm() == 0.0) {
            return Err(QError::Domain("roots must be nonzero".into()));
        }
        let p: C64 = roots.iter().product();
        let m = congruent(qp, p, a).ok_or_else(|| {
            QError::Incompatible(format!("root product {p} is not congruent to the character {a}"))
        })?;
        let mut roots = roots;
        let target = a * qp.pow(m);
        let last = roots.len() - 1;
        roots[last] *= target / p;
        Ok(Self { k: roots.len(), a, scale, roots, shift: m })
    }

    /// Builds an element of `V_{k,c}` for an exact character `c` (shift 0).
    pub fn exact(qp: &QParam, c: C64, scale: C64, roots: Vec<C64>) -> QResult<Self> {
        let e = Self::new(qp, c, scale, roots)?;
        if e.shift != 0 {
            let mut e = e;
            let last = e.roots.len() - 1;
            e.roots[last] *= qp.pow(-e.shift);
            e.shift = 0;
            return Ok(e);
        }
        Ok(e)
    }

    /// The zero element of `V_{k,c}`.
    pub fn zero(k: usize, ch: C64) -> Self {
        let mut roots = vec![c(1.0); k.max(1)];
        roots[k.max(1) - 1] = ch;
        Self { k: k.max(1), a: ch, scale: c(0.0), roots, shift: 0 }
    }

    /// The exact character `Π roots = a q^shift`.
    pub fn exact_char(&self) -> C64 {
        self.roots.iter().product()
    }

    pub fn is_zero(&self) -> bool {
        self.scale.norm() == 0.0
    }

    /// Value at `x`.
    pub fn eval(&self, qp: &QParam, x: C64) -> QResult<C64> {
        if self.is_zero() {
            return Ok(c(0.0));
        }
        let mut acc = self.scale;
        for r in &self.roots {
            acc *= theta(qp, x / r)?;
        }
        Ok(acc)
    }

    /// Value and derivative at `x`.
    pub fn eval_d(&self, qp: &QParam, x: C64) -> QResult<(C64, C64)> {
        if self.is_zero() {
            return Ok((c(0.0), c(0.0)));
        }
        let mut val = self.scale;
        let mut der = c(0.0);
        for r in &self.roots {
            let j = theta_jet(qp, x / r)?;
            der = der * j.value + val * j.d1 / r;
            val *= j.value;
        }
        Ok((val, der))
    }

    /// The element multiplied by a constant.
    pub fn scaled(&self, s: C64) -> Self {
        let mut e = self.clone();
        e.scale *= s;
        e
    }

    /// Zeros as annulus representatives (`-root` reduced), read off the factored form.
    pub fn zeros(&self, qp: &QParam) -> Vec<AnnulusPoint> {
        self.roots.iter().map(|r| annulus_rep(qp, -*r)).collect()
    }
}

/// `v_eval`: evaluation of the factored form.
pub fn v_eval(qp: &QParam, f: &VElement, x: C64) -> QResult<C64> {
    f.eval(qp, x)
}

/// `hyperplane_eval`: the linear form `f ↦ f(x0)` defining the hyperplane `H_{x0}`.
pub fn hyperplane_eval(qp: &QParam, x0: C64, f: &VElement) -> QResult<C64> {
    f.eval(qp, x0)
}

/// Zeros of an element of `V_{k,c}` in the fundamental annulus, with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSet {
    /// Zeros repeated according to multiplicity.
    pub zeros: Vec<AnnulusPoint>,
    /// Multiplicity of each entry of `zeros` (entries of one cluster share it).
    pub multiplicity: Vec<usize>,
    /// Largest `|f(z)| / max_{|x|=r} |f|` over the returned zeros.
    pub residual: f64,
    /// Number of quadrature nodes that achieved convergence.
    pub nodes: usize,
}

/// Roots of a monic polynomial `z^n + c[n-1] z^{n-1} + ... + c[0]`.
fn monic_roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len();
    match n {
        0 => vec![],
        1 => vec![-coeffs[0]],
        2 => {
            let (b, cc) = (coeffs[1], coeffs[0]);
            let d = (b * b - 4.0 * cc).sqrt();
            let r1 = if (-b + d).norm() > (-b - d).norm() { (-b + d) / 2.0 } else { (-b - d) / 2.0 };
            let r2 = if r1.norm() > 0.0 { cc / r1 } else { -b };
            vec![r1, r2]
        }
        _ => {
            let mut m = DMatrix::<C64>::zeros(n, n);
            for i in 1..n {
                m[(i, i - 1)] = c(1.0);
            }
            for i in 0..n {
                m[(i, n - 1)] = -coeffs[i];
            }
            let t = m.schur().unpack().1;
            let mut roots: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
            for r in roots.iter_mut() {
                for _ in 0..3 {
                    let (mut p, mut dp) = (c(1.0), c(0.0));
                    for i in (0..n).rev() {
                        dp = dp * *r + p;
                        p = p * *r + coeffs[i];
                    }
                    if dp.norm() == 0.0 {
                        break;
                    }
                    let step = p / dp;
                    if !step.re.is_finite() || step.norm() > 1e-3 * r.norm().max(1e-300) {
                        break;
                    }
                    *r -= step;
                }
            }
            roots
        }
    }
}

/// Power sums `s_p`, `p = 1..=k`, of the zeros in `r|q| < |x| < r`, using `n` nodes.
fn power_sums(
    qp: &QParam,
    k: usize,
    r: f64,
    n: usize,
    f: &dyn Fn(C64) -> QResult<(C64, C64)>,
) -> QResult<Vec<C64>> {
    let mut acc = vec![c(0.0); k + 1];
    for j in 0..n {
        let x = C64::from_polar(r, 2.0 * PI * (j as f64) / (n as f64));
        let (v, d) = f(x)?;
        if v.norm() == 0.0 {
            return Err(QError::RootFinding(format!("zero of the function on the contour at x = {x}")));
        }
        let ld = d / v;
        let mut xp = x;
        for item in acc.iter_mut().skip(1) {
            xp *= x;
            *item += xp * ld;
        }
    }
    let nf = n as f64;
    Ok((1..=k).map(|p| (c(1.0) - qp.pow(p as i64)) * acc[p] / nf).collect())
}

/// Power sums on the circle `|x| = r`, doubling the node count until they settle.
fn contour_power_sums(
    qp: &QParam,
    k: usize,
    r: f64,
    f: &dyn Fn(C64) -> QResult<(C64, C64)>,
) -> QResult<(Vec<C64>, usize)> {
    let mut n = 256usize;
    let mut sums = power_sums(qp, k, r, n, f)?;
    let mut prev = f64::INFINITY;
    loop {
        let n2 = 2 * n;
        let s2 = power_sums(qp, k, r, n2, f)?;
        let diff = sums.iter().zip(&s2).enumerate().map(|(p, (a, b))| (a - b).norm() / r.powi(p as i32 + 1)).fold(0.0, f64::max);
        sums = s2;
        n = n2;
        if diff <= 1e-9 * k as f64 {
            return Ok((sums, n));
        }
        // Rounding noise in f'/f stalls the drift; the Newton polish and the residual
        // check then decide whether the zeros are acceptable.
        if n >= 4096 && diff <= 1e-5 && diff > 0.25 * prev {
            return Ok((sums, n));
        }
        prev = diff;
        if n >= 1 << 16 {
            return Err(QError::RootFinding(format!(
                "contour quadrature on |x| = {r} did not converge (power-sum drift {diff:e})"
            )));
        }
    }
}

/// Locates the `k` zeros (with multiplicity) of a function `f ∈ V_{k,c}` in the
/// fundamental annulus. `f` returns value and derivative.
///
/// The power sums of the zeros lying in a shifted annulus `r|q| < |x| < r` are contour
/// integrals of `x^p f'/f`; the functional equation folds the inner circle onto the
/// outer one, so a single circle suffices. Newton's identities then give a polynomial
/// whose roots are polished by Newton's method on `f`.
pub fn find_zeros_fn(
    qp: &QParam,
    k: usize,
    c_exact: C64,
    f: &dyn Fn(C64) -> QResult<(C64, C64)>,
) -> QResult<ZeroSet> {
    if k == 0 {
        return Err(QError::Domain("degree must be positive".into()));
    }
    let rq = qp.q.norm();
    // Rank contour radii by how far (in the sup-normalised sense) they stay from the zeros.
    let samples = 96;
    let mut ranked: Vec<(f64, f64, f64)> = Vec::with_capacity(24);
    for j in 0..24 {
        let r = rq.powf((j as f64 + 0.5) / 24.0);
        let mut mn = f64::INFINITY;
        let mut mx = 0.0f64;
        for s in 0..samples {
            let x = C64::from_polar(r, 2.0 * PI * (s as f64 + 0.5) / samples as f64);
            let v = f(x)?.0.norm();
            mn = mn.min(v);
            mx = mx.max(v);
        }
        if mx == 0.0 {
            return Err(QError::Degenerate("function vanishes identically on the sampling circles".into()));
        }
        ranked.push((mn / mx, r, mx));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut last_err = None;
    let mut found = None;
    for &(_, r, fmax) in ranked.iter().take(4) {
        match contour_power_sums(qp, k, r, f) {
            Ok((sums, n)) => {
                found = Some((sums, n, r, fmax));
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (sums, n, r, fmax) = match found {
        Some(v) => v,
        None => return Err(last_err.expect("at least one radius was tried")),
    };

    // Newton's identities: elementary symmetric functions from power sums.
    let mut e = vec![c(1.0)];
    for m in 1..=k {
        let mut acc = c(0.0);
        for i in 1..=m {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[m - i] * sums[i - 1];
        }
        e.push(acc / m as f64);
    }
    // monic polynomial z^k - e1 z^{k-1} + e2 z^{k-2} - ...
    let coeffs: Vec<C64> = (0..k).map(|i| {
        let m = k - i;
        if m.is_multiple_of(2) { e[m] } else { -e[m] }
    }).collect();
    let mut roots = monic_roots(&coeffs);

    // Cluster detection for multiple zeros.
    let mut cluster = vec![usize::MAX; k];
    let mut nclusters = 0;
    for i in 0..k {
        if cluster[i] != usize::MAX {
            continue;
        }
        cluster[i] = nclusters;
        for j in i + 1..k {
            if cluster[j] == usize::MAX && (roots[i] - roots[j]).norm() <= 1e-5 * roots[i].norm() {
                cluster[j] = nclusters;
            }
        }
        nclusters += 1;
    }
    let mut multiplicity = vec![1usize; k];
    for cl in 0..nclusters {
        let idx: Vec<usize> = (0..k).filter(|&i| cluster[i] == cl).collect();
        if idx.len() > 1 {
            let mean: C64 = idx.iter().map(|&i| roots[i]).sum::<C64>() / idx.len() as f64;
            for &i in &idx {
                roots[i] = mean;
                multiplicity[i] = idx.len();
            }
        } else {
            let i = idx[0];
            let mut z = roots[i];
            let mut fz = f(z)?.0.norm();
            for _ in 0..12 {
                let (v, d) = f(z)?;
                if d.norm() == 0.0 {
                    break;
                }
                let cand = z - v / d;
                let fc = f(cand)?.0.norm();
                if fc < fz {
                    let step = (cand - z).norm();
                    z = cand;
                    fz = fc;
                    if step <= 1e-15 * z.norm() {
                        break;
                    }
                } else {
                    break;
                }
            }
            roots[i] = z;
        }
    }

    let mut residual = 0.0f64;
    for z in &roots {
        residual = residual.max(f(*z)?.0.norm() / fmax);
    }
    if residual > 1e-7 {
        return Err(QError::RootFinding(format!(
            "zeros {roots:?} leave residual {residual:e} relative to max |f| on |x| = {r}"
        )));
    }
    let prod: C64 = roots.iter().product();
    let expected = if k.is_multiple_of(2) { c_exact } else { -c_exact };
    let loose = QParam::with_tolerances(qp.q, qp.tol_eq, 1e-6)?;
    if congruent(&loose, prod, expected).is_none() {
        return Err(QError::RootFinding(format!(
            "product of zeros {prod} is not congruent to (-1)^k c = {expected}"
        )));
    }
    let zeros = roots.iter().map(|z| annulus_rep(qp, *z)).collect();
    Ok(ZeroSet { zeros, multiplicity, residual, nodes: n })
}

/// `find_zeros` on a factored element: runs the numerical zero finder on its values.
pub fn find_zeros(qp: &QParam, f: &VElement) -> QResult<ZeroSet> {
    if f.is_zero() {
        return Err(QError::Degenerate("the zero element has no divisor".into()));
    }
    let g = |x: C64| f.eval_d(qp, x);
    find_zeros_fn(qp, f.k, f.exact_char(), &g)
}

/// Probe points on `|x| = sqrt|q|` used for interpolation systems.
fn probe_points(qp: &QParam, n: usize, rotation: f64) -> Vec<C64> {
    let r = qp.q.norm().sqrt();
    (0..n).map(|j| C64::from_polar(r, 2.0 * PI * (j as f64 + 0.5) / n as f64 + rotation)).collect()
}

fn condition_number(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let mx = sv.iter().cloned().fold(0.0, f64::max);
    let mn = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if mn == 0.0 { f64::INFINITY } else { mx / mn }
}

/// Picks the rotation of `n` probe points that best conditions the interpolation matrix of
/// the given functions.
fn best_probes(qp: &QParam, funcs: &[VElement]) -> QResult<(Vec<C64>, DMatrix<C64>, f64)> {
    let n = funcs.len();
    let mut best: Option<(Vec<C64>, DMatrix<C64>, f64)> = None;
    for t in 0..8 {
        let pts = probe_points(qp, n, 0.1234 + 0.37 * t as f64 / n as f64);
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (i, x) in pts.iter().enumerate() {
            for (j, f) in funcs.iter().enumerate() {
                m[(i, j)] = f.eval(qp, *x)?;
            }
        }
        let cond = condition_number(&m);
        if best.as_ref().is_none_or(|b| cond < b.2) {
            best = Some((pts, m, cond));
        }
    }
    Ok(best.expect("at least one rotation"))
}

/// The canonical basis `θ_q(x/α)^k`, `α^k = c`, of `V_{k,c}` with its interpolation data.
#[derive(Debug, Clone)]
pub struct VBasis {
    pub k: usize,
    pub c: C64,
    pub elements: Vec<VElement>,
    pub probes: Vec<C64>,
    interp: DMatrix<C64>,
    /// 2-norm condition number of the interpolation matrix.
    pub condition: f64,
}

impl VBasis {
    pub fn new(qp: &QParam, k: usize, c_exact: C64) -> QResult<Self> {
        if k == 0 {
            return Err(QError::Domain("degree must be positive".into()));
        }
        let root = c_exact.powf(1.0 / k as f64);
        let elements: Vec<VElement> = (0..k)
            .map(|j| {
                let alpha = root * C64::from_polar(1.0, 2.0 * PI * j as f64 / k as f64);
                VElement { k, a: c_exact, scale: c(1.0), roots: vec![alpha; k], shift: 0 }
            })
            .collect();
        let (probes, interp, condition) = best_probes(qp, &elements)?;
        if !condition.is_finite() || condition > 1e12 {
            return Err(QError::Degenerate(format!("basis interpolation matrix is singular (cond {condition:e})")));
        }
        Ok(Self { k, c: c_exact, elements, probes, interp, condition })
    }

    /// Coordinates of a function of `V_{k,c}` given through its values.
    pub fn coeffs_of(&self, f: &dyn Fn(C64) -> QResult<C64>) -> QResult<Vec<C64>> {
        let rhs = DMatrix::from_iterator(self.k, 1, self.probes.iter().map(|x| f(*x)).collect::<QResult<Vec<_>>>()?);
        let sol = self
            .interp
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| QError::Degenerate("singular interpolation system".into()))?;
        Ok(sol.iter().cloned().collect())
    }

    /// Evaluates a coefficient vector.
    pub fn eval_coeffs(&self, qp: &QParam, coeffs: &[C64], x: C64) -> QResult<C64> {
        let mut acc = c(0.0);
        for (cf, e) in coeffs.iter().zip(&self.elements) {
            acc += cf * e.eval(qp, x)?;
        }
        Ok(acc)
    }
}

/// Least-squares constant `λ` with `h ≈ λ g` over sample points; returns `(λ, relative residual)`.
pub(crate) fn fit_constant(hs: &[C64], gs: &[C64]) -> (C64, f64) {
    let num: C64 = hs.iter().zip(gs).map(|(h, g)| g.conj() * h).sum();
    let den: f64 = gs.iter().map(|g| g.norm_sqr()).sum();
    if den == 0.0 {
        return (c(0.0), f64::INFINITY);
    }
    let lam = num / den;
    let hmax = hs.iter().map(|h| h.norm()).fold(0.0, f64::max);
    let res = hs.iter().zip(gs).map(|(h, g)| (h - lam * g).norm()).fold(0.0, f64::max);
    (lam, if hmax == 0.0 { 0.0 } else { res / hmax })
}

/// Sample points used to fit and verify factored forms.
pub(crate) fn check_points(qp: &QParam, n: usize) -> Vec<C64> {
    let rq = qp.q.norm();
    (0..n)
        .map(|j| {
            let r = rq.powf(0.2 + 0.6 * ((j as f64 * 0.618034) % 1.0));
            C64::from_polar(r, 2.0 * PI * (j as f64 + 0.31) / n as f64)
        })
        .collect()
}

/// Refits a function known to lie in `V_{k,c_exact}` into factored form.
///
/// `label` is the class label stored in the result and `shift` the exponent with
/// `c_exact = label q^shift`.
pub fn refit(
    qp: &QParam,
    k: usize,
    label: C64,
    shift: i64,
    f: &dyn Fn(C64) -> QResult<(C64, C64)>,
) -> QResult<VElement> {
    let c_exact = label * qp.pow(shift);
    let pts = check_points(qp, 16);
    let vals: Vec<C64> = pts.iter().map(|x| f(*x).map(|v| v.0)).collect::<QResult<_>>()?;
    let vmax = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        let mut z = VElement::zero(k, c_exact);
        z.a = label;
        z.shift = shift;
        let last = z.roots.len() - 1;
        z.roots[last] = c_exact / z.roots[..last].iter().product::<C64>();
        return Ok(z);
    }
    let zs = find_zeros_fn(qp, k, c_exact, f)?;
    let mut roots: Vec<C64> = zs.zeros.iter().map(|z| -z.value).collect();
    let p: C64 = roots.iter().product();
    let last = roots.len() - 1;
    roots[last] *= c_exact / p;
    let unit = VElement { k, a: label, scale: c(1.0), roots, shift };
    let gs: Vec<C64> = pts.iter().map(|x| unit.eval(qp, *x)).collect::<QResult<_>>()?;
    let (lam, res) = fit_constant(&vals, &gs);
    if res > 1e-8 {
        return Err(QError::RootFinding(format!("refit residual {res:e} exceeds 1e-8")));
    }
    Ok(unit.scaled(lam))
}

/// The sum of two elements in both coefficient and factored form.
#[derive(Debug, Clone)]
pub struct VSum {
    pub element: VElement,
    pub coeffs: Vec<C64>,
    pub basis: VBasis,
}

/// `v_add`: sum of two elements of the same space, refactored into theta form.
pub fn v_add(qp: &QParam, f: &VElement, g: &VElement) -> QResult<VSum> {
    if f.k != g.k {
        return Err(QError::Incompatible(format!("degrees differ: {} vs {}", f.k, g.k)));
    }
    let cf = f.exact_char();
    let cg = g.exact_char();
    if (cf - cg).norm() > 1e-10 * cf.norm() {
        let hint = match congruent(qp, cf, cg) {
            Some(m) => format!("characters differ by q^{m}"),
            None => "characters are not congruent".to_string(),
        };
        return Err(QError::Incompatible(format!("exact characters {cf} and {cg} differ ({hint})")));
    }
    let basis = VBasis::new(qp, f.k, cf)?;
    let h = |x: C64| -> QResult<(C64, C64)> {
        let (a, da) = f.eval_d(qp, x)?;
        let (b, db) = g.eval_d(qp, x)?;
        Ok((a + b, da + db))
    };
    let ca = basis.coeffs_of(&|x| f.eval(qp, x))?;
    let cb = basis.coeffs_of(&|x| g.eval(qp, x))?;
    let coeffs: Vec<C64> = ca.iter().zip(&cb).map(|(a, b)| a + b).collect();

    let pts = check_points(qp, 12);
    let mut sum_max = 0.0f64;
    let mut part_max = 0.0f64;
    for x in &pts {
        let a = f.eval(qp, *x)?;
        let b = g.eval(qp, *x)?;
        sum_max = sum_max.max((a + b).norm());
        part_max = part_max.max(a.norm()).max(b.norm());
    }
    let element = if sum_max <= 1e-13 * part_max {
        let mut z = VElement::zero(f.k, cf);
        z.a = f.a;
        z.shift = f.shift;
        z
    } else {
        refit(qp, f.k, f.a, f.shift, &h)?
    };
    // factored and coefficient forms must agree
    for x in check_points(qp, 8) {
        let v1 = element.eval(qp, x)?;
        let v2 = basis.eval_coeffs(qp, &coeffs, x)?;
        if (v1 - v2).norm() > 1e-8 * part_max.max(1e-300) {
            return Err(QError::RootFinding(format!(
                "factored ({v1}) and coefficient ({v2}) forms disagree at {x}"
            )));
        }
    }
    Ok(VSum { element, coeffs, basis })
}

/// `product_map`: `(f, g) ↦ f g`, concatenating the factored forms.
pub fn product_map(f: &VElement, g: &VElement) -> VElement {
    let mut roots = f.roots.clone();
    roots.extend_from_slice(&g.roots);
    VElement { k: f.k + g.k, a: f.a * g.a, scale: f.scale * g.scale, roots, shift: f.shift + g.shift }
}

/// Coordinates adapted to the product map `p_{a,b}: V_{2,a} × V_{2,b} → V_{4,ab}`.
///
/// With `u_1 = θ(x/α)^2`, `u_2 = θ(-x/α)^2` (`α^2 = a`) and `v_1, v_2` built likewise from
/// `b`, the products `u_i v_j` form a basis of `V_{4,ab}`; the image of `p_{a,b}` is the
/// quadric `XT - YZ = 0` in the coordinates `(X, Y, Z, T)` on `(u_1v_1, u_1v_2, u_2v_1, u_2v_2)`.
#[derive(Debug, Clone)]
pub struct QuadricChart {
    pub a: C64,
    pub b: C64,
    pub u: [VElement; 2],
    pub v: [VElement; 2],
    probes: Vec<C64>,
    interp: DMatrix<C64>,
    pub condition: f64,
}

impl QuadricChart {
    pub fn new(qp: &QParam, a: C64, b: C64) -> QResult<Self> {
        let al = a.sqrt();
        let be = b.sqrt();
        let mk = |r: C64, ch: C64| VElement { k: 2, a: ch, scale: c(1.0), roots: vec![r, r], shift: 0 };
        let u = [mk(al, a), mk(-al, a)];
        let v = [mk(be, b), mk(-be, b)];
        let prods = vec![
            product_map(&u[0], &v[0]),
            product_map(&u[0], &v[1]),
            product_map(&u[1], &v[0]),
            product_map(&u[1], &v[1]),
        ];
        let (probes, interp, condition) = best_probes(qp, &prods)?;
        if !condition.is_finite() || condition > 1e12 {
            return Err(QError::Degenerate(format!("quadric basis is singular (cond {condition:e})")));
        }
        Ok(Self { a, b, u, v, probes, interp, condition })
    }

    /// Coordinates `(X, Y, Z, T)` of a function of `V_{4,ab}` given by its values.
    pub fn coords(&self, h: &dyn Fn(C64) -> QResult<C64>) -> QResult<[C64; 4]> {
        let rhs = DMatrix::from_iterator(4, 1, self.probes.iter().map(|x| h(*x)).collect::<QResult<Vec<_>>>()?);
        let sol = self
            .interp
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| QError::Degenerate("singular quadric interpolation system".into()))?;
        Ok([sol[0], sol[1], sol[2], sol[3]])
    }

    /// Coordinates of `f` on `(u_1, u_2)` for `f ∈ V_{2,a}`.
    pub fn left_coords(&self, qp: &QParam, f: &VElement) -> QResult<[C64; 2]> {
        two_coords(qp, &self.u, f)
    }

    /// Coordinates of `g` on `(v_1, v_2)` for `g ∈ V_{2,b}`.
    pub fn right_coords(&self, qp: &QParam, g: &VElement) -> QResult<[C64; 2]> {
        two_coords(qp, &self.v, g)
    }
}

fn two_coords(qp: &QParam, basis: &[VElement; 2], f: &VElement) -> QResult<[C64; 2]> {
    let pts = probe_points(qp, 2, 0.4321);
    let m = DMatrix::from_fn(2, 2, |i, j| basis[j].eval(qp, pts[i]).unwrap_or(c(f64::NAN)));
    let rhs = DMatrix::from_iterator(2, 1, pts.iter().map(|x| f.eval(qp, *x)).collect::<QResult<Vec<_>>>()?);
    let sol = m.lu().solve(&rhs).ok_or_else(|| QError::Degenerate("singular 2x2 system".into()))?;
    Ok([sol[0], sol[1]])
}

/// `XT - YZ`, normalised by the squared coordinate norm.
pub fn quadric_defect(x: &[C64; 4]) -> f64 {
    let n: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if n == 0.0 {
        return 0.0;
    }
    (x[0] * x[3] - x[1] * x[2]).norm() / n
}

/// A factorisation `h = f g` with `f ∈ V_{2,a}` (unit scale) and `g ∈ V_{2,c/a}`.
#[derive(Debug, Clone)]
pub struct QuadricFactors {
    pub f: VElement,
    pub g: VElement,
    /// When `a ≡ c/a` the roles may be exchanged, giving a second preimage.
    pub swapped: Option<(VElement, VElement)>,
}

/// `quadric_factor`: splits the four zeros of `h ∈ V_{4,c}` into a pair with product `≡ a`
/// and a complementary pair, returning the factors, or `None` when no split exists.
pub fn quadric_factor(qp: &QParam, h: &VElement, a: C64) -> QResult<Option<QuadricFactors>> {
    if h.k != 4 {
        return Err(QError::Domain(format!("quadric_factor expects degree 4, got {}", h.k)));
    }
    if h.is_zero() {
        return Err(QError::Degenerate("cannot factor the zero element".into()));
    }
    let c_exact = h.exact_char();
    let b = c_exact / a;
    let pairings = [([0usize, 1], [2usize, 3]), ([0, 2], [1, 3]), ([0, 3], [1, 2])];
    let mut found: Vec<([usize; 2], [usize; 2])> = Vec::new();
    for (p, r) in pairings {
        for (left, right) in [(p, r), (r, p)] {
            let pl = h.roots[left[0]] * h.roots[left[1]];
            if congruent(qp, pl, a).is_some() {
                found.push((left, right));
            }
        }
    }
    if found.is_empty() {
        return Ok(None);
    }
    let build = |left: [usize; 2], right: [usize; 2]| -> QResult<(VElement, VElement)> {
        let mut fr = vec![h.roots[left[0]], h.roots[left[1]]];
        let adj = a / (fr[0] * fr[1]);
        fr[1] *= adj;
        let f = VElement { k: 2, a, scale: c(1.0), roots: fr, shift: 0 };
        let mut gr = vec![h.roots[right[0]], h.roots[right[1]]];
        let adj = b / (gr[0] * gr[1]);
        gr[1] *= adj;
        let g_unit = VElement { k: 2, a: b, scale: c(1.0), roots: gr, shift: 0 };
        let pts = check_points(qp, 8);
        let hv: Vec<C64> = pts.iter().map(|x| h.eval(qp, *x)).collect::<QResult<_>>()?;
        let pv: Vec<C64> = pts
            .iter()
            .map(|x| Ok(f.eval(qp, *x)? * g_unit.eval(qp, *x)?))
            .collect::<QResult<_>>()?;
        let (lam, res) = fit_constant(&hv, &pv);
        if res > 1e-8 {
            return Err(QError::Inconsistent(format!("factor product misses h by {res:e}")));
        }
        Ok((f, g_unit.scaled(lam)))
    };
    // Distinct splits (as multisets of zero classes on the left).
    let key = |left: [usize; 2]| {
        let mut z: Vec<C64> = left.iter().map(|&i| annulus_rep(qp, -h.roots[i]).value).collect();
        z.sort_by(|x, y| (x.arg(), x.norm()).partial_cmp(&(y.arg(), y.norm())).unwrap());
        z
    };
    let same = |x: &[C64], y: &[C64]| x.iter().zip(y).all(|(a, b)| (a - b).norm() <= 1e-7 * a.norm());
    let mut distinct: Vec<([usize; 2], [usize; 2], Vec<C64>)> = Vec::new();
    for (l, r) in &found {
        let kz = key(*l);
        if !distinct.iter().any(|d| same(&d.2, &kz)) {
            distinct.push((*l, *r, kz));
        }
    }
    let complementary = |x: &([usize; 2], [usize; 2], Vec<C64>), y: &([usize; 2], [usize; 2], Vec<C64>)| same(&key(x.1), &y.2);
    let (primary, swapped) = match distinct.len() {
        1 => (distinct[0].clone(), None),
        2 if complementary(&distinct[0], &distinct[1]) => (distinct[0].clone(), Some(distinct[1].clone())),
        _ => {
            return Err(QError::Ambiguous(format!(
                "zeros split in several ways: {:?}",
                distinct.iter().map(|d| (d.0, d.1)).collect::<Vec<_>>()
            )))
        }
    };
    let (f, g) = build(primary.0, primary.1)?;
    let swapped = match swapped {
        Some(s) => Some(build(s.0, s.1)?),
        None => None,
    };
    Ok(Some(QuadricFactors { f, g, swapped }))
}
