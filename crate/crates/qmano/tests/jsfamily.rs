//! Local data validation, monodromy matrices, gauge action, projective invariants and lines.

mod common;

use common::{c, probe_points, rng, sample_xi, unit};
use nalgebra::DMatrix;
use qmano::jsfamily::{
    column, det_profile, gauge_apply, generate_quadric, line_membership, lines_containing, nonzero_column, pi_invariant,
    pi_prime, random_local_data, reducible, row, validate, GaugePair, LineId, LineKind, LocalData, MonodromyMatrix,
    Pair, QuadricSeed,
};
use qmano::mano::{critical_value_closed_form, line_intersection, line_representative, pants_matrix, PantsPoint};
use qmano::qcore::{annulus_rep, QParam};
use qmano::qspaces::{VBasis, VElement};
use qmano::{ProjectivePoint, C64};
use rand::Rng;

fn random_data(seed: u64) -> LocalData {
    let qp = QParam::new(C64::from_polar(0.45, 0.6)).unwrap();
    random_local_data(&mut rng(seed), &qp)
}

fn pants<R: Rng>(g: &mut R, local: &LocalData, p: Pair) -> MonodromyMatrix {
    let xi = sample_xi(g, local, p, 0.05);
    let pt = PantsPoint { pair: p, xi: annulus_rep(&local.qp, xi), eta: unit(g) };
    pants_matrix(local, &pt).unwrap().0
}

fn rho(h: usize, i: usize) -> LineId {
    LineId { kind: LineKind::Rho, h, i }
}

fn sigma(h: usize, i: usize) -> LineId {
    LineId { kind: LineKind::Sigma, h, i }
}

/// Whether `a ≡ b` with a shift `|k| <= 40`, by direct search.
fn congruent_by_search(q: C64, a: C64, b: C64, tol: f64) -> bool {
    (-40..=40).any(|k| (a - b * q.powi(k)).norm() <= tol * a.norm())
}

#[test]
fn reference_data_validation() {
    let l = LocalData::reference();
    let rep = validate(&l);
    let xprod: C64 = l.xs.iter().product();
    assert!((xprod - c(0.6)).norm() < 1e-14);
    assert!(congruent_by_search(l.qp.q, xprod, l.w_char(), 1e-12));
    assert!(rep.fr);
    assert_eq!(rep.fr_shift, Some(0));
    assert!(rep.nr, "{:?}", rep.nr_failures);
    let p12 = Pair::new(0, 1).unwrap();
    assert!(rep.pair(p12).ns);
    assert!(rep.pair(p12).hyp8);

    // Hyp8 oracle: the eight values -ρ_h/x_i, -ρ_h/x_j, -σ_h x_k, -σ_h x_l pairwise incongruent
    for p in Pair::all() {
        let (k, m) = p.complement();
        let mut vals = Vec::new();
        for h in 0..2 {
            vals.push(-l.rho[h] / l.xs[p.i]);
            vals.push(-l.rho[h] / l.xs[p.j]);
            vals.push(-l.sigma[h] * l.xs[k]);
            vals.push(-l.sigma[h] * l.xs[m]);
        }
        let mut distinct = true;
        for a in 0..8 {
            for b in a + 1..8 {
                if congruent_by_search(l.qp.q, vals[a], vals[b], 1e-9) {
                    distinct = false;
                }
            }
        }
        assert_eq!(rep.pair(p).hyp8, distinct, "pair {p}");
    }
    assert!(!rep.pair(Pair::new(0, 2).unwrap()).hyp8);
    assert!(!rep.hyp48);
}

#[test]
fn resonant_singularities_fail_nr() {
    let mut l = LocalData::reference();
    l.xs[1] = l.qp.q * l.xs[0];
    let rep = validate(&l);
    assert!(!rep.nr);
    assert!(rep.nr_failures.iter().any(|s| s.contains("x1/x2")));
}

#[test]
fn fuchs_violation_is_detected() {
    let mut l = LocalData::reference();
    l.xs[3] *= 1.1;
    let rep = validate(&l);
    assert!(!rep.fr);
    assert_eq!(rep.fr_shift, None);
}

#[test]
fn constructed_splitting_is_reported() {
    let mut l = random_data(30);
    l.xs[0] = l.rho[0] / (l.sigma[1] * l.xs[1]);
    l.xs[3] = l.w_char() / (l.xs[0] * l.xs[1] * l.xs[2]);
    let rep = validate(&l);
    assert!(rep.fr);
    let p = Pair::new(0, 1).unwrap();
    assert!(!rep.pair(p).ns);
    assert!(rep.splittings.iter().any(|s| s.pair == p && s.rho == 1 && s.sigma == 2));
}

#[test]
fn random_data_is_valid() {
    for seed in 0..5 {
        let rep = validate(&random_data(seed));
        assert!(rep.fr && rep.nr && rep.hyp48);
        assert!(rep.splittings.is_empty());
    }
}

#[test]
fn pants_matrices_pass_the_determinant_profile() {
    let l = random_data(31);
    let mut g = rng(31);
    for p in Pair::all() {
        let mm = pants(&mut g, &l, p);
        let prof = det_profile(&mm).unwrap();
        assert!(prof.passed && prof.residual < 1e-8, "{}", prof.residual);
        // σ_q(det M)/det M = x_1x_2x_3x_4 / x^4
        let xprod: C64 = l.xs.iter().product();
        for x in probe_points(&l.qp, 5) {
            let ratio = mm.det(l.qp.q * x).unwrap() / mm.det(x).unwrap();
            let want = xprod / x.powi(4);
            assert!((ratio - want).norm() < 1e-7 * want.norm());
        }
    }
}

#[test]
fn diagonal_matrix_off_the_family_is_flagged() {
    let l = random_data(32);
    let mut g = rng(32);
    let entry = |g: &mut rand_chacha::ChaCha8Rng, i: usize, j: usize| {
        let ch = l.entry_char(i, j);
        let r = common::annulus_point(g, &l.qp);
        VElement::exact(&l.qp, ch, unit(g), vec![r, ch / r]).unwrap()
    };
    let m11 = entry(&mut g, 0, 0);
    let m22 = entry(&mut g, 1, 1);
    let mm = MonodromyMatrix {
        local: l.clone(),
        m: [[m11, VElement::zero(2, l.entry_char(0, 1))], [VElement::zero(2, l.entry_char(1, 0)), m22]],
    };
    assert!(!det_profile(&mm).unwrap().passed);
}

#[test]
fn values_at_singularities_have_rank_one() {
    let l = random_data(33);
    let mut g = rng(33);
    for p in Pair::all() {
        let mm = pants(&mut g, &l, p);
        for i in 0..4 {
            let v = mm.eval(l.xs[i]).unwrap();
            let n2: f64 = v.iter().flatten().map(|z| z.norm_sqr()).sum();
            let d = v[0][0] * v[1][1] - v[0][1] * v[1][0];
            assert!(d.norm() <= 1e-8 * n2);
            let (a, b) = (column(&mm, i, 0).unwrap(), column(&mm, i, 1).unwrap());
            let cross = (a.0 * b.1 - a.1 * b.0).norm();
            assert!(cross <= 1e-8 * (a.0.norm() + a.1.norm()) * (b.0.norm() + b.1.norm()));
            let (r0, r1) = (row(&mm, i, 0).unwrap(), row(&mm, i, 1).unwrap());
            let cross = (r0.0 * r1.1 - r0.1 * r1.0).norm();
            assert!(cross <= 1e-8 * (r0.0.norm() + r0.1.norm()) * (r1.0.norm() + r1.1.norm()));
        }
    }
}

#[test]
fn null_first_row_gives_a_column_with_vanishing_top_entry() {
    let l = random_data(34);
    let (mm, _) = line_representative(&mut rng(34), &l, rho(0, 0)).unwrap();
    assert!(line_membership(&mm, rho(0, 0)).unwrap());
    let (f, g) = nonzero_column(&mm, 0).unwrap();
    assert!(f.norm() <= 1e-7 * g.norm());
}

#[test]
fn pi_does_not_depend_on_the_column_choice() {
    let l = random_data(35);
    let mut g = rng(35);
    for p in Pair::all() {
        let mm = pants(&mut g, &l, p);
        for q in Pair::all() {
            let base = pi_invariant(&mm, q).unwrap();
            for (ci, cj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let a = column(&mm, q.i, ci).unwrap();
                let b = column(&mm, q.j, cj).unwrap();
                let alt = ProjectivePoint::new(a.0 * b.1, b.0 * a.1).unwrap();
                assert!(alt.approx_eq(&base, 1e-7), "{q} columns {ci},{cj}");
            }
            let base = pi_prime(&mm, q).unwrap();
            for (ri, rj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let a = row(&mm, q.i, ri).unwrap();
                let b = row(&mm, q.j, rj).unwrap();
                let alt = ProjectivePoint::new(a.0 * b.1, b.0 * a.1).unwrap();
                assert!(alt.approx_eq(&base, 1e-7), "{q} rows {ri},{rj}");
            }
        }
    }
}

#[test]
fn gauge_action() {
    let l = random_data(36);
    let mut g = rng(36);
    let mm = pants(&mut g, &l, Pair::new(0, 1).unwrap());
    let id = GaugePair { gamma: [c(1.0); 2], delta: [c(1.0); 2] };
    assert_eq!(gauge_apply(&mm, &id).unwrap(), mm);
    let bad = GaugePair { gamma: [c(0.0), c(1.0)], delta: [c(1.0); 2] };
    assert!(gauge_apply(&mm, &bad).is_err());

    let lines_mm = line_representative(&mut g, &l, sigma(1, 2)).unwrap().0;
    for _ in 0..5 {
        let gp = GaugePair { gamma: [unit(&mut g), unit(&mut g)], delta: [unit(&mut g), unit(&mut g)] };
        let n = gauge_apply(&mm, &gp).unwrap();
        let factor = gp.gamma[0] * gp.gamma[1] / (gp.delta[0] * gp.delta[1]);
        for x in probe_points(&l.qp, 4) {
            let want = mm.det(x).unwrap() * factor;
            assert!((n.det(x).unwrap() - want).norm() < 1e-12 * want.norm());
        }
        for p in Pair::all() {
            assert!(pi_invariant(&n, p).unwrap().approx_eq(&pi_invariant(&mm, p).unwrap(), 1e-9));
            assert!(pi_prime(&n, p).unwrap().approx_eq(&pi_prime(&mm, p).unwrap(), 1e-9));
        }
        assert_eq!(reducible(&n).unwrap(), reducible(&mm).unwrap());
        let on = gauge_apply(&lines_mm, &gp).unwrap();
        assert_eq!(lines_containing(&on).unwrap(), lines_containing(&lines_mm).unwrap());
    }
}

#[test]
fn transpose_exchanges_rows_and_columns() {
    let l = random_data(37);
    let mut g = rng(37);
    let mm = pants(&mut g, &l, Pair::new(1, 3).unwrap());
    let t = mm.transpose();
    assert!((t.local.rho[0] - 1.0 / l.sigma[0]).norm() < 1e-15);
    assert!((t.local.sigma[1] - 1.0 / l.rho[1]).norm() < 1e-15);
    assert!(validate(&t.local).fr);
    for x in probe_points(&l.qp, 4) {
        let (a, b) = (mm.eval(x).unwrap(), t.eval(x).unwrap());
        assert_eq!(a[0][1], b[1][0]);
    }
    for p in Pair::all() {
        assert!(pi_prime(&mm, p).unwrap().approx_eq(&pi_invariant(&t, p).unwrap(), 1e-12));
    }
}

#[test]
fn reducible_matrix_built_from_a_splitting() {
    let mut l = random_data(38);
    l.xs[1] = l.rho[0] / (l.sigma[1] * l.xs[0]);
    l.xs[3] = l.w_char() / (l.xs[0] * l.xs[1] * l.xs[2]);
    assert!(!validate(&l).splittings.is_empty());
    let qp = &l.qp;
    let m12 = VElement::exact(qp, l.entry_char(0, 1), c(1.0), vec![-l.xs[0], -l.xs[1]]).unwrap();
    let m21 = VElement::exact(qp, l.entry_char(1, 0), c(1.0), vec![-l.xs[2], -l.xs[3]]).unwrap();
    let r = C64::new(0.7, 0.3);
    let m22 = VElement::exact(qp, l.entry_char(1, 1), c(1.3), vec![r, l.entry_char(1, 1) / r]).unwrap();
    let mm = MonodromyMatrix { local: l.clone(), m: [[VElement::zero(2, l.entry_char(0, 0)), m12], [m21, m22]] };
    let prof = det_profile(&mm).unwrap();
    assert!(prof.passed);
    assert!((prof.c + 1.0).norm() < 1e-8);
    assert_eq!(reducible(&mm).unwrap(), Some((0, 0)));
    let v = pi_invariant(&mm, Pair::new(0, 2).unwrap()).unwrap();
    let d = v.chordal(&ProjectivePoint::zero()).min(v.chordal(&ProjectivePoint::infinity()));
    assert!(d < 1e-9);

    let generic = pants(&mut rng(38), &random_data(38), Pair::new(0, 1).unwrap());
    assert_eq!(reducible(&generic).unwrap(), None);
}

#[test]
fn lines_and_their_pi_values() {
    let l = random_data(39);
    let mut g = rng(39);
    let p12 = Pair::new(0, 1).unwrap();
    for _ in 0..3 {
        let (mm, _) = line_representative(&mut g, &l, rho(0, 0)).unwrap();
        for j in 1..4 {
            let v = pi_invariant(&mm, Pair::new(0, j).unwrap()).unwrap();
            assert!(v.approx_eq(&ProjectivePoint::zero(), 1e-7));
        }
        let (mm, f) = line_representative(&mut g, &l, sigma(0, 2)).unwrap();
        let want = ProjectivePoint::finite(critical_value_closed_form(&l, 0, p12, 2).unwrap());
        assert!(pi_invariant(&mm, p12).unwrap().approx_eq(&want, 1e-7));
        // a zero column at x3 makes Π'_{3,4} degenerate
        assert_eq!(f.pair, p12);
        assert!(f.beta.iter().flatten().any(|b| b.norm() == 0.0));
        let v = pi_prime(&mm, Pair::new(2, 3).unwrap()).unwrap();
        assert!(v.chordal(&ProjectivePoint::zero()).min(v.chordal(&ProjectivePoint::infinity())) < 1e-7);
    }
    let generic = pants(&mut g, &l, p12);
    let v = pi_prime(&generic, Pair::new(2, 3).unwrap()).unwrap();
    assert!(v.chordal(&ProjectivePoint::zero()).min(v.chordal(&ProjectivePoint::infinity())) > 1e-4);
    assert!(lines_containing(&generic).unwrap().is_empty());
}

#[test]
fn no_matrix_has_a_null_row_and_column_at_the_same_point() {
    let l = random_data(40);
    let mut g = rng(40);
    for line in LineId::all() {
        let (mm, _) = line_representative(&mut g, &l, line).unwrap();
        let on = lines_containing(&mm).unwrap();
        assert!(on.contains(&line));
        for i in 0..4 {
            let rows = on.iter().any(|x| x.kind == LineKind::Rho && x.i == i);
            let cols = on.iter().any(|x| x.kind == LineKind::Sigma && x.i == i);
            assert!(!(rows && cols), "{line}: {on:?}");
        }
    }
}

#[test]
fn zero_fiber_is_two_lines_meeting_once() {
    // Π_{1,2} = 0 ⟺ f_1 g_2 = 0; the two components are f_1 = 0 and g_2 = 0
    let l = random_data(41);
    let mut g = rng(41);
    let p12 = Pair::new(0, 1).unwrap();
    let count = |mm: &MonodromyMatrix| {
        let (f1, g1) = nonzero_column(mm, 0).unwrap();
        let (f2, g2) = nonzero_column(mm, 1).unwrap();
        let f1z = f1.norm() <= 1e-7 * g1.norm();
        let g2z = g2.norm() <= 1e-7 * f2.norm();
        assert!(pi_invariant(mm, p12).unwrap().approx_eq(&ProjectivePoint::zero(), 1e-7));
        f1z as usize + g2z as usize
    };
    assert_eq!(count(&line_representative(&mut g, &l, rho(0, 0)).unwrap().0), 1);
    assert_eq!(count(&line_representative(&mut g, &l, rho(1, 1)).unwrap().0), 1);
    let (mm, _) = line_intersection(&mut g, &l, rho(0, 0), rho(1, 1)).unwrap().unwrap();
    assert_eq!(count(&mm), 2);
}

#[test]
fn three_vanishing_conditions_force_the_fourth() {
    let l = random_data(42);
    let qp = &l.qp;
    let mut g = rng(42);
    let rand_entry = |g: &mut rand_chacha::ChaCha8Rng, ch: C64| {
        let r = common::annulus_point(g, qp);
        VElement::exact(qp, ch, unit(g), vec![r, ch / r]).unwrap()
    };
    let m11 = rand_entry(&mut g, l.entry_char(0, 0));
    let m12 = rand_entry(&mut g, l.entry_char(0, 1));
    let b21 = VBasis::new(qp, 2, l.entry_char(1, 0)).unwrap();
    let b22 = VBasis::new(qp, 2, l.entry_char(1, 1)).unwrap();
    // unknowns: coefficients of m21 (2) and m22 (2); det M(x_i) = m11 m22 - m12 m21 = 0 for i = 1..3
    let a = DMatrix::from_fn(3, 4, |i, j| {
        let x = l.xs[i];
        match j {
            0 | 1 => -m12.eval(qp, x).unwrap() * b21.elements[j].eval(qp, x).unwrap(),
            _ => m11.eval(qp, x).unwrap() * b22.elements[j - 2].eval(qp, x).unwrap(),
        }
    });
    let svd = a.insert_row(3, c(0.0)).svd(false, true);
    let vt = svd.v_t.unwrap();
    let kernel: Vec<C64> = (0..4).map(|j| vt[(3, j)].conj()).collect();
    let det = |x: C64| {
        let m21 = b21.eval_coeffs(qp, &kernel[..2], x).unwrap();
        let m22 = b22.eval_coeffs(qp, &kernel[2..], x).unwrap();
        let (p, s) = (m11.eval(qp, x).unwrap() * m22, m12.eval(qp, x).unwrap() * m21);
        (p - s, p.norm() + s.norm())
    };
    for i in 0..3 {
        let (d, s) = det(l.xs[i]);
        assert!(d.norm() <= 1e-10 * s);
    }
    let (d, s) = det(l.xs[3]);
    assert!(d.norm() <= 1e-8 * s, "{:e}", d.norm() / s);
    let (d, s) = det(C64::new(0.3, 0.5));
    assert!(d.norm() > 1e-4 * s);
}

#[test]
fn json_round_trips() {
    let l = random_data(43);
    let s = serde_json::to_string(&l).unwrap();
    let back: LocalData = serde_json::from_str(&s).unwrap();
    assert_eq!(back, l);
    let mm = pants(&mut rng(43), &l, Pair::new(0, 3).unwrap());
    let s = serde_json::to_string(&mm).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    for key in ["local", "m11", "m12", "m21", "m22"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let back: MonodromyMatrix = serde_json::from_str(&s).unwrap();
    assert_eq!(back, mm);
    let g: GaugePair = serde_json::from_str(r#"{"gamma": [[1,0],[2,0]], "delta": [[1,0],[0,1]]}"#).unwrap();
    assert_eq!(g.gamma[1], c(2.0));
}

#[test]
fn quadric_generator_produces_members() {
    let l = random_data(44);
    let mut g = rng(44);
    let mut made = 0;
    for _ in 0..20 {
        let seed = QuadricSeed::random(&mut g, &l);
        if let Some(out) = generate_quadric(&l, &seed).unwrap() {
            assert!(!out.tangent);
            assert!(out.lambda.norm() > 0.0);
            assert!(det_profile(&out.matrix).unwrap().passed);
            for p in Pair::all() {
                pi_invariant(&out.matrix, p).unwrap();
            }
            made += 1;
        }
        if made == 3 {
            break;
        }
    }
    assert_eq!(made, 3);
}
