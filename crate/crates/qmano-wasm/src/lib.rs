//! Browser bindings: a plot of `Φ` over the fundamental annulus, orbits on the Fricke
//! cubic, and the invariants of the monodromy matrix at a q-pants chart point.
//!
//! Every exported function has a plain Rust counterpart returning `Result<_, String>`, so
//! the logic is testable off the browser.

use std::f64::consts::PI;

use qmano::fricke::{jimbo_param, orbit, ThetaParams};
use qmano::jsfamily::{lines_containing, pi_invariant, pi_prime, random_local_data, LocalData, Pair};
use qmano::mano::{classify_xi, log_matrix, pants_matrix, phi, PantsPoint, XiClass};
use qmano::qcore::{annulus_rep, QParam};
use qmano::{ProjectivePoint, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse_local(local_json: &str) -> Result<LocalData, String> {
    serde_json::from_str(local_json).map_err(|e| format!("local data: {e}"))
}

fn pair(i: usize, j: usize) -> Result<Pair, String> {
    if i == 0 || j == 0 {
        return Err("pair indices are 1-based".into());
    }
    Pair::new(i - 1, j - 1).map_err(|e| e.to_string())
}

/// The reference local data set as JSON.
pub fn reference_local_json() -> String {
    serde_json::to_string(&LocalData::reference()).expect("local data serialises")
}

/// Seeded random local data satisfying the Fuchs relation, as JSON.
pub fn random_local_json(seed: u64) -> String {
    let qp = QParam::new(C64::from_polar(0.5, 0.4)).expect("valid q");
    let local = random_local_data(&mut ChaCha8Rng::seed_from_u64(seed), &qp);
    serde_json::to_string(&local).expect("local data serialises")
}

/// `Φ` on an `n_r × n_t` polar grid of the fundamental annulus, row-major in the radius
/// (from `|q|` outwards to 1) and argument (from `-π`). Each cell holds the argument of
/// `Φ` and its chordal scalar in `[0, 1]`; poles of the evaluation give `NaN`.
pub fn phi_grid_values(local_json: &str, i: usize, j: usize, n_r: usize, n_t: usize) -> Result<Vec<f64>, String> {
    let local = parse_local(local_json)?;
    let p = pair(i, j)?;
    let rq = local.qp.q.norm();
    let mut out = Vec::with_capacity(2 * n_r * n_t);
    for a in 0..n_r {
        let r = rq.powf(1.0 - (a as f64 + 0.5) / n_r as f64);
        for b in 0..n_t {
            let xi = C64::from_polar(r, PI * (2.0 * (b as f64 + 0.5) / n_t as f64 - 1.0));
            match phi(&local, p, xi) {
                Ok(v) => {
                    out.push(v.value().map_or(0.0, |z| z.arg()));
                    out.push(v.chordal_scalar());
                }
                Err(_) => out.extend([f64::NAN, f64::NAN]),
            }
        }
    }
    Ok(out)
}

/// An orbit of `s_0 ∘ s_t` started from the point of the fiber `X_1 = x1` with parameter
/// `s`. Eigenvalues are given as `[re, im]` pairs for `e_0, e_t, e_1, e_∞`. Each step
/// contributes seven numbers: the three coordinates as `re, im` and `1` when on the surface.
pub fn fricke_orbit_values(e: &[f64], x1: C64, s: C64, n: usize) -> Result<Vec<f64>, String> {
    if e.len() != 8 {
        return Err("expected eight numbers for e_0, e_t, e_1, e_∞".into());
    }
    let ev = [0, 1, 2, 3].map(|l| C64::new(e[2 * l], e[2 * l + 1]));
    let tp = ThetaParams::from_e(ev).map_err(|e| e.to_string())?;
    let (x0, xt) = jimbo_param(&tp.a, x1, s).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(7 * n);
    for pt in orbit(&[x0, xt, x1], &tp.a, n) {
        for v in pt.x {
            out.push(v.re);
            out.push(v.im);
        }
        out.push(if pt.on_surface { 1.0 } else { 0.0 });
    }
    Ok(out)
}

fn projective(v: Option<ProjectivePoint>) -> Value {
    match v {
        Some(v) => match v.value() {
            Some(z) => json!({ "re": z.re, "im": z.im, "chordal": v.chordal_scalar() }),
            None => json!({ "infinity": true, "chordal": v.chordal_scalar() }),
        },
        None => Value::Null,
    }
}

/// Chart class, `Π`, `Π'` and the special lines of the matrix at `(ξ, η)` in the chart of
/// pair `(i, j)`. At a square root of the class, `η` is the logarithmic coordinate; on a
/// special fiber only `Φ(ξ)` and the two lines are reported.
pub fn pi_explore_value(local_json: &str, i: usize, j: usize, xi: C64, eta: C64) -> Result<Value, String> {
    let local = parse_local(local_json)?;
    let p = pair(i, j)?;
    let phi_v = phi(&local, p, xi).ok();
    let (chart, mm) = match classify_xi(&local, p, xi, 1e-7) {
        XiClass::General => {
            let pt = PantsPoint { pair: p, xi: annulus_rep(&local.qp, xi), eta };
            ("generic", pants_matrix(&local, &pt).map_err(|e| e.to_string())?.0)
        }
        XiClass::Critical { xi } => {
            ("logarithmic", log_matrix(&local, p, xi.value, eta).map_err(|e| e.to_string())?.0)
        }
        XiClass::Special { lines } => {
            return Ok(json!({ "chart": "special", "phi": projective(phi_v), "lines": lines }));
        }
    };
    let pairs: Vec<Value> = Pair::all()
        .into_iter()
        .map(|q| {
            json!({
                "pair": format!("{}{}", q.i + 1, q.j + 1),
                "pi": projective(pi_invariant(&mm, q).ok()),
                "pi_prime": projective(pi_prime(&mm, q).ok()),
            })
        })
        .collect();
    let lines = lines_containing(&mm).map_err(|e| e.to_string())?;
    Ok(json!({ "chart": chart, "phi": projective(phi_v), "pairs": pairs, "lines": lines }))
}

#[wasm_bindgen]
pub fn reference_local() -> String {
    reference_local_json()
}

#[wasm_bindgen]
pub fn random_local(seed: u32) -> String {
    random_local_json(seed as u64)
}

#[wasm_bindgen]
pub fn phi_grid(local_json: &str, i: usize, j: usize, n_r: usize, n_t: usize) -> Result<Vec<f64>, JsError> {
    phi_grid_values(local_json, i, j, n_r, n_t).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fricke_orbit(e: &[f64], x1_re: f64, x1_im: f64, s_re: f64, s_im: f64, n: usize) -> Result<Vec<f64>, JsError> {
    fricke_orbit_values(e, C64::new(x1_re, x1_im), C64::new(s_re, s_im), n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pi_explore(
    local_json: &str,
    i: usize,
    j: usize,
    xi_re: f64,
    xi_im: f64,
    eta_re: f64,
    eta_im: f64,
) -> Result<String, JsError> {
    pi_explore_value(local_json, i, j, C64::new(xi_re, xi_im), C64::new(eta_re, eta_im))
        .map(|v| v.to_string())
        .map_err(|e| JsError::new(&e))
}
