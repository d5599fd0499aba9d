//! Numerical monodromy data for the Jimbo-Sakai family of linear q-difference systems.
//!
//! The crate is organised in layers:
//! - [`qcore`]: theta function, q-Pochhammer symbols, elementary characters, q-logarithm,
//!   annulus representatives and q-congruence.
//! - [`qspaces`]: the spaces `V_{k,a}` of theta products, zero finding in the fundamental
//!   annulus and the quadric product maps `p_{a,b}`.
//! - [`jsfamily`]: local data, monodromy matrices, the torus gauge action, the projective
//!   invariants `Π` and `Π'`, reducibility and the sixteen special lines.
//! - [`mano`]: the elliptic function `Φ`, its fibers and critical values, Mano
//!   decompositions `M = PQ`, q-pants charts and their inversion.
//! - [`fricke`]: the classical Fricke cubic surface of Painlevé VI, its 24 lines,
//!   smoothness, conic fibration and involutions.
//! - [`cli`]: artifact-producing commands shared by the `qmano` binary and the tests.

#[cfg(feature = "cli")]
pub mod cli;
pub mod cser;
pub mod error;
pub mod fricke;
pub mod jsfamily;
pub mod mano;
pub mod projective;
pub mod qcore;
pub mod qspaces;

pub use error::{QError, QResult};
pub use num_complex::Complex64 as C64;
pub use projective::ProjectivePoint;
