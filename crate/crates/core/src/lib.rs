//! Leafwise Schrödinger quantization of mechanical systems whose classical
//! parameters follow a prescribed path in time.
//!
//! The configuration space is a composite bundle `Q -> Sigma -> R`: fibers of
//! `Q -> Sigma` carry the quantum degrees of freedom `q^k`, and the parameters
//! `sigma^lambda` are driven along a path `chi(t)`. The crate
//!
//! * parses and differentiates the coefficient fields ([`expr`]),
//! * models the bundle, its connections and the leafwise calculus ([`bundle`]),
//! * implements the leafwise Poisson algebra and the partition-of-unity
//!   splitting of polynomial observables into affine factors ([`algebra`]),
//! * assembles Hermitian Schrödinger operators on a periodic fiber grid
//!   ([`quantize`]),
//! * propagates the time-ordered evolution and isolates the geometric
//!   (Berry) factor along parameter paths ([`evolve`]),
//! * loads scenarios, runs them and verifies the property suites
//!   ([`scenario`]).

pub mod algebra;
pub mod bundle;
pub mod coords;
pub mod evolve;
pub mod expr;
pub mod linalg;
pub mod quantize;
pub mod scenario;

pub use coords::Dims;
pub use expr::{parse_expr, Expr, VariableBinding};
