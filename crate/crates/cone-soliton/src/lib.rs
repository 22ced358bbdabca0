//! Order-by-order asymptotic expansions of gradient Ricci solitons on cones,
//! together with numerical verification of the identities the construction
//! rests on.
//!
//! Given a compact link manifold `(Y^n, h)`, the crate expands a soliton
//! metric `g = dr² + H(r)` on `(0,∞) × Y` with
//! `H = r²h + h₀ + r⁻²h₂ + …` and a potential
//! `f = ∓r²/4 + f₀ + r⁻²f₂ + …`, solving the soliton system order by order
//! in inverse powers of the radial coordinate. Everything the expansion
//! asserts — the recursion's solvability, the closed forms of the first
//! corrections, decay of the constraint, Bianchi-type identities — is
//! checked numerically on concrete links.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod expand;
pub mod expr;
pub mod grid;
pub mod linalg;
pub mod io;
pub mod link;
pub mod ode;
pub mod sampling;
pub mod series;
pub mod series_calculus;
pub mod tensor;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use grid::DiffScheme;
pub use link::{build_link, LinkDescriptor, LinkManifold};
pub use series::{Floor, RadialSeries};
pub use tensor::{Rank, TensorField};
