//! Reconstruction of local velocity-gradient tensors from the orientation
//! dynamics of suspended particles, with the SO(3) irreducible decomposition
//! and identifiability analysis that go with it.
//!
//! The forward map is `ṡ = s × (s × (A s)) = (sᵀ A s) s − A s` for a unit
//! orientation `s` and velocity gradient `A` with `A_ij = ∂u_i/∂x_j`.
//! Observing `N` pairs `(s_i, ṡ_i)` gives a linear system in the nine entries
//! of `A`; [`inversion`] solves it, [`identifiability`] describes what part of
//! `A` the system can see.

pub mod csvfmt;
pub mod dynamics;
pub mod error;
pub mod flowfields;
pub mod identifiability;
pub mod inversion;
pub mod metrics;
pub mod observation;
pub mod rng;
pub mod svd;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{IrrepDecomp, Rotation, Tensor3, Vec3};
