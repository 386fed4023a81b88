//! Averaging near-homomorphisms on proper Lie groupoids near a fixed point.
//!
//! A proper groupoid `M ⇇ B` near a fixed point `x₀` is presented in a fixed
//! trivialization `M ≅ G × B`. Starting from a map `φ: M → G` that is the
//! identity on the isotropy group `G = s⁻¹(x₀)`, the averaging step
//!
//! ```text
//! φ̂(p) = exp( ∫_{q ∈ t⁻¹(s(p))} log(φ(p·q) φ(q)⁻¹ φ(p)⁻¹) dμ(q) ) · φ(p)
//! ```
//!
//! contracts the homomorphism defect quadratically. The limit homomorphism
//! identifies the groupoid with an action groupoid of `G`, which is then
//! linearized by Bochner averaging.
//!
//! Module map:
//! - [`liegroup`]: compact matrix groups, exp/log, Haar quadrature.
//! - [`groupoid`]: chart model, built-in groupoids, axiom checks, orbits.
//! - [`haar`]: translation-invariant probability systems on target fibers.
//! - [`averaging`]: defect, averaging step, iteration, noise floor.
//! - [`linearize`]: induced action and Bochner linearization.
//! - [`testkit`]: proof-identity checks, order fits, BCH calibration.

pub mod averaging;
pub mod error;
pub mod groupoid;
pub mod haar;
pub mod harmonic;
pub mod liegroup;
pub mod linearize;
pub mod testkit;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
