//! Numerical laboratory for the entropy dissipation of the Landau-Coulomb
//! collision operator.
//!
//! The crate computes the dissipation functional
//!
//! ```text
//! D(f) = 1/2 ∬ a_ij(v-w) f(v) f(w) (∂_i log f(v) - ∂_i log f(w))
//!                                  (∂_j log f(v) - ∂_j log f(w)) dv dw
//! ```
//!
//! for the Coulomb kernel `a(z) = |z|⁻¹ (I - ẑ⊗ẑ)`, together with the
//! ingredients of its anisotropic coercivity analysis: the smooth cutoff
//! kernel, the convolved diffusion matrix and its radial/tangential
//! eigenvalues, weighted Lebesgue norms, annulus coverings by anisotropic
//! ellipsoids, and the `h = max(f, g)` family of scaled bump perturbations
//! whose dissipation grows slower than any weighted norm stronger than
//! `L³_{-5/3}`.
//!
//! Everything is driven by deterministic midpoint/spherical quadrature with
//! fixed-shape parallel reductions, so results are bit-identical across
//! thread counts.

pub mod counterexample;
pub mod density;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod rng;
pub mod vec3;

pub use density::Density;
pub use error::{Error, Result};
pub use quadrature::{IntegralResult, QuadratureSpec};
pub use vec3::{SymMat3, Vec3};
