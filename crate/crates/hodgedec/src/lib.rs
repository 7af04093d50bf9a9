//! Weighted Hodge–Helmholtz decompositions on truncated exterior domains.
//!
//! The library has four numerical layers and a reporting layer on top:
//!
//! * [`sphere`] — real orthonormal spherical harmonics `y_{n,m}`, their surface
//!   gradients, the polar orthonormal frame, and Gauss–Legendre quadrature on
//!   the unit sphere.
//! * [`towers`] — the explicit harmonic "tower" fields on `R^3 \ {0}`:
//!   scalar ladders `z^k` connected by the Laplacian, div-grad ladders `U^l`,
//!   curl-curl ladders `V^l`, the exceptional radial ladders built on the
//!   order-0 harmonic, and the harmonic potential fields `P`. All rungs have
//!   closed forms; a fourth-order finite-difference oracle provides an
//!   independent check of the ladder relations.
//! * [`spaces`] — the weight `rho = (1 + r^2)^(1/2)`, weighted shell norms by
//!   quadrature, the integrability classifier for decaying towers, the
//!   excluded-weight set, admissibility of media, and the closed-form
//!   dimension counts for Dirichlet-field spaces.
//! * [`helmholtz`] — a geometric shell grid on `[r0, R] x S^2`, discrete
//!   vector calculus through the polar splits, the weighted orthogonal
//!   decomposition (conjugate gradients on the weak form), Dirichlet fields
//!   of the ball obstacle, and the finite-dimensional correction machinery
//!   for large weights (cut-off potential fields and duality-pairing
//!   coefficient extraction).
//! * [`report`] / [`checks`] — machine-readable verification reports and the
//!   check suites the CLI drives.
//!
//! Everything is deterministic: fixed summation orders, seeded ChaCha8 point
//! sampling, and structured reports that serialize byte-identically for a
//! fixed configuration.

pub mod checks;
pub mod geom;
pub mod helmholtz;
pub mod report;
pub mod spaces;
pub mod special;
pub mod sphere;
pub mod towers;

pub use geom::Vec3;
