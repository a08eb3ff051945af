//! Numerical verification toolkit for improved Hardy–Rellich, Rellich and
//! Poincaré identities on hyperbolic space.
//!
//! Hyperbolic space `H^N` is modelled in geodesic polar coordinates around a
//! pole: a function is *radial* when it depends only on the geodesic distance
//! `r`, the volume element is `sinh^(N-1) r · dr · dσ`, and the Laplacian
//! splits into a radial part plus a spherical part scaled by `1/sinh² r`.
//!
//! The toolkit certifies, by adaptive quadrature on explicit test functions,
//! a family of weighted integral identities of the shape
//!
//! ```text
//! ∫ (Δ u)²  =  Σ_k  c_k ∫ g_k(r) · (derivative of u)²  +  remainder(u)
//! ```
//!
//! where every remainder is a manifestly nonnegative integral. Each identity
//! is evaluated term by term; the report carries the residual, the residual
//! relative to the largest term, and the accumulated quadrature error budget
//! so that a failure is distinguishable from quadrature noise.
//!
//! Modules:
//!
//! - [`geometry`]: overflow-safe hyperbolic primitives (`coth`, `ln sinh`,
//!   volume weights) and the validated [`geometry::Dimension`] type.
//! - [`jet`]: forward-mode derivatives up to third order, used to evaluate
//!   profile derivatives exactly (no finite differencing in the main path).
//! - [`profiles`]: compactly supported C² test profiles and the
//!   concentrating family used in sharpness experiments.
//! - [`quadrature`]: adaptive Gauss–Kronrod 7/15 integration with a global
//!   error heap, plus an independent fixed-rule oracle.
//! - [`pairs`]: weight pairs `(r^(N-1) V, r^(N-1) W)` with a positive
//!   solution of the associated ODE, including the canonical one-parameter
//!   family behind the improved Hardy–Rellich inequalities.
//! - [`modes`]: spherical-harmonic mode bookkeeping, per-mode energy
//!   integrals and the per-mode gap functional for non-radial inequalities.
//! - [`identities`]: assembly and verification of the full identity
//!   catalogue, closed-form coefficient tables, and cross-consistency
//!   checks between independent formulations.
//! - [`sharpness`]: uncertainty-product (Heisenberg-type) checks and
//!   one-sided sharpness scans for the leading constants.
//! - [`report`]: batch job configuration, JSON/CSV serialization and the
//!   deterministic parallel runner backing the CLI.
//!
//! # Example
//!
//! Verify the flagship second-order identity at `N = 5`, `λ = 1` on a
//! smooth bump supported in `[0.5, 2.5]`:
//!
//! ```
//! use hyperverify::geometry::Dimension;
//! use hyperverify::identities::{verify_identity, IdentityId, ProfileInput, Verdict};
//! use hyperverify::profiles::make_bump;
//!
//! let dim = Dimension::new(5)?;
//! let input = ProfileInput::Radial(Box::new(make_bump(0.5, 2.5, 1.0)?));
//! let report = verify_identity(IdentityId::RadialHr, dim, Some(1.0), &input, 1e-9)?;
//!
//! assert_eq!(report.verdict, Verdict::Pass);
//! // The five displayed terms and the nonnegative remainder rebuild the
//! // second-order energy exactly, up to quadrature error.
//! assert!(report.rel_residual < 1e-9);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod geometry;
pub mod identities;
pub mod jet;
pub mod modes;
pub mod pairs;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod sharpness;
