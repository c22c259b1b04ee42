//! Spectral analysis of magnetic quantum waveguides on the planar strip.
//!
//! The model throughout is the magnetic Schrödinger operator `(-i∇ + A)²`
//! with Dirichlet boundary conditions on the straight strip
//! `Ω = ℝ × (0, π)` and on two families of perturbed strips:
//!
//! * **deformed** strips `0 < y < π(1 + λ f(x))` obtained by locally
//!   widening the cross-section with a compactly supported profile `f`, and
//! * **curved** strips of constant width `π` built over a planar curve of
//!   compactly supported signed curvature `β γ(x)`.
//!
//! The essential spectrum in all cases starts at the first transverse
//! Dirichlet eigenvalue `1`.  A magnetic field with nonzero flux makes the
//! straight strip *subcritical*: the quadratic form satisfies a Hardy-type
//! lower bound
//!
//! ```text
//!   ‖(-i∇ + A)u‖² − ‖u‖²  ≥  c_H ∫ |u|² / (1 + x²)
//! ```
//!
//! with an explicit, certifiable constant `c_H > 0`, and the bound survives
//! deformations with `λ` (resp. `β`) below an explicit threshold.  This
//! crate computes those certificates, assembles finite-element
//! discretizations of the straight and transformed quadratic forms,
//! solves the resulting Hermitian generalized eigenproblems, and runs the
//! numerical experiments that probe the certified statements from the
//! numerical side: bound-state onset scans, weak-coupling asymptotics and
//! discrete Hardy quotients.
//!
//! Module map:
//!
//! * [`geometry`] — deformation / curvature profiles, curve reconstruction
//!   from curvature, strip maps and their Jacobians.
//! * [`gauge`] — magnetic fields, the transversal-gauge vector potential,
//!   the Aharonov–Bohm potential, flux functions.
//! * [`assembly`] — bilinear rectangular finite elements for the straight,
//!   deformed and curved quadratic forms plus Hardy weight matrices.
//! * [`eigensolve`] — block preconditioned iterative eigensolver for
//!   sparse Hermitian pencils with a dense fallback.
//! * [`hardy`] — the analytic certificate chains: Hardy constants for
//!   regular fields and Aharonov–Bohm fluxes, stability thresholds,
//!   weak-field coefficients.
//! * [`experiments`] — end-to-end numerical studies (threshold scans,
//!   weak-coupling fits, trial-function quotients, diagnostics).
//! * [`config`] / [`report`] — run configuration and deterministic
//!   CSV/JSON emission shared by the command-line driver.

pub mod assembly;
pub mod config;
pub mod eigensolve;
pub mod error;
pub mod experiments;
pub mod gauge;
pub mod geometry;
pub mod hardy;
pub mod quad;
pub mod report;
pub mod sparse;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
