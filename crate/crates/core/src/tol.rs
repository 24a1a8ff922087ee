//! Central tolerance constants.
//!
//! Exact algebraic identities on finite graphs fail only by accumulated
//! f64 rounding; semigroup quantities additionally go through a dense
//! eigendecomposition. The constants below separate those two regimes
//! from genuine decision thresholds.

/// Relative tolerance for identities that are exact in real arithmetic
/// (Green's formula, chain-rule identity, `Γ̃₂` rewriting).
pub const IDENTITY_REL: f64 = 1e-9;

/// Residual bound for quantities routed through the spectral
/// factorization (semigroup law, commutation, self-adjointness, mass).
pub const SEMIGROUP_ABS: f64 = 1e-8;

/// Slack for inequalities that hold with equality in exact arithmetic
/// (norm contraction, positivity preservation).
pub const CONTRACTION_SLACK: f64 = 1e-12;

/// Default verdict tolerance for curvature witnesses and inequality
/// margins: `fail` iff margin < -VERDICT_TOL * max(1, |rhs|).
pub const VERDICT_TOL: f64 = 1e-7;

/// Target absolute accuracy of the adaptive quadrature used for
/// schedule integrals.
pub const QUADRATURE_ABS: f64 = 1e-10;

/// Relative eigenvalue cutoff below which a direction counts as kernel
/// of a positive semidefinite quadratic form.
pub const FORM_KERNEL_CUT: f64 = 1e-12;

/// Relative floor under which a heat-semigroup value has lost all
/// significant digits to spectral cancellation (the true value is
/// positive but far below f64 resolution). Margin grid points at such
/// vertices are skipped and counted rather than evaluated on noise.
pub const POSITIVITY_TRUST_FLOOR: f64 = 1e-12;
