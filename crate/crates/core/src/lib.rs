//! Discrete curvature and heat-flow verification on weighted graphs.
//!
//! The library works with finite connected weighted graphs `(V, E, m, ω)`:
//! a positive vertex measure `m` and symmetric positive edge weights `ω`
//! (loops allowed, inert in every operator). On top of that it provides
//!
//! * the graph Laplacian `Δ`, the gradient form `Γ`, the iterated form `Γ₂`
//!   and its modification `Γ̃₂`, Dirichlet energy and `ℓᵖ_m` norms
//!   ([`graph`]);
//! * exact decisions for the curvature-dimension condition `CD(n, K)` via
//!   quadratic-form eigenvalue tests, and a seeded multi-start search for
//!   counterexamples to the exponential condition `CDE'(n, K)`
//!   ([`curvature`]);
//! * the heat semigroup `P_t = e^{tΔ}`, its generator action, the heat
//!   kernel, and Dirichlet truncations to balls, all through a dense
//!   spectral factorization of the measure-symmetrized Laplacian
//!   ([`heat`]);
//! * numerical checks for the Li-Yau gradient-estimate family and its
//!   corollaries: Harnack inequalities, heat-kernel upper bounds, and the
//!   eigenvalue bound `λ* ≤ Kn/2` ([`lab`]);
//! * graph family generators, a JSON file format, and seeded random
//!   corpora for identity testing ([`families`]).
//!
//! Everything is deterministic given the caller's seed: sweeps and grid
//! evaluations are pure per-item maps with ordered reduction, so results
//! are identical with the `parallel` feature on or off.

pub mod curvature;
pub mod exec;
pub mod serde_ext;
pub mod families;
pub mod graph;
pub mod heat;
pub mod identities;
pub mod lab;
pub mod linalg;
pub mod tol;

pub use graph::{ValidationSummary, VertexFunction, WeightedGraph};
pub use heat::Propagator;
