//! Heat semigroup `P_t = e^{tΔ}` via dense spectral factorization.
//!
//! The graph Laplacian is conjugated into the symmetric operator
//! `A = M^{-1/2} L M^{-1/2}` (with `L` the weight-matrix form of `mΔ`),
//! eigendecomposed once, and then `P_t f = M^{-1/2} e^{tA} M^{1/2} f`
//! is exact up to rounding for every `t ≥ 0`. Dirichlet truncations to
//! balls reuse the same machinery with a killing diagonal for edges that
//! leave the ball.
//!
//! Dense factorization is the intended engine at desk scale (|V| up to a
//! couple thousand); an iterative integrator could sit behind the same
//! `Propagator` surface for larger graphs.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use thiserror::Error;

use crate::graph::{GraphError, VertexFunction, WeightedGraph};

#[derive(Debug, Error)]
pub enum HeatError {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("heat kernel requires t > 0, got {0}")]
    NonpositiveTime(f64),
    #[error("truncation radius must be at least 1, got {0}")]
    InvalidRadius(f64),
    #[error(
        "eigendecomposition failed: zero eigenvalue has multiplicity {zero_multiplicity}, \
         reconstruction residual {residual:e}"
    )]
    FactorizationFailure { zero_multiplicity: usize, residual: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, HeatError>;

/// Spectral factorization of the measure-symmetrized Laplacian.
///
/// Eigenvalues are sorted descending, so on a connected graph without
/// killing the leading entry is 0 (simple, eigenvector proportional to
/// `√m`) and the rest are strictly negative.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    basis: DMatrix<f64>,
    sqrt_measure: DVector<f64>,
    killed: bool,
}

/// Assembles `A = M^{-1/2} L M^{-1/2}` with an optional killing diagonal.
fn symmetrized_matrix(g: &WeightedGraph, killing: Option<&[f64]>) -> DMatrix<f64> {
    let n = g.len();
    let mut a = DMatrix::zeros(n, n);
    for &(u, v, w) in g.edge_list() {
        if u == v {
            continue; // loops cancel out of the Laplacian
        }
        let s = w / (g.measure(u) * g.measure(v)).sqrt();
        a[(u, v)] += s;
        a[(v, u)] += s;
        a[(u, u)] -= w / g.measure(u);
        a[(v, v)] -= w / g.measure(v);
    }
    if let Some(k) = killing {
        for (x, &kill) in k.iter().enumerate() {
            a[(x, x)] -= kill / g.measure(x);
        }
    }
    a
}

impl Propagator {
    /// Factorizes the Laplacian of a validated connected graph.
    pub fn build(g: &WeightedGraph) -> Result<Self> {
        Self::build_inner(g, None)
    }

    /// Factorizes the Dirichlet (boundary-killed) operator: `killing[x]`
    /// is the total weight of edges from `x` that leave the domain.
    pub fn build_killed(g: &WeightedGraph, killing: &[f64]) -> Result<Self> {
        Self::build_inner(g, Some(killing))
    }

    fn build_inner(g: &WeightedGraph, killing: Option<&[f64]>) -> Result<Self> {
        let a = symmetrized_matrix(g, killing);
        let n = g.len();
        let (eigenvalues, basis) = linalg::symmetric_eigen(a.clone());
        let sqrt_measure = DVector::from_fn(n, |i, _| g.measure(i).sqrt());

        let killed = killing.map_or(false, |k| k.iter().any(|&v| v > 0.0));
        let prop = Propagator { eigenvalues, basis, sqrt_measure, killed };

        let residual = prop.reconstruction_residual(&a);
        let scale = a.amax().max(1.0);
        if residual > 1e-10 * scale {
            return Err(HeatError::FactorizationFailure {
                zero_multiplicity: prop.zero_multiplicity(),
                residual,
            });
        }
        if !killed && prop.zero_multiplicity() != 1 {
            return Err(HeatError::FactorizationFailure {
                zero_multiplicity: prop.zero_multiplicity(),
                residual,
            });
        }
        Ok(prop)
    }

    fn zero_multiplicity(&self) -> usize {
        let scale = self
            .eigenvalues
            .iter()
            .fold(1.0_f64, |a, &v| a.max(v.abs()));
        self.eigenvalues
            .iter()
            .filter(|&&v| v.abs() <= 1e-9 * scale)
            .count()
    }

    /// Max-abs error of `U Λ Uᵀ` against the assembled matrix.
    pub fn reconstruction_residual(&self, a: &DMatrix<f64>) -> f64 {
        let lam = DMatrix::from_diagonal(&self.eigenvalues);
        let rebuilt = &self.basis * lam * self.basis.transpose();
        (rebuilt - a).amax()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues of the symmetrized operator, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().cloned().collect()
    }

    /// Spectral coefficients of `f` in the symmetrized basis.
    fn coefficients(&self, f: &VertexFunction) -> DVector<f64> {
        let weighted = DVector::from_fn(self.len(), |i, _| f[i] * self.sqrt_measure[i]);
        self.basis.transpose() * weighted
    }

    fn from_coefficients(&self, c: &DVector<f64>) -> VertexFunction {
        let back = &self.basis * c;
        VertexFunction::from_fn(self.len(), |i| back[i] / self.sqrt_measure[i])
    }

    fn check_len(&self, f: &VertexFunction) -> Result<()> {
        if f.len() != self.len() {
            return Err(HeatError::Graph(GraphError::DimensionMismatch {
                got: f.len(),
                expected: self.len(),
            }));
        }
        Ok(())
    }

    /// `P_t f`; contracts every `ℓᵖ_m` norm, preserves positivity, and
    /// `P_0 f = f`.
    pub fn apply(&self, f: &VertexFunction, t: f64) -> Result<VertexFunction> {
        self.check_len(f)?;
        if !(t >= 0.0) {
            return Err(HeatError::NegativeTime(t));
        }
        let mut c = self.coefficients(f);
        for (i, v) in c.iter_mut().enumerate() {
            *v *= (t * self.eigenvalues[i]).exp();
        }
        Ok(self.from_coefficients(&c))
    }

    /// `ΔP_t f` (equals `P_t Δf`), computed spectrally.
    pub fn derivative(&self, f: &VertexFunction, t: f64) -> Result<VertexFunction> {
        self.check_len(f)?;
        if !(t >= 0.0) {
            return Err(HeatError::NegativeTime(t));
        }
        let mut c = self.coefficients(f);
        for (i, v) in c.iter_mut().enumerate() {
            *v *= self.eigenvalues[i] * (t * self.eigenvalues[i]).exp();
        }
        Ok(self.from_coefficients(&c))
    }

    /// Heat kernel `p(t, x, y) = P_t(δ_y / m(y))(x)` for `t > 0`.
    pub fn kernel(&self, t: f64, x: usize, y: usize) -> Result<f64> {
        if !(t > 0.0) {
            return Err(HeatError::NonpositiveTime(t));
        }
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += (t * self.eigenvalues[i]).exp() * self.basis[(x, i)] * self.basis[(y, i)];
        }
        Ok(acc / (self.sqrt_measure[x] * self.sqrt_measure[y]))
    }

    /// Whether this propagator carries a Dirichlet killing term.
    pub fn is_killed(&self) -> bool {
        self.killed
    }
}

/// One heat-kernel sample `p(t, x, y)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeatKernelValue {
    pub t: f64,
    pub x: String,
    pub y: String,
    pub p: f64,
}

/// Kernel value with vertex ids resolved against the graph.
pub fn heat_kernel_value(
    g: &WeightedGraph,
    prop: &Propagator,
    t: f64,
    x: &str,
    y: &str,
) -> Result<HeatKernelValue> {
    let xi = g.index_of(x)?;
    let yi = g.index_of(y)?;
    Ok(HeatKernelValue {
        t,
        x: x.to_string(),
        y: y.to_string(),
        p: prop.kernel(t, xi, yi)?,
    })
}

/// Full kernel table over a time grid as CSV rows `t, x, y, p`.
pub fn kernel_table_csv(
    g: &WeightedGraph,
    prop: &Propagator,
    t_grid: &[f64],
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x", "y", "p"]).expect("csv header");
    for &t in t_grid {
        for x in 0..g.len() {
            for y in 0..g.len() {
                let p = prop.kernel(t, x, y)?;
                w.write_record([&t.to_string(), g.id(x), g.id(y), &p.to_string()])
                    .expect("csv row");
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8"))
}

/// Induced ball with Dirichlet boundary data.
///
/// The generator keeps the ambient degree at every vertex, so functions
/// are implicitly zero outside the ball; `killing[x]` is the ambient
/// weight lost by `x`.
#[derive(Debug, Clone)]
pub struct DirichletTruncation {
    pub graph: WeightedGraph,
    /// Ball vertices that have at least one ambient neighbor outside.
    pub boundary: Vec<String>,
    /// Per-vertex killed weight, aligned with `graph` indices.
    pub killing: Vec<f64>,
    /// True when the requested ball already covers the whole graph.
    pub covers_whole: bool,
}

impl DirichletTruncation {
    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::build_killed(&self.graph, &self.killing)
    }
}

/// Restricts `g` to `B(center, radius)` with Dirichlet conditions.
pub fn dirichlet_truncation(
    g: &WeightedGraph,
    center: &str,
    radius: f64,
) -> Result<DirichletTruncation> {
    if !(radius >= 1.0) {
        return Err(HeatError::InvalidRadius(radius));
    }
    let c = g.index_of(center)?;
    let ball = g.ball(c, radius);
    truncate_to(g, &ball)
}

/// Restricts `g` to an arbitrary vertex set with Dirichlet conditions.
/// The set must induce a connected subgraph (balls always do).
pub fn truncate_to(g: &WeightedGraph, kept: &[usize]) -> Result<DirichletTruncation> {
    let covers_whole = kept.len() == g.len();
    let mut inside = vec![false; g.len()];
    for &x in kept {
        inside[x] = true;
    }
    let vertices: Vec<(String, f64)> = kept
        .iter()
        .map(|&x| (g.id(x).to_string(), g.measure(x)))
        .collect();
    let mut edges = Vec::new();
    for &(u, v, w) in g.edge_list() {
        if inside[u] && inside[v] {
            edges.push((g.id(u).to_string(), g.id(v).to_string(), w));
        }
    }
    let sub = WeightedGraph::new(vertices, edges)?;
    let mut killing = vec![0.0; sub.len()];
    let mut boundary = Vec::new();
    for (i, &x) in kept.iter().enumerate() {
        let lost: f64 = g
            .neighbors(x)
            .iter()
            .filter(|&&(y, _)| !inside[y])
            .map(|&(_, w)| w)
            .sum();
        if lost > 0.0 {
            killing[i] = lost;
            boundary.push(g.id(x).to_string());
        }
    }
    Ok(DirichletTruncation { graph: sub, boundary, killing, covers_whole })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k2() -> WeightedGraph {
        WeightedGraph::new(
            vec![("x".into(), 1.0), ("y".into(), 1.0)],
            vec![("x".into(), "y".into(), 1.0)],
        )
        .unwrap()
    }

    fn p3() -> WeightedGraph {
        WeightedGraph::new(
            vec![("a".into(), 1.0), ("b".into(), 1.0), ("c".into(), 1.0)],
            vec![
                ("a".into(), "b".into(), 1.0),
                ("b".into(), "c".into(), 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn k2_spectrum() {
        let p = Propagator::build(&k2()).unwrap();
        let ev = p.eigenvalues();
        assert_relative_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn p3_spectrum() {
        let p = Propagator::build(&p3()).unwrap();
        let ev = p.eigenvalues();
        assert_relative_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1], -1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[2], -3.0, epsilon = 1e-12);
    }

    #[test]
    fn heat_on_delta_matches_closed_form() {
        let g = k2();
        let p = Propagator::build(&g).unwrap();
        let f = VertexFunction::delta(2, 1);
        let t = 0.5;
        let out = p.apply(&f, t).unwrap();
        assert_relative_eq!(out[0], 0.5 * (1.0 - (-2.0 * t).exp()), epsilon = 1e-12);
        assert_relative_eq!(out[0], 0.3160602794, epsilon = 1e-9);

        // time derivative at the opposite vertex: e^{-2t}
        let d = p.derivative(&f, t).unwrap();
        assert_relative_eq!(d[0], (-1.0_f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn preserves_constants_exactly_to_roundoff() {
        let g = p3();
        let p = Propagator::build(&g).unwrap();
        let ones = VertexFunction::constant(3, 1.0);
        let out = p.apply(&ones, 3.0).unwrap();
        assert!(out.max_abs_diff(&ones) < 1e-12);
    }

    #[test]
    fn rejects_negative_time_and_zero_time_kernel() {
        let p = Propagator::build(&k2()).unwrap();
        let f = VertexFunction::delta(2, 0);
        assert!(matches!(p.apply(&f, -0.1), Err(HeatError::NegativeTime(_))));
        assert!(matches!(p.kernel(0.0, 0, 1), Err(HeatError::NonpositiveTime(_))));
        let id = p.apply(&f, 0.0).unwrap();
        assert!(id.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn kernel_closed_form_k2() {
        let p = Propagator::build(&k2()).unwrap();
        for &t in &[0.1, 0.5, 1.0, 5.0] {
            assert_relative_eq!(
                p.kernel(t, 0, 1).unwrap(),
                0.5 * (1.0 - (-2.0 * t).exp()),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                p.kernel(t, 0, 0).unwrap(),
                0.5 * (1.0 + (-2.0 * t).exp()),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn truncation_radius_below_one_rejected() {
        let g = p3();
        assert!(matches!(
            dirichlet_truncation(&g, "b", 0.5),
            Err(HeatError::InvalidRadius(_))
        ));
    }

    #[test]
    fn truncation_covering_whole_graph_is_flagged() {
        let g = p3();
        let t = dirichlet_truncation(&g, "b", 5.0).unwrap();
        assert!(t.covers_whole);
        assert!(t.boundary.is_empty());
        assert_eq!(t.graph.len(), 3);
        assert!(t.killing.iter().all(|&k| k == 0.0));
    }

    #[test]
    fn truncation_kills_boundary_weight() {
        let g = p3();
        let t = dirichlet_truncation(&g, "a", 1.0).unwrap();
        assert_eq!(t.graph.len(), 2);
        assert_eq!(t.boundary, vec!["b".to_string()]);
        let b = t.graph.index_of("b").unwrap();
        assert_eq!(t.killing[b], 1.0);

        // Dirichlet semigroup loses mass strictly.
        let p = t.propagator().unwrap();
        let ones = VertexFunction::constant(2, 1.0);
        let out = p.apply(&ones, 0.5).unwrap();
        assert!(out.values().iter().all(|&v| v < 1.0));
        assert!(out.values().iter().all(|&v| v > 0.0));
    }
}
