//! Weighted-graph data model and the exact discrete operators.
//!
//! A [`WeightedGraph`] is immutable after construction: a finite vertex set
//! with a positive measure `m`, symmetric positive edge weights `ω` (loops
//! permitted, inert), and adjacency derived from the edge list. All
//! operators are pure functions of `(graph, function)` evaluated in f64.
//!
//! Neighbor lists are kept sorted by vertex id, so every operator sums in
//! an order independent of vertex insertion order; dense indexing itself
//! follows insertion order.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from graph construction, validation, and operator application.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("asymmetric weight between `{u}` and `{v}`: {wuv} vs {wvu}")]
    AsymmetricWeight { u: String, v: String, wuv: f64, wvu: f64 },
    #[error("nonpositive measure {value} at vertex `{vertex}`")]
    NonpositiveMeasure { vertex: String, value: f64 },
    #[error("nonpositive weight {value} on edge `{u}`-`{v}`")]
    NonpositiveWeight { u: String, v: String, value: f64 },
    #[error("duplicate edge `{u}`-`{v}`")]
    DuplicateEdge { u: String, v: String },
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("dimension mismatch: function has {got} values, graph has {expected} vertices")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("function must be strictly positive (vertex `{vertex}` has {value})")]
    NonpositiveFunction { vertex: String, value: f64 },
    #[error("norm exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("graph must have at least one vertex")]
    Empty,
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Immutable weighted graph `(V, E, m, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    measure: Vec<f64>,
    /// Per-vertex `(neighbor, weight)` lists, sorted by neighbor id.
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Undirected edges in construction order, `u <= v` not enforced.
    edges: Vec<(usize, usize, f64)>,
}

/// Scalars reported by [`WeightedGraph::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    /// `δ = min_x m(x)`, the non-degeneracy constant.
    pub delta: f64,
    /// `max_x deg(x)` with `deg(x) = Σ_{y~x} ω_xy`.
    pub deg_max: f64,
    /// `max_x deg(x)/m(x)`; the Laplacian norm bound on `ℓᵖ_m`.
    pub bounded_ratio: f64,
    pub connected: bool,
}

impl WeightedGraph {
    /// Builds and validates a graph from `(id, measure)` pairs and
    /// undirected `(u, v, weight)` edges, each edge listed once.
    pub fn new(
        vertices: Vec<(String, f64)>,
        edges: Vec<(String, String, f64)>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut ids = Vec::with_capacity(vertices.len());
        let mut index = HashMap::with_capacity(vertices.len());
        let mut measure = Vec::with_capacity(vertices.len());
        for (id, m) in vertices {
            if index.contains_key(&id) {
                return Err(GraphError::DuplicateVertex(id));
            }
            if !(m > 0.0) || !m.is_finite() {
                return Err(GraphError::NonpositiveMeasure { vertex: id, value: m });
            }
            index.insert(id.clone(), ids.len());
            ids.push(id);
            measure.push(m);
        }

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
        let mut stored: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        for (u, v, w) in edges {
            let ui = *index.get(&u).ok_or_else(|| GraphError::UnknownVertex(u.clone()))?;
            let vi = *index.get(&v).ok_or_else(|| GraphError::UnknownVertex(v.clone()))?;
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::NonpositiveWeight { u, v, value: w });
            }
            let key = (ui.min(vi), ui.max(vi));
            if seen.insert(key, ()).is_some() {
                return Err(GraphError::DuplicateEdge { u, v });
            }
            adjacency[ui].push((vi, w));
            if ui != vi {
                adjacency[vi].push((ui, w));
            }
            stored.push((ui, vi, w));
        }
        for (vi, list) in adjacency.iter_mut().enumerate() {
            list.sort_by(|a, b| ids[a.0].cmp(&ids[b.0]));
            let _ = vi;
        }

        let g = WeightedGraph { ids, index, measure, adjacency, edges: stored };
        g.validate()?;
        Ok(g)
    }

    /// Assembles a graph without symmetry/connectivity validation.
    ///
    /// Only for tests that must construct invalid adjacency on purpose;
    /// `adjacency` entries are taken as-is (directed).
    #[doc(hidden)]
    pub fn from_parts_unchecked(
        ids: Vec<String>,
        measure: Vec<f64>,
        adjacency: Vec<Vec<(usize, f64)>>,
        edges: Vec<(usize, usize, f64)>,
    ) -> Self {
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        WeightedGraph { ids, index, measure, adjacency, edges }
    }

    /// Checks the structural invariants and reports `δ`, `max deg`, and
    /// `max deg/m`.
    pub fn validate(&self) -> Result<ValidationSummary> {
        for (i, &m) in self.measure.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(GraphError::NonpositiveMeasure {
                    vertex: self.ids[i].clone(),
                    value: m,
                });
            }
        }
        // Symmetry of the derived adjacency: ω_xy must equal ω_yx.
        for (u, list) in self.adjacency.iter().enumerate() {
            for &(v, w) in list {
                if !(w > 0.0) || !w.is_finite() {
                    return Err(GraphError::NonpositiveWeight {
                        u: self.ids[u].clone(),
                        v: self.ids[v].clone(),
                        value: w,
                    });
                }
                let back = self.adjacency[v]
                    .iter()
                    .find(|&&(b, _)| b == u)
                    .map(|&(_, wb)| wb);
                match back {
                    Some(wb) if wb == w => {}
                    Some(wb) => {
                        return Err(GraphError::AsymmetricWeight {
                            u: self.ids[u].clone(),
                            v: self.ids[v].clone(),
                            wuv: w,
                            wvu: wb,
                        })
                    }
                    None => {
                        return Err(GraphError::AsymmetricWeight {
                            u: self.ids[u].clone(),
                            v: self.ids[v].clone(),
                            wuv: w,
                            wvu: 0.0,
                        })
                    }
                }
            }
        }
        // Connectivity by breadth-first search from vertex 0.
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        if count != self.len() {
            return Err(GraphError::Disconnected);
        }

        let delta = self.measure.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut deg_max: f64 = 0.0;
        let mut bounded_ratio: f64 = 0.0;
        for x in 0..self.len() {
            let d = self.degree(x);
            deg_max = deg_max.max(d);
            bounded_ratio = bounded_ratio.max(d / self.measure[x]);
        }
        Ok(ValidationSummary { delta, deg_max, bounded_ratio, connected: true })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))
    }

    pub fn measure(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    /// `(neighbor, weight)` pairs of `x`, sorted by neighbor id. A loop
    /// at `x` appears as `(x, ω_xx)`.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// Undirected edges in construction order.
    pub fn edge_list(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// `deg(x) = Σ_{y~x} ω_xy`, loops included once.
    pub fn degree(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|&(_, w)| w).sum()
    }

    /// `ω_min` over edges and `m_max` over vertices, the standing
    /// constants of the Harnack and kernel bounds.
    pub fn extremal_constants(&self) -> (f64, f64) {
        let omega_min = self
            .edges
            .iter()
            .map(|&(_, _, w)| w)
            .fold(f64::INFINITY, f64::min);
        let m_max = self.measure.iter().cloned().fold(0.0, f64::max);
        (omega_min, m_max)
    }

    fn check_len(&self, f: &VertexFunction) -> Result<()> {
        if f.len() != self.len() {
            return Err(GraphError::DimensionMismatch { got: f.len(), expected: self.len() });
        }
        Ok(())
    }

    /// `Δf(x) = (1/m(x)) Σ_{y~x} ω_xy (f(y) − f(x))` at one vertex.
    pub fn laplacian_at(&self, f: &[f64], x: usize) -> f64 {
        let mut acc = 0.0;
        for &(y, w) in &self.adjacency[x] {
            acc += w * (f[y] - f[x]);
        }
        acc / self.measure[x]
    }

    /// Graph Laplacian `Δf`.
    pub fn laplacian(&self, f: &VertexFunction) -> Result<VertexFunction> {
        self.check_len(f)?;
        Ok(VertexFunction::from_fn(self.len(), |x| self.laplacian_at(f.values(), x)))
    }

    /// `Γ(f,h)(x) = (1/2m(x)) Σ_{y~x} ω_xy (f(y)−f(x))(h(y)−h(x))`.
    pub fn gamma_at(&self, f: &[f64], h: &[f64], x: usize) -> f64 {
        let mut acc = 0.0;
        for &(y, w) in &self.adjacency[x] {
            // difference product first, so Γ(f,h) == Γ(h,f) bitwise
            acc += w * ((f[y] - f[x]) * (h[y] - h[x]));
        }
        acc / (2.0 * self.measure[x])
    }

    /// Bilinear gradient form `Γ(f,h)`.
    pub fn gamma_bilinear(&self, f: &VertexFunction, h: &VertexFunction) -> Result<VertexFunction> {
        self.check_len(f)?;
        self.check_len(h)?;
        Ok(VertexFunction::from_fn(self.len(), |x| {
            self.gamma_at(f.values(), h.values(), x)
        }))
    }

    /// `Γ(f) = Γ(f,f)`.
    pub fn gamma(&self, f: &VertexFunction) -> Result<VertexFunction> {
        self.gamma_bilinear(f, f)
    }

    /// Iterated gradient form `Γ₂(f) = ½ΔΓ(f) − Γ(f, Δf)`.
    pub fn gamma2(&self, f: &VertexFunction) -> Result<VertexFunction> {
        self.check_len(f)?;
        let gf = self.gamma(f)?;
        let lap_gf = self.laplacian(&gf)?;
        let lap_f = self.laplacian(f)?;
        let cross = self.gamma_bilinear(f, &lap_f)?;
        Ok(VertexFunction::from_fn(self.len(), |x| {
            0.5 * lap_gf[x] - cross[x]
        }))
    }

    /// Modified iterated form `Γ̃₂(f) = Γ₂(f) − Γ(f, Γ(f)/f)`, defined for
    /// strictly positive `f`. Satisfies
    /// `Γ̃₂(√u) = ½ΔΓ(√u) − Γ(√u, Δu/(2√u))` for every positive `u`.
    pub fn gamma2_tilde(&self, f: &VertexFunction) -> Result<VertexFunction> {
        self.check_len(f)?;
        self.require_positive(f)?;
        let g2 = self.gamma2(f)?;
        let gf = self.gamma(f)?;
        let quotient = VertexFunction::from_fn(self.len(), |x| gf[x] / f[x]);
        let cross = self.gamma_bilinear(f, &quotient)?;
        Ok(VertexFunction::from_fn(self.len(), |x| g2[x] - cross[x]))
    }

    pub fn require_positive(&self, f: &VertexFunction) -> Result<()> {
        self.check_len(f)?;
        for (x, &v) in f.values().iter().enumerate() {
            if !(v > 0.0) {
                return Err(GraphError::NonpositiveFunction {
                    vertex: self.ids[x].clone(),
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Dirichlet energy `Q(f) = ½ Σ_{x,y} ω_xy (f(y)−f(x))²` (each
    /// unordered edge contributes once; loops contribute nothing).
    pub fn dirichlet_energy(&self, f: &VertexFunction) -> Result<f64> {
        self.check_len(f)?;
        let mut acc = 0.0;
        for &(u, v, w) in &self.edges {
            let d = f[v] - f[u];
            acc += w * d * d;
        }
        Ok(acc)
    }

    /// `‖f‖_p` with respect to the vertex measure; `p = ∞` gives `max |f|`.
    pub fn lp_norm(&self, f: &VertexFunction, p: f64) -> Result<f64> {
        self.check_len(f)?;
        if p < 1.0 || p.is_nan() {
            return Err(GraphError::InvalidExponent(p));
        }
        if p.is_infinite() {
            return Ok(f.values().iter().fold(0.0, |a, &v| a.max(v.abs())));
        }
        let sum: f64 = f
            .values()
            .iter()
            .zip(&self.measure)
            .map(|(&v, &m)| v.abs().powf(p) * m)
            .sum();
        Ok(sum.powf(1.0 / p))
    }

    /// `⟨f, h⟩ = Σ_x f(x) h(x) m(x)`.
    pub fn inner(&self, f: &VertexFunction, h: &VertexFunction) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(h)?;
        Ok(f.values()
            .iter()
            .zip(h.values())
            .zip(&self.measure)
            .map(|((&a, &b), &m)| a * b * m)
            .sum())
    }

    /// Hop distances from `x` to every vertex (edge weights ignored).
    pub fn distances_from(&self, x: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[x] = 0;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Graph distance `d(x, z)` (number of edges on a shortest path).
    pub fn graph_distance(&self, x: &str, z: &str) -> Result<usize> {
        let xi = self.index_of(x)?;
        let zi = self.index_of(z)?;
        Ok(self.distances_from(xi)[zi])
    }

    /// `B(x, r) = {y : d(x,y) ≤ r}` as dense indices, for a real radius.
    pub fn ball(&self, x: usize, radius: f64) -> Vec<usize> {
        let dist = self.distances_from(x);
        (0..self.len())
            .filter(|&y| dist[y] != usize::MAX && (dist[y] as f64) <= radius)
            .collect()
    }

    /// `V(A) = Σ_{x∈A} m(x)`.
    pub fn volume(&self, vertices: &[usize]) -> f64 {
        vertices.iter().map(|&x| self.measure[x]).sum()
    }

    /// `V(x, r) = V(B(x, r))`.
    pub fn ball_volume(&self, x: usize, radius: f64) -> f64 {
        self.volume(&self.ball(x, radius))
    }

    /// Largest hop distance from `x` to any vertex.
    pub fn eccentricity(&self, x: usize) -> usize {
        self.distances_from(x).into_iter().max().unwrap_or(0)
    }

    pub fn diameter(&self) -> usize {
        (0..self.len()).map(|x| self.eccentricity(x)).max().unwrap_or(0)
    }

    /// Green's formula residual `Σ f Δh m + Σ Γ(f,h) m`; zero up to
    /// rounding for every pair on a finite graph.
    pub fn green_residual(&self, f: &VertexFunction, h: &VertexFunction) -> Result<f64> {
        let lap_h = self.laplacian(h)?;
        let pairing = self.inner(f, &lap_h)?;
        let gamma = self.gamma_bilinear(f, h)?;
        let energy: f64 = gamma
            .values()
            .iter()
            .zip(&self.measure)
            .map(|(&g, &m)| g * m)
            .sum();
        Ok(pairing + energy)
    }
}

/// Real-valued function on the vertex set, stored densely in the graph's
/// index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        VertexFunction(values)
    }

    pub fn constant(len: usize, c: f64) -> Self {
        VertexFunction(vec![c; len])
    }

    /// Indicator `δ_y`.
    pub fn delta(len: usize, y: usize) -> Self {
        let mut v = vec![0.0; len];
        v[y] = 1.0;
        VertexFunction(v)
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> f64) -> Self {
        VertexFunction((0..len).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        VertexFunction(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        VertexFunction(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |a, (&x, &y)| a.max((x - y).abs()))
    }
}

impl std::ops::Index<usize> for VertexFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn k2() -> WeightedGraph {
        WeightedGraph::new(
            vec![("x".into(), 1.0), ("y".into(), 1.0)],
            vec![("x".into(), "y".into(), 1.0)],
        )
        .unwrap()
    }

    pub(crate) fn p3() -> WeightedGraph {
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
    fn validate_two_vertex() {
        let g = k2();
        let s = g.validate().unwrap();
        assert_eq!(s.delta, 1.0);
        assert_eq!(s.bounded_ratio, 1.0);
        assert!(s.connected);
    }

    #[test]
    fn validate_rejects_nonpositive_measure() {
        let err = WeightedGraph::new(
            vec![("x".into(), 0.0), ("y".into(), 1.0)],
            vec![("x".into(), "y".into(), 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::NonpositiveMeasure { .. }));
    }

    #[test]
    fn validate_rejects_disconnected() {
        let err = WeightedGraph::new(
            vec![
                ("a".into(), 1.0),
                ("b".into(), 1.0),
                ("c".into(), 1.0),
                ("d".into(), 1.0),
            ],
            vec![
                ("a".into(), "b".into(), 1.0),
                ("c".into(), "d".into(), 1.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Disconnected));
    }

    #[test]
    fn validate_rejects_asymmetric_adjacency() {
        let g = WeightedGraph::from_parts_unchecked(
            vec!["x".into(), "y".into()],
            vec![1.0, 1.0],
            vec![vec![(1, 1.0)], vec![(0, 2.0)]],
            vec![(0, 1, 1.0)],
        );
        assert!(matches!(g.validate(), Err(GraphError::AsymmetricWeight { .. })));
    }

    #[test]
    fn normalized_measure_has_unit_ratio() {
        // P3 with m = deg.
        let g = WeightedGraph::new(
            vec![("a".into(), 1.0), ("b".into(), 2.0), ("c".into(), 1.0)],
            vec![
                ("a".into(), "b".into(), 1.0),
                ("b".into(), "c".into(), 1.0),
            ],
        )
        .unwrap();
        assert_eq!(g.validate().unwrap().bounded_ratio, 1.0);
    }

    #[test]
    fn duplicate_edge_rejected_both_orders() {
        let err = WeightedGraph::new(
            vec![("x".into(), 1.0), ("y".into(), 1.0)],
            vec![
                ("x".into(), "y".into(), 1.0),
                ("y".into(), "x".into(), 1.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::DuplicateEdge { .. }));
    }

    #[test]
    fn laplacian_k2_and_p3() {
        let g = k2();
        let f = VertexFunction::new(vec![0.0, 1.0]);
        let lf = g.laplacian(&f).unwrap();
        assert_eq!(lf.values(), &[1.0, -1.0]);

        let g = p3();
        let f = VertexFunction::new(vec![0.0, 1.0, 2.0]);
        let lf = g.laplacian(&f).unwrap();
        assert_eq!(lf.values(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = p3();
        let f = VertexFunction::constant(3, 4.2);
        assert_eq!(g.laplacian(&f).unwrap().max_abs(), 0.0);
        assert_eq!(g.gamma(&f).unwrap().max_abs(), 0.0);
        assert_eq!(g.gamma2(&f).unwrap().max_abs(), 0.0);
        assert_eq!(g.gamma2_tilde(&f).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn gamma_hand_values() {
        let g = k2();
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert_eq!(g.gamma(&f).unwrap().values(), &[0.5, 0.5]);

        let g = p3();
        let f = VertexFunction::new(vec![0.0, 1.0, 2.0]);
        assert_eq!(g.gamma(&f).unwrap().values(), &[0.5, 1.0, 0.5]);
    }

    #[test]
    fn gamma2_hand_values() {
        let g = k2();
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert_eq!(g.gamma2(&f).unwrap().values(), &[1.0, 1.0]);

        let g = p3();
        let f = VertexFunction::new(vec![0.0, 1.0, 2.0]);
        assert_relative_eq!(g.gamma2(&f).unwrap()[1], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn gamma2_tilde_k2_symbolic() {
        // For K2 with f = (a, b): Γ̃₂(f) = (b−a)² + (b−a)⁴/(4ab).
        let g = k2();
        let (a, b) = (1.0, 2.0);
        let f = VertexFunction::new(vec![a, b]);
        let expect = (b - a) * (b - a) + (b - a).powi(4) / (4.0 * a * b);
        let got = g.gamma2_tilde(&f).unwrap();
        assert_relative_eq!(got[0], expect, max_relative = 1e-12);
        assert_relative_eq!(got[1], expect, max_relative = 1e-12);
    }

    #[test]
    fn gamma2_tilde_rejects_nonpositive() {
        let g = k2();
        let f = VertexFunction::new(vec![1.0, 0.0]);
        assert!(matches!(
            g.gamma2_tilde(&f),
            Err(GraphError::NonpositiveFunction { .. })
        ));
    }

    #[test]
    fn tilde_identity_via_sqrt() {
        // Γ̃₂(√u) = ½ΔΓ(√u) − Γ(√u, Δu/(2√u)) for u > 0.
        let g = k2();
        let u = VertexFunction::new(vec![1.0, 4.0]);
        let root = u.map(f64::sqrt);
        let lhs = g.gamma2_tilde(&root).unwrap();
        let lap_u = g.laplacian(&u).unwrap();
        let ratio = VertexFunction::from_fn(2, |x| lap_u[x] / (2.0 * root[x]));
        let g_root = g.gamma(&root).unwrap();
        let lap_g_root = g.laplacian(&g_root).unwrap();
        let cross = g.gamma_bilinear(&root, &ratio).unwrap();
        for x in 0..2 {
            assert_relative_eq!(lhs[x], 0.5 * lap_g_root[x] - cross[x], epsilon = 1e-13);
        }
    }

    #[test]
    fn dirichlet_energy_and_norms() {
        let g = k2();
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert_eq!(g.dirichlet_energy(&f).unwrap(), 1.0);
        let zero = VertexFunction::constant(2, 0.0);
        assert_eq!(g.dirichlet_energy(&zero).unwrap(), 0.0);
        assert_eq!(g.lp_norm(&zero, 1.0).unwrap(), 0.0);

        let f = VertexFunction::new(vec![3.0, 4.0]);
        assert_relative_eq!(g.lp_norm(&f, 2.0).unwrap(), 5.0, max_relative = 1e-14);
        assert_relative_eq!(g.lp_norm(&f, 1.0).unwrap(), 7.0, max_relative = 1e-14);
        assert_eq!(g.lp_norm(&f, f64::INFINITY).unwrap(), 4.0);
        assert!(matches!(
            g.lp_norm(&f, 0.5),
            Err(GraphError::InvalidExponent(_))
        ));
    }

    #[test]
    fn distances_balls_volumes() {
        let g = p3();
        assert_eq!(g.graph_distance("a", "a").unwrap(), 0);
        assert_eq!(g.graph_distance("a", "c").unwrap(), 2);
        let b = g.index_of("b").unwrap();
        assert_eq!(g.ball(b, 0.0), vec![b]);
        assert_eq!(g.ball_volume(b, 0.0), 1.0);
        assert_eq!(g.ball_volume(b, 1.0), 3.0);
        assert!(g.graph_distance("a", "zz").is_err());
    }

    #[test]
    fn green_residual_hand_case() {
        let g = k2();
        let f = VertexFunction::new(vec![0.0, 1.0]);
        let h = VertexFunction::new(vec![1.0, 0.0]);
        let lap_h = g.laplacian(&h).unwrap();
        assert_eq!(g.inner(&f, &lap_h).unwrap(), 1.0);
        assert_eq!(g.green_residual(&f, &h).unwrap(), 0.0);
        let c = VertexFunction::constant(2, 3.0);
        assert_eq!(g.green_residual(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn loops_are_stored_but_inert() {
        let g = WeightedGraph::new(
            vec![("x".into(), 1.0), ("y".into(), 1.0)],
            vec![
                ("x".into(), "y".into(), 1.0),
                ("x".into(), "x".into(), 5.0),
            ],
        )
        .unwrap();
        assert_eq!(g.degree(0), 6.0);
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert_eq!(g.laplacian(&f).unwrap().values(), &[1.0, -1.0]);
        assert_eq!(g.gamma(&f).unwrap().values(), &[0.5, 0.5]);
        assert_eq!(g.dirichlet_energy(&f).unwrap(), 1.0);
    }
}
