//! Graph family generators, the JSON file format, and seeded corpora.
//!
//! Generated vertex ids are deterministic functions of the family
//! coordinates (grid positions, tree paths, indices), so two calls with
//! the same spec produce byte-identical graphs.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{GraphError, WeightedGraph};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("invalid size for family `{family}`: {detail}")]
    InvalidSize { family: String, detail: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("malformed graph document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("i/o error on `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, FamilyError>;

/// Vertex measure convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureScheme {
    /// `m ≡ 1` (combinatorial Laplacian).
    Unit,
    /// `m(x) = deg(x)` (normalized Laplacian, bounded).
    Degree,
    /// Explicit id → measure map.
    Custom(Vec<(String, f64)>),
}

impl Default for MeasureScheme {
    fn default() -> Self {
        MeasureScheme::Unit
    }
}

/// Deterministic graph family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Path { n: usize },
    Cycle { n: usize },
    Complete { n: usize },
    /// Hub plus `leaves` pendant vertices.
    Star { leaves: usize },
    /// Box `{0..side-1}^dim` of the integer lattice.
    LatticeBox { dim: usize, side: usize },
    /// Root with `branching` children; every other internal vertex has
    /// `branching - 1` children, down to the given depth.
    RegularTree { branching: usize, depth: usize },
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Path { n } => write!(f, "path({n})"),
            FamilySpec::Cycle { n } => write!(f, "cycle({n})"),
            FamilySpec::Complete { n } => write!(f, "complete({n})"),
            FamilySpec::Star { leaves } => write!(f, "star({leaves})"),
            FamilySpec::LatticeBox { dim, side } => write!(f, "lattice_box({dim},{side})"),
            FamilySpec::RegularTree { branching, depth } => {
                write!(f, "regular_tree({branching},{depth})")
            }
        }
    }
}

fn invalid(family: &FamilySpec, detail: &str) -> FamilyError {
    FamilyError::InvalidSize { family: family.to_string(), detail: detail.to_string() }
}

/// Generates the family with constant edge weight `weight` and the given
/// measure scheme.
pub fn generate(
    spec: &FamilySpec,
    weight: f64,
    measure: &MeasureScheme,
) -> Result<WeightedGraph> {
    if !(weight > 0.0) {
        return Err(invalid(spec, "edge weight must be positive"));
    }
    let (ids, edges): (Vec<String>, Vec<(String, String)>) = match *spec {
        FamilySpec::Path { n } => {
            if n < 1 {
                return Err(invalid(spec, "need at least 1 vertex"));
            }
            let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let edges = (1..n).map(|i| (ids[i - 1].clone(), ids[i].clone())).collect();
            (ids, edges)
        }
        FamilySpec::Cycle { n } => {
            if n < 3 {
                return Err(invalid(spec, "need at least 3 vertices"));
            }
            let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let edges = (0..n)
                .map(|i| (ids[i].clone(), ids[(i + 1) % n].clone()))
                .collect();
            (ids, edges)
        }
        FamilySpec::Complete { n } => {
            if n < 2 {
                return Err(invalid(spec, "need at least 2 vertices"));
            }
            let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((ids[i].clone(), ids[j].clone()));
                }
            }
            (ids, edges)
        }
        FamilySpec::Star { leaves } => {
            if leaves < 1 {
                return Err(invalid(spec, "need at least 1 leaf"));
            }
            let mut ids = vec!["hub".to_string()];
            let mut edges = Vec::new();
            for i in 0..leaves {
                let id = format!("leaf{i}");
                edges.push(("hub".to_string(), id.clone()));
                ids.push(id);
            }
            (ids, edges)
        }
        FamilySpec::LatticeBox { dim, side } => {
            if dim < 1 || side < 1 {
                return Err(invalid(spec, "need dim >= 1 and side >= 1"));
            }
            if side.checked_pow(dim as u32).is_none() {
                return Err(invalid(spec, "box too large"));
            }
            let total = side.pow(dim as u32);
            let coord = |mut idx: usize| -> Vec<usize> {
                let mut c = vec![0; dim];
                for d in (0..dim).rev() {
                    c[d] = idx % side;
                    idx /= side;
                }
                c
            };
            let name = |c: &[usize]| {
                c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_")
            };
            let ids: Vec<String> = (0..total).map(|i| name(&coord(i))).collect();
            let mut edges = Vec::new();
            for i in 0..total {
                let c = coord(i);
                for d in 0..dim {
                    if c[d] + 1 < side {
                        let mut c2 = c.clone();
                        c2[d] += 1;
                        edges.push((name(&c), name(&c2)));
                    }
                }
            }
            (ids, edges)
        }
        FamilySpec::RegularTree { branching, depth } => {
            if branching < 1 {
                return Err(invalid(spec, "need branching >= 1"));
            }
            let mut ids = vec!["r".to_string()];
            let mut edges = Vec::new();
            let mut frontier = vec!["r".to_string()];
            for level in 0..depth {
                let children_per = if level == 0 { branching } else { branching - 1 };
                let mut next = Vec::new();
                for parent in &frontier {
                    for c in 0..children_per {
                        let id = if parent == "r" {
                            format!("{c}")
                        } else {
                            format!("{parent}.{c}")
                        };
                        edges.push((parent.clone(), id.clone()));
                        ids.push(id.clone());
                        next.push(id);
                    }
                }
                frontier = next;
            }
            (ids, edges)
        }
    };

    let weighted: Vec<(String, String, f64)> = edges
        .into_iter()
        .map(|(u, v)| (u, v, weight))
        .collect();
    build_with_measure(ids, weighted, measure)
}

fn build_with_measure(
    ids: Vec<String>,
    edges: Vec<(String, String, f64)>,
    measure: &MeasureScheme,
) -> Result<WeightedGraph> {
    let vertices: Vec<(String, f64)> = match measure {
        MeasureScheme::Unit => ids.into_iter().map(|id| (id, 1.0)).collect(),
        MeasureScheme::Degree => {
            let mut deg: Map<String, Value> = Map::new();
            for id in &ids {
                deg.insert(id.clone(), json!(0.0));
            }
            let mut degrees: std::collections::HashMap<&str, f64> =
                ids.iter().map(|id| (id.as_str(), 0.0)).collect();
            for (u, v, w) in &edges {
                *degrees.get_mut(u.as_str()).unwrap() += w;
                if u != v {
                    *degrees.get_mut(v.as_str()).unwrap() += w;
                }
            }
            ids.iter()
                .map(|id| (id.clone(), degrees[id.as_str()]))
                .collect()
        }
        MeasureScheme::Custom(map) => {
            let lookup: std::collections::HashMap<&str, f64> =
                map.iter().map(|(id, m)| (id.as_str(), *m)).collect();
            let mut vertices = Vec::with_capacity(ids.len());
            for id in ids {
                let m = lookup.get(id.as_str()).copied().ok_or_else(|| {
                    FamilyError::Schema(format!("custom measure missing vertex `{id}`"))
                })?;
                vertices.push((id, m));
            }
            vertices
        }
    };
    Ok(WeightedGraph::new(vertices, edges)?)
}

// ---------------------------------------------------------------------------
// Seeded random corpora.
// ---------------------------------------------------------------------------

/// Controls for [`random_connected`].
#[derive(Debug, Clone, Copy)]
pub struct RandomGraphParams {
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub weight_range: (f64, f64),
    pub measure_range: (f64, f64),
    /// Probability of attaching a loop to a random vertex.
    pub loop_probability: f64,
}

impl Default for RandomGraphParams {
    fn default() -> Self {
        RandomGraphParams {
            min_vertices: 2,
            max_vertices: 40,
            weight_range: (0.1, 10.0),
            measure_range: (0.1, 10.0),
            loop_probability: 0.1,
        }
    }
}

/// Seeded random connected weighted graph: a random spanning tree plus
/// extra edges, weights and measures drawn uniformly from the ranges.
pub fn random_connected(params: &RandomGraphParams, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = rng.gen_range(params.min_vertices..=params.max_vertices);
    let ids: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
    let (wl, wh) = params.weight_range;
    let (ml, mh) = params.measure_range;
    let vertices: Vec<(String, f64)> = ids
        .iter()
        .map(|id| (id.clone(), rng.gen_range(ml..mh)))
        .collect();
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        present.insert((parent, i));
        edges.push((ids[parent].clone(), ids[i].clone(), rng.gen_range(wl..wh)));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if present.insert(key) {
            edges.push((ids[key.0].clone(), ids[key.1].clone(), rng.gen_range(wl..wh)));
        }
    }
    if n >= 1 && rng.gen_bool(params.loop_probability) {
        let v = rng.gen_range(0..n);
        edges.push((ids[v].clone(), ids[v].clone(), rng.gen_range(wl..wh)));
    }
    WeightedGraph::new(vertices, edges).expect("random graph construction")
}

/// Seeded positive random function, values in `(lo, hi)`.
pub fn random_positive_function(
    len: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> crate::graph::VertexFunction {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    crate::graph::VertexFunction::new((0..len).map(|_| rng.gen_range(lo..hi)).collect())
}

/// Seeded signed random function, values in `(-amp, amp)`.
pub fn random_function(len: usize, amp: f64, seed: u64) -> crate::graph::VertexFunction {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    crate::graph::VertexFunction::new((0..len).map(|_| rng.gen_range(-amp..amp)).collect())
}

// ---------------------------------------------------------------------------
// File format.
// ---------------------------------------------------------------------------

/// Canonical JSON document for a graph:
/// `{"vertices": [id...], "measure": {id: m}, "edges": [{"u","v","w"}]}`,
/// measure keys in vertex order, each undirected edge listed once.
pub fn to_json_string(g: &WeightedGraph) -> String {
    let mut measure = Map::new();
    for (i, id) in g.ids().iter().enumerate() {
        measure.insert(id.clone(), json!(g.measure(i)));
    }
    let edges: Vec<Value> = g
        .edge_list()
        .iter()
        .map(|&(u, v, w)| json!({"u": g.id(u), "v": g.id(v), "w": w}))
        .collect();
    let doc = json!({
        "vertices": g.ids(),
        "measure": Value::Object(measure),
        "edges": edges,
    });
    serde_json::to_string_pretty(&doc).expect("graph serialization")
}

/// SHA-256 of the canonical JSON document, as lowercase hex.
pub fn content_hash(g: &WeightedGraph) -> String {
    let mut h = Sha256::new();
    h.update(to_json_string(g).as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn from_json_str(text: &str) -> Result<WeightedGraph> {
    let doc: Value = serde_json::from_str(text)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| FamilyError::Schema("top level must be an object".into()))?;
    for key in obj.keys() {
        if key != "vertices" && key != "measure" && key != "edges" {
            return Err(FamilyError::Schema(format!("unknown top-level key `{key}`")));
        }
    }
    let vertices = obj
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| FamilyError::Schema("missing `vertices` array".into()))?;
    let measure = obj
        .get("measure")
        .and_then(Value::as_object)
        .ok_or_else(|| FamilyError::Schema("missing `measure` object".into()))?;
    let edges = obj
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| FamilyError::Schema("missing `edges` array".into()))?;

    let mut vs = Vec::with_capacity(vertices.len());
    for v in vertices {
        let id = v
            .as_str()
            .ok_or_else(|| FamilyError::Schema("vertex ids must be strings".into()))?;
        let m = measure
            .get(id)
            .ok_or_else(|| FamilyError::Schema(format!("measure entry missing for vertex `{id}`")))?
            .as_f64()
            .ok_or_else(|| FamilyError::Schema(format!("measure of `{id}` must be a number")))?;
        vs.push((id.to_string(), m));
    }
    for key in measure.keys() {
        if !vertices.iter().any(|v| v.as_str() == Some(key)) {
            return Err(FamilyError::Schema(format!(
                "measure entry for unknown vertex `{key}`"
            )));
        }
    }
    let mut es = Vec::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        let eo = e
            .as_object()
            .ok_or_else(|| FamilyError::Schema(format!("edge {i} must be an object")))?;
        let get = |k: &str| {
            eo.get(k)
                .ok_or_else(|| FamilyError::Schema(format!("edge {i} missing `{k}`")))
        };
        let u = get("u")?
            .as_str()
            .ok_or_else(|| FamilyError::Schema(format!("edge {i}: `u` must be a string")))?;
        let v = get("v")?
            .as_str()
            .ok_or_else(|| FamilyError::Schema(format!("edge {i}: `v` must be a string")))?;
        let w = get("w")?
            .as_f64()
            .ok_or_else(|| FamilyError::Schema(format!("edge {i}: `w` must be a number")))?;
        es.push((u.to_string(), v.to_string(), w));
    }
    Ok(WeightedGraph::new(vs, es)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FamilyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json_str(&text)
}

pub fn save(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(g)).map_err(|source| FamilyError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Shared closure type for user-supplied schedules elsewhere in the crate.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
