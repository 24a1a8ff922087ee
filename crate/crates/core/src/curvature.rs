//! Curvature-dimension conditions at a vertex.
//!
//! Two conditions are decided/explored here, both local to the ball
//! `B₂(x)` (every operator involved composes at most two one-step
//! operators, so nothing outside the ball can enter):
//!
//! * `CD(n, K)`: `Γ₂(f)(x) ≥ (1/n)(Δf(x))² + KΓ(f)(x)` for all `f`. The
//!   left-minus-right expression is a quadratic form in `f|B₂(x)`, so the
//!   decision is exact: assemble the form by polarization and inspect its
//!   minimum eigenvalue. The largest admissible `K` is a generalized
//!   eigenvalue problem between the numerator form and the `Γ` form,
//!   solved on the orthogonal complement of the `Γ` kernel with a Schur
//!   complement for the kernel coupling.
//!
//! * `CDE'(n, K)`: `Γ̃₂(f)(x) ≥ (1/n)f(x)²(Δ log f)(x)² + KΓ(f)(x)` for
//!   all positive `f`. This is not quadratic; the module searches for
//!   counterexamples by seeded multi-start descent over `f = exp(v)`
//!   with the scale gauge removed. A returned witness is a sound,
//!   recheckable violation certificate; absence of a witness proves
//!   nothing.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::graph::{GraphError, VertexFunction, WeightedGraph};
use crate::serde_ext::ext_f64;
use crate::tol;

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("dimension parameter must be positive, got {0}")]
    InvalidDimension(f64),
    #[error("search needs at least one start")]
    NoStarts,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, CurvatureError>;

/// Query parameters for a curvature condition at a vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureQuery {
    pub vertex: String,
    #[serde(with = "ext_f64")]
    pub n: f64,
    pub k: f64,
}

/// Outcome of the exact `CD(n, K)` decision at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdDecision {
    pub holds: bool,
    /// Minimum eigenvalue of the quadratic form `Γ₂ − (1/n)Δ² − KΓ`
    /// on `f|B₂(x)`; the form always annihilates constants, so this is
    /// at most zero and equals zero when the condition is tight.
    pub min_eigenvalue: f64,
}

/// Sound violation certificate for `CDE'(n, K)` at a vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureWitness {
    pub vertex: String,
    /// Positive on `B₂(vertex)`, zero elsewhere (values outside the ball
    /// never enter the deficit).
    pub f: VertexFunction,
    /// `cde_deficit(g, vertex, f, n, K)`, recomputed from scratch.
    pub deficit: f64,
    /// `Γ(f)(vertex)` of the stored function, 1 up to rounding.
    pub normalization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureVerdict {
    /// CD(n, K) holds exactly and no CDE' counterexample was found.
    #[serde(rename = "holds-inconclusive")]
    HoldsInconclusive,
    /// A recheckable CDE' witness with deficit below tolerance exists.
    #[serde(rename = "violated")]
    Violated,
    /// CD(n, K) already fails but the search produced no certificate.
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

/// Per-vertex record of a curvature sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCurvature {
    pub vertex: String,
    /// Largest `K` with `CD(n, K)` at this vertex (may be `±inf`).
    #[serde(with = "ext_f64")]
    pub cd_k_star: f64,
    /// Best upper bound found for the CDE' curvature at this vertex.
    #[serde(with = "ext_f64")]
    pub cde_best_k_upper: f64,
    pub cde_witness: Option<CurvatureWitness>,
    pub verdict: CurvatureVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub schema: u32,
    pub graph_hash: String,
    #[serde(with = "ext_f64")]
    pub n: f64,
    pub k: f64,
    pub starts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
    pub records: Vec<VertexCurvature>,
}

impl CurvatureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// CSV projection: `vertex, cd_K_star, cde_best_K_upper, verdict`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["vertex", "cd_K_star", "cde_best_K_upper", "verdict"])
            .expect("csv header");
        for r in &self.records {
            let verdict = match r.verdict {
                CurvatureVerdict::HoldsInconclusive => "holds-inconclusive",
                CurvatureVerdict::Violated => "violated",
                CurvatureVerdict::Inconclusive => "inconclusive",
            };
            w.write_record([
                r.vertex.as_str(),
                &ext_f64::display(r.cd_k_star),
                &ext_f64::display(r.cde_best_k_upper),
                verdict,
            ])
            .expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
    }
}

fn check_dimension(n: f64) -> Result<f64> {
    if n.is_nan() || n <= 0.0 {
        return Err(CurvatureError::InvalidDimension(n));
    }
    Ok(if n.is_infinite() { 0.0 } else { 1.0 / n })
}

/// Vertices of `B₂(x)` in canonical order: by distance from `x`, then by
/// id. Independent of vertex insertion order.
pub fn ball_two(g: &WeightedGraph, x: usize) -> Vec<usize> {
    let dist = g.distances_from(x);
    let mut coords: Vec<usize> = (0..g.len())
        .filter(|&y| dist[y] != usize::MAX && dist[y] <= 2)
        .collect();
    coords.sort_by(|&a, &b| dist[a].cmp(&dist[b]).then_with(|| g.id(a).cmp(g.id(b))));
    coords
}

// ---------------------------------------------------------------------------
// Local operator evaluations on B₂(x). Every read stays inside the ball.
// ---------------------------------------------------------------------------

/// `Γ₂(f)(x) = ½ΔΓ(f)(x) − Γ(f, Δf)(x)` from values of `f` on `B₂(x)`.
fn gamma2_at(g: &WeightedGraph, f: &[f64], x: usize) -> f64 {
    let gx = g.gamma_at(f, f, x);
    let dx = g.laplacian_at(f, x);
    let mut dgamma = 0.0;
    let mut cross = 0.0;
    for &(y, w) in g.neighbors(x) {
        dgamma += w * (g.gamma_at(f, f, y) - gx);
        cross += w * (f[y] - f[x]) * (g.laplacian_at(f, y) - dx);
    }
    let m = g.measure(x);
    0.5 * dgamma / m - 0.5 * cross / m
}

/// `Δ(log f)(x)`; requires `f > 0` on `B₁(x)`.
fn dlog_at(g: &WeightedGraph, f: &[f64], x: usize) -> f64 {
    let mut acc = 0.0;
    for &(y, w) in g.neighbors(x) {
        acc += w * (f[y] / f[x]).ln();
    }
    acc / g.measure(x)
}

struct DeficitParts {
    /// `Γ̃₂(f)(x) − (1/n) f(x)² (Δ log f)(x)²` (the K-free numerator).
    numerator: f64,
    gamma_x: f64,
}

fn deficit_parts(g: &WeightedGraph, f: &[f64], x: usize, inv_n: f64) -> DeficitParts {
    let gamma_x = g.gamma_at(f, f, x);
    let g2 = gamma2_at(g, f, x);
    // Γ(f, Γ(f)/f)(x): quotient values needed at x and its neighbors.
    let qx = gamma_x / f[x];
    let mut cross_q = 0.0;
    for &(y, w) in g.neighbors(x) {
        let qy = g.gamma_at(f, f, y) / f[y];
        cross_q += w * (f[y] - f[x]) * (qy - qx);
    }
    cross_q /= 2.0 * g.measure(x);
    let dlog = dlog_at(g, f, x);
    let numerator = g2 - cross_q - inv_n * f[x] * f[x] * dlog * dlog;
    DeficitParts { numerator, gamma_x }
}

fn require_positive_on_ball(
    g: &WeightedGraph,
    f: &VertexFunction,
    coords: &[usize],
) -> Result<()> {
    for &z in coords {
        if !(f[z] > 0.0) {
            return Err(CurvatureError::Graph(GraphError::NonpositiveFunction {
                vertex: g.id(z).to_string(),
                value: f[z],
            }));
        }
    }
    Ok(())
}

/// `CDE'` deficit `Γ̃₂(f)(x) − (1/n)f(x)²(Δ log f)(x)² − KΓ(f)(x)`.
///
/// `f` must be strictly positive on `B₂(x)`; values elsewhere are ignored.
pub fn cde_deficit(g: &WeightedGraph, x: &str, f: &VertexFunction, n: f64, k: f64) -> Result<f64> {
    let inv_n = check_dimension(n)?;
    let xi = g.index_of(x)?;
    if f.len() != g.len() {
        return Err(CurvatureError::Graph(GraphError::DimensionMismatch {
            got: f.len(),
            expected: g.len(),
        }));
    }
    let coords = ball_two(g, xi);
    require_positive_on_ball(g, f, &coords)?;
    let parts = deficit_parts(g, f.values(), xi, inv_n);
    Ok(parts.numerator - k * parts.gamma_x)
}

// ---------------------------------------------------------------------------
// Analytic gradient of the deficit with respect to v, where f = exp(v).
// ---------------------------------------------------------------------------

/// Gradient accumulation for the deficit at `x`, with respect to `f`
/// first, chained to `v` at the end. Reverse-mode by hand over the
/// intermediate quantities `Γ(f)(w)`, `Δf(w)`, `Γ(f)(w)/f(w)`, and
/// `Δ log f(x)`; loop edges cancel because every edge term contributes
/// symmetrically to both endpoints.
fn deficit_gradient_f(
    g: &WeightedGraph,
    f: &[f64],
    x: usize,
    inv_n: f64,
    k: f64,
    grad_f: &mut [f64],
) {
    let mx = g.measure(x);
    // B₁ bookkeeping: x first, then its neighbor list.
    let mut b1: Vec<usize> = Vec::with_capacity(g.neighbors(x).len() + 1);
    b1.push(x);
    for &(y, _) in g.neighbors(x) {
        if y != x {
            b1.push(y);
        }
    }
    let pos = |w: usize| b1.iter().position(|&u| u == w).expect("B1 member");

    let mut gamma = vec![0.0; b1.len()];
    let mut lap = vec![0.0; b1.len()];
    for (i, &w) in b1.iter().enumerate() {
        gamma[i] = g.gamma_at(f, f, w);
        lap[i] = g.laplacian_at(f, w);
    }
    let q: Vec<f64> = b1.iter().enumerate().map(|(i, &w)| gamma[i] / f[w]).collect();
    let dlog = dlog_at(g, f, x);

    let mut a_gamma = vec![0.0; b1.len()];
    let mut a_lap = vec![0.0; b1.len()];
    let mut a_q = vec![0.0; b1.len()];

    // ½ΔΓ(f)(x) term.
    for &(y, w) in g.neighbors(x) {
        let c = w / (2.0 * mx);
        a_gamma[pos(y)] += c;
        a_gamma[0] -= c;
    }
    // −KΓ(f)(x) term.
    a_gamma[0] -= k;
    // −Γ(f, Δf)(x) and −Γ(f, Γ(f)/f)(x) terms.
    for &(y, w) in g.neighbors(x) {
        let c = w / (2.0 * mx);
        let py = pos(y);
        let d_lap = lap[py] - lap[0];
        grad_f[y] -= c * d_lap;
        grad_f[x] += c * d_lap;
        a_lap[py] -= c * (f[y] - f[x]);
        a_lap[0] += c * (f[y] - f[x]);

        let d_q = q[py] - q[0];
        grad_f[y] -= c * d_q;
        grad_f[x] += c * d_q;
        a_q[py] -= c * (f[y] - f[x]);
        a_q[0] += c * (f[y] - f[x]);
    }
    // −(1/n) f(x)² (Δ log f)(x)² term.
    grad_f[x] -= 2.0 * inv_n * f[x] * dlog * dlog;
    let a_dlog = -2.0 * inv_n * f[x] * f[x] * dlog;
    for &(y, w) in g.neighbors(x) {
        grad_f[y] += a_dlog * w / (mx * f[y]);
        grad_f[x] -= a_dlog * w / (mx * f[x]);
    }
    // Quotient q(w) = Γ(f)(w)/f(w).
    for (i, &w) in b1.iter().enumerate() {
        if a_q[i] != 0.0 {
            a_gamma[i] += a_q[i] / f[w];
            grad_f[w] -= a_q[i] * gamma[i] / (f[w] * f[w]);
        }
    }
    // Propagate Γ(f)(w) and Δf(w) adjoints to f.
    for (i, &u) in b1.iter().enumerate() {
        let (ag, al) = (a_gamma[i], a_lap[i]);
        if ag == 0.0 && al == 0.0 {
            continue;
        }
        let mu = g.measure(u);
        for &(z, w) in g.neighbors(u) {
            let d = ag * w * (f[z] - f[u]) / mu;
            grad_f[z] += d;
            grad_f[u] -= d;
            let e = al * w / mu;
            grad_f[z] += e;
            grad_f[u] -= e;
        }
    }
}

/// Analytic gradient of [`cde_deficit`] with respect to `v` (`f = e^v`),
/// over the coordinates of [`ball_two`] in canonical order.
pub fn cde_deficit_gradient(
    g: &WeightedGraph,
    x: &str,
    f: &VertexFunction,
    n: f64,
    k: f64,
) -> Result<Vec<f64>> {
    let inv_n = check_dimension(n)?;
    let xi = g.index_of(x)?;
    let coords = ball_two(g, xi);
    require_positive_on_ball(g, f, &coords)?;
    let mut grad_f = vec![0.0; g.len()];
    deficit_gradient_f(g, f.values(), xi, inv_n, k, &mut grad_f);
    Ok(coords.iter().map(|&z| grad_f[z] * f[z]).collect())
}

// ---------------------------------------------------------------------------
// Quadratic forms and the exact CD decision.
// ---------------------------------------------------------------------------

/// Assembles the symmetric matrix of a quadratic form on the ball
/// coordinates by polarization over the standard basis.
fn polarize(
    g: &WeightedGraph,
    coords: &[usize],
    mut q: impl FnMut(&[f64]) -> f64,
) -> DMatrix<f64> {
    let d = coords.len();
    let mut scratch = vec![0.0; g.len()];
    let mut eval = |support: &[(usize, f64)], scratch: &mut Vec<f64>| -> f64 {
        for &(z, v) in support {
            scratch[z] = v;
        }
        let out = q(scratch);
        for &(z, _) in support {
            scratch[z] = 0.0;
        }
        out
    };
    let mut a = DMatrix::zeros(d, d);
    let mut diag = vec![0.0; d];
    for i in 0..d {
        diag[i] = eval(&[(coords[i], 1.0)], &mut scratch);
        a[(i, i)] = diag[i];
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let both = eval(&[(coords[i], 1.0), (coords[j], 1.0)], &mut scratch);
            let off = 0.5 * (both - diag[i] - diag[j]);
            a[(i, j)] = off;
            a[(j, i)] = off;
        }
    }
    a
}

fn cd_form_matrices(
    g: &WeightedGraph,
    x: usize,
    inv_n: f64,
) -> (Vec<usize>, DMatrix<f64>, DMatrix<f64>) {
    let coords = ball_two(g, x);
    let numerator = polarize(g, &coords, |f| {
        let d = g.laplacian_at(f, x);
        gamma2_at(g, f, x) - inv_n * d * d
    });
    let gamma_form = polarize(g, &coords, |f| g.gamma_at(f, f, x));
    (coords, numerator, gamma_form)
}

/// Exact decision of `CD(n, K)` at vertex `x`.
pub fn cd_holds_at(g: &WeightedGraph, x: &str, n: f64, k: f64, tol: f64) -> Result<CdDecision> {
    let inv_n = check_dimension(n)?;
    let xi = g.index_of(x)?;
    let coords = ball_two(g, xi);
    let form = polarize(g, &coords, |f| {
        let d = g.laplacian_at(f, xi);
        let gx = g.gamma_at(f, f, xi);
        gamma2_at(g, f, xi) - inv_n * d * d - k * gx
    });
    let min_eigenvalue = crate::linalg::min_eigenvalue(form);
    Ok(CdDecision { holds: min_eigenvalue >= -tol, min_eigenvalue })
}

/// Largest `K` such that `CD(n, K)` holds at `x`:
/// the infimum of `(Γ₂(f)(x) − (1/n)(Δf(x))²) / Γ(f)(x)` over functions
/// with `Γ(f)(x) > 0`.
///
/// Returns `-inf` when the numerator form is negative (or couples to the
/// positive part through a null direction) on the kernel of the `Γ` form,
/// and `+inf` for an isolated vertex where the `Γ` form vanishes.
pub fn cd_curvature_at(g: &WeightedGraph, x: &str, n: f64) -> Result<f64> {
    let inv_n = check_dimension(n)?;
    let xi = g.index_of(x)?;
    let (_coords, num, gam) = cd_form_matrices(g, xi, inv_n);
    let d = num.nrows();

    let (gam_values, gam_vectors) = crate::linalg::symmetric_eigen(gam);
    let scale_g = gam_values.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if scale_g == 0.0 {
        return Ok(f64::INFINITY);
    }
    let cut = tol::FORM_KERNEL_CUT * scale_g;
    let mut kernel_cols = Vec::new();
    let mut range_cols = Vec::new();
    for i in 0..d {
        if gam_values[i] > cut {
            range_cols.push(i);
        } else {
            kernel_cols.push(i);
        }
    }
    if range_cols.is_empty() {
        return Ok(f64::INFINITY);
    }
    let take = |cols: &[usize]| {
        DMatrix::from_fn(d, cols.len(), |r, c| gam_vectors[(r, cols[c])])
    };
    let z = take(&kernel_cols);
    let w = take(&range_cols);
    let n_zz = z.transpose() * &num * &z;
    let n_wz = w.transpose() * &num * &z;
    let n_ww = w.transpose() * &num * &w;

    let scale_n = num.amax().max(1e-300);
    let eps_n = 1e-9 * scale_n;

    // Numerator must be PSD on the Γ-kernel, and its null directions
    // there must not couple into the range; otherwise the infimum is -∞.
    let reduced = if kernel_cols.is_empty() {
        n_ww
    } else {
        let (zz_values, zz_vectors) = crate::linalg::symmetric_eigen(n_zz.clone());
        let mut pinv = DMatrix::zeros(kernel_cols.len(), kernel_cols.len());
        for i in 0..kernel_cols.len() {
            let lam = zz_values[i];
            if lam < -eps_n {
                return Ok(f64::NEG_INFINITY);
            }
            if lam > eps_n {
                let col = zz_vectors.column(i);
                pinv += DMatrix::from_fn(kernel_cols.len(), kernel_cols.len(), |r, c| {
                    col[r] * col[c] / lam
                });
            } else {
                // Null direction of the kernel block: coupling must vanish.
                let col = zz_vectors.column(i).into_owned();
                let coupling = &n_wz * &col;
                if coupling.amax() > eps_n.max(1e-12 * scale_n) {
                    return Ok(f64::NEG_INFINITY);
                }
            }
        }
        &n_ww - &n_wz * pinv * n_wz.transpose()
    };

    // Generalized eigenvalue bottom of (reduced, diag(γ_i)).
    let r = range_cols.len();
    let inv_sqrt = DVector::from_fn(r, |i, _| 1.0 / gam_values[range_cols[i]].sqrt());
    let mut s = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            s[(i, j)] = reduced[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    // Symmetrize against rounding.
    let s = 0.5 * (&s + s.transpose());
    Ok(crate::linalg::min_eigenvalue(s))
}

/// Smallest `n` with `CD(n, K)` at `x`, by bisection over the exact
/// decision. `None` when even `n = ∞` fails; `+inf` when only `n = ∞`
/// works.
pub fn cd_min_dimension(g: &WeightedGraph, x: &str, k: f64) -> Result<Option<f64>> {
    let tol_cd = 1e-11;
    if !cd_holds_at(g, x, f64::INFINITY, k, tol_cd)?.holds {
        return Ok(None);
    }
    let mut hi = 1.0;
    let mut grow = 0;
    while !cd_holds_at(g, x, hi, k, tol_cd)?.holds {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Ok(Some(f64::INFINITY));
        }
    }
    let mut lo = hi / 2.0;
    while cd_holds_at(g, x, lo, k, tol_cd)?.holds {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-12 {
            return Ok(Some(hi));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cd_holds_at(g, x, mid, k, tol_cd)?.holds {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

// ---------------------------------------------------------------------------
// CDE' counterexample search.
// ---------------------------------------------------------------------------

fn rng_for(seed: u64, vertex: &str, start: usize) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(vertex.as_bytes());
    h.update((start as u64).to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(key)
}

const V_CLAMP: f64 = 16.0;
const OBJECTIVE_GUARD: f64 = 1e12;

struct RatioEval {
    ratio: f64,
    gamma_x: f64,
}

/// Objective `R(v) = (Γ̃₂ − (1/n)f²(Δ log f)²)/Γ(f)(x)` at `f = exp(v)`.
///
/// The scale gauge makes `R` invariant under `v → v + c`, so the center
/// coordinate stays frozen at zero. Near-constant `v` (vanishing `Γ`) is
/// guarded with a large plateau value: the ratio limit there reproduces
/// the CD ratios, and rescaled witnesses from that region would lose all
/// their significant digits.
fn ratio_objective(
    g: &WeightedGraph,
    x: usize,
    f: &[f64],
    inv_n: f64,
    gamma_floor: f64,
) -> RatioEval {
    let parts = deficit_parts(g, f, x, inv_n);
    if parts.gamma_x < gamma_floor {
        return RatioEval { ratio: OBJECTIVE_GUARD, gamma_x: parts.gamma_x };
    }
    RatioEval { ratio: parts.numerator / parts.gamma_x, gamma_x: parts.gamma_x }
}

fn ratio_gradient(
    g: &WeightedGraph,
    x: usize,
    coords: &[usize],
    f: &[f64],
    inv_n: f64,
    numerator: f64,
    gamma_x: f64,
) -> Vec<f64> {
    let mut grad_num = vec![0.0; g.len()];
    deficit_gradient_f(g, f, x, inv_n, 0.0, &mut grad_num);
    let mut grad_gam = vec![0.0; g.len()];
    let mx = g.measure(x);
    for &(y, w) in g.neighbors(x) {
        let d = w * (f[y] - f[x]) / mx;
        grad_gam[y] += d;
        grad_gam[x] -= d;
    }
    coords
        .iter()
        .map(|&z| {
            let gn = grad_num[z] * f[z];
            let gg = grad_gam[z] * f[z];
            (gn * gamma_x - numerator * gg) / (gamma_x * gamma_x)
        })
        .collect()
}

struct SearchOutcome {
    best_ratio: f64,
    best_v: Vec<f64>,
}

/// Multi-start descent on the normalized CDE' ratio at vertex `x`.
///
/// Deterministic: start `k` draws from a stream keyed by (seed, vertex
/// id, k), so enlarging `starts` only appends candidates.
fn minimize_cde_ratio(
    g: &WeightedGraph,
    x: usize,
    n: f64,
    starts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Option<SearchOutcome>> {
    let inv_n = check_dimension(n)?;
    let coords = ball_two(g, x);
    if coords.len() < 2 {
        return Ok(None);
    }
    let gamma_floor = 1e-9 * (g.degree(x) / (2.0 * g.measure(x))).max(1e-300);
    let amplitudes = [0.25, 0.6, 1.2, 2.4];

    let mut f = vec![0.0; g.len()];
    let mut f_trial = vec![0.0; g.len()];
    let write_exp = |v: &[f64], f: &mut [f64]| {
        for (i, &z) in coords.iter().enumerate() {
            f[z] = v[i].exp();
        }
    };

    let mut best: Option<SearchOutcome> = None;
    for start in 0..starts {
        let mut rng = rng_for(seed, g.id(x), start);
        let amp = amplitudes[start % amplitudes.len()];
        let mut v = vec![0.0; coords.len()];
        for vi in v.iter_mut().skip(1) {
            *vi = rng.gen_range(-amp..amp);
        }
        write_exp(&v, &mut f);
        let mut eval = ratio_objective(g, x, &f, inv_n, gamma_floor);
        let mut iters = 0;
        while iters < max_iters && eval.ratio < OBJECTIVE_GUARD {
            let parts_num = eval.ratio * eval.gamma_x;
            let mut grad = ratio_gradient(g, x, &coords, &f, inv_n, parts_num, eval.gamma_x);
            grad[0] = 0.0; // gauge: center coordinate frozen
            let gnorm2: f64 = grad.iter().map(|&v| v * v).sum();
            if gnorm2.sqrt() <= 1e-10 * eval.ratio.abs().max(1.0) {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut v_trial = vec![0.0; coords.len()];
            for _ in 0..40 {
                for i in 0..coords.len() {
                    v_trial[i] = (v[i] - alpha * grad[i]).clamp(-V_CLAMP, V_CLAMP);
                }
                v_trial[0] = 0.0;
                write_exp(&v_trial, &mut f_trial);
                let trial = ratio_objective(g, x, &f_trial, inv_n, gamma_floor);
                if trial.ratio <= eval.ratio - 1e-4 * alpha * gnorm2 {
                    v.copy_from_slice(&v_trial);
                    f.copy_from_slice(&f_trial);
                    eval = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            iters += 1;
        }
        if eval.ratio < OBJECTIVE_GUARD {
            let better = best
                .as_ref()
                .map_or(true, |b| eval.ratio < b.best_ratio);
            if better {
                best = Some(SearchOutcome { best_ratio: eval.ratio, best_v: v.clone() });
            }
        }
    }
    Ok(best)
}

fn witness_from(
    g: &WeightedGraph,
    x: usize,
    outcome: &SearchOutcome,
    n: f64,
    k: f64,
    tol: f64,
) -> Result<Option<CurvatureWitness>> {
    let coords = ball_two(g, x);
    let mut f = VertexFunction::constant(g.len(), 0.0);
    for (i, &z) in coords.iter().enumerate() {
        f.values_mut()[z] = outcome.best_v[i].exp();
    }
    let gamma_x = g.gamma_at(f.values(), f.values(), x);
    if !(gamma_x > 0.0) {
        return Ok(None);
    }
    let c = 1.0 / gamma_x.sqrt();
    for &z in &coords {
        f.values_mut()[z] *= c;
    }
    let deficit = cde_deficit(g, g.id(x), &f, n, k)?;
    if deficit < -tol {
        let normalization = g.gamma_at(f.values(), f.values(), x);
        Ok(Some(CurvatureWitness {
            vertex: g.id(x).to_string(),
            f,
            deficit,
            normalization,
        }))
    } else {
        Ok(None)
    }
}

/// Searches for a violation of `CDE'(x, n, K)`.
///
/// A returned witness rechecks to `cde_deficit < -tol` from scratch;
/// `None` only means the search found nothing.
pub fn cde_search_counterexample(
    g: &WeightedGraph,
    x: &str,
    n: f64,
    k: f64,
    starts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Option<CurvatureWitness>> {
    if starts == 0 {
        return Err(CurvatureError::NoStarts);
    }
    let xi = g.index_of(x)?;
    match minimize_cde_ratio(g, xi, n, starts, max_iters, seed)? {
        Some(outcome) if outcome.best_ratio - k < -tol::VERDICT_TOL => {
            witness_from(g, xi, &outcome, n, k, tol::VERDICT_TOL)
        }
        _ => Ok(None),
    }
}

/// Best-found upper bound for the CDE' curvature at `x`: every evaluated
/// positive function with `Γ(f)(x) = 1` bounds the admissible `K` from
/// above, so the minimum over the search is a sound upper bound.
pub fn cde_curvature_upper(
    g: &WeightedGraph,
    x: &str,
    n: f64,
    starts: usize,
    seed: u64,
) -> Result<f64> {
    if starts == 0 {
        return Err(CurvatureError::NoStarts);
    }
    let xi = g.index_of(x)?;
    Ok(match minimize_cde_ratio(g, xi, n, starts, DEFAULT_MAX_ITERS, seed)? {
        Some(outcome) => outcome.best_ratio,
        None => f64::INFINITY,
    })
}

/// Iteration cap for one descent; convergence usually stops far earlier.
pub const DEFAULT_MAX_ITERS: usize = 500;

/// Runs the exact CD computation and the CDE' search at each requested
/// vertex. Vertices evaluate independently (in parallel when enabled)
/// and merge in the given order, so reports are byte-stable.
pub fn curvature_sweep(
    g: &WeightedGraph,
    n: f64,
    k: f64,
    vertices: Option<&[String]>,
    starts: usize,
    seed: u64,
) -> Result<CurvatureReport> {
    curvature_sweep_with(ExecMode::default(), g, n, k, vertices, starts, seed)
}

/// [`curvature_sweep`] with an explicit execution mode (used by benches;
/// results are identical across modes).
pub fn curvature_sweep_with(
    mode: ExecMode,
    g: &WeightedGraph,
    n: f64,
    k: f64,
    vertices: Option<&[String]>,
    starts: usize,
    seed: u64,
) -> Result<CurvatureReport> {
    check_dimension(n)?;
    if starts == 0 {
        return Err(CurvatureError::NoStarts);
    }
    let targets: Vec<usize> = match vertices {
        Some(ids) => ids
            .iter()
            .map(|id| g.index_of(id).map_err(CurvatureError::from))
            .collect::<Result<_>>()?,
        None => (0..g.len()).collect(),
    };
    let records: Vec<Result<VertexCurvature>> = exec::map_collect(mode, &targets, |&x| {
        let id = g.id(x).to_string();
        let cd_k_star = cd_curvature_at(g, &id, n)?;
        let outcome = minimize_cde_ratio(g, x, n, starts, DEFAULT_MAX_ITERS, seed)?;
        let (cde_best_k_upper, witness) = match outcome {
            Some(o) => {
                let wit = if o.best_ratio - k < -tol::VERDICT_TOL {
                    witness_from(g, x, &o, n, k, tol::VERDICT_TOL)?
                } else {
                    None
                };
                (o.best_ratio, wit)
            }
            None => (f64::INFINITY, None),
        };
        let verdict = if witness.is_some() {
            CurvatureVerdict::Violated
        } else if cd_holds_at(g, &id, n, k, tol::VERDICT_TOL)?.holds {
            CurvatureVerdict::HoldsInconclusive
        } else {
            CurvatureVerdict::Inconclusive
        };
        Ok(VertexCurvature { vertex: id, cd_k_star, cde_best_k_upper, cde_witness: witness, verdict })
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CurvatureReport {
        schema: 1,
        graph_hash: crate::families::content_hash(g),
        n,
        k,
        starts,
        max_iters: DEFAULT_MAX_ITERS,
        seed,
        tol: tol::VERDICT_TOL,
        records,
    })
}

/// Result of a certify-by-search pass: `certified` means the search found
/// no counterexample to `CDE'(n, K)` at any requested vertex. Not a
/// proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdeCertification {
    #[serde(with = "ext_f64")]
    pub n: f64,
    pub k: f64,
    pub starts: usize,
    pub seed: u64,
    pub vertices: Vec<String>,
    pub certified: bool,
    pub counterexample: Option<CurvatureWitness>,
}

pub fn certify_cde(
    g: &WeightedGraph,
    vertices: Option<&[String]>,
    n: f64,
    k: f64,
    starts: usize,
    seed: u64,
) -> Result<CdeCertification> {
    let ids: Vec<String> = match vertices {
        Some(v) => v.to_vec(),
        None => g.ids().to_vec(),
    };
    let indexed: Vec<String> = ids.clone();
    let found: Vec<Result<Option<CurvatureWitness>>> =
        exec::map_collect(ExecMode::default(), &indexed, |id| {
            cde_search_counterexample(g, id, n, k, starts, DEFAULT_MAX_ITERS, seed)
        });
    let mut counterexample = None;
    for w in found {
        if let Some(wit) = w? {
            counterexample = Some(wit);
            break;
        }
    }
    Ok(CdeCertification {
        n,
        k,
        starts,
        seed,
        vertices: ids,
        certified: counterexample.is_none(),
        counterexample,
    })
}

/// Picks a dimension `n` for `CDE'(n, K)` by search: starts from the
/// exact CD minimum over the requested vertices as a hint and grows it
/// until the counterexample search comes up empty.
pub fn certify_cde_auto(
    g: &WeightedGraph,
    vertices: Option<&[String]>,
    k: f64,
    starts: usize,
    seed: u64,
) -> Result<Option<CdeCertification>> {
    let ids: Vec<String> = match vertices {
        Some(v) => v.to_vec(),
        None => g.ids().to_vec(),
    };
    let mut hint: f64 = 0.0;
    for id in &ids {
        match cd_min_dimension(g, id, k)? {
            Some(n) => hint = hint.max(n),
            None => return Ok(None),
        }
    }
    if hint.is_infinite() {
        let cert = certify_cde(g, Some(&ids), f64::INFINITY, k, starts, seed)?;
        return Ok(if cert.certified { Some(cert) } else { None });
    }
    let hint = hint.max(1e-6);
    for factor in [1.0, 1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0] {
        let cert = certify_cde(g, Some(&ids), hint * factor, k, starts, seed)?;
        if cert.certified {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}
