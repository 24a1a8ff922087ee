//! Gradient-estimate checks and their corollaries.
//!
//! Everything here evaluates both sides of an asserted inequality on a
//! grid and reports margins `rhs − lhs` (or `lhs − rhs` where the claim
//! points the other way); a check *fails* only with a reproducible grid
//! witness attached, and *passes* only when its curvature prerequisite
//! was certified by search. Time derivatives inside verdicts are always
//! analytic (`∂_t√u = Δu/(2√u)` for heat-equation solutions); finite
//! differences appear only in the dedicated derivative-residual checks.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::sync::Arc;
use thiserror::Error;

use crate::curvature::{CdeCertification, CurvatureError};
use crate::exec::{self, ExecMode};
use crate::families;
use crate::graph::{GraphError, VertexFunction, WeightedGraph};
use crate::heat::{HeatError, Propagator};
use crate::serde_ext::ext_f64;
use crate::tol;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("need t < s for a forward comparison, got t = {t}, s = {s}")]
    InvalidTimePair { t: f64, s: f64 },
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("dimension parameter must be positive, got {0}")]
    InvalidDimension(f64),
    #[error("this check needs a finite dimension parameter")]
    InfiniteDimension,
    #[error("curvature bound must be positive, got {0}")]
    NonpositiveCurvature(f64),
    #[error("schedule invalid: {0}")]
    ScheduleInvalid(String),
    #[error("function must be nonnegative (vertex `{vertex}` has {value})")]
    NegativeFunction { vertex: String, value: f64 },
    #[error("regularization must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("s = {s} must lie inside (0, t) with room for differencing, t = {t}")]
    SOutsideRange { s: f64, t: f64 },
    #[error("coupling function is positive at s = {s} (value {value}); invalid choice")]
    GammaPositive { s: f64, value: f64 },
    #[error("dirichlet mode needs a nonempty interior")]
    EmptyInterior,
    #[error("invalid grid spec `{0}`: expected `<min>:<max>:log<N>` or `<min>:<max>:lin<N>`")]
    GridParse(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

pub type Result<T> = std::result::Result<T, LabError>;

fn check_dimension(n: f64) -> Result<f64> {
    if n.is_nan() || n <= 0.0 {
        return Err(LabError::InvalidDimension(n));
    }
    Ok(if n.is_infinite() { 0.0 } else { 1.0 / n })
}

fn require_nonnegative(g: &WeightedGraph, f: &VertexFunction) -> Result<()> {
    for (i, &v) in f.values().iter().enumerate() {
        if v < 0.0 {
            return Err(LabError::NegativeFunction { vertex: g.id(i).to_string(), value: v });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Schedules W on [0, t] and their integrals.
// ---------------------------------------------------------------------------

/// User-supplied schedule as callables for `W` and `W'`.
#[derive(Clone)]
pub struct GeneralW {
    pub w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub dw: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for GeneralW {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("GeneralW {..}")
    }
}

/// Weight schedule for the gradient-estimate family: `W(0) = 1`,
/// `W(t) = 0`, `W' ≤ -K W` on `[0, t]`.
#[derive(Debug, Clone)]
pub enum WSchedule {
    /// `W(s) = (1 - s/t)^b` with `b > 1/2`.
    Power { b: f64 },
    General(GeneralW),
}

impl WSchedule {
    /// The power schedule expressed through its callables, for driving
    /// the quadrature path against the closed forms.
    pub fn power_as_general(b: f64, t: f64) -> WSchedule {
        WSchedule::General(GeneralW {
            w: Arc::new(move |s| (1.0 - s / t).powf(b)),
            dw: Arc::new(move |s| -(b / t) * (1.0 - s / t).powf(b - 1.0)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WIntegrals {
    /// `∫₀ᵗ W(s)² ds`
    pub w_sq: f64,
    /// `∫₀ᵗ W'(s)² ds`
    pub dw_sq: f64,
}

/// Seven-point Gauss–Legendre rule on `[a, b]`.
fn gauss7(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 3] = [
        0.949107912342758524526189684047851,
        0.741531185599394439863864773280788,
        0.405845151377397166906606412076961,
    ];
    const W: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = W[3] * f(c);
    for i in 0..3 {
        acc += W[i] * (f(c - h * X[i]) + f(c + h * X[i]));
    }
    acc * h
}

/// Adaptive composite Gauss–Legendre with refinement-compare error
/// control; all nodes are interior, so integrable endpoint behavior is
/// approximated rather than sampled at the endpoint.
fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol_abs: f64, depth: usize) -> f64 {
    let whole = gauss7(f, a, b);
    let mid = 0.5 * (a + b);
    let refined = gauss7(f, a, mid) + gauss7(f, mid, b);
    let width_floor = (b - a).abs() < 1e-14 * (a.abs() + b.abs() + 1.0);
    if (refined - whole).abs() <= tol_abs || depth >= 60 || width_floor {
        refined
    } else {
        adaptive_gauss(f, a, mid, 0.5 * tol_abs, depth + 1)
            + adaptive_gauss(f, mid, b, 0.5 * tol_abs, depth + 1)
    }
}

/// Checks the schedule constraints: endpoints `W(0)=1`, `W(t)=0`,
/// positivity on `[0, t)`, and `W'(s) ≤ -K W(s)` on the sample grid.
pub fn w_validate(schedule: &WSchedule, t: f64, k: f64) -> bool {
    w_validate_detailed(schedule, t, k).is_ok()
}

pub fn w_validate_detailed(schedule: &WSchedule, t: f64, k: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(LabError::NonpositiveTime(t));
    }
    match schedule {
        WSchedule::Power { b } => {
            if !(*b > 0.5) {
                return Err(LabError::ScheduleInvalid(format!(
                    "power exponent must exceed 1/2, got {b}"
                )));
            }
            // W'/W = -b/(t-s) is most constrained at s = 0: need K <= b/t.
            if k > b / t + 1e-12 {
                return Err(LabError::ScheduleInvalid(format!(
                    "power schedule with b = {b} cannot satisfy W' <= -K W for K = {k} > b/t"
                )));
            }
            Ok(())
        }
        WSchedule::General(gen) => {
            let w0 = (gen.w)(0.0);
            if (w0 - 1.0).abs() > 1e-9 {
                return Err(LabError::ScheduleInvalid(format!("W(0) = {w0}, expected 1")));
            }
            let wt = (gen.w)(t);
            if wt.abs() > 1e-9 {
                return Err(LabError::ScheduleInvalid(format!("W(t) = {wt}, expected 0")));
            }
            let samples = 2001;
            for i in 0..samples {
                let s = t * (i as f64) / (samples as f64); // [0, t)
                let ws = (gen.w)(s);
                if !(ws > 0.0) {
                    return Err(LabError::ScheduleInvalid(format!(
                        "W({s}) = {ws} is not positive"
                    )));
                }
                let dws = (gen.dw)(s);
                if dws > -k * ws + 1e-9 * ws.abs().max(1.0) {
                    return Err(LabError::ScheduleInvalid(format!(
                        "W'({s}) = {dws} violates W' <= -K W (bound {})",
                        -k * ws
                    )));
                }
            }
            Ok(())
        }
    }
}

/// `∫W²` and `∫W'²` over `[0, t]`: closed form for the power family,
/// adaptive quadrature for general schedules. The derivative integral is
/// computed after the substitution `s = t(1-ρ²)`, which removes the
/// endpoint singularity of the power family down to `b = 3/4`.
pub fn w_integrals(schedule: &WSchedule, t: f64) -> Result<WIntegrals> {
    if !(t > 0.0) {
        return Err(LabError::NonpositiveTime(t));
    }
    match schedule {
        WSchedule::Power { b } => {
            if !(*b > 0.5) {
                return Err(LabError::ScheduleInvalid(format!(
                    "power exponent must exceed 1/2, got {b}"
                )));
            }
            Ok(WIntegrals {
                w_sq: t / (2.0 * b + 1.0),
                dw_sq: b * b / ((2.0 * b - 1.0) * t),
            })
        }
        WSchedule::General(gen) => {
            let w = gen.w.clone();
            let w_sq =
                adaptive_gauss(&|s| w(s) * w(s), 0.0, t, tol::QUADRATURE_ABS, 0);
            let dw = gen.dw.clone();
            let integrand = move |rho: f64| {
                let d = dw(t * (1.0 - rho * rho));
                2.0 * t * rho * d * d
            };
            let dw_sq = adaptive_gauss(&integrand, 0.0, 1.0, tol::QUADRATURE_ABS, 0);
            if !w_sq.is_finite() || !dw_sq.is_finite() {
                return Err(LabError::ScheduleInvalid(
                    "schedule integrals did not converge".into(),
                ));
            }
            Ok(WIntegrals { w_sq, dw_sq })
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient-estimate sides and margins.
// ---------------------------------------------------------------------------

/// Parameters for the estimate family.
#[derive(Debug, Clone)]
pub struct LiYauParams {
    pub n: f64,
    pub k: f64,
    pub schedule: WSchedule,
}

/// Pointwise left/right sides of the estimate at fixed `t`.
///
/// `trusted[x]` is false where `P_t f(x)` sits below the spectral
/// cancellation floor; the sides there are evaluated on rounding noise
/// (the margin itself is analytically large and positive for `K ≤ 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SideValues {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub trusted: Vec<bool>,
}

impl SideValues {
    pub fn margins(&self) -> Vec<f64> {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(&l, &r)| r - l)
            .collect()
    }
}

/// Both sides of
/// `Γ(√(P_t f))/P_t f ≤ ½(1 − 2K∫W²) ΔP_t f / P_t f
///  + (n/2)(∫W'² + K²∫W² − K)`
/// at every vertex. For the power schedule the integrals are
/// `t/(2b+1)` and `b²/((2b−1)t)`, reproducing the `b`-family form.
pub fn liyau_sides(
    g: &WeightedGraph,
    prop: &Propagator,
    f: &VertexFunction,
    t: f64,
    params: &LiYauParams,
) -> Result<SideValues> {
    check_dimension(params.n)?;
    if !(t > 0.0) {
        return Err(LabError::NonpositiveTime(t));
    }
    require_nonnegative(g, f)?;
    let ints = w_integrals(&params.schedule, t)?;
    let u = prop.apply(f, t)?;
    let du = prop.derivative(f, t)?;
    sides_from(g, &u, &du, params.n, params.k, &ints)
}

fn sides_from(
    g: &WeightedGraph,
    u: &VertexFunction,
    du: &VertexFunction,
    n: f64,
    k: f64,
    ints: &WIntegrals,
) -> Result<SideValues> {
    let peak = u.values().iter().cloned().fold(0.0_f64, f64::max);
    if !(peak > 0.0) {
        return Err(LabError::Graph(GraphError::NonpositiveFunction {
            vertex: g.id(0).to_string(),
            value: peak,
        }));
    }
    let floor = tol::POSITIVITY_TRUST_FLOOR * peak;
    // True semigroup values are strictly positive; anything at or below
    // zero here is cancellation noise around an underflowed positive.
    let root = u.map(|v| v.max(0.0).sqrt());
    let gamma_root = g.gamma(&root)?;
    let coeff = 0.5 * (1.0 - 2.0 * k * ints.w_sq);
    let additive = 0.5 * n * (ints.dw_sq + k * k * ints.w_sq - k);
    let mut lhs = Vec::with_capacity(g.len());
    let mut rhs = Vec::with_capacity(g.len());
    let mut trusted = Vec::with_capacity(g.len());
    for x in 0..g.len() {
        trusted.push(u[x] > floor);
        lhs.push(gamma_root[x] / u[x]);
        rhs.push(coeff * du[x] / u[x] + additive);
    }
    Ok(SideValues { lhs, rhs, trusted })
}

/// Residual of the classical form `Γ(√u)/u − ∂_t√u/√u ≤ n/(2t)` with
/// `∂_t√u = Δu/(2√u)` taken analytically:
/// returns `n/(2t) − Γ(√u)/u + Δu/(2u)` per vertex. Agrees with the
/// `K = 0, b = 1` margin of [`liyau_sides`] to rounding.
pub fn classical_liyau_residual(
    g: &WeightedGraph,
    prop: &Propagator,
    f: &VertexFunction,
    t: f64,
    n: f64,
) -> Result<Vec<f64>> {
    check_dimension(n)?;
    if !(t > 0.0) {
        return Err(LabError::NonpositiveTime(t));
    }
    require_nonnegative(g, f)?;
    let u = prop.apply(f, t)?;
    g.require_positive(&u)?;
    let du = prop.derivative(f, t)?;
    let root = u.map(f64::sqrt);
    let gamma_root = g.gamma(&root)?;
    Ok((0..g.len())
        .map(|x| n / (2.0 * t) - gamma_root[x] / u[x] + du[x] / (2.0 * u[x]))
        .collect())
}

// ---------------------------------------------------------------------------
// Harnack and kernel bounds.
// ---------------------------------------------------------------------------

/// `(s/t)^n · exp(4 m_max d(x,z)² / (ω_min (s − t)))` for `0 < t < s`.
pub fn harnack_bound(
    g: &WeightedGraph,
    x: &str,
    z: &str,
    t: f64,
    s: f64,
    n: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(LabError::NonpositiveTime(t));
    }
    if !(t < s) {
        return Err(LabError::InvalidTimePair { t, s });
    }
    check_dimension(n)?;
    let d = g.graph_distance(x, z)? as f64;
    let (omega_min, m_max) = g.extremal_constants();
    Ok((s / t).powf(n) * (4.0 * m_max * d * d / (omega_min * (s - t))).exp())
}

/// Margin `bound · P_s f(z) − P_t f(x)`; nonnegative whenever the
/// curvature prerequisite holds.
pub fn harnack_check(
    g: &WeightedGraph,
    prop: &Propagator,
    f: &VertexFunction,
    x: &str,
    z: &str,
    t: f64,
    s: f64,
    n: f64,
) -> Result<f64> {
    require_nonnegative(g, f)?;
    let bound = harnack_bound(g, x, z, t, s, n)?;
    let xi = g.index_of(x)?;
    let zi = g.index_of(z)?;
    let pt = prop.apply(f, t)?;
    let ps = prop.apply(f, s)?;
    Ok(bound * ps[zi] - pt[xi])
}

/// Margin `C/V(x,√t) − p(t,x,y)` with `C = 2^n exp(4 m_max/ω_min)`.
pub fn kernel_upper_check(
    g: &WeightedGraph,
    prop: &Propagator,
    t: f64,
    x: &str,
    y: &str,
    n: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(LabError::NonpositiveTime(t));
    }
    check_dimension(n)?;
    let xi = g.index_of(x)?;
    let yi = g.index_of(y)?;
    let (omega_min, m_max) = g.extremal_constants();
    let c = 2.0_f64.powf(n) * (4.0 * m_max / omega_min).exp();
    let vol = g.ball_volume(xi, t.sqrt());
    let p = prop.kernel(t, xi, yi)?;
    Ok(c / vol - p)
}

// ---------------------------------------------------------------------------
// Spectrum.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum SpectralMode<'a> {
    /// Bottom of the spectrum of `-Δ` on the whole graph (0 when finite
    /// and connected).
    Full,
    /// Bottom of the boundary-killed operator: functions vanish on the
    /// given vertices.
    Dirichlet { boundary: &'a [String] },
}

/// Symmetrized `-Δ` restricted to `interior`, with Dirichlet killing
/// from ambient edges that leave the set.
fn dirichlet_bottom(g: &WeightedGraph, interior: &[usize]) -> Result<f64> {
    if interior.is_empty() {
        return Err(LabError::EmptyInterior);
    }
    let mut local = vec![usize::MAX; g.len()];
    for (i, &x) in interior.iter().enumerate() {
        local[x] = i;
    }
    let d = interior.len();
    let mut a = nalgebra::DMatrix::zeros(d, d);
    for (i, &x) in interior.iter().enumerate() {
        let mut nonloop = 0.0;
        for &(y, w) in g.neighbors(x) {
            if y == x {
                continue;
            }
            nonloop += w;
            if local[y] != usize::MAX {
                a[(i, local[y])] += w / (g.measure(x) * g.measure(y)).sqrt();
            }
        }
        a[(i, i)] = -nonloop / g.measure(x);
    }
    let (values, _) = crate::linalg::symmetric_eigen(a);
    Ok(-values[0])
}

/// Greatest lower bound of the `ℓ²_m` spectrum of `-Δ`.
pub fn spectral_bottom(g: &WeightedGraph, mode: SpectralMode<'_>) -> Result<f64> {
    match mode {
        SpectralMode::Full => {
            let all: Vec<usize> = (0..g.len()).collect();
            dirichlet_bottom(g, &all)
        }
        SpectralMode::Dirichlet { boundary } => {
            let mut excluded = vec![false; g.len()];
            for id in boundary {
                excluded[g.index_of(id)?] = true;
            }
            let interior: Vec<usize> =
                (0..g.len()).filter(|&x| !excluded[x]).collect();
            dirichlet_bottom(g, &interior)
        }
    }
}

// ---------------------------------------------------------------------------
// Φ machinery.
// ---------------------------------------------------------------------------

/// `φ(s, ·) = P_s( Γ(√(P_{t−s} f + ε)) )` for `0 < s < t`, `ε > 0`.
pub fn phi_evaluate(
    g: &WeightedGraph,
    prop: &Propagator,
    f: &VertexFunction,
    t: f64,
    s: f64,
    eps: f64,
) -> Result<VertexFunction> {
    if !(eps > 0.0) {
        return Err(LabError::NonpositiveEpsilon(eps));
    }
    if !(s > 0.0 && s < t) {
        return Err(LabError::SOutsideRange { s, t });
    }
    require_nonnegative(g, f)?;
    let u = prop.apply(f, t - s)?.map(|v| v + eps);
    let gamma_root = g.gamma(&u.map(f64::sqrt))?;
    Ok(prop.apply(&gamma_root, s)?)
}

/// Analytic `∂_s φ(s, ·) = −2 P_s[Γ(√u, Δu/(2√u))] + ΔP_s[Γ(√u)]`
/// with `u = P_{t−s} f + ε`.
pub fn phi_derivative(
    g: &WeightedGraph,
    prop: &Propagator,
    f: &VertexFunction,
    t: f64,
    s: f64,
    eps: f64,
) -> Result<VertexFunction> {
    if !(eps > 0.0) {
        return Err(LabError::NonpositiveEpsilon(eps));
    }
    if !(s > 0.0 && s < t) {
        return Err(LabError::SOutsideRange { s, t });
    }
    require_nonnegative(g, f)?;
    let u = prop.apply(f, t - s)?.map(|v| v + eps);
    let du = prop.derivative(f, t - s)?;
    let root = u.map(f64::sqrt);
    let half_quotient = VertexFunction::from_fn(g.len(), |x| du[x] / (2.0 * root[x]));
    let cross = g.gamma_bilinear(&root, &half_quotient)?;
    let term1 = prop.apply(&cross, s)?.scale(-2.0);
    let gamma_root = g.gamma(&root)?;
    let term2 = prop.derivative(&gamma_root, s)?;
    Ok(term1.zip_map(&term2, |a, b| a + b))
}

/// Max-abs gap between the central difference of `φ` in `s` (step `h`)
/// and the analytic derivative; decays as `O(h²)`.
pub fn phi_derivative_residual(
    g: &WeightedGraph,
    prop: &Propagator,
    f: &VertexFunction,
    t: f64,
    s: f64,
    eps: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) || s - h <= 0.0 || s + h >= t {
        return Err(LabError::SOutsideRange { s, t });
    }
    let plus = phi_evaluate(g, prop, f, t, s + h, eps)?;
    let minus = phi_evaluate(g, prop, f, t, s - h, eps)?;
    let central = plus.zip_map(&minus, |p, m| (p - m) / (2.0 * h));
    let analytic = phi_derivative(g, prop, f, t, s, eps)?;
    Ok(central.max_abs_diff(&analytic))
}

// ---------------------------------------------------------------------------
// Grids and report plumbing.
// ---------------------------------------------------------------------------

/// Parses `"<min>:<max>:log<N>"` / `"<min>:<max>:lin<N>"` into an
/// inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || LabError::GridParse(spec.to_string());
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let min: f64 = parts[0].parse().map_err(|_| bad())?;
    let max: f64 = parts[1].parse().map_err(|_| bad())?;
    let (kind, count_str) = if let Some(rest) = parts[2].strip_prefix("log") {
        ("log", rest)
    } else if let Some(rest) = parts[2].strip_prefix("lin") {
        ("lin", rest)
    } else {
        return Err(bad());
    };
    let count: usize = count_str.parse().map_err(|_| bad())?;
    if count == 0 || !min.is_finite() || !max.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        if min != max {
            return Err(bad());
        }
        return Ok(vec![min]);
    }
    if !(min < max) {
        return Err(bad());
    }
    if kind == "log" && !(min > 0.0) {
        return Err(bad());
    }
    let mut grid = Vec::with_capacity(count);
    for i in 0..count {
        let frac = i as f64 / (count - 1) as f64;
        let v = if kind == "log" {
            (min.ln() + frac * (max.ln() - min.ln())).exp()
        } else {
            min + frac * (max - min)
        };
        grid.push(v);
    }
    grid[0] = min;
    grid[count - 1] = max;
    Ok(grid)
}

/// Default time grid: 25 log-spaced points in `[0.01, 10]`.
pub fn default_t_grid() -> Vec<f64> {
    parse_grid("0.01:10:log25").expect("default grid")
}

pub fn default_b_list() -> Vec<f64> {
    vec![0.75, 1.0, 2.0, 5.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One evaluated grid point; `margin < 0` is a violation of the claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub vertex: String,
    /// Label of the test function, e.g. `delta:leaf3`.
    pub function: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(with = "ext_f64")]
    pub lhs: f64,
    #[serde(with = "ext_f64")]
    pub rhs: f64,
    #[serde(with = "ext_f64")]
    pub margin: f64,
}

impl GridPoint {
    fn failing(&self, tol: f64) -> bool {
        self.margin < -tol * self.rhs.abs().max(1.0)
    }
}

/// Margin grid for one check, with provenance and a reproducible witness
/// when the verdict is `fail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub schema: u32,
    pub check: String,
    pub graph_hash: String,
    #[serde(with = "ext_f64")]
    pub n: f64,
    pub k: f64,
    pub seed: u64,
    pub tol: f64,
    /// Check-specific parameters (grids, epsilon, pairs, ...).
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certification: Option<CdeCertification>,
    #[serde(with = "ext_f64")]
    pub min_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GridPoint>,
    pub verdict: Verdict,
    pub grid: Vec<GridPoint>,
}

impl ViolationReport {
    fn assemble(
        check: &str,
        g: &WeightedGraph,
        n: f64,
        k: f64,
        seed: u64,
        params: Value,
        needs_certification: bool,
        certification: Option<CdeCertification>,
        grid: Vec<GridPoint>,
    ) -> ViolationReport {
        let tol = tol::VERDICT_TOL;
        let mut min_margin = f64::INFINITY;
        let mut witness: Option<GridPoint> = None;
        let mut worst_scaled = f64::INFINITY;
        for p in &grid {
            min_margin = min_margin.min(p.margin);
            let scaled = p.margin / p.rhs.abs().max(1.0);
            if p.failing(tol) && scaled < worst_scaled {
                worst_scaled = scaled;
                witness = Some(p.clone());
            }
        }
        let certified = certification.as_ref().map_or(!needs_certification, |c| c.certified);
        let verdict = if witness.is_some() {
            Verdict::Fail
        } else if certified {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        ViolationReport {
            schema: 1,
            check: check.to_string(),
            graph_hash: families::content_hash(g),
            n,
            k,
            seed,
            tol,
            params,
            certification,
            min_margin,
            witness,
            verdict,
            grid,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn csv_header() -> &'static str {
        "check,graph,n,K,b,t_min_margin,verdict\n"
    }

    /// Summary row: `check, graph, n, K, b, t_min_margin, verdict`.
    pub fn to_csv_row(&self) -> String {
        let at_min = self
            .grid
            .iter()
            .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap());
        let b = at_min.and_then(|p| p.b).map(|v| v.to_string()).unwrap_or_default();
        let t = at_min.and_then(|p| p.t).map(|v| v.to_string()).unwrap_or_default();
        let verdict = match self.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            self.check.as_str(),
            self.graph_hash.as_str(),
            &ext_f64::display(self.n),
            &ext_f64::display(self.k),
            &b,
            &t,
            verdict,
        ])
        .expect("csv row");
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
    }

    pub fn to_csv(&self) -> String {
        format!("{}{}", Self::csv_header(), self.to_csv_row())
    }
}

fn delta_label(g: &WeightedGraph, y: usize) -> String {
    format!("delta:{}", g.id(y))
}

/// Parses a `delta:<id>` label back into the function it names.
pub fn function_from_label(g: &WeightedGraph, label: &str) -> Result<VertexFunction> {
    if let Some(id) = label.strip_prefix("delta:") {
        Ok(VertexFunction::delta(g.len(), g.index_of(id)?))
    } else if label == "const:1" {
        Ok(VertexFunction::constant(g.len(), 1.0))
    } else {
        Err(LabError::GridParse(format!("unknown function label `{label}`")))
    }
}

/// Vertices whose margins a grid check evaluates; `None` means all.
#[derive(Debug, Clone, Default)]
pub struct GridScope {
    /// Margin vertices.
    pub check_vertices: Option<Vec<String>>,
    /// Sources `y` for the test functions `δ_y`; defaults to all.
    pub source_vertices: Option<Vec<String>>,
}

fn resolve(g: &WeightedGraph, ids: &Option<Vec<String>>) -> Result<Vec<usize>> {
    match ids {
        Some(list) => list
            .iter()
            .map(|id| g.index_of(id).map_err(LabError::from))
            .collect(),
        None => Ok((0..g.len()).collect()),
    }
}

/// Margin grid of the estimate family over `t_grid × b_list × δ_y`.
pub fn liyau_report(
    g: &WeightedGraph,
    prop: &Propagator,
    n: f64,
    k: f64,
    t_grid: &[f64],
    b_list: &[f64],
    scope: &GridScope,
    certification: Option<CdeCertification>,
    seed: u64,
) -> Result<ViolationReport> {
    liyau_report_with(ExecMode::default(), g, prop, n, k, t_grid, b_list, scope, certification, seed)
}

/// [`liyau_report`] with an explicit execution mode; identical output.
#[allow(clippy::too_many_arguments)]
pub fn liyau_report_with(
    mode: ExecMode,
    g: &WeightedGraph,
    prop: &Propagator,
    n: f64,
    k: f64,
    t_grid: &[f64],
    b_list: &[f64],
    scope: &GridScope,
    certification: Option<CdeCertification>,
    seed: u64,
) -> Result<ViolationReport> {
    check_dimension(n)?;
    for &b in b_list {
        if !(b > 0.5) {
            return Err(LabError::ScheduleInvalid(format!(
                "power exponent must exceed 1/2, got {b}"
            )));
        }
    }
    let check_vs = resolve(g, &scope.check_vertices)?;
    let sources = resolve(g, &scope.source_vertices)?;
    let mut tasks = Vec::new();
    for &y in &sources {
        for &t in t_grid {
            tasks.push((y, t));
        }
    }
    let chunks: Vec<Result<Vec<GridPoint>>> = exec::map_collect(mode, &tasks, |&(y, t)| {
        if !(t > 0.0) {
            return Err(LabError::NonpositiveTime(t));
        }
        let f = VertexFunction::delta(g.len(), y);
        let u = prop.apply(&f, t)?;
        let du = prop.derivative(&f, t)?;
        let label = delta_label(g, y);
        let mut points = Vec::with_capacity(b_list.len() * check_vs.len());
        for &b in b_list {
            let ints = w_integrals(&WSchedule::Power { b }, t)?;
            let sides = sides_from(g, &u, &du, n, k, &ints)?;
            for &x in &check_vs {
                if !sides.trusted[x] {
                    continue;
                }
                points.push(GridPoint {
                    vertex: g.id(x).to_string(),
                    function: label.clone(),
                    vertex2: None,
                    t: Some(t),
                    s: None,
                    b: Some(b),
                    radius: None,
                    lhs: sides.lhs[x],
                    rhs: sides.rhs[x],
                    margin: sides.rhs[x] - sides.lhs[x],
                });
            }
        }
        Ok(points)
    });
    let mut grid = Vec::new();
    for chunk in chunks {
        grid.extend(chunk?);
    }
    let expected = tasks.len() * b_list.len() * check_vs.len();
    let skipped = expected - grid.len();
    let params = json!({
        "t_grid": t_grid,
        "b_list": b_list,
        "check_vertices": scope.check_vertices,
        "source_vertices": scope.source_vertices,
        "skipped_untrusted_points": skipped,
    });
    Ok(ViolationReport::assemble(
        "liyau", g, n, k, seed, params, true, certification, grid,
    ))
}

/// Recomputes the margin of a stored grid point of a `liyau` report.
pub fn recheck_liyau_point(
    g: &WeightedGraph,
    prop: &Propagator,
    n: f64,
    k: f64,
    point: &GridPoint,
) -> Result<f64> {
    let t = point.t.ok_or_else(|| LabError::GridParse("missing t".into()))?;
    let b = point.b.ok_or_else(|| LabError::GridParse("missing b".into()))?;
    let f = function_from_label(g, &point.function)?;
    let params = LiYauParams { n, k, schedule: WSchedule::Power { b } };
    let sides = liyau_sides(g, prop, &f, t, &params)?;
    let x = g.index_of(&point.vertex)?;
    if !sides.trusted[x] {
        return Err(LabError::GridParse(format!(
            "stored witness at `{}` sits below the trust floor",
            point.vertex
        )));
    }
    Ok(sides.rhs[x] - sides.lhs[x])
}

/// Harnack margins over `(t, s)` pairs and all ordered vertex pairs.
pub fn harnack_report(
    g: &WeightedGraph,
    prop: &Propagator,
    n: f64,
    pairs: &[(f64, f64)],
    scope: &GridScope,
    certification: Option<CdeCertification>,
    seed: u64,
) -> Result<ViolationReport> {
    check_dimension(n)?;
    let check_vs = resolve(g, &scope.check_vertices)?;
    let sources = resolve(g, &scope.source_vertices)?;
    let mut tasks = Vec::new();
    for &y in &sources {
        for &(t, s) in pairs {
            tasks.push((y, t, s));
        }
    }
    let chunks: Vec<Result<Vec<GridPoint>>> = exec::map_collect(
        ExecMode::default(),
        &tasks,
        |&(y, t, s)| {
            if !(t > 0.0) {
                return Err(LabError::NonpositiveTime(t));
            }
            if !(t < s) {
                return Err(LabError::InvalidTimePair { t, s });
            }
            let f = VertexFunction::delta(g.len(), y);
            let pt = prop.apply(&f, t)?;
            let ps = prop.apply(&f, s)?;
            let (omega_min, m_max) = g.extremal_constants();
            let label = delta_label(g, y);
            let mut points = Vec::new();
            for &x in &check_vs {
                let dist = g.distances_from(x);
                for &z in &check_vs {
                    let d = dist[z] as f64;
                    let bound =
                        (s / t).powf(n) * (4.0 * m_max * d * d / (omega_min * (s - t))).exp();
                    let lhs = pt[x];
                    let rhs = bound * ps[z];
                    points.push(GridPoint {
                        vertex: g.id(x).to_string(),
                        function: label.clone(),
                        vertex2: Some(g.id(z).to_string()),
                        t: Some(t),
                        s: Some(s),
                        b: None,
                        radius: None,
                        lhs,
                        rhs,
                        margin: rhs - lhs,
                    });
                }
            }
            Ok(points)
        },
    );
    let mut grid = Vec::new();
    for chunk in chunks {
        grid.extend(chunk?);
    }
    let params = json!({ "pairs": pairs });
    Ok(ViolationReport::assemble(
        "harnack", g, n, 0.0, seed, params, true, certification, grid,
    ))
}

/// Kernel upper-bound margins `C/V(x,√t) − p(t,x,y)` over the grid.
pub fn kernel_report(
    g: &WeightedGraph,
    prop: &Propagator,
    n: f64,
    t_grid: &[f64],
    scope: &GridScope,
    certification: Option<CdeCertification>,
    seed: u64,
) -> Result<ViolationReport> {
    check_dimension(n)?;
    let check_vs = resolve(g, &scope.check_vertices)?;
    let sources = resolve(g, &scope.source_vertices)?;
    let (omega_min, m_max) = g.extremal_constants();
    let c = 2.0_f64.powf(n) * (4.0 * m_max / omega_min).exp();
    let tasks: Vec<f64> = t_grid.to_vec();
    let chunks: Vec<Result<Vec<GridPoint>>> =
        exec::map_collect(ExecMode::default(), &tasks, |&t| {
            if !(t > 0.0) {
                return Err(LabError::NonpositiveTime(t));
            }
            let mut points = Vec::new();
            for &x in &check_vs {
                let vol = g.ball_volume(x, t.sqrt());
                for &y in &sources {
                    let p = prop.kernel(t, x, y)?;
                    let lhs = p;
                    let rhs = c / vol;
                    points.push(GridPoint {
                        vertex: g.id(x).to_string(),
                        function: delta_label(g, y),
                        vertex2: Some(g.id(y).to_string()),
                        t: Some(t),
                        s: None,
                        b: None,
                        radius: None,
                        lhs,
                        rhs,
                        margin: rhs - lhs,
                    });
                }
            }
            Ok(points)
        });
    let mut grid = Vec::new();
    for chunk in chunks {
        grid.extend(chunk?);
    }
    let params = json!({ "t_grid": t_grid, "constant": c });
    Ok(ViolationReport::assemble(
        "kernel", g, n, 0.0, seed, params, true, certification, grid,
    ))
}

/// Eigenvalue bound `λ* ≤ Kn/2` (with `λ*` the bottom of the `-Δ`
/// spectrum, zero on finite connected graphs) plus the Dirichlet
/// eigenvalue sequence over growing balls as the desk-scale proxy.
pub fn cheng_check(
    g: &WeightedGraph,
    n: f64,
    k: f64,
    center: &str,
    max_radius: usize,
    certification: Option<CdeCertification>,
    seed: u64,
) -> Result<ViolationReport> {
    check_dimension(n)?;
    if !(k > 0.0) {
        return Err(LabError::NonpositiveCurvature(k));
    }
    let lambda_star = spectral_bottom(g, SpectralMode::Full)?;
    let bound = if n.is_infinite() { f64::INFINITY } else { 0.5 * k * n };
    let mut grid = vec![GridPoint {
        vertex: center.to_string(),
        function: "spectral-bottom".into(),
        vertex2: None,
        t: None,
        s: None,
        b: None,
        radius: None,
        lhs: lambda_star,
        rhs: bound,
        margin: bound - lambda_star,
    }];
    let ci = g.index_of(center)?;
    let mut previous = f64::INFINITY;
    for r in 1..=max_radius {
        let ball = g.ball(ci, r as f64);
        let lambda = dirichlet_bottom(g, &ball)?;
        let rhs = if previous.is_finite() { previous } else { lambda };
        grid.push(GridPoint {
            vertex: center.to_string(),
            function: "dirichlet-ball".into(),
            vertex2: None,
            t: None,
            s: None,
            b: None,
            radius: Some(r),
            lhs: lambda,
            rhs,
            margin: rhs - lambda,
        });
        previous = lambda;
        if ball.len() == g.len() {
            break;
        }
    }
    let params = json!({ "center": center, "max_radius": max_radius });
    Ok(ViolationReport::assemble(
        "cheng", g, n, k, seed, params, true, certification, grid,
    ))
}

/// Differential inequality behind the estimate family, checked on an
/// `s`-grid with `α = W²` for the power schedule and the coupling
/// `γ = n(α' + 2αK)/(4α)` (which zeroes the `φ` coefficient):
/// `d/ds(αφ) ≥ (α' + 2αK − 4αγ/n)φ + (2αγ/n)ΔP_t f − (2αγ²/n)(P_t f + ε)`.
#[allow(clippy::too_many_arguments)]
pub fn differential_inequality_check(
    g: &WeightedGraph,
    prop: &Propagator,
    f: &VertexFunction,
    t: f64,
    n: f64,
    k: f64,
    b: f64,
    eps: f64,
    s_grid: &[f64],
    certification: Option<CdeCertification>,
    seed: u64,
) -> Result<ViolationReport> {
    if n.is_infinite() {
        return Err(LabError::InfiniteDimension);
    }
    check_dimension(n)?;
    if !(t > 0.0) {
        return Err(LabError::NonpositiveTime(t));
    }
    if !(eps > 0.0) {
        return Err(LabError::NonpositiveEpsilon(eps));
    }
    if !(b > 0.5) {
        return Err(LabError::ScheduleInvalid(format!(
            "power exponent must exceed 1/2, got {b}"
        )));
    }
    require_nonnegative(g, f)?;

    let alpha = |s: f64| (1.0 - s / t).powf(2.0 * b);
    let alpha_prime = |s: f64| -(2.0 * b / t) * (1.0 - s / t).powf(2.0 * b - 1.0);
    let gamma = |s: f64| n * (alpha_prime(s) + 2.0 * alpha(s) * k) / (4.0 * alpha(s));
    for &s in s_grid {
        if !(s > 0.0 && s < t) {
            return Err(LabError::SOutsideRange { s, t });
        }
        let gs = gamma(s);
        if gs > 0.0 {
            return Err(LabError::GammaPositive { s, value: gs });
        }
    }

    let ptf = prop.apply(f, t)?;
    let dptf = prop.derivative(f, t)?;

    let tasks: Vec<f64> = s_grid.to_vec();
    let chunks: Vec<Result<Vec<GridPoint>>> =
        exec::map_collect(ExecMode::default(), &tasks, |&s| {
            let h = (1e-4 * t.max(1.0)).min(0.45 * s.min(t - s));
            let phi_p = phi_evaluate(g, prop, f, t, s + h, eps)?;
            let phi_m = phi_evaluate(g, prop, f, t, s - h, eps)?;
            let phi_0 = phi_evaluate(g, prop, f, t, s, eps)?;
            let a0 = alpha(s);
            let ap = alpha(s + h);
            let am = alpha(s - h);
            let da = alpha_prime(s);
            let gs = gamma(s);
            let coeff_phi = da + 2.0 * a0 * k - 4.0 * a0 * gs / n;
            let coeff_lap = 2.0 * a0 * gs / n;
            let coeff_mass = 2.0 * a0 * gs * gs / n;
            let mut points = Vec::with_capacity(g.len());
            for x in 0..g.len() {
                let lhs = (ap * phi_p[x] - am * phi_m[x]) / (2.0 * h);
                let rhs =
                    coeff_phi * phi_0[x] + coeff_lap * dptf[x] - coeff_mass * (ptf[x] + eps);
                points.push(GridPoint {
                    vertex: g.id(x).to_string(),
                    function: "input".into(),
                    vertex2: None,
                    t: Some(t),
                    s: Some(s),
                    b: Some(b),
                    radius: None,
                    lhs,
                    rhs,
                    margin: lhs - rhs,
                });
            }
            Ok(points)
        });
    let mut grid = Vec::new();
    for chunk in chunks {
        grid.extend(chunk?);
    }
    let params = json!({ "t": t, "b": b, "eps": eps, "s_grid": s_grid });
    Ok(ViolationReport::assemble(
        "differential", g, n, k, seed, params, true, certification, grid,
    ))
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

    #[test]
    fn power_integrals_closed_form() {
        let i = w_integrals(&WSchedule::Power { b: 1.0 }, 1.0).unwrap();
        assert_relative_eq!(i.w_sq, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(i.dw_sq, 1.0, epsilon = 1e-15);
        let i = w_integrals(&WSchedule::Power { b: 2.0 }, 1.0).unwrap();
        assert_relative_eq!(i.w_sq, 0.2, epsilon = 1e-15);
        assert_relative_eq!(i.dw_sq, 4.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_reproduces_closed_forms() {
        for &b in &[0.75, 1.0, 2.0, 5.0] {
            for &t in &[0.5, 1.0, 10.0] {
                let exact = w_integrals(&WSchedule::Power { b }, t).unwrap();
                let quad = w_integrals(&WSchedule::power_as_general(b, t), t).unwrap();
                assert!(
                    (quad.w_sq - exact.w_sq).abs() <= 1e-8,
                    "w_sq b={b} t={t}: {} vs {}",
                    quad.w_sq,
                    exact.w_sq
                );
                assert!(
                    (quad.dw_sq - exact.dw_sq).abs() <= 1e-8,
                    "dw_sq b={b} t={t}: {} vs {}",
                    quad.dw_sq,
                    exact.dw_sq
                );
            }
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(w_validate(&WSchedule::Power { b: 1.0 }, 1.0, 0.0));
        assert!(w_validate(&WSchedule::Power { b: 1.0 }, 1.0, -3.0));
        assert!(!w_validate(&WSchedule::Power { b: 0.4 }, 1.0, 0.0));
        assert!(!w_validate(&WSchedule::Power { b: 1.0 }, 1.0, 2.0)); // K > b/t
        assert!(w_validate(&WSchedule::power_as_general(1.0, 1.0), 1.0, 0.0));
        // failing endpoint: W(t) != 0
        let bad = WSchedule::General(GeneralW {
            w: Arc::new(|_| 1.0),
            dw: Arc::new(|_| 0.0),
        });
        assert!(!w_validate(&bad, 1.0, 0.0));
    }

    #[test]
    fn classical_form_matches_family_at_k0_b1() {
        let g = k2();
        let prop = Propagator::build(&g).unwrap();
        let f = VertexFunction::delta(2, 1);
        for &t in &[0.1, 1.0, 10.0] {
            let params = LiYauParams { n: 3.0, k: 0.0, schedule: WSchedule::Power { b: 1.0 } };
            let sides = liyau_sides(&g, &prop, &f, t, &params).unwrap();
            let residual = classical_liyau_residual(&g, &prop, &f, t, 3.0).unwrap();
            for x in 0..2 {
                let margin = sides.rhs[x] - sides.lhs[x];
                assert!((margin - residual[x]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn constant_function_margins() {
        // f constant: lhs = 0, ΔP_t f = 0, margin = additive term >= 0 for K <= 0.
        let g = k2();
        let prop = Propagator::build(&g).unwrap();
        let f = VertexFunction::constant(2, 2.0);
        let params = LiYauParams { n: 2.0, k: -0.5, schedule: WSchedule::Power { b: 1.0 } };
        let sides = liyau_sides(&g, &prop, &f, 1.0, &params).unwrap();
        for x in 0..2 {
            assert_relative_eq!(sides.lhs[x], 0.0, epsilon = 1e-14);
            assert!(sides.rhs[x] >= 0.0);
        }
        let res = classical_liyau_residual(&g, &prop, &f, 2.0, 3.0).unwrap();
        for x in 0..2 {
            assert_relative_eq!(res[x], 3.0 / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn harnack_bound_values() {
        let g = k2();
        assert_relative_eq!(
            harnack_bound(&g, "x", "x", 1.0, 2.0, 3.0).unwrap(),
            8.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            harnack_bound(&g, "x", "y", 1.0, 2.0, 3.0).unwrap(),
            8.0 * (4.0_f64).exp(),
            epsilon = 1e-9
        );
        assert!(matches!(
            harnack_bound(&g, "x", "y", 2.0, 1.0, 3.0),
            Err(LabError::InvalidTimePair { .. })
        ));
    }

    #[test]
    fn harnack_bound_limits() {
        let g = k2();
        // bound(x, x, t, s) -> 1 as s -> t+ and non-increasing in t.
        let b1 = harnack_bound(&g, "x", "x", 1.0, 1.0 + 1e-9, 3.0).unwrap();
        assert_relative_eq!(b1, 1.0, epsilon = 1e-6);
        let mut prev = f64::INFINITY;
        for &t in &[0.25, 0.5, 1.0, 1.5] {
            let b = harnack_bound(&g, "x", "x", t, 2.0, 3.0).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn kernel_upper_margin_on_k2() {
        let g = k2();
        let prop = Propagator::build(&g).unwrap();
        // C = 4e^4, V(x,1) = 2 -> bound 2e^4 >> p <= 1.
        let m = kernel_upper_check(&g, &prop, 1.0, "x", "y", 2.0).unwrap();
        let c = 4.0 * (4.0_f64).exp();
        let p = prop.kernel(1.0, 0, 1).unwrap();
        assert_relative_eq!(m, c / 2.0 - p, epsilon = 1e-10);
        // radius below 1 captures only the center
        assert_eq!(g.ball_volume(0, 0.5), 1.0);
    }

    #[test]
    fn spectral_bottom_modes() {
        let g = WeightedGraph::new(
            vec![("a".into(), 1.0), ("b".into(), 1.0), ("c".into(), 1.0)],
            vec![
                ("a".into(), "b".into(), 1.0),
                ("b".into(), "c".into(), 1.0),
            ],
        )
        .unwrap();
        let full = spectral_bottom(&g, SpectralMode::Full).unwrap();
        assert!(full.abs() < 1e-12);
        let boundary = vec!["a".to_string(), "c".to_string()];
        let d = spectral_bottom(&g, SpectralMode::Dirichlet { boundary: &boundary }).unwrap();
        assert_relative_eq!(d, 2.0, epsilon = 1e-12);
        let all: Vec<String> = g.ids().to_vec();
        assert!(matches!(
            spectral_bottom(&g, SpectralMode::Dirichlet { boundary: &all }),
            Err(LabError::EmptyInterior)
        ));
    }

    #[test]
    fn phi_constant_input_vanishes() {
        let g = k2();
        let prop = Propagator::build(&g).unwrap();
        let f = VertexFunction::constant(2, 1.0);
        let phi = phi_evaluate(&g, &prop, &f, 1.0, 0.5, 0.1).unwrap();
        assert!(phi.max_abs() < 1e-14);
    }

    #[test]
    fn phi_residual_second_order_on_k2() {
        let g = k2();
        let prop = Propagator::build(&g).unwrap();
        let f = VertexFunction::delta(2, 1);
        let r = phi_derivative_residual(&g, &prop, &f, 1.0, 0.5, 0.1, 1e-4).unwrap();
        assert!(r <= 1e-6, "residual {r}");
        let r1 = phi_derivative_residual(&g, &prop, &f, 1.0, 0.5, 0.1, 2e-3).unwrap();
        let r2 = phi_derivative_residual(&g, &prop, &f, 1.0, 0.5, 0.1, 1e-3).unwrap();
        let ratio = r2 / r1;
        assert!((0.2..0.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn grid_parser() {
        let g = parse_grid("0.01:10:log25").unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[24], 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let l = parse_grid("1:5:lin5").unwrap();
        assert_eq!(l, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(parse_grid("1:5:geo5").is_err());
        assert!(parse_grid("0:5:log3").is_err());
        assert!(parse_grid("5:1:lin3").is_err());
        assert!(parse_grid("2:2:lin1").is_ok());
    }

    #[test]
    fn liyau_report_structure_and_determinism() {
        let g = k2();
        let prop = Propagator::build(&g).unwrap();
        let scope = GridScope::default();
        let r1 = liyau_report(&g, &prop, 3.0, 0.0, &[0.1, 1.0], &[1.0], &scope, None, 42).unwrap();
        let r2 = liyau_report(&g, &prop, 3.0, 0.0, &[0.1, 1.0], &[1.0], &scope, None, 42).unwrap();
        assert_eq!(r1.to_json(), r2.to_json());
        // 2 sources x 2 times x 1 b x 2 vertices
        assert_eq!(r1.grid.len(), 8);
        // margins fine at n = 3 but no certification supplied -> inconclusive
        assert!(r1.min_margin > 0.0);
        assert_eq!(r1.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn liyau_report_fail_attaches_recheckable_witness() {
        let g = k2();
        let prop = Propagator::build(&g).unwrap();
        let scope = GridScope::default();
        let r = liyau_report(
            &g,
            &prop,
            0.1,
            0.0,
            &default_t_grid(),
            &[1.0],
            &scope,
            None,
            42,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.as_ref().expect("witness");
        let again = recheck_liyau_point(&g, &prop, 0.1, 0.0, w).unwrap();
        assert_relative_eq!(again, w.margin, epsilon = 1e-14);
        assert!(again < -r.tol);
    }

    #[test]
    fn cheng_trivial_pass_on_k2() {
        let g = k2();
        let r = cheng_check(&g, 2.0, 1.0, "x", 3, None, 0).unwrap();
        // bound 1, lambda* = 0 -> margin 1 at the head point
        assert_relative_eq!(r.grid[0].margin, 1.0, epsilon = 1e-10);
        assert!(r.grid.iter().all(|p| p.margin >= -1e-12));
        assert!(matches!(
            cheng_check(&g, 2.0, -1.0, "x", 3, None, 0),
            Err(LabError::NonpositiveCurvature(_))
        ));
    }
}
