//! Identity battery: the exact relations every graph must satisfy.
//!
//! Each check returns a residual that vanishes in exact arithmetic (or an
//! inequality slack that must stay nonnegative). The battery drives both
//! the integration tests and the `identities` CLI verb.

use serde::{Deserialize, Serialize};

use crate::families;
use crate::graph::{VertexFunction, WeightedGraph};
use crate::heat::Propagator;
use crate::lab::LabError;
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    /// Worst residual observed (absolute, after scaling by the check's
    /// own normalization).
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Where the worst residual occurred (seed / vertex / parameter).
    pub location: String,
}

fn check(name: &str, residual: f64, tolerance: f64, location: String) -> IdentityCheck {
    IdentityCheck {
        name: name.to_string(),
        residual,
        tolerance,
        pass: residual <= tolerance,
        location,
    }
}

fn scale_of(values: &[f64]) -> f64 {
    values.iter().fold(1.0_f64, |a, &v| a.max(v.abs()))
}

/// Operator identities on one graph with seeded test functions.
pub fn operator_identities(g: &WeightedGraph, seed: u64) -> Result<Vec<IdentityCheck>, LabError> {
    let n = g.len();
    let f = families::random_function(n, 2.0, seed ^ 0x1);
    let h = families::random_function(n, 2.0, seed ^ 0x2);
    let u = families::random_positive_function(n, 0.2, 5.0, seed ^ 0x3);
    let mut out = Vec::new();

    // Green's formula: Σ f Δh m = −Σ Γ(f,h) m.
    let lap_h = g.laplacian(&h)?;
    let green_scale = g.inner(&f, &lap_h)?.abs().max(1.0);
    let green = g.green_residual(&f, &h)?.abs() / green_scale;
    out.push(check("green-formula", green, tol::IDENTITY_REL, format!("seed {seed}")));

    // Chain-rule identity Δ(f²) = 2fΔf + 2Γ(f) (the defining relation of Γ).
    let f_sq = f.map(|v| v * v);
    let lap_fsq = g.laplacian(&f_sq)?;
    let lap_f = g.laplacian(&f)?;
    let gamma_f = g.gamma(&f)?;
    let mut worst = 0.0_f64;
    for x in 0..n {
        let lhs = lap_fsq[x];
        let rhs = 2.0 * f[x] * lap_f[x] + 2.0 * gamma_f[x];
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    out.push(check("chain-rule-gamma", worst, tol::IDENTITY_REL, format!("seed {seed}")));

    // Γ̃₂(√u) = ½ΔΓ(√u) − Γ(√u, Δu/(2√u)).
    let root = u.map(f64::sqrt);
    let tilde = g.gamma2_tilde(&root)?;
    let lap_u = g.laplacian(&u)?;
    let half_quotient = VertexFunction::from_fn(n, |x| lap_u[x] / (2.0 * root[x]));
    let gamma_root = g.gamma(&root)?;
    let lap_gamma_root = g.laplacian(&gamma_root)?;
    let cross = g.gamma_bilinear(&root, &half_quotient)?;
    let mut worst = 0.0_f64;
    for x in 0..n {
        let rhs = 0.5 * lap_gamma_root[x] - cross[x];
        worst = worst.max((tilde[x] - rhs).abs() / rhs.abs().max(1.0));
    }
    out.push(check("tilde-gamma2-identity", worst, tol::IDENTITY_REL, format!("seed {seed}")));

    // Γ symmetry and positivity.
    let gfh = g.gamma_bilinear(&f, &h)?;
    let ghf = g.gamma_bilinear(&h, &f)?;
    out.push(check(
        "gamma-symmetry",
        gfh.max_abs_diff(&ghf),
        0.0,
        format!("seed {seed}"),
    ));
    let min_gamma = gamma_f.values().iter().cloned().fold(f64::INFINITY, f64::min);
    out.push(check(
        "gamma-positivity",
        (-min_gamma).max(0.0),
        0.0,
        format!("seed {seed}"),
    ));

    // Quadratic homogeneity of Γ, Γ₂, Γ̃₂ under f → cf.
    let c = 1.7;
    let mut worst = 0.0_f64;
    let g2 = g.gamma2(&f)?;
    let g2c = g.gamma2(&f.scale(c))?;
    let gc = g.gamma(&f.scale(c))?;
    let tilde_u = g.gamma2_tilde(&u)?;
    let tilde_uc = g.gamma2_tilde(&u.scale(c))?;
    for x in 0..n {
        worst = worst.max((gc[x] - c * c * gamma_f[x]).abs() / gamma_f[x].abs().max(1.0));
        worst = worst.max((g2c[x] - c * c * g2[x]).abs() / g2[x].abs().max(1.0));
        worst = worst.max((tilde_uc[x] - c * c * tilde_u[x]).abs() / tilde_u[x].abs().max(1.0));
    }
    out.push(check("quadratic-homogeneity", worst, tol::IDENTITY_REL, format!("seed {seed}")));

    // ℓᵖ embedding: ‖f‖_q ≤ δ^{1/q−1/p} ‖f‖_p for p < q.
    let delta = g.validate()?.delta;
    let mut worst = 0.0_f64;
    for &(p, q) in &[(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY), (2.0, 4.0)] {
        let np = g.lp_norm(&f, p)?;
        let nq = g.lp_norm(&f, q)?;
        let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
        let bound = delta.powf(inv_q - 1.0 / p) * np;
        worst = worst.max((nq - bound) / bound.abs().max(1.0));
    }
    out.push(check("lp-embedding", worst.max(0.0), tol::CONTRACTION_SLACK, format!("seed {seed}")));

    // Quotient gradient bound with |f| ≤ B1, |g| ≥ B2:
    // Γ(f/g) ≤ (2/B2²)Γ(f) + (2B1²/B2⁴)Γ(g).
    let denom = families::random_positive_function(n, 0.5, 3.0, seed ^ 0x4);
    let b1 = scale_of(f.values());
    let b2 = denom.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let quotient = f.zip_map(&denom, |a, b| a / b);
    let gq = g.gamma(&quotient)?;
    let gden = g.gamma(&denom)?;
    let mut worst = 0.0_f64;
    for x in 0..n {
        let bound = 2.0 / (b2 * b2) * gamma_f[x] + 2.0 * b1 * b1 / b2.powi(4) * gden[x];
        worst = worst.max((gq[x] - bound) / bound.abs().max(1.0));
    }
    out.push(check(
        "quotient-gradient-bound",
        worst.max(0.0),
        tol::CONTRACTION_SLACK,
        format!("seed {seed}"),
    ));

    Ok(out)
}

/// Semigroup axioms on one graph: law, commutation, self-adjointness,
/// conservation of mass, positivity, and contraction.
pub fn semigroup_identities(
    g: &WeightedGraph,
    prop: &Propagator,
    seed: u64,
) -> Result<Vec<IdentityCheck>, LabError> {
    let n = g.len();
    let f = families::random_function(n, 2.0, seed ^ 0x11);
    let h = families::random_function(n, 2.0, seed ^ 0x12);
    let nonneg = families::random_positive_function(n, 0.0001, 3.0, seed ^ 0x13);
    let times = [0.01, 0.1, 1.0, 10.0];
    let mut out = Vec::new();

    let mut law = 0.0_f64;
    let mut commute = 0.0_f64;
    let mut adjoint = 0.0_f64;
    let mut mass = 0.0_f64;
    let mut positivity = 0.0_f64;
    let mut contraction = 0.0_f64;
    let ones = VertexFunction::constant(n, 1.0);
    let lap_f = g.laplacian(&f)?;
    for &t in &times {
        let pt_f = prop.apply(&f, t)?;
        // semigroup law at (t, t/2 + t/2)
        let half = prop.apply(&f, 0.5 * t)?;
        let composed = prop.apply(&half, 0.5 * t)?;
        law = law.max(pt_f.max_abs_diff(&composed) / scale_of(f.values()));
        // ΔP_t f = P_t Δf
        let d1 = prop.derivative(&f, t)?;
        let d2 = prop.apply(&lap_f, t)?;
        commute = commute.max(d1.max_abs_diff(&d2) / scale_of(lap_f.values()));
        // ⟨P_t f, h⟩ = ⟨f, P_t h⟩
        let pt_h = prop.apply(&h, t)?;
        let a = g.inner(&pt_f, &h)?;
        let b = g.inner(&f, &pt_h)?;
        adjoint = adjoint.max((a - b).abs() / a.abs().max(1.0));
        // conservation P_t 1 = 1
        let pt_ones = prop.apply(&ones, t)?;
        mass = mass.max(pt_ones.max_abs_diff(&ones));
        // positivity
        let pt_pos = prop.apply(&nonneg, t)?;
        let min = pt_pos.values().iter().cloned().fold(f64::INFINITY, f64::min);
        positivity = positivity.max(-min);
        // contraction in p ∈ {1, 2, ∞}
        for &p in &[1.0, 2.0, f64::INFINITY] {
            let before = g.lp_norm(&f, p)?;
            let after = g.lp_norm(&pt_f, p)?;
            contraction = contraction.max((after - before) / before.max(1.0));
        }
    }
    out.push(check("semigroup-law", law, tol::SEMIGROUP_ABS, format!("seed {seed}")));
    out.push(check("heat-commutation", commute, tol::SEMIGROUP_ABS, format!("seed {seed}")));
    out.push(check("self-adjointness", adjoint, tol::SEMIGROUP_ABS, format!("seed {seed}")));
    out.push(check("mass-conservation", mass, tol::SEMIGROUP_ABS, format!("seed {seed}")));
    out.push(check("positivity", positivity, tol::CONTRACTION_SLACK, format!("seed {seed}")));
    out.push(check(
        "lp-contraction",
        contraction.max(0.0),
        tol::CONTRACTION_SLACK,
        format!("seed {seed}"),
    ));

    // kernel bookkeeping: p ≥ 0, unit row mass, and the self-adjointness
    // consequence p(t,x,y) = p(t,y,x) (equivalently, detailed balance
    // m(x)·P_t(δ_y)(x-row) of the unnormalized matrix entries).
    let mut kernel_sym = 0.0_f64;
    let mut kernel_mass = 0.0_f64;
    let mut kernel_pos = 0.0_f64;
    for &t in &[0.1, 1.0] {
        for x in 0..n {
            let mut total = 0.0;
            for y in 0..n {
                let p = prop.kernel(t, x, y)?;
                kernel_pos = kernel_pos.max(-p);
                total += p * g.measure(y);
                let q = prop.kernel(t, y, x)?;
                kernel_sym = kernel_sym.max((p - q).abs());
                // p·m(y) ≤ 1: one summand of a unit sum
                kernel_pos = kernel_pos.max(p * g.measure(y) - 1.0 - tol::SEMIGROUP_ABS);
            }
            kernel_mass = kernel_mass.max((total - 1.0).abs());
        }
    }
    out.push(check("kernel-positivity", kernel_pos, tol::CONTRACTION_SLACK, format!("seed {seed}")));
    out.push(check("kernel-unit-mass", kernel_mass, tol::SEMIGROUP_ABS, format!("seed {seed}")));
    out.push(check("kernel-measure-symmetry", kernel_sym, tol::SEMIGROUP_ABS, format!("seed {seed}")));
    Ok(out)
}

fn merge_worst(into: &mut Vec<IdentityCheck>, batch: Vec<IdentityCheck>) {
    for c in batch {
        match into.iter_mut().find(|e| e.name == c.name) {
            Some(e) => {
                if c.residual > e.residual {
                    *e = c;
                }
            }
            None => into.push(c),
        }
    }
}

/// Runs both batteries over `count` seeded random graphs and keeps the
/// worst residual per check.
pub fn random_graph_battery(count: usize, seed: u64) -> Result<Vec<IdentityCheck>, LabError> {
    let params = families::RandomGraphParams::default();
    let mut out = Vec::new();
    for i in 0..count {
        let g_seed = seed.wrapping_add(i as u64);
        let g = families::random_connected(&params, g_seed);
        merge_worst(&mut out, operator_identities(&g, g_seed)?);
        let prop = Propagator::build(&g)?;
        merge_worst(&mut out, semigroup_identities(&g, &prop, g_seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_on_random_graphs() {
        let checks = random_graph_battery(5, 1234).unwrap();
        for c in &checks {
            assert!(c.pass, "{} residual {} > {}", c.name, c.residual, c.tolerance);
        }
        assert!(checks.len() >= 12);
    }
}
