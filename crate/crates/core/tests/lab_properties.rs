//! Estimate-family properties beyond the per-module unit tests.

use liyau_core::families::{self, FamilySpec, MeasureScheme, RandomGraphParams};
use liyau_core::graph::VertexFunction;
use liyau_core::heat::Propagator;
use liyau_core::lab::{self, GridScope, LiYauParams, Verdict, WSchedule};

#[test]
fn family_margin_is_minimized_at_b_one_for_k_zero() {
    // At K = 0 the additive term (n/2)·b²/((2b−1)t) is minimized at
    // b = 1, so the b = 1 margin is pointwise the binding one.
    let g = families::random_connected(
        &RandomGraphParams { max_vertices: 8, ..RandomGraphParams::default() },
        606,
    );
    let prop = Propagator::build(&g).unwrap();
    let f = VertexFunction::delta(g.len(), 0);
    for &t in &[0.3, 1.0, 4.0] {
        let margins_for = |b: f64| {
            let params = LiYauParams { n: 2.5, k: 0.0, schedule: WSchedule::Power { b } };
            lab::liyau_sides(&g, &prop, &f, t, &params).unwrap().margins()
        };
        let at_one = margins_for(1.0);
        for &b in &[0.6, 0.75, 2.0, 5.0] {
            let other = margins_for(b);
            for x in 0..g.len() {
                assert!(
                    at_one[x] <= other[x] + 1e-12,
                    "t {t} b {b} vertex {x}: {} > {}",
                    at_one[x],
                    other[x]
                );
            }
        }
    }
}

#[test]
fn general_schedule_reproduces_power_family_sides() {
    let g = families::generate(&FamilySpec::Complete { n: 4 }, 1.0, &MeasureScheme::Unit).unwrap();
    let prop = Propagator::build(&g).unwrap();
    let f = VertexFunction::delta(g.len(), 1);
    let (t, n, k) = (0.8, 3.0, -0.4);
    for &b in &[0.75, 1.0, 2.0] {
        let power = LiYauParams { n, k, schedule: WSchedule::Power { b } };
        let general = LiYauParams { n, k, schedule: WSchedule::power_as_general(b, t) };
        let sp = lab::liyau_sides(&g, &prop, &f, t, &power).unwrap();
        let sg = lab::liyau_sides(&g, &prop, &f, t, &general).unwrap();
        for x in 0..g.len() {
            assert!((sp.lhs[x] - sg.lhs[x]).abs() <= 1e-12);
            assert!(
                (sp.rhs[x] - sg.rhs[x]).abs() <= 1e-7,
                "b {b} x {x}: {} vs {}",
                sp.rhs[x],
                sg.rhs[x]
            );
        }
    }
}

#[test]
fn phi_residual_halving_on_seeded_instances() {
    for i in 0..5u64 {
        let g = families::random_connected(
            &RandomGraphParams {
                max_vertices: 10,
                weight_range: (0.5, 2.0),
                measure_range: (0.5, 2.0),
                ..RandomGraphParams::default()
            },
            7_700 + i,
        );
        let prop = Propagator::build(&g).unwrap();
        let f = VertexFunction::delta(g.len(), (i as usize) % g.len());
        let (t, s, eps) = (1.0, 0.5, 0.1);
        let r1 = lab::phi_derivative_residual(&g, &prop, &f, t, s, eps, 2e-3).unwrap();
        let r2 = lab::phi_derivative_residual(&g, &prop, &f, t, s, eps, 1e-3).unwrap();
        let ratio = r2 / r1;
        assert!((0.2..0.3).contains(&ratio), "instance {i}: ratio {ratio}");
    }
}

#[test]
fn differential_check_trivial_on_constant_input() {
    // f constant: φ ≡ 0, rhs reduces to −(2αγ²/n)(c + ε) ≤ 0.
    let g = families::generate(&FamilySpec::Complete { n: 3 }, 1.0, &MeasureScheme::Unit).unwrap();
    let prop = Propagator::build(&g).unwrap();
    let f = VertexFunction::constant(g.len(), 2.0);
    let s_grid: Vec<f64> = (1..=10).map(|j| j as f64 / 11.0).collect();
    let report = lab::differential_inequality_check(
        &g, &prop, &f, 1.0, 2.0, 0.0, 1.0, 0.1, &s_grid, None, 0,
    )
    .unwrap();
    assert!(report.min_margin >= -1e-10, "min margin {}", report.min_margin);
    for p in &report.grid {
        assert!(p.rhs <= 1e-12);
    }
}

#[test]
fn differential_check_rejects_positive_gamma() {
    // K > b/t makes the coupling positive somewhere on the grid.
    let g = families::generate(&FamilySpec::Complete { n: 3 }, 1.0, &MeasureScheme::Unit).unwrap();
    let prop = Propagator::build(&g).unwrap();
    let f = VertexFunction::delta(g.len(), 0);
    let err = lab::differential_inequality_check(
        &g, &prop, &f, 1.0, 2.0, 3.0, 1.0, 0.1, &[0.1], None, 0,
    )
    .unwrap_err();
    assert!(matches!(err, lab::LabError::GammaPositive { .. }));
}

#[test]
fn epsilon_tightening_does_not_flip_differential_verdicts() {
    let g = families::generate(&FamilySpec::LatticeBox { dim: 2, side: 3 }, 1.0, &MeasureScheme::Unit)
        .unwrap();
    let prop = Propagator::build(&g).unwrap();
    let f = VertexFunction::delta(g.len(), g.index_of("1_1").unwrap());
    let s_grid: Vec<f64> = (1..=10).map(|j| j as f64 / 11.0).collect();
    let mut verdicts = Vec::new();
    for eps in [0.1, 0.01] {
        let report = lab::differential_inequality_check(
            &g, &prop, &f, 1.0, 4.0, 0.0, 1.0, eps, &s_grid, None, 0,
        )
        .unwrap();
        verdicts.push(report.min_margin >= -1e-5);
    }
    assert_eq!(verdicts[0], verdicts[1]);
}

#[test]
fn dirichlet_sequence_monotone_on_lattice() {
    let g = families::generate(&FamilySpec::LatticeBox { dim: 2, side: 9 }, 1.0, &MeasureScheme::Unit)
        .unwrap();
    let report = lab::cheng_check(&g, 2.0, 1.0, "4_4", 4, None, 0).unwrap();
    let balls: Vec<&lab::GridPoint> =
        report.grid.iter().filter(|p| p.radius.is_some()).collect();
    assert_eq!(balls.len(), 4);
    for w in balls.windows(2) {
        assert!(
            w[1].lhs <= w[0].lhs + 1e-12,
            "radius {:?} -> {:?}: {} < {}",
            w[0].radius,
            w[1].radius,
            w[0].lhs,
            w[1].lhs
        );
    }
    // full-spectrum bottom is 0 <= Kn/2, but no certification attached
    assert_eq!(report.verdict, Verdict::Inconclusive);
}

#[test]
fn reports_round_trip_through_json() {
    let g = families::generate(&FamilySpec::Complete { n: 3 }, 1.0, &MeasureScheme::Unit).unwrap();
    let prop = Propagator::build(&g).unwrap();
    let scope = GridScope::default();
    let report =
        lab::liyau_report(&g, &prop, f64::INFINITY, 0.0, &[0.5], &[1.0], &scope, None, 5).unwrap();
    let text = report.to_json();
    let back: lab::ViolationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert!(back.n.is_infinite());
    let csv = report.to_csv();
    assert!(csv.starts_with("check,graph,n,K,b,t_min_margin,verdict"));
    assert!(csv.contains("inf"));
}
