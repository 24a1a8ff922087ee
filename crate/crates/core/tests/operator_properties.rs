//! Cross-module operator properties on seeded random graphs.

use liyau_core::curvature::{self, ball_two};
use liyau_core::families::{self, RandomGraphParams};
use liyau_core::graph::VertexFunction;
use proptest::prelude::*;

fn small_params() -> RandomGraphParams {
    RandomGraphParams { max_vertices: 12, ..RandomGraphParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gamma_symmetry_and_positivity(seed in 0u64..10_000, fs in 0u64..10_000) {
        let g = families::random_connected(&small_params(), seed);
        let f = families::random_function(g.len(), 3.0, fs);
        let h = families::random_function(g.len(), 3.0, fs ^ 0xabcd);
        let fh = g.gamma_bilinear(&f, &h).unwrap();
        let hf = g.gamma_bilinear(&h, &f).unwrap();
        prop_assert_eq!(fh.values(), hf.values());
        let gf = g.gamma(&f).unwrap();
        prop_assert!(gf.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn green_residual_vanishes(seed in 0u64..10_000, fs in 0u64..10_000) {
        let g = families::random_connected(&RandomGraphParams::default(), seed);
        let f = families::random_function(g.len(), 3.0, fs);
        let h = families::random_function(g.len(), 3.0, fs ^ 0x77);
        let lap_h = g.laplacian(&h).unwrap();
        let scale = g.inner(&f, &lap_h).unwrap().abs().max(1.0);
        let res = g.green_residual(&f, &h).unwrap();
        prop_assert!(res.abs() <= 1e-9 * scale, "residual {} scale {}", res, scale);
    }

    #[test]
    fn homogeneity_of_forms(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let g = families::random_connected(&small_params(), seed);
        let f = families::random_positive_function(g.len(), 0.3, 4.0, seed ^ 0x5);
        let g2 = g.gamma2(&f).unwrap();
        let g2c = g.gamma2(&f.scale(c)).unwrap();
        for x in 0..g.len() {
            let scale = g2[x].abs().max(1.0) * c * c;
            prop_assert!((g2c[x] - c * c * g2[x]).abs() <= 1e-9 * scale);
        }
        let t = g.gamma2_tilde(&f).unwrap();
        let tc = g.gamma2_tilde(&f.scale(c)).unwrap();
        for x in 0..g.len() {
            let scale = t[x].abs().max(1.0) * c * c;
            prop_assert!((tc[x] - c * c * t[x]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn cde_deficit_scale_invariance(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let g = families::random_connected(&small_params(), seed);
        let f = families::random_positive_function(g.len(), 0.3, 4.0, seed ^ 0x9);
        let x = g.id(seed as usize % g.len()).to_string();
        let d = curvature::cde_deficit(&g, &x, &f, 3.0, -0.4).unwrap();
        let dc = curvature::cde_deficit(&g, &x, &f.scale(c), 3.0, -0.4).unwrap();
        prop_assert!((dc - c * c * d).abs() <= 1e-9 * (c * c * d.abs()).max(1.0));
    }
}

#[test]
fn lemma_embedding_and_quotient_bound_on_100_instances() {
    // ℓᵖ embedding ‖f‖_q ≤ δ^{1/q−1/p}‖f‖_p and the quotient gradient
    // bound Γ(f/g) ≤ (2/B₂²)Γ(f) + (2B₁²/B₂⁴)Γ(g), each with 1e−12 slack.
    let params = RandomGraphParams::default();
    for i in 0..100u64 {
        let g = families::random_connected(&params, 9_000 + i);
        let f = families::random_function(g.len(), 5.0, i ^ 0x21);
        let delta = g.validate().unwrap().delta;
        for &(p, q) in &[(1.0, 2.0), (1.5, 3.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)] {
            let np = g.lp_norm(&f, p).unwrap();
            let nq = g.lp_norm(&f, q).unwrap();
            let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
            let bound = delta.powf(inv_q - 1.0 / p) * np;
            assert!(
                nq <= bound + 1e-12 * bound.max(1.0),
                "graph {i}: ({p},{q}) norm {nq} bound {bound}"
            );
        }

        let denom = families::random_positive_function(g.len(), 0.4, 3.0, i ^ 0x37);
        let b1 = f.max_abs();
        let b2 = denom.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let quotient = f.zip_map(&denom, |a, b| a / b);
        let gq = g.gamma(&quotient).unwrap();
        let gf = g.gamma(&f).unwrap();
        let gd = g.gamma(&denom).unwrap();
        for x in 0..g.len() {
            let bound = 2.0 / (b2 * b2) * gf[x] + 2.0 * b1 * b1 / b2.powi(4) * gd[x];
            assert!(
                gq[x] <= bound + 1e-12 * bound.max(1.0),
                "graph {i} vertex {x}: {} > {}",
                gq[x],
                bound
            );
        }
    }
}

#[test]
fn cd_decision_matches_brute_force_minimum() {
    // The exact minimum eigenvalue bounds every random evaluation of the
    // quadratic form from below.
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(77);
    for case in 0..3 {
        let g = families::random_connected(
            &RandomGraphParams { max_vertices: 14, ..RandomGraphParams::default() },
            500 + case,
        );
        let x = g.id(case as usize % g.len()).to_string();
        let n: f64 = rng.gen_range(0.5..8.0);
        let k: f64 = rng.gen_range(-2.0..2.0);
        let decision = curvature::cd_holds_at(&g, &x, n, k, 1e-9).unwrap();
        let xi = g.index_of(&x).unwrap();
        let coords = ball_two(&g, xi);
        let mut f = VertexFunction::constant(g.len(), 0.0);
        let mut brute = f64::INFINITY;
        for _ in 0..100_000 {
            let mut norm = 0.0;
            for &z in &coords {
                let v: f64 = rng.gen_range(-1.0..1.0);
                f.values_mut()[z] = v;
                norm += v * v;
            }
            if norm < 1e-12 {
                continue;
            }
            let inv = 1.0 / norm.sqrt();
            for &z in &coords {
                f.values_mut()[z] *= inv;
            }
            let lap = g.laplacian(&f).unwrap();
            let gamma = g.gamma(&f).unwrap();
            let g2 = g.gamma2(&f).unwrap();
            let inv_n = if n.is_infinite() { 0.0 } else { 1.0 / n };
            let q = g2[xi] - inv_n * lap[xi] * lap[xi] - k * gamma[xi];
            brute = brute.min(q);
        }
        assert!(
            brute >= decision.min_eigenvalue - 1e-8,
            "case {case}: brute {brute} below exact {}",
            decision.min_eigenvalue
        );
    }
}

#[test]
fn cd_curvature_is_consistent_with_decision() {
    // cd_holds_at(g, x, n, K* − ε) holds and K* itself is tight.
    for seed in [3u64, 4, 5, 6] {
        let g = families::random_connected(
            &RandomGraphParams { max_vertices: 10, ..RandomGraphParams::default() },
            seed,
        );
        for n in [1.5, 4.0, f64::INFINITY] {
            for x in g.ids() {
                let k_star = curvature::cd_curvature_at(&g, x, n).unwrap();
                if !k_star.is_finite() {
                    continue;
                }
                let d = curvature::cd_holds_at(&g, x, n, k_star - 1e-8, 1e-9).unwrap();
                assert!(d.holds, "seed {seed} x {x} n {n} K* {k_star}");
                let scale = k_star.abs().max(1.0);
                let above = curvature::cd_holds_at(&g, x, n, k_star + 1e-6 * scale, 1e-12).unwrap();
                assert!(
                    !above.holds,
                    "seed {seed} x {x} n {n}: K* {k_star} not tight"
                );
            }
        }
    }
}

#[test]
fn curvature_results_invariant_under_relabeling() {
    // Permuting vertex insertion order must not change per-vertex values:
    // ball ordering, adjacency iteration, and search streams are all
    // keyed by vertex id.
    let g1 = liyau_core::WeightedGraph::new(
        vec![
            ("a".into(), 1.5),
            ("b".into(), 0.7),
            ("c".into(), 2.2),
            ("d".into(), 1.0),
        ],
        vec![
            ("a".into(), "b".into(), 1.3),
            ("b".into(), "c".into(), 0.6),
            ("c".into(), "d".into(), 2.0),
            ("d".into(), "a".into(), 0.9),
        ],
    )
    .unwrap();
    let g2 = liyau_core::WeightedGraph::new(
        vec![
            ("d".into(), 1.0),
            ("c".into(), 2.2),
            ("b".into(), 0.7),
            ("a".into(), 1.5),
        ],
        vec![
            ("c".into(), "d".into(), 2.0),
            ("a".into(), "b".into(), 1.3),
            ("d".into(), "a".into(), 0.9),
            ("b".into(), "c".into(), 0.6),
        ],
    )
    .unwrap();
    for x in ["a", "b", "c", "d"] {
        let k1 = curvature::cd_curvature_at(&g1, x, 3.0).unwrap();
        let k2 = curvature::cd_curvature_at(&g2, x, 3.0).unwrap();
        assert_eq!(k1, k2, "cd at {x}");
        let u1 = curvature::cde_curvature_upper(&g1, x, 3.0, 6, 11).unwrap();
        let u2 = curvature::cde_curvature_upper(&g2, x, 3.0, 6, 11).unwrap();
        assert_eq!(u1, u2, "cde upper at {x}");
    }
}

#[test]
fn deficit_ignores_values_outside_ball() {
    let g = families::generate(
        &families::FamilySpec::Path { n: 6 },
        1.0,
        &families::MeasureScheme::Unit,
    )
    .unwrap();
    let mut f = families::random_positive_function(6, 0.5, 2.0, 99).into_values();
    let base = VertexFunction::new(f.clone());
    let d0 = curvature::cde_deficit(&g, "0", &base, 2.0, 0.0).unwrap();
    // vertices "3".."5" are outside B2("0"); even invalid values there
    // must not matter
    f[3] = -7.0;
    f[4] = 0.0;
    f[5] = 1e9;
    let d1 = curvature::cde_deficit(&g, "0", &VertexFunction::new(f), 2.0, 0.0).unwrap();
    assert_eq!(d0, d1);
}
