use proptest::prelude::*;

use paintwalk::constants::{lattice_green, torus_heat_kernel, GreenSettings, HeatConvention, WalkConvention};
use paintwalk::exact::{green_row, hitting_prob_table, transition_kernel, uniform_mixing_time};
use paintwalk::painter::{count_boundary_edges, run_painting_with, PaintMode, PaintOptions, PaintScratch};
use paintwalk::stats::{qq_data, variance_estimate, Moments};
use paintwalk::walk::derive_stream;
use paintwalk::{Graph, GraphSpec, Vertex, WalkConfig};

fn small_family() -> impl Strategy<Value = GraphSpec> {
    prop_oneof![
        (1usize..=3, 2usize..=5).prop_map(|(d, n)| GraphSpec::torus(d, n)),
        (1usize..=6).prop_map(GraphSpec::hypercube),
        (2usize..=4).prop_map(GraphSpec::cayley_sym),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn painting_outcome_invariants(spec in small_family(), seed in any::<u64>(), last in any::<bool>(), laziness in 0.05f64..0.95) {
        let g = Graph::build(spec).unwrap();
        prop_assume!(g.vertex_count() >= 2);
        let cfg = WalkConfig::lazy(laziness).unwrap();
        let mode = if last { PaintMode::LastPainted } else { PaintMode::FirstPainted };
        let mut scratch = PaintScratch::default();
        let o = run_painting_with(&g, &cfg, &PaintOptions::with_mode(mode), &mut derive_stream(seed, 0), &mut scratch).unwrap();
        let n = g.vertex_count() as u64;
        prop_assert_eq!(o.a1_count + o.a2_count, n);
        prop_assert!(o.boundary_edges <= g.edge_count() as u64);
        prop_assert_eq!(o.boundary_edges, count_boundary_edges(&g, scratch.marks()));
        prop_assert_eq!(o.b_statistic, o.wins1 as i64 - o.wins2 as i64);
        if mode == PaintMode::FirstPainted {
            prop_assert_eq!(o.wins1 + o.wins2 + o.tie_count, n);
            prop_assert!(o.a1_count.abs_diff(o.wins1) <= o.tie_count);
        }
    }

    #[test]
    fn painting_is_a_function_of_the_stream(spec in small_family(), seed in any::<u64>(), run in any::<u64>()) {
        let g = Graph::build(spec).unwrap();
        prop_assume!(g.vertex_count() >= 2);
        let cfg = WalkConfig::default();
        let opts = PaintOptions::default();
        let a = run_painting_with(&g, &cfg, &opts, &mut derive_stream(seed, run), &mut PaintScratch::default()).unwrap();
        let b = run_painting_with(&g, &cfg, &opts, &mut derive_stream(seed, run), &mut PaintScratch::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kernel_powers_stay_stochastic(spec in small_family(), laziness in 0.05f64..0.95, t in 0u64..60) {
        let g = Graph::build(spec).unwrap();
        let k = transition_kernel(&g, &WalkConfig::lazy(laziness).unwrap()).unwrap();
        let row = k.power_row(Vertex::ORIGIN, t).unwrap();
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(row.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn hitting_tables_are_probabilities_and_monotone_in_c(spec in small_family(), c in 1.0f64..4.0) {
        let g = Graph::build(spec).unwrap();
        prop_assume!(g.vertex_count() >= 2);
        let k = transition_kernel(&g, &WalkConfig::default()).unwrap();
        let m = uniform_mixing_time(&k).unwrap();
        let lo = hitting_prob_table(&k, &m, c).unwrap();
        let hi = hitting_prob_table(&k, &m, c + 0.5).unwrap();
        prop_assert_eq!(lo.f_values[0], 1.0);
        prop_assert!(lo.green_values[0] >= 1.0);
        prop_assert!(lo.f_statistic >= 0.0);
        for (a, b) in lo.f_values.iter().zip(&hi.f_values) {
            prop_assert!((0.0..=1.0).contains(a));
            prop_assert!(b + 1e-12 >= *a);
        }
    }

    #[test]
    fn green_rows_match_transposed_sums(spec in small_family(), horizon in 0u64..40) {
        // regular graphs: g(0, y) = g(y, 0)
        let g = Graph::build(spec).unwrap();
        let k = transition_kernel(&g, &WalkConfig::default()).unwrap();
        let row = green_row(&k, Vertex::ORIGIN, horizon).unwrap();
        let y = Vertex((g.vertex_count() / 2) as u32);
        let back = green_row(&k, y, horizon).unwrap();
        prop_assert!((row[y.index()] - back[0]).abs() < 1e-10);
    }

    #[test]
    fn moments_merge_in_any_order(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
        let split = split % xs.len();
        let whole: Moments = xs.iter().copied().collect();
        let mut left: Moments = xs[..split].iter().copied().collect();
        let right: Moments = xs[split..].iter().copied().collect();
        left.merge(&right);
        let mut swapped = right;
        swapped.merge(&xs[..split].iter().copied().collect());
        let scale = 1.0 + whole.variance();
        prop_assert!((left.mean() - whole.mean()).abs() < 1e-12 * (1.0 + whole.mean().abs()));
        prop_assert!((left.variance() - whole.variance()).abs() < 1e-9 * scale);
        prop_assert!((swapped.variance() - whole.variance()).abs() < 1e-9 * scale);
    }

    #[test]
    fn variance_ci_contains_estimate(xs in prop::collection::vec(-50f64..50.0, 2..300)) {
        let s = variance_estimate(&xs, 0.95).unwrap();
        prop_assert!(s.variance >= 0.0);
        prop_assert!(s.variance_ci.0 <= s.variance && s.variance <= s.variance_ci.1);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
    }

    #[test]
    fn qq_pairs_are_monotone(xs in prop::collection::vec(-10f64..10.0, 100..400)) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let q = qq_data(&xs).unwrap();
        for w in q.pairs.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        }
        prop_assert!(q.correlation <= 1.0 + 1e-12);
    }

    #[test]
    fn heat_kernel_is_symmetric(t in 0.01f64..5.0, x in prop::array::uniform3(0f64..1.0), y in prop::array::uniform3(0f64..1.0)) {
        let conv = HeatConvention::default();
        let a = torus_heat_kernel(t, &x, &y, &conv).unwrap();
        let b = torus_heat_kernel(t, &y, &x, &conv).unwrap();
        let d = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
        let c = torus_heat_kernel(t, &[0.0; 3], &d, &conv).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a && (a - c).abs() <= 1e-9 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lattice_green_is_octahedrally_symmetric(y in prop::array::uniform3(-4i64..=4), perm in 0usize..6, signs in prop::array::uniform3(any::<bool>())) {
        let s = GreenSettings::default();
        let p = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]][perm];
        let z: Vec<i64> = (0..3).map(|i| if signs[i] { -y[p[i]] } else { y[p[i]] }).collect();
        let a = lattice_green(3, &y, WalkConvention::Lazy, &s).unwrap();
        let b = lattice_green(3, &z, WalkConvention::Lazy, &s).unwrap();
        prop_assert!(a.value > 0.0);
        prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value);
        let simple = lattice_green(3, &y, WalkConvention::Simple, &s).unwrap();
        prop_assert!((a.value - 2.0 * simple.value).abs() <= 1e-14 * a.value);
    }
}
