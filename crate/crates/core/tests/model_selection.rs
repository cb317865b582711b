mod common;

use approx::assert_relative_eq;
use ndarray::{array, Array2};
use proptest::prelude::*;
use snhmm::hmm::simulate;
use snhmm::inference::{ModelShape, PriorConfig, RunConfig};
use snhmm::model_selection::*;
use snhmm::simulate::two_state;
use snhmm::SmoothedProbs;

#[test]
fn bic_by_hand() {
    assert_eq!(bic(0.0, 1, 1), 0.0);
    assert!((bic(-50.0, 10, 100) - 146.051_701_859_880_92).abs() <= 1e-12);
}

#[test]
fn parameter_counts_match_unconstrained_dimension() {
    assert_eq!(parameter_count(2, 2, false), 17);
    assert_eq!(parameter_count(2, 1, false), 9);
    assert_eq!(parameter_count(2, 1, true), parameter_count(2, 1, false));
    for z in 2..6 {
        for k in 1..4 {
            for shared in [false, true] {
                let shape = ModelShape { states: z, components: k, shared_weights: shared };
                assert_eq!(parameter_count(z, k, shared), shape.dim());
            }
        }
    }
}

#[test]
fn entropy_edge_cases() {
    let onehot = SmoothedProbs { gamma: array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]] };
    assert_eq!(assignment_entropy(&onehot), 0.0);
    let half = SmoothedProbs { gamma: array![[0.5, 0.5]] };
    assert_relative_eq!(assignment_entropy(&half), std::f64::consts::LN_2, max_relative = 1e-15);
}

#[test]
fn entropy_matches_extended_precision() {
    let g = SmoothedProbs {
        gamma: array![
            [0.2, 0.3, 0.5],
            [0.9, 0.05, 0.05],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [0.999_999, 1e-6, 0.0]
        ],
    };
    assert_relative_eq!(assignment_entropy(&g), 2.522_677_809_690_184, max_relative = 1e-14);
    let direct = -common::compensated_sum(g.gamma.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()));
    assert_relative_eq!(assignment_entropy(&g), direct, max_relative = 1e-14);
}

#[test]
fn icl_subtracts_entropy() {
    assert_eq!(icl(100.0, 0.0), 100.0);
    assert!((icl(100.0, 364.3) - -264.3).abs() <= 1e-12);
}

#[test]
fn report_rankings() {
    let c = vec![
        Candidate::new(2, -500.0, 17, 600, 30.0),
        Candidate::new(3, -480.0, 29, 600, 120.0),
        Candidate::new(4, -479.0, 43, 600, 200.0),
    ];
    let r = SelectionReport::from_candidates(c);
    assert_eq!(r.ranking_bic, vec![2, 3, 4]);
    assert_eq!(r.best_by_bic(), Some(2));
    let mut by_icl: Vec<(f64, usize)> = r.candidates.iter().map(|c| (c.icl, c.states)).collect();
    by_icl.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(r.ranking_icl_ascending, by_icl.iter().map(|p| p.1).collect::<Vec<_>>());
    let mut rev = r.ranking_icl_ascending.clone();
    rev.reverse();
    assert_eq!(r.ranking_icl_descending, rev);
    assert!(r.recomputation_error() <= 1e-12);
    for c in &r.candidates {
        assert!(c.icl <= c.bic);
        assert_eq!(c.bic, bic(c.log_likelihood, c.parameters, c.n));
    }
}

#[test]
fn single_candidate_ranking_is_trivial() {
    let r = SelectionReport::from_candidates(vec![Candidate::new(2, -10.0, 9, 50, 1.0)]);
    assert_eq!(r.ranking_bic, vec![2]);
    assert_eq!(r.ranking_icl_ascending, vec![2]);
    assert_eq!(r.ranking_icl_descending, vec![2]);
}

#[test]
fn plug_in_names() {
    assert_eq!("posterior-mean".parse::<PlugIn>().unwrap(), PlugIn::PosteriorMean);
    assert_eq!("max-draw".parse::<PlugIn>().unwrap(), PlugIn::MaxDraw);
    assert!("mode".parse::<PlugIn>().is_err());
}

#[test]
fn selection_on_simulated_series() {
    let sc = two_state();
    let sim = simulate(&sc.model, 150, &mut common::rng(60)).unwrap();
    let run = RunConfig { chains: 1, warmup: 60, iters: 40, seed: 2, n_leapfrog: 10, ..RunConfig::default() };
    for plug in [PlugIn::PosteriorMean, PlugIn::MaxDraw] {
        let r = select(&sim.series, &[2, 3], 2, false, &PriorConfig::default(), &run, plug).unwrap();
        assert_eq!(r.candidates.len(), 2);
        assert_eq!(r.candidates[0].parameters, 17);
        assert_eq!(r.candidates[1].parameters, 29);
        assert!(r.candidates.iter().all(|c| c.icl <= c.bic && c.n == 150));
        assert!(r.recomputation_error() <= 1e-12);
    }
    assert!(select(&sim.series, &[], 2, false, &PriorConfig::default(), &run, PlugIn::MaxDraw).is_err());
}

fn arb_gamma() -> impl Strategy<Value = Array2<f64>> {
    (1usize..30, 2usize..5).prop_flat_map(|(t, z)| {
        proptest::collection::vec(0.0..1.0f64, t * z).prop_map(move |v| {
            let mut g = Array2::from_shape_vec((t, z), v).unwrap();
            for mut r in g.rows_mut() {
                let s = r.sum().max(1e-12);
                r.mapv_inplace(|x| x / s);
            }
            g
        })
    })
}

proptest! {
    #[test]
    fn entropy_ignores_column_order(g in arb_gamma(), shift in 1usize..4) {
        let z = g.ncols();
        let p = Array2::from_shape_fn(g.dim(), |(t, k)| g[[t, (k + shift) % z]]);
        let a = assignment_entropy(&SmoothedProbs { gamma: g });
        let b = assignment_entropy(&SmoothedProbs { gamma: p });
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn bic_grows_with_parameters(ll in -1e4..0.0f64, p in 1usize..100, n in 2usize..10_000) {
        prop_assert!(bic(ll, p + 1, n) > bic(ll, p, n));
    }

    #[test]
    fn icl_never_exceeds_bic(ll in -1e4..0.0f64, p in 1usize..100, n in 1usize..10_000, h in 0.0..1e3f64) {
        let c = Candidate::new(2, ll, p, n, h);
        prop_assert!(c.icl <= c.bic);
    }
}
