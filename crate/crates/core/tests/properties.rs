use nalgebra::DMatrix;
use proptest::prelude::*;

use pite_bench::harness::run_replication;
use pite_bench::learners::{LearnerId, LearnerSpec};
use pite_bench::matcher::match_nn;
use pite_bench::pite::{internal_split_rows, split_by_arm};
use pite_bench::simgen::{generate_population, Mode, ScenarioConfig};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn arms() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (1usize..12, 1usize..12, 1usize..4).prop_flat_map(|(nt, nc, p)| (matrix(nt, p), matrix(nc, p)))
}

fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(Mode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn matching_is_one_to_one((xt, xc) in arms()) {
        let m = match_nn(&xt, &xc).unwrap();
        prop_assert_eq!(m.len(), xt.nrows().min(xc.nrows()));
        let mut controls: Vec<usize> = m.pairs.iter().map(|p| p.0).collect();
        let mut treated: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
        controls.sort_unstable();
        controls.dedup();
        treated.sort_unstable();
        treated.dedup();
        prop_assert_eq!(controls.len(), m.len());
        prop_assert_eq!(treated.len(), m.len());
        prop_assert!(m.distances.iter().all(|d| d.is_finite() && *d >= 0.0));
    }

    #[test]
    fn treated_visited_in_data_order((xt, xc) in arms()) {
        let m = match_nn(&xt, &xc).unwrap();
        let treated: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(treated, (0..m.len()).collect::<Vec<_>>());
    }

    #[test]
    fn populations_split_exactly_in_half(seed in any::<u64>(), half in 2usize..40, p in 1usize..6, mode in mode()) {
        let mut s = ScenarioConfig::new(mode, 2 * half, p, 0.3, 0.5);
        s.master_seed = seed;
        let pop = generate_population(&s, &mut s.stream(0).rng()).unwrap();
        prop_assert_eq!(pop.n_treated(), half);
        let (c, t) = split_by_arm(&pop).unwrap();
        let mut all: Vec<usize> = c.rows.iter().chain(&t.rows).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..2 * half).collect::<Vec<_>>());
        let (train, test) = internal_split_rows(&pop, &mut s.stream(1).rng()).unwrap();
        prop_assert_eq!(train.len(), half);
        prop_assert_eq!(test.len(), half);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn replications_are_pure_functions_of_the_seed(seed in any::<u64>(), rep in 0usize..50, mode in mode()) {
        let mut s = ScenarioConfig::new(mode, 60, 3, 0.5, 0.5);
        s.master_seed = seed;
        let specs = [LearnerSpec::with_defaults(LearnerId::Ridge), LearnerSpec::with_defaults(LearnerId::Rf)];
        let a = run_replication(&s, rep, &specs).unwrap().rows();
        let b = run_replication(&s, rep, &specs).unwrap().rows();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn penalized_direction_improves_with_signal() {
    let ids = [LearnerId::Ridge, LearnerId::Lasso, LearnerId::Enet];
    let specs: Vec<LearnerSpec> = ids.iter().map(|&id| LearnerSpec::with_defaults(id)).collect();
    let mean_dir = |mu: f64| {
        let mut s = ScenarioConfig::new(Mode::Internal, 250, 5, 0.5, mu);
        s.master_seed = 3;
        let mut total = 0.0;
        let mut count = 0.0;
        for rep in 0..20 {
            for row in run_replication(&s, rep, &specs).unwrap().rows() {
                total += row.dir.unwrap();
                count += 1.0;
            }
        }
        total / count
    };
    let (null, strong) = (mean_dir(0.0), mean_dir(0.5));
    assert!(strong > null, "dir at mu=0.5 {strong} vs mu=0 {null}");
}
