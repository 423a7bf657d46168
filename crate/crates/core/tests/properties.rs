use ardmmsb::eval::{nmi, roc_auc, ScoredPair};
use ardmmsb::io::{self, read_checkpoint, write_checkpoint, Checkpoint, RunConfig};
use ardmmsb::{
    elbo_lstar, update_auxiliary, ArdEntry, ArdMatrix, AuxiliaryTable, DirectedGraph, GroundTruth, Matrix, Priors,
    SubpopulationMap, VariationalState,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, lo: f64, hi: f64, r: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| r.random_range(lo..hi)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn random_ard(n: usize, k: usize, r: &mut ChaCha8Rng) -> ArdMatrix {
    let sizes: Vec<u64> = (0..k).map(|_| r.random_range(3..30)).collect();
    let mut entries = Vec::new();
    for i in 0..n {
        for (c, &s) in sizes.iter().enumerate() {
            if r.random::<f64>() < 0.4 {
                entries.push(ArdEntry { row: i, col: c, count: r.random_range(1..=s) });
            }
        }
    }
    ArdMatrix::new(n, k, entries, sizes).unwrap()
}

fn random_state(n: usize, k: usize, d: usize, r: &mut ChaCha8Rng) -> VariationalState {
    VariationalState::new(
        random_matrix(n, d, 0.3, 6.0, r),
        random_matrix(k, d, 0.3, 6.0, r),
        random_matrix(d, d, 0.01, 0.5, r),
    )
    .unwrap()
}

fn permutation(d: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..d).collect();
    p.shuffle(r);
    p
}

fn labels(n: usize, d: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..d)).collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_lists_round_trip_bytewise(seed in any::<u64>(), n in 2usize..40) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: Vec<(usize, usize)> = (0..3 * n)
            .map(|_| (r.random_range(0..n), r.random_range(0..n)))
            .filter(|(a, b)| a != b)
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let g = DirectedGraph::new(n, edges).unwrap();
        let text = io::format_edge_list(&g);
        let back = io::parse_edge_list(&text, Some(n), "e").unwrap();
        prop_assert_eq!(io::format_edge_list(&back), text);
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn subpop_maps_and_node_lists_round_trip(seed in any::<u64>(), n in 1usize..60, k in 1usize..8) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut assigned: Vec<Option<usize>> = (0..n)
            .map(|_| (r.random::<f64>() < 0.7).then(|| r.random_range(0..k)))
            .collect();
        assigned.push(Some(k - 1));
        let map = SubpopulationMap::new(k, assigned).unwrap();
        let text = io::format_subpop_map(&map);
        let back = io::parse_subpop_map(&text, "m").unwrap();
        prop_assert_eq!(io::format_subpop_map(&back), text);
        prop_assert_eq!(back, map);

        let mut ids: Vec<usize> = (0..n).filter(|_| r.random::<bool>()).collect();
        ids.dedup();
        let text = io::format_node_list(&ids);
        prop_assert_eq!(io::parse_node_list(&text, "n").unwrap(), ids);
    }

    #[test]
    fn ard_files_round_trip_bytewise(seed in any::<u64>(), n in 1usize..30, k in 1usize..10) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ard = random_ard(n, k, &mut r);
        let text = io::format_ard(&ard);
        let back = io::parse_ard(&text, "a").unwrap();
        prop_assert_eq!(io::format_ard(&back), text);
        prop_assert_eq!(back, ard);
    }

    #[test]
    fn ground_truth_round_trips_bytewise(seed in any::<u64>(), n in 1usize..20, k in 1usize..5, d in 1usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let truth = GroundTruth {
            memberships: random_matrix(n, d, 0.0, 1.0, &mut r),
            blockmatrix: random_matrix(d, d, 0.0, 1.0, &mut r),
            subpop_centers: random_matrix(k, d, 0.0, 1.0, &mut r),
            subpop_assignment: (0..n).map(|_| r.random_range(0..k)).collect(),
        };
        let text = io::format_ground_truth(&truth);
        let back = io::parse_ground_truth(&text, "t").unwrap();
        prop_assert_eq!(io::format_ground_truth(&back), text);
        prop_assert_eq!(back, truth);
    }

    #[test]
    fn checkpoints_round_trip_bytewise(seed in any::<u64>(), n in 1usize..20, k in 1usize..6, d in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut config = RunConfig::default();
        config.seed = seed;
        config.num_communities = d;
        let checkpoint = Checkpoint {
            state: random_state(n, k, d, &mut r),
            config_text: config.to_text(),
            seed,
            completed_passes: r.random_range(0..10),
            ard_digest: io::sha256_hex(&seed.to_le_bytes()),
        };
        let bytes = write_checkpoint(&checkpoint);
        let back = read_checkpoint(&bytes, "c").unwrap();
        prop_assert_eq!(write_checkpoint(&back), bytes);
        prop_assert_eq!(back, checkpoint);
    }

    #[test]
    fn configs_round_trip_through_canonical_text(seed in any::<u64>(), d in 1usize..8, passes in 1usize..9, tol in 1e-6f64..1.0) {
        let mut config = RunConfig::default();
        config.seed = seed;
        config.num_communities = d;
        config.num_passes = passes;
        config.elbo_tol = tol;
        config.subpops_per_minibatch = (passes % 2 == 0).then_some(passes);
        let text = config.to_text();
        let back = RunConfig::parse(&text, "c").unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back, config);
    }

    #[test]
    fn nmi_is_symmetric_and_label_invariant(seed in any::<u64>(), n in 1usize..80, d in 1usize..6) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = labels(n, d, &mut r);
        let y = labels(n, d, &mut r);
        let v = nmi(&x, &y).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        prop_assert_eq!(v, nmi(&y, &x).unwrap());
        let p = permutation(d, &mut r);
        let relabeled: Vec<usize> = y.iter().map(|&l| p[l]).collect();
        prop_assert!((nmi(&x, &relabeled).unwrap() - v).abs() < 1e-12);
        prop_assert!((nmi(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_score_transforms(seed in any::<u64>(), n in 2usize..60) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut scored: Vec<ScoredPair> = (0..n)
            .map(|i| ScoredPair {
                src: i,
                dst: i + 1,
                score: (r.random_range(0..12) as f64) / 12.0,
                is_link: r.random::<bool>(),
            })
            .collect();
        scored[0].is_link = true;
        scored[1].is_link = false;
        let base = roc_auc(&scored).unwrap();
        let transformed: Vec<ScoredPair> = scored
            .iter()
            .map(|p| ScoredPair { score: (3.0 * p.score).exp() - 0.5, ..*p })
            .collect();
        let after = roc_auc(&transformed).unwrap();
        prop_assert!((after.auc - base.auc).abs() < 1e-12);
        prop_assert!((after.avg_rank - base.avg_rank).abs() < 1e-12);
        prop_assert_eq!(after.curve, base.curve);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lstar_is_invariant_under_joint_relabeling(seed in any::<u64>(), d in 1usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ard = random_ard(12, 5, &mut r);
        let state = random_state(12, 5, d, &mut r);
        let priors = Priors::uniform(d);
        let aux = update_auxiliary(&state, &ard).unwrap();
        let base = elbo_lstar(&state, &aux, &ard, &priors).unwrap();
        let p = permutation(d, &mut r);
        let moved = elbo_lstar(&state.permute_communities(&p), &aux.permute_communities(&p), &ard, &priors).unwrap();
        prop_assert!(close(base, moved, 1e-12), "{} vs {}", base, moved);
    }

    #[test]
    fn optimal_lstar_ignores_subpop_side_relabeling(seed in any::<u64>(), d in 1usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ard = random_ard(10, 6, &mut r);
        let state = random_state(10, 6, d, &mut r);
        let priors = Priors::uniform(d);
        let lstar = |s: &VariationalState| elbo_lstar(s, &update_auxiliary(s, &ard).unwrap(), &ard, &priors).unwrap();
        let p = permutation(d, &mut r);
        let (a, b) = (lstar(&state), lstar(&state.permute_subpop_side(&p)));
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn auxiliary_update_gives_the_tightest_bound(seed in any::<u64>(), d in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ard = random_ard(8, 4, &mut r);
        let state = random_state(8, 4, d, &mut r);
        let priors = Priors::uniform(d);
        let best = update_auxiliary(&state, &ard).unwrap();
        let top = elbo_lstar(&state, &best, &ard, &priors).unwrap();
        for _ in 0..5 {
            let mut values = Vec::with_capacity(ard.nnz() * d * d);
            for _ in 0..ard.nnz() {
                let raw: Vec<f64> = (0..d * d).map(|_| r.random_range(0.01..1.0)).collect();
                let total: f64 = raw.iter().sum();
                values.extend(raw.iter().map(|x| x / total));
            }
            let other = AuxiliaryTable::from_values(d, values).unwrap();
            let l = elbo_lstar(&state, &other, &ard, &priors).unwrap();
            prop_assert!(l <= top + 1e-9 * top.abs().max(1.0), "{} > {}", l, top);
        }
    }
}
