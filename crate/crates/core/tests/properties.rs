use eqvar::evaluate::metrics;
use eqvar::graph::sample_move;
use eqvar::rng::seeded;
use eqvar::selection::RssMemo;
use eqvar::simulate::simulate;
use eqvar::topdown::{std_pass, SubsetSearch};
use eqvar::{Hyperparams, MoveKind, Ordering, ScoreModel, Selector, SimConfig};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn kind() -> impl Strategy<Value = MoveKind> {
    prop_oneof![
        Just(MoveKind::Adjacent),
        Just(MoveKind::Transposition),
        Just(MoveKind::Shuffle)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn std_returns_a_permutation(p in 2usize..9, n in 10usize..80, seed in any::<u64>()) {
        let mut cfg = SimConfig::new(p, n, seed);
        cfg.edge_prob = Some(0.4);
        let data = simulate(&cfg).unwrap().data;
        let model = ScoreModel::new(Hyperparams::default(), n, p).unwrap();
        let diag: Vec<f64> = (0..p).map(|j| data.gram()[[j, j]]).collect();
        let mut memo = RssMemo::new(p);
        let out = std_pass(&diag, &data, &mut memo, &model, SubsetSearch::Stepwise).unwrap();
        let mut seen = out.ordering.as_slice().to_vec();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..p).collect::<Vec<_>>());
        for (r, d) in out.rss.iter().zip(&diag) {
            prop_assert!(*r > 0.0 && r <= d);
        }
    }

    #[test]
    fn selected_dags_respect_ordering_and_cap(
        p in 2usize..10,
        d_in in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mut cfg = SimConfig::new(p, 60, seed);
        cfg.edge_prob = Some(0.6);
        let data = simulate(&cfg).unwrap().data;
        let model = ScoreModel::new(Hyperparams::default().with_max_in_degree(d_in.min(p - 1)), 60, p).unwrap();
        let sigma = Ordering::random(p, &mut seeded(seed));
        let out = Selector::new(&data, model).unwrap().map_dag(&sigma).unwrap();
        prop_assert!(out.dag.is_consistent(&sigma));
        prop_assert!(out.dag.max_in_degree() <= model.d_in);
        let total: f64 = (0..p).map(|j| data.rss(j, out.dag.parents(j)).unwrap()).sum();
        let direct = model.phi(out.dag.edge_count(), total).unwrap();
        prop_assert!((direct - out.score).abs() <= 1e-9 * direct.abs());
    }

    #[test]
    fn rejected_proposals_leave_no_trace(
        p in 3usize..9,
        seed in any::<u64>(),
        k in kind(),
    ) {
        let mut cfg = SimConfig::new(p, 50, seed);
        cfg.edge_prob = Some(0.5);
        let data = simulate(&cfg).unwrap().data;
        let model = ScoreModel::new(Hyperparams::default(), 50, p).unwrap();
        let mut rng = seeded(seed ^ 1);
        let sigma = Ordering::random(p, &mut rng);
        let mut sel = Selector::new(&data, model).unwrap();
        let before = sel.map_dag(&sigma).unwrap();
        let paths: Vec<_> = (0..p).map(|j| sel.cache().path(j).cloned()).collect();
        for _ in 0..5 {
            let mv = sample_move(p, k, &mut rng);
            sel.update_after_move(&sigma.apply(&mv).unwrap(), &mv).unwrap();
            sel.rollback();
        }
        for (j, path) in paths.iter().enumerate() {
            prop_assert_eq!(sel.cache().path(j), path.as_ref());
        }
        let mv = sample_move(p, k, &mut rng);
        sel.update_after_move(&sigma.apply(&mv).unwrap(), &mv).unwrap();
        sel.rollback();
        let adj = Move::new(MoveKind::Adjacent, 0, 1).unwrap();
        let there = sigma.apply(&adj).unwrap();
        sel.update_after_move(&there, &adj).unwrap();
        sel.commit();
        let (back, _) = sel.update_after_move(&sigma, &adj).unwrap();
        prop_assert_eq!(back, before);
    }

    #[test]
    fn binary_hd_is_set_difference(seed in any::<u64>(), p in 2usize..8) {
        let mut rng = seeded(seed);
        let a = Array2::from_shape_fn((p, p), |(i, j)| f64::from(i != j && rng.random_bool(0.3)));
        let b = Array2::from_shape_fn((p, p), |(i, j)| f64::from(i != j && rng.random_bool(0.3)));
        let r = metrics(a.view(), b.view()).unwrap();
        let diff = a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
        prop_assert_eq!(r.hd, diff as f64);
        prop_assert!((0.0..=100.0).contains(&r.fnr_pct));
        prop_assert!((0.0..=100.0).contains(&r.fdr_pct));
        prop_assert!((0.0..=100.0).contains(&r.flip_pct));
    }
}

use eqvar::Move;
