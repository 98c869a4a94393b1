//! Invariants of the bay model, oracle, network, encoding and searches,
//! checked on randomly generated inputs.

mod common;

use common::{bfs_length, misoverlaid, random_bay, sorted, state_of, ExactValue};
use cpmp_dlts::encoding::{decode_bay, extract_examples, index_move, masked_policy};
use cpmp_dlts::model::{generate_instance, Bay, Group, GroupClass, Instance, Move};
use cpmp_dlts::nn::{
    backward_and_step, loss_cce, one_hot, softmax, AdamConfig, AdamState, Architecture, Head,
    LayerKind, Network, Target,
};
use cpmp_dlts::oracle::solve_exact;
use cpmp_dlts::search::{
    search, Models, MpVariant, PolicyModel, SearchConfig, Strategy as Search, UniformPolicy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted_multiset(bay: &Bay) -> Vec<Group> {
    let mut g: Vec<Group> = bay.grid().iter().copied().filter(|&g| g != 0).collect();
    g.sort_unstable();
    g
}

/// Small bay together with a seed for follow-up randomness.
fn small_bay() -> impl Strategy<Value = (Bay, u64)> {
    (2usize..=4, 3usize..=5, any::<u64>()).prop_flat_map(|(s, t, seed)| {
        let cap = s * (t - 1);
        (0..=cap.min(8)).prop_map(move |n| (random_bay(s, t, n, 6, seed), seed))
    })
}

/// Bay small enough for exhaustive breadth-first search.
fn bfs_bay() -> impl Strategy<Value = Bay> {
    prop_oneof![
        Just((3usize, 4usize)),
        Just((4, 3)),
        Just((2, 5)),
        Just((3, 3))
    ]
    .prop_flat_map(|(s, t)| {
        let cap = (s * (t - 1)).min(6);
        (0..=cap, 1..=6 as Group, any::<u64>())
            .prop_map(move |(n, g, seed)| random_bay(s, t, n, g, seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn moves_conserve_groups_and_bound_blocking((bay, seed) in small_bay()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups = sorted_multiset(&bay);
        let mut bay = bay;
        let mut previous = None;
        for _ in 0..20 {
            let moves = bay.legal_moves(previous);
            let s = bay.stacks();
            prop_assert!(moves.len() <= s * (s - 1));
            prop_assert!(moves.iter().all(|m| m.from != m.to));
            if let Some(p) = previous {
                prop_assert!(!moves.contains(&p.inverse()));
            }
            if moves.is_empty() {
                break;
            }
            let mv = moves[rng.gen_range(0..moves.len())];
            let next = bay.apply_move(mv).unwrap();
            prop_assert_eq!(sorted_multiset(&next), groups.clone());
            prop_assert!(next.blocking_count() <= bay.blocking_count() + 1);
            prop_assert!(next.blocking_count() <= next.container_count());
            prop_assert_eq!(next.blocking_count(), misoverlaid(&state_of(&next)));
            prop_assert_eq!(next.blocking_count() == 0, next.is_sorted());
            prop_assert_eq!(next.is_sorted(), sorted(&state_of(&next)));
            bay = next;
            previous = Some(mv);
        }
    }

    #[test]
    fn generator_respects_class_and_cap(
        s in 2usize..=6,
        t in 3usize..=7,
        class_ix in 0usize..3,
        seed in any::<u64>(),
    ) {
        let class = GroupClass::ALL[class_ix];
        let k = class.multiplicity();
        let fill = (s * (t - 2)) / k * k;
        let inst = generate_instance(s, t, class, fill, seed).unwrap();
        prop_assert_eq!(inst.bay.container_count(), fill);
        prop_assert!((0..s).all(|i| inst.bay.height(i) <= t - 2));
        let groups = sorted_multiset(&inst.bay);
        for chunk in groups.chunks(k) {
            prop_assert!(chunk.iter().all(|&g| g == chunk[0]));
        }
        if fill > 0 {
            prop_assert_eq!(GroupClass::infer(&inst.bay), Some(class));
        }
        prop_assert_eq!(generate_instance(s, t, class, fill, seed).unwrap(), inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_matches_breadth_first_search(bay in bfs_bay()) {
        let res = solve_exact(&bay, None);
        prop_assert!(res.proven_optimal);
        prop_assert_eq!(res.length(), bfs_length(&bay));
        if let Some(sol) = &res.solution {
            prop_assert!(sorted(&state_of(&sol.replay(&bay).unwrap())));
            prop_assert!(sol.len() >= bay.blocking_count());
        }
    }

    #[test]
    fn examples_follow_the_solution(bay in bfs_bay()) {
        let inst = Instance::new("p", bay.clone());
        let Some(sol) = solve_exact(&bay, None).solution else {
            return Ok(());
        };
        let scale = 7.0;
        let (policy, value) = extract_examples(&inst, &sol, scale).unwrap();
        prop_assert_eq!(policy.len(), sol.len());
        for (ex, mv) in policy.iter().zip(&sol.moves) {
            let decoded = decode_bay(&ex.input, bay.stacks(), bay.tiers(), scale).unwrap();
            let target = index_move(ex.target, bay.stacks());
            prop_assert_eq!(target, *mv);
            prop_assert!(decoded.is_legal(target));
        }
        for w in value.windows(2) {
            prop_assert_eq!(w[0].target - 1.0, w[1].target);
        }
        if let Some(last) = value.last() {
            prop_assert_eq!(last.target, 1.0);
        }
    }

    #[test]
    fn masked_policy_is_a_distribution_over_legal_moves(
        (bay, seed) in small_bay(),
        prev in proptest::option::of((0usize..4, 0usize..4)),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = bay.stacks();
        let output: Vec<f64> = (0..s * (s - 1)).map(|_| rng.gen_range(-0.2..1.0)).collect();
        let previous = prev
            .filter(|&(f, t)| f < s && t < s && f != t)
            .map(|(f, t)| Move::new(f, t));
        match masked_policy(&output, &bay, previous) {
            Ok(ranked) => {
                let total: f64 = ranked.iter().map(|r| r.1).sum();
                prop_assert!((total - 1.0).abs() < 1e-6);
                let legal = bay.legal_moves(previous);
                prop_assert_eq!(ranked.len(), legal.len());
                prop_assert!(ranked.iter().all(|(m, p)| legal.contains(m) && *p >= 0.0));
                prop_assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
            }
            Err(e) => {
                prop_assert!(bay.legal_moves(previous).is_empty(), "{e}");
            }
        }
    }

    #[test]
    fn softmax_is_shift_invariant(
        logits in proptest::collection::vec(-30.0f64..30.0, 1..40),
        shift in -100.0f64..100.0,
    ) {
        let mut a = vec![0.0; logits.len()];
        let mut b = vec![0.0; logits.len()];
        softmax(&logits, &mut a);
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        softmax(&shifted, &mut b);
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        prop_assert!(a.iter().all(|&p| (0.0..=1.0).contains(&p)));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn policy_head_outputs_a_distribution((bay, seed) in small_bay()) {
        let arch = Architecture::uniform(2, 4, 2, 8).unwrap();
        let net = Network::new(bay.stacks(), bay.tiers(), Head::Policy, 6.0, &arch, seed).unwrap();
        let out = net.policy(&bay).unwrap();
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        prop_assert!(out.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn tier_scaling_commutes_with_stack_permutation(
        (bay, seed) in small_bay(),
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let (s, t) = (bay.stacks(), bay.tiers());
        let arch = Architecture::uniform(1, 3, 1, 4).unwrap();
        let mut net = Network::new(s, t, Head::Value, 6.0, &arch, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        for w in net.layers_mut()[0].weights.iter_mut() {
            *w = rng.gen_range(-2.0..2.0);
        }
        prop_assert_eq!(net.layers()[0].spec.kind, LayerKind::SharedTierScale);
        let mut perm: Vec<usize> = (0..s).collect();
        perm.shuffle(&mut rng);
        let permuted: Vec<Vec<Group>> = perm.iter().map(|&i| bay.stack(i).to_vec()).collect();
        let permuted = Bay::from_stacks(t, &permuted).unwrap();
        let a = &net.activations(&cpmp_dlts::encoding::encode_bay(&bay, 6.0)).unwrap()[0];
        let b = &net.activations(&cpmp_dlts::encoding::encode_bay(&permuted, 6.0)).unwrap()[0];
        for (new, &old) in perm.iter().enumerate() {
            prop_assert_eq!(&b[new * t..(new + 1) * t], &a[old * t..(old + 1) * t]);
        }
    }
}

fn random_policy_net(stacks: usize, tiers: usize, seed: u64) -> Network {
    let arch = Architecture::uniform(1, 4, 2, 16).unwrap();
    Network::new(stacks, tiers, Head::Policy, 6.0, &arch, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solutions_replay_and_incumbents_improve(
        bay in bfs_bay(),
        seed in any::<u64>(),
        strategy_ix in 0usize..3,
        p in 0.0f64..=1.0,
    ) {
        let net = random_policy_net(bay.stacks(), bay.tiers(), seed);
        let value = ExactValue::default();
        let config = SearchConfig {
            strategy: Search::ALL[strategy_ix],
            p,
            time_limit: None,
            ..Default::default()
        };
        let res = search(&bay, Models::new(&net, Some(&value)), &config).unwrap();
        prop_assert!(res.completed);
        if let Some(sol) = &res.solution {
            prop_assert!(sorted(&state_of(&sol.replay(&bay).unwrap())));
            prop_assert_eq!(res.ub(), Some(sol.len()));
            prop_assert_eq!(res.incumbents.last().map(|i| i.length), Some(sol.len()));
        } else {
            prop_assert!(res.incumbents.is_empty());
        }
        for w in res.incumbents.windows(2) {
            prop_assert!(w[1].length < w[0].length);
            prop_assert!(w[1].nodes_opened >= w[0].nodes_opened);
        }
    }

    #[test]
    fn wider_pruning_never_worsens_completed_searches(
        bay in bfs_bay(),
        seed in any::<u64>(),
        lds in any::<bool>(),
        mp_ix in 0usize..3,
    ) {
        let net = random_policy_net(bay.stacks(), bay.tiers(), seed);
        let mut last: Option<usize> = None;
        for p in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let config = SearchConfig {
                strategy: if lds { Search::Lds } else { Search::Dfs },
                mp: MpVariant::ALL[mp_ix],
                p,
                reactive_md: false,
                time_limit: None,
                ..Default::default()
            };
            let res = search(&bay, Models::new(&net, None), &config).unwrap();
            prop_assert!(res.completed);
            let ub = res.ub().unwrap_or(usize::MAX);
            if let Some(prev) = last {
                prop_assert!(ub <= prev, "p={p}: {ub} > {prev}");
            }
            last = Some(ub);
        }
    }

    #[test]
    fn stub_models_give_optimal_solutions(bay in bfs_bay(), strategy_ix in 0usize..3) {
        prop_assume!(bay.container_count() <= 5);
        let optimal = bfs_length(&bay);
        prop_assume!(optimal.is_some());
        let value = ExactValue::default();
        let config = SearchConfig {
            strategy: Search::ALL[strategy_ix],
            time_limit: None,
            ..Default::default()
        };
        let res = search(&bay, Models::new(&UniformPolicy, Some(&value)), &config).unwrap();
        prop_assert_eq!(res.ub(), optimal);
    }
}

#[test]
fn repeated_example_loss_settles_downwards() {
    let arch = Architecture::uniform(1, 4, 2, 8).unwrap();
    let mut net = Network::new(3, 4, Head::Policy, 6.0, &arch, 3).unwrap();
    let bay = Bay::from_stacks(4, &[vec![1, 3], vec![2], vec![]]).unwrap();
    let x = cpmp_dlts::encoding::encode_bay(&bay, 6.0);
    let mut adam = AdamState::new(
        &net,
        AdamConfig {
            learning_rate: 1e-3,
            ..Default::default()
        },
    );
    let batch = [(x.as_slice(), Target::Class(2))];
    let mut losses = Vec::new();
    for _ in 0..100 {
        let out = net.forward(&x).unwrap();
        losses.push(loss_cce(&out, &one_hot(2, 6)).unwrap());
        backward_and_step(&mut net, &mut adam, &batch).unwrap();
    }
    for w in losses[10..].windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
    assert!(losses[99] < losses[0]);
}
