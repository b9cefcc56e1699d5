mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use percept_core::engine::{BeliefState, CycleOutcome, Detail, Engine, FilterConfig, FusionModel};
use percept_core::evidence::Atom;
use percept_core::planner::{validate_pipeline, Planner};
use percept_core::query::{format_query, parse_query};
use percept_core::registry::Registry;
use percept_core::{scenarios, shipped};

fn kitchen_atoms() -> Vec<Atom> {
    FusionModel::kitchen().cpt.atoms().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn format_then_parse_is_identity(q in common::query()) {
        let text = format_query(&q);
        prop_assert_eq!(parse_query(&text).unwrap(), q, "{}", text);
    }

    #[test]
    fn formatting_is_a_fixed_point(q in common::query()) {
        let once = format_query(&q);
        let twice = format_query(&parse_query(&once).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn posteriors_are_normalized(picks in prop::collection::vec(any::<prop::sample::Index>(), 1..4)) {
        let atoms = kitchen_atoms();
        let evidence: Vec<Atom> = picks.iter().map(|i| atoms[i.index(atoms.len())].clone()).collect();
        let model = FusionModel::kitchen();
        if let Ok(post) = model.posterior(&evidence) {
            let sum: f64 = post.iter().map(|(_, p)| p).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(post.iter().all(|(_, p)| (0.0..=1.0).contains(p)));
            let (best, p) = model.argmax(&evidence).unwrap();
            prop_assert!(post.iter().all(|(c, q)| *q < p || (*q == p && c >= &best)));
        }
    }

    #[test]
    fn evidence_order_does_not_matter(picks in prop::collection::vec(any::<prop::sample::Index>(), 2..4)) {
        let atoms = kitchen_atoms();
        let evidence: Vec<Atom> = picks.iter().map(|i| atoms[i.index(atoms.len())].clone()).collect();
        let mut reversed = evidence.clone();
        reversed.reverse();
        let model = FusionModel::kitchen();
        prop_assert_eq!(model.argmax(&evidence).ok().map(|r| r.0), model.argmax(&reversed).ok().map(|r| r.0));
    }

    #[test]
    fn unknown_atoms_are_ignored(value in "[a-z]{3,8}") {
        let model = FusionModel::kitchen();
        let known = Atom::new("linemod", "Pot");
        let with_noise = [known.clone(), Atom::new("linemod", &format!("zz-{value}"))];
        prop_assert_eq!(model.posterior(&[known]).unwrap(), model.posterior(&with_noise).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planned_pipelines_are_valid_and_cover_the_request(seed in any::<u64>()) {
        let case = common::random_case(&mut ChaCha8Rng::seed_from_u64(seed));
        let planned = Planner::new(&case.registry, &case.robot).plan_needs(&case.needs);
        if let Ok(plan) = &planned {
            let names = plan.names();
            prop_assert!(validate_pipeline(&case.registry, &names, &case.robot).is_ok());
            prop_assert!(common::covers(&case.registry, &names, &case.needs));
            let mut unique = names.clone();
            unique.sort();
            unique.dedup();
            prop_assert_eq!(unique.len(), names.len());
        }
        prop_assert_eq!(planned.is_ok(), common::exhaustive_search(&case).is_some());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn filters_never_add_identities(seed in 0u64..1000, n in 3usize..12) {
        let reg = Registry::shipped(shipped::kitchen_kb()).unwrap();
        let robot = shipped::pr2();
        let ep = scenarios::pick_and_place_episode(n, seed);
        let run = |filters: FilterConfig| {
            let mut engine = Engine::new(&reg, &robot).with_filters(filters).with_seed(seed);
            let base = engine.planner().continuous_base().unwrap();
            let mut belief = BeliefState::new();
            let trajectory = engine.run_continuous(&ep, &base, &mut belief).unwrap();
            (belief, trajectory)
        };
        let (on, trajectory) = run(FilterConfig::on(&ep.task_regions));
        let (off, _) = run(FilterConfig::off());
        prop_assert!(on.len() <= off.len());
        for (_, outcome, _) in &trajectory {
            if let CycleOutcome::Processed(r) = outcome {
                let mut targets: Vec<&String> = r.assignments.iter().map(|(_, o)| o).collect();
                let before = targets.len();
                targets.sort();
                targets.dedup();
                prop_assert_eq!(before, targets.len(), "matching is one-to-one");
            }
        }
        // Ids only ever grow.
        for pair in trajectory.windows(2) {
            let (a, b) = (pair[0].2.ids(), pair[1].2.ids());
            prop_assert!(a.iter().all(|id| b.contains(id)));
        }
    }

    #[test]
    fn counting_floors_the_facing_width(extent in 10u32..95) {
        let reg = Registry::shipped(shipped::retail_kb()).unwrap();
        let robot = shipped::pr2();
        let ep = scenarios::retail_facing_episode(extent);
        let q = parse_query(
            "(count (object (detect (an object ((type 'ANXXXX') (pose (x y z qx qy qz qw)) (width 0.05))))))",
        ).unwrap();
        let mut engine = Engine::new(&reg, &robot);
        let mut belief = BeliefState::new();
        let a = engine.answer_query(&q, &ep, &mut belief).unwrap();
        let Detail::Counts(counts) = a.detail else { panic!("count detail") };
        let mm = f64::from(extent) * 5.0;
        prop_assert_eq!(counts.iter().map(|(_, n)| *n).collect::<Vec<_>>(), vec![(mm / 50.0).floor() as i64]);
    }
}
