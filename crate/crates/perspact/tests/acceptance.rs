//! Acceptance gate for the benchmark. Each test checks one release
//! criterion end to end and prints a PASS/FAIL line for it (visible with
//! `cargo test --test acceptance -- --nocapture`). The expected numbers are
//! restated here as independent literals on purpose: they must not be
//! imported from the code under test.

use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use perspact::agents::{MatcherPolicy, ReActPolicy, RuleBasedDirector, SingleShotPolicy};
use perspact::gateway::{PlaybackTransport, Transport};
use perspact::harness::{
    emit_report, render_jsonl, run_suite, run_trial, summarize, write_jsonl, Outcome, PolicyKind,
    RunConfig, StepRecord, TrialRecord, TrialStats,
};
use perspact::ids::{matcher, ObjectId};
use perspact::planner::{brute_force_optimal, is_valid_plan, plan_optimal, plan_stats};
use perspact::scenario::{generate, reference_instance, validate, Family};
use perspact::world::{Action, WorldState};

/// (family, steps, asks, moves) for the optimal plan of each reference
/// instance.
const PLAN_SHAPES: [(Family, u32, u32, u32); 7] = [
    (Family::Base, 1, 0, 0),
    (Family::Persp, 2, 1, 0),
    (Family::Distractor, 2, 0, 1),
    (Family::Far, 3, 1, 1),
    (Family::Near, 2, 0, 1),
    (Family::Hidden, 2, 0, 1),
    (Family::NotThat, 2, 1, 0),
];

/// Percent of greedy-policy trials whose first take grabs the wrong object,
/// per family, on the reference suite.
const GREEDY_FIRST_TAKE_INCORRECT: [(Family, f64); 7] = [
    (Family::Base, 0.0),
    (Family::Persp, 0.0),
    (Family::Distractor, 100.0),
    (Family::Far, 100.0),
    (Family::Near, 0.0),
    (Family::Hidden, 0.0),
    (Family::NotThat, 100.0),
];

fn criterion(name: &str, f: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(()) => println!("PASS {name}"),
        Err(e) => {
            println!("FAIL {name}");
            resume_unwind(e);
        }
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

#[test]
fn a1_optimal_plan_shapes_match_expected_table() {
    criterion("a1 optimal plan shape per family (exact)", || {
        for (family, steps, asks, moves) in PLAN_SHAPES {
            let instance = reference_instance(family);
            let plan = plan_optimal(&instance).unwrap();
            is_valid_plan(&instance, &plan).unwrap();
            let stats = plan_stats(&plan);
            assert_eq!(
                (stats.steps, stats.asks, stats.moves),
                (steps, asks, moves),
                "{family}: optimal plan {plan:?}"
            );
        }
    });
}

#[test]
fn a2_planner_agrees_with_brute_force_oracle() {
    criterion("a2 planner equals brute-force oracle (references + 50 seeds/family, < 60 s)", || {
        let started = Instant::now();
        for family in Family::ALL {
            let reference = reference_instance(family);
            assert_eq!(
                plan_optimal(&reference).unwrap(),
                brute_force_optimal(&reference, 8).unwrap(),
                "{family} reference"
            );
            for seed in 0..50u64 {
                let instance = generate(family, seed).unwrap();
                assert_eq!(
                    plan_optimal(&instance).unwrap(),
                    brute_force_optimal(&instance, 8).unwrap(),
                    "{family} seed {seed}"
                );
            }
        }
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs() < 60, "oracle sweep took {elapsed:?}");
    });
}

#[test]
fn a3_generated_instances_are_valid_and_reproducible() {
    criterion("a3 generator validity and determinism (100 seeds/family)", || {
        for family in Family::ALL {
            for seed in 0..100u64 {
                let instance = generate(family, seed)
                    .unwrap_or_else(|e| panic!("{family} seed {seed}: {e}"));
                validate(&instance).unwrap_or_else(|e| panic!("{family} seed {seed}: {e}"));
                assert_eq!(
                    instance,
                    generate(family, seed).unwrap(),
                    "{family} seed {seed} not reproducible"
                );
            }
        }
    });
}

#[test]
fn a4_greedy_first_take_incorrect_pattern() {
    criterion("a4 greedy-literal first-take-incorrect pattern (0,0,100,100,0,0,100)", || {
        let config = RunConfig::new(PolicyKind::Greedy);
        let result = run_suite(&config, None).unwrap();
        assert_eq!(result.summary.families.len(), 7);
        for (summary, (family, pct)) in result.summary.families.iter().zip(GREEDY_FIRST_TAKE_INCORRECT) {
            assert_eq!(summary.family, family);
            assert_eq!(summary.take_trials, 1, "{family}: greedy must attempt a take");
            assert_eq!(summary.first_take_incorrect_pct, pct, "{family}");
        }
    });
}

#[test]
fn a5_plan_follower_succeeds_at_optimal_cost() {
    criterion("a5 plan-follower policy: 100% success at the optimal step counts", || {
        let config = RunConfig::new(PolicyKind::Plan);
        let result = run_suite(&config, None).unwrap();
        assert_eq!(result.summary.overall_success_pct, 100.0);
        for (record, (family, steps, asks, moves)) in result.records.iter().zip(PLAN_SHAPES) {
            assert_eq!(record.family, family);
            assert_eq!(record.outcome, Outcome::Success, "{family}");
            assert_eq!(
                (record.stats.steps, record.stats.asks, record.stats.moves),
                (steps, asks, moves),
                "{family}"
            );
            assert_eq!(record.stats.first_take_correct, Some(true), "{family}");
        }
    });
}

/// A synthetic record with just enough shape for the metrics rollup.
fn synthetic_record(
    family: Family,
    trial: u32,
    steps: u32,
    asks: u32,
    moves: u32,
    first_take_correct: Option<bool>,
    success: bool,
) -> TrialRecord {
    TrialRecord {
        family,
        trial,
        seed: trial as u64,
        policy: "synthetic".into(),
        instance: format!("{family}-{trial}"),
        target: ObjectId::new("tie_red"),
        steps: Vec::<StepRecord>::new(),
        outcome: if success {
            Outcome::Success
        } else {
            Outcome::StepLimit
        },
        stats: TrialStats {
            steps,
            asks,
            moves,
            opens: 0,
            rejections: 0,
            first_take_correct,
            success,
        },
        wall_ms: 0,
    }
}

#[test]
fn a6_metrics_rollup_matches_hand_computed_values() {
    criterion("a6 metrics oracle: 35 synthetic records, 3-of-5 wrong first takes = 60%", || {
        let mut records = Vec::new();
        for family in Family::ALL {
            records.push(synthetic_record(family, 0, 15, 0, 1, Some(false), false));
            records.push(synthetic_record(family, 1, 15, 0, 2, Some(false), false));
            records.push(synthetic_record(family, 2, 15, 0, 3, Some(false), false));
            records.push(synthetic_record(family, 3, 2, 1, 0, Some(true), true));
            records.push(synthetic_record(family, 4, 3, 1, 1, Some(true), true));
        }
        assert_eq!(records.len(), 35);
        let summary = summarize("synthetic", &records);
        for f in &summary.families {
            assert_eq!(f.trials, 5);
            assert_eq!(f.take_trials, 5);
            assert_eq!(f.first_take_incorrect_pct, 60.0, "{}", f.family);
            assert_eq!(f.success_pct, 40.0, "{}", f.family);
            assert_eq!(f.mean_steps, 10.0, "{}", f.family);
            assert_eq!(f.mean_asks, 0.4, "{}", f.family);
            assert_eq!(f.mean_moves, 1.4, "{}", f.family);
        }
        assert_eq!(summary.overall_success_pct, 40.0);

        // Trials that never take anything stay out of the first-take
        // denominator.
        let mixed = vec![
            synthetic_record(Family::Base, 0, 15, 0, 5, None, false),
            synthetic_record(Family::Base, 1, 15, 2, 5, None, false),
            synthetic_record(Family::Base, 2, 15, 0, 5, None, false),
            synthetic_record(Family::Base, 3, 15, 0, 2, Some(false), false),
            synthetic_record(Family::Base, 4, 1, 0, 0, Some(true), true),
        ];
        let summary = summarize("synthetic", &mixed);
        assert_eq!(summary.families[0].take_trials, 2);
        assert_eq!(summary.families[0].first_take_incorrect_pct, 50.0);
    });
}

#[test]
fn a7_runs_are_deterministic_and_parallel_agnostic() {
    criterion("a7 byte-identical logs and reports across reruns and worker counts", || {
        let config = RunConfig {
            trials: 4,
            generated: true,
            seed: 2024,
            ..RunConfig::new(PolicyKind::Greedy)
        };
        let first = run_suite(&config, None).unwrap();
        let second = run_suite(&config, None).unwrap();
        let parallel = run_suite(
            &RunConfig {
                parallel: 4,
                ..config.clone()
            },
            None,
        )
        .unwrap();

        let log = render_jsonl(&first.records);
        assert_eq!(log, render_jsonl(&second.records), "rerun changed the log");
        assert_eq!(log, render_jsonl(&parallel.records), "worker count changed the log");
        let report = emit_report(&first.summary);
        assert_eq!(report, emit_report(&second.summary));
        assert_eq!(report, emit_report(&parallel.summary));

        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        write_jsonl(&first.records, &a).unwrap();
        write_jsonl(&parallel.records, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    });
}

#[test]
fn a8_world_invariants_hold_under_random_action_fuzzing() {
    criterion("a8 simulator invariants over 10,000 random action sequences", || {
        let junk_rooms = ["bedroom", "hallway", "kitchen", "closet", "attic"];
        let junk_objects = ["tie_red", "tie_blue", "mug_green", "ghost"];
        let junk_containers = ["basket", "box", "door"];
        let mut rng = ChaCha8Rng::seed_from_u64(0xA8);
        let mut instances = Vec::new();
        for family in Family::ALL {
            for seed in 0..100u64 {
                instances.push(generate(family, seed).unwrap());
            }
        }
        for sequence in 0..10_000usize {
            let instance = &instances[sequence % instances.len()];
            let map = &instance.map;
            let mut state = WorldState::initial(map);
            for _ in 0..12 {
                let action = if rng.gen_bool(0.5) {
                    let legal = state.legal_actions(map, &matcher()).unwrap();
                    legal[rng.gen_range(0..legal.len())].clone()
                } else {
                    match rng.gen_range(0..4) {
                        0 => Action::move_to(junk_rooms[rng.gen_range(0..junk_rooms.len())]),
                        1 => Action::take(junk_objects[rng.gen_range(0..junk_objects.len())]),
                        2 => Action::open(junk_containers[rng.gen_range(0..junk_containers.len())]),
                        _ => Action::Ask {
                            question: String::new(),
                        },
                    }
                };
                let (next, _event) = state.apply(map, &matcher(), &action).unwrap();
                next.check_invariants(map)
                    .unwrap_or_else(|e| panic!("{}: {e} after {action}", instance.problem_name()));
                state = next;
            }
            // The Director must never be able to act.
            assert!(state.legal_actions(map, &perspact::ids::director()).unwrap().is_empty());
        }
    });
}

#[test]
fn a9_shipped_transcripts_replay_model_policies_to_success() {
    criterion("a9 model policies replay shipped transcripts to success", || {
        let root = repo_root().join("fixtures/transcripts");
        // (file, family, single-shot?, expected steps, model calls)
        let cases: [(&str, Family, bool, u32, usize); 3] = [
            ("react_far", Family::Far, false, 3, 3),
            ("react_persp_reprompt", Family::Persp, false, 2, 3),
            ("single_shot_base", Family::Base, true, 1, 2),
        ];
        for (name, family, single_shot, expected_steps, calls) in cases {
            let path = root.join(format!("{name}.jsonl"));
            let transport: Arc<dyn Transport> =
                Arc::new(PlaybackTransport::keyed_from_path(&path).unwrap());
            let instance = reference_instance(family);
            let mut policy: Box<dyn MatcherPolicy> = if single_shot {
                Box::new(SingleShotPolicy::new(transport, "scripted-test", &instance))
            } else {
                Box::new(ReActPolicy::new(transport, "scripted-test", &instance))
            };
            let record =
                run_trial(&instance, 0, policy.as_mut(), &mut RuleBasedDirector, 15).unwrap();
            assert_eq!(record.outcome, Outcome::Success, "{name}");
            assert_eq!(record.stats.steps, expected_steps, "{name}");
            assert_eq!(record.stats.first_take_correct, Some(true), "{name}");
            let lines = std::fs::read_to_string(&path).unwrap().lines().count();
            assert_eq!(lines, calls, "{name}: transcript entry per model call");
            if name.contains("reprompt") || single_shot {
                assert!(
                    lines as u32 > expected_steps,
                    "{name} must exercise the recovery path"
                );
            }
        }
    });
}
