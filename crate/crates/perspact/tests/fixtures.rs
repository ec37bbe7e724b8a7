//! Golden-file checks: the PDDL encodings, observation renderings, prompt
//! texts, and scripted model transcripts shipped in the repository must
//! match what the library produces today. Run with `UPDATE_GOLDENS=1` to
//! regenerate the files after an intentional change.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use perspact::agents::{MatcherPolicy, ReActPolicy, RuleBasedDirector, SingleShotPolicy};
use perspact::gateway::{
    director_system_prompt, matcher_initial_user_message, matcher_system_prompt,
    PlaybackTransport, RecordTransport, ScriptedTransport, Transport,
};
use perspact::harness::{run_trial, Outcome, TrialRecord};
use perspact::ids::matcher;
use perspact::planner::{plan_optimal, plan_stats};
use perspact::scenario::{reference_instance, Family, ScenarioInstance, DOMAIN_PDDL};
use perspact::world::render_observation;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn updating() -> bool {
    std::env::var("UPDATE_GOLDENS").is_ok_and(|v| !v.is_empty() && v != "0")
}

fn golden(path: &Path, content: &str) {
    if updating() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, content).unwrap();
        return;
    }
    let on_disk = fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("missing golden {} ({e}); run with UPDATE_GOLDENS=1", path.display()));
    assert_eq!(
        on_disk,
        content,
        "golden {} is stale; regenerate with UPDATE_GOLDENS=1",
        path.display()
    );
}

fn initial_observation(instance: &ScenarioInstance) -> String {
    render_observation(&instance.map, &instance.initial_state(), &matcher()).unwrap()
}

fn meta_text(instance: &ScenarioInstance) -> String {
    let plan = plan_optimal(instance).unwrap();
    let stats = plan_stats(&plan);
    let rendered: Vec<String> = plan.iter().map(|a| a.to_string()).collect();
    format!(
        "family: {}\nlabel: {}\ninstruction: {}\ntarget: {}\nmatcher: {}\ndirector: {}\noptimal: {}\nsteps: {} ({} ask, {} move)\n",
        instance.family,
        instance.family.label(),
        instance.instruction.rendered(),
        instance.target,
        instance.matcher_room(),
        instance.director_room(),
        rendered.join(" ; "),
        stats.steps,
        stats.asks,
        stats.moves,
    )
}

#[test]
fn pddl_fixtures_match_reference_instances() {
    let root = repo_root().join("scenarios/reference");
    golden(&root.join("domain.pddl"), DOMAIN_PDDL);
    for family in Family::ALL {
        let instance = reference_instance(family);
        let dir = root.join(family.to_string());
        golden(&dir.join("problem.pddl"), &instance.emit_problem());
        golden(&dir.join("meta.txt"), &meta_text(&instance));
    }
}

#[test]
fn observation_fixtures_match_renderer() {
    let root = repo_root().join("fixtures/observations");
    for family in Family::ALL {
        let instance = reference_instance(family);
        let mut text = initial_observation(&instance);
        text.push('\n');
        golden(&root.join(format!("{family}.txt")), &text);
    }
}

#[test]
fn prompt_fixtures_match_builders() {
    let root = repo_root().join("fixtures/prompts");
    for family in Family::ALL {
        let instance = reference_instance(family);
        let observation = initial_observation(&instance);
        let matcher_text = format!(
            "{}\n---\n{}\n",
            matcher_system_prompt(&instance),
            matcher_initial_user_message(&instance, &observation)
        );
        golden(&root.join(format!("matcher_{family}.txt")), &matcher_text);
        let mut director_text = director_system_prompt(&instance);
        director_text.push('\n');
        golden(&root.join(format!("director_{family}.txt")), &director_text);
    }
}

// ---------------------------------------------------------------------------
// Scripted model transcripts
// ---------------------------------------------------------------------------

enum Kind {
    SingleShot,
    React,
}

struct ScriptedCase {
    name: &'static str,
    family: Family,
    kind: Kind,
    /// What the "model" replies, call by call.
    responses: &'static [&'static str],
    expected_steps: u32,
}

/// Each case exercises one shipped transcript: an optimal ReAct run, a
/// ReAct run that stumbles into the unparseable-reply nudge, and a
/// single-shot run that needs one corrective reprompt.
fn scripted_cases() -> Vec<ScriptedCase> {
    vec![
        ScriptedCase {
            name: "react_far",
            family: Family::Far,
            kind: Kind::React,
            responses: &[
                "Two ties were mentioned and I only see one; I should clarify.\nask(\"Which one do you mean?\")",
                "The Director wants the red tie in the hallway.\nmove(hallway)",
                "The red tie is here.\ntake(tie_red)",
            ],
            expected_steps: 3,
        },
        ScriptedCase {
            name: "react_persp_reprompt",
            family: Family::Persp,
            kind: Kind::React,
            responses: &[
                "Hmm, there are two ties but the Director only sees one of them.",
                "ask(\"Which one do you mean?\")",
                "The red tie, which is in this room.\ntake(tie_red)",
            ],
            expected_steps: 2,
        },
        ScriptedCase {
            name: "single_shot_base",
            family: Family::Base,
            kind: Kind::SingleShot,
            responses: &["I will take the red tie.", "take(tie_red)"],
            expected_steps: 1,
        },
    ]
}

fn run_case(case: &ScriptedCase, transport: Arc<dyn Transport>) -> TrialRecord {
    let instance = reference_instance(case.family);
    let mut policy: Box<dyn MatcherPolicy> = match case.kind {
        Kind::SingleShot => Box::new(SingleShotPolicy::new(transport, "scripted-test", &instance)),
        Kind::React => Box::new(ReActPolicy::new(transport, "scripted-test", &instance)),
    };
    run_trial(&instance, 0, policy.as_mut(), &mut RuleBasedDirector, 15).unwrap()
}

#[test]
fn transcript_fixtures_replay_to_success() {
    let root = repo_root().join("fixtures/transcripts");
    for case in scripted_cases() {
        let path = root.join(format!("{}.jsonl", case.name));
        if updating() {
            fs::create_dir_all(&root).unwrap();
            let _ = fs::remove_file(&path);
            let scripted = ScriptedTransport::new(case.responses.iter().copied());
            let recorder: Arc<dyn Transport> =
                Arc::new(RecordTransport::new(Box::new(scripted), &path));
            let record = run_case(&case, recorder);
            assert_eq!(record.outcome, Outcome::Success, "{} while recording", case.name);
        }
        let playback: Arc<dyn Transport> =
            Arc::new(PlaybackTransport::keyed_from_path(&path).unwrap_or_else(|e| {
                panic!("loading {} failed ({e}); run with UPDATE_GOLDENS=1", path.display())
            }));
        let record = run_case(&case, playback);
        assert_eq!(record.outcome, Outcome::Success, "{} under playback", case.name);
        assert_eq!(record.stats.steps, case.expected_steps, "{}", case.name);
        assert_eq!(record.stats.first_take_correct, Some(true), "{}", case.name);

        let raw = fs::read_to_string(&path).unwrap();
        assert_eq!(
            raw.lines().count(),
            case.responses.len(),
            "{}: one transcript entry per model call",
            case.name
        );
        assert!(
            !raw.to_ascii_lowercase().contains("api") && !raw.contains("PERSPACT"),
            "{}: transcripts must not mention keys or key variables",
            case.name
        );
    }
}
