//! Matcher policies and Director policies.
//!
//! Four matchers: a greedy literal baseline that takes the first object
//! matching the instruction's noun, an oracle that replays the planner's
//! optimal plan, and two model-backed policies (single-shot and ReAct)
//! speaking the command grammar over a [`Transport`].
//!
//! Matcher policies other than the plan follower must decide from the
//! instruction, the floor plan, and their observations alone — never from
//! the instance's target field. The plan follower is the deliberate
//! exception: it exists to certify that optimal plans execute.
//!
//! Two directors: a rule-based oracle that answers truthfully from the
//! scenario ground truth, and a model-backed one prompted strictly with the
//! Director's own view. Benchmarks and tests use the rule-based one; the
//! model director is for live experimentation only.

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use regex::Regex;
use thiserror::Error;

use crate::gateway::{
    director_system_prompt, matcher_initial_user_message, matcher_system_prompt, ChatExchange,
    GatewayError, Transport,
};
use crate::ids::{LocationId, ObjectId};
use crate::scenario::{truthful_answer, DirectorAnswer, ScenarioInstance};
use crate::world::{
    noun_phrase, Action, Proximity, StepEvent, VisibilityReport, WorldState,
};

/// Reprompts the single-shot policy grants before giving up on a step.
pub const SINGLE_SHOT_REPROMPTS: u32 = 3;
/// Model calls the ReAct policy may spend on one environment step.
pub const REACT_CALLS_PER_STEP: u32 = 5;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("protocol failure after {attempts} model calls: {detail}")]
    Protocol { attempts: u32, detail: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("planning failed: {0}")]
    Planning(String),
}

// ---------------------------------------------------------------------------
// Command grammar
// ---------------------------------------------------------------------------

/// What a policy wants to do this step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentCommand {
    Act(Action),
    /// The agent believes the task is finished. The harness verifies.
    Done,
}

/// A parsed policy output: optional free-form reasoning plus one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDecision {
    pub thought: Option<String>,
    pub command: AgentCommand,
}

impl ParsedDecision {
    pub fn act(action: Action) -> Self {
        Self {
            thought: None,
            command: AgentCommand::Act(action),
        }
    }
}

#[derive(Debug, Error)]
#[error("no command found in `{line}`")]
pub struct ParseError {
    pub line: String,
}

struct CommandGrammar {
    move_re: Regex,
    open_re: Regex,
    take_re: Regex,
    ask_re: Regex,
    done_re: Regex,
}

fn grammar() -> &'static CommandGrammar {
    static GRAMMAR: OnceLock<CommandGrammar> = OnceLock::new();
    GRAMMAR.get_or_init(|| {
        let prefix = r"(?i)^(?:action:\s*)?";
        CommandGrammar {
            move_re: Regex::new(&format!(r"{prefix}move\(\s*([A-Za-z0-9_-]+)\s*\)\.?$")).unwrap(),
            open_re: Regex::new(&format!(r"{prefix}open\(\s*([A-Za-z0-9_-]+)\s*\)\.?$")).unwrap(),
            take_re: Regex::new(&format!(r"{prefix}take\(\s*([A-Za-z0-9_-]+)\s*\)\.?$")).unwrap(),
            ask_re: Regex::new(&format!(
                r#"{prefix}ask\(\s*(?:"([^"]*)"|'([^']*)')\s*\)\.?$"#
            ))
            .unwrap(),
            done_re: Regex::new(&format!(r"{prefix}done\.?$")).unwrap(),
        }
    })
}

/// Parses model output: the last non-empty line must be a command
/// (`move(<room>)`, `open(<container>)`, `take(<object>)`,
/// `ask("<question>")`, or `done`, case-insensitive, with an optional
/// `Action:` prefix); everything above it is kept as the thought.
pub fn parse_agent_output(text: &str) -> Result<ParsedDecision, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let last_idx = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .ok_or_else(|| ParseError {
            line: String::new(),
        })?;
    let line = lines[last_idx].trim();
    let g = grammar();

    let command = if let Some(c) = g.move_re.captures(line) {
        AgentCommand::Act(Action::Move {
            to: LocationId::new(c[1].to_ascii_lowercase()),
        })
    } else if let Some(c) = g.open_re.captures(line) {
        AgentCommand::Act(Action::Open {
            container: crate::ids::ContainerId::new(c[1].to_ascii_lowercase()),
        })
    } else if let Some(c) = g.take_re.captures(line) {
        AgentCommand::Act(Action::Take {
            object: ObjectId::new(c[1].to_ascii_lowercase()),
        })
    } else if let Some(c) = g.ask_re.captures(line) {
        let q = c.get(1).or_else(|| c.get(2)).map(|m| m.as_str()).unwrap_or("");
        AgentCommand::Act(Action::Ask {
            question: q.to_string(),
        })
    } else if g.done_re.is_match(line) {
        AgentCommand::Done
    } else {
        return Err(ParseError {
            line: line.to_string(),
        });
    };

    let thought_text = lines[..last_idx].join("\n");
    let thought_text = thought_text.trim();
    Ok(ParsedDecision {
        thought: (!thought_text.is_empty()).then(|| thought_text.to_string()),
        command,
    })
}

// ---------------------------------------------------------------------------
// Matcher policies
// ---------------------------------------------------------------------------

/// The result of the previous step, fed back to the policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feedback {
    pub event: StepEvent,
    pub answer: Option<DirectorAnswer>,
}

/// Everything the policy is shown for one step. Deliberately excludes the
/// true world state.
pub struct StepContext<'a> {
    pub step: u32,
    pub observation: &'a str,
    pub report: &'a VisibilityReport,
    pub last: Option<&'a Feedback>,
}

pub trait MatcherPolicy {
    fn name(&self) -> &'static str;
    fn next_command(&mut self, ctx: &StepContext<'_>) -> Result<ParsedDecision, PolicyError>;
}

// --- greedy literal ---------------------------------------------------------

/// Takes the first visible object whose noun matches the instruction,
/// ignoring attributes entirely: nearest first, free-standing before
/// containered, then id order. When nothing matches it explores the nearest
/// unvisited room, and only asks once the whole floor plan is exhausted.
/// The classic literal-reader baseline: fast, confident, and wrong whenever
/// perspective or attributes carry the meaning.
pub struct GreedyLiteralPolicy {
    instance: ScenarioInstance,
    visited: BTreeSet<LocationId>,
    answer: Option<DirectorAnswer>,
}

impl GreedyLiteralPolicy {
    pub fn new(instance: &ScenarioInstance) -> Self {
        Self {
            instance: instance.clone(),
            visited: BTreeSet::new(),
            answer: None,
        }
    }
}

impl MatcherPolicy for GreedyLiteralPolicy {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn next_command(&mut self, ctx: &StepContext<'_>) -> Result<ParsedDecision, PolicyError> {
        let here = ctx.report.viewer_room.clone();
        self.visited.insert(here.clone());
        if let Some(feedback) = ctx.last {
            if let Some(answer) = &feedback.answer {
                self.answer = Some(answer.clone());
            }
        }

        let noun = self.instance.instruction.noun.as_str();
        let mut matches: Vec<_> = ctx
            .report
            .items
            .iter()
            .filter(|i| i.object.noun_attribute().0 == noun)
            .collect();
        matches.sort_by_key(|i| {
            (
                matches!(i.proximity, Proximity::Adjacent),
                i.container.is_some(),
                i.object.clone(),
            )
        });
        if let Some(pick) = matches.first() {
            let decision = if pick.proximity == Proximity::Here {
                Action::Take {
                    object: pick.object.clone(),
                }
            } else {
                Action::Move {
                    to: pick.room.clone(),
                }
            };
            return Ok(ParsedDecision::act(decision));
        }

        // nothing matching in sight: explore the nearest unvisited room
        let unexplored = self
            .instance
            .map
            .locations
            .iter()
            .filter(|l| !self.visited.contains(l))
            .min_by_key(|l| (self.instance.map.distance(&here, l).unwrap_or(u32::MAX), (*l).clone()));
        if let Some(goal) = unexplored {
            if let Some(step) = self.instance.map.step_toward(&here, goal) {
                return Ok(ParsedDecision::act(Action::Move { to: step }));
            }
        }

        // floor plan exhausted: ask once, then walk to the room the answer
        // names
        match &self.answer {
            None => Ok(ParsedDecision::act(Action::ask_canonical())),
            Some(answer) => match &answer.location {
                Some(room) if *room != here => {
                    match self.instance.map.step_toward(&here, room) {
                        Some(step) => Ok(ParsedDecision::act(Action::Move { to: step })),
                        None => Ok(ParsedDecision {
                            thought: None,
                            command: AgentCommand::Done,
                        }),
                    }
                }
                _ => Ok(ParsedDecision {
                    thought: None,
                    command: AgentCommand::Done,
                }),
            },
        }
    }
}

// --- plan follower -----------------------------------------------------------

/// Replays the epistemic planner's optimal plan verbatim.
pub struct PlanFollowerPolicy {
    plan: Vec<Action>,
    cursor: usize,
}

impl PlanFollowerPolicy {
    pub fn new(instance: &ScenarioInstance) -> Result<Self, PolicyError> {
        let plan =
            crate::planner::plan_optimal(instance).map_err(|e| PolicyError::Planning(e.to_string()))?;
        Ok(Self { plan, cursor: 0 })
    }
}

impl MatcherPolicy for PlanFollowerPolicy {
    fn name(&self) -> &'static str {
        "plan"
    }

    fn next_command(&mut self, _ctx: &StepContext<'_>) -> Result<ParsedDecision, PolicyError> {
        match self.plan.get(self.cursor) {
            Some(action) => {
                self.cursor += 1;
                Ok(ParsedDecision::act(action.clone()))
            }
            None => Ok(ParsedDecision {
                thought: None,
                command: AgentCommand::Done,
            }),
        }
    }
}

// --- model-backed policies ---------------------------------------------------

const GRAMMAR_REMINDER: &str = "Reply with exactly one command on the last line: \
move(<room>) | open(<container>) | take(<object>) | ask(\"<question>\") | done";

/// Renders the previous step's outcome as the next user message.
fn feedback_text(feedback: &Feedback, observation: &str) -> String {
    let event_line = match &feedback.event {
        StepEvent::Moved { to, .. } => format!("You moved to the {to}."),
        StepEvent::Opened { container } => format!("You opened the {container}."),
        StepEvent::Took { object } => format!("You picked up {}.", noun_phrase(object)),
        StepEvent::Asked { .. } => match &feedback.answer {
            Some(a) => format!("The Director answers: \"{}\"", a.text),
            None => "The Director does not answer.".to_string(),
        },
        StepEvent::Rejected { reason } => format!("Your command was rejected: {reason}."),
    };
    format!("{event_line}\n{observation}")
}

fn push_step_message(
    exchange: &mut ChatExchange,
    instance: &ScenarioInstance,
    ctx: &StepContext<'_>,
    started: &mut bool,
) {
    let msg = if *started {
        match ctx.last {
            Some(feedback) => feedback_text(feedback, ctx.observation),
            None => ctx.observation.to_string(),
        }
    } else {
        matcher_initial_user_message(instance, ctx.observation)
    };
    *started = true;
    exchange.push_user(&msg);
}

/// One model call per step; malformed output earns up to
/// [`SINGLE_SHOT_REPROMPTS`] corrective retries before the step fails.
pub struct SingleShotPolicy {
    instance: ScenarioInstance,
    transport: Arc<dyn Transport>,
    exchange: ChatExchange,
    started: bool,
}

impl SingleShotPolicy {
    pub fn new(transport: Arc<dyn Transport>, model: &str, instance: &ScenarioInstance) -> Self {
        Self {
            instance: instance.clone(),
            transport,
            exchange: ChatExchange::new(model, &matcher_system_prompt(instance)),
            started: false,
        }
    }

    /// The conversation so far (for logging and transcript capture).
    pub fn exchange(&self) -> &ChatExchange {
        &self.exchange
    }
}

impl MatcherPolicy for SingleShotPolicy {
    fn name(&self) -> &'static str {
        "single-shot"
    }

    fn next_command(&mut self, ctx: &StepContext<'_>) -> Result<ParsedDecision, PolicyError> {
        push_step_message(&mut self.exchange, &self.instance, ctx, &mut self.started);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let reply = self.transport.complete(&self.exchange)?;
            self.exchange.push_assistant(&reply);
            match parse_agent_output(&reply) {
                Ok(decision) => return Ok(decision),
                Err(err) if attempts <= SINGLE_SHOT_REPROMPTS => {
                    self.exchange
                        .push_user(&format!("{err}. {GRAMMAR_REMINDER}"));
                }
                Err(err) => {
                    return Err(PolicyError::Protocol {
                        attempts,
                        detail: err.to_string(),
                    });
                }
            }
        }
    }
}

/// Thought/action loop: the model may spend up to [`REACT_CALLS_PER_STEP`]
/// completions reasoning before it commits to a command; replies without a
/// command line are kept as thoughts and answered with a nudge.
pub struct ReActPolicy {
    instance: ScenarioInstance,
    transport: Arc<dyn Transport>,
    exchange: ChatExchange,
    started: bool,
}

impl ReActPolicy {
    pub fn new(transport: Arc<dyn Transport>, model: &str, instance: &ScenarioInstance) -> Self {
        Self {
            instance: instance.clone(),
            transport,
            exchange: ChatExchange::new(model, &matcher_system_prompt(instance)),
            started: false,
        }
    }

    pub fn exchange(&self) -> &ChatExchange {
        &self.exchange
    }
}

impl MatcherPolicy for ReActPolicy {
    fn name(&self) -> &'static str {
        "react"
    }

    fn next_command(&mut self, ctx: &StepContext<'_>) -> Result<ParsedDecision, PolicyError> {
        push_step_message(&mut self.exchange, &self.instance, ctx, &mut self.started);
        let mut thoughts: Vec<String> = Vec::new();
        for call in 1..=REACT_CALLS_PER_STEP {
            let reply = self.transport.complete(&self.exchange)?;
            self.exchange.push_assistant(&reply);
            match parse_agent_output(&reply) {
                Ok(mut decision) => {
                    if let Some(t) = decision.thought.take() {
                        thoughts.push(t);
                    }
                    decision.thought = (!thoughts.is_empty()).then(|| thoughts.join("\n"));
                    return Ok(decision);
                }
                Err(_) if call < REACT_CALLS_PER_STEP => {
                    thoughts.push(reply.trim().to_string());
                    self.exchange.push_user(&format!(
                        "No command found in that reply. Think as long as you need, \
                         then finish with a command line. {GRAMMAR_REMINDER}"
                    ));
                }
                Err(err) => {
                    return Err(PolicyError::Protocol {
                        attempts: call,
                        detail: err.to_string(),
                    });
                }
            }
        }
        unreachable!("loop returns on success or final error");
    }
}

// ---------------------------------------------------------------------------
// Director policies
// ---------------------------------------------------------------------------

pub trait DirectorPolicy {
    fn name(&self) -> &'static str;
    fn answer(
        &mut self,
        instance: &ScenarioInstance,
        state: &WorldState,
        question: &str,
    ) -> Result<DirectorAnswer, PolicyError>;
}

/// Ground-truth Director: always names the target's attribute and current
/// room, whatever the question. This is the Director used by every
/// benchmark run and test.
pub struct RuleBasedDirector;

impl DirectorPolicy for RuleBasedDirector {
    fn name(&self) -> &'static str {
        "rule-director"
    }

    fn answer(
        &mut self,
        instance: &ScenarioInstance,
        state: &WorldState,
        _question: &str,
    ) -> Result<DirectorAnswer, PolicyError> {
        Ok(truthful_answer(instance, state))
    }
}

/// Model-backed Director for live experimentation. Prompted only with its
/// own view; the reply's constraint content is recovered by matching known
/// attribute and room vocabulary. Never used in benchmark acceptance runs.
pub struct ModelDirector {
    transport: Arc<dyn Transport>,
    exchange: ChatExchange,
}

impl ModelDirector {
    pub fn new(transport: Arc<dyn Transport>, model: &str, instance: &ScenarioInstance) -> Self {
        Self {
            transport,
            exchange: ChatExchange::new(model, &director_system_prompt(instance)),
        }
    }
}

impl DirectorPolicy for ModelDirector {
    fn name(&self) -> &'static str {
        "model-director"
    }

    fn answer(
        &mut self,
        instance: &ScenarioInstance,
        _state: &WorldState,
        question: &str,
    ) -> Result<DirectorAnswer, PolicyError> {
        self.exchange
            .push_user(&format!("The Matcher asks: \"{question}\""));
        let reply = self.transport.complete(&self.exchange)?;
        self.exchange.push_assistant(&reply);

        // recover constraints by vocabulary match against the reply
        let lower = reply.to_ascii_lowercase();
        let word = |w: &str| {
            lower
                .split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
                .any(|t| t == w)
        };
        let attrs: BTreeSet<&str> = instance
            .map
            .objects
            .keys()
            .filter(|o| o.noun_attribute().0 == instance.instruction.noun)
            .filter_map(|o| o.noun_attribute().1)
            .collect();
        let named_attrs: Vec<&str> = attrs.iter().copied().filter(|a| word(a)).collect();
        let named_rooms: Vec<&LocationId> = instance
            .map
            .locations
            .iter()
            .filter(|l| word(l.as_str()))
            .collect();
        Ok(DirectorAnswer {
            text: reply.trim().to_string(),
            attribute: match named_attrs.as_slice() {
                [only] => Some((*only).to_string()),
                _ => None,
            },
            location: match named_rooms.as_slice() {
                [only] => Some((*only).clone()),
                _ => None,
            },
        })
    }
}
