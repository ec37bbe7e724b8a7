//! Epistemic planner: tracks what the Matcher has seen and been told, and
//! searches the joint (world, knowledge) space for the shortest plan whose
//! takes are epistemically justified.
//!
//! A take is justified only when the candidate set — observed objects
//! consistent with the instruction and every Director answer so far — is a
//! singleton containing the taken object. Guessing between two candidates
//! is never part of a valid plan, even when the guess would be lucky.
//!
//! Two search procedures are provided. [`plan_optimal`] runs A* under an
//! admissible, consistent heuristic to find the optimal length, then
//! enumerates every valid plan of that length and keeps the one with the
//! fewest asks, then fewest moves, then the lexicographically first action
//! sequence (asks sort before moves). [`brute_force_optimal`] is a
//! deliberately naive iterative-deepening enumeration with no heuristic and
//! no duplicate detection, kept as an independent cross-check.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{matcher, ContainerId, LocationId, ObjectId};
use crate::scenario::{truthful_answer, DirectorAnswer, InstructionDescriptor, ScenarioInstance};
use crate::world::{visible_set, Action, StepEvent, VisibilityReport, WorldState};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no valid plan within {cap} steps")]
    NoPlan { cap: u32 },
    #[error(transparent)]
    World(#[from] crate::world::WorldError),
    #[error("invalid plan at step {step} ({action}): {reason}")]
    InvalidPlan {
        step: usize,
        action: Action,
        reason: String,
    },
}

/// Default search horizon. Family plans are 1–3 steps; anything deeper is a
/// modelling bug, not a hard scenario.
pub const DEFAULT_PLAN_CAP: u32 = 8;

// ---------------------------------------------------------------------------
// Knowledge
// ---------------------------------------------------------------------------

/// One piece of constraint content extracted from a Director answer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AnswerFact {
    pub attribute: Option<String>,
    pub location: Option<LocationId>,
}

/// What the Matcher knows: the instruction, every object and container it
/// has ever seen (objects never move until the final take, so sightings
/// stay fresh), and the answers received. `asked` counts questions but is
/// excluded from equality and hashing — asking the same question twice
/// yields the same knowledge, which lets search prune repeat asks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnowledgeState {
    pub instruction: InstructionDescriptor,
    /// Object -> room it was seen in (through an open container if needed).
    pub observed: BTreeMap<ObjectId, LocationId>,
    pub seen_containers: BTreeMap<ContainerId, LocationId>,
    pub answers: BTreeSet<AnswerFact>,
    pub asked: u32,
}

impl PartialEq for KnowledgeState {
    fn eq(&self, other: &Self) -> bool {
        self.instruction == other.instruction
            && self.observed == other.observed
            && self.seen_containers == other.seen_containers
            && self.answers == other.answers
    }
}

impl Eq for KnowledgeState {}

impl Hash for KnowledgeState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.instruction.hash(state);
        self.observed.hash(state);
        self.seen_containers.hash(state);
        self.answers.hash(state);
    }
}

impl KnowledgeState {
    pub fn new(instruction: InstructionDescriptor) -> Self {
        Self {
            instruction,
            observed: BTreeMap::new(),
            seen_containers: BTreeMap::new(),
            answers: BTreeSet::new(),
            asked: 0,
        }
    }

    /// Initial knowledge for an instance: the instruction plus whatever the
    /// Matcher sees from its starting room.
    pub fn initial(instance: &ScenarioInstance) -> Self {
        let mut k = Self::new(instance.instruction.clone());
        let state = instance.initial_state();
        let report =
            visible_set(&instance.map, &state, &matcher()).expect("matcher exists in instance");
        k.observe(&report);
        k
    }

    /// Merges a visibility report. Sightings are persistent.
    pub fn observe(&mut self, report: &VisibilityReport) {
        for item in &report.items {
            self.observed.insert(item.object.clone(), item.room.clone());
        }
        for c in &report.containers {
            self.seen_containers
                .insert(c.container.clone(), c.room.clone());
        }
    }

    pub fn absorb_answer(&mut self, answer: &DirectorAnswer) {
        self.answers.insert(AnswerFact {
            attribute: answer.attribute.clone(),
            location: answer.location.clone(),
        });
        self.asked += 1;
    }

    fn satisfies(&self, object: &ObjectId, room: &LocationId) -> bool {
        if !self.instruction.matches(object) {
            return false;
        }
        let (_, attr) = object.noun_attribute();
        self.answers.iter().all(|fact| {
            let attr_ok = match &fact.attribute {
                Some(a) => attr == Some(a.as_str()),
                None => true,
            };
            let room_ok = match &fact.location {
                Some(l) => l == room,
                None => true,
            };
            attr_ok && room_ok
        })
    }

    /// Observed objects consistent with the instruction and every answer.
    pub fn candidate_set(&self) -> BTreeSet<ObjectId> {
        self.observed
            .iter()
            .filter(|(o, room)| self.satisfies(o, room))
            .map(|(o, _)| o.clone())
            .collect()
    }

    /// The room the target is known to be in: the sole candidate's sighting
    /// room, or a room named in an answer. `None` while the target could be
    /// anywhere.
    pub fn known_target_room(&self) -> Option<LocationId> {
        let candidates = self.candidate_set();
        if candidates.len() == 1 {
            let only = candidates.iter().next().expect("len checked");
            return self.observed.get(only).cloned();
        }
        self.answers.iter().find_map(|f| f.location.clone())
    }

    /// Whether taking `object` is epistemically justified right now.
    pub fn take_justified(&self, object: &ObjectId) -> bool {
        let candidates = self.candidate_set();
        candidates.len() == 1 && candidates.contains(object)
    }
}

// ---------------------------------------------------------------------------
// Joint search space
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Hash)]
struct Node {
    world: WorldState,
    knowledge: KnowledgeState,
}

impl Node {
    fn initial(instance: &ScenarioInstance) -> Self {
        Node {
            world: instance.initial_state(),
            knowledge: KnowledgeState::initial(instance),
        }
    }

    fn is_goal(&self, instance: &ScenarioInstance) -> bool {
        self.world.held == Some((matcher(), instance.target.clone()))
    }
}

/// Actions worth exploring from a node, with the epistemic gate applied to
/// takes. Wrong-guess takes are not successors: they can never be part of a
/// valid plan.
fn successors(instance: &ScenarioInstance, node: &Node) -> Vec<(Action, Node)> {
    let map = &instance.map;
    let legal = node
        .world
        .legal_actions(map, &matcher())
        .expect("matcher exists");
    let mut out = Vec::new();
    for action in legal {
        if let Action::Take { object } = &action {
            if !node.knowledge.take_justified(object) {
                continue;
            }
        }
        let (world, event) = node
            .world
            .apply(map, &matcher(), &action)
            .expect("matcher exists");
        debug_assert!(!event.is_rejection(), "legal action rejected: {action}");
        let mut knowledge = node.knowledge.clone();
        if let StepEvent::Asked { .. } = event {
            knowledge.absorb_answer(&truthful_answer(instance, &node.world));
        }
        if let Ok(report) = visible_set(map, &world, &matcher()) {
            knowledge.observe(&report);
        }
        out.push((action, Node { world, knowledge }));
    }
    out
}

/// Admissible, consistent heuristic: rooms still to cross to reach the
/// target's known room, plus one for the take itself; just the take when
/// the target's room is unknown; zero once the target is in hand.
pub fn heuristic(instance: &ScenarioInstance, world: &WorldState, knowledge: &KnowledgeState) -> u32 {
    if world.held == Some((matcher(), instance.target.clone())) {
        return 0;
    }
    let here = &world.agent_pos[&matcher()];
    match knowledge.known_target_room() {
        Some(room) => instance.map.distance(here, &room).unwrap_or(0) + 1,
        None => 1,
    }
}

// ---------------------------------------------------------------------------
// Plan utilities
// ---------------------------------------------------------------------------

/// Step / ask / move counts of a plan, the quantities reported per family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStats {
    pub steps: u32,
    pub asks: u32,
    pub moves: u32,
}

pub fn plan_stats(plan: &[Action]) -> PlanStats {
    PlanStats {
        steps: plan.len() as u32,
        asks: plan.iter().filter(|a| matches!(a, Action::Ask { .. })).count() as u32,
        moves: plan.iter().filter(|a| matches!(a, Action::Move { .. })).count() as u32,
    }
}

/// Sort key for tie-breaking between equally short plans: ask-first, then
/// the action's rendered form.
fn action_key(action: &Action) -> (u8, String) {
    let rank = match action {
        Action::Ask { .. } => 0,
        Action::Move { .. } => 1,
        Action::Open { .. } => 2,
        Action::Take { .. } => 3,
    };
    (rank, action.to_string())
}

fn plan_key(plan: &[Action]) -> (u32, u32, Vec<(u8, String)>) {
    let stats = plan_stats(plan);
    (stats.asks, stats.moves, plan.iter().map(action_key).collect())
}

fn better_plan(a: &[Action], b: &[Action]) -> Ordering {
    plan_key(a).cmp(&plan_key(b))
}

/// Replays a plan, enforcing executability, the epistemic gate on every
/// take, and final success.
pub fn is_valid_plan(instance: &ScenarioInstance, plan: &[Action]) -> Result<(), PlanError> {
    let mut node = Node::initial(instance);
    for (step, action) in plan.iter().enumerate() {
        if let Action::Take { object } = action {
            if !node.knowledge.take_justified(object) {
                let n = node.knowledge.candidate_set().len();
                return Err(PlanError::InvalidPlan {
                    step,
                    action: action.clone(),
                    reason: format!("take not justified: {n} candidates in view"),
                });
            }
        }
        let (world, event) = node.world.apply(&instance.map, &matcher(), action)?;
        if let StepEvent::Rejected { reason } = &event {
            return Err(PlanError::InvalidPlan {
                step,
                action: action.clone(),
                reason: reason.clone(),
            });
        }
        let mut knowledge = node.knowledge;
        if let StepEvent::Asked { .. } = event {
            knowledge.absorb_answer(&truthful_answer(instance, &node.world));
        }
        if let Ok(report) = visible_set(&instance.map, &world, &matcher()) {
            knowledge.observe(&report);
        }
        node = Node { world, knowledge };
    }
    if node.is_goal(instance) {
        Ok(())
    } else {
        Err(PlanError::InvalidPlan {
            step: plan.len(),
            action: Action::ask_canonical(),
            reason: "plan ends without holding the target".into(),
        })
    }
}

// ---------------------------------------------------------------------------
// A* + exhaustive enumeration at the optimal length
// ---------------------------------------------------------------------------

struct OpenEntry {
    f: u32,
    g: u32,
    order: u64,
    node: Node,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.g == other.g && self.order == other.order
    }
}
impl Eq for OpenEntry {}
impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap by f, then insertion order for determinism
        other
            .f
            .cmp(&self.f)
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// Optimal plan length via A*, or `None` within the cap.
fn astar_optimal_length(instance: &ScenarioInstance, cap: u32) -> Option<u32> {
    let start = Node::initial(instance);
    if start.is_goal(instance) {
        return Some(0);
    }
    let mut open = BinaryHeap::new();
    let mut best_g: HashMap<Node, u32> = HashMap::new();
    let h0 = heuristic(instance, &start.world, &start.knowledge);
    best_g.insert(start.clone(), 0);
    let mut order = 0u64;
    open.push(OpenEntry {
        f: h0,
        g: 0,
        order,
        node: start,
    });
    while let Some(entry) = open.pop() {
        if entry.g > *best_g.get(&entry.node).unwrap_or(&u32::MAX) {
            continue; // stale entry
        }
        if entry.node.is_goal(instance) {
            return Some(entry.g);
        }
        if entry.g >= cap {
            continue;
        }
        for (_, next) in successors(instance, &entry.node) {
            let g = entry.g + 1;
            if g < *best_g.get(&next).unwrap_or(&u32::MAX) {
                let h = heuristic(instance, &next.world, &next.knowledge);
                best_g.insert(next.clone(), g);
                order += 1;
                open.push(OpenEntry {
                    f: g + h,
                    g,
                    order,
                    node: next,
                });
            }
        }
    }
    None
}

/// Depth-first enumeration of every valid plan of exactly `length` steps,
/// pruned by the heuristic. Calls `found` for each complete plan.
fn enumerate_plans(
    instance: &ScenarioInstance,
    node: &Node,
    length: u32,
    prefix: &mut Vec<Action>,
    found: &mut dyn FnMut(&[Action]),
) {
    if prefix.len() as u32 == length {
        if node.is_goal(instance) {
            found(prefix);
        }
        return;
    }
    if node.is_goal(instance) {
        return; // goal reached early; only exact-length plans count
    }
    let remaining = length - prefix.len() as u32;
    if heuristic(instance, &node.world, &node.knowledge) > remaining {
        return;
    }
    for (action, next) in successors(instance, node) {
        prefix.push(action);
        enumerate_plans(instance, &next, length, prefix, found);
        prefix.pop();
    }
}

/// The canonical optimal plan: shortest overall, then fewest asks, fewest
/// moves, lexicographically first (asks ordered before moves).
pub fn plan_optimal(instance: &ScenarioInstance) -> Result<Vec<Action>, PlanError> {
    plan_optimal_capped(instance, DEFAULT_PLAN_CAP)
}

pub fn plan_optimal_capped(instance: &ScenarioInstance, cap: u32) -> Result<Vec<Action>, PlanError> {
    let length = astar_optimal_length(instance, cap).ok_or(PlanError::NoPlan { cap })?;
    let start = Node::initial(instance);
    let mut best: Option<Vec<Action>> = None;
    let mut prefix = Vec::new();
    enumerate_plans(instance, &start, length, &mut prefix, &mut |plan| {
        if best.as_deref().is_none_or(|b| better_plan(plan, b) == Ordering::Less) {
            best = Some(plan.to_vec());
        }
    });
    best.ok_or(PlanError::NoPlan { cap })
}

// ---------------------------------------------------------------------------
// Independent oracle
// ---------------------------------------------------------------------------

/// Iterative-deepening exhaustive search: no heuristic, no duplicate
/// detection, same action semantics. At the first depth with any valid
/// plan, returns the best one under the same tie-break key.
pub fn brute_force_optimal(
    instance: &ScenarioInstance,
    cap: u32,
) -> Result<Vec<Action>, PlanError> {
    fn dfs(
        instance: &ScenarioInstance,
        node: &Node,
        depth: u32,
        prefix: &mut Vec<Action>,
        found: &mut Vec<Vec<Action>>,
    ) {
        if depth == 0 {
            if node.is_goal(instance) {
                found.push(prefix.clone());
            }
            return;
        }
        if node.is_goal(instance) {
            return;
        }
        for (action, next) in successors(instance, node) {
            prefix.push(action);
            dfs(instance, &next, depth - 1, prefix, found);
            prefix.pop();
        }
    }

    let start = Node::initial(instance);
    for depth in 0..=cap {
        let mut found = Vec::new();
        let mut prefix = Vec::new();
        dfs(instance, &start, depth, &mut prefix, &mut found);
        if let Some(best) = found.into_iter().min_by(|a, b| better_plan(a, b)) {
            return Ok(best);
        }
    }
    Err(PlanError::NoPlan { cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate, reference_instance, Family};

    /// (steps, asks, moves) expected for each family's optimal plan.
    pub const EXPECTED_STATS: [(Family, (u32, u32, u32)); 7] = [
        (Family::Base, (1, 0, 0)),
        (Family::Persp, (2, 1, 0)),
        (Family::Distractor, (2, 0, 1)),
        (Family::Far, (3, 1, 1)),
        (Family::Near, (2, 0, 1)),
        (Family::Hidden, (2, 0, 1)),
        (Family::NotThat, (2, 1, 0)),
    ];

    #[test]
    fn reference_plans_match_expected_shapes() {
        for (family, (steps, asks, moves)) in EXPECTED_STATS {
            let inst = reference_instance(family);
            let plan = plan_optimal(&inst).unwrap();
            let stats = plan_stats(&plan);
            assert_eq!(
                (stats.steps, stats.asks, stats.moves),
                (steps, asks, moves),
                "{family}: got plan {plan:?}"
            );
            is_valid_plan(&inst, &plan).unwrap();
        }
    }

    #[test]
    fn reference_plans_are_the_expected_sequences() {
        let take = |o: &str| Action::take(o);
        let cases: [(Family, Vec<Action>); 7] = [
            (Family::Base, vec![take("tie_red")]),
            (Family::Persp, vec![Action::ask_canonical(), take("tie_red")]),
            (Family::Distractor, vec![Action::move_to("kitchen"), take("tie_red")]),
            (
                Family::Far,
                vec![
                    Action::ask_canonical(),
                    Action::move_to("hallway"),
                    take("tie_red"),
                ],
            ),
            (Family::Near, vec![Action::move_to("kitchen"), take("tie_red")]),
            (Family::Hidden, vec![Action::move_to("kitchen"), take("tie_red")]),
            (Family::NotThat, vec![Action::ask_canonical(), take("tie_red")]),
        ];
        for (family, expected) in cases {
            let plan = plan_optimal(&reference_instance(family)).unwrap();
            assert_eq!(plan, expected, "{family}");
        }
    }

    #[test]
    fn planner_agrees_with_brute_force_on_references() {
        for family in Family::ALL {
            let inst = reference_instance(family);
            let fast = plan_optimal(&inst).unwrap();
            let slow = brute_force_optimal(&inst, DEFAULT_PLAN_CAP).unwrap();
            assert_eq!(fast, slow, "{family}");
        }
    }

    #[test]
    fn planner_agrees_with_brute_force_on_generated_instances() {
        for family in Family::ALL {
            for seed in 0..5 {
                let inst = generate(family, seed).unwrap();
                let fast = plan_optimal(&inst).unwrap();
                let slow = brute_force_optimal(&inst, DEFAULT_PLAN_CAP).unwrap();
                assert_eq!(fast, slow, "{family} seed {seed}");
            }
        }
    }

    #[test]
    fn premature_take_is_invalid() {
        // In the Persp setup the Matcher sees two ties; taking without
        // asking is a guess and must be rejected even though it would
        // physically succeed.
        let inst = reference_instance(Family::Persp);
        let err = is_valid_plan(&inst, &[Action::take("tie_red")]).unwrap_err();
        match err {
            PlanError::InvalidPlan { step, reason, .. } => {
                assert_eq!(step, 0);
                assert!(reason.contains("2 candidates"), "{reason}");
            }
            other => panic!("expected invalid plan, got {other:?}"),
        }
    }

    #[test]
    fn unfinished_and_rejected_plans_are_invalid() {
        let inst = reference_instance(Family::Base);
        assert!(matches!(
            is_valid_plan(&inst, &[Action::ask_canonical()]),
            Err(PlanError::InvalidPlan { .. })
        ));
        assert!(matches!(
            is_valid_plan(&inst, &[Action::move_to("closet")]),
            Err(PlanError::InvalidPlan { .. })
        ));
    }

    #[test]
    fn valid_but_suboptimal_plan_passes_the_checker() {
        // Base: wander to the hallway and back before taking.
        let inst = reference_instance(Family::Base);
        let plan = [
            Action::move_to("hallway"),
            Action::move_to("bedroom"),
            Action::take("tie_red"),
        ];
        is_valid_plan(&inst, &plan).unwrap();
    }

    #[test]
    fn heuristic_is_admissible_and_consistent_along_optimal_plans() {
        for family in Family::ALL {
            for seed in 0..5 {
                let inst = generate(family, seed).unwrap();
                let plan = plan_optimal(&inst).unwrap();
                let mut node = Node::initial(&inst);
                for (i, action) in plan.iter().enumerate() {
                    let remaining = (plan.len() - i) as u32;
                    let h = heuristic(&inst, &node.world, &node.knowledge);
                    assert!(
                        h <= remaining,
                        "{family} seed {seed}: h={h} > remaining={remaining} at step {i}"
                    );
                    let (_, next) = successors(&inst, &node)
                        .into_iter()
                        .find(|(a, _)| a == action)
                        .expect("plan action is a successor");
                    let h_next = heuristic(&inst, &next.world, &next.knowledge);
                    assert!(
                        h <= 1 + h_next,
                        "{family} seed {seed}: inconsistent h at step {i}: {h} > 1 + {h_next}"
                    );
                    node = next;
                }
                assert_eq!(heuristic(&inst, &node.world, &node.knowledge), 0);
            }
        }
    }

    #[test]
    fn candidate_sets_track_answers() {
        let inst = reference_instance(Family::Far);
        let mut k = KnowledgeState::initial(&inst);
        assert_eq!(k.candidate_set().len(), 2, "both ties in view");
        assert_eq!(k.known_target_room(), None);
        k.absorb_answer(&truthful_answer(&inst, &inst.initial_state()));
        assert_eq!(
            k.candidate_set().into_iter().collect::<Vec<_>>(),
            vec![ObjectId::new("tie_red")]
        );
        assert_eq!(k.known_target_room(), Some(LocationId::new("hallway")));
        assert!(k.take_justified(&ObjectId::new("tie_red")));
        assert!(!k.take_justified(&ObjectId::new("tie_blue")));
    }

    #[test]
    fn repeat_asks_do_not_change_knowledge_equality() {
        let inst = reference_instance(Family::Persp);
        let answer = truthful_answer(&inst, &inst.initial_state());
        let mut once = KnowledgeState::initial(&inst);
        once.absorb_answer(&answer);
        let mut twice = once.clone();
        twice.absorb_answer(&answer);
        assert_eq!(once, twice, "answer sets are deduplicated");
        assert_ne!(once.asked, twice.asked, "but the ask count still ticks");
    }
}
