//! Household simulator: mutable world state, the four actions, perspective
//! visibility, and textual observation rendering.
//!
//! The simulator is purely physical. A take succeeds whenever the object is
//! reachable (co-located free object or co-located open container), even if
//! it is the wrong object for the task — wrong takes are recorded by the
//! harness, not prevented here. Illegal actions are not errors: they yield
//! [`StepEvent::Rejected`] with a stable reason string and still consume a
//! time step, mirroring how a scripted or model-driven agent experiences
//! them. Only malformed requests (an unknown agent) return `Err`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{director, matcher, AgentId, ContainerId, LocationId, ObjectId};
use crate::pddl::{DoorState, GroundedWorld, Placement};

/// The question the planner and scripted policies put to the Director.
pub const CANONICAL_QUESTION: &str = "Which one do you mean?";

/// Hard cap on environment steps per trial.
pub const MAX_STEPS_DEFAULT: u32 = 15;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
}

/// One of the four action kinds, fully instantiated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Action {
    Move { to: LocationId },
    Open { container: ContainerId },
    Take { object: ObjectId },
    Ask { question: String },
}

impl Action {
    pub fn move_to(loc: &str) -> Self {
        Action::Move {
            to: LocationId::new(loc),
        }
    }

    pub fn open(container: &str) -> Self {
        Action::Open {
            container: ContainerId::new(container),
        }
    }

    pub fn take(object: &str) -> Self {
        Action::Take {
            object: ObjectId::new(object),
        }
    }

    pub fn ask_canonical() -> Self {
        Action::Ask {
            question: CANONICAL_QUESTION.to_string(),
        }
    }
}

impl fmt::Display for Action {
    /// Canonical command syntax, the same one agents emit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move { to } => write!(f, "move({to})"),
            Action::Open { container } => write!(f, "open({container})"),
            Action::Take { object } => write!(f, "take({object})"),
            Action::Ask { question } => write!(f, "ask(\"{question}\")"),
        }
    }
}

/// What happened when an action was applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StepEvent {
    Moved { from: LocationId, to: LocationId },
    Opened { container: ContainerId },
    Took { object: ObjectId },
    Asked { question: String },
    Rejected { reason: String },
}

impl StepEvent {
    pub fn is_rejection(&self) -> bool {
        matches!(self, StepEvent::Rejected { .. })
    }
}

/// Mutable snapshot of the household. Static structure (rooms, adjacency)
/// stays in [`GroundedWorld`]; pass it alongside the state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub agent_pos: BTreeMap<AgentId, LocationId>,
    /// Free-standing objects by room.
    pub free: BTreeMap<ObjectId, LocationId>,
    /// Objects inside containers.
    pub contained: BTreeMap<ObjectId, ContainerId>,
    pub doors: BTreeMap<ContainerId, DoorState>,
    /// At most one object in hand; `(agent, object)`.
    pub held: Option<(AgentId, ObjectId)>,
}

impl WorldState {
    pub fn initial(map: &GroundedWorld) -> Self {
        let mut free = BTreeMap::new();
        let mut contained = BTreeMap::new();
        for (o, p) in &map.objects {
            match p {
                Placement::Free(l) => {
                    free.insert(o.clone(), l.clone());
                }
                Placement::InContainer(c) => {
                    contained.insert(o.clone(), c.clone());
                }
            }
        }
        WorldState {
            agent_pos: map.agents.clone(),
            free,
            contained,
            doors: map
                .containers
                .iter()
                .map(|(c, info)| (c.clone(), info.door))
                .collect(),
            held: None,
        }
    }

    /// The room an object currently occupies (through its container or its
    /// holder's position when held).
    pub fn room_of(&self, map: &GroundedWorld, object: &ObjectId) -> Option<LocationId> {
        if let Some(l) = self.free.get(object) {
            return Some(l.clone());
        }
        if let Some(c) = self.contained.get(object) {
            return map.containers.get(c).map(|i| i.location.clone());
        }
        if let Some((agent, held)) = &self.held {
            if held == object {
                return self.agent_pos.get(agent).cloned();
            }
        }
        None
    }

    /// Applies one action for `actor`, returning the successor state and the
    /// event. Never fails for in-world actors: illegal moves become
    /// [`StepEvent::Rejected`].
    pub fn apply(
        &self,
        map: &GroundedWorld,
        actor: &AgentId,
        action: &Action,
    ) -> Result<(WorldState, StepEvent), WorldError> {
        let here = self
            .agent_pos
            .get(actor)
            .cloned()
            .ok_or_else(|| WorldError::UnknownAgent(actor.clone()))?;
        if *actor != matcher() {
            return Ok((
                self.clone(),
                StepEvent::Rejected {
                    reason: "only the matcher can act".into(),
                },
            ));
        }
        let reject = |reason: &str| {
            Ok((
                self.clone(),
                StepEvent::Rejected {
                    reason: reason.to_string(),
                },
            ))
        };
        match action {
            Action::Move { to } => {
                if !map.locations.contains(to) {
                    return reject("unknown location");
                }
                if !map.is_adjacent(&here, to) {
                    return reject("not adjacent");
                }
                let mut next = self.clone();
                next.agent_pos.insert(actor.clone(), to.clone());
                Ok((
                    next,
                    StepEvent::Moved {
                        from: here,
                        to: to.clone(),
                    },
                ))
            }
            Action::Open { container } => {
                let Some(info) = map.containers.get(container) else {
                    return reject("unknown container");
                };
                if info.location != here {
                    return reject("container not here");
                }
                if self.doors.get(container) == Some(&DoorState::Open) {
                    return reject("container already open");
                }
                let mut next = self.clone();
                next.doors.insert(container.clone(), DoorState::Open);
                Ok((
                    next,
                    StepEvent::Opened {
                        container: container.clone(),
                    },
                ))
            }
            Action::Take { object } => {
                if self.held.is_some() {
                    return reject("already holding an object");
                }
                let retrievable = match (self.free.get(object), self.contained.get(object)) {
                    (Some(room), _) => *room == here,
                    (None, Some(c)) => {
                        map.containers.get(c).map(|i| &i.location) == Some(&here)
                            && self.doors.get(c) == Some(&DoorState::Open)
                    }
                    (None, None) => {
                        if !map.objects.contains_key(object) {
                            return reject("unknown object");
                        }
                        false
                    }
                };
                if !retrievable {
                    return reject("object not retrievable");
                }
                let mut next = self.clone();
                next.free.remove(object);
                next.contained.remove(object);
                next.held = Some((actor.clone(), object.clone()));
                Ok((
                    next,
                    StepEvent::Took {
                        object: object.clone(),
                    },
                ))
            }
            Action::Ask { question } => {
                if question.trim().is_empty() {
                    return reject("empty question");
                }
                Ok((
                    self.clone(),
                    StepEvent::Asked {
                        question: question.clone(),
                    },
                ))
            }
        }
    }

    /// Every action the actor could attempt without rejection, in canonical
    /// order: moves (by destination), opens, takes, then the canonical ask.
    /// The Director can never act, so its list is empty.
    pub fn legal_actions(
        &self,
        map: &GroundedWorld,
        actor: &AgentId,
    ) -> Result<Vec<Action>, WorldError> {
        let here = self
            .agent_pos
            .get(actor)
            .cloned()
            .ok_or_else(|| WorldError::UnknownAgent(actor.clone()))?;
        if *actor != matcher() {
            return Ok(Vec::new());
        }
        let mut actions = Vec::new();
        for to in map.neighbors(&here) {
            actions.push(Action::Move { to });
        }
        for (c, info) in &map.containers {
            if info.location == here && self.doors.get(c) == Some(&DoorState::Closed) {
                actions.push(Action::Open {
                    container: c.clone(),
                });
            }
        }
        if self.held.is_none() {
            for (o, room) in &self.free {
                if *room == here {
                    actions.push(Action::Take { object: o.clone() });
                }
            }
            for (o, c) in &self.contained {
                let Some(info) = map.containers.get(c) else {
                    continue;
                };
                if info.location == here && self.doors.get(c) == Some(&DoorState::Open) {
                    actions.push(Action::Take { object: o.clone() });
                }
            }
        }
        actions.push(Action::ask_canonical());
        Ok(actions)
    }

    /// Structural invariants checked by the fuzz tests: agents stand in real
    /// rooms, every object has exactly one placement, door states cover
    /// exactly the map's containers.
    pub fn check_invariants(&self, map: &GroundedWorld) -> Result<(), String> {
        for (a, l) in &self.agent_pos {
            if !map.locations.contains(l) {
                return Err(format!("agent `{a}` in unknown room `{l}`"));
            }
        }
        if self.agent_pos.len() != map.agents.len() {
            return Err("agent set changed size".into());
        }
        let mut placed = 0usize;
        for (o, l) in &self.free {
            if !map.locations.contains(l) {
                return Err(format!("object `{o}` free in unknown room `{l}`"));
            }
            if self.contained.contains_key(o) {
                return Err(format!("object `{o}` both free and contained"));
            }
            placed += 1;
        }
        for (o, c) in &self.contained {
            if !map.containers.contains_key(c) {
                return Err(format!("object `{o}` in unknown container `{c}`"));
            }
            placed += 1;
        }
        if let Some((a, o)) = &self.held {
            if !self.agent_pos.contains_key(a) {
                return Err(format!("held by unknown agent `{a}`"));
            }
            if self.free.contains_key(o) || self.contained.contains_key(o) {
                return Err(format!("object `{o}` both held and placed"));
            }
            placed += 1;
        }
        if placed != map.objects.len() {
            return Err(format!(
                "{placed} objects placed, map declares {}",
                map.objects.len()
            ));
        }
        if self.doors.len() != map.containers.len() {
            return Err("door states out of sync with containers".into());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Visibility
// ---------------------------------------------------------------------------

/// How far away a seen thing is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proximity {
    Here,
    Adjacent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleItem {
    pub object: ObjectId,
    pub room: LocationId,
    pub proximity: Proximity,
    /// Set when the object is seen inside an open container.
    pub container: Option<ContainerId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleContainer {
    pub container: ContainerId,
    pub room: LocationId,
    pub proximity: Proximity,
    pub door: DoorState,
    /// Contents, listed only when the container is open and co-located.
    pub contents: Vec<ObjectId>,
}

/// Everything an agent can currently see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub viewer: AgentId,
    pub viewer_room: LocationId,
    pub items: Vec<VisibleItem>,
    pub containers: Vec<VisibleContainer>,
    /// Other agents in view.
    pub agents: Vec<(AgentId, LocationId)>,
}

impl VisibilityReport {
    pub fn sees_object(&self, object: &ObjectId) -> bool {
        self.items.iter().any(|i| i.object == *object)
    }

    pub fn object_room(&self, object: &ObjectId) -> Option<&LocationId> {
        self.items
            .iter()
            .find(|i| i.object == *object)
            .map(|i| &i.room)
    }
}

/// Perspective rules:
/// free-standing objects and containers are visible from their own room and
/// adjacent rooms; the contents of an open container only from its own room;
/// the contents of a closed container never; agents are visible like
/// free-standing objects.
pub fn visible_set(
    map: &GroundedWorld,
    state: &WorldState,
    viewer: &AgentId,
) -> Result<VisibilityReport, WorldError> {
    let here = state
        .agent_pos
        .get(viewer)
        .cloned()
        .ok_or_else(|| WorldError::UnknownAgent(viewer.clone()))?;
    let proximity_of = |room: &LocationId| -> Option<Proximity> {
        if *room == here {
            Some(Proximity::Here)
        } else if map.is_adjacent(&here, room) {
            Some(Proximity::Adjacent)
        } else {
            None
        }
    };

    let mut items = Vec::new();
    for (o, room) in &state.free {
        if let Some(p) = proximity_of(room) {
            items.push(VisibleItem {
                object: o.clone(),
                room: room.clone(),
                proximity: p,
                container: None,
            });
        }
    }

    let mut containers = Vec::new();
    for (c, info) in &map.containers {
        let Some(p) = proximity_of(&info.location) else {
            continue;
        };
        let door = *state.doors.get(c).unwrap_or(&info.door);
        let mut contents = Vec::new();
        if door == DoorState::Open && p == Proximity::Here {
            for (o, oc) in &state.contained {
                if oc == c {
                    contents.push(o.clone());
                    items.push(VisibleItem {
                        object: o.clone(),
                        room: info.location.clone(),
                        proximity: p,
                        container: Some(c.clone()),
                    });
                }
            }
        }
        containers.push(VisibleContainer {
            container: c.clone(),
            room: info.location.clone(),
            proximity: p,
            door,
            contents,
        });
    }
    items.sort_by(|a, b| a.object.cmp(&b.object));

    let mut agents = Vec::new();
    for (a, room) in &state.agent_pos {
        if a != viewer && proximity_of(room).is_some() {
            agents.push((a.clone(), room.clone()));
        }
    }

    Ok(VisibilityReport {
        viewer: viewer.clone(),
        viewer_room: here,
        items,
        containers,
        agents,
    })
}

// ---------------------------------------------------------------------------
// Observation rendering
// ---------------------------------------------------------------------------

/// "tie_red" -> "a red tie"; "tie" -> "a tie".
pub fn noun_phrase(object: &ObjectId) -> String {
    let (noun, attr) = object.noun_attribute();
    match attr {
        Some(a) => format!("a {a} {noun}"),
        None => format!("a {noun}"),
    }
}

fn and_join(parts: &[String]) -> String {
    match parts.len() {
        0 => String::new(),
        1 => parts[0].clone(),
        _ => format!(
            "{} and {}",
            parts[..parts.len() - 1].join(", "),
            parts[parts.len() - 1]
        ),
    }
}

/// The "a red tie (here)" / "a basket (open, here) containing ..." entries
/// of a visibility report, in report order. Shared by observation rendering
/// and Director prompt construction.
pub fn scene_entries(report: &VisibilityReport) -> Vec<String> {
    let mut entries: Vec<String> = Vec::new();
    for item in &report.items {
        if item.container.is_some() {
            continue; // rendered with its container below
        }
        let place = match item.proximity {
            Proximity::Here => "here".to_string(),
            Proximity::Adjacent => format!("in the {}", item.room),
        };
        entries.push(format!("{} ({place})", noun_phrase(&item.object)));
    }
    for c in &report.containers {
        let door = match c.door {
            DoorState::Open => "open",
            DoorState::Closed => "closed",
        };
        let place = match c.proximity {
            Proximity::Here => "here".to_string(),
            Proximity::Adjacent => format!("in the {}", c.room),
        };
        let mut entry = format!("a {} ({door}, {place})", c.container);
        if !c.contents.is_empty() {
            let names: Vec<String> = c.contents.iter().map(noun_phrase).collect();
            entry.push_str(&format!(" containing {}", and_join(&names)));
        }
        entries.push(entry);
    }
    entries
}

/// Renders the fixed-template observation text for one agent. Entries are
/// ordered by id so equal states always produce identical text.
pub fn render_observation(
    map: &GroundedWorld,
    state: &WorldState,
    viewer: &AgentId,
) -> Result<String, WorldError> {
    let report = visible_set(map, state, viewer)?;
    let mut text = format!("You are in the {}.", report.viewer_room);
    let entries = scene_entries(&report);
    if entries.is_empty() {
        text.push_str(" You see nothing of note.");
    } else {
        text.push_str(&format!(" You see: {}.", entries.join(", ")));
    }

    if *viewer == matcher() {
        if let Some((_, room)) = report.agents.iter().find(|(a, _)| *a == director()) {
            if *room == report.viewer_room {
                text.push_str(" The Director is here with you.");
            } else {
                text.push_str(&format!(" The Director is in the {room}."));
            }
        }
    }
    Ok(text)
}
