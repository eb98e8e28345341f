//! Explicit-state imperfect-information concurrent game structures.
//!
//! States, agents and actions are dense integer ids. Each state carries the
//! precomputed list of its legal joint actions together with their outcome,
//! sorted lexicographically by the action tuple, so that enumerating the
//! opponent completions of a coalition move is a linear scan of that list.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            #[inline]
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Agent index in `0..k`.
    AgentId
);
id_type!(
    /// State index in `0..n`.
    StateId
);
id_type!(
    /// Index into the model's action alphabet.
    ActionId
);

/// One action per agent of a coalition (or of the whole system), in agent order.
pub type JointAction = SmallVec<[ActionId; 4]>;

/// Dense set of states.
pub type StateSet = FixedBitSet;

pub fn empty_set(m: &Model) -> StateSet {
    FixedBitSet::with_capacity(m.num_states())
}

pub fn set_of(m: &Model, states: impl IntoIterator<Item = StateId>) -> StateSet {
    let mut s = empty_set(m);
    for q in states {
        s.insert(q.index());
    }
    s
}

pub fn states_in(set: &StateSet) -> impl Iterator<Item = StateId> + '_ {
    set.ones().map(StateId::from)
}

/// A legal joint action at some state together with its unique successor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub actions: JointAction,
    pub to: StateId,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model has no agents")]
    NoAgents,
    #[error("model has no states")]
    NoStates,
    #[error("{what}: expected {expected} entries, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("state {0} out of range")]
    StateOutOfRange(u32),
    #[error("agent {0} out of range")]
    AgentOutOfRange(u32),
    #[error("valuation refers to unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("duplicate proposition `{0}`")]
    DuplicateProposition(String),
    #[error("action {action} of agent {agent} is not legal at state {state}")]
    IllegalAction {
        agent: AgentId,
        state: StateId,
        action: ActionId,
    },
    #[error("model is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A broken structural invariant, reported by [`Model::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyProtocol {
        agent: AgentId,
        state: StateId,
    },
    IllegalTransition {
        state: StateId,
        actions: Vec<ActionId>,
    },
    DuplicateTransition {
        state: StateId,
        actions: Vec<ActionId>,
    },
    MissingTransition {
        state: StateId,
        actions: Vec<ActionId>,
    },
    StateNotCovered {
        agent: AgentId,
        state: StateId,
    },
    StateInSeveralClasses {
        agent: AgentId,
        state: StateId,
    },
    EmptyClass {
        agent: AgentId,
        class: usize,
    },
    NonUniformProtocol {
        agent: AgentId,
        state: StateId,
        other: StateId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyProtocol { agent, state } => {
                write!(f, "agent {agent} has no legal action at state {state}")
            }
            Violation::IllegalTransition { state, actions } => {
                write!(f, "transition from state {state} on {actions:?} uses an illegal action")
            }
            Violation::DuplicateTransition { state, actions } => {
                write!(f, "transition from state {state} on {actions:?} is defined twice")
            }
            Violation::MissingTransition { state, actions } => {
                write!(f, "no transition from state {state} on legal joint action {actions:?}")
            }
            Violation::StateNotCovered { agent, state } => {
                write!(f, "state {state} is in no epistemic class of agent {agent}")
            }
            Violation::StateInSeveralClasses { agent, state } => {
                write!(f, "state {state} is in several epistemic classes of agent {agent}")
            }
            Violation::EmptyClass { agent, class } => {
                write!(f, "epistemic class {class} of agent {agent} is empty")
            }
            Violation::NonUniformProtocol {
                agent,
                state,
                other,
            } => write!(
                f,
                "agent {agent} cannot distinguish states {state} and {other} but has different protocols there"
            ),
        }
    }
}

/// On-disk JSON representation of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub agents: usize,
    pub states: usize,
    pub propositions: Vec<String>,
    pub valuation: BTreeMap<String, Vec<u32>>,
    /// `protocol[agent][state]` lists the legal actions.
    pub protocol: Vec<Vec<Vec<u32>>>,
    pub transitions: Vec<TransitionEntry>,
    /// `epistemic[agent]` is a list of classes.
    pub epistemic: Vec<Vec<Vec<u32>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub from: u32,
    pub actions: Vec<u32>,
    pub to: u32,
}

#[derive(Clone, Debug)]
struct Partition {
    classes: Vec<Vec<StateId>>,
    class_of: Vec<u32>,
}

/// An imperfect-information concurrent game structure.
///
/// A `Model` is immutable once built. [`Model::from_parts`] only rejects
/// inputs that cannot be indexed at all (ids out of range, wrong shapes);
/// the semantic invariants are checked by [`Model::validate`], which
/// [`Model::from_json`] runs before returning.
#[derive(Clone, Debug)]
pub struct Model {
    agents: usize,
    states: usize,
    propositions: Vec<String>,
    valuation: Vec<StateSet>,
    protocol: Vec<Vec<Vec<ActionId>>>,
    moves: Vec<Vec<Move>>,
    epistemic: Vec<Partition>,
}

impl Model {
    pub fn from_parts(file: &ModelFile) -> Result<Model, ModelError> {
        let k = file.agents;
        let n = file.states;
        if k == 0 {
            return Err(ModelError::NoAgents);
        }
        if n == 0 {
            return Err(ModelError::NoStates);
        }
        let check_state = |q: u32| {
            if (q as usize) < n {
                Ok(StateId(q))
            } else {
                Err(ModelError::StateOutOfRange(q))
            }
        };

        let mut seen = BTreeSet::new();
        for p in &file.propositions {
            if !seen.insert(p.as_str()) {
                return Err(ModelError::DuplicateProposition(p.clone()));
            }
        }
        let mut valuation = vec![FixedBitSet::with_capacity(n); file.propositions.len()];
        for (name, states) in &file.valuation {
            let idx = file
                .propositions
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| ModelError::UnknownProposition(name.clone()))?;
            for &q in states {
                valuation[idx].insert(check_state(q)?.index());
            }
        }

        if file.protocol.len() != k {
            return Err(ModelError::Shape {
                what: "protocol agents",
                expected: k,
                found: file.protocol.len(),
            });
        }
        let mut protocol = Vec::with_capacity(k);
        for per_agent in &file.protocol {
            if per_agent.len() != n {
                return Err(ModelError::Shape {
                    what: "protocol states",
                    expected: n,
                    found: per_agent.len(),
                });
            }
            protocol.push(
                per_agent
                    .iter()
                    .map(|acts| {
                        let mut v: Vec<ActionId> = acts.iter().map(|&a| ActionId(a)).collect();
                        v.sort();
                        v.dedup();
                        v
                    })
                    .collect::<Vec<_>>(),
            );
        }

        let mut moves: Vec<Vec<Move>> = vec![Vec::new(); n];
        for t in &file.transitions {
            let from = check_state(t.from)?;
            let to = check_state(t.to)?;
            if t.actions.len() != k {
                return Err(ModelError::Shape {
                    what: "joint action length",
                    expected: k,
                    found: t.actions.len(),
                });
            }
            moves[from.index()].push(Move {
                actions: t.actions.iter().map(|&a| ActionId(a)).collect(),
                to,
            });
        }
        for list in &mut moves {
            list.sort_by(|a, b| a.actions.cmp(&b.actions).then(a.to.cmp(&b.to)));
        }

        if file.epistemic.len() != k {
            return Err(ModelError::Shape {
                what: "epistemic agents",
                expected: k,
                found: file.epistemic.len(),
            });
        }
        let mut epistemic = Vec::with_capacity(k);
        for classes in &file.epistemic {
            let mut class_of = vec![u32::MAX; n];
            let mut out = Vec::with_capacity(classes.len());
            for (ci, class) in classes.iter().enumerate() {
                let mut members = Vec::with_capacity(class.len());
                for &q in class {
                    let q = check_state(q)?;
                    if class_of[q.index()] == u32::MAX {
                        class_of[q.index()] = ci as u32;
                    }
                    members.push(q);
                }
                members.sort();
                out.push(members);
            }
            epistemic.push(Partition {
                classes: out,
                class_of,
            });
        }

        Ok(Model {
            agents: k,
            states: n,
            propositions: file.propositions.clone(),
            valuation,
            protocol,
            moves,
            epistemic,
        })
    }

    /// Parses, builds and validates a model from its JSON form.
    pub fn from_json(text: &str) -> Result<Model, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        Model::from_file(&file)
    }

    /// Builds a model and rejects it unless [`Model::validate`] is clean.
    pub fn from_file(file: &ModelFile) -> Result<Model, ModelError> {
        let m = Model::from_parts(file)?;
        let violations = m.validate();
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    pub fn to_file(&self) -> ModelFile {
        let valuation = self
            .propositions
            .iter()
            .zip(&self.valuation)
            .map(|(p, s)| (p.clone(), s.ones().map(|q| q as u32).collect()))
            .collect();
        let protocol = self
            .protocol
            .iter()
            .map(|per| {
                per.iter()
                    .map(|acts| acts.iter().map(|a| a.0).collect())
                    .collect()
            })
            .collect();
        let transitions = self
            .moves
            .iter()
            .enumerate()
            .flat_map(|(q, list)| {
                list.iter().map(move |mv| TransitionEntry {
                    from: q as u32,
                    actions: mv.actions.iter().map(|a| a.0).collect(),
                    to: mv.to.0,
                })
            })
            .collect();
        let epistemic = self
            .epistemic
            .iter()
            .map(|p| {
                p.classes
                    .iter()
                    .map(|c| c.iter().map(|q| q.0).collect())
                    .collect()
            })
            .collect();
        ModelFile {
            agents: self.agents,
            states: self.states,
            propositions: self.propositions.clone(),
            valuation,
            protocol,
            transitions,
            epistemic,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serialization cannot fail")
    }

    /// Checks every structural invariant; an empty list means the model is legal.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for a in 0..self.agents {
            for q in 0..self.states {
                if self.protocol[a][q].is_empty() {
                    out.push(Violation::EmptyProtocol {
                        agent: AgentId::from(a),
                        state: StateId::from(q),
                    });
                }
            }
        }

        for q in 0..self.states {
            let state = StateId::from(q);
            let mut defined: BTreeSet<&[ActionId]> = BTreeSet::new();
            for mv in &self.moves[q] {
                let legal = mv
                    .actions
                    .iter()
                    .enumerate()
                    .all(|(a, act)| self.protocol[a][q].binary_search(act).is_ok());
                if !legal {
                    out.push(Violation::IllegalTransition {
                        state,
                        actions: mv.actions.to_vec(),
                    });
                } else if !defined.insert(&mv.actions) {
                    out.push(Violation::DuplicateTransition {
                        state,
                        actions: mv.actions.to_vec(),
                    });
                }
            }
            if (0..self.agents).any(|a| self.protocol[a][q].is_empty()) {
                continue;
            }
            for joint in self.legal_joint_actions(state, &self.all_agents()) {
                if !defined.contains(joint.as_slice()) {
                    out.push(Violation::MissingTransition {
                        state,
                        actions: joint.to_vec(),
                    });
                }
            }
        }

        for (a, part) in self.epistemic.iter().enumerate() {
            let agent = AgentId::from(a);
            let mut count = vec![0usize; self.states];
            for (ci, class) in part.classes.iter().enumerate() {
                if class.is_empty() {
                    out.push(Violation::EmptyClass { agent, class: ci });
                }
                for q in class {
                    count[q.index()] += 1;
                }
                if let Some((&first, rest)) = class.split_first() {
                    for &other in rest {
                        if self.protocol[a][first.index()] != self.protocol[a][other.index()] {
                            out.push(Violation::NonUniformProtocol {
                                agent,
                                state: first,
                                other,
                            });
                        }
                    }
                }
            }
            for (q, &c) in count.iter().enumerate() {
                let state = StateId::from(q);
                if c == 0 {
                    out.push(Violation::StateNotCovered { agent, state });
                } else if c > 1 {
                    out.push(Violation::StateInSeveralClasses { agent, state });
                }
            }
        }
        out
    }

    #[inline]
    pub fn num_agents(&self) -> usize {
        self.agents
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.states as u32).map(StateId)
    }

    pub fn all_agents(&self) -> Vec<AgentId> {
        (0..self.agents as u32).map(AgentId).collect()
    }

    pub fn propositions(&self) -> &[String] {
        &self.propositions
    }

    /// States labelled with the named proposition.
    pub fn prop_states(&self, name: &str) -> Option<&StateSet> {
        self.propositions
            .iter()
            .position(|p| p == name)
            .map(|i| &self.valuation[i])
    }

    pub fn protocol(&self, agent: AgentId, q: StateId) -> &[ActionId] {
        &self.protocol[agent.index()][q.index()]
    }

    /// Legal joint actions at `q` together with their successors.
    pub fn moves(&self, q: StateId) -> &[Move] {
        &self.moves[q.index()]
    }

    /// Cartesian product of the coalition members' protocols at `q`,
    /// in lexicographic order.
    pub fn legal_joint_actions(&self, q: StateId, coalition: &[AgentId]) -> Vec<JointAction> {
        let mut out: Vec<JointAction> = vec![JointAction::new()];
        for &a in coalition {
            let acts = self.protocol(a, q);
            let mut next = Vec::with_capacity(out.len() * acts.len());
            for prefix in &out {
                for &act in acts {
                    let mut j = prefix.clone();
                    j.push(act);
                    next.push(j);
                }
            }
            out = next;
        }
        out
    }

    /// Calls `f` once per legal move at `q` that agrees with `actions` on
    /// `coalition`. Legality of `actions` is not checked.
    #[inline]
    pub fn for_each_successor(
        &self,
        q: StateId,
        coalition: &[AgentId],
        actions: &[ActionId],
        mut f: impl FnMut(StateId),
    ) {
        'moves: for mv in &self.moves[q.index()] {
            for (a, act) in coalition.iter().zip(actions) {
                if mv.actions[a.index()] != *act {
                    continue 'moves;
                }
            }
            f(mv.to);
        }
    }

    /// One-step image of `q` when the agents with `Some` entries in `fixed`
    /// play those actions and every other agent ranges over its protocol.
    pub fn successors(
        &self,
        q: StateId,
        fixed: &[Option<ActionId>],
    ) -> Result<Vec<StateId>, ModelError> {
        if q.index() >= self.states {
            return Err(ModelError::StateOutOfRange(q.0));
        }
        if fixed.len() != self.agents {
            return Err(ModelError::Shape {
                what: "partial joint action length",
                expected: self.agents,
                found: fixed.len(),
            });
        }
        let mut coalition = Vec::new();
        let mut actions = Vec::new();
        for (a, f) in fixed.iter().enumerate() {
            if let Some(act) = f {
                let agent = AgentId::from(a);
                if self.protocol(agent, q).binary_search(act).is_err() {
                    return Err(ModelError::IllegalAction {
                        agent,
                        state: q,
                        action: *act,
                    });
                }
                coalition.push(agent);
                actions.push(*act);
            }
        }
        let mut out = BTreeSet::new();
        self.for_each_successor(q, &coalition, &actions, |s| {
            out.insert(s);
        });
        Ok(out.into_iter().collect())
    }

    /// The class `[q]_a`, sorted.
    pub fn epistemic_class(&self, agent: AgentId, q: StateId) -> &[StateId] {
        let part = &self.epistemic[agent.index()];
        &part.classes[part.class_of[q.index()] as usize]
    }

    pub fn class_index(&self, agent: AgentId, q: StateId) -> usize {
        self.epistemic[agent.index()].class_of[q.index()] as usize
    }

    pub fn classes(&self, agent: AgentId) -> &[Vec<StateId>] {
        &self.epistemic[agent.index()].classes
    }

    #[inline]
    pub fn indistinguishable(&self, agent: AgentId, q: StateId, r: StateId) -> bool {
        let part = &self.epistemic[agent.index()];
        part.class_of[q.index()] == part.class_of[r.index()]
    }
}

#[derive(Debug, Error)]
pub enum GoalError {
    #[error("coalition is empty")]
    EmptyCoalition,
    #[error("agent {0} is not in the model")]
    UnknownAgent(AgentId),
    #[error("agent {0} listed twice in the coalition")]
    DuplicateAgent(AgentId),
    #[error("target proposition `{0}` is not in the model")]
    UnknownTarget(String),
    #[error("initial state {0} is not in the model")]
    UnknownInitial(StateId),
}

/// The reachability objective "the coalition can enforce eventually `target`"
/// evaluated at `initial_state`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachabilityGoal {
    pub coalition: Vec<AgentId>,
    pub target: String,
    pub initial_state: StateId,
}

impl ReachabilityGoal {
    pub fn new(coalition: Vec<AgentId>, target: impl Into<String>, initial_state: StateId) -> Self {
        ReachabilityGoal {
            coalition,
            target: target.into(),
            initial_state,
        }
    }

    pub fn check(&self, m: &Model) -> Result<(), GoalError> {
        if self.coalition.is_empty() {
            return Err(GoalError::EmptyCoalition);
        }
        let mut seen = BTreeSet::new();
        for &a in &self.coalition {
            if a.index() >= m.num_agents() {
                return Err(GoalError::UnknownAgent(a));
            }
            if !seen.insert(a) {
                return Err(GoalError::DuplicateAgent(a));
            }
        }
        if m.prop_states(&self.target).is_none() {
            return Err(GoalError::UnknownTarget(self.target.clone()));
        }
        if self.initial_state.index() >= m.num_states() {
            return Err(GoalError::UnknownInitial(self.initial_state));
        }
        Ok(())
    }

    pub fn targets(&self, m: &Model) -> StateSet {
        m.prop_states(&self.target)
            .cloned()
            .unwrap_or_else(|| empty_set(m))
    }

    /// Union over coalition members `a` of `[initial_state]_a`.
    pub fn initial_class(&self, m: &Model) -> StateSet {
        let mut s = empty_set(m);
        for &a in &self.coalition {
            for q in m.epistemic_class(a, self.initial_state) {
                s.insert(q.index());
            }
        }
        s
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Builds a model from compact transition triples; every agent gets the
    /// identity partition unless `epistemic` is given.
    pub fn model(
        agents: usize,
        states: usize,
        protocol: Vec<Vec<Vec<u32>>>,
        transitions: &[(u32, &[u32], u32)],
        win: &[u32],
        epistemic: Option<Vec<Vec<Vec<u32>>>>,
    ) -> ModelFile {
        let epistemic = epistemic.unwrap_or_else(|| {
            (0..agents)
                .map(|_| (0..states as u32).map(|q| vec![q]).collect())
                .collect()
        });
        ModelFile {
            agents,
            states,
            propositions: vec!["win".into()],
            valuation: [("win".to_string(), win.to_vec())].into_iter().collect(),
            protocol,
            transitions: transitions
                .iter()
                .map(|&(from, acts, to)| TransitionEntry {
                    from,
                    actions: acts.to_vec(),
                    to,
                })
                .collect(),
            epistemic,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::model;
    use super::*;

    fn single_state() -> ModelFile {
        model(1, 1, vec![vec![vec![0]]], &[(0, &[0], 0)], &[0], None)
    }

    #[test]
    fn minimal_model_is_valid() {
        let m = Model::from_parts(&single_state()).unwrap();
        assert!(m.validate().is_empty());
    }

    #[test]
    fn non_uniform_protocol_is_reported() {
        let f = model(
            1,
            2,
            vec![vec![vec![0], vec![0, 1]]],
            &[(0, &[0], 0), (1, &[0], 1), (1, &[1], 0)],
            &[0],
            Some(vec![vec![vec![0, 1]]]),
        );
        let v = Model::from_parts(&f).unwrap().validate();
        assert_eq!(
            v,
            vec![Violation::NonUniformProtocol {
                agent: AgentId(0),
                state: StateId(0),
                other: StateId(1)
            }]
        );
    }

    #[test]
    fn missing_transition_is_reported() {
        let f = model(1, 1, vec![vec![vec![0, 1]]], &[(0, &[0], 0)], &[], None);
        let v = Model::from_parts(&f).unwrap().validate();
        assert_eq!(
            v,
            vec![Violation::MissingTransition {
                state: StateId(0),
                actions: vec![ActionId(1)]
            }]
        );
    }

    #[test]
    fn partition_defects_are_reported() {
        let f = model(
            1,
            2,
            vec![vec![vec![0], vec![0]]],
            &[(0, &[0], 1), (1, &[0], 1)],
            &[1],
            Some(vec![vec![vec![0], vec![0]]]),
        );
        let v = Model::from_parts(&f).unwrap().validate();
        assert!(v.contains(&Violation::StateInSeveralClasses {
            agent: AgentId(0),
            state: StateId(0)
        }));
        assert!(v.contains(&Violation::StateNotCovered {
            agent: AgentId(0),
            state: StateId(1)
        }));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(single_state()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(matches!(
            Model::from_json(&v.to_string()),
            Err(ModelError::Json(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let f = single_state();
        let m = Model::from_json(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(m.to_file(), f);
    }

    fn two_agent() -> Model {
        // agent 0 has actions {0,1}, agent 1 has {0,1} at state 0
        Model::from_file(&model(
            2,
            4,
            vec![
                vec![vec![0, 1], vec![0], vec![0], vec![0]],
                vec![vec![0, 1], vec![0], vec![0], vec![0]],
            ],
            &[
                (0, &[0, 0], 1),
                (0, &[0, 1], 2),
                (0, &[1, 0], 3),
                (0, &[1, 1], 3),
                (1, &[0, 0], 1),
                (2, &[0, 0], 2),
                (3, &[0, 0], 3),
            ],
            &[3],
            None,
        ))
        .unwrap()
    }

    #[test]
    fn successors_enumerate_opponent_completions() {
        let m = two_agent();
        let q = StateId(0);
        assert_eq!(
            m.successors(q, &[Some(ActionId(0)), None]).unwrap(),
            vec![StateId(1), StateId(2)]
        );
        assert_eq!(
            m.successors(q, &[Some(ActionId(1)), None]).unwrap(),
            vec![StateId(3)]
        );
        assert_eq!(
            m.successors(q, &[None, None]).unwrap(),
            vec![StateId(1), StateId(2), StateId(3)]
        );
        assert_eq!(
            m.successors(q, &[Some(ActionId(0)), Some(ActionId(1))])
                .unwrap(),
            vec![StateId(2)]
        );
    }

    #[test]
    fn successors_reject_illegal_fixed_action() {
        let m = two_agent();
        let err = m
            .successors(StateId(1), &[Some(ActionId(1)), None])
            .unwrap_err();
        assert!(matches!(
            err,
            ModelError::IllegalAction {
                agent: AgentId(0),
                state: StateId(1),
                ..
            }
        ));
    }

    #[test]
    fn epistemic_class_is_symmetric() {
        let f = model(
            1,
            3,
            vec![vec![vec![0]; 3]],
            &[(0, &[0], 1), (1, &[0], 2), (2, &[0], 2)],
            &[2],
            Some(vec![vec![vec![0, 1], vec![2]]]),
        );
        let m = Model::from_file(&f).unwrap();
        assert_eq!(
            m.epistemic_class(AgentId(0), StateId(0)),
            m.epistemic_class(AgentId(0), StateId(1))
        );
        assert_eq!(m.epistemic_class(AgentId(0), StateId(2)), &[StateId(2)]);
    }

    #[test]
    fn goal_checks() {
        let m = two_agent();
        assert!(ReachabilityGoal::new(vec![AgentId(0)], "win", StateId(0))
            .check(&m)
            .is_ok());
        assert!(matches!(
            ReachabilityGoal::new(vec![], "win", StateId(0)).check(&m),
            Err(GoalError::EmptyCoalition)
        ));
        assert!(matches!(
            ReachabilityGoal::new(vec![AgentId(0)], "lose", StateId(0)).check(&m),
            Err(GoalError::UnknownTarget(_))
        ));
    }
}
