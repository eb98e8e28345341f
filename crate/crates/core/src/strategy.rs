//! Total and partial memoryless strategies, outcome sets and the
//! winning/uniformity checks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    set_of, states_in, ActionId, AgentId, JointAction, Model, ReachabilityGoal, StateId, StateSet,
};

/// Anything that may prescribe a coalition action at a state.
pub trait Policy {
    fn coalition(&self) -> &[AgentId];
    fn choice(&self, q: StateId) -> Option<&[ActionId]>;
}

/// A memoryless strategy for a coalition, defined at every state.
///
/// Uniformity is a property checked by [`verify_uniform`], not an invariant:
/// perfect-information profiles are ordinary values of this type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StrategyProfile {
    coalition: Vec<AgentId>,
    choices: Vec<JointAction>,
}

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("strategy covers {found} states, model has {expected}")]
    WrongSize { expected: usize, found: usize },
    #[error("state {0} out of range")]
    StateOutOfRange(StateId),
    #[error("state {0} listed twice")]
    DuplicateState(StateId),
    #[error("no choice for state {0}")]
    MissingState(StateId),
    #[error("choice at state {state} has {found} actions, coalition has {expected} agents")]
    Arity {
        state: StateId,
        expected: usize,
        found: usize,
    },
    #[error("action {action} is not legal for agent {agent} at state {state}")]
    Illegal {
        agent: AgentId,
        state: StateId,
        action: ActionId,
    },
    #[error("malformed strategy file: {0}")]
    Json(#[from] serde_json::Error),
}

fn check_choice(
    m: &Model,
    coalition: &[AgentId],
    q: StateId,
    joint: &[ActionId],
) -> Result<(), StrategyError> {
    if q.index() >= m.num_states() {
        return Err(StrategyError::StateOutOfRange(q));
    }
    if joint.len() != coalition.len() {
        return Err(StrategyError::Arity {
            state: q,
            expected: coalition.len(),
            found: joint.len(),
        });
    }
    for (&agent, &action) in coalition.iter().zip(joint) {
        if m.protocol(agent, q).binary_search(&action).is_err() {
            return Err(StrategyError::Illegal {
                agent,
                state: q,
                action,
            });
        }
    }
    Ok(())
}

impl StrategyProfile {
    pub fn new(
        m: &Model,
        coalition: Vec<AgentId>,
        choices: Vec<JointAction>,
    ) -> Result<Self, StrategyError> {
        if choices.len() != m.num_states() {
            return Err(StrategyError::WrongSize {
                expected: m.num_states(),
                found: choices.len(),
            });
        }
        for (q, joint) in choices.iter().enumerate() {
            check_choice(m, &coalition, StateId::from(q), joint)?;
        }
        Ok(StrategyProfile { coalition, choices })
    }

    /// Every coalition member plays its first legal action everywhere.
    pub fn first_legal(m: &Model, coalition: &[AgentId]) -> Self {
        let choices = m
            .states()
            .map(|q| coalition.iter().map(|&a| m.protocol(a, q)[0]).collect())
            .collect();
        StrategyProfile {
            coalition: coalition.to_vec(),
            choices,
        }
    }

    pub fn coalition(&self) -> &[AgentId] {
        &self.coalition
    }

    pub fn joint(&self, q: StateId) -> &JointAction {
        &self.choices[q.index()]
    }

    /// Action of the coalition member at position `pos` in the coalition list.
    pub fn action(&self, pos: usize, q: StateId) -> ActionId {
        self.choices[q.index()][pos]
    }

    pub fn position(&self, agent: AgentId) -> Option<usize> {
        self.coalition.iter().position(|&a| a == agent)
    }

    pub(crate) fn set_joint(&mut self, q: StateId, joint: JointAction) {
        self.choices[q.index()] = joint;
    }

    pub(crate) fn set_action(&mut self, pos: usize, q: StateId, action: ActionId) {
        self.choices[q.index()][pos] = action;
    }

    /// Restriction to `states`.
    pub fn restrict(&self, states: impl IntoIterator<Item = StateId>) -> PartialStrategy {
        PartialStrategy {
            coalition: self.coalition.clone(),
            choices: states
                .into_iter()
                .map(|q| (q, self.choices[q.index()].clone()))
                .collect(),
        }
    }

    pub fn to_file(&self) -> StrategyFile {
        StrategyFile {
            coalition: self.coalition.clone(),
            choices: self
                .choices
                .iter()
                .enumerate()
                .map(|(q, j)| ChoiceEntry {
                    state: StateId::from(q),
                    action: j.to_vec(),
                })
                .collect(),
            domain: None,
        }
    }

    pub fn from_file(m: &Model, file: &StrategyFile) -> Result<Self, StrategyError> {
        let mut slots: Vec<Option<JointAction>> = vec![None; m.num_states()];
        for entry in &file.choices {
            check_choice(m, &file.coalition, entry.state, &entry.action)?;
            let slot = &mut slots[entry.state.index()];
            if slot.is_some() {
                return Err(StrategyError::DuplicateState(entry.state));
            }
            *slot = Some(entry.action.iter().copied().collect());
        }
        let choices = slots
            .into_iter()
            .enumerate()
            .map(|(q, s)| s.ok_or(StrategyError::MissingState(StateId::from(q))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StrategyProfile {
            coalition: file.coalition.clone(),
            choices,
        })
    }
}

impl Policy for StrategyProfile {
    fn coalition(&self) -> &[AgentId] {
        &self.coalition
    }

    #[inline]
    fn choice(&self, q: StateId) -> Option<&[ActionId]> {
        Some(&self.choices[q.index()])
    }
}

/// A strategy defined on a subset of states. Choices are joint coalition
/// actions; the view of a single member is [`PartialStrategy::projected`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialStrategy {
    coalition: Vec<AgentId>,
    choices: BTreeMap<StateId, JointAction>,
}

impl PartialStrategy {
    pub fn new(coalition: Vec<AgentId>) -> Self {
        PartialStrategy {
            coalition,
            choices: BTreeMap::new(),
        }
    }

    pub fn from_choices(
        m: &Model,
        coalition: Vec<AgentId>,
        choices: impl IntoIterator<Item = (StateId, JointAction)>,
    ) -> Result<Self, StrategyError> {
        let mut out = PartialStrategy::new(coalition);
        for (q, j) in choices {
            check_choice(m, &out.coalition, q, &j)?;
            if out.choices.insert(q, j).is_some() {
                return Err(StrategyError::DuplicateState(q));
            }
        }
        Ok(out)
    }

    pub fn coalition(&self) -> &[AgentId] {
        &self.coalition
    }

    pub fn get(&self, q: StateId) -> Option<&JointAction> {
        self.choices.get(&q)
    }

    pub fn projected(&self, pos: usize, q: StateId) -> Option<ActionId> {
        self.choices.get(&q).map(|j| j[pos])
    }

    pub fn contains(&self, q: StateId) -> bool {
        self.choices.contains_key(&q)
    }

    pub fn domain(&self) -> impl Iterator<Item = StateId> + '_ {
        self.choices.keys().copied()
    }

    pub fn domain_set(&self, m: &Model) -> StateSet {
        set_of(m, self.domain())
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &JointAction)> {
        self.choices.iter().map(|(q, j)| (*q, j))
    }

    pub(crate) fn set_component(&mut self, pos: usize, q: StateId, action: ActionId) {
        if let Some(j) = self.choices.get_mut(&q) {
            j[pos] = action;
        }
    }

    pub fn to_file(&self) -> StrategyFile {
        StrategyFile {
            coalition: self.coalition.clone(),
            choices: self
                .choices
                .iter()
                .map(|(q, j)| ChoiceEntry {
                    state: *q,
                    action: j.to_vec(),
                })
                .collect(),
            domain: Some(self.choices.keys().copied().collect()),
        }
    }
}

impl Policy for PartialStrategy {
    fn coalition(&self) -> &[AgentId] {
        &self.coalition
    }

    #[inline]
    fn choice(&self, q: StateId) -> Option<&[ActionId]> {
        self.choices.get(&q).map(|j| j.as_slice())
    }
}

/// A policy with some states removed from its domain.
pub struct Excluding<'a, P> {
    pub inner: &'a P,
    pub excluded: &'a StateSet,
}

impl<P: Policy> Policy for Excluding<'_, P> {
    fn coalition(&self) -> &[AgentId] {
        self.inner.coalition()
    }

    #[inline]
    fn choice(&self, q: StateId) -> Option<&[ActionId]> {
        if self.excluded.contains(q.index()) {
            None
        } else {
            self.inner.choice(q)
        }
    }
}

/// JSON form shared by total and partial strategies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub coalition: Vec<AgentId>,
    pub choices: Vec<ChoiceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<StateId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceEntry {
    pub state: StateId,
    pub action: Vec<ActionId>,
}

/// Least superset of `start` closed under one step of `sigma`. States
/// outside the policy's domain are kept but not expanded.
pub fn reach<P: Policy>(m: &Model, start: &StateSet, sigma: &P) -> StateSet {
    let mut seen = start.clone();
    let mut stack: Vec<StateId> = states_in(start).collect();
    let coalition = sigma.coalition();
    while let Some(q) = stack.pop() {
        if let Some(joint) = sigma.choice(q) {
            m.for_each_successor(q, coalition, joint, |s| {
                if !seen.put(s.index()) {
                    stack.push(s);
                }
            });
        }
    }
    seen
}

/// Unordered pair of distinct states, smaller id first.
pub type StatePair = (StateId, StateId);

pub type ConflictSet = BTreeSet<StatePair>;

/// Pairs of `states` on which the coalition member at position `pos`
/// is told to do different things.
pub fn conflicts(states: &StateSet, sigma: &PartialStrategy, pos: usize) -> ConflictSet {
    let picked: Vec<(StateId, ActionId)> = states_in(states)
        .filter_map(|q| sigma.projected(pos, q).map(|a| (q, a)))
        .collect();
    let mut out = ConflictSet::new();
    for (i, &(q, a)) in picked.iter().enumerate() {
        for &(r, b) in &picked[i + 1..] {
            if a != b {
                out.insert((q, r));
            }
        }
    }
    out
}

/// `conflicts` addressed by agent id rather than coalition position.
pub fn agent_conflicts(
    agent: AgentId,
    states: &StateSet,
    sigma: &PartialStrategy,
) -> Option<ConflictSet> {
    let pos = sigma.coalition().iter().position(|&a| a == agent)?;
    Some(conflicts(states, sigma, pos))
}

/// True iff no state in `dom(sigma)` carries the proposition.
pub fn is_prop_free(m: &Model, sigma: &PartialStrategy, prop: &str) -> bool {
    match m.prop_states(prop) {
        Some(labelled) => sigma.domain().all(|q| !labelled.contains(q.index())),
        None => true,
    }
}

/// True iff no cycle through `dom(sigma) \ exits` is reachable from `from`.
pub fn is_loopless<P: Policy>(m: &Model, sigma: &P, from: &StateSet, exits: &StateSet) -> bool {
    find_cycle(m, sigma, states_in(from), exits).is_none()
}

/// A play that ends in a cycle avoiding the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lasso {
    pub stem: Vec<StateId>,
    pub cycle: Vec<StateId>,
}

/// Iterative DFS over states where `sigma` is defined and which are not in
/// `stop`; returns the first cycle found.
fn find_cycle<P: Policy>(
    m: &Model,
    sigma: &P,
    starts: impl IntoIterator<Item = StateId>,
    stop: &StateSet,
) -> Option<Lasso> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let n = m.num_states();
    let mut colour = vec![WHITE; n];
    let coalition = sigma.coalition();
    let expandable = |q: StateId| !stop.contains(q.index()) && sigma.choice(q).is_some();

    for root in starts {
        if colour[root.index()] != WHITE || !expandable(root) {
            continue;
        }
        // (state, successors, next index)
        let mut stack: Vec<(StateId, Vec<StateId>, usize)> = Vec::new();
        let succ = |q: StateId| {
            let mut v = Vec::new();
            m.for_each_successor(q, coalition, sigma.choice(q).unwrap(), |s| v.push(s));
            v.sort();
            v.dedup();
            v
        };
        colour[root.index()] = GREY;
        stack.push((root, succ(root), 0));
        while let Some(top) = stack.last_mut() {
            if top.2 == top.1.len() {
                colour[top.0.index()] = BLACK;
                stack.pop();
                continue;
            }
            let next = top.1[top.2];
            top.2 += 1;
            if !expandable(next) {
                continue;
            }
            match colour[next.index()] {
                WHITE => {
                    colour[next.index()] = GREY;
                    let s = succ(next);
                    stack.push((next, s, 0));
                }
                GREY => {
                    let path: Vec<StateId> = stack.iter().map(|f| f.0).collect();
                    let at = path.iter().position(|&p| p == next).unwrap();
                    return Some(Lasso {
                        stem: path[..at].to_vec(),
                        cycle: path[at..].to_vec(),
                    });
                }
                _ => {}
            }
        }
    }
    None
}

/// Which outcome set a verification quantifies over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoMode {
    /// Plays from the initial state only.
    Perfect,
    /// Plays from every state some coalition member confuses with the initial one.
    Imperfect,
}

pub fn start_states(m: &Model, goal: &ReachabilityGoal, mode: InfoMode) -> StateSet {
    match mode {
        InfoMode::Perfect => set_of(m, [goal.initial_state]),
        InfoMode::Imperfect => goal.initial_class(m),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WinCheck {
    pub winning: bool,
    pub counterexample: Option<Lasso>,
}

/// Does every play of `profile` from the start states reach the target?
///
/// Profiles are memoryless and the model finite, so a losing play exists iff
/// a target-free cycle is reachable from a start state.
pub fn verify_winning(
    m: &Model,
    goal: &ReachabilityGoal,
    profile: &StrategyProfile,
    mode: InfoMode,
) -> WinCheck {
    let targets = goal.targets(m);
    let starts = start_states(m, goal, mode);
    let lasso = find_cycle(m, profile, states_in(&starts), &targets);
    WinCheck {
        winning: lasso.is_none(),
        counterexample: lasso,
    }
}

pub fn is_winning(
    m: &Model,
    goal: &ReachabilityGoal,
    profile: &StrategyProfile,
    mode: InfoMode,
) -> bool {
    verify_winning(m, goal, profile, mode).winning
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformCheck {
    pub uniform: bool,
    pub violations: Vec<(AgentId, StateId, StateId)>,
}

/// Checks that each coalition member acts identically on indistinguishable
/// states of `restrict_to`.
pub fn verify_uniform(
    m: &Model,
    coalition: &[AgentId],
    profile: &StrategyProfile,
    restrict_to: &StateSet,
) -> UniformCheck {
    let mut violations = Vec::new();
    for &agent in coalition {
        let Some(pos) = profile.position(agent) else {
            continue;
        };
        for class in m.classes(agent) {
            let members: Vec<StateId> = class
                .iter()
                .copied()
                .filter(|q| restrict_to.contains(q.index()))
                .collect();
            for (i, &q) in members.iter().enumerate() {
                for &r in &members[i + 1..] {
                    if profile.action(pos, q) != profile.action(pos, r) {
                        violations.push((agent, q, r));
                    }
                }
            }
        }
    }
    UniformCheck {
        uniform: violations.is_empty(),
        violations,
    }
}

/// Lazy enumeration of the plays of `profile` starting in the imperfect-
/// information start set. A play stops at the first target state or at the
/// first repeated state.
pub struct OutcomePaths<'a> {
    model: &'a Model,
    profile: &'a StrategyProfile,
    targets: StateSet,
    stack: Vec<Vec<StateId>>,
}

pub fn outcome_paths<'a>(
    m: &'a Model,
    goal: &ReachabilityGoal,
    profile: &'a StrategyProfile,
) -> OutcomePaths<'a> {
    let starts = goal.initial_class(m);
    let mut stack: Vec<Vec<StateId>> = states_in(&starts).map(|q| vec![q]).collect();
    stack.reverse();
    OutcomePaths {
        model: m,
        profile,
        targets: goal.targets(m),
        stack,
    }
}

impl Iterator for OutcomePaths<'_> {
    type Item = Vec<StateId>;

    fn next(&mut self) -> Option<Vec<StateId>> {
        while let Some(play) = self.stack.pop() {
            let last = *play.last().unwrap();
            let revisit = play[..play.len() - 1].contains(&last);
            if revisit || self.targets.contains(last.index()) {
                return Some(play);
            }
            let mut succ = Vec::new();
            self.model.for_each_successor(
                last,
                self.profile.coalition(),
                self.profile.joint(last),
                |s| succ.push(s),
            );
            succ.sort();
            succ.dedup();
            for &s in succ.iter().rev() {
                let mut ext = play.clone();
                ext.push(s);
                self.stack.push(ext);
            }
        }
        None
    }
}

/// Optimizer bookkeeping attached to one information set.
///
/// `rdom`, `out` and `conflicts` are caches derived from `sigma` and `input`;
/// [`PartialStrategyRecord::refresh`] must run after either changes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialStrategyRecord {
    pub id: usize,
    pub agent: AgentId,
    /// Position of `agent` in the coalition.
    pub pos: usize,
    pub members: StateSet,
    pub sigma: PartialStrategy,
    pub input: StateSet,
    pub rdom: StateSet,
    pub conflicts: ConflictSet,
    pub out: StateSet,
}

impl PartialStrategyRecord {
    pub fn new(
        m: &Model,
        id: usize,
        agent: AgentId,
        pos: usize,
        members: StateSet,
        sigma: PartialStrategy,
        input: StateSet,
    ) -> Self {
        let mut r = PartialStrategyRecord {
            id,
            agent,
            pos,
            members,
            sigma,
            input,
            rdom: StateSet::new(),
            conflicts: ConflictSet::new(),
            out: StateSet::new(),
        };
        r.refresh(m);
        r
    }

    /// `Reach(In, sigma)`; equals `rdom ∪ out`.
    pub fn reach(&self) -> StateSet {
        let mut r = self.rdom.clone();
        r.union_with(&self.out);
        r
    }

    pub fn refresh(&mut self, m: &Model) {
        let reached = reach(m, &self.input, &self.sigma);
        let mut rdom = reached.clone();
        rdom.intersect_with(&self.members);
        let mut out = reached;
        out.difference_with(&self.members);
        self.conflicts = conflicts(&rdom, &self.sigma, self.pos);
        self.rdom = rdom;
        self.out = out;
    }

    /// True iff the cached sets match a fresh recomputation.
    pub fn is_consistent(&self, m: &Model) -> bool {
        let mut fresh = self.clone();
        fresh.refresh(m);
        fresh == *self
    }

    pub fn to_file(&self) -> RecordFile {
        RecordFile {
            id: self.id,
            agent: self.agent,
            members: states_in(&self.members).collect(),
            sigma: self.sigma.to_file(),
            input: states_in(&self.input).collect(),
            rdom: states_in(&self.rdom).collect(),
            conflicts: self.conflicts.iter().map(|&(a, b)| [a, b]).collect(),
            out: states_in(&self.out).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFile {
    pub id: usize,
    pub agent: AgentId,
    pub members: Vec<StateId>,
    pub sigma: StrategyFile,
    pub input: Vec<StateId>,
    pub rdom: Vec<StateId>,
    pub conflicts: Vec<[StateId; 2]>,
    pub out: Vec<StateId>,
}

/// Input states of an information set: members in the start set, plus
/// members entered from outside the set while following `profile` from the
/// start set. `reach_from_start` must be `Reach(start, profile)`.
///
/// This is the literal two-level reach formula; the optimizer uses the
/// equivalent single pass in [`input_states_all`].
pub fn input_states(
    m: &Model,
    members: &StateSet,
    profile: &StrategyProfile,
    start: &StateSet,
    reach_from_start: &StateSet,
) -> StateSet {
    let mut outside = reach_from_start.clone();
    outside.difference_with(members);
    let rest = Excluding {
        inner: profile,
        excluded: members,
    };
    let mut input = reach(m, &outside, &rest);
    input.intersect_with(members);
    let mut initial = start.clone();
    initial.intersect_with(members);
    input.union_with(&initial);
    input
}

/// Input states of several disjoint information sets of one agent in one
/// pass over the edges of `reach_from_start`.
pub fn input_states_all(
    m: &Model,
    members: &[&StateSet],
    profile: &StrategyProfile,
    start: &StateSet,
    reach_from_start: &StateSet,
) -> Vec<StateSet> {
    let n = m.num_states();
    let mut owner = vec![usize::MAX; n];
    for (i, set) in members.iter().enumerate() {
        for q in set.ones() {
            owner[q] = i;
        }
    }
    let mut out: Vec<StateSet> = members
        .iter()
        .map(|set| {
            let mut s = start.clone();
            s.intersect_with(set);
            s
        })
        .collect();
    for p in states_in(reach_from_start) {
        let from = owner[p.index()];
        m.for_each_successor(p, profile.coalition(), profile.joint(p), |s| {
            let to = owner[s.index()];
            if to != usize::MAX && to != from {
                out[to].insert(s.index());
            }
        });
    }
    out
}

pub fn reach_from_initial(
    m: &Model,
    goal: &ReachabilityGoal,
    profile: &StrategyProfile,
) -> StateSet {
    reach(m, &goal.initial_class(m), profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::empty_set;
    use crate::model::fixtures::model;
    use smallvec::smallvec;

    fn a(x: u32) -> JointAction {
        smallvec![ActionId(x)]
    }

    /// 0 -a0-> 1 -a0-> 2(win); 0 -a1-> 0 (self loop); classes {0,1},{2}
    fn chain() -> Model {
        Model::from_file(&model(
            1,
            3,
            vec![vec![vec![0, 1], vec![0, 1], vec![0, 1]]],
            &[
                (0, &[0], 1),
                (0, &[1], 0),
                (1, &[0], 2),
                (1, &[1], 1),
                (2, &[0], 2),
                (2, &[1], 2),
            ],
            &[2],
            Some(vec![vec![vec![0, 1], vec![2]]]),
        ))
        .unwrap()
    }

    fn goal() -> ReachabilityGoal {
        ReachabilityGoal::new(vec![AgentId(0)], "win", StateId(0))
    }

    #[test]
    fn reach_without_domain_is_start() {
        let m = chain();
        let sigma = PartialStrategy::new(vec![AgentId(0)]);
        let r = reach(&m, &set_of(&m, [StateId(0)]), &sigma);
        assert_eq!(states_in(&r).collect::<Vec<_>>(), vec![StateId(0)]);
    }

    #[test]
    fn reach_includes_frontier() {
        let m = chain();
        let sigma = PartialStrategy::from_choices(
            &m,
            vec![AgentId(0)],
            [(StateId(0), a(0)), (StateId(1), a(0))],
        )
        .unwrap();
        let r = reach(&m, &set_of(&m, [StateId(0)]), &sigma);
        assert_eq!(
            states_in(&r).collect::<Vec<_>>(),
            vec![StateId(0), StateId(1), StateId(2)]
        );
    }

    #[test]
    fn conflict_counts() {
        let m = Model::from_file(&model(
            1,
            4,
            vec![vec![vec![0, 1]; 4]],
            &[
                (0, &[0], 0),
                (0, &[1], 0),
                (1, &[0], 1),
                (1, &[1], 1),
                (2, &[0], 2),
                (2, &[1], 2),
                (3, &[0], 3),
                (3, &[1], 3),
            ],
            &[0],
            Some(vec![vec![vec![0, 1, 2, 3]]]),
        ))
        .unwrap();
        let all = set_of(&m, m.states());
        let constant =
            PartialStrategy::from_choices(&m, vec![AgentId(0)], m.states().map(|q| (q, a(0))))
                .unwrap();
        assert!(conflicts(&all, &constant, 0).is_empty());
        let split = PartialStrategy::from_choices(
            &m,
            vec![AgentId(0)],
            [
                (StateId(0), a(0)),
                (StateId(1), a(0)),
                (StateId(2), a(1)),
                (StateId(3), a(1)),
            ],
        )
        .unwrap();
        // disagreeing pairs: {0,2},{0,3},{1,2},{1,3}
        let c = conflicts(&all, &split, 0);
        assert_eq!(c.len(), 4);
        let pair = set_of(&m, [StateId(0), StateId(2)]);
        assert_eq!(
            conflicts(&pair, &split, 0).into_iter().collect::<Vec<_>>(),
            vec![(StateId(0), StateId(2))]
        );
    }

    #[test]
    fn winning_and_lasso() {
        let m = chain();
        let good = StrategyProfile::new(&m, vec![AgentId(0)], vec![a(0), a(0), a(0)]).unwrap();
        assert!(verify_winning(&m, &goal(), &good, InfoMode::Imperfect).winning);
        let bad = StrategyProfile::new(&m, vec![AgentId(0)], vec![a(0), a(1), a(0)]).unwrap();
        let check = verify_winning(&m, &goal(), &bad, InfoMode::Perfect);
        assert!(!check.winning);
        let lasso = check.counterexample.unwrap();
        assert_eq!(lasso.cycle, vec![StateId(1)]);
        assert_eq!(lasso.stem, vec![StateId(0)]);
    }

    #[test]
    fn uniformity() {
        let m = chain();
        let all = set_of(&m, m.states());
        let good = StrategyProfile::new(&m, vec![AgentId(0)], vec![a(0), a(0), a(1)]).unwrap();
        assert!(verify_uniform(&m, &[AgentId(0)], &good, &all).uniform);
        let bad = StrategyProfile::new(&m, vec![AgentId(0)], vec![a(0), a(1), a(0)]).unwrap();
        let check = verify_uniform(&m, &[AgentId(0)], &bad, &all);
        assert_eq!(check.violations, vec![(AgentId(0), StateId(0), StateId(1))]);
        // restricted to a single state the pair disappears
        let only0 = set_of(&m, [StateId(0)]);
        assert!(verify_uniform(&m, &[AgentId(0)], &bad, &only0).uniform);
    }

    #[test]
    fn looplessness_with_exits() {
        let m = chain();
        let looping =
            PartialStrategy::from_choices(&m, vec![AgentId(0)], [(StateId(0), a(1))]).unwrap();
        let from = set_of(&m, [StateId(0)]);
        let none = empty_set(&m);
        assert!(!is_loopless(&m, &looping, &from, &none));
        let acyclic = PartialStrategy::from_choices(
            &m,
            vec![AgentId(0)],
            [(StateId(0), a(0)), (StateId(1), a(0))],
        )
        .unwrap();
        assert!(is_loopless(&m, &acyclic, &from, &none));
        // the target self-loop is harmless once targets are exits
        let at_target =
            PartialStrategy::from_choices(&m, vec![AgentId(0)], [(StateId(2), a(0))]).unwrap();
        let t = set_of(&m, [StateId(2)]);
        assert!(!is_loopless(&m, &at_target, &t, &none));
        assert!(is_loopless(&m, &at_target, &t, &t));
    }

    #[test]
    fn outcome_paths_single_play() {
        let m = chain();
        let good = StrategyProfile::new(&m, vec![AgentId(0)], vec![a(0), a(0), a(0)]).unwrap();
        let g = ReachabilityGoal::new(vec![AgentId(0)], "win", StateId(2));
        let plays: Vec<_> = outcome_paths(&m, &g, &good).collect();
        assert_eq!(plays, vec![vec![StateId(2)]]);
        // from the class {0,1}: two plays
        let plays: Vec<_> = outcome_paths(&m, &goal(), &good).collect();
        assert_eq!(
            plays,
            vec![
                vec![StateId(0), StateId(1), StateId(2)],
                vec![StateId(1), StateId(2)]
            ]
        );
    }

    #[test]
    fn outcome_paths_branching() {
        // q0 has two opponent responses; Q0 = {0,1}
        let m = Model::from_file(&model(
            2,
            4,
            vec![vec![vec![0]; 4], vec![vec![0, 1]; 4]],
            &[
                (0, &[0, 0], 2),
                (0, &[0, 1], 3),
                (1, &[0, 0], 2),
                (1, &[0, 1], 2),
                (2, &[0, 0], 2),
                (2, &[0, 1], 2),
                (3, &[0, 0], 0),
                (3, &[0, 1], 0),
            ],
            &[2],
            Some(vec![
                vec![vec![0, 1], vec![2], vec![3]],
                vec![vec![0], vec![1], vec![2], vec![3]],
            ]),
        ))
        .unwrap();
        let p = StrategyProfile::first_legal(&m, &[AgentId(0)]);
        let plays: Vec<_> = outcome_paths(&m, &goal(), &p).collect();
        // 0,2 | 0,3,0 | 1,2
        assert_eq!(plays.len(), 3);
        for play in &plays {
            for w in play.windows(2) {
                assert!(m.moves(w[0]).iter().any(|mv| mv.to == w[1]));
            }
        }
        assert!(!verify_winning(&m, &goal(), &p, InfoMode::Imperfect).winning);
    }

    #[test]
    fn prop_freeness() {
        let m = chain();
        let s = PartialStrategy::from_choices(&m, vec![AgentId(0)], [(StateId(0), a(0))]).unwrap();
        assert!(is_prop_free(&m, &s, "win"));
        let t = PartialStrategy::from_choices(&m, vec![AgentId(0)], [(StateId(2), a(0))]).unwrap();
        assert!(!is_prop_free(&m, &t, "win"));
    }

    #[test]
    fn strategy_file_round_trip() {
        let m = chain();
        let p = StrategyProfile::new(&m, vec![AgentId(0)], vec![a(0), a(1), a(0)]).unwrap();
        let text = serde_json::to_string(&p.to_file()).unwrap();
        let back: StrategyFile = serde_json::from_str(&text).unwrap();
        assert_eq!(StrategyProfile::from_file(&m, &back).unwrap(), p);
        let mut broken = p.to_file();
        broken.choices.pop();
        assert!(matches!(
            StrategyProfile::from_file(&m, &broken),
            Err(StrategyError::MissingState(StateId(2)))
        ));
    }
}
