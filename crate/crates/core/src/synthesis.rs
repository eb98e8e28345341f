//! Perfect-information synthesis (attractor) and the decomposition of the
//! resulting strategy into per-information-set records.

use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    empty_set, set_of, states_in, AgentId, GoalError, JointAction, Model, ReachabilityGoal,
    StateId, StateSet,
};
use crate::strategy::{input_states_all, reach, PartialStrategyRecord, StrategyProfile};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Goal(#[from] GoalError),
    #[error("synthesis deadline exceeded")]
    Timeout,
}

/// Perfect-information winning region with ranks and safe moves.
#[derive(Clone, Debug)]
pub struct AttractorResult {
    pub winning_region: StateSet,
    /// Distance to the target; `None` outside the region.
    pub rank: Vec<Option<u32>>,
    /// Moves at each ranked non-target state whose every completion lands in
    /// a strictly smaller rank. Empty at targets and outside the region.
    pub safe_moves: Vec<Vec<JointAction>>,
    /// First safe move inside the region, first legal move elsewhere.
    pub profile: StrategyProfile,
}

impl AttractorResult {
    pub fn wins_from(&self, q: StateId) -> bool {
        self.winning_region.contains(q.index())
    }
}

fn max_rank(
    m: &Model,
    rank: &[Option<u32>],
    q: StateId,
    coalition: &[AgentId],
    joint: &[crate::model::ActionId],
) -> Option<u32> {
    let mut worst = Some(0u32);
    m.for_each_successor(q, coalition, joint, |s| {
        worst = match (worst, rank[s.index()]) {
            (Some(w), Some(r)) => Some(w.max(r)),
            _ => None,
        };
    });
    worst
}

/// Least fixpoint of "target, or the coalition can force the next state into
/// the region", computed round by round so that ranks are exact.
pub fn solve_attractor(
    m: &Model,
    goal: &ReachabilityGoal,
    deadline: Option<Instant>,
) -> Result<AttractorResult, SynthesisError> {
    goal.check(m)?;
    let coalition = &goal.coalition;
    let n = m.num_states();
    let targets = goal.targets(m);
    let mut rank: Vec<Option<u32>> = vec![None; n];
    for q in targets.ones() {
        rank[q] = Some(0);
    }
    let joint: Vec<Vec<JointAction>> = m
        .states()
        .map(|q| m.legal_joint_actions(q, coalition))
        .collect();

    let mut round = 0u32;
    loop {
        if let Some(d) = deadline {
            if Instant::now() >= d {
                return Err(SynthesisError::Timeout);
            }
        }
        round += 1;
        let added: Vec<usize> = (0..n)
            .filter(|&q| rank[q].is_none())
            .filter(|&q| {
                joint[q]
                    .iter()
                    .any(|j| max_rank(m, &rank, StateId::from(q), coalition, j).is_some())
            })
            .collect();
        if added.is_empty() {
            break;
        }
        for q in added {
            rank[q] = Some(round);
        }
    }

    let mut safe_moves = vec![Vec::new(); n];
    let mut profile = StrategyProfile::first_legal(m, coalition);
    let mut region = empty_set(m);
    for q in 0..n {
        let Some(r) = rank[q] else { continue };
        region.insert(q);
        if r == 0 {
            continue;
        }
        let state = StateId::from(q);
        safe_moves[q] = joint[q]
            .iter()
            .filter(|j| matches!(max_rank(m, &rank, state, coalition, j), Some(w) if w < r))
            .cloned()
            .collect();
        profile.set_joint(state, safe_moves[q][0].clone());
    }
    Ok(AttractorResult {
        winning_region: region,
        rank,
        safe_moves,
        profile,
    })
}

/// Attractor, or `None` when the initial state is outside the winning region.
pub fn attractor(m: &Model, goal: &ReachabilityGoal) -> Result<Option<AttractorResult>, GoalError> {
    match solve_attractor(m, goal, None) {
        Ok(a) if a.wins_from(goal.initial_state) => Ok(Some(a)),
        Ok(_) => Ok(None),
        Err(SynthesisError::Goal(e)) => Err(e),
        Err(SynthesisError::Timeout) => unreachable!("no deadline given"),
    }
}

/// Picks, per state of the region, a uniformly random safe move.
pub fn randomize_profile(att: &AttractorResult, seed: u64) -> StrategyProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = att.profile.clone();
    for (q, moves) in att.safe_moves.iter().enumerate() {
        if let Some(choice) = moves.choose(&mut rng) {
            profile.set_joint(StateId::from(q), choice.clone());
        }
    }
    profile
}

/// One epistemic class of a coalition member, restricted to the states the
/// synthesized strategy reaches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfoSet {
    pub id: usize,
    pub agent: AgentId,
    pub members: Vec<StateId>,
}

#[derive(Clone, Debug)]
pub struct SynthesisOutput {
    pub profile: StrategyProfile,
    pub attractor: AttractorResult,
    /// `Reach(Q0, profile)` at synthesis time.
    pub reachable: StateSet,
    pub info_sets: Vec<InfoSet>,
    /// Same order as `info_sets`.
    pub records: Vec<PartialStrategyRecord>,
}

/// Information sets of every coalition member over `reachable`, ordered by
/// depth-first discovery from the initial state along `profile`.
pub fn discover_info_sets(
    m: &Model,
    goal: &ReachabilityGoal,
    profile: &StrategyProfile,
    reachable: &StateSet,
) -> Vec<InfoSet> {
    let n = m.num_states();
    let mut visited = vec![false; n];
    let mut listed: Vec<Vec<bool>> = goal
        .coalition
        .iter()
        .map(|&a| vec![false; m.classes(a).len()])
        .collect();
    let mut out = Vec::new();

    let mut roots = vec![goal.initial_state];
    roots.extend(states_in(reachable).filter(|&q| q != goal.initial_state));
    for root in roots {
        if visited[root.index()] {
            continue;
        }
        let mut stack = vec![root];
        while let Some(q) = stack.pop() {
            if visited[q.index()] {
                continue;
            }
            visited[q.index()] = true;
            for (pos, &agent) in goal.coalition.iter().enumerate() {
                let c = m.class_index(agent, q);
                if !listed[pos][c] {
                    listed[pos][c] = true;
                    let members = m
                        .epistemic_class(agent, q)
                        .iter()
                        .copied()
                        .filter(|s| reachable.contains(s.index()))
                        .collect();
                    out.push(InfoSet {
                        id: out.len(),
                        agent,
                        members,
                    });
                }
            }
            // moves are sorted by joint action, so this visits successors in
            // ascending (joint action, state) order
            let mut succ = Vec::new();
            m.for_each_successor(q, profile.coalition(), profile.joint(q), |s| {
                if !succ.contains(&s) {
                    succ.push(s)
                }
            });
            for s in succ.into_iter().rev() {
                if !visited[s.index()] {
                    stack.push(s);
                }
            }
        }
    }
    out
}

/// Builds one record per information set for the given profile.
pub fn build_records(
    m: &Model,
    goal: &ReachabilityGoal,
    profile: &StrategyProfile,
    info_sets: &[InfoSet],
) -> Vec<PartialStrategyRecord> {
    let start = goal.initial_class(m);
    let global = reach(m, &start, profile);
    let members: Vec<StateSet> = info_sets
        .iter()
        .map(|i| set_of(m, i.members.iter().copied()))
        .collect();
    let mut records = Vec::with_capacity(info_sets.len());
    for (pos, &agent) in goal.coalition.iter().enumerate() {
        let idx: Vec<usize> = (0..info_sets.len())
            .filter(|&i| info_sets[i].agent == agent)
            .collect();
        let sets: Vec<&StateSet> = idx.iter().map(|&i| &members[i]).collect();
        let inputs = input_states_all(m, &sets, profile, &start, &global);
        for (k, &i) in idx.iter().enumerate() {
            records.push(PartialStrategyRecord::new(
                m,
                info_sets[i].id,
                agent,
                pos,
                members[i].clone(),
                profile.restrict(info_sets[i].members.iter().copied()),
                inputs[k].clone(),
            ));
        }
    }
    records.sort_by_key(|r| r.id);
    records
}

/// Synthesizes a random perfect-information winning strategy and splits it
/// into ordered per-information-set records. `Ok(None)` when no
/// perfect-information winning strategy exists from the initial state.
pub fn strat_synth(
    m: &Model,
    goal: &ReachabilityGoal,
    seed: u64,
) -> Result<Option<SynthesisOutput>, GoalError> {
    match strat_synth_until(m, goal, seed, None) {
        Ok(out) => Ok(out),
        Err(SynthesisError::Goal(e)) => Err(e),
        Err(SynthesisError::Timeout) => unreachable!("no deadline given"),
    }
}

pub fn strat_synth_until(
    m: &Model,
    goal: &ReachabilityGoal,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<Option<SynthesisOutput>, SynthesisError> {
    let att = solve_attractor(m, goal, deadline)?;
    if !att.wins_from(goal.initial_state) {
        return Ok(None);
    }
    let profile = randomize_profile(&att, seed);
    let reachable = reach(m, &goal.initial_class(m), &profile);
    let info_sets = discover_info_sets(m, goal, &profile, &reachable);
    let records = build_records(m, goal, &profile, &info_sets);
    Ok(Some(SynthesisOutput {
        profile,
        attractor: att,
        reachable,
        info_sets,
        records,
    }))
}
