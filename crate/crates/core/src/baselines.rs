//! Reference procedures for uniform strategy existence: exhaustive search
//! over uniform profiles and a cheap pair of sound bounds.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::model::{
    states_in, ActionId, AgentId, GoalError, JointAction, Model, ReachabilityGoal, StateId,
    StateSet,
};
use crate::strategy::{is_winning, InfoMode, StrategyProfile};
use crate::synthesis::attractor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BruteForce,
    Approximation,
}

#[derive(Clone, Debug)]
pub struct BaselineVerdict {
    pub method: Method,
    /// `None` when undecided (timeout, or inconclusive bounds).
    pub answer: Option<bool>,
    pub witness: Option<StrategyProfile>,
    pub elapsed: Duration,
    pub timed_out: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxBounds {
    /// A uniform winning strategy was built: the answer is yes.
    pub lower: bool,
    /// The coalition wins from every initial candidate with perfect
    /// information; when false the answer is no.
    pub upper: bool,
}

impl ApproxBounds {
    pub fn conclusive(&self) -> bool {
        self.lower || !self.upper
    }

    pub fn answer(&self) -> Option<bool> {
        self.conclusive().then_some(self.lower)
    }
}

/// One agent's choice on one of its classes.
struct Unit {
    pos: usize,
    members: Vec<StateId>,
    actions: Vec<ActionId>,
}

fn units(m: &Model, goal: &ReachabilityGoal) -> Vec<Unit> {
    let mut seen: Vec<Vec<bool>> = goal
        .coalition
        .iter()
        .map(|&a| vec![false; m.classes(a).len()])
        .collect();
    let mut out = Vec::new();
    for q in dfs_order(m, goal) {
        for (pos, &agent) in goal.coalition.iter().enumerate() {
            let c = m.class_index(agent, q);
            if std::mem::replace(&mut seen[pos][c], true) {
                continue;
            }
            let members = m.classes(agent)[c].clone();
            let actions = m.protocol(agent, members[0]).to_vec();
            out.push(Unit {
                pos,
                members,
                actions,
            });
        }
    }
    out
}

/// States reachable from the initial candidates under any behaviour, in
/// depth-first discovery order from the initial state, successors ascending.
fn dfs_order(m: &Model, goal: &ReachabilityGoal) -> Vec<StateId> {
    let mut seen = vec![false; m.num_states()];
    let mut order = Vec::new();
    let q0 = goal.initial_class(m);
    let roots = std::iter::once(goal.initial_state).chain(states_in(&q0));
    for root in roots {
        let mut stack = vec![root];
        while let Some(q) = stack.pop() {
            if std::mem::replace(&mut seen[q.index()], true) {
                continue;
            }
            order.push(q);
            let mut next: Vec<StateId> = m.moves(q).iter().map(|mv| mv.to).collect();
            next.sort_unstable();
            next.dedup();
            stack.extend(next.into_iter().rev().filter(|s| !seen[s.index()]));
        }
    }
    order
}

/// Enumerates every uniform profile over the classes reachable from the
/// initial candidates, in lexicographic order, until one wins from all of
/// them. Classes outside that region keep their first legal action.
pub fn brute_force_uniform(
    m: &Model,
    goal: &ReachabilityGoal,
    deadline: Option<Instant>,
) -> Result<BaselineVerdict, GoalError> {
    goal.check(m)?;
    let started = Instant::now();
    let units = units(m, goal);
    let mut profile = StrategyProfile::first_legal(m, &goal.coalition);
    let mut digits = vec![0usize; units.len()];
    for u in &units {
        for &q in &u.members {
            profile.set_action(u.pos, q, u.actions[0]);
        }
    }
    let verdict = |answer, witness, timed_out| BaselineVerdict {
        method: Method::BruteForce,
        answer,
        witness,
        elapsed: started.elapsed(),
        timed_out,
    };
    let mut tried: u64 = 0;
    loop {
        if tried.is_multiple_of(64) && deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(verdict(None, None, true));
        }
        tried += 1;
        if is_winning(m, goal, &profile, InfoMode::Imperfect) {
            return Ok(verdict(Some(true), Some(profile), false));
        }
        // the last unit is least significant
        let mut i = units.len();
        loop {
            if i == 0 {
                return Ok(verdict(Some(false), None, false));
            }
            i -= 1;
            let u = &units[i];
            digits[i] = (digits[i] + 1) % u.actions.len();
            for &q in &u.members {
                profile.set_action(u.pos, q, u.actions[digits[i]]);
            }
            if digits[i] != 0 {
                break;
            }
        }
    }
}

/// Partition of the states into common-knowledge components of the
/// coalition: a single agent's classes, or the connected components of the
/// union of the members' indistinguishability relations.
pub fn cells(m: &Model, coalition: &[AgentId]) -> Vec<Vec<StateId>> {
    let n = m.num_states();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &a in coalition {
        for class in m.classes(a) {
            let r = class[0].index();
            for q in &class[1..] {
                let (x, y) = (find(&mut parent, r), find(&mut parent, q.index()));
                parent[x] = y;
            }
        }
    }
    let mut id = vec![usize::MAX; n];
    let mut out: Vec<Vec<StateId>> = Vec::new();
    for q in 0..n {
        let root = find(&mut parent, q);
        if id[root] == usize::MAX {
            id[root] = out.len();
            out.push(Vec::new());
        }
        out[id[root]].push(StateId::from(q));
    }
    out
}

/// Joint actions legal at every state of `cell`.
fn common_actions(m: &Model, coalition: &[AgentId], cell: &[StateId]) -> Vec<JointAction> {
    m.legal_joint_actions(cell[0], coalition)
        .into_iter()
        .filter(|j| {
            cell.iter().all(|&q| {
                coalition
                    .iter()
                    .zip(j.iter())
                    .all(|(&a, act)| m.protocol(a, q).contains(act))
            })
        })
        .collect()
}

/// Attractor over whole cells played with one constant joint action.
/// Returns the won set and a uniform profile that wins from each of its
/// states.
pub fn uniform_attractor(m: &Model, goal: &ReachabilityGoal) -> (StateSet, StrategyProfile) {
    let coalition = &goal.coalition;
    let targets = goal.targets(m);
    let mut won = targets.clone();
    let mut profile = StrategyProfile::first_legal(m, coalition);
    let cells = cells(m, coalition);
    let options: Vec<Vec<JointAction>> = cells
        .iter()
        .map(|c| common_actions(m, coalition, c))
        .collect();
    let mut added = vec![false; cells.len()];
    loop {
        let mut grew = false;
        for (k, cell) in cells.iter().enumerate() {
            if added[k] || cell.iter().all(|q| targets.contains(q.index())) {
                continue;
            }
            let forced = options[k].iter().find(|j| {
                cell.iter()
                    .filter(|q| !targets.contains(q.index()))
                    .all(|&q| {
                        let mut ok = true;
                        m.for_each_successor(q, coalition, j, |s| ok &= won.contains(s.index()));
                        ok
                    })
            });
            let Some(j) = forced else { continue };
            for &q in cell {
                profile.set_joint(q, j.clone());
            }
            for &q in cell {
                won.insert(q.index());
            }
            added[k] = true;
            grew = true;
        }
        if !grew {
            break;
        }
    }
    (won, profile)
}

pub fn approx_bounds(m: &Model, goal: &ReachabilityGoal) -> Result<ApproxBounds, GoalError> {
    goal.check(m)?;
    let q0 = goal.initial_class(m);
    let upper = match attractor(m, goal)? {
        Some(att) => q0.is_subset(&att.winning_region),
        None => false,
    };
    let lower = upper && {
        let (won, _) = uniform_attractor(m, goal);
        q0.is_subset(&won)
    };
    Ok(ApproxBounds { lower, upper })
}

pub fn approx_verdict(m: &Model, goal: &ReachabilityGoal) -> Result<BaselineVerdict, GoalError> {
    let started = Instant::now();
    let bounds = approx_bounds(m, goal)?;
    let witness = bounds.lower.then(|| uniform_attractor(m, goal).1);
    Ok(BaselineVerdict {
        method: Method::Approximation,
        answer: bounds.answer(),
        witness,
        elapsed: started.elapsed(),
        timed_out: false,
    })
}

/// States reachable under any behaviour of every agent.
pub fn full_reach(m: &Model, start: &StateSet) -> StateSet {
    let mut seen = start.clone();
    let mut stack: Vec<StateId> = states_in(start).collect();
    while let Some(q) = stack.pop() {
        for mv in m.moves(q) {
            if !seen.put(mv.to.index()) {
                stack.push(mv.to);
            }
        }
    }
    seen
}
