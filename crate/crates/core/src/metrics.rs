//! Strategy quality metrics reported by the experiment harness.

use crate::model::{states_in, Model, ReachabilityGoal, StateSet};
use crate::strategy::{reach, StrategyProfile};

/// States reachable under `profile` from the coalition's initial class.
pub fn strategy_reach(m: &Model, goal: &ReachabilityGoal, profile: &StrategyProfile) -> StateSet {
    reach(m, &goal.initial_class(m), profile)
}

/// `#str`: number of states reachable in the strategy.
pub fn metric_str(m: &Model, goal: &ReachabilityGoal, profile: &StrategyProfile) -> usize {
    strategy_reach(m, goal, profile).count_ones(..)
}

/// `#ep`: reachable states at which some coalition member disagrees with
/// itself on an indistinguishable reachable state. Each state counts once.
pub fn metric_ep(m: &Model, goal: &ReachabilityGoal, profile: &StrategyProfile) -> usize {
    let reachable = strategy_reach(m, goal, profile);
    broken_states(m, goal, profile, &reachable).count_ones(..)
}

pub fn broken_states(
    m: &Model,
    goal: &ReachabilityGoal,
    profile: &StrategyProfile,
    reachable: &StateSet,
) -> StateSet {
    let mut broken = StateSet::with_capacity(m.num_states());
    for &agent in &goal.coalition {
        let Some(pos) = profile.position(agent) else {
            continue;
        };
        let mut done = vec![false; m.classes(agent).len()];
        for q in states_in(reachable) {
            let c = m.class_index(agent, q);
            if done[c] {
                continue;
            }
            done[c] = true;
            let members: Vec<_> = m
                .epistemic_class(agent, q)
                .iter()
                .copied()
                .filter(|s| reachable.contains(s.index()))
                .collect();
            // with two distinct actions in a class, every member disagrees with someone
            let first = profile.action(pos, members[0]);
            if members.iter().any(|&s| profile.action(pos, s) != first) {
                for s in members {
                    broken.insert(s.index());
                }
            }
        }
    }
    broken
}
