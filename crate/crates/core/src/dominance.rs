//! Outcome- and uniformity-dominance between partial strategies over one
//! information set, and the search for a best-dominating replacement.
//!
//! Both criteria are subset-inclusion preorders: `σ1 ⪯_O σ2` iff
//! `Reach(In, σ2) ⊆ Reach(In, σ1)`, and `σ1 ⪯_U σ2` iff the conflicts of
//! `σ2` on its domain of relevance are a subset of those of `σ1`. Pairs that
//! are incomparable never dominate each other.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{states_in, ActionId, AgentId, Model, StateId, StateSet};
use crate::strategy::{
    conflicts, is_loopless, reach, ConflictSet, PartialStrategy, PartialStrategyRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Outcome,
    Uniformity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct DominanceVerdict {
    /// One of the two inclusions holds.
    pub comparable: bool,
    /// `σ1 ⪯ σ2`.
    pub dominates: bool,
    /// `σ1 ≺ σ2`.
    pub strictly: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DominanceError {
    #[error("agent {0} is not in the strategy's coalition")]
    NotInCoalition(AgentId),
    #[error("state {state} is outside the information set of agent {agent}")]
    OutsideClass { agent: AgentId, state: StateId },
}

/// What a partial strategy achieves from a fixed input set: its reach set
/// and its conflicts on the domain of relevance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Footprint {
    pub reach: StateSet,
    pub conflicts: ConflictSet,
}

impl Footprint {
    pub fn of(m: &Model, input: &StateSet, sigma: &PartialStrategy, pos: usize) -> Self {
        let reach = reach(m, input, sigma);
        let mut rdom = sigma.domain_set(m);
        rdom.intersect_with(&reach);
        let conflicts = conflicts(&rdom, sigma, pos);
        Footprint { reach, conflicts }
    }

    pub fn of_record(record: &PartialStrategyRecord) -> Self {
        Footprint {
            reach: record.reach(),
            conflicts: record.conflicts.clone(),
        }
    }
}

impl Criterion {
    pub fn other(self) -> Criterion {
        match self {
            Criterion::Outcome => Criterion::Uniformity,
            Criterion::Uniformity => Criterion::Outcome,
        }
    }

    /// `(σ1 ⪯ σ2, σ2 ⪯ σ1)` on this criterion.
    fn inclusions(self, first: &Footprint, second: &Footprint) -> (bool, bool) {
        match self {
            Criterion::Outcome => (
                second.reach.is_subset(&first.reach),
                first.reach.is_subset(&second.reach),
            ),
            Criterion::Uniformity => (
                second.conflicts.is_subset(&first.conflicts),
                first.conflicts.is_subset(&second.conflicts),
            ),
        }
    }

    pub fn verdict(self, first: &Footprint, second: &Footprint) -> DominanceVerdict {
        let (le, ge) = self.inclusions(first, second);
        DominanceVerdict {
            comparable: le || ge,
            dominates: le,
            strictly: le && !ge,
        }
    }
}

/// A `(primary, secondary)` domination: strict improvement on the primary
/// criterion without deterioration on the secondary one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dominance {
    pub primary: Criterion,
    pub secondary: Criterion,
}

impl Dominance {
    /// Uniformity first, outcome as the side condition.
    pub const UNIFORM: Dominance = Dominance {
        primary: Criterion::Uniformity,
        secondary: Criterion::Outcome,
    };
    /// Outcome first, uniformity as the side condition.
    pub const OUTCOME: Dominance = Dominance {
        primary: Criterion::Outcome,
        secondary: Criterion::Uniformity,
    };

    /// Is `first` dominated by `second`?
    pub fn holds(self, first: &Footprint, second: &Footprint) -> bool {
        self.primary.verdict(first, second).strictly
            && self.secondary.verdict(first, second).dominates
    }
}

fn check_same_class(
    m: &Model,
    agent: AgentId,
    input: &StateSet,
    sigmas: [&PartialStrategy; 2],
) -> Result<usize, DominanceError> {
    let pos = sigmas[0]
        .coalition()
        .iter()
        .position(|&a| a == agent)
        .ok_or(DominanceError::NotInCoalition(agent))?;
    if sigmas[1].coalition() != sigmas[0].coalition() {
        return Err(DominanceError::NotInCoalition(agent));
    }
    let mut states = states_in(input)
        .chain(sigmas[0].domain())
        .chain(sigmas[1].domain());
    if let Some(first) = states.next() {
        for q in states {
            if !m.indistinguishable(agent, first, q) {
                return Err(DominanceError::OutsideClass { agent, state: q });
            }
        }
    }
    Ok(pos)
}

/// Compares two partial strategies of `agent` over the same information set
/// and the same input states on one criterion.
pub fn compare(
    m: &Model,
    agent: AgentId,
    input: &StateSet,
    sigma1: &PartialStrategy,
    sigma2: &PartialStrategy,
    criterion: Criterion,
) -> Result<DominanceVerdict, DominanceError> {
    let pos = check_same_class(m, agent, input, [sigma1, sigma2])?;
    let f1 = Footprint::of(m, input, sigma1, pos);
    let f2 = Footprint::of(m, input, sigma2, pos);
    Ok(criterion.verdict(&f1, &f2))
}

/// Is `sigma1` `(primary, secondary)`-dominated by `sigma2`?
pub fn dominated_by(
    m: &Model,
    agent: AgentId,
    input: &StateSet,
    sigma1: &PartialStrategy,
    sigma2: &PartialStrategy,
    dominance: Dominance,
) -> Result<bool, DominanceError> {
    let pos = check_same_class(m, agent, input, [sigma1, sigma2])?;
    let f1 = Footprint::of(m, input, sigma1, pos);
    let f2 = Footprint::of(m, input, sigma2, pos);
    Ok(dominance.holds(&f1, &f2))
}

/// Limits for [`find_best_dominating`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    /// Maximum number of candidates evaluated.
    pub candidate_budget: usize,
    /// Candidate spaces up to this size are enumerated exhaustively.
    pub exhaustive_threshold: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            candidate_budget: 20_000,
            exhaustive_threshold: 4096,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: Option<(PartialStrategy, Footprint)>,
    /// The whole candidate space was enumerated.
    pub exhaustive: bool,
    pub evaluated: usize,
    pub timed_out: bool,
}

struct Search<'a> {
    model: &'a Model,
    record: &'a PartialStrategyRecord,
    original: Footprint,
    dominance: Dominance,
    exits: &'a StateSet,
    best: Option<(PartialStrategy, Footprint)>,
    evaluated: usize,
    budget: usize,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl Search<'_> {
    fn exhausted(&mut self) -> bool {
        if self.evaluated >= self.budget {
            return true;
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.timed_out = true;
                return true;
            }
        }
        false
    }

    /// Evaluates one candidate; keeps it if it dominates the record's
    /// strategy, beats the current best on the primary criterion and is
    /// loopless from the inputs. Returns whether it was kept.
    fn offer(&mut self, candidate: &PartialStrategy) -> bool {
        self.evaluated += 1;
        let fp = Footprint::of(self.model, &self.record.input, candidate, self.record.pos);
        if !self.dominance.holds(&self.original, &fp) {
            return false;
        }
        if let Some((_, best)) = &self.best {
            if !self.dominance.primary.verdict(best, &fp).strictly {
                return false;
            }
        }
        if !is_loopless(self.model, candidate, &self.record.input, self.exits) {
            return false;
        }
        self.best = Some((candidate.clone(), fp));
        true
    }
}

/// Looks for a replacement of `record.sigma` that `dominance`-dominates it
/// on `record.input` and that no other visited candidate beats on the
/// primary criterion.
///
/// Candidates reassign the agent's own action on the domain of relevance
/// and keep everything else. Spaces of at most
/// `limits.exhaustive_threshold` candidates are enumerated in lexicographic
/// (state, action) order, so the result is best over the whole space; larger
/// spaces are searched by hill-climbing over single-state changes and
/// whole-set collapses to one action. Candidates with a loop avoiding
/// `exits` reachable from the inputs are discarded. Ties go to the first
/// candidate found.
pub fn find_best_dominating(
    m: &Model,
    record: &PartialStrategyRecord,
    dominance: Dominance,
    exits: &StateSet,
    limits: SearchLimits,
    deadline: Option<Instant>,
) -> SearchOutcome {
    let free: Vec<StateId> = states_in(&record.rdom)
        .filter(|&q| record.sigma.contains(q))
        .collect();
    let mut search = Search {
        model: m,
        record,
        original: Footprint::of_record(record),
        dominance,
        exits,
        best: None,
        evaluated: 0,
        budget: limits.candidate_budget,
        deadline,
        timed_out: false,
    };
    if free.is_empty() {
        return SearchOutcome {
            best: None,
            exhaustive: true,
            evaluated: 0,
            timed_out: false,
        };
    }
    // Protocols are uniform on an information set.
    let actions: Vec<ActionId> = m.protocol(record.agent, free[0]).to_vec();
    let space = (actions.len() as u64)
        .checked_pow(free.len() as u32)
        .unwrap_or(u64::MAX);

    let exhaustive =
        space <= limits.exhaustive_threshold && space <= limits.candidate_budget as u64;
    if exhaustive {
        enumerate(&mut search, &free, &actions);
    } else {
        hill_climb(&mut search, &free, &actions);
    }
    SearchOutcome {
        exhaustive: exhaustive && !search.timed_out,
        best: search.best,
        evaluated: search.evaluated,
        timed_out: search.timed_out,
    }
}

fn enumerate(search: &mut Search<'_>, free: &[StateId], actions: &[ActionId]) {
    let pos = search.record.pos;
    let mut digits = vec![0usize; free.len()];
    let mut candidate = search.record.sigma.clone();
    for &q in free {
        candidate.set_component(pos, q, actions[0]);
    }
    loop {
        if search.exhausted() {
            return;
        }
        search.offer(&candidate);
        // odometer: the first free state is the most significant digit
        let mut i = free.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < actions.len() {
                candidate.set_component(pos, free[i], actions[digits[i]]);
                break;
            }
            digits[i] = 0;
            candidate.set_component(pos, free[i], actions[0]);
        }
    }
}

fn hill_climb(search: &mut Search<'_>, free: &[StateId], actions: &[ActionId]) {
    let pos = search.record.pos;
    let mut base = search.record.sigma.clone();
    loop {
        let mut improved = false;
        for &q in free {
            let current = base.projected(pos, q);
            for &act in actions {
                if Some(act) == current {
                    continue;
                }
                if search.exhausted() {
                    return;
                }
                let mut candidate = base.clone();
                candidate.set_component(pos, q, act);
                improved |= search.offer(&candidate);
            }
        }
        for &act in actions {
            if search.exhausted() {
                return;
            }
            let mut candidate = base.clone();
            for &q in free {
                candidate.set_component(pos, q, act);
            }
            if candidate != base {
                improved |= search.offer(&candidate);
            }
        }
        match (&search.best, improved) {
            (Some((best, _)), true) => base = best.clone(),
            _ => return,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::model;
    use crate::model::{set_of, JointAction};
    use smallvec::smallvec;

    fn a(x: u32) -> JointAction {
        smallvec![ActionId(x)]
    }

    /// Class {0,1} of agent 0 (actions 0,1). From 0: a0 -> 2, a1 -> 3.
    /// From 1: a0 -> 2, a1 -> 4. States 2,3,4 absorbing, 2 = win.
    /// State 5 loops to itself and is in no relevant path.
    fn hand() -> Model {
        Model::from_file(&model(
            1,
            6,
            vec![vec![vec![0, 1]; 6]],
            &[
                (0, &[0], 2),
                (0, &[1], 3),
                (1, &[0], 2),
                (1, &[1], 4),
                (2, &[0], 2),
                (2, &[1], 2),
                (3, &[0], 3),
                (3, &[1], 3),
                (4, &[0], 4),
                (4, &[1], 4),
                (5, &[0], 5),
                (5, &[1], 5),
            ],
            &[2],
            Some(vec![vec![vec![0, 1], vec![2], vec![3], vec![4], vec![5]]]),
        ))
        .unwrap()
    }

    fn record(m: &Model, choices: [u32; 2]) -> PartialStrategyRecord {
        let sigma = PartialStrategy::from_choices(
            m,
            vec![AgentId(0)],
            [(StateId(0), a(choices[0])), (StateId(1), a(choices[1]))],
        )
        .unwrap();
        PartialStrategyRecord::new(
            m,
            0,
            AgentId(0),
            0,
            set_of(m, [StateId(0), StateId(1)]),
            sigma,
            set_of(m, [StateId(0), StateId(1)]),
        )
    }

    fn sigma(m: &Model, choices: [u32; 2]) -> PartialStrategy {
        record(m, choices).sigma
    }

    #[test]
    fn reflexive_verdicts() {
        let m = hand();
        let s = sigma(&m, [0, 1]);
        let input = set_of(&m, [StateId(0), StateId(1)]);
        for c in [Criterion::Outcome, Criterion::Uniformity] {
            let v = compare(&m, AgentId(0), &input, &s, &s, c).unwrap();
            assert_eq!(
                v,
                DominanceVerdict {
                    comparable: true,
                    dominates: true,
                    strictly: false
                }
            );
        }
    }

    #[test]
    fn constant_strategy_uniform_dominates() {
        let m = hand();
        let input = set_of(&m, [StateId(0), StateId(1)]);
        let mixed = sigma(&m, [1, 0]); // reach {0,1,3,2}
        let constant = sigma(&m, [0, 0]); // reach {0,1,2}
        let v = compare(
            &m,
            AgentId(0),
            &input,
            &mixed,
            &constant,
            Criterion::Uniformity,
        )
        .unwrap();
        assert!(v.strictly);
        assert!(dominated_by(
            &m,
            AgentId(0),
            &input,
            &mixed,
            &constant,
            Dominance::UNIFORM
        )
        .unwrap());
        assert!(!dominated_by(
            &m,
            AgentId(0),
            &input,
            &constant,
            &mixed,
            Dominance::UNIFORM
        )
        .unwrap());
    }

    #[test]
    fn secondary_deterioration_blocks_uniform_dominance() {
        let m = hand();
        let input = set_of(&m, [StateId(0), StateId(1)]);
        let mixed = sigma(&m, [0, 1]); // reach {0,1,2,4}
        let constant = sigma(&m, [1, 1]); // reach {0,1,3,4}: incomparable
        let v = compare(
            &m,
            AgentId(0),
            &input,
            &mixed,
            &constant,
            Criterion::Outcome,
        )
        .unwrap();
        assert!(!v.comparable);
        assert!(!dominated_by(
            &m,
            AgentId(0),
            &input,
            &mixed,
            &constant,
            Dominance::UNIFORM
        )
        .unwrap());
    }

    #[test]
    fn outcome_dominance_with_equal_conflicts() {
        let m = hand();
        // only state 0 is an input; state 1 is never reached
        let input = set_of(&m, [StateId(0)]);
        let wide = sigma(&m, [1, 0]);
        let tight = sigma(&m, [0, 0]);
        // reach {0,3} vs {0,2}: incomparable, no dominance either way
        assert!(!dominated_by(&m, AgentId(0), &input, &wide, &tight, Dominance::OUTCOME).unwrap());
    }

    #[test]
    fn precondition_outside_class() {
        let m = hand();
        let input = set_of(&m, [StateId(0), StateId(2)]);
        let s = sigma(&m, [0, 0]);
        assert_eq!(
            compare(&m, AgentId(0), &input, &s, &s, Criterion::Outcome),
            Err(DominanceError::OutsideClass {
                agent: AgentId(0),
                state: StateId(2)
            })
        );
    }

    #[test]
    fn best_replacement_is_constant_winner() {
        let m = hand();
        let rec = record(&m, [0, 1]);
        let targets = set_of(&m, [StateId(2)]);
        let out = find_best_dominating(
            &m,
            &rec,
            Dominance::UNIFORM,
            &targets,
            SearchLimits::default(),
            None,
        );
        // candidates: (0,0) reach {0,1,2} dominates; (1,1) reach {0,1,3,4} incomparable;
        // (1,0) reach {0,1,2,3} incomparable; (0,1) itself not strict.
        let (best, fp) = out.best.unwrap();
        assert_eq!(best, sigma(&m, [0, 0]));
        assert!(fp.conflicts.is_empty());
        assert!(out.exhaustive);
        assert_eq!(out.evaluated, 4);
    }

    #[test]
    fn optimum_has_no_replacement() {
        let m = hand();
        let rec = record(&m, [0, 0]);
        let targets = set_of(&m, [StateId(2)]);
        for d in [Dominance::UNIFORM, Dominance::OUTCOME] {
            let out = find_best_dominating(&m, &rec, d, &targets, SearchLimits::default(), None);
            assert!(out.best.is_none());
        }
    }

    #[test]
    fn looping_candidate_is_rejected() {
        // class {0,1}: at 0, a0 -> 1 and a1 -> 2(win); at 1, a0 -> 0 and a1 -> 2.
        // (a1, a0) is conflicting; constant a0 forms the cycle 0 <-> 1 inside the
        // class and shrinks Reach to {0,1}, so it would dominate if not filtered.
        let m = Model::from_file(&model(
            1,
            3,
            vec![vec![vec![0, 1]; 3]],
            &[
                (0, &[0], 1),
                (0, &[1], 2),
                (1, &[0], 0),
                (1, &[1], 2),
                (2, &[0], 2),
                (2, &[1], 2),
            ],
            &[2],
            Some(vec![vec![vec![0, 1], vec![2]]]),
        ))
        .unwrap();
        let rec = record(&m, [1, 0]);
        let targets = set_of(&m, [StateId(2)]);
        let constant0 = sigma(&m, [0, 0]);
        let input = rec.input.clone();
        assert!(dominated_by(
            &m,
            AgentId(0),
            &input,
            &rec.sigma,
            &constant0,
            Dominance::UNIFORM
        )
        .unwrap());
        let out = find_best_dominating(
            &m,
            &rec,
            Dominance::UNIFORM,
            &targets,
            SearchLimits::default(),
            None,
        );
        // constant a1 reaches {0,1,2} = original reach, conflict-free: accepted instead
        assert_eq!(out.best.unwrap().0, sigma(&m, [1, 1]));
    }

    #[test]
    fn only_conflict_free_candidate_loops() {
        // class {0,1}: 0 -a0-> 2(win), 0 -a1-> 0; 1 -a0-> 1, 1 -a1-> 2.
        // the winning choice (a0, a1) conflicts; both constants loop.
        let m = Model::from_file(&model(
            1,
            3,
            vec![vec![vec![0, 1]; 3]],
            &[
                (0, &[0], 2),
                (0, &[1], 0),
                (1, &[0], 1),
                (1, &[1], 2),
                (2, &[0], 2),
                (2, &[1], 2),
            ],
            &[2],
            Some(vec![vec![vec![0, 1], vec![2]]]),
        ))
        .unwrap();
        let rec = record(&m, [0, 1]);
        let targets = set_of(&m, [StateId(2)]);
        let out = find_best_dominating(
            &m,
            &rec,
            Dominance::UNIFORM,
            &targets,
            SearchLimits::default(),
            None,
        );
        assert!(out.best.is_none());
    }
}
