//! Iterated improvement of a synthesized strategy under uniformity- and
//! outcome-dominance, one information set at a time.
//!
//! A sweep visits the records in synthesis order. Each record is improved
//! until neither dominance finds a replacement, its choices are merged into
//! the full profile and the input sets of the agent's other records are
//! recomputed. Sweeps repeat until nothing changes or the budget runs out;
//! coalitions alternate between members inside every sweep. The optimizer
//! is anytime: whatever happens, it returns a profile that wins with
//! perfect information from the initial state.

use std::collections::BTreeSet;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dominance::{find_best_dominating, Dominance, Footprint, SearchLimits};
use crate::metrics::metric_ep;
use crate::model::{states_in, GoalError, Model, ReachabilityGoal, StateSet};
use crate::strategy::{
    input_states_all, is_winning, reach, ConflictSet, InfoMode, PartialStrategyRecord, RecordFile,
    StrategyFile, StrategyProfile,
};
use crate::synthesis::{strat_synth, SynthesisOutput};

mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(rename = "synth_budget_ms", with = "duration_ms")]
    pub synth_budget: Duration,
    #[serde(rename = "optimize_budget_ms", with = "duration_ms")]
    pub optimize_budget: Duration,
    pub candidate_budget: usize,
    pub exhaustive_threshold: u64,
    /// Check the merged profile after every sweep and undo a losing sweep.
    pub verify_each_sweep: bool,
    /// Check the merged profile after every record; slow, for debugging.
    pub verify_each_replacement: bool,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Keep every accepted replacement in the trace.
    pub record_events: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            synth_budget: Duration::from_secs(30),
            optimize_budget: Duration::from_secs(60),
            candidate_budget: SearchLimits::default().candidate_budget,
            exhaustive_threshold: SearchLimits::default().exhaustive_threshold,
            verify_each_sweep: true,
            verify_each_replacement: false,
            max_sweeps: 50,
            seed: 0,
            record_events: false,
        }
    }
}

impl OptimizerConfig {
    pub fn limits(&self) -> SearchLimits {
        SearchLimits {
            candidate_budget: self.candidate_budget,
            exhaustive_threshold: self.exhaustive_threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// A full sweep changed nothing.
    Fixpoint,
    Timeout,
    /// `max_sweeps` reached.
    SweepLimit,
    /// The records returned to an earlier sweep's state.
    Cycle,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Fixpoint => "fixpoint",
            Termination::Timeout => "timeout",
            Termination::SweepLimit => "sweep-limit",
            Termination::Cycle => "cycle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepStats {
    pub replacements: usize,
    /// Sum of the records' conflict-set sizes after the sweep.
    pub conflicts: usize,
    /// `#ep` of the merged profile after the sweep.
    pub ep: usize,
    /// The unguarded sweep lost the game and was redone record by record.
    pub rolled_back: bool,
}

/// One accepted replacement with the record's footprint before and after.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplacementEvent {
    pub record: usize,
    pub dominance: Dominance,
    pub reach_before: StateSet,
    pub reach_after: StateSet,
    pub conflicts_before: ConflictSet,
    pub conflicts_after: ConflictSet,
}

#[derive(Clone, Debug)]
pub struct OptimizationTrace {
    pub sweeps: usize,
    pub replacements: usize,
    pub sweep_stats: Vec<SweepStats>,
    pub termination: Termination,
    pub final_profile: StrategyProfile,
    pub final_records: Vec<PartialStrategyRecord>,
    pub events: Vec<ReplacementEvent>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceFile {
    pub sweeps: usize,
    pub replacements: usize,
    pub termination: Termination,
    pub per_sweep: Vec<SweepStats>,
    pub final_profile: StrategyFile,
    pub final_records: Vec<RecordFile>,
}

impl OptimizationTrace {
    pub fn to_file(&self) -> TraceFile {
        TraceFile {
            sweeps: self.sweeps,
            replacements: self.replacements,
            termination: self.termination,
            per_sweep: self.sweep_stats.clone(),
            final_profile: self.final_profile.to_file(),
            final_records: self.final_records.iter().map(|r| r.to_file()).collect(),
        }
    }
}

/// Current strategy and its records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkingSet {
    pub profile: StrategyProfile,
    pub records: Vec<PartialStrategyRecord>,
}

impl WorkingSet {
    pub fn from_synthesis(out: &SynthesisOutput) -> Self {
        WorkingSet {
            profile: out.profile.clone(),
            records: out.records.clone(),
        }
    }

    fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for r in &self.records {
            r.sigma.hash(&mut h);
            r.input.hash(&mut h);
        }
        h.finish()
    }

    fn total_conflicts(&self) -> usize {
        self.records.iter().map(|r| r.conflicts.len()).sum()
    }
}

/// Everything a pass needs besides the working set.
pub struct PassContext<'a> {
    pub model: &'a Model,
    pub goal: &'a ReachabilityGoal,
    pub targets: StateSet,
    pub limits: SearchLimits,
    pub deadline: Option<Instant>,
    /// Re-verify after each merged record and undo records that lose.
    pub careful: bool,
    pub record_events: bool,
}

impl<'a> PassContext<'a> {
    pub fn new(
        m: &'a Model,
        goal: &'a ReachabilityGoal,
        cfg: &OptimizerConfig,
        deadline: Option<Instant>,
    ) -> Self {
        PassContext {
            model: m,
            goal,
            targets: goal.targets(m),
            limits: cfg.limits(),
            deadline,
            careful: cfg.verify_each_replacement,
            record_events: cfg.record_events,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PassOutcome {
    pub replacements: usize,
    pub timed_out: bool,
    pub events: Vec<ReplacementEvent>,
}

impl PassOutcome {
    fn absorb(&mut self, other: PassOutcome) {
        self.replacements += other.replacements;
        self.timed_out |= other.timed_out;
        self.events.extend(other.events);
    }
}

/// Recomputes the input sets (and caches) of the records of coalition
/// member `pos`, except record `skip`.
fn update_inputs(ctx: &PassContext<'_>, ws: &mut WorkingSet, pos: usize, skip: Option<usize>) {
    let m = ctx.model;
    let start = ctx.goal.initial_class(m);
    let global = reach(m, &start, &ws.profile);
    let idx: Vec<usize> = (0..ws.records.len())
        .filter(|&i| ws.records[i].pos == pos)
        .collect();
    let sets: Vec<&StateSet> = idx.iter().map(|&i| &ws.records[i].members).collect();
    let inputs = input_states_all(m, &sets, &ws.profile, &start, &global);
    for (k, input) in idx.into_iter().zip(inputs) {
        if Some(k) == skip {
            continue;
        }
        let rec = &mut ws.records[k];
        if rec.input != input {
            rec.input = input;
            rec.refresh(m);
        }
    }
}

/// Re-reads the teammates' components of member `pos`'s records from the
/// profile, then recomputes their inputs.
fn resync(ctx: &PassContext<'_>, ws: &mut WorkingSet, pos: usize) {
    for rec in ws.records.iter_mut().filter(|r| r.pos == pos) {
        let fresh = ws.profile.restrict(states_in(&rec.members));
        if fresh != rec.sigma {
            rec.sigma = fresh;
            rec.refresh(ctx.model);
        }
    }
    update_inputs(ctx, ws, pos, None);
}

/// One sweep over the records of coalition member `pos`.
pub fn optimize_once(ctx: &PassContext<'_>, ws: &mut WorkingSet, pos: usize) -> PassOutcome {
    let m = ctx.model;
    let mut outcome = PassOutcome::default();
    let order: Vec<usize> = (0..ws.records.len())
        .filter(|&i| ws.records[i].pos == pos)
        .collect();
    for i in order {
        let saved = ctx
            .careful
            .then(|| (ws.records[i].clone(), ws.profile.clone()));
        let mut accepted = 0;
        let mut events = Vec::new();
        loop {
            let before = ws.records[i].sigma.clone();
            for dominance in [Dominance::UNIFORM, Dominance::OUTCOME] {
                let rec = &ws.records[i];
                let found =
                    find_best_dominating(m, rec, dominance, &ctx.targets, ctx.limits, ctx.deadline);
                outcome.timed_out |= found.timed_out;
                if let Some((sigma, fp)) = found.best {
                    let rec = &mut ws.records[i];
                    if ctx.record_events {
                        let old = Footprint::of_record(rec);
                        events.push(ReplacementEvent {
                            record: rec.id,
                            dominance,
                            reach_before: old.reach,
                            reach_after: fp.reach,
                            conflicts_before: old.conflicts,
                            conflicts_after: fp.conflicts,
                        });
                    }
                    rec.sigma = sigma;
                    rec.refresh(m);
                    accepted += 1;
                }
                if outcome.timed_out {
                    break;
                }
            }
            if outcome.timed_out || ws.records[i].sigma == before {
                break;
            }
        }
        if accepted == 0 {
            if outcome.timed_out {
                break;
            }
            continue;
        }

        let rec = &ws.records[i];
        for (q, joint) in rec.sigma.iter() {
            ws.profile.set_action(pos, q, joint[pos]);
        }
        if let Some((rec, profile)) = saved {
            if !is_winning(m, ctx.goal, &ws.profile, InfoMode::Perfect) {
                ws.records[i] = rec;
                ws.profile = profile;
                accepted = 0;
                events.clear();
            }
        }
        outcome.replacements += accepted;
        outcome.events.extend(events);
        if accepted > 0 {
            update_inputs(ctx, ws, pos, Some(i));
        }
        if outcome.timed_out {
            break;
        }
    }
    outcome
}

/// One full sweep: every coalition member in turn.
pub fn sweep(ctx: &PassContext<'_>, ws: &mut WorkingSet) -> PassOutcome {
    let mut total = PassOutcome::default();
    let members = ctx.goal.coalition.len();
    for pos in 0..members {
        if members > 1 {
            resync(ctx, ws, pos);
        }
        total.absorb(optimize_once(ctx, ws, pos));
        if total.timed_out {
            break;
        }
    }
    total
}

/// Repeats sweeps until a fixpoint, the sweep cap, a revisited state or the
/// deadline. The returned profile is the one with the fewest broken states
/// among those seen that still win from the initial state.
pub fn optimize(
    m: &Model,
    goal: &ReachabilityGoal,
    synth: &SynthesisOutput,
    cfg: &OptimizerConfig,
) -> OptimizationTrace {
    let deadline = Instant::now() + cfg.optimize_budget;
    let mut ctx = PassContext::new(m, goal, cfg, Some(deadline));
    let mut ws = WorkingSet::from_synthesis(synth);
    let mut best = (metric_ep(m, goal, &ws.profile), ws.clone());
    let mut trace_stats = Vec::new();
    let mut events = Vec::new();
    let mut seen = BTreeSet::new();
    seen.insert(ws.digest());
    let mut replacements = 0;

    let termination = loop {
        if Instant::now() >= deadline {
            break Termination::Timeout;
        }
        if trace_stats.len() >= cfg.max_sweeps {
            break Termination::SweepLimit;
        }
        let snapshot = ws.clone();
        let mut pass = sweep(&ctx, &mut ws);
        let mut rolled_back = false;
        if cfg.verify_each_sweep
            && !ctx.careful
            && !is_winning(m, goal, &ws.profile, InfoMode::Perfect)
        {
            rolled_back = true;
            ws = snapshot;
            if pass.timed_out {
                pass = PassOutcome {
                    timed_out: true,
                    ..Default::default()
                };
            } else {
                ctx.careful = true;
                pass = sweep(&ctx, &mut ws);
                ctx.careful = cfg.verify_each_replacement;
            }
        }
        replacements += pass.replacements;
        let ep = metric_ep(m, goal, &ws.profile);
        trace_stats.push(SweepStats {
            replacements: pass.replacements,
            conflicts: ws.total_conflicts(),
            ep,
            rolled_back,
        });
        events.extend(pass.events);
        if ep <= best.0 && is_winning(m, goal, &ws.profile, InfoMode::Perfect) {
            best = (ep, ws.clone());
        }
        if pass.timed_out {
            break Termination::Timeout;
        }
        if pass.replacements == 0 {
            break Termination::Fixpoint;
        }
        if !seen.insert(ws.digest()) {
            break Termination::Cycle;
        }
    };

    let (_, chosen) = best;
    OptimizationTrace {
        sweeps: trace_stats.len(),
        replacements,
        sweep_stats: trace_stats,
        termination,
        final_profile: chosen.profile,
        final_records: chosen.records,
        events,
    }
}

/// Synthesis followed by agent-alternating optimization.
pub fn optimize_coal(
    m: &Model,
    goal: &ReachabilityGoal,
    cfg: &OptimizerConfig,
) -> Result<Option<OptimizationTrace>, GoalError> {
    Ok(strat_synth(m, goal, cfg.seed)?.map(|out| optimize(m, goal, &out, cfg)))
}
