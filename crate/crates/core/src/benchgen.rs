//! Seeded benchmark generators: random iCGS and drone air-quality models.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AgentId, Model, ModelError, ModelFile, ReachabilityGoal, StateId, TransitionEntry,
};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible generator settings: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassSizeMode {
    /// Classes hold at most ⌈log2 n⌉ states.
    Logarithmic,
    /// Classes hold at most ⌈n/10⌉ states.
    Linear,
}

impl ClassSizeMode {
    pub fn bound(self, n: usize) -> usize {
        match self {
            ClassSizeMode::Logarithmic => ceil_log2(n),
            ClassSizeMode::Linear => n.div_ceil(10),
        }
    }
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Knobs of the random family. `None` fields take size-dependent defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomModelSpec {
    pub n_states: usize,
    pub class_size_mode: ClassSizeMode,
    pub seed: u64,
    /// Total number of graph connections (default 2n).
    pub connections: Option<usize>,
    /// Agent actions (default max(2, ⌈log2 n⌉)).
    pub actions: Option<usize>,
    /// Winning states (default max(1, ⌈n/20⌉)).
    pub winning_states: Option<usize>,
    /// Initial paths through the graph (default max(2, ⌈n/4⌉), at most the
    /// number of joint actions).
    pub paths: Option<usize>,
    pub env_actions: usize,
    /// Rounds of random assignment of connections to joint actions.
    pub repetitions: usize,
    /// Extra propositions with random valuations.
    pub decorations: usize,
    /// Probability that an added connection leads strictly deeper along
    /// the paths.
    pub forward_edges: f64,
    /// The agent can tell the initial state apart from every other state.
    pub known_initial: bool,
    /// Path ends that are not winning become absorbing traps.
    pub dead_ends: bool,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        RandomModelSpec {
            n_states: 10,
            class_size_mode: ClassSizeMode::Logarithmic,
            seed: 0,
            connections: None,
            actions: None,
            winning_states: None,
            paths: None,
            env_actions: 2,
            repetitions: 3,
            decorations: 2,
            forward_edges: 0.0,
            known_initial: true,
            dead_ends: true,
        }
    }
}

impl RandomModelSpec {
    pub fn new(n_states: usize, class_size_mode: ClassSizeMode, seed: u64) -> Self {
        RandomModelSpec {
            n_states,
            class_size_mode,
            seed,
            ..Default::default()
        }
    }

    pub fn n_connections(&self) -> usize {
        self.connections.unwrap_or(2 * self.n_states)
    }

    pub fn n_actions(&self) -> usize {
        self.actions.unwrap_or(ceil_log2(self.n_states).max(2))
    }

    pub fn n_winning(&self) -> usize {
        self.winning_states
            .unwrap_or(self.n_states.div_ceil(20).max(1))
    }

    pub fn n_paths(&self) -> usize {
        self.paths.unwrap_or(self.n_states.div_ceil(4).max(2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DroneModelSpec {
    pub n_drones: usize,
    /// Default: twice the map size.
    pub initial_energy: Option<u32>,
    pub map_size: usize,
    pub seed: u64,
    /// Directed edges added to the spanning tree (default ⌈map/2⌉).
    pub extra_edges: Option<usize>,
    /// Fraction of places that come in GPS-confusable pairs.
    pub confusable_fraction: f64,
    /// Fraction of map edges on which wind can divert a flying drone.
    pub windy_fraction: f64,
    /// The drones' record of visited places goes through their GPS, so a
    /// confusable place and its partner look alike in the record too.
    pub gps_history: bool,
}

impl Default for DroneModelSpec {
    fn default() -> Self {
        DroneModelSpec {
            n_drones: 1,
            initial_energy: None,
            map_size: 5,
            seed: 0,
            extra_edges: None,
            confusable_fraction: 0.6,
            windy_fraction: 0.25,
            gps_history: true,
        }
    }
}

impl DroneModelSpec {
    pub fn new(n_drones: usize, map_size: usize, seed: u64) -> Self {
        DroneModelSpec {
            n_drones,
            map_size,
            seed,
            ..Default::default()
        }
    }

    pub fn energy(&self) -> u32 {
        self.initial_energy.unwrap_or(2 * self.map_size as u32)
    }
}

/// Generator settings, written next to a generated model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum InstanceSpec {
    Random(RandomModelSpec),
    Drone(DroneModelSpec),
}

impl InstanceSpec {
    pub fn seed(&self) -> u64 {
        match self {
            InstanceSpec::Random(s) => s.seed,
            InstanceSpec::Drone(s) => s.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> InstanceSpec {
        match self {
            InstanceSpec::Random(s) => InstanceSpec::Random(RandomModelSpec { seed, ..s.clone() }),
            InstanceSpec::Drone(s) => InstanceSpec::Drone(DroneModelSpec { seed, ..s.clone() }),
        }
    }

    pub fn generate(&self) -> Result<Instance, GenError> {
        match self {
            InstanceSpec::Random(s) => gen_random(s),
            InstanceSpec::Drone(s) => gen_drone(s),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub model: Model,
    pub goal: ReachabilityGoal,
    pub spec: InstanceSpec,
}

impl Instance {
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("spec serializes")
    }
}

fn identity_partition(n: usize) -> Vec<Vec<u32>> {
    (0..n as u32).map(|q| vec![q]).collect()
}

/// Random partition of `0..n` into classes of size `1..=bound`, with state 0
/// alone when `isolate_first` holds.
fn random_partition(
    rng: &mut ChaCha8Rng,
    n: usize,
    bound: usize,
    isolate_first: bool,
) -> Vec<Vec<u32>> {
    let first = u32::from(isolate_first);
    let mut order: Vec<u32> = (first..n as u32).collect();
    order.shuffle(rng);
    let mut out = Vec::new();
    if isolate_first {
        out.push(vec![0]);
    }
    let mut rest = &order[..];
    while !rest.is_empty() {
        let k = rng.random_range(1..=bound.min(rest.len()));
        let mut class = rest[..k].to_vec();
        class.sort_unstable();
        out.push(class);
        rest = &rest[k..];
    }
    out.sort();
    out
}

/// Random model with one coalition agent (agent 0) and an environment
/// (agent 1). The goal is `win` from state 0.
pub fn gen_random(spec: &RandomModelSpec) -> Result<Instance, GenError> {
    let n = spec.n_states;
    let actions = spec.n_actions();
    let env = spec.env_actions;
    let bound = spec.class_size_mode.bound(n);
    if n < 2 {
        return Err(GenError::Infeasible(
            "at least two states are needed".into(),
        ));
    }
    if bound < 1 || actions < 1 || env < 1 {
        return Err(GenError::Infeasible(
            "class bound, action and environment counts must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cells = actions * env;

    // disjoint paths from state 0 through a shuffled order of the others
    let mut others: Vec<u32> = (1..n as u32).collect();
    others.shuffle(&mut rng);
    let n_paths = spec.n_paths().min(n - 1).min(cells);
    let mut path_of = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    let mut edges: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut ends = Vec::new();
    for (p, chunk) in split_even(&others, n_paths).into_iter().enumerate() {
        let mut prev = 0u32;
        for (k, &q) in chunk.iter().enumerate() {
            path_of[q as usize] = p;
            depth[q as usize] = k + 1;
            edges[prev as usize].push(q);
            prev = q;
        }
        ends.push(prev);
    }

    let n_win = spec.n_winning().min(ends.len());
    let winning: Vec<u32> = ends.choose_multiple(&mut rng, n_win).copied().collect();
    let terminal: Vec<u32> = if spec.dead_ends {
        ends.clone()
    } else {
        winning.clone()
    };
    let is_terminal = |q: u32| terminal.contains(&q);
    for &t in &terminal {
        edges[t as usize].clear();
    }

    let mut count: usize = edges.iter().map(Vec::len).sum();
    let add_edge = |rng: &mut ChaCha8Rng, edges: &mut Vec<Vec<u32>>, from: u32| -> bool {
        let candidates: Vec<u32> = (0..n as u32)
            .filter(|&to| {
                to != from
                    && (path_of[from as usize] != path_of[to as usize] || from == 0 || to == 0)
                    && !edges[from as usize].contains(&to)
            })
            .collect();
        let forward: Vec<u32> = candidates
            .iter()
            .copied()
            .filter(|&to| depth[to as usize] > depth[from as usize])
            .collect();
        let pool = if !forward.is_empty() && rng.random_bool(spec.forward_edges) {
            &forward
        } else {
            &candidates
        };
        match pool.choose(rng) {
            Some(&to) if edges[from as usize].len() < cells => {
                edges[from as usize].push(to);
                true
            }
            _ => false,
        }
    };
    // every non-winning state gets an outgoing connection
    for q in 0..n as u32 {
        if !is_terminal(q) && edges[q as usize].is_empty() {
            if !add_edge(&mut rng, &mut edges, q) {
                edges[q as usize].push(q);
            }
            count += 1;
        }
    }
    let sources: Vec<u32> = (0..n as u32).filter(|&q| !is_terminal(q)).collect();
    let mut attempts = 0;
    while count < spec.n_connections() && attempts < 20 * spec.n_connections() {
        attempts += 1;
        let &from = sources.choose(&mut rng).expect("state 0 is never terminal");
        if add_edge(&mut rng, &mut edges, from) {
            count += 1;
        }
    }

    let mut transitions = Vec::new();
    for q in 0..n as u32 {
        if is_terminal(q) {
            for a in 0..actions as u32 {
                for e in 0..env as u32 {
                    transitions.push(TransitionEntry {
                        from: q,
                        actions: vec![a, e],
                        to: q,
                    });
                }
            }
            continue;
        }
        let targets = &edges[q as usize];
        let mut cell: Vec<Option<usize>> = vec![None; cells];
        let mut uses = vec![0usize; targets.len()];
        let mut slots: Vec<usize> = (0..cells).collect();
        slots.shuffle(&mut rng);
        for (c, &k) in slots.iter().take(targets.len()).enumerate() {
            cell[k] = Some(c);
            uses[c] = 1;
        }
        for _ in 1..spec.repetitions {
            for c in 0..targets.len() {
                let k = rng.random_range(0..cells);
                match cell[k] {
                    Some(old) if old == c || uses[old] == 1 => {}
                    old => {
                        if let Some(old) = old {
                            uses[old] -= 1;
                        }
                        cell[k] = Some(c);
                        uses[c] += 1;
                    }
                }
            }
        }
        // empty cells copy a cell with the same agent action if there is one
        for a in 0..actions {
            let row: Vec<Option<usize>> = (0..env).map(|e| cell[a * env + e]).collect();
            let filled: Vec<usize> = row.iter().flatten().copied().collect();
            for e in 0..env {
                if cell[a * env + e].is_none() {
                    cell[a * env + e] = Some(match filled.choose(&mut rng) {
                        Some(&c) => c,
                        None => rng.random_range(0..targets.len()),
                    });
                }
            }
        }
        for a in 0..actions {
            for e in 0..env {
                let to = targets[cell[a * env + e].expect("all cells filled")];
                transitions.push(TransitionEntry {
                    from: q,
                    actions: vec![a as u32, e as u32],
                    to,
                });
            }
        }
    }

    let mut valuation = BTreeMap::new();
    let mut win_sorted = winning.clone();
    win_sorted.sort_unstable();
    valuation.insert("win".to_string(), win_sorted);
    let mut propositions = vec!["win".to_string()];
    for d in 0..spec.decorations {
        let name = format!("p{d}");
        let states: Vec<u32> = (0..n as u32).filter(|_| rng.random_bool(0.3)).collect();
        valuation.insert(name.clone(), states);
        propositions.push(name);
    }

    let file = ModelFile {
        agents: 2,
        states: n,
        propositions,
        valuation,
        protocol: vec![
            vec![(0..actions as u32).collect(); n],
            vec![(0..env as u32).collect(); n],
        ],
        transitions,
        epistemic: vec![
            random_partition(&mut rng, n, bound, spec.known_initial),
            identity_partition(n),
        ],
    };
    Ok(Instance {
        model: Model::from_file(&file)?,
        goal: ReachabilityGoal::new(vec![AgentId(0)], "win", StateId(0)),
        spec: InstanceSpec::Random(spec.clone()),
    })
}

/// Splits `items` into `k` consecutive non-empty chunks of near-equal size.
fn split_even(items: &[u32], k: usize) -> Vec<&[u32]> {
    let k = k.clamp(1, items.len().max(1));
    let base = items.len() / k;
    let extra = items.len() % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        out.push(&items[start..start + len]);
        start += len;
    }
    out
}

pub const NORTH: u32 = 0;
pub const WEST: u32 = 1;
pub const SOUTH: u32 = 2;
pub const EAST: u32 = 3;
pub const WAIT: u32 = 4;

/// Places with up to one neighbour per compass direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroneMap {
    pub neighbours: Vec<[Option<u32>; 4]>,
    /// Where wind carries a drone flying from a place in a direction.
    pub diversion: Vec<[Option<u32>; 4]>,
    pub polluted: Vec<bool>,
    /// Places a drone's GPS cannot tell apart, in pairs.
    pub confusable: Vec<(u32, u32)>,
}

impl DroneMap {
    pub fn random(spec: &DroneModelSpec, rng: &mut ChaCha8Rng) -> DroneMap {
        let m = spec.map_size;
        let mut nb: Vec<[Option<u32>; 4]> = vec![[None; 4]; m];
        let free = |nb: &Vec<[Option<u32>; 4]>, p: usize| -> Vec<usize> {
            (0..4).filter(|&d| nb[p][d].is_none()).collect()
        };
        for i in 1..m {
            let parents: Vec<usize> = (0..i).filter(|&p| !free(&nb, p).is_empty()).collect();
            let &p = parents
                .choose(rng)
                .expect("a tree node always has a free slot");
            let dp = *free(&nb, p).choose(rng).expect("checked above");
            let di = *free(&nb, i).choose(rng).expect("new node has four slots");
            nb[p][dp] = Some(i as u32);
            nb[i][di] = Some(p as u32);
        }
        let extra = spec.extra_edges.unwrap_or(m.div_ceil(2));
        for _ in 0..extra * 10 {
            if nb.iter().flatten().flatten().count() >= 2 * (m - 1) + extra {
                break;
            }
            let u = rng.random_range(0..m);
            let v = rng.random_range(0..m);
            if u == v || nb[u].contains(&Some(v as u32)) {
                continue;
            }
            if let Some(&d) = free(&nb, u).choose(rng) {
                nb[u][d] = Some(v as u32);
            }
        }
        let mut diversion = vec![[None; 4]; m];
        for p in 0..m {
            let near: Vec<u32> = nb[p].iter().flatten().copied().collect();
            for d in 0..4 {
                if let Some(to) = nb[p][d] {
                    let alt: Vec<u32> = near.iter().copied().filter(|&x| x != to).collect();
                    let windy = rng.random_bool(spec.windy_fraction.clamp(0.0, 1.0));
                    diversion[p][d] = Some(match alt.choose(rng) {
                        Some(&x) if windy => x,
                        _ => to,
                    });
                }
            }
        }
        let polluted = (0..m).map(|_| rng.random_bool(0.5)).collect();
        let mut k = (spec.confusable_fraction * m as f64).round() as usize;
        k = (k + k % 2).max(2).min(m - m % 2);
        let mut places: Vec<u32> = (0..m as u32).collect();
        places.shuffle(rng);
        let confusable = places[..k]
            .chunks(2)
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        DroneMap {
            neighbours: nb,
            diversion,
            polluted,
            confusable,
        }
    }

    /// Visited set as recorded through GPS readings.
    pub fn observed_set(&self, visited: u64) -> u64 {
        (0..self.neighbours.len() as u32)
            .filter(|&p| visited & (1 << p) != 0)
            .fold(0, |acc, p| acc | 1 << self.observed(p))
    }

    /// GPS reading of a place.
    pub fn observed(&self, p: u32) -> u32 {
        self.confusable
            .iter()
            .find(|&&(a, b)| a == p || b == p)
            .map_or(p, |&(a, _)| a)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct DroneState {
    pos: Vec<u32>,
    energy: Vec<u32>,
    visited: u64,
}

/// Drone model: agents `0..n_drones` are drones, the last agent is the wind.
/// The goal is `all_visited` from state 0 for the whole fleet.
pub fn gen_drone(spec: &DroneModelSpec) -> Result<Instance, GenError> {
    let (d, m) = (spec.n_drones, spec.map_size);
    if !(2..=64).contains(&m) || d < 1 {
        return Err(GenError::Infeasible(
            "need 2..=64 places and at least one drone".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let map = DroneMap::random(spec, &mut rng);
    let full: u64 = if m == 64 { u64::MAX } else { (1 << m) - 1 };
    let winds = 1u32 << d;

    let init = DroneState {
        pos: vec![0; d],
        energy: vec![spec.energy(); d],
        visited: 1,
    };
    let mut index: HashMap<DroneState, u32> = HashMap::new();
    let mut states = vec![init.clone()];
    index.insert(init, 0);
    let mut queue = VecDeque::from([0u32]);
    let mut transitions = Vec::new();
    let drone_actions = |e: u32| -> Vec<u32> {
        if e > 0 {
            vec![NORTH, WEST, SOUTH, EAST, WAIT]
        } else {
            vec![WAIT]
        }
    };

    while let Some(id) = queue.pop_front() {
        let s = states[id as usize].clone();
        let done = s.visited == full;
        let per_drone: Vec<Vec<u32>> = s.energy.iter().map(|&e| drone_actions(e)).collect();
        for joint in cartesian(&per_drone) {
            for w in 0..winds {
                let next = if done {
                    s.clone()
                } else {
                    step(&map, &s, &joint, w)
                };
                let to = match index.get(&next) {
                    Some(&t) => t,
                    None => {
                        let t = states.len() as u32;
                        index.insert(next.clone(), t);
                        states.push(next);
                        queue.push_back(t);
                        t
                    }
                };
                let mut actions = joint.clone();
                actions.push(w);
                transitions.push(TransitionEntry {
                    from: id,
                    actions,
                    to,
                });
            }
        }
    }

    let n = states.len();
    let mut protocol: Vec<Vec<Vec<u32>>> = (0..d)
        .map(|i| states.iter().map(|s| drone_actions(s.energy[i])).collect())
        .collect();
    protocol.push(vec![(0..winds).collect(); n]);

    let mut epistemic = Vec::new();
    for i in 0..d {
        let mut groups: BTreeMap<(Vec<u32>, Vec<u32>, u64), Vec<u32>> = BTreeMap::new();
        for (q, s) in states.iter().enumerate() {
            let mut pos = s.pos.clone();
            pos[i] = map.observed(pos[i]);
            let seen = if spec.gps_history {
                map.observed_set(s.visited)
            } else {
                s.visited
            };
            groups
                .entry((pos, s.energy.clone(), seen))
                .or_default()
                .push(q as u32);
        }
        let mut classes: Vec<Vec<u32>> = groups.into_values().collect();
        classes.sort();
        epistemic.push(classes);
    }
    epistemic.push(identity_partition(n));

    let mut valuation = BTreeMap::new();
    valuation.insert(
        "all_visited".to_string(),
        (0..n as u32)
            .filter(|&q| states[q as usize].visited == full)
            .collect(),
    );
    // a reading is known once some drone has been to the place
    valuation.insert(
        "polluted_seen".to_string(),
        (0..n as u32)
            .filter(|&q| {
                let v = states[q as usize].visited;
                (0..m).any(|p| map.polluted[p] && v & (1 << p) != 0)
            })
            .collect(),
    );
    let file = ModelFile {
        agents: d + 1,
        states: n,
        propositions: vec!["all_visited".into(), "polluted_seen".into()],
        valuation,
        protocol,
        transitions,
        epistemic,
    };
    Ok(Instance {
        model: Model::from_file(&file)?,
        goal: ReachabilityGoal::new(
            (0..d).map(AgentId::from).collect(),
            "all_visited",
            StateId(0),
        ),
        spec: InstanceSpec::Drone(spec.clone()),
    })
}

fn step(map: &DroneMap, s: &DroneState, joint: &[u32], wind: u32) -> DroneState {
    let mut next = s.clone();
    for (i, &a) in joint.iter().enumerate() {
        if s.energy[i] == 0 {
            continue;
        }
        next.energy[i] -= 1;
        if a == WAIT {
            continue;
        }
        let p = s.pos[i] as usize;
        let dir = a as usize;
        let to = if wind & (1 << i) != 0 {
            map.diversion[p][dir]
        } else {
            map.neighbours[p][dir]
        };
        if let Some(to) = to {
            next.pos[i] = to;
            next.visited |= 1 << to;
        }
    }
    next
}

fn cartesian(choices: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for options in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |&a| {
                    let mut v = prefix.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}
