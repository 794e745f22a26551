//! Grounded forward best-first search minimizing total cost.
//!
//! States are compiled to bitsets over the task's reachable atoms; the open
//! list orders by f = g + weight·h with a fixed tie-break (smaller h, then
//! FIFO insertion) so searches are deterministic. Duplicate detection hashes
//! the atom set only — cost lives on edges, not in state identity — and a
//! cheaper path to a closed state reopens it.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::SearchError;
use crate::model::{GroundAction, GroundAtom, GroundTask, State};

/// Tie-break policy identifiers. There is exactly one, kept as an enum so the
/// policy is named in configs and stays fixed across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Prefer smaller h, then first-in-first-out insertion order.
    #[default]
    LowHThenFifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeuristicKind {
    /// Additive delete relaxation. Fast, informative, inadmissible.
    #[default]
    Add,
    /// Max delete relaxation. Admissible; used when optimality matters.
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Heuristic weight; 1.0 gives plain A*.
    pub weight: f64,
    /// Maximum node expansions before giving up with a resource error.
    pub node_limit: u64,
    pub tie_break: TieBreak,
    pub heuristic: HeuristicKind,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            weight: 2.0,
            node_limit: 1_000_000,
            tie_break: TieBreak::LowHThenFifo,
            heuristic: HeuristicKind::Add,
        }
    }
}

/// A plan found by the search: the step sequence, its accumulated cost, and
/// the state it ends in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanPrefix {
    pub steps: Vec<GroundAction>,
    pub g: u64,
    pub state: State,
}

const INF: u64 = u64::MAX;

// --- compiled task -----------------------------------------------------------

type Bits = Vec<u64>;

fn bit_set(bits: &mut Bits, i: u32) {
    bits[(i / 64) as usize] |= 1 << (i % 64);
}

fn bit_test(bits: &[u64], i: u32) -> bool {
    bits[(i / 64) as usize] & (1 << (i % 64)) != 0
}

fn bit_clear(bits: &mut Bits, i: u32) {
    bits[(i / 64) as usize] &= !(1 << (i % 64));
}

struct CompiledAction {
    idx: usize,
    pre_pos: Vec<u32>,
    pre_neg: Vec<u32>,
    add: Vec<u32>,
    del: Vec<u32>,
    conds: Vec<CompiledCond>,
    cost: u64,
}

struct CompiledCond {
    pos: Vec<u32>,
    neg: Vec<u32>,
    add: Vec<u32>,
    del: Vec<u32>,
    cost: u64,
}

/// A delete-relaxed producer: achieving `adds` costs `cost` once every atom in
/// `pre` is achieved. Conditional branches become separate producers.
struct RelaxedAction {
    pre: Vec<u32>,
    add: Vec<u32>,
    cost: u64,
}

/// Deleters of an atom, for negative goal literals: (atom, pre, cost).
struct RelaxedDeleter {
    atom: u32,
    pre: Vec<u32>,
    cost: u64,
}

struct Compiled {
    n_atoms: u32,
    words: usize,
    actions: Vec<CompiledAction>,
    relaxed: Vec<RelaxedAction>,
    deleters: Vec<RelaxedDeleter>,
    goal_pos: Vec<u32>,
    goal_neg: Vec<u32>,
    /// Goal contains a ground contradiction or an atom outside the reachable
    /// set: no state can satisfy it.
    goal_impossible: bool,
}

fn compile(task: &GroundTask) -> Compiled {
    let atom_of: HashMap<&GroundAtom, u32> = task
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a, i as u32))
        .collect();
    let n_atoms = task.atoms.len() as u32;
    let words = (n_atoms as usize).div_ceil(64).max(1);

    let mut actions = Vec::with_capacity(task.actions.len());
    let mut relaxed = Vec::new();
    let mut deleters = Vec::new();
    for (idx, a) in task.actions.iter().enumerate() {
        let mut pre_pos = Vec::new();
        let mut pre_neg = Vec::new();
        let mut representable = true;
        for lit in &a.precondition {
            match atom_of.get(&lit.atom) {
                Some(&id) if lit.negated => pre_neg.push(id),
                Some(&id) => pre_pos.push(id),
                // positive precondition on an unreachable atom: never applicable
                None if !lit.negated => representable = false,
                None => {} // negated unreachable atom: always true
            }
        }
        if !representable {
            continue;
        }
        let ids = |atoms: &std::collections::BTreeSet<GroundAtom>| -> Vec<u32> {
            atoms.iter().filter_map(|at| atom_of.get(at).copied()).collect()
        };
        let add = ids(&a.add);
        let del = ids(&a.del);
        let mut conds = Vec::new();
        for c in &a.conditionals {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            let mut feasible = true;
            for lit in &c.cond {
                match atom_of.get(&lit.atom) {
                    Some(&id) if lit.negated => neg.push(id),
                    Some(&id) => pos.push(id),
                    None if !lit.negated => feasible = false,
                    None => {}
                }
            }
            if !feasible {
                continue;
            }
            let (cadd, cdel) = (ids(&c.add), ids(&c.del));
            let mut rpre = pre_pos.clone();
            rpre.extend(&pos);
            relaxed.push(RelaxedAction { pre: rpre.clone(), add: cadd.clone(), cost: a.cost + c.cost });
            for &atom in &cdel {
                deleters.push(RelaxedDeleter { atom, pre: rpre.clone(), cost: a.cost + c.cost });
            }
            conds.push(CompiledCond { pos, neg, add: cadd, del: cdel, cost: c.cost });
        }
        relaxed.push(RelaxedAction { pre: pre_pos.clone(), add: add.clone(), cost: a.cost });
        for &atom in &del {
            deleters.push(RelaxedDeleter { atom, pre: pre_pos.clone(), cost: a.cost });
        }
        actions.push(CompiledAction { idx, pre_pos, pre_neg, add, del, conds, cost: a.cost });
    }

    let mut goal_pos = Vec::new();
    let mut goal_neg = Vec::new();
    let mut goal_impossible = false;
    for lit in &task.goal {
        if lit.atom.predicate == "=" {
            let eq = lit.atom.args.first() == lit.atom.args.get(1);
            if eq == lit.negated {
                goal_impossible = true;
            }
            continue;
        }
        match atom_of.get(&lit.atom) {
            Some(&id) if lit.negated => goal_neg.push(id),
            Some(&id) => goal_pos.push(id),
            None if !lit.negated => goal_impossible = true,
            None => {} // negated unreachable atom: trivially satisfied
        }
    }
    goal_pos.sort_unstable();
    goal_pos.dedup();
    goal_neg.sort_unstable();
    goal_neg.dedup();
    if goal_pos.iter().any(|p| goal_neg.binary_search(p).is_ok()) {
        goal_impossible = true;
    }

    Compiled { n_atoms, words, actions, relaxed, deleters, goal_pos, goal_neg, goal_impossible }
}

impl Compiled {
    fn state_bits(&self, task: &GroundTask, s: &State) -> Bits {
        let mut bits = vec![0u64; self.words];
        let atom_of: HashMap<&GroundAtom, u32> = task
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a, i as u32))
            .collect();
        for atom in &s.atoms {
            if let Some(&id) = atom_of.get(atom) {
                bit_set(&mut bits, id);
            }
        }
        bits
    }

    fn goal_holds(&self, bits: &[u64]) -> bool {
        !self.goal_impossible
            && self.goal_pos.iter().all(|&g| bit_test(bits, g))
            && self.goal_neg.iter().all(|&g| !bit_test(bits, g))
    }

    fn applicable(&self, a: &CompiledAction, bits: &[u64]) -> bool {
        a.pre_pos.iter().all(|&p| bit_test(bits, p))
            && a.pre_neg.iter().all(|&p| !bit_test(bits, p))
    }

    /// Successor state bits and transition cost. Conditional branches are
    /// evaluated against the pre-state; deletes apply before adds, so an atom
    /// both deleted and added ends up present.
    fn successor(&self, a: &CompiledAction, bits: &[u64]) -> (Bits, u64) {
        let mut cost = a.cost;
        let mut dels: Vec<u32> = a.del.clone();
        let mut adds: Vec<u32> = a.add.clone();
        for c in &a.conds {
            let fires = c.pos.iter().all(|&p| bit_test(bits, p))
                && c.neg.iter().all(|&p| !bit_test(bits, p));
            if fires {
                dels.extend(&c.del);
                adds.extend(&c.add);
                cost += c.cost;
            }
        }
        let mut next = bits.to_vec();
        for d in dels {
            bit_clear(&mut next, d);
        }
        for add in adds {
            bit_set(&mut next, add);
        }
        (next, cost)
    }

    /// Delete-relaxation heuristic. `Add` sums subgoal estimates, `Max` takes
    /// the maximum (admissible). Returns `None` when the goal is unreachable
    /// even under relaxation. Unsatisfied negative goal literals contribute
    /// the cheapest deleter of the offending atom.
    fn heuristic(&self, bits: &[u64], kind: HeuristicKind) -> Option<u64> {
        if self.goal_impossible {
            return None;
        }
        let mut h = vec![INF; self.n_atoms as usize];
        for i in 0..self.n_atoms {
            if bit_test(bits, i) {
                h[i as usize] = 0;
            }
        }
        let combine = |vals: &[u32], h: &[u64]| -> Option<u64> {
            let mut acc: u64 = 0;
            for &v in vals {
                let hv = h[v as usize];
                if hv == INF {
                    return None;
                }
                acc = match kind {
                    HeuristicKind::Add => acc.saturating_add(hv),
                    HeuristicKind::Max => acc.max(hv),
                };
            }
            Some(acc)
        };
        loop {
            let mut changed = false;
            for ra in &self.relaxed {
                let Some(base) = combine(&ra.pre, &h) else { continue };
                let val = base.saturating_add(ra.cost);
                for &a in &ra.add {
                    if val < h[a as usize] {
                        h[a as usize] = val;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut total: u64 = 0;
        let mut fold = |v: u64| {
            total = match kind {
                HeuristicKind::Add => total.saturating_add(v),
                HeuristicKind::Max => total.max(v),
            };
        };
        for &g in &self.goal_pos {
            let hv = h[g as usize];
            if hv == INF {
                return None;
            }
            fold(hv);
        }
        for &g in &self.goal_neg {
            if !bit_test(bits, g) {
                continue; // already false; relaxation never re-adds
            }
            // some deleter of g must eventually run
            let mut best = INF;
            for d in self.deleters.iter().filter(|d| d.atom == g) {
                if let Some(base) = combine(&d.pre, &h) {
                    best = best.min(base.saturating_add(d.cost));
                }
            }
            if best == INF {
                return None;
            }
            fold(best);
        }
        Some(total)
    }
}

// --- public heuristics -------------------------------------------------------

/// Additive delete-relaxation estimate of goal distance from `s`.
/// 0 when the goal already holds; `None` when relaxed-unreachable.
pub fn h_add(task: &GroundTask, s: &State) -> Option<u64> {
    let c = compile(task);
    let bits = c.state_bits(task, s);
    c.heuristic(&bits, HeuristicKind::Add)
}

/// Max delete-relaxation estimate; admissible.
pub fn h_max(task: &GroundTask, s: &State) -> Option<u64> {
    let c = compile(task);
    let bits = c.state_bits(task, s);
    c.heuristic(&bits, HeuristicKind::Max)
}

// --- weighted A* -------------------------------------------------------------

struct HeapEntry {
    f: f64,
    h: u64,
    seq: u64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // BinaryHeap is a max-heap: invert so the smallest (f, h, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.h.cmp(&other.h))
            .then(self.seq.cmp(&other.seq))
            .reverse()
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Node {
    bits: Bits,
    g: u64,
    parent: Option<(usize, usize)>, // (node, task action index)
}

/// Weighted A* over the grounded task. Returns `Ok(None)` when no plan
/// exists; exceeding `node_limit` expansions is an error distinct from that.
pub fn weighted_astar(
    task: &GroundTask,
    cfg: &SearchConfig,
) -> Result<Option<PlanPrefix>, SearchError> {
    assert!(cfg.weight >= 1.0, "heuristic weight must be at least 1");
    let TieBreak::LowHThenFifo = cfg.tie_break;
    let compiled = compile(task);
    if compiled.goal_impossible {
        return Ok(None);
    }

    let init_bits = compiled.state_bits(task, &task.init);
    let Some(h0) = compiled.heuristic(&init_bits, cfg.heuristic) else {
        return Ok(None);
    };

    let mut nodes: Vec<Node> = vec![Node { bits: init_bits.clone(), g: 0, parent: None }];
    let mut best_g: HashMap<Bits, u64> = HashMap::new();
    best_g.insert(init_bits, 0);
    let mut open = BinaryHeap::new();
    open.push(HeapEntry { f: cfg.weight * h0 as f64, h: h0, seq: 0, node: 0 });
    let mut seq: u64 = 0;
    let mut expanded: u64 = 0;

    while let Some(entry) = open.pop() {
        let node_id = entry.node;
        let g = nodes[node_id].g;
        if best_g.get(&nodes[node_id].bits).copied() != Some(g) {
            continue; // stale entry: a cheaper path to this state was found
        }
        if compiled.goal_holds(&nodes[node_id].bits) {
            return Ok(Some(reconstruct(task, &nodes, node_id)));
        }
        expanded += 1;
        if expanded > cfg.node_limit {
            return Err(SearchError::NodeLimit(cfg.node_limit));
        }

        let bits = nodes[node_id].bits.clone();
        for ca in &compiled.actions {
            if !compiled.applicable(ca, &bits) {
                continue;
            }
            let (next, cost) = compiled.successor(ca, &bits);
            let ng = g + cost;
            if best_g.get(&next).is_some_and(|&old| old <= ng) {
                continue;
            }
            let Some(h) = compiled.heuristic(&next, cfg.heuristic) else {
                continue; // dead end even under relaxation
            };
            best_g.insert(next.clone(), ng);
            nodes.push(Node { bits: next, g: ng, parent: Some((node_id, ca.idx)) });
            seq += 1;
            open.push(HeapEntry {
                f: ng as f64 + cfg.weight * h as f64,
                h,
                seq,
                node: nodes.len() - 1,
            });
        }
    }
    Ok(None)
}

fn reconstruct(task: &GroundTask, nodes: &[Node], goal_node: usize) -> PlanPrefix {
    let mut action_ids = Vec::new();
    let mut cursor = goal_node;
    while let Some((parent, action)) = nodes[cursor].parent {
        action_ids.push(action);
        cursor = parent;
    }
    action_ids.reverse();
    let steps: Vec<GroundAction> = action_ids.iter().map(|&i| task.actions[i].clone()).collect();

    // rebuild the goal state from its bits
    let leaf = &nodes[goal_node];
    let atoms = task
        .atoms
        .iter()
        .enumerate()
        .filter(|(i, _)| bit_test(&leaf.bits, *i as u32))
        .map(|(_, a)| a.clone())
        .collect();
    let state = State { atoms, total_cost: task.init.total_cost + leaf.g };
    PlanPrefix { steps, g: leaf.g, state }
}
