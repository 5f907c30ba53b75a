//! Exact structural oracles over the bipartite cuckoo multigraph.
//!
//! The graph has items on the left (each with exactly `d` incident edge
//! instances, duplicates kept) and slots on the right. Everything here is
//! exhaustive enumeration meant for desk-scale verification: blocked sets,
//! interesting paths, short cycles, degree statistics, and validation of
//! insertion traces as augmenting walks.

use std::collections::VecDeque;

use thiserror::Error;

use crate::hash::{ChoiceVector, FamilyConfig, ItemId, SlotIndex};
use crate::table::{InsertTrace, Matching};

/// Default step budget for the exhaustive enumerators.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GraphError {
    #[error("{what}: predicted work {predicted:.3e} exceeds budget {budget}")]
    BudgetExceeded { what: &'static str, predicted: f64, budget: u64 },
    #[error("path length ell must be at least 1")]
    BadPathLength,
    #[error("cycle cap must be even and at least 4 (got {cap})")]
    BadCycleCap { cap: u32 },
    #[error("choice row {item} has {got} entries, expected d = {d}")]
    BadChoiceRow { item: u32, got: usize, d: u32 },
    #[error("slot {slot} out of range for m = {m}")]
    SlotOutOfRange { slot: u32, m: u32 },
}

/// A subset of the slot universe, used for occupied-slot sets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SlotSet {
    bits: Vec<bool>,
    count: usize,
}

impl SlotSet {
    pub fn new(m: u32) -> Self {
        SlotSet { bits: vec![false; m as usize], count: 0 }
    }

    pub fn from_matching(matching: &Matching) -> Self {
        let mut set = SlotSet::new(matching.slots());
        for slot in matching.occupied_slots() {
            set.insert(slot);
        }
        set
    }

    pub fn insert(&mut self, slot: SlotIndex) {
        if !self.bits[slot.index()] {
            self.bits[slot.index()] = true;
            self.count += 1;
        }
    }

    pub fn contains(&self, slot: SlotIndex) -> bool {
        self.bits[slot.index()]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn universe(&self) -> u32 {
        self.bits.len() as u32
    }
}

/// Items among the first `k` whose every choice is occupied.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlockedSet {
    pub k: u32,
    members: Vec<ItemId>,
}

impl BlockedSet {
    pub fn members(&self) -> &[ItemId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.members.binary_search(&item).is_ok()
    }
}

/// Count of directed interesting-path vertex sequences with `2*ell - 1`
/// vertices, edge instances counted with multiplicity. The undirected total
/// identifies a sequence with its reverse.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct InterestingPathCount {
    pub k: u32,
    pub ell: u32,
    pub directed: u64,
    pub undirected: u64,
}

/// Simple-cycle census up to an even length cap. Doubled edges between one
/// (item, slot) pair form length-2 cycles; they are tallied separately and
/// excluded from `cycle_count`, which covers simple cycles with at least two
/// items.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ShortCycles {
    pub cap: u32,
    pub cycle_count: u64,
    pub parallel_edge_pairs: u64,
    on_cycle_items: Vec<bool>,
    on_cycle_slots: Vec<bool>,
}

/// The bipartite cuckoo multigraph, materialized.
pub struct CuckooGraph {
    m: u32,
    d: u32,
    adjacency: Vec<ChoiceVector>,
    /// Per slot: one `(item, position)` entry per incident edge instance.
    slot_edges: Vec<Vec<(ItemId, u32)>>,
}

impl CuckooGraph {
    /// Materialize the graph of items `0..n` under a choice family.
    pub fn from_family(cfg: &FamilyConfig, n: u32) -> Self {
        let adjacency: Vec<ChoiceVector> = (0..n).map(|i| cfg.choices_of(ItemId(i))).collect();
        Self::from_adjacency(cfg.slots(), cfg.choices_per_item(), adjacency)
    }

    /// Build from explicit choice rows (tests and hand-built instances).
    pub fn from_choices(m: u32, d: u32, rows: &[Vec<u32>]) -> Result<Self, GraphError> {
        let mut adjacency = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d as usize {
                return Err(GraphError::BadChoiceRow { item: i as u32, got: row.len(), d });
            }
            for &s in row {
                if s >= m {
                    return Err(GraphError::SlotOutOfRange { slot: s, m });
                }
            }
            let cfg_row: Vec<SlotIndex> = row.iter().map(|&s| SlotIndex(s)).collect();
            adjacency.push(ChoiceVector::from_slots(cfg_row));
        }
        Ok(Self::from_adjacency(m, d, adjacency))
    }

    fn from_adjacency(m: u32, d: u32, adjacency: Vec<ChoiceVector>) -> Self {
        let mut slot_edges: Vec<Vec<(ItemId, u32)>> = vec![Vec::new(); m as usize];
        for (i, choices) in adjacency.iter().enumerate() {
            for (p, slot) in choices.into_iter().enumerate() {
                slot_edges[slot.index()].push((ItemId(i as u32), p as u32));
            }
        }
        CuckooGraph { m, d, adjacency, slot_edges }
    }

    pub fn items(&self) -> u32 {
        self.adjacency.len() as u32
    }

    pub fn slots(&self) -> u32 {
        self.m
    }

    pub fn degree_d(&self) -> u32 {
        self.d
    }

    pub fn choices(&self, item: ItemId) -> &ChoiceVector {
        &self.adjacency[item.index()]
    }

    /// Number of parallel edge instances between `item` and `slot`.
    pub fn multiplicity(&self, item: ItemId, slot: SlotIndex) -> u32 {
        self.adjacency[item.index()].multiplicity(slot)
    }

    /// Maximum degree over slots, counting edge instances. Item degrees are
    /// always exactly `d`.
    pub fn max_degree(&self) -> u32 {
        self.slot_edges.iter().map(|e| e.len() as u32).max().unwrap_or(0)
    }

    /// Degree histogram over slots (index = degree, value = slot count).
    pub fn slot_degree_histogram(&self) -> Vec<u64> {
        let max = self.max_degree() as usize;
        let mut hist = vec![0u64; max + 1];
        for edges in &self.slot_edges {
            hist[edges.len()] += 1;
        }
        hist
    }

    /// Items among `0..k` with every choice inside `occupied`, by direct
    /// evaluation over the materialized adjacency.
    pub fn blocked_set(&self, occupied: &SlotSet, k: u32) -> BlockedSet {
        let limit = k.min(self.items());
        let members = (0..limit)
            .map(ItemId)
            .filter(|&item| {
                self.adjacency[item.index()].into_iter().all(|&slot| occupied.contains(slot))
            })
            .collect();
        BlockedSet { k, members }
    }

    /// Exact count of directed interesting-path sequences
    /// `(x1, s1, x2, ..., s(ell-1), x_ell)`: distinct blocked items, distinct
    /// occupied slots, consecutive vertices adjacent, one count per
    /// combination of edge instances.
    pub fn interesting_paths(
        &self,
        blocked: &BlockedSet,
        occupied: &SlotSet,
        ell: u32,
        budget: u64,
    ) -> Result<InterestingPathCount, GraphError> {
        if ell < 1 {
            return Err(GraphError::BadPathLength);
        }
        let b = blocked.len() as f64;
        let predicted = (b * self.d as f64).powi(ell as i32);
        if predicted > budget as f64 {
            return Err(GraphError::BudgetExceeded {
                what: "interesting-path enumeration",
                predicted,
                budget,
            });
        }

        if ell == 1 {
            let n = blocked.len() as u64;
            return Ok(InterestingPathCount { k: blocked.k, ell, directed: n, undirected: n });
        }

        // Occupied slot -> incident edge instances from blocked items.
        let mut blocked_incidence: Vec<Vec<ItemId>> = vec![Vec::new(); self.m as usize];
        for &item in blocked.members() {
            for &slot in self.choices(item) {
                if occupied.contains(slot) {
                    blocked_incidence[slot.index()].push(item);
                }
            }
        }

        let mut used_items = vec![false; self.items() as usize];
        let mut used_slots = vec![false; self.m as usize];
        let mut directed = 0u64;
        for &start in blocked.members() {
            used_items[start.index()] = true;
            self.path_dfs(
                start,
                1,
                ell,
                occupied,
                &blocked_incidence,
                &mut used_items,
                &mut used_slots,
                &mut directed,
            );
            used_items[start.index()] = false;
        }
        Ok(InterestingPathCount { k: blocked.k, ell, directed, undirected: directed / 2 })
    }

    #[allow(clippy::too_many_arguments)]
    fn path_dfs(
        &self,
        current: ItemId,
        depth: u32,
        ell: u32,
        occupied: &SlotSet,
        blocked_incidence: &[Vec<ItemId>],
        used_items: &mut [bool],
        used_slots: &mut [bool],
        directed: &mut u64,
    ) {
        if depth == ell {
            *directed += 1;
            return;
        }
        for &slot in self.choices(current) {
            if !occupied.contains(slot) || used_slots[slot.index()] {
                continue;
            }
            used_slots[slot.index()] = true;
            for &next in &blocked_incidence[slot.index()] {
                if used_items[next.index()] {
                    continue;
                }
                used_items[next.index()] = true;
                self.path_dfs(
                    next,
                    depth + 1,
                    ell,
                    occupied,
                    blocked_incidence,
                    used_items,
                    used_slots,
                    directed,
                );
                used_items[next.index()] = false;
            }
            used_slots[slot.index()] = false;
        }
    }

    /// Exact census of simple cycles with at most `cap` edges (cap even,
    /// >= 4). Cycles are counted once per combination of edge instances;
    /// length-2 parallel-edge cycles are reported separately.
    pub fn short_cycles(&self, cap: u32, budget: u64) -> Result<ShortCycles, GraphError> {
        if cap < 4 || cap % 2 != 0 {
            return Err(GraphError::BadCycleCap { cap });
        }
        let mut parallel_edge_pairs = 0u64;
        for choices in &self.adjacency {
            let mut sorted: Vec<SlotIndex> = choices.into_iter().copied().collect();
            sorted.sort();
            let mut run = 1u64;
            for w in 1..sorted.len() {
                if sorted[w] == sorted[w - 1] {
                    run += 1;
                } else {
                    parallel_edge_pairs += run * (run - 1) / 2;
                    run = 1;
                }
            }
            parallel_edge_pairs += run * (run - 1) / 2;
        }

        let mut state = CycleSearch {
            graph: self,
            max_items: cap / 2,
            steps: 0,
            budget,
            used_items: vec![false; self.items() as usize],
            used_slots: vec![false; self.m as usize],
            path_items: Vec::new(),
            path_slots: Vec::new(),
            on_cycle_items: vec![false; self.items() as usize],
            on_cycle_slots: vec![false; self.m as usize],
            count: 0,
        };

        for root in 0..self.items() {
            let root = ItemId(root);
            state.used_items[root.index()] = true;
            state.path_items.push(root);
            // Every position is its own opening edge instance, duplicates
            // included.
            for &first_slot in self.choices(root) {
                state.used_slots[first_slot.index()] = true;
                state.path_slots.push(first_slot);
                state.extend(root, first_slot)?;
                state.path_slots.pop();
                state.used_slots[first_slot.index()] = false;
            }
            state.path_items.pop();
            state.used_items[root.index()] = false;
        }

        Ok(ShortCycles {
            cap,
            cycle_count: state.count,
            parallel_edge_pairs,
            on_cycle_items: state.on_cycle_items,
            on_cycle_slots: state.on_cycle_slots,
        })
    }

    /// Vertices (items and slots) within graph distance `radius` of a vertex
    /// lying on a simple cycle of length at most `cap`.
    pub fn vertices_near_short_cycles(
        &self,
        cap: u32,
        radius: u32,
        budget: u64,
    ) -> Result<u64, GraphError> {
        let cycles = self.short_cycles(cap, budget)?;
        Ok(self.count_within_radius(&cycles, radius))
    }

    /// Multi-source BFS from every on-cycle vertex.
    pub fn count_within_radius(&self, cycles: &ShortCycles, radius: u32) -> u64 {
        let n = self.items() as usize;
        let m = self.m as usize;
        // Vertex ids: items 0..n, then slots n..n+m.
        let mut dist: Vec<Option<u32>> = vec![None; n + m];
        let mut queue = VecDeque::new();
        for (i, &on) in cycles.on_cycle_items.iter().enumerate() {
            if on {
                dist[i] = Some(0);
                queue.push_back(i);
            }
        }
        for (s, &on) in cycles.on_cycle_slots.iter().enumerate() {
            if on {
                dist[n + s] = Some(0);
                queue.push_back(n + s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap();
            if dv == radius {
                continue;
            }
            if v < n {
                for &slot in self.choices(ItemId(v as u32)) {
                    let u = n + slot.index();
                    if dist[u].is_none() {
                        dist[u] = Some(dv + 1);
                        queue.push_back(u);
                    }
                }
            } else {
                for &(item, _) in &self.slot_edges[v - n] {
                    let u = item.index();
                    if dist[u].is_none() {
                        dist[u] = Some(dv + 1);
                        queue.push_back(u);
                    }
                }
            }
        }
        dist.iter().filter(|d| d.is_some()).count() as u64
    }

    /// Check that a placed round's trace is a valid alternating walk: starts
    /// at the inserted item, every traversed edge exists in the adjacency,
    /// evictions hand off consistently, and the walk ends at a slot that was
    /// empty before the round.
    pub fn verify_trace_as_augmenting_path(
        &self,
        pre: &Matching,
        trace: &InsertTrace,
    ) -> Result<(), TraceViolation> {
        if trace.terminal_slot.is_none() {
            return Err(TraceViolation::NotPlaced);
        }
        let Some(first) = trace.steps.first() else {
            return Err(TraceViolation::EmptyTrace);
        };
        if first.evictor != trace.item {
            return Err(TraceViolation::FirstEvictorMismatch {
                expected: trace.item,
                got: first.evictor,
            });
        }

        let mut state = pre.clone();
        let last = trace.steps.len() - 1;
        let mut hand = trace.item;
        for (i, step) in trace.steps.iter().enumerate() {
            if step.evictor != hand {
                return Err(TraceViolation::BrokenChain { step: i });
            }
            if step.evictor.index() >= self.adjacency.len()
                || self.multiplicity(step.evictor, step.slot) == 0
            {
                return Err(TraceViolation::EdgeNotInGraph { step: i });
            }
            if i < last {
                let resident = state.slot_resident(step.slot);
                if resident.is_none() || step.evicted != resident {
                    return Err(TraceViolation::EvictionMismatch { step: i });
                }
                let evicted = step.evicted.unwrap();
                state.replay_displace(step.evictor, step.slot);
                hand = evicted;
            } else {
                if step.evicted.is_some() {
                    return Err(TraceViolation::DanglingEviction);
                }
                if !pre.is_slot_empty(step.slot) || state.slot_resident(step.slot).is_some() {
                    return Err(TraceViolation::TerminalOccupied { slot: step.slot });
                }
                if trace.terminal_slot != Some(step.slot) {
                    return Err(TraceViolation::TerminalMismatch);
                }
            }
        }
        Ok(())
    }
}

struct CycleSearch<'g> {
    graph: &'g CuckooGraph,
    max_items: u32,
    steps: u64,
    budget: u64,
    used_items: Vec<bool>,
    used_slots: Vec<bool>,
    path_items: Vec<ItemId>,
    path_slots: Vec<SlotIndex>,
    on_cycle_items: Vec<bool>,
    on_cycle_slots: Vec<bool>,
    count: u64,
}

impl CycleSearch<'_> {
    /// Extend the path `root .. -> last_slot`; try to close back to the root
    /// or continue through another item larger than the root.
    fn extend(&mut self, root: ItemId, last_slot: SlotIndex) -> Result<(), GraphError> {
        self.bump()?;
        let first_slot = self.path_slots[0];
        // Close: one cycle instance per parallel (root, last_slot) edge.
        if self.path_items.len() >= 2 && first_slot < last_slot {
            let closing = self.graph.multiplicity(root, last_slot) as u64;
            if closing > 0 {
                self.count += closing;
                for &it in &self.path_items {
                    self.on_cycle_items[it.index()] = true;
                }
                for &sl in &self.path_slots {
                    self.on_cycle_slots[sl.index()] = true;
                }
            }
        }
        if self.path_items.len() as u32 == self.max_items {
            return Ok(());
        }
        let instances = self.graph.slot_edges[last_slot.index()].clone();
        for (next, _) in instances {
            if next <= root || self.used_items[next.index()] {
                continue;
            }
            self.used_items[next.index()] = true;
            self.path_items.push(next);
            for &slot in self.graph.choices(next) {
                if self.used_slots[slot.index()] {
                    continue;
                }
                self.used_slots[slot.index()] = true;
                self.path_slots.push(slot);
                self.extend(root, slot)?;
                self.path_slots.pop();
                self.used_slots[slot.index()] = false;
            }
            self.path_items.pop();
            self.used_items[next.index()] = false;
        }
        Ok(())
    }

    fn bump(&mut self) -> Result<(), GraphError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(GraphError::BudgetExceeded {
                what: "short-cycle enumeration",
                predicted: self.steps as f64,
                budget: self.budget,
            });
        }
        Ok(())
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TraceViolation {
    #[error("trace did not end in a placement")]
    NotPlaced,
    #[error("trace has no steps")]
    EmptyTrace,
    #[error("first evictor {got:?} is not the inserted item {expected:?}")]
    FirstEvictorMismatch { expected: ItemId, got: ItemId },
    #[error("step {step}: traversed edge does not exist in the graph")]
    EdgeNotInGraph { step: usize },
    #[error("step {step}: evictor is not the item evicted by the previous step")]
    BrokenChain { step: usize },
    #[error("step {step}: recorded eviction disagrees with the matching state")]
    EvictionMismatch { step: usize },
    #[error("final step still evicts an item")]
    DanglingEviction,
    #[error("terminal slot {slot:?} was occupied before the round")]
    TerminalOccupied { slot: SlotIndex },
    #[error("terminal_slot field disagrees with the final step")]
    TerminalMismatch,
}

/// Outcome of checking a trace prefix against the interesting-path structure.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrefixStatus {
    /// No evictions: nothing to check.
    NoEvictions,
    /// The evicting items and intermediate slots form a simple path whose
    /// items all lie in the blocked set: an interesting path.
    InterestingPath,
    /// The walk revisited a vertex, i.e. it traversed a cycle; the prefix is
    /// not a simple path.
    TouchedCycle,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PrefixViolation {
    #[error("evicting item {item:?} is not in the blocked set")]
    EvictorNotBlocked { item: ItemId },
    #[error("intermediate slot {slot:?} was not occupied before the round")]
    SlotNotOccupied { slot: SlotIndex },
}

/// Every item that failed to place during a round must have had all its
/// choices occupied, i.e. must belong to the round's blocked set; and every
/// intermediate slot must have been occupied. When the walked prefix is
/// vertex-simple it is therefore an interesting path.
pub fn check_interesting_prefix(
    blocked: &BlockedSet,
    occupied: &SlotSet,
    trace: &InsertTrace,
) -> Result<PrefixStatus, PrefixViolation> {
    let evictions = trace.evictions() as usize;
    if evictions == 0 {
        return Ok(PrefixStatus::NoEvictions);
    }
    // Evicting items x1..xs and intermediate slots s1..s(s-1).
    let items: Vec<ItemId> = trace.steps[..evictions].iter().map(|s| s.evictor).collect();
    let slots: Vec<SlotIndex> =
        trace.steps[..evictions.saturating_sub(1)].iter().map(|s| s.slot).collect();

    for &item in &items {
        if !blocked.contains(item) {
            return Err(PrefixViolation::EvictorNotBlocked { item });
        }
    }
    for &slot in &slots {
        if !occupied.contains(slot) {
            return Err(PrefixViolation::SlotNotOccupied { slot });
        }
    }

    let mut seen_items = items.clone();
    seen_items.sort();
    seen_items.dedup();
    let mut seen_slots: Vec<SlotIndex> = trace.steps[..evictions].iter().map(|s| s.slot).collect();
    seen_slots.sort();
    seen_slots.dedup();
    if seen_items.len() == items.len() && seen_slots.len() == evictions {
        Ok(PrefixStatus::InterestingPath)
    } else {
        Ok(PrefixStatus::TouchedCycle)
    }
}

/// Second code path for the blocked-set definition: query the choice family
/// position by position instead of using the materialized adjacency.
pub fn blocked_set_via_reveal(cfg: &FamilyConfig, occupied: &SlotSet, k: u32) -> BlockedSet {
    let members = (0..k)
        .map(ItemId)
        .filter(|&item| {
            (0..cfg.choices_per_item()).all(|p| {
                let slot = cfg.lazy_reveal(item, p).expect("position in range");
                occupied.contains(slot)
            })
        })
        .collect();
    BlockedSet { k, members }
}

/// Even cycle cap defaulting to `max(4, (ln ln n)^2)` rounded up to even.
pub fn default_cycle_cap(n: u32) -> u32 {
    let lnln = (f64::from(n.max(2))).ln().ln().max(0.0);
    let cap = (lnln * lnln).ceil() as u32;
    let cap = cap.max(4);
    if cap % 2 == 0 {
        cap
    } else {
        cap + 1
    }
}

/// Default proximity radius `ceil(2 * A0 * ln ln n)` with `A0 = 3`.
pub fn default_cycle_radius(n: u32) -> u32 {
    const A0: f64 = 3.0;
    let lnln = (f64::from(n.max(2))).ln().ln().max(0.0);
    (2.0 * A0 * lnln).ceil() as u32
}
