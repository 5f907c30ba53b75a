//! The operational hash table: random-walk insertion with per-round traces,
//! a shortest-augmenting-path (BFS) baseline, and rollback on failure.
//!
//! A table at any point holds a matching: each placed item occupies exactly
//! one of its own choices, each slot holds at most one item. A round inserts
//! one item:
//!
//!   1. If any choice of the in-hand item is empty, place it there (picking
//!      uniformly among the empty choice-positions) and finish.
//!   2. Otherwise evict the resident of a uniformly chosen choice and repeat
//!      with the evicted item in hand.
//!
//! Choices are exposed lazily: each item remembers which of its positions
//! have been revealed. A previously revealed position always points at an
//! occupied slot (occupied slots never become empty again), so step 1 only
//! scans unexposed positions, in a uniformly random order. The first empty
//! choice found this way is uniform over all empty choice-positions, with
//! duplicates weighted by multiplicity.

use rand::Rng;
use thiserror::Error;

use crate::hash::{ChoiceVector, FamilyConfig, ItemId, SlotIndex};

/// How step 2 of a round picks the choice to evict.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WalkMode {
    /// Uniform over all `d` choice-positions, including the slot the in-hand
    /// item just vacated.
    Literal,
    /// Uniform over the choice-positions not equal to the just-vacated slot;
    /// falls back to `Literal` when every position equals it.
    NoBacktrack,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct WalkPolicy {
    pub mode: WalkMode,
    /// A round fails after this many evictions without a placement.
    pub max_steps: u32,
}

impl WalkPolicy {
    pub fn new(mode: WalkMode, max_steps: u32) -> Self {
        assert!(max_steps >= 1, "max_steps must be at least 1");
        WalkPolicy { mode, max_steps }
    }

    /// Default cap of `100 * ceil(log2 m)` evictions (at least 100): long
    /// rounds are exponentially rare, so a generous cap converts the
    /// nonterminating tail into an explicit error.
    pub fn literal_for(m: u32) -> Self {
        WalkPolicy::new(WalkMode::Literal, default_max_steps(m))
    }

    pub fn no_backtrack_for(m: u32) -> Self {
        WalkPolicy::new(WalkMode::NoBacktrack, default_max_steps(m))
    }
}

pub fn default_max_steps(m: u32) -> u32 {
    100 * ceil_log2(m).max(1)
}

fn ceil_log2(m: u32) -> u32 {
    if m <= 1 {
        0
    } else {
        32 - (m - 1).leading_zeros()
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("item {0:?} is already placed")]
    AlreadyPlaced(ItemId),
    #[error("cannot build {n} items into {m} slots")]
    CapacityExceeded { n: u32, m: u32 },
    #[error("no augmenting path exists for item {0:?}")]
    NoAugmentingPath(ItemId),
}

/// The assignment of placed items to slots, maintained as a pair of mutually
/// inverse maps.
#[derive(Clone, Debug)]
pub struct Matching {
    slot_to_item: Vec<Option<ItemId>>,
    item_to_slot: Vec<Option<SlotIndex>>,
    size: usize,
}

/// Equality is over the mapping itself; the capacity the item map has grown
/// to (trailing unplaced entries) is not observable.
impl PartialEq for Matching {
    fn eq(&self, other: &Self) -> bool {
        fn trimmed(v: &[Option<SlotIndex>]) -> &[Option<SlotIndex>] {
            let end = v.iter().rposition(|e| e.is_some()).map_or(0, |i| i + 1);
            &v[..end]
        }
        self.slot_to_item == other.slot_to_item
            && self.size == other.size
            && trimmed(&self.item_to_slot) == trimmed(&other.item_to_slot)
    }
}

impl Eq for Matching {}

impl Matching {
    pub fn new(m: u32) -> Self {
        Matching {
            slot_to_item: vec![None; m as usize],
            item_to_slot: Vec::new(),
            size: 0,
        }
    }

    pub fn slots(&self) -> u32 {
        self.slot_to_item.len() as u32
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn slot_resident(&self, slot: SlotIndex) -> Option<ItemId> {
        self.slot_to_item[slot.index()]
    }

    pub fn slot_of_item(&self, item: ItemId) -> Option<SlotIndex> {
        self.item_to_slot.get(item.index()).copied().flatten()
    }

    pub fn is_slot_empty(&self, slot: SlotIndex) -> bool {
        self.slot_to_item[slot.index()].is_none()
    }

    /// Slots currently holding an item, ascending.
    pub fn occupied_slots(&self) -> impl Iterator<Item = SlotIndex> + '_ {
        self.slot_to_item
            .iter()
            .enumerate()
            .filter(|(_, it)| it.is_some())
            .map(|(s, _)| SlotIndex(s as u32))
    }

    fn ensure_item(&mut self, item: ItemId) {
        if self.item_to_slot.len() <= item.index() {
            self.item_to_slot.resize(item.index() + 1, None);
        }
    }

    fn place(&mut self, item: ItemId, slot: SlotIndex) {
        debug_assert!(self.slot_to_item[slot.index()].is_none());
        self.ensure_item(item);
        debug_assert!(self.item_to_slot[item.index()].is_none());
        self.slot_to_item[slot.index()] = Some(item);
        self.item_to_slot[item.index()] = Some(slot);
        self.size += 1;
    }

    /// Replay-side displacement used by the trace verifier.
    pub(crate) fn replay_displace(&mut self, item: ItemId, slot: SlotIndex) -> ItemId {
        self.displace(item, slot)
    }

    /// Move `item` (in hand) into `slot`, handing back the previous resident.
    fn displace(&mut self, item: ItemId, slot: SlotIndex) -> ItemId {
        let evicted = self.slot_to_item[slot.index()].expect("displace needs an occupied slot");
        self.ensure_item(item);
        self.slot_to_item[slot.index()] = Some(item);
        self.item_to_slot[item.index()] = Some(slot);
        self.item_to_slot[evicted.index()] = None;
        evicted
    }

    /// Full-scan consistency check: the two maps are mutually inverse and
    /// every placed item sits on one of its own choices.
    pub fn verify_consistent(&self, cfg: &FamilyConfig) -> Result<(), String> {
        let mut placed = 0usize;
        for (s, resident) in self.slot_to_item.iter().enumerate() {
            if let Some(item) = resident {
                placed += 1;
                if self.slot_of_item(*item) != Some(SlotIndex(s as u32)) {
                    return Err(format!("slot {s} holds {item:?} but the inverse map disagrees"));
                }
                if !cfg.choices_of(*item).contains(SlotIndex(s as u32)) {
                    return Err(format!("{item:?} occupies slot {s} which is not among its choices"));
                }
            }
        }
        for (i, slot) in self.item_to_slot.iter().enumerate() {
            if let Some(slot) = slot {
                if self.slot_to_item[slot.index()] != Some(ItemId(i as u32)) {
                    return Err(format!("item {i} maps to slot {slot:?} but the slot disagrees"));
                }
            }
        }
        if placed != self.size {
            return Err(format!("size {} but {} slots occupied", self.size, placed));
        }
        Ok(())
    }
}

/// One move of a round: `evictor` enters `slot`, displacing `evicted`
/// (`None` marks the final placement into an empty slot).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TraceStep {
    pub evictor: ItemId,
    pub slot: SlotIndex,
    pub evicted: Option<ItemId>,
}

/// Ordered record of one insertion round.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InsertTrace {
    pub item: ItemId,
    pub steps: Vec<TraceStep>,
    /// Slot of the final placement; `None` when the round failed.
    pub terminal_slot: Option<SlotIndex>,
    /// Choice positions revealed for the first time during this round.
    pub revealed: u32,
}

impl InsertTrace {
    pub fn evictions(&self) -> u32 {
        self.steps.iter().filter(|s| s.evicted.is_some()).count() as u32
    }

    /// Length of the walk in edges: `2 * evictions + 1` for a placed round
    /// (the final edge lands in the empty slot), `2 * evictions` for a failed
    /// one.
    pub fn path_edges(&self) -> u32 {
        2 * self.evictions() + u32::from(self.terminal_slot.is_some())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InsertStatus {
    Placed,
    FailedMaxSteps,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InsertOutcome {
    pub status: InsertStatus,
    pub trace: InsertTrace,
}

impl InsertOutcome {
    pub fn placed(&self) -> bool {
        self.status == InsertStatus::Placed
    }
}

/// Re-apply a trace to a copy of the pre-round matching. Tests compare the
/// result against the live post-round matching.
pub fn replay_trace(pre: &Matching, trace: &InsertTrace) -> Matching {
    let mut m = pre.clone();
    for step in &trace.steps {
        match step.evicted {
            Some(evicted) => {
                let got = m.displace(step.evictor, step.slot);
                debug_assert_eq!(got, evicted, "trace disagrees with matching state");
            }
            None => m.place(step.evictor, step.slot),
        }
    }
    m
}

/// A cuckoo table: matching state plus per-item exposure bookkeeping.
pub struct CuckooTable {
    cfg: FamilyConfig,
    matching: Matching,
    /// One bit per (item, position): set once the position has been revealed.
    exposed: Vec<u64>,
    stride: usize,
}

impl CuckooTable {
    pub fn new(cfg: FamilyConfig) -> Self {
        let stride = ((cfg.choices_per_item() + 63) / 64) as usize;
        CuckooTable {
            matching: Matching::new(cfg.slots()),
            exposed: Vec::new(),
            stride,
            cfg,
        }
    }

    pub fn cfg(&self) -> &FamilyConfig {
        &self.cfg
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    fn is_exposed(&self, item: ItemId, position: u32) -> bool {
        let w = item.index() * self.stride + (position / 64) as usize;
        match self.exposed.get(w) {
            Some(word) => word & (1u64 << (position % 64)) != 0,
            None => false,
        }
    }

    fn mark_exposed(&mut self, item: ItemId, position: u32) {
        let w = item.index() * self.stride + (position / 64) as usize;
        if self.exposed.len() <= w {
            self.exposed.resize((item.index() + 1) * self.stride, 0);
        }
        self.exposed[w] |= 1u64 << (position % 64);
    }

    /// Slot currently holding `item`, found by scanning its own choices.
    pub fn lookup(&self, item: ItemId) -> Option<SlotIndex> {
        let d = self.cfg.choices_per_item();
        (0..d)
            .map(|p| self.cfg.choice_at(item, p))
            .find(|&slot| self.matching.slot_resident(slot) == Some(item))
    }

    /// One round of random-walk insertion. On failure the matching is rolled
    /// back to its pre-round state and the partial walk is returned as the
    /// trace.
    pub fn insert_random_walk<R: Rng>(
        &mut self,
        item: ItemId,
        policy: &WalkPolicy,
        rng: &mut R,
    ) -> Result<InsertOutcome, TableError> {
        if self.matching.slot_of_item(item).is_some() {
            return Err(TableError::AlreadyPlaced(item));
        }

        let d = self.cfg.choices_per_item();
        let mut steps: Vec<TraceStep> = Vec::new();
        let mut revealed = 0u32;
        let mut x = item;
        let mut vacated: Option<SlotIndex> = None;
        let mut scratch: Vec<u32> = Vec::with_capacity(d as usize);

        loop {
            // Step 1: scan the unexposed choices of x in uniformly random
            // order; the first empty one is uniform over all empty
            // choice-positions because exposed positions are never empty.
            scratch.clear();
            scratch.extend((0..d).filter(|&p| !self.is_exposed(x, p)));
            let mut placement: Option<SlotIndex> = None;
            for i in 0..scratch.len() {
                let j = rng.gen_range(i..scratch.len());
                scratch.swap(i, j);
                let p = scratch[i];
                self.mark_exposed(x, p);
                revealed += 1;
                let slot = self.cfg.choice_at(x, p);
                if self.matching.is_slot_empty(slot) {
                    placement = Some(slot);
                    break;
                }
            }
            if let Some(slot) = placement {
                steps.push(TraceStep { evictor: x, slot, evicted: None });
                self.matching.place(x, slot);
                return Ok(InsertOutcome {
                    status: InsertStatus::Placed,
                    trace: InsertTrace { item, steps, terminal_slot: Some(slot), revealed },
                });
            }

            // Every choice of x is occupied.
            if steps.len() as u32 >= policy.max_steps {
                self.rollback(&steps);
                return Ok(InsertOutcome {
                    status: InsertStatus::FailedMaxSteps,
                    trace: InsertTrace { item, steps, terminal_slot: None, revealed },
                });
            }

            // Step 2: evict the resident of a uniformly chosen choice.
            let position = self.pick_eviction_position(x, vacated, policy.mode, rng);
            let slot = self.cfg.choice_at(x, position);
            let evicted = self.matching.displace(x, slot);
            steps.push(TraceStep { evictor: x, slot, evicted: Some(evicted) });
            vacated = Some(slot);
            x = evicted;
        }
    }

    fn pick_eviction_position<R: Rng>(
        &self,
        x: ItemId,
        vacated: Option<SlotIndex>,
        mode: WalkMode,
        rng: &mut R,
    ) -> u32 {
        let d = self.cfg.choices_per_item();
        match (mode, vacated) {
            (WalkMode::Literal, _) | (WalkMode::NoBacktrack, None) => rng.gen_range(0..d),
            (WalkMode::NoBacktrack, Some(back)) => {
                let candidates: Vec<u32> =
                    (0..d).filter(|&p| self.cfg.choice_at(x, p) != back).collect();
                if candidates.is_empty() {
                    rng.gen_range(0..d)
                } else {
                    candidates[rng.gen_range(0..candidates.len())]
                }
            }
        }
    }

    fn rollback(&mut self, steps: &[TraceStep]) {
        for step in steps.iter().rev() {
            let evicted = step.evicted.expect("failed walks contain only evictions");
            self.matching.slot_to_item[step.slot.index()] = Some(evicted);
            self.matching.item_to_slot[evicted.index()] = Some(step.slot);
            self.matching.item_to_slot[step.evictor.index()] = None;
        }
    }

    /// Length in edges of a shortest augmenting path for `item` from the
    /// current state, without modifying anything. `None` if no path exists.
    pub fn shortest_augmenting_path_edges(&self, item: ItemId) -> Option<u32> {
        self.bfs(item).0.map(|chain| 2 * chain.len() as u32 - 1)
    }

    /// Insert by applying a shortest augmenting path.
    pub fn insert_bfs(&mut self, item: ItemId) -> Result<InsertOutcome, TableError> {
        if self.matching.slot_of_item(item).is_some() {
            return Err(TableError::AlreadyPlaced(item));
        }

        let (chain, scanned) = self.bfs(item);
        let chain = chain.ok_or(TableError::NoAugmentingPath(item))?;

        let mut revealed = 0u32;
        for (it, position) in scanned {
            if !self.is_exposed(it, position) {
                self.mark_exposed(it, position);
                revealed += 1;
            }
        }

        let mut steps = Vec::with_capacity(chain.len());
        for (i, &(evictor, slot)) in chain.iter().enumerate() {
            if i + 1 < chain.len() {
                let evicted = self.matching.displace(evictor, slot);
                debug_assert_eq!(evicted, chain[i + 1].0);
                steps.push(TraceStep { evictor, slot, evicted: Some(evicted) });
            } else {
                self.matching.place(evictor, slot);
                steps.push(TraceStep { evictor, slot, evicted: None });
            }
        }
        let terminal = chain.last().map(|&(_, s)| s);
        Ok(InsertOutcome {
            status: InsertStatus::Placed,
            trace: InsertTrace { item, steps, terminal_slot: terminal, revealed },
        })
    }

    /// Breadth-first search over alternating paths. Returns the chain
    /// `[(x1, s1), ..., (xt, st)]` (st empty, every other si occupied by
    /// x(i+1)) and the log of scanned (item, position) pairs.
    #[allow(clippy::type_complexity)]
    fn bfs(&self, item: ItemId) -> (Option<Vec<(ItemId, SlotIndex)>>, Vec<(ItemId, u32)>) {
        let d = self.cfg.choices_per_item();
        let m = self.cfg.slots() as usize;
        let mut scanned: Vec<(ItemId, u32)> = Vec::new();
        let mut slot_parent: Vec<Option<ItemId>> = vec![None; m];
        let mut item_parent: std::collections::HashMap<ItemId, SlotIndex> =
            std::collections::HashMap::new();
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(item);

        while let Some(x) = queue.pop_front() {
            for p in 0..d {
                scanned.push((x, p));
                let slot = self.cfg.choice_at(x, p);
                if slot_parent[slot.index()].is_some() {
                    continue;
                }
                slot_parent[slot.index()] = Some(x);
                match self.matching.slot_resident(slot) {
                    None => {
                        // Shortest path found: walk the parent pointers back.
                        let mut chain = vec![(x, slot)];
                        let mut cur = x;
                        while cur != item {
                            let via = item_parent[&cur];
                            let prev = slot_parent[via.index()].expect("parent recorded");
                            chain.push((prev, via));
                            cur = prev;
                        }
                        chain.reverse();
                        return (Some(chain), scanned);
                    }
                    Some(resident) => {
                        item_parent.insert(resident, slot);
                        queue.push_back(resident);
                    }
                }
            }
        }
        (None, scanned)
    }
}

/// Result of inserting items `0..n` in order.
pub struct BuildResult {
    pub table: CuckooTable,
    pub outcomes: Vec<InsertOutcome>,
    /// 1-based round index of the first failure; the build stops there.
    pub failed_round: Option<u32>,
}

/// Insert items `0..n` consecutively with random-walk rounds, collecting one
/// outcome per round and stopping at the first failure.
pub fn build_table<R: Rng>(
    n: u32,
    cfg: FamilyConfig,
    policy: &WalkPolicy,
    rng: &mut R,
) -> Result<BuildResult, TableError> {
    if n > cfg.slots() {
        return Err(TableError::CapacityExceeded { n, m: cfg.slots() });
    }
    let mut table = CuckooTable::new(cfg);
    let mut outcomes = Vec::with_capacity(n as usize);
    let mut failed_round = None;
    for k in 1..=n {
        let outcome = table.insert_random_walk(ItemId(k - 1), policy, rng)?;
        let placed = outcome.placed();
        outcomes.push(outcome);
        if !placed {
            failed_round = Some(k);
            break;
        }
    }
    Ok(BuildResult { table, outcomes, failed_round })
}

/// Choices of an item under a table's config; convenience for oracles.
pub fn choices(cfg: &FamilyConfig, item: ItemId) -> ChoiceVector {
    cfg.choices_of(item)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn empty_table_places_in_one_edge() {
        let cfg = FamilyConfig::new(16, 3, 11).unwrap();
        let mut table = CuckooTable::new(cfg);
        let out = table
            .insert_random_walk(ItemId(0), &WalkPolicy::literal_for(16), &mut rng(1))
            .unwrap();
        assert!(out.placed());
        assert_eq!(out.trace.path_edges(), 1);
        assert_eq!(out.trace.evictions(), 0);
        assert_eq!(table.lookup(ItemId(0)), out.trace.terminal_slot);
    }

    /// Find a (graph seed, walk seed) pair realizing the two-slot instance:
    /// item 0 has choices [0,1] and lands on slot 0, item 1 has choices [0,0].
    fn two_slot_instance() -> (FamilyConfig, u64) {
        for seed in 0..20_000u64 {
            let cfg = FamilyConfig::new(2, 2, seed).unwrap();
            let b = cfg.choices_of(ItemId(0));
            let a = cfg.choices_of(ItemId(1));
            if b.as_slice() != [SlotIndex(0), SlotIndex(1)]
                || a.as_slice() != [SlotIndex(0), SlotIndex(0)]
            {
                continue;
            }
            for walk_seed in 0..64u64 {
                let mut table = CuckooTable::new(cfg);
                let out = table
                    .insert_random_walk(ItemId(0), &WalkPolicy::literal_for(2), &mut rng(walk_seed))
                    .unwrap();
                if out.trace.terminal_slot == Some(SlotIndex(0)) {
                    return (cfg, walk_seed);
                }
            }
        }
        panic!("no seed realizes the hand-built instance");
    }

    #[test]
    fn forced_eviction_walk_has_three_edges() {
        // Slot 0 holds item 0 (choices [0,1]); item 1 has choices [0,0], so
        // the only possible walk evicts item 0 to slot 1.
        let (cfg, walk_seed) = two_slot_instance();
        let mut walk_rng = rng(walk_seed);
        let mut table = CuckooTable::new(cfg);
        let policy = WalkPolicy::literal_for(2);
        table.insert_random_walk(ItemId(0), &policy, &mut walk_rng).unwrap();

        let out = table.insert_random_walk(ItemId(1), &policy, &mut walk_rng).unwrap();
        assert!(out.placed());
        assert_eq!(out.trace.path_edges(), 3);
        assert_eq!(out.trace.evictions(), 1);
        assert_eq!(table.lookup(ItemId(1)), Some(SlotIndex(0)));
        assert_eq!(table.lookup(ItemId(0)), Some(SlotIndex(1)));
    }

    #[test]
    fn bfs_on_forced_instance_matches_walk() {
        let (cfg, walk_seed) = two_slot_instance();
        let mut walk_rng = rng(walk_seed);
        let mut table = CuckooTable::new(cfg);
        table
            .insert_random_walk(ItemId(0), &WalkPolicy::literal_for(2), &mut walk_rng)
            .unwrap();
        let out = table.insert_bfs(ItemId(1)).unwrap();
        assert_eq!(out.trace.path_edges(), 3);
        assert_eq!(table.lookup(ItemId(1)), Some(SlotIndex(0)));
    }

    #[test]
    fn unreachable_empty_slot_fails_and_rolls_back() {
        // m = 1: both items can only ever see slot 0.
        let cfg = FamilyConfig::new(1, 2, 3).unwrap();
        let mut table = CuckooTable::new(cfg);
        let policy = WalkPolicy::new(WalkMode::Literal, 10);
        let mut r = rng(0);
        table.insert_random_walk(ItemId(0), &policy, &mut r).unwrap();
        let before = table.matching().clone();

        let out = table.insert_random_walk(ItemId(1), &policy, &mut r).unwrap();
        assert_eq!(out.status, InsertStatus::FailedMaxSteps);
        assert_eq!(out.trace.evictions(), 10);
        assert_eq!(out.trace.terminal_slot, None);
        assert_eq!(table.matching(), &before);
        assert_eq!(table.lookup(ItemId(1)), None);
    }

    #[test]
    fn bfs_reports_missing_augmenting_path() {
        let cfg = FamilyConfig::new(1, 2, 3).unwrap();
        let mut table = CuckooTable::new(cfg);
        table.insert_bfs(ItemId(0)).unwrap();
        assert_eq!(table.insert_bfs(ItemId(1)), Err(TableError::NoAugmentingPath(ItemId(1))));
    }

    #[test]
    fn lookup_tracks_displaced_items() {
        let cfg = FamilyConfig::new(64, 3, 99).unwrap();
        let policy = WalkPolicy::literal_for(64);
        let mut r = rng(7);
        let build = build_table(48, cfg, &policy, &mut r).unwrap();
        assert!(build.failed_round.is_none());
        for i in 0..48 {
            let slot = build.table.lookup(ItemId(i)).expect("placed item found");
            assert_eq!(build.table.matching().slot_resident(slot), Some(ItemId(i)));
        }
        assert_eq!(build.table.lookup(ItemId(1000)), None);
        build.table.matching().verify_consistent(build.table.cfg()).unwrap();
    }

    #[test]
    fn build_table_trivial_cases() {
        let cfg = FamilyConfig::new(1, 2, 0).unwrap();
        let mut r = rng(0);
        let build = build_table(0, cfg, &WalkPolicy::literal_for(1), &mut r).unwrap();
        assert!(build.outcomes.is_empty());
        assert_eq!(build.table.matching().size(), 0);

        let mut r = rng(0);
        let build = build_table(1, cfg, &WalkPolicy::literal_for(1), &mut r).unwrap();
        assert_eq!(build.outcomes.len(), 1);
        assert_eq!(build.outcomes[0].trace.path_edges(), 1);

        let r2 = build_table(2, cfg, &WalkPolicy::literal_for(1), &mut rng(0));
        assert_eq!(r2.err(), Some(TableError::CapacityExceeded { n: 2, m: 1 }));
    }

    #[test]
    fn identical_seeds_give_identical_builds() {
        let cfg = FamilyConfig::new(128, 4, 5).unwrap();
        let policy = WalkPolicy::literal_for(128);
        let a = build_table(96, cfg, &policy, &mut rng(42)).unwrap();
        let b = build_table(96, cfg, &policy, &mut rng(42)).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.table.matching(), b.table.matching());
    }

    #[test]
    fn replay_reproduces_every_round() {
        let cfg = FamilyConfig::new(64, 3, 21).unwrap();
        let policy = WalkPolicy::literal_for(64);
        let mut r = rng(3);
        let mut table = CuckooTable::new(cfg);
        for i in 0..48u32 {
            let pre = table.matching().clone();
            let out = table.insert_random_walk(ItemId(i), &policy, &mut r).unwrap();
            assert!(out.placed());
            assert_eq!(&replay_trace(&pre, &out.trace), table.matching());
            assert_eq!(out.trace.path_edges() % 2, 1);
            assert_eq!(out.trace.path_edges(), 2 * out.trace.evictions() + 1);
        }
    }

    #[test]
    fn bfs_never_exceeds_walk_from_same_state() {
        for seed in 0..20u64 {
            let cfg = FamilyConfig::new(32, 2, seed).unwrap();
            let policy = WalkPolicy::literal_for(32);
            let mut r = rng(seed ^ 0xABCD);
            let mut table = CuckooTable::new(cfg);
            for i in 0..16u32 {
                let bfs_edges = table.shortest_augmenting_path_edges(ItemId(i));
                let out = table.insert_random_walk(ItemId(i), &policy, &mut r).unwrap();
                if out.placed() {
                    let bfs_edges = bfs_edges.expect("path exists if the walk placed");
                    assert!(bfs_edges <= out.trace.path_edges());
                } else {
                    assert!(bfs_edges.is_none());
                    break;
                }
            }
        }
    }

    #[test]
    fn no_backtrack_avoids_vacated_slot_when_possible() {
        // With d = 2 and distinct choices, a no-backtrack walk never evicts
        // back into the slot it just vacated, so it cannot ping-pong between
        // two items the way a literal walk can.
        let (cfg, walk_seed) = two_slot_instance();
        let mut walk_rng = rng(walk_seed);
        let policy = WalkPolicy::no_backtrack_for(2);
        let mut table = CuckooTable::new(cfg);
        table.insert_random_walk(ItemId(0), &policy, &mut walk_rng).unwrap();
        let out = table.insert_random_walk(ItemId(1), &policy, &mut walk_rng).unwrap();
        // Item 0 (choices [0,1]) vacated slot 0; no-backtrack forces slot 1.
        assert_eq!(out.trace.path_edges(), 3);
        assert_eq!(table.lookup(ItemId(0)), Some(SlotIndex(1)));
    }

    #[test]
    fn default_max_steps_scales_with_log_m() {
        assert_eq!(default_max_steps(1), 100);
        assert_eq!(default_max_steps(2), 100);
        assert_eq!(default_max_steps(3), 200);
        assert_eq!(default_max_steps(2048), 1100);
    }
}
