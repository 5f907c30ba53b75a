//! Generative invariants of the table and its traces.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cuckoo_walk::graph::{check_interesting_prefix, CuckooGraph, PrefixStatus, SlotSet};
use cuckoo_walk::hash::{FamilyConfig, ItemId};
use cuckoo_walk::table::{replay_trace, CuckooTable, WalkMode, WalkPolicy};

fn policy(mode: WalkMode, m: u32) -> WalkPolicy {
    match mode {
        WalkMode::Literal => WalkPolicy::literal_for(m),
        WalkMode::NoBacktrack => WalkPolicy::no_backtrack_for(m),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Build a random table round by round; every round must preserve the
    /// matching invariant, replay exactly, keep odd path parity, verify as an
    /// augmenting walk, never beat the shortest augmenting path, and roll
    /// back cleanly on failure.
    #[test]
    fn round_invariants(
        m in 2u32..96,
        d in 2u32..6,
        load in 0.2f64..0.95,
        seed in any::<u64>(),
        walk_seed in any::<u64>(),
        literal in any::<bool>(),
    ) {
        let n = ((m as f64 * load) as u32).clamp(1, m);
        let cfg = FamilyConfig::new(m, d, seed).unwrap();
        let graph = CuckooGraph::from_family(&cfg, n);
        let mode = if literal { WalkMode::Literal } else { WalkMode::NoBacktrack };
        let policy = policy(mode, m);
        let mut rng = ChaCha8Rng::seed_from_u64(walk_seed);
        let mut table = CuckooTable::new(cfg);

        for i in 0..n {
            let item = ItemId(i);
            let pre = table.matching().clone();
            let occupied = SlotSet::from_matching(&pre);
            let blocked = graph.blocked_set(&occupied, i + 1);
            let shortest = table.shortest_augmenting_path_edges(item);
            let out = table.insert_random_walk(item, &policy, &mut rng).unwrap();

            if out.placed() {
                prop_assert_eq!(out.trace.path_edges() % 2, 1);
                prop_assert_eq!(out.trace.path_edges(), 2 * out.trace.evictions() + 1);
                prop_assert_eq!(&replay_trace(&pre, &out.trace), table.matching());
                prop_assert!(graph.verify_trace_as_augmenting_path(&pre, &out.trace).is_ok());
                prop_assert!(shortest.expect("placement implies a path") <= out.trace.path_edges());
                table.matching().verify_consistent(table.cfg()).unwrap();
                // The choice-scan lookup agrees with the inverse map; the
                // inserted item need not sit at the walk's terminal slot once
                // evictions happened.
                prop_assert_eq!(table.lookup(item), table.matching().slot_of_item(item));
                prop_assert!(table.lookup(item).is_some());

                let status = check_interesting_prefix(&blocked, &occupied, &out.trace).unwrap();
                if out.trace.evictions() == 0 {
                    prop_assert_eq!(status, PrefixStatus::NoEvictions);
                }
            } else {
                // Failed rounds leave the table untouched and stop the build.
                prop_assert_eq!(table.matching(), &pre);
                prop_assert_eq!(table.lookup(item), None);
                break;
            }
        }
    }

    /// Rebuilding with identical seeds is bit-for-bit identical; changing the
    /// walk seed changes only walk outcomes, never the matching invariant.
    #[test]
    fn determinism(m in 4u32..64, d in 2u32..5, seed in any::<u64>(), walk_seed in any::<u64>()) {
        let n = m / 2;
        let cfg = FamilyConfig::new(m, d, seed).unwrap();
        let policy = WalkPolicy::literal_for(m);
        let run = |ws: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(ws);
            cuckoo_walk::table::build_table(n, cfg, &policy, &mut rng).unwrap()
        };
        let a = run(walk_seed);
        let b = run(walk_seed);
        prop_assert_eq!(a.outcomes, b.outcomes);
        prop_assert_eq!(a.table.matching(), b.table.matching());
        prop_assert_eq!(a.failed_round, b.failed_round);
    }

    /// The lazy reveal path and the full-vector path always agree, and the
    /// full vector is stable under repetition.
    #[test]
    fn reveal_consistency(m in 1u32..1000, d in 2u32..8, seed in any::<u64>(), item in 0u32..5000) {
        let cfg = FamilyConfig::new(m, d, seed).unwrap();
        let full = cfg.choices_of(ItemId(item));
        prop_assert_eq!(full.len(), d as usize);
        for p in 0..d {
            let slot = cfg.lazy_reveal(ItemId(item), p).unwrap();
            prop_assert!(slot.0 < m);
            prop_assert_eq!(slot, full[p as usize]);
        }
        prop_assert_eq!(cfg.choices_of(ItemId(item)), full);
    }
}
