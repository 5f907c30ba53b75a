//! d-ary cuckoo hashing with random-walk insertion, plus the instrumentation
//! needed to study it empirically: exact graph oracles, closed-form bound
//! calculators, and a deterministic Monte-Carlo experiment harness.
//!
//! The pieces:
//!
//! - [`hash`]: seeded generation of each item's `d` uniform slot choices,
//!   revealable one position at a time.
//! - [`table`]: the operational table; random-walk insertion with full
//!   per-round traces, a shortest-augmenting-path baseline, rollback on
//!   failure.
//! - [`graph`]: the analysis side; blocked sets, interesting-path and
//!   short-cycle enumeration, trace validation.
//! - [`bounds`]: the expected-insertion-time bound calculators and their
//!   feasibility condition.
//! - [`experiment`]: seeded trial runner with per-round records, checkpoint
//!   oracles, uniformity and blocked-set checks, and the walk-vs-BFS
//!   comparison.
//! - [`report`]: byte-deterministic CSV and JSON persistence.

pub mod bounds;
pub mod experiment;
pub mod graph;
pub mod hash;
pub mod report;
pub mod stats;
pub mod table;

pub use bounds::{
    feasible, gamma, geometric_tail_bound, geometric_tail_limit, largest_feasible_theta,
    lower_bound_expected_path, nu_expectation_bound, upper_bound_expected_path, BoundParams,
};
pub use experiment::{
    blocked_fraction_check, compare_walk_vs_bfs, run_experiment, uniformity_test_empty_set,
    AggregateSummary, ExperimentConfig, ExperimentError, OracleLevel, RunOptions, TrialRecord,
};
pub use graph::{
    blocked_set_via_reveal, check_interesting_prefix, default_cycle_cap, default_cycle_radius,
    BlockedSet, CuckooGraph, GraphError, SlotSet, TraceViolation,
};
pub use hash::{split_seed, ChoiceVector, FamilyConfig, HashError, ItemId, SeedPurpose, SlotIndex};
pub use table::{
    build_table, default_max_steps, replay_trace, BuildResult, CuckooTable, InsertOutcome,
    InsertStatus, InsertTrace, Matching, TableError, TraceStep, WalkMode, WalkPolicy,
};
