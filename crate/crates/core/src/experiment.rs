//! Seeded Monte-Carlo trial runner.
//!
//! A trial builds one table from scratch under its own derived seeds (one for
//! the choice graph, one for the walk), records every round, and optionally
//! runs the graph oracles at checkpoints. Trials are independent and execute
//! in parallel; aggregation is a deterministic reduction, so identical
//! configs produce identical outputs at any parallelism degree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bounds;
use crate::graph::{
    default_cycle_cap, CuckooGraph, GraphError, SlotSet, DEFAULT_ENUMERATION_BUDGET,
};
use crate::hash::{split_seed, FamilyConfig, HashError, ItemId, SeedPurpose};
use crate::stats::{chi_square_expected, mean, standard_error};
use crate::table::{CuckooTable, InsertStatus, TableError, WalkMode, WalkPolicy};

#[derive(Error, Debug)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient trials: expected per-slot count {expected:.2} is below 5")]
    InsufficientTrials { expected: f64 },
    #[error("oracle check failed during run: {0}")]
    OracleCheckFailed(String),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bounds(#[from] bounds::BoundsError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// How much of the graph oracle machinery runs alongside the trials.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OracleLevel {
    /// Records only.
    None,
    /// Trace validation on every round, blocked-set checkpoints, slot-degree
    /// histogram, empty-slot uniformity statistic.
    Light,
    /// Light plus interesting-path counts at checkpoints and the short-cycle
    /// census.
    Full,
}

impl OracleLevel {
    pub fn at_least_light(self) -> bool {
        !matches!(self, OracleLevel::None)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OracleLevel::None => "none",
            OracleLevel::Light => "light",
            OracleLevel::Full => "full",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ExperimentConfig {
    pub m: u32,
    pub n: u32,
    pub d: u32,
    pub policy: WalkPolicy,
    pub trials: u32,
    pub base_seed: u64,
    pub oracle_level: OracleLevel,
    /// Optional theta for echoing the upper bound into reports.
    pub theta: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(m: u32, n: u32, d: u32, trials: u32, base_seed: u64) -> Self {
        ExperimentConfig {
            m,
            n,
            d,
            policy: WalkPolicy::literal_for(m),
            trials,
            base_seed,
            oracle_level: OracleLevel::Light,
            theta: None,
        }
    }

    /// Derive `n = round((1 - epsilon) * m)`.
    pub fn with_epsilon(
        m: u32,
        epsilon: f64,
        d: u32,
        trials: u32,
        base_seed: u64,
    ) -> Result<Self, ExperimentError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ExperimentError::InvalidConfig(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        let n = ((1.0 - epsilon) * m as f64).round() as u32;
        if n >= m {
            return Err(ExperimentError::InvalidConfig(format!(
                "derived n = {n} must be smaller than m = {m}"
            )));
        }
        Ok(Self::new(m, n, d, trials, base_seed))
    }

    /// Final load as `1 - n/m`.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.n as f64 / self.m as f64
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        FamilyConfig::new(self.m, self.d, 0)
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        if self.n > self.m {
            return Err(ExperimentError::InvalidConfig(format!(
                "n = {} exceeds m = {}",
                self.n, self.m
            )));
        }
        if self.trials < 1 {
            return Err(ExperimentError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.policy.max_steps < 1 {
            return Err(ExperimentError::InvalidConfig("max_steps must be at least 1".into()));
        }
        if let Some(theta) = self.theta {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(ExperimentError::InvalidConfig(format!(
                    "theta must lie in (0,1), got {theta}"
                )));
            }
        }
        Ok(())
    }

    pub fn family_for_trial(&self, trial: u32) -> FamilyConfig {
        let seed = split_seed(self.base_seed, trial as u64, SeedPurpose::Graph);
        FamilyConfig::new(self.m, self.d, seed).expect("config validated")
    }

    pub fn walk_rng_for_trial(&self, trial: u32) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(split_seed(self.base_seed, trial as u64, SeedPurpose::Walk))
    }

    /// Oracle checkpoints `{n/4, n/2, 3n/4, n}`, deduplicated.
    pub fn checkpoints(&self) -> Vec<u32> {
        let mut ks: Vec<u32> =
            (1..=4).map(|i| (self.n as u64 * i / 4) as u32).filter(|&k| k >= 1).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// Execution details that do not identify the experiment.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Cap on trial parallelism; `None` uses the global thread pool.
    pub threads: Option<usize>,
    /// Record real per-round wall time. Off by default so that outputs are
    /// byte-identical across runs.
    pub measure_time: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RoundStatus {
    Placed,
    FailedMaxSteps,
}

impl RoundStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundStatus::Placed => "placed",
            RoundStatus::FailedMaxSteps => "failed_max_steps",
        }
    }
}

/// One row per insertion round.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TrialRecord {
    pub trial: u32,
    /// Round index, 1-based.
    pub k: u32,
    pub path_edges: u32,
    pub evictions: u32,
    pub revealed: u32,
    pub status: RoundStatus,
    pub wall_ns: u64,
}

/// Per-checkpoint oracle samples pooled over trials.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointSummary {
    pub k: u32,
    pub mean_blocked: f64,
    pub max_blocked: u64,
    /// Directed interesting-path count means for ell = 2 and 3 (full level).
    pub nu2_mean: Option<f64>,
    pub nu2_se: Option<f64>,
    pub nu3_mean: Option<f64>,
    pub nu3_se: Option<f64>,
    pub nu_budget_skips: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortCycleSummary {
    pub cap: u32,
    pub mean_cycle_count: f64,
    pub mean_parallel_edge_pairs: f64,
    pub budget_skips: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareSummary {
    pub statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: u32,
    pub trials_used: u32,
}

/// Pooled and per-round aggregates of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateSummary {
    pub config_m: u32,
    pub config_n: u32,
    pub config_d: u32,
    pub config_trials: u32,
    pub config_base_seed: u64,
    pub config_policy_mode: WalkMode,
    pub config_max_steps: u32,
    pub config_oracle_level: OracleLevel,
    pub config_theta: Option<f64>,
    pub epsilon: f64,
    /// `1 + 2/theta` when theta was supplied.
    pub upper_bound_path_edges: Option<f64>,
    pub records: u64,
    pub failures: u64,
    pub pooled_mean_path_edges: f64,
    pub pooled_se_path_edges: f64,
    pub pooled_mean_path_vertices: f64,
    pub pooled_p50_path_edges: f64,
    pub pooled_p90_path_edges: f64,
    pub pooled_p99_path_edges: f64,
    pub pooled_max_path_edges: u32,
    pub mean_revealed: f64,
    /// Index i holds round k = i+1; `None` when no placed record exists.
    pub per_k_mean_path_edges: Vec<Option<f64>>,
    pub per_k_se_path_edges: Vec<Option<f64>>,
    pub checkpoints: Vec<CheckpointSummary>,
    /// (max degree, trial count), ascending; oracle level >= light.
    pub max_degree_histogram: Vec<(u32, u64)>,
    pub short_cycles: Option<ShortCycleSummary>,
    /// Chi-square of final empty-slot frequencies against uniformity.
    pub empty_slot_uniformity: Option<ChiSquareSummary>,
    pub wall_ns_total: u64,
}

pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: AggregateSummary,
}

struct TrialOutput {
    records: Vec<TrialRecord>,
    checkpoint_samples: Vec<CheckpointSample>,
    max_degree: Option<u32>,
    cycles: Option<Result<(u64, u64), ()>>,
    /// Emptiness of every slot after the trial's final round, if all rounds placed.
    final_empty: Option<Vec<bool>>,
}

struct CheckpointSample {
    k: u32,
    blocked: u64,
    nu2: Option<u64>,
    nu3: Option<u64>,
    budget_skipped: bool,
}

fn run_in_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Run every trial, collect one record per round, and aggregate.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentOutput, ExperimentError> {
    config.validate()?;
    let trials: Vec<u32> = (0..config.trials).collect();
    let outputs: Result<Vec<TrialOutput>, ExperimentError> = run_in_pool(options.threads, || {
        trials.par_iter().map(|&t| run_trial(config, options, t)).collect()
    })?;
    let outputs = outputs?;

    let mut records: Vec<TrialRecord> = Vec::with_capacity(config.trials as usize * config.n as usize);
    for out in &outputs {
        records.extend_from_slice(&out.records);
    }
    records.sort_by_key(|r| (r.trial, r.k));

    let summary = aggregate(config, &records, &outputs);
    Ok(ExperimentOutput { records, summary })
}

fn run_trial(
    config: &ExperimentConfig,
    options: &RunOptions,
    trial: u32,
) -> Result<TrialOutput, ExperimentError> {
    let family = config.family_for_trial(trial);
    let mut rng = config.walk_rng_for_trial(trial);
    let mut table = CuckooTable::new(family);
    let oracle = config.oracle_level;

    let graph = if oracle.at_least_light() {
        Some(CuckooGraph::from_family(&family, config.n))
    } else {
        None
    };
    let checkpoints = config.checkpoints();

    let mut records = Vec::with_capacity(config.n as usize);
    let mut checkpoint_samples = Vec::new();
    let mut any_failure = false;

    for k in 1..=config.n {
        if let Some(graph) = &graph {
            if checkpoints.contains(&k) {
                checkpoint_samples.push(sample_checkpoint(config, graph, &table, k));
            }
        }

        let pre = if oracle.at_least_light() { Some(table.matching().clone()) } else { None };
        let started = options.measure_time.then(std::time::Instant::now);
        let outcome = table.insert_random_walk(ItemId(k - 1), &config.policy, &mut rng)?;
        let wall_ns = started.map_or(0, |t| t.elapsed().as_nanos() as u64);

        if let (Some(graph), Some(pre)) = (&graph, &pre) {
            if outcome.placed() {
                graph.verify_trace_as_augmenting_path(pre, &outcome.trace).map_err(|v| {
                    ExperimentError::OracleCheckFailed(format!(
                        "trial {trial} round {k}: trace rejected: {v}"
                    ))
                })?;
            }
        }

        let status = match outcome.status {
            InsertStatus::Placed => RoundStatus::Placed,
            InsertStatus::FailedMaxSteps => {
                any_failure = true;
                RoundStatus::FailedMaxSteps
            }
        };
        records.push(TrialRecord {
            trial,
            k,
            path_edges: outcome.trace.path_edges(),
            evictions: outcome.trace.evictions(),
            revealed: outcome.trace.revealed,
            status,
            wall_ns,
        });
    }

    let max_degree = graph.as_ref().map(|g| g.max_degree());
    let cycles = if oracle == OracleLevel::Full {
        let g = graph.as_ref().expect("full level builds the graph");
        let cap = default_cycle_cap(config.n.max(2));
        Some(
            g.short_cycles(cap, DEFAULT_ENUMERATION_BUDGET)
                .map(|c| (c.cycle_count, c.parallel_edge_pairs))
                .map_err(|_| ()),
        )
    } else {
        None
    };
    let final_empty = (!any_failure).then(|| {
        (0..config.m)
            .map(|s| table.matching().is_slot_empty(crate::hash::SlotIndex(s)))
            .collect()
    });

    Ok(TrialOutput { records, checkpoint_samples, max_degree, cycles, final_empty })
}

fn sample_checkpoint(
    config: &ExperimentConfig,
    graph: &CuckooGraph,
    table: &CuckooTable,
    k: u32,
) -> CheckpointSample {
    let occupied = SlotSet::from_matching(table.matching());
    let blocked = graph.blocked_set(&occupied, k);
    let mut sample = CheckpointSample {
        k,
        blocked: blocked.len() as u64,
        nu2: None,
        nu3: None,
        budget_skipped: false,
    };
    if config.oracle_level == OracleLevel::Full {
        match graph.interesting_paths(&blocked, &occupied, 2, DEFAULT_ENUMERATION_BUDGET) {
            Ok(c) => sample.nu2 = Some(c.directed),
            Err(_) => sample.budget_skipped = true,
        }
        match graph.interesting_paths(&blocked, &occupied, 3, DEFAULT_ENUMERATION_BUDGET) {
            Ok(c) => sample.nu3 = Some(c.directed),
            Err(_) => sample.budget_skipped = true,
        }
    }
    sample
}

fn aggregate(
    config: &ExperimentConfig,
    records: &[TrialRecord],
    outputs: &[TrialOutput],
) -> AggregateSummary {
    let placed_edges: Vec<f64> = records
        .iter()
        .filter(|r| r.status == RoundStatus::Placed)
        .map(|r| r.path_edges as f64)
        .collect();
    let failures = records.len() as u64 - placed_edges.len() as u64;

    let mut per_k_mean = vec![None; config.n as usize];
    let mut per_k_se = vec![None; config.n as usize];
    let mut by_k: Vec<Vec<f64>> = vec![Vec::new(); config.n as usize];
    for r in records {
        if r.status == RoundStatus::Placed {
            by_k[(r.k - 1) as usize].push(r.path_edges as f64);
        }
    }
    for (i, samples) in by_k.iter().enumerate() {
        if !samples.is_empty() {
            per_k_mean[i] = Some(mean(samples));
            per_k_se[i] = Some(standard_error(samples));
        }
    }

    let checkpoints = summarize_checkpoints(config, outputs);

    let mut degree_hist = std::collections::BTreeMap::new();
    for out in outputs {
        if let Some(d) = out.max_degree {
            *degree_hist.entry(d).or_insert(0u64) += 1;
        }
    }

    let short_cycles = if config.oracle_level == OracleLevel::Full {
        let mut counts = Vec::new();
        let mut pairs = Vec::new();
        let mut skips = 0u64;
        for out in outputs {
            match out.cycles {
                Some(Ok((c, p))) => {
                    counts.push(c as f64);
                    pairs.push(p as f64);
                }
                Some(Err(())) => skips += 1,
                None => {}
            }
        }
        Some(ShortCycleSummary {
            cap: default_cycle_cap(config.n.max(2)),
            mean_cycle_count: mean(&counts),
            mean_parallel_edge_pairs: mean(&pairs),
            budget_skips: skips,
        })
    } else {
        None
    };

    let empty_slot_uniformity = if config.oracle_level.at_least_light() {
        summarize_empty_slots(config, outputs)
    } else {
        None
    };

    AggregateSummary {
        config_m: config.m,
        config_n: config.n,
        config_d: config.d,
        config_trials: config.trials,
        config_base_seed: config.base_seed,
        config_policy_mode: config.policy.mode,
        config_max_steps: config.policy.max_steps,
        config_oracle_level: config.oracle_level,
        config_theta: config.theta,
        epsilon: config.epsilon(),
        upper_bound_path_edges: config.theta.map(|t| 1.0 + 2.0 / t),
        records: records.len() as u64,
        failures,
        pooled_mean_path_edges: mean(&placed_edges),
        pooled_se_path_edges: standard_error(&placed_edges),
        pooled_mean_path_vertices: if placed_edges.is_empty() { 0.0 } else { mean(&placed_edges) + 1.0 },
        pooled_p50_path_edges: crate::stats::percentile(&placed_edges, 0.50),
        pooled_p90_path_edges: crate::stats::percentile(&placed_edges, 0.90),
        pooled_p99_path_edges: crate::stats::percentile(&placed_edges, 0.99),
        pooled_max_path_edges: placed_edges.iter().fold(0.0f64, |a, &b| a.max(b)) as u32,
        mean_revealed: mean(&records.iter().map(|r| r.revealed as f64).collect::<Vec<_>>()),
        per_k_mean_path_edges: per_k_mean,
        per_k_se_path_edges: per_k_se,
        checkpoints,
        max_degree_histogram: degree_hist.into_iter().collect(),
        short_cycles,
        empty_slot_uniformity,
        wall_ns_total: records.iter().map(|r| r.wall_ns).sum(),
    }
}

fn summarize_checkpoints(
    config: &ExperimentConfig,
    outputs: &[TrialOutput],
) -> Vec<CheckpointSummary> {
    let mut result = Vec::new();
    for k in config.checkpoints() {
        let mut blocked = Vec::new();
        let mut nu2 = Vec::new();
        let mut nu3 = Vec::new();
        let mut skips = 0u64;
        for out in outputs {
            for s in out.checkpoint_samples.iter().filter(|s| s.k == k) {
                blocked.push(s.blocked as f64);
                if let Some(v) = s.nu2 {
                    nu2.push(v as f64);
                }
                if let Some(v) = s.nu3 {
                    nu3.push(v as f64);
                }
                if s.budget_skipped {
                    skips += 1;
                }
            }
        }
        if blocked.is_empty() {
            continue;
        }
        result.push(CheckpointSummary {
            k,
            mean_blocked: mean(&blocked),
            max_blocked: blocked.iter().fold(0.0f64, |a, &b| a.max(b)) as u64,
            nu2_mean: (!nu2.is_empty()).then(|| mean(&nu2)),
            nu2_se: (!nu2.is_empty()).then(|| standard_error(&nu2)),
            nu3_mean: (!nu3.is_empty()).then(|| mean(&nu3)),
            nu3_se: (!nu3.is_empty()).then(|| standard_error(&nu3)),
            nu_budget_skips: skips,
        });
    }
    result
}

fn summarize_empty_slots(
    config: &ExperimentConfig,
    outputs: &[TrialOutput],
) -> Option<ChiSquareSummary> {
    if config.n == 0 || config.n >= config.m || config.m < 2 {
        return None;
    }
    let mut tally = vec![0u64; config.m as usize];
    let mut used = 0u32;
    for out in outputs {
        if let Some(empty) = &out.final_empty {
            used += 1;
            for (s, &e) in empty.iter().enumerate() {
                if e {
                    tally[s] += 1;
                }
            }
        }
    }
    if used == 0 {
        return None;
    }
    let expected = used as f64 * (config.m - config.n) as f64 / config.m as f64;
    if expected < 5.0 {
        return None;
    }
    let (statistic, p_value) = chi_square_expected(&tally, expected);
    Some(ChiSquareSummary {
        statistic,
        p_value,
        degrees_of_freedom: config.m - 1,
        trials_used: used,
    })
}

/// Empty-slot uniformity test: build to round `k - 1` in every trial, tally
/// how often each slot is empty, and compare against the hypothesis that
/// every slot is empty with probability `(m - k + 1) / m`.
///
/// `biased_control` injects the sensitivity control: slot 0 is reported as
/// never empty, which a working test must reject.
pub fn uniformity_test_empty_set(
    config: &ExperimentConfig,
    k: u32,
    biased_control: bool,
    options: &RunOptions,
) -> Result<UniformityReport, ExperimentError> {
    config.validate()?;
    if k < 1 || k > config.n + 1 || k > config.m {
        return Err(ExperimentError::InvalidConfig(format!(
            "round k = {k} out of range for n = {}",
            config.n
        )));
    }
    let expected = config.trials as f64 * (config.m - k + 1) as f64 / config.m as f64;
    if expected < 5.0 {
        return Err(ExperimentError::InsufficientTrials { expected });
    }

    let trials: Vec<u32> = (0..config.trials).collect();
    let tally: Result<Vec<u64>, ExperimentError> = run_in_pool(options.threads, || {
        trials
            .par_iter()
            .map(|&t| -> Result<Vec<u64>, ExperimentError> {
                let family = config.family_for_trial(t);
                let mut rng = config.walk_rng_for_trial(t);
                let mut table = CuckooTable::new(family);
                for i in 0..k - 1 {
                    table.insert_random_walk(ItemId(i), &config.policy, &mut rng)?;
                }
                let mut empties = vec![0u64; config.m as usize];
                for s in 0..config.m {
                    let empty = table.matching().is_slot_empty(crate::hash::SlotIndex(s));
                    if empty && !(biased_control && s == 0) {
                        empties[s as usize] = 1;
                    }
                }
                Ok(empties)
            })
            .try_reduce(
                || vec![0u64; config.m as usize],
                |mut acc, v| {
                    for (a, b) in acc.iter_mut().zip(v) {
                        *a += b;
                    }
                    Ok(acc)
                },
            )
    })?;
    let tally = tally?;

    let (statistic, p_value) = chi_square_expected(&tally, expected);
    Ok(UniformityReport {
        k,
        trials: config.trials,
        expected_per_slot: expected,
        statistic,
        p_value,
        biased_control,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformityReport {
    pub k: u32,
    pub trials: u32,
    pub expected_per_slot: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub biased_control: bool,
}

/// Per-checkpoint tail check of the blocked-set size against `k * gamma`.
pub fn blocked_fraction_check(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<BlockedFractionReport, ExperimentError> {
    config.validate()?;
    if config.n >= config.m {
        return Err(ExperimentError::InvalidConfig(
            "blocked fraction check needs n < m".into(),
        ));
    }
    if config.n == 0 {
        return Err(ExperimentError::InvalidConfig("n must be positive".into()));
    }
    let gamma = bounds::gamma(config.epsilon(), config.d)?;
    let checkpoints = config.checkpoints();

    let trials: Vec<u32> = (0..config.trials).collect();
    let samples: Result<Vec<Vec<(u32, u64)>>, ExperimentError> =
        run_in_pool(options.threads, || {
            trials
                .par_iter()
                .map(|&t| -> Result<Vec<(u32, u64)>, ExperimentError> {
                    let family = config.family_for_trial(t);
                    let mut rng = config.walk_rng_for_trial(t);
                    let mut table = CuckooTable::new(family);
                    let graph = CuckooGraph::from_family(&family, config.n);
                    let mut out = Vec::new();
                    for k in 1..=config.n {
                        if checkpoints.contains(&k) {
                            let occ = SlotSet::from_matching(table.matching());
                            out.push((k, graph.blocked_set(&occ, k).len() as u64));
                        }
                        table.insert_random_walk(ItemId(k - 1), &config.policy, &mut rng)?;
                    }
                    Ok(out)
                })
                .collect()
        })?;
    let samples = samples?;

    let mut per_checkpoint = Vec::new();
    let mut exceed_total = 0u64;
    let mut pairs_total = 0u64;
    for &k in &checkpoints {
        let threshold = k as f64 * gamma;
        let mut exceed = 0u64;
        let mut sizes = Vec::new();
        for trial in &samples {
            for &(ck, blocked) in trial.iter().filter(|(ck, _)| *ck == k) {
                debug_assert_eq!(ck, k);
                sizes.push(blocked as f64);
                if blocked as f64 >= threshold {
                    exceed += 1;
                }
            }
        }
        exceed_total += exceed;
        pairs_total += sizes.len() as u64;
        per_checkpoint.push(BlockedCheckpoint {
            k,
            threshold,
            vacuous: threshold < 1.0,
            mean_blocked: mean(&sizes),
            exceedances: exceed,
            samples: sizes.len() as u64,
        });
    }
    let fraction = if pairs_total == 0 { 0.0 } else { exceed_total as f64 / pairs_total as f64 };
    Ok(BlockedFractionReport {
        gamma,
        per_checkpoint,
        exceedance_fraction: fraction,
        flagged: fraction > 0.01,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockedCheckpoint {
    pub k: u32,
    pub threshold: f64,
    /// `k * gamma < 1`: any nonempty blocked set trips the event.
    pub vacuous: bool,
    pub mean_blocked: f64,
    pub exceedances: u64,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockedFractionReport {
    pub gamma: f64,
    pub per_checkpoint: Vec<BlockedCheckpoint>,
    pub exceedance_fraction: f64,
    pub flagged: bool,
}

/// Drive the same graph instances with the random walk and with BFS.
///
/// Two comparisons are reported: a same-state probe (before every walk round
/// the shortest augmenting path from the walk's current state is measured;
/// per-round minimality makes `bfs <= walk` a hard guarantee) and a fully
/// independent BFS-driven table (trajectories diverge, totals reported as
/// data).
pub fn compare_walk_vs_bfs(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<CompareReport, ExperimentError> {
    config.validate()?;
    let trials: Vec<u32> = (0..config.trials).collect();
    let instances: Result<Vec<InstanceComparison>, ExperimentError> =
        run_in_pool(options.threads, || {
            trials
                .par_iter()
                .map(|&t| -> Result<InstanceComparison, ExperimentError> {
                    let family = config.family_for_trial(t);
                    let mut rng = config.walk_rng_for_trial(t);
                    let mut walk_table = CuckooTable::new(family);
                    let mut bfs_table = CuckooTable::new(family);

                    let mut cmp = InstanceComparison {
                        trial: t,
                        completed_rounds: 0,
                        walk_total_edges: 0,
                        bfs_same_state_total_edges: 0,
                        bfs_independent_total_edges: 0,
                        walk_failed_round: None,
                        bfs_failed_round: None,
                        minimality_violations: 0,
                    };

                    for k in 1..=config.n {
                        let item = ItemId(k - 1);
                        let probe = walk_table.shortest_augmenting_path_edges(item);
                        let walk = walk_table.insert_random_walk(item, &config.policy, &mut rng)?;
                        if !walk.placed() {
                            cmp.walk_failed_round = Some(k);
                        }

                        let bfs = if cmp.bfs_failed_round.is_none() {
                            match bfs_table.insert_bfs(item) {
                                Ok(out) => Some(out.trace.path_edges()),
                                Err(TableError::NoAugmentingPath(_)) => {
                                    cmp.bfs_failed_round = Some(k);
                                    None
                                }
                                Err(e) => return Err(e.into()),
                            }
                        } else {
                            None
                        };

                        if cmp.walk_failed_round.is_some() || cmp.bfs_failed_round.is_some() {
                            break;
                        }
                        let walk_edges = walk.trace.path_edges();
                        let probe_edges = probe.expect("walk placed, so a path existed");
                        if probe_edges > walk_edges {
                            cmp.minimality_violations += 1;
                        }
                        cmp.completed_rounds += 1;
                        cmp.walk_total_edges += walk_edges as u64;
                        cmp.bfs_same_state_total_edges += probe_edges as u64;
                        cmp.bfs_independent_total_edges += bfs.expect("bfs placed") as u64;
                    }
                    Ok(cmp)
                })
                .collect()
        })?;
    let instances = instances?;

    let minimality_violations = instances.iter().map(|i| i.minimality_violations).sum();
    let independent_exceeds_walk = instances
        .iter()
        .filter(|i| i.bfs_independent_total_edges > i.walk_total_edges)
        .count() as u64;
    Ok(CompareReport { instances, minimality_violations, independent_exceeds_walk })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceComparison {
    pub trial: u32,
    pub completed_rounds: u32,
    pub walk_total_edges: u64,
    pub bfs_same_state_total_edges: u64,
    pub bfs_independent_total_edges: u64,
    pub walk_failed_round: Option<u32>,
    pub bfs_failed_round: Option<u32>,
    pub minimality_violations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub instances: Vec<InstanceComparison>,
    /// Rounds where the same-state shortest path exceeded the walk length;
    /// must be zero.
    pub minimality_violations: u64,
    /// Instances where the independently driven BFS table ended with a larger
    /// total than the walk table (possible: the trajectories diverge).
    pub independent_exceeds_walk: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(64, 32, 4, 8, 1234);
        c.oracle_level = OracleLevel::Full;
        c
    }

    #[test]
    fn empty_experiment_yields_no_records() {
        let config = ExperimentConfig::new(1, 0, 2, 1, 7);
        let out = run_experiment(&config, &RunOptions::default()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.summary.failures, 0);
        assert_eq!(out.summary.records, 0);
    }

    #[test]
    fn record_conservation_and_parity() {
        let out = run_experiment(&small_config(), &RunOptions::default()).unwrap();
        assert_eq!(out.records.len(), 8 * 32);
        let placed =
            out.records.iter().filter(|r| r.status == RoundStatus::Placed).count() as u64;
        assert_eq!(placed, 8 * 32 - out.summary.failures);
        for r in &out.records {
            if r.status == RoundStatus::Placed {
                assert_eq!(r.path_edges, 2 * r.evictions + 1);
            } else {
                assert_eq!(r.path_edges, 2 * r.evictions);
            }
        }
        // Records arrive sorted by (trial, k).
        for w in out.records.windows(2) {
            assert!((w[0].trial, w[0].k) < (w[1].trial, w[1].k));
        }
    }

    #[test]
    fn identical_configs_are_deterministic_across_parallelism() {
        let config = small_config();
        let a = run_experiment(&config, &RunOptions { threads: Some(1), measure_time: false })
            .unwrap();
        let b = run_experiment(&config, &RunOptions { threads: Some(4), measure_time: false })
            .unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn checkpoints_cover_quarter_marks() {
        let config = ExperimentConfig::new(64, 32, 4, 1, 0);
        assert_eq!(config.checkpoints(), vec![8, 16, 24, 32]);
        let tiny = ExperimentConfig::new(8, 2, 2, 1, 0);
        assert_eq!(tiny.checkpoints(), vec![1, 2]);
    }

    #[test]
    fn uniformity_rejects_insufficient_trials() {
        let config = ExperimentConfig::new(64, 63, 8, 4, 0);
        let err = uniformity_test_empty_set(&config, 63, false, &RunOptions::default());
        assert!(matches!(err, Err(ExperimentError::InsufficientTrials { .. })));
    }

    #[test]
    fn uniformity_round_one_is_exact() {
        let config = ExperimentConfig::new(16, 8, 4, 32, 5);
        let rep = uniformity_test_empty_set(&config, 1, false, &RunOptions::default()).unwrap();
        assert_eq!(rep.statistic, 0.0);
        assert!((rep.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blocked_fraction_reports_vacuous_thresholds() {
        let mut config = ExperimentConfig::new(64, 32, 16, 4, 3);
        config.oracle_level = OracleLevel::Light;
        let rep = blocked_fraction_check(&config, &RunOptions::default()).unwrap();
        // gamma = 5 * 0.5^8 ~ 0.0195: every checkpoint threshold is below 1.
        assert!(rep.per_checkpoint.iter().all(|c| c.vacuous));
        // At d=16 the blocked sets are empty, so nothing exceeds.
        assert_eq!(rep.exceedance_fraction, 0.0);
        assert!(!rep.flagged);
    }

    #[test]
    fn compare_has_no_minimality_violations() {
        let config = ExperimentConfig::new(64, 32, 4, 16, 77);
        let rep = compare_walk_vs_bfs(&config, &RunOptions::default()).unwrap();
        assert_eq!(rep.minimality_violations, 0);
        for inst in &rep.instances {
            assert!(inst.bfs_same_state_total_edges <= inst.walk_total_edges);
        }
    }

    #[test]
    fn config_validation_errors() {
        assert!(ExperimentConfig::with_epsilon(100, 0.0, 4, 1, 0).is_err());
        assert!(ExperimentConfig::with_epsilon(1, 0.5, 4, 1, 0).is_err());
        let bad = ExperimentConfig::new(16, 20, 4, 1, 0);
        assert!(bad.validate().is_err());
        let mut bad_theta = ExperimentConfig::new(16, 8, 4, 1, 0);
        bad_theta.theta = Some(1.5);
        assert!(bad_theta.validate().is_err());
    }

    #[test]
    fn epsilon_derivation() {
        let c = ExperimentConfig::with_epsilon(2048, 0.5, 30, 1, 0).unwrap();
        assert_eq!(c.n, 1024);
        assert!((c.epsilon() - 0.5).abs() < 1e-12);
    }
}
