//! Deterministic persistence of experiment outputs.
//!
//! CSV columns are fixed as `trial,k,path_edges,evictions,revealed,status,wall_ns`.
//! The JSON summary carries keys in lexicographic order and serializes every
//! float with 17 significant digits, so identical configs produce
//! byte-identical files.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::experiment::{AggregateSummary, CompareReport, TrialRecord};
use crate::table::WalkMode;

pub fn write_records_csv<W: Write>(mut w: W, records: &[TrialRecord]) -> io::Result<()> {
    writeln!(w, "trial,k,path_edges,evictions,revealed,status,wall_ns")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.trial,
            r.k,
            r.path_edges,
            r.evictions,
            r.revealed,
            r.status.as_str(),
            r.wall_ns
        )?;
    }
    Ok(())
}

pub fn records_csv_bytes(records: &[TrialRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    write_records_csv(&mut out, records).expect("writing to a Vec cannot fail");
    out
}

pub fn write_compare_csv<W: Write>(mut w: W, report: &CompareReport) -> io::Result<()> {
    writeln!(
        w,
        "trial,completed_rounds,walk_total_edges,bfs_same_state_total_edges,\
         bfs_independent_total_edges,walk_failed_round,bfs_failed_round"
    )?;
    for i in &report.instances {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            i.trial,
            i.completed_rounds,
            i.walk_total_edges,
            i.bfs_same_state_total_edges,
            i.bfs_independent_total_edges,
            i.walk_failed_round.map_or(String::new(), |k| k.to_string()),
            i.bfs_failed_round.map_or(String::new(), |k| k.to_string()),
        )?;
    }
    Ok(())
}

/// JSON formatter writing every f64 with 17 significant digits.
struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{:.16e}", value)
    }
}

fn num(v: f64) -> Value {
    assert!(v.is_finite(), "non-finite value in summary");
    Value::Number(Number::from_f64(v).expect("finite"))
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn summary_to_json_value(s: &AggregateSummary) -> Value {
    let mut config = Map::new();
    config.insert("base_seed".into(), Value::from(s.config_base_seed));
    config.insert("d".into(), Value::from(s.config_d));
    config.insert("m".into(), Value::from(s.config_m));
    config.insert("max_steps".into(), Value::from(s.config_max_steps));
    config.insert("n".into(), Value::from(s.config_n));
    config.insert("oracle_level".into(), Value::from(s.config_oracle_level.as_str()));
    config.insert(
        "policy".into(),
        Value::from(match s.config_policy_mode {
            WalkMode::Literal => "literal",
            WalkMode::NoBacktrack => "no-backtrack",
        }),
    );
    config.insert("theta".into(), opt_num(s.config_theta));
    config.insert("trials".into(), Value::from(s.config_trials));

    let mut pooled = Map::new();
    pooled.insert("max_path_edges".into(), Value::from(s.pooled_max_path_edges));
    pooled.insert("mean_path_edges".into(), num(s.pooled_mean_path_edges));
    pooled.insert("mean_path_vertices".into(), num(s.pooled_mean_path_vertices));
    pooled.insert("p50_path_edges".into(), num(s.pooled_p50_path_edges));
    pooled.insert("p90_path_edges".into(), num(s.pooled_p90_path_edges));
    pooled.insert("p99_path_edges".into(), num(s.pooled_p99_path_edges));
    pooled.insert("se_path_edges".into(), num(s.pooled_se_path_edges));

    let checkpoints: Vec<Value> = s
        .checkpoints
        .iter()
        .map(|c| {
            let mut m = Map::new();
            m.insert("k".into(), Value::from(c.k));
            m.insert("max_blocked".into(), Value::from(c.max_blocked));
            m.insert("mean_blocked".into(), num(c.mean_blocked));
            m.insert("nu2_mean".into(), opt_num(c.nu2_mean));
            m.insert("nu2_se".into(), opt_num(c.nu2_se));
            m.insert("nu3_mean".into(), opt_num(c.nu3_mean));
            m.insert("nu3_se".into(), opt_num(c.nu3_se));
            m.insert("nu_budget_skips".into(), Value::from(c.nu_budget_skips));
            Value::Object(m)
        })
        .collect();

    let degree_hist: Vec<Value> = s
        .max_degree_histogram
        .iter()
        .map(|&(deg, count)| Value::Array(vec![Value::from(deg), Value::from(count)]))
        .collect();

    let short_cycles = s.short_cycles.as_ref().map_or(Value::Null, |c| {
        let mut m = Map::new();
        m.insert("budget_skips".into(), Value::from(c.budget_skips));
        m.insert("cap".into(), Value::from(c.cap));
        m.insert("mean_cycle_count".into(), num(c.mean_cycle_count));
        m.insert("mean_parallel_edge_pairs".into(), num(c.mean_parallel_edge_pairs));
        Value::Object(m)
    });

    let uniformity = s.empty_slot_uniformity.as_ref().map_or(Value::Null, |u| {
        let mut m = Map::new();
        m.insert("degrees_of_freedom".into(), Value::from(u.degrees_of_freedom));
        m.insert("p_value".into(), num(u.p_value));
        m.insert("statistic".into(), num(u.statistic));
        m.insert("trials_used".into(), Value::from(u.trials_used));
        Value::Object(m)
    });

    let per_k_mean: Vec<Value> =
        s.per_k_mean_path_edges.iter().map(|v| opt_num(*v)).collect();
    let per_k_se: Vec<Value> = s.per_k_se_path_edges.iter().map(|v| opt_num(*v)).collect();

    let mut root = Map::new();
    root.insert("checkpoints".into(), Value::Array(checkpoints));
    root.insert("config".into(), Value::Object(config));
    root.insert("empty_slot_uniformity".into(), uniformity);
    root.insert("epsilon".into(), num(s.epsilon));
    root.insert("failures".into(), Value::from(s.failures));
    root.insert("max_degree_histogram".into(), Value::Array(degree_hist));
    root.insert("mean_revealed".into(), num(s.mean_revealed));
    root.insert("per_k_mean_path_edges".into(), Value::Array(per_k_mean));
    root.insert("per_k_se_path_edges".into(), Value::Array(per_k_se));
    root.insert("pooled".into(), Value::Object(pooled));
    root.insert("records".into(), Value::from(s.records));
    root.insert("short_cycles".into(), short_cycles);
    root.insert("upper_bound_path_edges".into(), opt_num(s.upper_bound_path_edges));
    root.insert("wall_ns_total".into(), Value::from(s.wall_ns_total));
    Value::Object(root)
}

pub fn summary_json_bytes(summary: &AggregateSummary) -> Vec<u8> {
    let value = summary_to_json_value(summary);
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value.serialize(&mut ser).expect("serializing to a Vec cannot fail");
    out.push(b'\n');
    out
}
