//! One experiment per leakage scenario, laid out like the complexity table.

use std::fmt::Write as _;

use serde::Serialize;

use super::config::{ClientSpec, ExperimentConfig};
use super::runner::run_experiment;
use crate::attacks::AttackKind;
use crate::bounds::Theorem;
use crate::error::Result;
use crate::oracle::SessionShape;
use crate::space::SpaceParams;

/// Shared settings of every bench row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub params: SpaceParams,
    pub trials: u64,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub client: ClientSpec,
}

impl Default for BenchConfig {
    /// Desk scale: q = 2, n = 12, epsilon = 3.
    fn default() -> Self {
        Self {
            params: SpaceParams::new(2, 12, 3).expect("valid defaults"),
            trials: 200,
            master_seed: 0,
            workers: None,
            client: ClientSpec {
                alpha: Some(1.5),
                shape: SessionShape::SingleError,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub scope: &'static str,
    pub leak: &'static str,
    pub attack: AttackKind,
    pub theorem: Theorem,
    pub complexity: &'static str,
    /// Query bound, or the session bracket for accumulation.
    pub bound: String,
    /// Maximum queries, or mean sessions for accumulation.
    pub empirical: String,
    pub trials: u64,
    pub violations: u64,
    pub ok: bool,
}

const ROWS: [(&str, &str, AttackKind, Theorem); 8] = [
    (
        "below",
        "distance",
        AttackKind::BelowDistance,
        Theorem::BelowDistance,
    ),
    (
        "below",
        "positions",
        AttackKind::BelowPositions,
        Theorem::BelowPositions,
    ),
    (
        "below",
        "positions+values",
        AttackKind::BelowPositionsValues,
        Theorem::BelowPositionsValues,
    ),
    (
        "below",
        "accumulation",
        AttackKind::Accumulation,
        Theorem::Accumulation,
    ),
    (
        "both",
        "minimal",
        AttackKind::MinimalBinary,
        Theorem::Minimal,
    ),
    (
        "both",
        "distance",
        AttackKind::BothDistance,
        Theorem::BothDistance,
    ),
    (
        "both",
        "positions",
        AttackKind::BothPositions,
        Theorem::BothPositions,
    ),
    (
        "both",
        "positions+values",
        AttackKind::BothPositionsValues,
        Theorem::BothPositionsValues,
    ),
];

/// Runs all eight scenarios. Rows whose attack cannot run at the given
/// parameters (the binary-only ones when `q > 2`) are skipped.
pub fn bench_table(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(ROWS.len());
    for (scope, leak, attack, theorem) in ROWS {
        let mut exp = ExperimentConfig::new(cfg.params, attack)
            .with_trials(cfg.trials)
            .with_seed(cfg.master_seed)
            .with_client(cfg.client);
        exp.workers = cfg.workers;
        if exp.validate().is_err() && cfg.params.q() != 2 {
            continue;
        }
        let s = run_experiment(&exp)?.summary;
        let (bound, empirical) = match s.bracket {
            Some(b) => (
                format!("[{:.2}, {:.2}]", b.lower, b.upper_log),
                format!("{:.2}", s.sessions_mean),
            ),
            None => (format!("{}", s.bound), s.queries_max.to_string()),
        };
        rows.push(BenchRow {
            scope,
            leak,
            attack,
            theorem,
            complexity: theorem.stated_complexity(),
            bound,
            empirical,
            trials: s.trials,
            violations: s.violations,
            ok: s.passed(),
        });
    }
    Ok(rows)
}

/// Fixed-width text rendering; identical rows give identical bytes.
pub fn format_table(params: &SpaceParams, rows: &[BenchRow]) -> String {
    let mut out = String::new();
    writeln!(out, "# {params}").unwrap();
    writeln!(
        out,
        "{:<6} {:<17} {:<5} {:<17} {:>16} {:>10} {:>7} {:>10}  ok",
        "scope", "leak", "thm", "complexity", "bound", "empirical", "trials", "violations"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<6} {:<17} {:<5} {:<17} {:>16} {:>10} {:>7} {:>10}  {}",
            r.scope,
            r.leak,
            r.theorem.to_string(),
            r.complexity,
            r.bound,
            r.empirical,
            r.trials,
            r.violations,
            if r.ok { "yes" } else { "NO" }
        )
        .unwrap();
    }
    out
}
