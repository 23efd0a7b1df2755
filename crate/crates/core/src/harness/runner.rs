use std::fmt;
use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::attacks::{self, AttackKind, AttackOutcome, Recovered};
use crate::bounds::{theorem_bound, CollectorBracket, Theorem};
use crate::error::{Error, Result};
use crate::oracle::{AuditRecord, LeakageMode, Oracle, SessionShape};
use crate::space::{sample_template, SeedSequence, SpaceParams, TrialRng};

/// One row of experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub queries: u64,
    pub sessions: u64,
    #[serde(with = "bit")]
    pub exact: bool,
    #[serde(with = "bit")]
    pub within_ball: bool,
    /// Query ceiling for active attacks, session count for fault-controlled
    /// collection, `(ln n + 1) / p_min` for accumulation.
    #[serde(with = "number")]
    pub bound: f64,
    #[serde(with = "bit")]
    pub bound_ok: bool,
    pub ms: u64,
}

mod bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(serde::de::Error::custom(format!(
                "expected 0 or 1, got {v}"
            ))),
        }
    }
}

/// Integral values print without a fractional part.
mod number {
    use serde::{Deserialize, Deserializer, Serializer};

    const EXACT: f64 = 9_007_199_254_740_992.0;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.fract() == 0.0 && v.abs() < EXACT {
            s.serialize_i64(*v as i64)
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d)
    }
}

/// Aggregate over all trials of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub attack: AttackKind,
    pub params: SpaceParams,
    pub mode: LeakageMode,
    pub trials: u64,
    pub queries_min: u64,
    pub queries_mean: f64,
    pub queries_max: u64,
    pub sessions_mean: f64,
    pub sessions_max: u64,
    pub exact: u64,
    pub within_ball: u64,
    /// Per-trial bound, identical across trials.
    pub bound: f64,
    /// Trials with `bound_ok = 0`.
    pub violations: u64,
    /// Accumulation only.
    pub bracket: Option<CollectorBracket>,
    pub bracket_ok: Option<bool>,
}

impl Summary {
    /// True when no trial broke its bound and the session mean, if checked,
    /// sits in its bracket.
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.bracket_ok != Some(false)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "attack      {} ({}, {})",
            self.attack, self.params, self.mode
        )?;
        writeln!(f, "trials      {}", self.trials)?;
        writeln!(
            f,
            "queries     min {} mean {:.2} max {}",
            self.queries_min, self.queries_mean, self.queries_max
        )?;
        if self.attack.is_passive() {
            writeln!(
                f,
                "sessions    mean {:.2} max {}",
                self.sessions_mean, self.sessions_max
            )?;
        }
        writeln!(f, "exact       {}/{}", self.exact, self.trials)?;
        writeln!(f, "within ball {}/{}", self.within_ball, self.trials)?;
        writeln!(f, "bound       {}", self.bound)?;
        writeln!(f, "violations  {}", self.violations)?;
        if let (Some(b), Some(ok)) = (self.bracket, self.bracket_ok) {
            writeln!(
                f,
                "bracket     [{:.3}, {:.3}] (H(n)/p {:.3}) mean {:.3} inside: {}",
                b.lower,
                b.upper_log,
                b.upper_harmonic,
                self.sessions_mean,
                if ok { "yes" } else { "no" }
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    /// Oracle transcripts in trial order, when the config asks for an audit.
    pub audit: Option<Vec<AuditRecord>>,
}

/// The value every trial of `cfg` is checked against.
pub fn trial_bound(cfg: &ExperimentConfig) -> Result<f64> {
    let p = &cfg.params;
    let theorem = match cfg.attack {
        AttackKind::Accumulation => {
            let client = cfg.client.model(p.n())?;
            return Ok(CollectorBracket::new(p.n(), client.rarest_session_probability()).upper_log);
        }
        AttackKind::FaultControlled => return Ok(p.n().div_ceil(p.epsilon()) as f64),
        AttackKind::BelowDistance => Theorem::BelowDistance,
        AttackKind::BelowPositions => Theorem::BelowPositions,
        AttackKind::BelowPositionsValues => Theorem::BelowPositionsValues,
        AttackKind::MinimalBinary => Theorem::Minimal,
        AttackKind::BothDistance => Theorem::BothDistance,
        AttackKind::BothPositions => Theorem::BothPositions,
        AttackKind::BothPositionsValues => Theorem::BothPositionsValues,
    };
    let tb = theorem_bound(theorem, p)
        .ok_or_else(|| Error::Config(format!("{theorem} has no bound at {p}")))?;
    Ok(tb.explicit.to_f64().unwrap_or(f64::INFINITY))
}

fn run_attack(
    cfg: &ExperimentConfig,
    oracle: &mut Oracle,
    rng: &mut TrialRng,
) -> Result<AttackOutcome> {
    match cfg.attack {
        AttackKind::BelowDistance => attacks::attack_below_distance(oracle),
        AttackKind::BelowPositions => attacks::attack_below_positions(oracle),
        AttackKind::BelowPositionsValues => attacks::attack_below_positions_values(oracle),
        AttackKind::MinimalBinary => attacks::attack_minimal_binary(oracle, cfg.strategy),
        AttackKind::BothDistance => attacks::attack_both_distance(oracle),
        AttackKind::BothPositions => attacks::attack_both_positions(oracle),
        AttackKind::BothPositionsValues => attacks::attack_both_positions_values(oracle),
        AttackKind::Accumulation => {
            let client = cfg.client.model(cfg.params.n())?;
            let target = client.variable_coordinates();
            attacks::accumulation_collect(oracle, &client, &target, rng)
        }
        AttackKind::FaultControlled => attacks::fault_controlled_collect(oracle, rng),
    }
}

/// Compares the attack's claims with the sealed template.
fn verify(trial: u64, oracle: &Oracle, out: &AttackOutcome) -> Result<(bool, bool)> {
    let fail = |what: &str| Err(Error::Verification(format!("trial {trial}: {what}")));
    if let Recovered::Partial { known, .. } = &out.recovered {
        if !oracle.verify_known(known.coords())? {
            return fail("a recovered coordinate disagrees with the secret");
        }
    }
    let Some(t) = out.recovered.template() else {
        if out.exact_recovery || out.within_ball {
            return fail("a claim was made without a template");
        }
        return Ok((false, false));
    };
    let v = oracle.verify(t)?;
    if out.exact_recovery && !v.exact {
        return fail("claimed exact recovery of a wrong template");
    }
    if out.within_ball && !v.within_ball {
        return fail("claimed a template inside the acceptance ball that is outside it");
    }
    Ok((v.exact, v.within_ball))
}

fn run_trial(
    cfg: &ExperimentConfig,
    seeds: &SeedSequence,
    trial: u64,
    bound: f64,
) -> Result<(TrialRecord, Option<Vec<AuditRecord>>)> {
    let (seed, mut rng) = seeds.trial_rng(trial);
    let secret = sample_template(&cfg.params, &mut rng);
    let mut oracle = Oracle::new(secret, cfg.params, cfg.mode)?;
    if cfg.audit.is_some() {
        oracle = oracle.record_transcript();
    }
    let start = Instant::now();
    let out = run_attack(cfg, &mut oracle, &mut rng)?;
    let elapsed = start.elapsed();
    let (exact, within_ball) = verify(trial, &oracle, &out)?;
    let bound_ok = match cfg.attack {
        // Single collection times scatter widely; the bracket applies to
        // the mean and is checked in the summary.
        AttackKind::Accumulation => true,
        AttackKind::FaultControlled => out.sessions_used as f64 == bound && exact,
        _ => (out.queries_used as f64) <= bound && exact,
    };
    let record = TrialRecord {
        trial,
        seed,
        queries: out.queries_used,
        sessions: out.sessions_used,
        exact,
        within_ball,
        bound,
        bound_ok,
        ms: if cfg.timing {
            elapsed.as_millis() as u64
        } else {
            0
        },
    };
    let audit = oracle
        .transcript()
        .map(|t| t.iter().map(AuditRecord::from).collect());
    Ok((record, audit))
}

/// Runs every trial of `cfg`, in parallel, returning records in trial order.
///
/// Trial `i` draws its secret and any session randomness from the stream
/// derived from `(master_seed, i)`, so results do not depend on scheduling.
/// A verification failure aborts the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let bound = trial_bound(cfg)?;
    let seeds = SeedSequence::new(cfg.master_seed);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
    let rows: Vec<(TrialRecord, Option<Vec<AuditRecord>>)> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &seeds, t, bound))
            .collect::<Result<_>>()
    })?;
    let (records, audits): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let audit = cfg
        .audit
        .as_ref()
        .map(|_| audits.into_iter().flatten().flatten().collect());
    let summary = summarize(cfg, &records, bound)?;
    Ok(ExperimentOutput {
        records,
        summary,
        audit,
    })
}

fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord], bound: f64) -> Result<Summary> {
    let count = records.len() as u64;
    let queries = records.iter().map(|r| r.queries);
    let sessions = records.iter().map(|r| r.sessions);
    let sessions_mean = sessions.clone().sum::<u64>() as f64 / count as f64;
    let (bracket, bracket_ok) = if cfg.attack == AttackKind::Accumulation {
        let client = cfg.client.model(cfg.params.n())?;
        let b = CollectorBracket::new(cfg.params.n(), client.rarest_session_probability());
        // Several errors per session can only speed collection up, so the
        // lower end is a single-error statement.
        let ok = match cfg.client.shape {
            SessionShape::SingleError => b.contains(sessions_mean),
            SessionShape::MultiErrorUpToEpsilon => sessions_mean <= b.upper_log,
        };
        (Some(b), Some(ok))
    } else {
        (None, None)
    };
    Ok(Summary {
        attack: cfg.attack,
        params: cfg.params,
        mode: cfg.mode,
        trials: count,
        queries_min: queries.clone().min().unwrap_or(0),
        queries_mean: queries.clone().sum::<u64>() as f64 / count as f64,
        queries_max: queries.max().unwrap_or(0),
        sessions_mean,
        sessions_max: sessions.max().unwrap_or(0),
        exact: records.iter().filter(|r| r.exact).count() as u64,
        within_ball: records.iter().filter(|r| r.within_ball).count() as u64,
        bound,
        violations: records.iter().filter(|r| !r.bound_ok).count() as u64,
        bracket,
        bracket_ok,
    })
}
