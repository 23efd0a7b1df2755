//! Experiment configuration: a flat `key = value` file overlaid by flags.
//!
//! Recognised keys: `q`, `n`, `epsilon`, `scope`, `payload`, `attack`,
//! `trials`, `seed`, `format`, `out`, `workers`, `alpha`, `session_shape`,
//! `strategy`, `timing`, `audit`. Blank lines and lines starting with `#`
//! are ignored.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::attacks::{AttackKind, SearchStrategy};
use crate::error::{Error, Result};
use crate::oracle::{ClientModel, LeakageMode, Payload, Scope, SessionShape};
use crate::space::SpaceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            _ => Err(Error::Config(format!("unknown format {s:?} (csv, jsonl)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        })
    }
}

/// Legitimate-client behaviour for passive runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClientSpec {
    /// `Some(a)` makes coordinate 0 err with probability `n^-a`; `None` is uniform.
    pub alpha: Option<f64>,
    pub shape: SessionShape,
}

impl ClientSpec {
    pub fn model(&self, n: usize) -> Result<ClientModel> {
        match self.alpha {
            Some(a) => ClientModel::rarest(n, a, self.shape),
            None => Ok(ClientModel::uniform(n, self.shape)),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SpaceParams,
    pub mode: LeakageMode,
    pub attack: AttackKind,
    pub trials: u64,
    pub master_seed: u64,
    pub client: ClientSpec,
    pub strategy: SearchStrategy,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub audit: Option<PathBuf>,
    /// Worker threads; `None` uses one per core.
    pub workers: Option<usize>,
    /// Fill the `ms` column. Off by default so output bytes are reproducible.
    pub timing: bool,
}

impl ExperimentConfig {
    /// Defaults for `attack`, with the oracle mode it requires.
    pub fn new(params: SpaceParams, attack: AttackKind) -> Self {
        Self {
            params,
            mode: attack.required_mode(),
            attack,
            trials: 100,
            master_seed: 0,
            client: ClientSpec::default(),
            strategy: SearchStrategy::default(),
            format: OutputFormat::default(),
            out: None,
            audit: None,
            workers: None,
            timing: false,
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_client(mut self, client: ClientSpec) -> Self {
        self.client = client;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    /// Checks every precondition the attack would otherwise hit mid-run.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let required = self.attack.required_mode();
        if self.mode != required {
            return Err(Error::Config(format!(
                "attack {} needs an oracle leaking {required}, configured mode is {}",
                self.attack, self.mode
            )));
        }
        let p = &self.params;
        let binary_only = matches!(
            self.attack,
            AttackKind::MinimalBinary | AttackKind::Accumulation | AttackKind::FaultControlled
        );
        if binary_only && p.q() != 2 {
            return Err(Error::Config(format!("attack {} needs q = 2", self.attack)));
        }
        if self.attack.is_passive() {
            if p.epsilon() == 0 {
                return Err(Error::Config(format!(
                    "attack {} needs epsilon >= 1",
                    self.attack
                )));
            }
        } else if p.epsilon() >= p.n()
            && !matches!(
                self.attack,
                AttackKind::BothDistance
                    | AttackKind::BothPositions
                    | AttackKind::BothPositionsValues
            )
        {
            return Err(Error::Config(format!(
                "attack {} needs epsilon < n, got {p}",
                self.attack
            )));
        }
        if self.attack == AttackKind::Accumulation {
            self.client.model(p.n())?;
        }
        Ok(())
    }
}

/// Unvalidated settings from a config file or flags. `None` means unset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub q: Option<u32>,
    pub n: Option<usize>,
    pub epsilon: Option<usize>,
    pub scope: Option<Scope>,
    pub payload: Option<Payload>,
    pub attack: Option<AttackKind>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub audit: Option<PathBuf>,
    pub workers: Option<usize>,
    pub alpha: Option<f64>,
    pub session_shape: Option<SessionShape>,
    pub strategy: Option<SearchStrategy>,
    pub timing: Option<bool>,
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("line {line}: bad value {value:?} for {key}: {e}")))
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "q" => s.q = Some(parse_value(line, key, value)?),
                "n" => s.n = Some(parse_value(line, key, value)?),
                "epsilon" => s.epsilon = Some(parse_value(line, key, value)?),
                "scope" => s.scope = Some(parse_value(line, key, value)?),
                "payload" => s.payload = Some(parse_value(line, key, value)?),
                "attack" => s.attack = Some(parse_value(line, key, value)?),
                "trials" => s.trials = Some(parse_value(line, key, value)?),
                "seed" => s.seed = Some(parse_value(line, key, value)?),
                "format" => s.format = Some(parse_value(line, key, value)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "audit" => s.audit = Some(PathBuf::from(value)),
                "workers" => s.workers = Some(parse_value(line, key, value)?),
                "alpha" => s.alpha = Some(parse_value(line, key, value)?),
                "session_shape" => s.session_shape = Some(parse_value(line, key, value)?),
                "strategy" => s.strategy = Some(parse_value(line, key, value)?),
                "timing" => s.timing = Some(parse_value(line, key, value)?),
                _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
            }
        }
        Ok(s)
    }

    /// Values set in `top` win over values set here.
    pub fn overlay(self, top: Settings) -> Settings {
        Settings {
            q: top.q.or(self.q),
            n: top.n.or(self.n),
            epsilon: top.epsilon.or(self.epsilon),
            scope: top.scope.or(self.scope),
            payload: top.payload.or(self.payload),
            attack: top.attack.or(self.attack),
            trials: top.trials.or(self.trials),
            seed: top.seed.or(self.seed),
            format: top.format.or(self.format),
            out: top.out.or(self.out),
            audit: top.audit.or(self.audit),
            workers: top.workers.or(self.workers),
            alpha: top.alpha.or(self.alpha),
            session_shape: top.session_shape.or(self.session_shape),
            strategy: top.strategy.or(self.strategy),
            timing: top.timing.or(self.timing),
        }
    }

    /// Fills defaults (q = 2, n = 12, epsilon = 3, 100 trials, seed 0) and
    /// validates. Scope and payload default to what the attack needs.
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let attack = self
            .attack
            .ok_or_else(|| Error::Config("no attack given".into()))?;
        let params = SpaceParams::new(
            self.q.unwrap_or(2),
            self.n.unwrap_or(12),
            self.epsilon.unwrap_or(3),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = ExperimentConfig::new(params, attack);
        let required = attack.required_mode();
        cfg.mode = LeakageMode::new(
            self.scope.unwrap_or(required.scope()),
            self.payload.unwrap_or(required.payload()),
        );
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        cfg.master_seed = self.seed.unwrap_or(0);
        cfg.format = self.format.unwrap_or_default();
        cfg.out = self.out;
        cfg.audit = self.audit;
        cfg.workers = self.workers;
        cfg.client = ClientSpec {
            alpha: self.alpha,
            shape: self.session_shape.unwrap_or_default(),
        };
        cfg.strategy = self.strategy.unwrap_or_default();
        cfg.timing = self.timing.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }
}
