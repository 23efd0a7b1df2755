//! Template-recovery attacks, one per leakage scenario.
//!
//! Every attack takes the oracle by `&mut` and talks to it only through
//! [`Oracle::query`] or the session methods. The query and session counts in
//! an [`AttackOutcome`] are read back from the oracle, so they cannot drift
//! from what the oracle actually answered.

mod accumulation;
mod below;
mod both;
mod center;
mod search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use accumulation::{accumulation_collect, fault_controlled_collect, Accumulator};
pub use below::{attack_below_distance, attack_below_positions, attack_below_positions_values};
pub use both::{attack_both_distance, attack_both_positions, attack_both_positions_values};
pub use center::{attack_minimal_binary, center_search_binary, SearchStrategy};
pub use search::exhaustive_accept_search;

use crate::error::{Error, Result};
use crate::oracle::{LeakageMode, Oracle, Payload, Scope};
use crate::space::Template;

/// Template with some coordinates still unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialTemplate {
    coords: Vec<Option<u32>>,
}

impl PartialTemplate {
    pub fn unknown(n: usize) -> Self {
        Self {
            coords: vec![None; n],
        }
    }

    pub fn coords(&self) -> &[Option<u32>] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> Option<u32> {
        self.coords[i]
    }

    pub fn set(&mut self, i: usize, value: u32) {
        self.coords[i] = Some(value);
    }

    pub fn unknown_count(&self) -> usize {
        self.coords.iter().filter(|c| c.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.coords.iter().all(Option::is_some)
    }

    /// Full template if every coordinate is known.
    pub fn to_template(&self) -> Option<Template> {
        self.coords
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .map(Template::from_coords)
    }

    /// Template with unknown coordinates replaced by `fill`.
    pub fn filled_with(&self, fill: u32) -> Template {
        Template::from_coords(self.coords.iter().map(|c| c.unwrap_or(fill)).collect())
    }
}

impl fmt::Display for PartialTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match c {
                Some(v) => write!(f, "{v}")?,
                None => write!(f, "?")?,
            }
        }
        write!(f, ")")
    }
}

/// What an attack recovered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recovered {
    Full(Template),
    Partial {
        known: PartialTemplate,
        /// Unknowns filled arbitrarily, present when at most epsilon of them remain.
        filled: Option<Template>,
    },
}

impl Recovered {
    /// The full or filled template, if any.
    pub fn template(&self) -> Option<&Template> {
        match self {
            Recovered::Full(t) => Some(t),
            Recovered::Partial { filled, .. } => filled.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackOutcome {
    pub recovered: Recovered,
    pub queries_used: u64,
    pub sessions_used: u64,
    /// The attack claims to hold the enrolled template exactly.
    pub exact_recovery: bool,
    /// The attack claims its template lies inside the acceptance ball.
    pub within_ball: bool,
}

impl AttackOutcome {
    pub(crate) fn exact(template: Template, oracle: &Oracle) -> Self {
        Self {
            recovered: Recovered::Full(template),
            queries_used: oracle.query_count(),
            sessions_used: oracle.session_count(),
            exact_recovery: true,
            within_ball: true,
        }
    }
}

/// Identifies an attack for configuration and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    BelowDistance,
    BelowPositions,
    BelowPositionsValues,
    MinimalBinary,
    BothDistance,
    BothPositions,
    BothPositionsValues,
    Accumulation,
    FaultControlled,
}

impl AttackKind {
    pub const ALL: [AttackKind; 9] = [
        AttackKind::BelowDistance,
        AttackKind::BelowPositions,
        AttackKind::BelowPositionsValues,
        AttackKind::MinimalBinary,
        AttackKind::BothDistance,
        AttackKind::BothPositions,
        AttackKind::BothPositionsValues,
        AttackKind::Accumulation,
        AttackKind::FaultControlled,
    ];

    /// The oracle mode the attack runs against.
    pub fn required_mode(self) -> LeakageMode {
        use Payload as P;
        use Scope::{Always, BelowOnly};
        match self {
            AttackKind::BelowDistance => LeakageMode::new(BelowOnly, P::Distance),
            AttackKind::BelowPositions => LeakageMode::new(BelowOnly, P::Positions),
            AttackKind::BelowPositionsValues
            | AttackKind::Accumulation
            | AttackKind::FaultControlled => LeakageMode::new(BelowOnly, P::PositionsValues),
            AttackKind::MinimalBinary => LeakageMode::MINIMAL,
            AttackKind::BothDistance => LeakageMode::new(Always, P::Distance),
            AttackKind::BothPositions => LeakageMode::new(Always, P::Positions),
            AttackKind::BothPositionsValues => LeakageMode::new(Always, P::PositionsValues),
        }
    }

    pub fn is_passive(self) -> bool {
        matches!(self, AttackKind::Accumulation | AttackKind::FaultControlled)
    }

    pub fn id(self) -> &'static str {
        match self {
            AttackKind::BelowDistance => "below_distance",
            AttackKind::BelowPositions => "below_positions",
            AttackKind::BelowPositionsValues => "below_posvalues",
            AttackKind::MinimalBinary => "minimal_binary",
            AttackKind::BothDistance => "both_distance",
            AttackKind::BothPositions => "both_positions",
            AttackKind::BothPositionsValues => "both_posvalues",
            AttackKind::Accumulation => "accumulation",
            AttackKind::FaultControlled => "fault_controlled",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        let alias = match norm.as_str() {
            "below_positions_values" => "below_posvalues",
            "both_positions_values" => "both_posvalues",
            "minimal" => "minimal_binary",
            "fault" => "fault_controlled",
            other => other,
        };
        AttackKind::ALL
            .into_iter()
            .find(|k| k.id() == alias)
            .ok_or_else(|| {
                let ids: Vec<_> = AttackKind::ALL.iter().map(|k| k.id()).collect();
                Error::Config(format!("unknown attack {s:?} (one of {})", ids.join(", ")))
            })
    }
}

pub(crate) fn require_mode(oracle: &Oracle, kind: AttackKind) -> Result<()> {
    let required = kind.required_mode();
    if oracle.mode() != required {
        return Err(Error::WrongMode {
            attack: kind.id(),
            required,
            actual: oracle.mode(),
        });
    }
    Ok(())
}

pub(crate) fn require_binary(oracle: &Oracle, what: &str) -> Result<()> {
    if oracle.params().q() != 2 {
        return Err(Error::Unsupported(format!(
            "{what} is defined for q = 2 only (q = {})",
            oracle.params().q()
        )));
    }
    Ok(())
}

pub(crate) fn missing_leak(what: &str) -> Error {
    Error::Internal(format!(
        "accepted response lacks the {what} its mode grants"
    ))
}
