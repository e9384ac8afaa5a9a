//! Multi-modulus audit driven by a JSON cases file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gadgets::{BarrettParams, WireGadget};
use crate::modring::{Modulus, ModulusError};
use crate::preimage::{
    audit_support_gap, equivalence_check, profiles, CountPath, EquivReport, GapAudit, PairScope, SecretScope,
    DEFAULT_SEED, EXHAUSTIVE_PROFILE_LIMIT,
};

/// Exhaustive equivalence is only attempted up to this modulus.
pub const EQUIV_LIMIT: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid sweep config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("case {index}: {source}")]
    Modulus { index: usize, source: ModulusError },
    #[error("case {index}: `exhaustive` and `sample` are mutually exclusive")]
    ConflictingScope { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub cases: Vec<SweepCase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCase {
    pub q: u64,
    /// Defaults to `2 * ceil(log2 q)`.
    #[serde(default)]
    pub s: Option<u32>,
    #[serde(default)]
    pub exhaustive: Option<bool>,
    #[serde(default)]
    pub sample: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Count by enumerating masks instead of the closed form.
    #[serde(default)]
    pub oracle: bool,
}

/// A case with defaults filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedCase {
    pub params: BarrettParams,
    pub scope: SecretScope,
    pub path: CountPath,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Cases in file order.
    pub fn resolve(&self) -> Result<Vec<ResolvedCase>, ConfigError> {
        self.cases
            .iter()
            .enumerate()
            .map(|(index, c)| {
                let q = Modulus::new(c.q).map_err(|source| ConfigError::Modulus { index, source })?;
                let s = c.s.unwrap_or(2 * q.ceil_log2());
                let scope = match (c.exhaustive, c.sample) {
                    (Some(true), Some(_)) => return Err(ConfigError::ConflictingScope { index }),
                    (Some(true), None) => SecretScope::Exhaustive,
                    (_, Some(n)) => SecretScope::Sampled { seed: c.seed.unwrap_or(DEFAULT_SEED), n },
                    (_, None) => match SecretScope::default_for(q, EXHAUSTIVE_PROFILE_LIMIT) {
                        SecretScope::Sampled { n, .. } => {
                            SecretScope::Sampled { seed: c.seed.unwrap_or(DEFAULT_SEED), n }
                        }
                        other => other,
                    },
                };
                let path = if c.oracle { CountPath::Oracle } else { CountPath::Auto };
                Ok(ResolvedCase { params: BarrettParams::new(q, s), scope, path })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivStatus {
    Pass,
    Fail,
    SkippedScope,
    SkippedSize,
}

impl EquivStatus {
    pub fn label(self) -> &'static str {
        match self {
            EquivStatus::Pass => "pass",
            EquivStatus::Fail => "fail",
            EquivStatus::SkippedScope => "skipped_scope",
            EquivStatus::SkippedSize => "skipped_size",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseAudit {
    pub q: u64,
    pub s: u32,
    pub r: u64,
    pub secrets_checked: u64,
    pub path: CountPath,
    pub max_count: u64,
    pub trichotomy_pass: bool,
    pub conservation_pass: bool,
    pub equivalence: EquivStatus,
    pub equivalence_report: Option<EquivReport>,
    pub gaps: Vec<GapAudit>,
}

impl CaseAudit {
    pub fn published_mismatches(&self) -> impl Iterator<Item = &GapAudit> {
        self.gaps.iter().filter(|g| !g.published_match)
    }

    pub fn extended_mismatches(&self) -> impl Iterator<Item = &GapAudit> {
        self.gaps.iter().filter(|g| !g.extended_match)
    }

    /// Trichotomy, conservation and (when run) equivalence.
    pub fn hard_pass(&self) -> bool {
        self.trichotomy_pass && self.conservation_pass && self.equivalence != EquivStatus::Fail
    }
}

pub fn audit_case(case: &ResolvedCase) -> CaseAudit {
    let p = &case.params;
    let g = WireGadget::barrett(*p);
    let profs = profiles(&g, &case.scope, case.path);
    let (equivalence, equivalence_report) = if !p.scope_condition_holds() {
        (EquivStatus::SkippedScope, None)
    } else if p.modulus().get() > EQUIV_LIMIT {
        (EquivStatus::SkippedSize, None)
    } else {
        let rep = equivalence_check(p, PairScope::Exhaustive).expect("scope condition checked above");
        (if rep.pass { EquivStatus::Pass } else { EquivStatus::Fail }, Some(rep))
    };
    CaseAudit {
        q: p.modulus().get(),
        s: p.shift(),
        r: p.offset().val(),
        secrets_checked: profs.len() as u64,
        path: case.path,
        max_count: profs.iter().map(|pr| pr.max_count).max().unwrap_or(0),
        trichotomy_pass: profs.iter().all(|pr| pr.within_trichotomy()),
        conservation_pass: profs.iter().all(|pr| pr.conservation_holds()),
        equivalence,
        equivalence_report,
        gaps: profs.iter().map(|pr| audit_support_gap(p, pr)).collect(),
    }
}
