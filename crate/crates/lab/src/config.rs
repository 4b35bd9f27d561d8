//! Experiment configuration files.
//!
//! The format is flat `key = value` text, one entry per line. Blank lines and
//! lines starting with `#` are ignored. Grammar:
//!
//! ```text
//! file    := { line "\n" }
//! line    := blank | "#" text | key ws? "=" ws? value
//! ```
//!
//! Scalar keys (each at most once):
//!
//! | key              | value                                   | default   |
//! |------------------|-----------------------------------------|-----------|
//! | `instance`       | `paper` or `inline`                     | `paper`   |
//! | `means_override` | real; sets every arm's mean             | unset     |
//! | `rho`            | real >= 0                               | `1`       |
//! | `l0`             | real in (0, 1]                          | `1`       |
//! | `n`              | horizon, integer >= number of arms      | `20000`   |
//! | `reps`           | replications, integer >= 1              | `500`     |
//! | `seed`           | 64-bit base seed                        | `0`       |
//! | `rho_grid`       | comma-separated reals > 0               | unset     |
//! | `out`            | output directory                        | `out`     |
//! | `emit`           | comma-separated subset of `csv`, `svg`  | `csv,svg` |
//! | `bound.a7` .. `bound.a11`, `bound.c1`, `bound.c2`, `bound.alpha` | reals | see [`BoundConstants`] |
//!
//! Repeated keys:
//!
//! - `arm = <mean>, <variance>` appends an arm; any `arm` line makes the
//!   instance inline.
//! - `policy.kind = <name>` opens a new policy block; `policy.exploration = <c>`
//!   sets the exploration constant of the most recent block. Without any
//!   block the run uses SRTS alone.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use srts_core::bounds::BoundConstants;
use srts_core::{make_instance, paper_instance, BanditInstance, PolicyConfig, PolicyKind};

use crate::error::ConfigError;

/// Where the arms come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Paper,
    Inline(Vec<(f64, f64)>),
}

/// One policy of an experiment; `rho` and `l0` come from the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub exploration: f64,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            exploration: PolicyConfig::DEFAULT_EXPLORATION,
        }
    }

    pub fn config(&self, rho: f64, l0: f64) -> PolicyConfig {
        PolicyConfig::new(self.kind, rho, l0).with_exploration(self.exploration)
    }

    /// Label used in CSV rows and legends. The exploration constant is only
    /// spelled out when it differs from the default.
    pub fn label(&self) -> String {
        if self.kind.uses_exploration() && self.exploration != PolicyConfig::DEFAULT_EXPLORATION {
            format!("{}[c={}]", self.kind, self.exploration)
        } else {
            self.kind.to_string()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitFlags {
    pub csv: bool,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub means_override: Option<f64>,
    pub rho: f64,
    pub l0: f64,
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub rho_grid: Option<Vec<f64>>,
    pub policies: Vec<PolicySpec>,
    pub bounds: BoundConstants,
    pub out_dir: PathBuf,
    pub emit: EmitFlags,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instance: InstanceSpec::Paper,
            means_override: None,
            rho: 1.0,
            l0: 1.0,
            horizon: 20_000,
            replications: 500,
            base_seed: 0,
            rho_grid: None,
            policies: vec![PolicySpec::new(PolicyKind::Srts)],
            bounds: BoundConstants::default(),
            out_dir: PathBuf::from("out"),
            emit: EmitFlags {
                csv: true,
                svg: true,
            },
        }
    }
}

impl ExperimentConfig {
    /// The bandit instance at risk tolerance `rho`.
    pub fn instance_at(&self, rho: f64) -> srts_core::Result<BanditInstance> {
        let base = match &self.instance {
            InstanceSpec::Paper => paper_instance(rho, self.l0)?,
            InstanceSpec::Inline(arms) => make_instance(arms, rho, self.l0)?,
        };
        match self.means_override {
            Some(m) => base.with_means(m),
            None => Ok(base),
        }
    }

    pub fn num_arms(&self) -> usize {
        match &self.instance {
            InstanceSpec::Paper => srts_core::env::PAPER_MEANS.len(),
            InstanceSpec::Inline(arms) => arms.len(),
        }
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.replications < 1 {
            return invalid("reps must be at least 1".into());
        }
        if self.horizon < self.num_arms() {
            return invalid(format!(
                "horizon n = {} is smaller than the number of arms {}",
                self.horizon,
                self.num_arms()
            ));
        }
        if self.policies.is_empty() {
            return invalid("no policies configured".into());
        }
        if let Some(grid) = &self.rho_grid {
            if grid.is_empty() {
                return invalid("rho_grid is empty".into());
            }
            if let Some(bad) = grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                return invalid(format!("rho_grid values must be positive, got {bad}"));
            }
        }
        self.bounds
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for rho in self.rhos_to_check() {
            self.instance_at(rho)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            for p in &self.policies {
                p.config(rho, self.l0)
                    .validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        Ok(())
    }

    fn rhos_to_check(&self) -> Vec<f64> {
        let mut rhos = vec![self.rho];
        rhos.extend(self.rho_grid.iter().flatten().copied());
        rhos
    }

    /// Canonical `key = value` rendering; identical configs render identically.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        match &self.instance {
            InstanceSpec::Paper => s.push_str("instance = paper\n"),
            InstanceSpec::Inline(arms) => {
                s.push_str("instance = inline\n");
                for (m, v) in arms {
                    let _ = writeln!(s, "arm = {m:?}, {v:?}");
                }
            }
        }
        if let Some(m) = self.means_override {
            let _ = writeln!(s, "means_override = {m:?}");
        }
        let _ = writeln!(s, "rho = {:?}\nl0 = {:?}", self.rho, self.l0);
        let _ = writeln!(
            s,
            "n = {}\nreps = {}\nseed = {}",
            self.horizon, self.replications, self.base_seed
        );
        if let Some(grid) = &self.rho_grid {
            let g: Vec<String> = grid.iter().map(|r| format!("{r:?}")).collect();
            let _ = writeln!(s, "rho_grid = {}", g.join(", "));
        }
        let b = &self.bounds;
        for (k, v) in [
            ("a7", b.a7),
            ("a8", b.a8),
            ("a9", b.a9),
            ("a10", b.a10),
            ("a11", b.a11),
            ("c1", b.c1),
            ("c2", b.c2),
            ("alpha", b.alpha_consistency),
        ] {
            let _ = writeln!(s, "bound.{k} = {v:?}");
        }
        for p in &self.policies {
            let _ = writeln!(
                s,
                "policy.kind = {}\npolicy.exploration = {:?}",
                p.kind, p.exploration
            );
        }
        s
    }

    /// SHA-256 of [`Self::canonical`], hex encoded. Output paths and emit
    /// flags are excluded since they do not change any number.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            message: format!("`{value}`: {e}"),
        })
}

fn parse_reals(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|v| parse_value::<f64>(line, key, v.trim()))
        .collect()
}

/// Parses configuration text and validates it.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut policies: Vec<PolicySpec> = Vec::new();
    let mut arms: Vec<(f64, f64)> = Vec::new();
    let mut instance_kind: Option<String> = None;
    let mut seen: HashSet<String> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{trimmed}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let repeatable = matches!(key, "arm" | "policy.kind" | "policy.exploration");
        if !repeatable && !seen.insert(key.to_string()) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        let bad = |message: String| ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            message,
        };
        match key {
            "instance" => {
                if value != "paper" && value != "inline" {
                    return Err(bad(format!("expected `paper` or `inline`, got `{value}`")));
                }
                instance_kind = Some(value.to_string());
            }
            "arm" => {
                let v = parse_reals(line, key, value)?;
                if v.len() != 2 {
                    return Err(bad(format!("expected `mean, variance`, got `{value}`")));
                }
                arms.push((v[0], v[1]));
            }
            "means_override" => cfg.means_override = Some(parse_value(line, key, value)?),
            "rho" => cfg.rho = parse_value(line, key, value)?,
            "l0" => cfg.l0 = parse_value(line, key, value)?,
            "n" => cfg.horizon = parse_value(line, key, value)?,
            "reps" => cfg.replications = parse_value(line, key, value)?,
            "seed" => cfg.base_seed = parse_value(line, key, value)?,
            "rho_grid" => cfg.rho_grid = Some(parse_reals(line, key, value)?),
            "out" => cfg.out_dir = PathBuf::from(value),
            "emit" => {
                let mut flags = EmitFlags {
                    csv: false,
                    svg: false,
                };
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match item {
                        "csv" => flags.csv = true,
                        "svg" => flags.svg = true,
                        other => return Err(bad(format!("unknown output format `{other}`"))),
                    }
                }
                cfg.emit = flags;
            }
            "bound.a7" => cfg.bounds.a7 = parse_value(line, key, value)?,
            "bound.a8" => cfg.bounds.a8 = parse_value(line, key, value)?,
            "bound.a9" => cfg.bounds.a9 = parse_value(line, key, value)?,
            "bound.a10" => cfg.bounds.a10 = parse_value(line, key, value)?,
            "bound.a11" => cfg.bounds.a11 = parse_value(line, key, value)?,
            "bound.c1" => cfg.bounds.c1 = parse_value(line, key, value)?,
            "bound.c2" => cfg.bounds.c2 = parse_value(line, key, value)?,
            "bound.alpha" => cfg.bounds.alpha_consistency = parse_value(line, key, value)?,
            "policy.kind" => policies.push(PolicySpec::new(parse_value(line, key, value)?)),
            "policy.exploration" => {
                let c = parse_value(line, key, value)?;
                policies
                    .last_mut()
                    .ok_or_else(|| ConfigError::Syntax {
                        line,
                        message: "`policy.exploration` before any `policy.kind`".into(),
                    })?
                    .exploration = c;
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }

    cfg.instance = match (instance_kind.as_deref(), arms.is_empty()) {
        (Some("paper"), false) => {
            return Err(ConfigError::Invalid(
                "`arm` entries given with `instance = paper`".into(),
            ))
        }
        (Some("inline"), true) => {
            return Err(ConfigError::Invalid(
                "`instance = inline` needs `arm` entries".into(),
            ))
        }
        (_, false) => InstanceSpec::Inline(arms),
        (_, true) => InstanceSpec::Paper,
    };
    if !policies.is_empty() {
        cfg.policies = policies;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}
