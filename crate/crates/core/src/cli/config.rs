//! TOML experiment configuration and bundled figure presets.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::model::SystemParams;
use crate::montecarlo::{Metric, QosFallback, SimOptions, SweepAxis, SweepCase, SweepConfig};
use crate::selection::{Growth, Scheme};

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown preset `{0}` (available: {list})", list = preset_names().join(", "))]
    UnknownPreset(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// System parameters as written in a config file. Powers are in dB.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    a1: Option<f64>,
    a2: Option<f64>,
    rho_db: Option<f64>,
    rho_s_db: Option<f64>,
    rho_r_db: Option<f64>,
    n_t: Option<usize>,
    m_r: Option<usize>,
    m_t: Option<usize>,
    var_su1: Option<f64>,
    var_sr: Option<f64>,
    var_ru1: Option<f64>,
    var_ru2: Option<f64>,
    var_si: Option<f64>,
    k1: Option<f64>,
    rate_target_u1: Option<f64>,
    rate_target_u2: Option<f64>,
}

impl RawSystem {
    fn apply(&self, mut p: SystemParams) -> SystemParams {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut p.a1, self.a1);
        set(&mut p.a2, self.a2);
        if let Some(db) = self.rho_db {
            p = p.with_rho_db(db);
        }
        set(&mut p.rho_s, self.rho_s_db.map(crate::model::db_to_linear));
        set(&mut p.rho_r, self.rho_r_db.map(crate::model::db_to_linear));
        p.n_t = self.n_t.unwrap_or(p.n_t);
        p.m_r = self.m_r.unwrap_or(p.m_r);
        p.m_t = self.m_t.unwrap_or(p.m_t);
        set(&mut p.var_su1, self.var_su1);
        set(&mut p.var_sr, self.var_sr);
        set(&mut p.var_ru1, self.var_ru1);
        set(&mut p.var_ru2, self.var_ru2);
        set(&mut p.var_si, self.var_si);
        set(&mut p.k1, self.k1);
        set(&mut p.rate_target_u1, self.rate_target_u1);
        set(&mut p.rate_target_u2, self.rate_target_u2);
        p
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    label: Option<String>,
    n_t: Option<usize>,
    m_r: Option<usize>,
    m_t: Option<usize>,
    k1: Option<f64>,
    rate_target_u1: Option<f64>,
    rate_target_u2: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    var: String,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    system: RawSystem,
    sweep: RawSweep,
    #[serde(default)]
    cases: Vec<RawCase>,
    schemes: Option<Vec<String>>,
    metrics: Option<Vec<String>>,
    trials: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    qos_fallback: Option<QosFallback>,
    growth: Option<Growth>,
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sweep: SweepConfig,
    pub out: Option<PathBuf>,
    /// Non-fatal findings such as sweep points where U2's target is unreachable.
    pub warnings: Vec<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub schemes: Option<Vec<String>>,
    pub out: Option<PathBuf>,
}

const PRESETS: [(&str, &str); 11] = [
    ("defaults", include_str!("../../presets/defaults.toml")),
    ("fig2", include_str!("../../presets/fig2.toml")),
    ("fig2a", include_str!("../../presets/fig2a.toml")),
    ("fig2b", include_str!("../../presets/fig2b.toml")),
    ("fig3a", include_str!("../../presets/fig3a.toml")),
    ("fig3b", include_str!("../../presets/fig3b.toml")),
    ("fig4a", include_str!("../../presets/fig4a.toml")),
    ("fig4b", include_str!("../../presets/fig4b.toml")),
    ("fig5", include_str!("../../presets/fig5.toml")),
    ("fig6", include_str!("../../presets/fig5.toml")),
    ("smoke", include_str!("../../presets/smoke.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_source(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_owned()))
}

pub fn load_preset(name: &str, ov: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    parse_config(preset_source(name)?, ov)
}

pub fn load_file(path: &Path, ov: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text, ov)
}

fn sweep_values(raw: &RawSweep, errors: &mut Vec<String>) -> Vec<f64> {
    match (&raw.values, raw.start, raw.stop, raw.step) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(start), Some(stop), Some(step)) => {
            if !(step > 0.0) || stop < start {
                errors.push(format!("sweep range {start}..{stop} step {step} is empty or backwards"));
                return Vec::new();
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        _ => {
            errors.push("sweep needs either `values` or all of `start`, `stop`, `step`".into());
            Vec::new()
        }
    }
}

fn parse_names<T>(names: &[String], errors: &mut Vec<String>) -> Vec<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    names
        .iter()
        .filter_map(|n| n.trim().parse::<T>().map_err(|e| errors.push(e.to_string())).ok())
        .collect()
}

/// Parses and validates a TOML experiment, collecting every problem found.
pub fn parse_config(text: &str, ov: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let base = raw.system.apply(SystemParams::default());
    let raw_cases = if raw.cases.is_empty() {
        vec![RawCase {
            label: None,
            n_t: None,
            m_r: None,
            m_t: None,
            k1: None,
            rate_target_u1: None,
            rate_target_u2: None,
        }]
    } else {
        raw.cases.clone()
    };
    let cases: Vec<SweepCase> = raw_cases
        .iter()
        .map(|c| {
            let mut p = base.clone();
            p.n_t = c.n_t.unwrap_or(p.n_t);
            p.m_r = c.m_r.unwrap_or(p.m_r);
            p.m_t = c.m_t.unwrap_or(p.m_t);
            p.k1 = c.k1.unwrap_or(p.k1);
            p.rate_target_u1 = c.rate_target_u1.unwrap_or(p.rate_target_u1);
            p.rate_target_u2 = c.rate_target_u2.unwrap_or(p.rate_target_u2);
            let label = c
                .label
                .clone()
                .unwrap_or_else(|| format!("{}-{}-{}-k{}", p.n_t, p.m_r, p.m_t, p.k1));
            SweepCase { label, params: p }
        })
        .collect();

    let values = sweep_values(&raw.sweep, &mut errors);
    if values.is_empty() && errors.is_empty() {
        errors.push("sweep has no values".into());
    }
    let axis = match raw.sweep.var.as_str() {
        "rho_db" => SweepAxis::RhoDb(values),
        "m" => {
            let mut ms = Vec::new();
            for v in values {
                if v.fract() != 0.0 || v < 2.0 || !(v as usize).is_multiple_of(2) {
                    errors.push(format!("relay antenna count {v} must be an even integer ≥ 2"));
                } else {
                    ms.push(v as usize);
                }
            }
            SweepAxis::RelayAntennas(ms)
        }
        other => {
            errors.push(format!("unknown sweep variable `{other}` (expected rho_db or m)"));
            SweepAxis::RhoDb(Vec::new())
        }
    };

    let scheme_names = ov
        .schemes
        .clone()
        .or(raw.schemes)
        .unwrap_or_else(|| Scheme::ALL.iter().map(|s| s.as_str().to_owned()).collect());
    let schemes: Vec<Scheme> = parse_names(&scheme_names, &mut errors);
    if scheme_names.is_empty() {
        errors.push("scheme list is empty".into());
    }
    let metric_names = raw
        .metrics
        .unwrap_or_else(|| vec!["outage-u1".into(), "outage-u2".into()]);
    let metrics: Vec<Metric> = parse_names(&metric_names, &mut errors);
    if metric_names.is_empty() {
        errors.push("metric list is empty".into());
    }

    let trials = ov.trials.or(raw.trials).unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        errors.push("trials must be at least 1".into());
    }

    for case in &cases {
        for idx in 0..axis.len() {
            let (value, p) = axis.point(&case.params, idx);
            match p.validate() {
                Err(msgs) => {
                    for m in msgs {
                        let line = format!("case {}: {m}", case.label);
                        if !errors.contains(&line) {
                            errors.push(line);
                        }
                    }
                }
                Ok(()) => {
                    if !p.derived().feasible {
                        let line = format!(
                            "case {}: U2 target {} bit/s/Hz unreachable with a1={}, a2={}; U2 outage is 1",
                            case.label, p.rate_target_u2, p.a1, p.a2
                        );
                        if !warnings.contains(&line) {
                            warnings.push(line);
                        }
                    }
                    if schemes.iter().any(|s| s.is_dynamic()) && p.m() < 2 {
                        errors.push(format!(
                            "case {} at {value}: dynamic clustering needs M ≥ 2",
                            case.label
                        ));
                    }
                }
            }
        }
    }

    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }
    Ok(ExperimentConfig {
        sweep: SweepConfig {
            cases,
            axis,
            schemes,
            metrics,
            trials,
            seed: ov.seed.or(raw.seed).unwrap_or(DEFAULT_SEED),
            options: SimOptions {
                fallback: raw.qos_fallback.unwrap_or_default(),
                growth: raw.growth.unwrap_or_default(),
                workers: ov.workers.or(raw.workers).unwrap_or(0),
            },
        },
        out: ov.out.clone().or(raw.out),
        warnings,
    })
}
