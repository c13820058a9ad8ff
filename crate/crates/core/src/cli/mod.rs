//! Command-line front end: experiment configuration, orchestration and CSV output.

mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

pub use config::{
    load_file, load_preset, parse_config, preset_names, preset_source, ConfigError, ExperimentConfig, Overrides,
    DEFAULT_SEED, DEFAULT_TRIALS,
};

use crate::montecarlo::{run_sweep, SimError, SweepResult};

pub const CSV_HEADER: [&str; 9] = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "metric",
    "sim_value",
    "sim_stderr",
    "analytic_value",
    "trials",
    "seed",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("exactly one of --config or --preset is required")]
    NoSource,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Simulate antenna-selection schemes for full-duplex cooperative NOMA and
/// write plot-ready CSV.
#[derive(Debug, Parser)]
#[command(name = "fdnoma", version)]
pub struct Args {
    /// TOML experiment file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled experiment (see --list-presets).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Print the bundled presets and exit.
    #[arg(long)]
    pub list_presets: bool,
    /// Print a preset's TOML and exit, as a starting point for custom files.
    #[arg(long, value_name = "NAME")]
    pub show_preset: Option<String>,
}

impl Args {
    fn overrides(&self) -> Overrides {
        Overrides {
            trials: self.trials,
            seed: self.seed,
            workers: self.workers,
            // An explicit empty flag must reach validation, not fall back to the file.
            schemes: self
                .schemes
                .as_ref()
                .map(|v| v.iter().filter(|s| !s.is_empty()).cloned().collect()),
            out: self.out.clone(),
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let ov = self.overrides();
        match (&self.config, &self.preset) {
            (Some(path), None) => Ok(load_file(path, &ov)?),
            (None, Some(name)) => Ok(load_preset(name, &ov)?),
            _ => Err(CliError::NoSource),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serializes sweep rows. Floats use shortest round-trip formatting, so
/// identical results give identical bytes.
pub fn write_csv<W: Write>(result: &SweepResult, multi_case: bool, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &result.rows {
        let scheme = if multi_case {
            format!("{}@{}", row.scheme, row.case)
        } else {
            row.scheme.to_string()
        };
        w.write_record([
            row.sweep_var.to_owned(),
            row.sweep_value.to_string(),
            scheme,
            row.metric.to_string(),
            fmt_opt(row.sim.map(|e| e.value)),
            fmt_opt(row.sim.map(|e| e.standard_error)),
            fmt_opt(row.analytic),
            row.sim.map(|e| e.trials.to_string()).unwrap_or_default(),
            row.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a validated experiment and writes its CSV to the configured destination.
pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let result = run_sweep(&cfg.sweep)?;
    let multi = cfg.sweep.cases.len() > 1;
    match &cfg.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            write_csv(&result, multi, std::io::BufWriter::new(file))
        }
        None => write_csv(&result, multi, std::io::stdout().lock()),
    }
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    if args.list_presets {
        for name in preset_names() {
            println!("{name}");
        }
        return 0;
    }
    if let Some(name) = &args.show_preset {
        return match preset_source(name) {
            Ok(src) => {
                print!("{src}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        };
    }
    let outcome = args.experiment().and_then(|cfg| run(&cfg));
    match outcome {
        Ok(()) => 0,
        Err(e @ (CliError::Config(_) | CliError::NoSource)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_csv(&SweepResult::default(), false, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sweep_var,sweep_value,scheme,metric,sim_value,sim_stderr,analytic_value,trials,seed\n"
        );
    }

    #[test]
    fn requires_a_source() {
        let args = Args::parse_from(["fdnoma"]);
        assert!(matches!(args.experiment(), Err(CliError::NoSource)));
    }

    #[test]
    fn scheme_flag_splits_on_commas() {
        let args = Args::parse_from(["fdnoma", "--preset", "fig2", "--schemes", "max-u1,random"]);
        let cfg = args.experiment().unwrap();
        assert_eq!(cfg.sweep.schemes.len(), 2);
    }

    #[test]
    fn empty_scheme_flag_is_an_error() {
        let args = Args::parse_from(["fdnoma", "--preset", "fig2", "--schemes", ""]);
        assert!(matches!(
            args.experiment(),
            Err(CliError::Config(ConfigError::Invalid(_)))
        ));
    }
}
