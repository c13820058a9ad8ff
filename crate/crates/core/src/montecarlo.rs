//! Monte-Carlo estimation of outage probabilities and ergodic rates.
//!
//! Trials are split into fixed-size chunks. Chunk `c` draws its channels from
//! stream `c` of the seeded generator and sums its tallies locally. Chunks are
//! then merged in index order, so results do not depend on how many workers
//! ran them. All schemes see the same realizations, which keeps scheme
//! comparisons on common random numbers.

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::channel::ChannelGenerator;
use crate::model::{ChannelRealization, SystemParams};
use crate::selection::{
    select_max_u1, select_max_u2, select_optimum, select_optimum_u2, select_qos_dynamic_with, select_qos_static_with,
    select_random, AntennaDecision, DynamicMode, Growth, LinkSinrs, QosTable, Scheme, SelectionError,
};

/// Draws per chunk. Part of the reproducibility contract: changing it changes results.
pub const CHUNK_SIZE: u64 = 1 << 14;

/// Offset separating the random-selection streams from the channel streams.
const SELECTION_STREAM_BASE: u64 = 1 << 62;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("no schemes requested")]
    NoSchemes,
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    OutageU1,
    OutageU2,
    RateU1,
    RateU2,
    RateSum,
    /// High-SNR outage floor of U1; analytic only.
    FloorU1,
    /// High-SNR outage floor of U2; analytic only.
    FloorU2,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::OutageU1,
        Metric::OutageU2,
        Metric::RateU1,
        Metric::RateU2,
        Metric::RateSum,
        Metric::FloorU1,
        Metric::FloorU2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::OutageU1 => "outage-u1",
            Metric::OutageU2 => "outage-u2",
            Metric::RateU1 => "rate-u1",
            Metric::RateU2 => "rate-u2",
            Metric::RateSum => "rate-sum",
            Metric::FloorU1 => "floor-u1",
            Metric::FloorU2 => "floor-u2",
        }
    }

    pub fn is_simulated(self) -> bool {
        !matches!(self, Metric::FloorU1 | Metric::FloorU2)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// How a QoS realization with empty 𝒜 counts towards U1's rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QosFallback {
    /// U1 is served on the max-U1 triple.
    #[default]
    MaxU1,
    /// U1 gets nothing.
    ZeroRate,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    pub fallback: QosFallback,
    pub growth: Growth,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceEstimate {
    pub metric: Metric,
    pub value: f64,
    pub standard_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Running first and second moments of a per-draw quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, o: &Moments) {
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn mean_and_error(&self, n: u64) -> (f64, f64) {
        let n = n as f64;
        let mean = self.sum / n;
        if n < 2.0 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

/// Per-scheme counts and sums accumulated over draws.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchemeTally {
    pub trials: u64,
    pub outage_u1: u64,
    pub outage_u2: u64,
    /// Realizations where the QoS set 𝒜 was empty.
    pub qos_infeasible: u64,
    pub rate_u1: Moments,
    pub rate_u2: Moments,
    pub rate_sum: Moments,
}

impl SchemeTally {
    fn merge(&mut self, o: &SchemeTally) {
        self.trials += o.trials;
        self.outage_u1 += o.outage_u1;
        self.outage_u2 += o.outage_u2;
        self.qos_infeasible += o.qos_infeasible;
        self.rate_u1.merge(&o.rate_u1);
        self.rate_u2.merge(&o.rate_u2);
        self.rate_sum.merge(&o.rate_sum);
    }

    /// Estimate of one simulated metric; `None` for analytic-only metrics.
    pub fn estimate(&self, metric: Metric, seed: u64) -> Option<PerformanceEstimate> {
        let n = self.trials;
        let binomial = |count: u64| {
            let p = count as f64 / n as f64;
            (p, (p * (1.0 - p) / n as f64).sqrt())
        };
        let (value, standard_error) = match metric {
            Metric::OutageU1 => binomial(self.outage_u1),
            Metric::OutageU2 => binomial(self.outage_u2),
            Metric::RateU1 => self.rate_u1.mean_and_error(n),
            Metric::RateU2 => self.rate_u2.mean_and_error(n),
            Metric::RateSum => self.rate_sum.mean_and_error(n),
            Metric::FloorU1 | Metric::FloorU2 => return None,
        };
        Some(PerformanceEstimate {
            metric,
            value,
            standard_error,
            trials: n,
            seed,
        })
    }
}

/// Per-draw outcome of one scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawOutcome {
    pub decision: AntennaDecision,
    pub sinrs: LinkSinrs,
    pub outage_u1: bool,
    pub outage_u2: bool,
    pub rate_u1: f64,
    pub rate_u2: f64,
}

/// Evaluates every scheme on one realization.
pub struct DrawEvaluator<'a> {
    params: &'a SystemParams,
    theta1: f64,
    theta2: f64,
    opts: SimOptions,
    needs_table: bool,
}

impl<'a> DrawEvaluator<'a> {
    pub fn new(params: &'a SystemParams, schemes: &[Scheme], opts: SimOptions) -> Self {
        let d = params.derived();
        Self {
            params,
            theta1: d.theta1,
            theta2: d.theta2,
            opts,
            needs_table: schemes.iter().any(|s| s.is_qos()),
        }
    }

    pub fn table(&self, real: &ChannelRealization) -> Option<QosTable> {
        self.needs_table
            .then(|| QosTable::build(real, self.params, self.theta2))
    }

    pub fn outcome(
        &self,
        scheme: Scheme,
        real: &ChannelRealization,
        table: Option<&QosTable>,
        rng: &mut ChaCha8Rng,
    ) -> Result<DrawOutcome, SelectionError> {
        let p = self.params;
        let qos_table = || table.expect("QoS table is built whenever a QoS scheme runs");
        let decision = match scheme {
            Scheme::MaxU1 => select_max_u1(real, p),
            Scheme::MaxU2 => select_max_u2(real, p),
            Scheme::QosStatic => select_qos_static_with(real, p, qos_table()),
            Scheme::QosDynAlg1 => {
                select_qos_dynamic_with(real, p, qos_table(), DynamicMode::Algorithm1, self.opts.growth)?
            }
            Scheme::QosDynExhaustive => {
                select_qos_dynamic_with(real, p, qos_table(), DynamicMode::Exhaustive, self.opts.growth)?
            }
            Scheme::Optimum => select_optimum(real, p),
            Scheme::OptimumU2 => select_optimum_u2(real, p),
            Scheme::Random => select_random(real, p, rng),
        };
        let s = LinkSinrs::of(real, p, &decision);
        let u1_ok = s.u1_sic > self.theta2 && s.u1 > self.theta1;
        let (outage_u1, outage_u2, rate_u1, rate_u2) = if scheme.is_qos() {
            if decision.qos_feasible {
                (!u1_ok, false, (1.0 + s.u1).log2(), (1.0 + s.u2).log2())
            } else {
                let r1 = match self.opts.fallback {
                    QosFallback::MaxU1 => (1.0 + s.u1).log2(),
                    QosFallback::ZeroRate => 0.0,
                };
                (true, true, r1, 0.0)
            }
        } else {
            let u2_ok = s.relay > self.theta2 && s.ru2 > self.theta2;
            (!u1_ok, !u2_ok, (1.0 + s.u1).log2(), (1.0 + s.u2).log2())
        };
        Ok(DrawOutcome {
            decision,
            sinrs: s,
            outage_u1,
            outage_u2,
            rate_u1,
            rate_u2,
        })
    }
}

fn run_chunk(
    params: &SystemParams,
    schemes: &[Scheme],
    seed: u64,
    chunk: u64,
    len: u64,
    opts: SimOptions,
) -> Result<Vec<SchemeTally>, SelectionError> {
    let eval = DrawEvaluator::new(params, schemes, opts);
    let mut gen = ChannelGenerator::new(params, seed, chunk);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SELECTION_STREAM_BASE + chunk);
    let mut tallies = vec![SchemeTally::default(); schemes.len()];
    let mut real = gen.draw();
    for n in 0..len {
        if n > 0 {
            gen.draw_into(&mut real);
        }
        let table = eval.table(&real);
        for (scheme, tally) in schemes.iter().zip(&mut tallies) {
            let o = eval.outcome(*scheme, &real, table.as_ref(), &mut rng)?;
            tally.trials += 1;
            tally.outage_u1 += u64::from(o.outage_u1);
            tally.outage_u2 += u64::from(o.outage_u2);
            tally.qos_infeasible += u64::from(!o.decision.qos_feasible);
            tally.rate_u1.push(o.rate_u1);
            tally.rate_u2.push(o.rate_u2);
            tally.rate_sum.push(o.rate_u1 + o.rate_u2);
        }
    }
    Ok(tallies)
}

/// Runs all `schemes` on the same `trials` realizations.
pub fn simulate(
    params: &SystemParams,
    schemes: &[Scheme],
    trials: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<Vec<SchemeTally>, SimError> {
    if trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    if schemes.is_empty() {
        return Err(SimError::NoSchemes);
    }
    params.validate().map_err(SimError::InvalidParams)?;
    if schemes.iter().any(|s| s.is_dynamic()) && params.m() < 2 {
        return Err(SelectionError::InvalidAntennaCount { m: params.m() }.into());
    }
    let chunks = trials.div_ceil(CHUNK_SIZE);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK_SIZE.min(trials - c * CHUNK_SIZE);
                run_chunk(params, schemes, seed, c, len, opts)
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let per_chunk = if opts.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?
            .install(work)
    }?;
    let mut total = vec![SchemeTally::default(); schemes.len()];
    for chunk in &per_chunk {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    Ok(total)
}

/// Estimates one metric of one scheme with default options.
pub fn estimate(
    scheme: Scheme,
    metric: Metric,
    params: &SystemParams,
    trials: u64,
    seed: u64,
) -> Result<PerformanceEstimate, SimError> {
    let tally = simulate(params, &[scheme], trials, seed, SimOptions::default())?;
    tally[0]
        .estimate(metric, seed)
        .ok_or_else(|| SimError::InvalidParams(vec![format!("metric {metric} is analytic only")]))
}

/// U1 outage: the SIC stage or U1's own decoding misses its threshold.
/// For QoS schemes an empty 𝒜 also counts.
pub fn estimate_outage_u1(
    scheme: Scheme,
    params: &SystemParams,
    trials: u64,
    seed: u64,
) -> Result<PerformanceEstimate, SimError> {
    estimate(scheme, Metric::OutageU1, params, trials, seed)
}

/// U2 outage: the relay decoding stage or the relay→U2 hop misses `θ2`.
/// For QoS schemes the outage event is an empty 𝒜.
pub fn estimate_outage_u2(
    scheme: Scheme,
    params: &SystemParams,
    trials: u64,
    seed: u64,
) -> Result<PerformanceEstimate, SimError> {
    estimate(scheme, Metric::OutageU2, params, trials, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUser {
    U1,
    U2,
    Sum,
}

pub fn estimate_rate(
    scheme: Scheme,
    user: RateUser,
    params: &SystemParams,
    trials: u64,
    seed: u64,
) -> Result<PerformanceEstimate, SimError> {
    let metric = match user {
        RateUser::U1 => Metric::RateU1,
        RateUser::U2 => Metric::RateU2,
        RateUser::Sum => Metric::RateSum,
    };
    estimate(scheme, metric, params, trials, seed)
}

/// Independent variable of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// `ρ_S = ρ_R` in dB.
    RhoDb(Vec<f64>),
    /// Total relay antennas `M`, split as `M_R = M_T = M/2`.
    RelayAntennas(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::RhoDb(_) => "rho_db",
            SweepAxis::RelayAntennas(_) => "m",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::RhoDb(v) => v.len(),
            SweepAxis::RelayAntennas(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sweep value and the parameters it induces at point `idx`.
    pub fn point(&self, base: &SystemParams, idx: usize) -> (f64, SystemParams) {
        match self {
            SweepAxis::RhoDb(v) => (v[idx], base.clone().with_rho_db(v[idx])),
            SweepAxis::RelayAntennas(v) => {
                let m = v[idx];
                (m as f64, base.clone().with_antennas(base.n_t, m / 2, m - m / 2))
            }
        }
    }
}

/// One parameter set to sweep; `label` distinguishes several in one table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub label: String,
    pub params: SystemParams,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub cases: Vec<SweepCase>,
    pub axis: SweepAxis,
    pub schemes: Vec<Scheme>,
    pub metrics: Vec<Metric>,
    pub trials: u64,
    pub seed: u64,
    pub options: SimOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub case: String,
    pub sweep_var: &'static str,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub metric: Metric,
    pub sim: Option<PerformanceEstimate>,
    pub analytic: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Runs the full case × point × scheme × metric grid. Every point reuses the
/// configured seed, so scheme comparisons share realizations.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, SimError> {
    if config.schemes.is_empty() {
        return Err(SimError::NoSchemes);
    }
    let mut rows = Vec::new();
    let simulate_any = config.metrics.iter().any(|m| m.is_simulated());
    for case in &config.cases {
        for idx in 0..config.axis.len() {
            let (value, params) = config.axis.point(&case.params, idx);
            let tallies = if simulate_any {
                Some(simulate(
                    &params,
                    &config.schemes,
                    config.trials,
                    config.seed,
                    config.options,
                )?)
            } else {
                params.validate().map_err(SimError::InvalidParams)?;
                None
            };
            for (s_idx, &scheme) in config.schemes.iter().enumerate() {
                for &metric in &config.metrics {
                    let sim = tallies.as_ref().and_then(|t| t[s_idx].estimate(metric, config.seed));
                    // The closed-form QoS U1 rate gives U1 nothing when 𝒜 is empty.
                    let comparable = !(scheme.is_qos()
                        && metric == Metric::RateU1
                        && config.options.fallback != QosFallback::ZeroRate);
                    let analytic = if comparable {
                        analytic::evaluate(scheme, metric, &params)?
                    } else {
                        None
                    };
                    if sim.is_none() && analytic.is_none() {
                        continue;
                    }
                    rows.push(SweepRow {
                        case: case.label.clone(),
                        sweep_var: config.axis.name(),
                        sweep_value: value,
                        scheme,
                        metric,
                        sim,
                        analytic,
                        seed: config.seed,
                    });
                }
            }
        }
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho_db: f64, n_t: usize, m_r: usize, m_t: usize) -> SystemParams {
        SystemParams::default().with_rho_db(rho_db).with_antennas(n_t, m_r, m_t)
    }

    #[test]
    fn no_power_means_certain_outage() {
        let mut p = params(0.0, 2, 2, 2);
        p.rho_s = 1e-6;
        p.rho_r = 1e-6;
        for scheme in [Scheme::MaxU1, Scheme::QosStatic, Scheme::Random] {
            let e = estimate_outage_u1(scheme, &p, 20_000, 1).unwrap();
            assert!(
                e.value > 1.0 - 3.0 * e.standard_error.max(1e-4),
                "{scheme}: {}",
                e.value
            );
        }
    }

    #[test]
    fn infeasible_threshold_gives_exact_one() {
        let mut p = params(30.0, 2, 2, 2);
        p.rate_target_u2 = 3.4;
        for scheme in Scheme::ALL {
            assert_eq!(estimate_outage_u2(scheme, &p, 5_000, 3).unwrap().value, 1.0);
        }
    }

    #[test]
    fn vanishing_threshold_gives_no_outage() {
        let mut p = params(20.0, 2, 2, 2);
        p.rate_target_u2 = 1e-9;
        let e = estimate_outage_u2(Scheme::MaxU2, &p, 20_000, 3).unwrap();
        assert!(e.value <= 3.0 * e.standard_error.max(1e-4));
    }

    #[test]
    fn rates_vanish_with_variances() {
        let mut p = params(20.0, 2, 2, 2);
        for v in [
            &mut p.var_su1,
            &mut p.var_sr,
            &mut p.var_ru1,
            &mut p.var_ru2,
            &mut p.var_si,
        ] {
            *v = 1e-12;
        }
        let e = estimate_rate(Scheme::MaxU1, RateUser::Sum, &p, 2_000, 0).unwrap();
        assert!(e.value < 1e-8);
    }

    #[test]
    fn far_user_rate_below_power_ratio_ceiling() {
        let p = params(40.0, 3, 3, 3);
        for scheme in Scheme::ALL {
            let e = estimate_rate(scheme, RateUser::U2, &p, 5_000, 9).unwrap();
            assert!(e.value <= 10f64.log2() + e.standard_error);
        }
    }

    #[test]
    fn chunked_results_independent_of_workers() {
        let p = params(10.0, 2, 2, 2);
        let trials = 3 * CHUNK_SIZE + 17;
        let opts = |workers| SimOptions {
            workers,
            ..SimOptions::default()
        };
        let a = simulate(&p, &Scheme::ALL, trials, 42, opts(1)).unwrap();
        let b = simulate(&p, &Scheme::ALL, trials, 42, opts(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|t| t.trials == trials));
    }

    #[test]
    fn schemes_share_realizations() {
        // Max-U1 estimated alone or next to other schemes sees identical draws.
        let p = params(10.0, 2, 2, 2);
        let alone = simulate(&p, &[Scheme::MaxU1], 20_000, 5, SimOptions::default()).unwrap();
        let mixed = simulate(&p, &[Scheme::Random, Scheme::MaxU1], 20_000, 5, SimOptions::default()).unwrap();
        assert_eq!(alone[0], mixed[1]);
    }

    #[test]
    fn max_u2_u1_outage_independent_of_antennas() {
        let trials = 400_000;
        let a = estimate_outage_u1(Scheme::MaxU2, &params(20.0, 1, 2, 1), trials, 1).unwrap();
        let b = estimate_outage_u1(Scheme::MaxU2, &params(20.0, 4, 2, 4), trials, 2).unwrap();
        let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 3.0 * se, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn fallback_policy_changes_only_u1_rate() {
        let p = params(0.0, 2, 2, 2);
        let run = |fallback| {
            simulate(
                &p,
                &[Scheme::QosStatic],
                10_000,
                4,
                SimOptions {
                    fallback,
                    ..SimOptions::default()
                },
            )
            .unwrap()
            .remove(0)
        };
        let keep = run(QosFallback::MaxU1);
        let zero = run(QosFallback::ZeroRate);
        assert!(keep.qos_infeasible > 0);
        assert_eq!(keep.outage_u1, zero.outage_u1);
        assert_eq!(keep.rate_u2, zero.rate_u2);
        assert!(keep.rate_u1.sum > zero.rate_u1.sum);
    }

    #[test]
    fn sweep_emits_grid_rows() {
        let cfg = SweepConfig {
            cases: vec![SweepCase {
                label: String::new(),
                params: params(0.0, 2, 2, 2),
            }],
            axis: SweepAxis::RhoDb(vec![0.0, 10.0]),
            schemes: vec![Scheme::MaxU1, Scheme::Optimum],
            metrics: vec![Metric::OutageU1, Metric::FloorU1],
            trials: 1000,
            seed: 1,
            options: SimOptions::default(),
        };
        let res = run_sweep(&cfg).unwrap();
        // Optimum has no floor, so 2 points × (2 + 1) rows.
        assert_eq!(res.rows.len(), 6);
        assert!(res.rows.iter().all(|r| r.sweep_var == "rho_db"));
        let floor = res.rows.iter().find(|r| r.metric == Metric::FloorU1).unwrap();
        assert!(floor.sim.is_none() && floor.analytic.is_some());
    }

    #[test]
    fn relay_antenna_axis_splits_evenly() {
        let base = params(25.0, 4, 1, 1);
        let (v, p) = SweepAxis::RelayAntennas(vec![6]).point(&base, 0);
        assert_eq!((v, p.m_r, p.m_t, p.n_t), (6.0, 3, 3, 4));
    }
}
