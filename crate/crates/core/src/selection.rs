//! Antenna-selection schemes.
//!
//! Every scheme maps one [`ChannelRealization`] to a triple `(i*, j*, k*)`:
//! a BS transmit antenna, a relay receive antenna and a relay transmit
//! antenna. Static schemes use the fixed split described on
//! [`Partition::static_split`]. The dynamic QoS schemes also choose the split.
//!
//! Ties are broken towards the lowest index everywhere.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{relay_sinr, u1_sic_sinr, u1_sinr, ChannelRealization, SystemParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("dynamic clustering needs at least 2 relay antennas (got {m})")]
    InvalidAntennaCount { m: usize },
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
}

/// Scheme identifiers as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    MaxU1,
    MaxU2,
    QosStatic,
    QosDynAlg1,
    QosDynExhaustive,
    Optimum,
    OptimumU2,
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::MaxU1,
        Scheme::MaxU2,
        Scheme::QosStatic,
        Scheme::QosDynAlg1,
        Scheme::QosDynExhaustive,
        Scheme::Optimum,
        Scheme::OptimumU2,
        Scheme::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::MaxU1 => "max-u1",
            Scheme::MaxU2 => "max-u2",
            Scheme::QosStatic => "qos-static",
            Scheme::QosDynAlg1 => "qos-dyn-alg1",
            Scheme::QosDynExhaustive => "qos-dyn-exhaustive",
            Scheme::Optimum => "optimum",
            Scheme::OptimumU2 => "optimum-u2",
            Scheme::Random => "random",
        }
    }

    /// QoS schemes report U2 outage as "set 𝒜 empty" rather than via SINRs.
    pub fn is_qos(self) -> bool {
        matches!(self, Scheme::QosStatic | Scheme::QosDynAlg1 | Scheme::QosDynExhaustive)
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, Scheme::QosDynAlg1 | Scheme::QosDynExhaustive)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| SelectionError::UnknownScheme(s.to_owned()))
    }
}

/// Search mode of the dynamic-clustering QoS scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DynamicMode {
    /// Greedy cluster growth, stopping at the first feasible split.
    #[default]
    Algorithm1,
    /// All `2^M − 2` splits with non-empty receive and transmit sets.
    Exhaustive,
}

/// Which cluster the greedy search grows from a single antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    #[default]
    GrowRx,
    GrowTx,
}

/// A split of the relay's `M` antennas into receive and transmit sets.
///
/// Stored as a receive bitmask, so `M ≤ 32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Partition {
    rx_mask: u32,
    m: u8,
}

impl Partition {
    /// Receive antennas `0..m_r`, transmit antennas `m_r..m_r+m_t`.
    pub fn static_split(m_r: usize, m_t: usize) -> Self {
        let m = m_r + m_t;
        assert!(m_r >= 1 && m_t >= 1 && m <= 32, "invalid split {m_r}/{m_t}");
        Self {
            rx_mask: low_bits(m_r),
            m: m as u8,
        }
    }

    /// Returns `None` unless both sets are non-empty.
    pub fn from_rx_mask(rx_mask: u32, m: usize) -> Option<Self> {
        if m > 32 {
            return None;
        }
        let all = low_bits(m);
        (rx_mask & !all == 0 && rx_mask != 0 && rx_mask != all).then_some(Self { rx_mask, m: m as u8 })
    }

    pub fn rx_mask(&self) -> u32 {
        self.rx_mask
    }

    pub fn tx_mask(&self) -> u32 {
        low_bits(self.m as usize) & !self.rx_mask
    }

    pub fn m(&self) -> usize {
        self.m as usize
    }

    pub fn rx(&self) -> impl Iterator<Item = usize> + '_ {
        bits(self.rx_mask)
    }

    pub fn tx(&self) -> impl Iterator<Item = usize> + '_ {
        bits(self.tx_mask())
    }

    pub fn n_rx(&self) -> usize {
        self.rx_mask.count_ones() as usize
    }

    pub fn n_tx(&self) -> usize {
        self.tx_mask().count_ones() as usize
    }

    pub fn is_rx(&self, antenna: usize) -> bool {
        antenna < self.m() && self.rx_mask >> antenna & 1 == 1
    }

    pub fn is_tx(&self, antenna: usize) -> bool {
        antenna < self.m() && self.rx_mask >> antenna & 1 == 0
    }
}

fn low_bits(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            b
        })
    })
}

/// All splits of `m` antennas with both sets non-empty, in increasing receive-mask order.
pub fn partitions(m: usize) -> impl Iterator<Item = Partition> {
    let top = if (2..=32).contains(&m) { low_bits(m) } else { 0 };
    (1..top).filter_map(move |mask| Partition::from_rx_mask(mask, m))
}

/// Splits visited by the greedy search: one cluster grows from `{0}` to `{0, …, M−2}`.
pub fn growth_sequence(m: usize, growth: Growth) -> impl Iterator<Item = Partition> {
    (1..m).filter_map(move |size| {
        let grown = low_bits(size);
        let rx = match growth {
            Growth::GrowRx => grown,
            Growth::GrowTx => low_bits(m) & !grown,
        };
        Partition::from_rx_mask(rx, m)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaDecision {
    pub i_star: usize,
    pub j_star: usize,
    pub k_star: usize,
    /// Set only by the dynamic-clustering schemes.
    pub partition: Option<Partition>,
    /// Whether the QoS set 𝒜 was non-empty. Always `true` for non-QoS schemes.
    pub qos_feasible: bool,
}

impl AntennaDecision {
    fn new(i: usize, j: usize, k: usize) -> Self {
        Self {
            i_star: i,
            j_star: j,
            k_star: k,
            partition: None,
            qos_feasible: true,
        }
    }
}

/// All SINRs that one decision induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSinrs {
    /// U1's own symbol after SIC.
    pub u1: f64,
    /// U1 decoding U2's symbol.
    pub u1_sic: f64,
    pub relay: f64,
    pub ru2: f64,
    /// End-to-end SINR of U2.
    pub u2: f64,
}

impl LinkSinrs {
    pub fn evaluate(real: &ChannelRealization, p: &SystemParams, i: usize, j: usize, k: usize) -> Self {
        let u1_sic = u1_sic_sinr(p.a1, p.a2, real.g_su1[i], real.g_ru1[k]);
        let relay = relay_sinr(p.a1, p.a2, real.sr(i, j), real.si(k, j));
        let ru2 = real.g_ru2[k];
        Self {
            u1: u1_sinr(p.a1, real.g_su1[i], real.g_ru1[k]),
            u1_sic,
            relay,
            ru2,
            u2: u1_sic.min(relay).min(ru2),
        }
    }

    pub fn of(real: &ChannelRealization, p: &SystemParams, d: &AntennaDecision) -> Self {
        Self::evaluate(real, p, d.i_star, d.j_star, d.k_star)
    }

    /// Instantaneous `log2(1+γ1) + log2(1+γ2)`.
    pub fn sum_rate(&self) -> f64 {
        (1.0 + self.u1).log2() + (1.0 + self.u2).log2()
    }
}

/// Index of the first maximum of `key` over `items`.
fn argmax_by(items: impl Iterator<Item = usize>, mut key: impl FnMut(usize) -> f64) -> usize {
    let mut best = usize::MAX;
    let mut best_v = f64::NEG_INFINITY;
    for x in items {
        let v = key(x);
        if best == usize::MAX || v > best_v {
            best = x;
            best_v = v;
        }
    }
    best
}

fn argmin_by(items: impl Iterator<Item = usize>, mut key: impl FnMut(usize) -> f64) -> usize {
    argmax_by(items, |x| -key(x))
}

fn static_partition(p: &SystemParams) -> Partition {
    Partition::static_split(p.m_r, p.m_t)
}

/// Maximizes U1's SINR: strongest BS→U1 antenna, weakest relay→U1
/// interferer, then the receive antenna with the best relay SINR.
pub fn select_max_u1(real: &ChannelRealization, p: &SystemParams) -> AntennaDecision {
    max_u1_on(real, p, static_partition(p))
}

fn max_u1_on(real: &ChannelRealization, p: &SystemParams, part: Partition) -> AntennaDecision {
    let i = argmax_by(0..real.n_t(), |i| real.g_su1[i]);
    let k = argmin_by(part.tx(), |k| real.g_ru1[k]);
    let j = argmax_by(part.rx(), |j| relay_sinr(p.a1, p.a2, real.sr(i, j), real.si(k, j)));
    AntennaDecision::new(i, j, k)
}

/// Sequential far-user selection: strongest relay→U2 antenna, then the
/// receive antenna it leaks least into, then the strongest BS antenna towards it.
pub fn select_max_u2(real: &ChannelRealization, p: &SystemParams) -> AntennaDecision {
    let part = static_partition(p);
    let k = argmax_by(part.tx(), |k| real.g_ru2[k]);
    let j = argmin_by(part.rx(), |j| real.si(k, j));
    let i = argmax_by(0..real.n_t(), |i| real.sr(i, j));
    AntennaDecision::new(i, j, k)
}

/// Membership of every `(i, j, k)` in the QoS set 𝒜 for one realization,
/// independent of any partition.
///
/// `ok[i * M + k]` is the bitmask of receive antennas `j` for which all three
/// far-user stages reach `θ2`. Bit `k` itself is never set, since an antenna
/// cannot receive and transmit at once.
#[derive(Debug, Clone)]
pub struct QosTable {
    m: usize,
    ok: Vec<u32>,
}

impl QosTable {
    pub fn build(real: &ChannelRealization, p: &SystemParams, theta2: f64) -> Self {
        let (n_t, m) = (real.n_t(), real.m());
        let mut ok = vec![0u32; n_t * m];
        for i in 0..n_t {
            for k in 0..m {
                if u1_sic_sinr(p.a1, p.a2, real.g_su1[i], real.g_ru1[k]) < theta2 || real.g_ru2[k] < theta2 {
                    continue;
                }
                let mut mask = 0u32;
                for j in (0..m).filter(|&j| j != k) {
                    if relay_sinr(p.a1, p.a2, real.sr(i, j), real.si(k, j)) >= theta2 {
                        mask |= 1 << j;
                    }
                }
                ok[i * m + k] = mask;
            }
        }
        Self { m, ok }
    }

    /// Whether `(i, j, k)` belongs to 𝒜.
    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        self.ok[i * self.m + k] >> j & 1 == 1
    }

    fn receive_mask(&self, i: usize, k: usize) -> u32 {
        self.ok[i * self.m + k]
    }

    /// Whether 𝒜 restricted to `part` is non-empty.
    pub fn feasible_on(&self, part: Partition) -> bool {
        let n_t = self.ok.len() / self.m;
        (0..n_t).any(|i| part.tx().any(|k| self.receive_mask(i, k) & part.rx_mask() != 0))
    }
}

/// Two-stage QoS rule on one split: best U1 SINR over `(i, k)` pairs that
/// appear in 𝒜, then the best relay SINR over the matching `j`.
fn qos_on(
    real: &ChannelRealization,
    p: &SystemParams,
    table: &QosTable,
    part: Partition,
) -> Option<(usize, usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..real.n_t() {
        for k in part.tx() {
            if table.receive_mask(i, k) & part.rx_mask() == 0 {
                continue;
            }
            let v = u1_sinr(p.a1, real.g_su1[i], real.g_ru1[k]);
            if best.is_none_or(|(_, _, bv)| v > bv) {
                best = Some((i, k, v));
            }
        }
    }
    let (i, k, _) = best?;
    let js = bits(table.receive_mask(i, k) & part.rx_mask());
    let j = argmax_by(js, |j| relay_sinr(p.a1, p.a2, real.sr(i, j), real.si(k, j)));
    Some((i, j, k))
}

fn fallback(real: &ChannelRealization, p: &SystemParams, partition: Option<Partition>) -> AntennaDecision {
    AntennaDecision {
        partition,
        qos_feasible: false,
        ..select_max_u1(real, p)
    }
}

/// QoS provisioning with the static split. When 𝒜 is empty the max-U1
/// decision is returned with `qos_feasible = false`.
pub fn select_qos_static(real: &ChannelRealization, p: &SystemParams, theta2: f64) -> AntennaDecision {
    let table = QosTable::build(real, p, theta2);
    select_qos_static_with(real, p, &table)
}

pub fn select_qos_static_with(real: &ChannelRealization, p: &SystemParams, table: &QosTable) -> AntennaDecision {
    match qos_on(real, p, table, static_partition(p)) {
        Some((i, j, k)) => AntennaDecision::new(i, j, k),
        None => fallback(real, p, None),
    }
}

/// QoS provisioning with dynamic antenna clustering.
///
/// Exhaustive mode keeps the split with the highest U1 SINR. Ties are common,
/// because U1's SINR ignores `j`, and are broken by the higher U2 SINR and
/// then by enumeration order. When no split is feasible the max-U1 decision
/// on the static split is returned with `qos_feasible = false`.
pub fn select_qos_dynamic(
    real: &ChannelRealization,
    p: &SystemParams,
    theta2: f64,
    mode: DynamicMode,
    growth: Growth,
) -> Result<AntennaDecision, SelectionError> {
    let table = QosTable::build(real, p, theta2);
    select_qos_dynamic_with(real, p, &table, mode, growth)
}

pub fn select_qos_dynamic_with(
    real: &ChannelRealization,
    p: &SystemParams,
    table: &QosTable,
    mode: DynamicMode,
    growth: Growth,
) -> Result<AntennaDecision, SelectionError> {
    let m = real.m();
    if m < 2 {
        return Err(SelectionError::InvalidAntennaCount { m });
    }
    let found = match mode {
        DynamicMode::Algorithm1 => {
            growth_sequence(m, growth).find_map(|part| qos_on(real, p, table, part).map(|t| (t, part)))
        }
        DynamicMode::Exhaustive => {
            // (triple, split, U1 SINR, γ2) of the best split so far.
            let mut best: Option<(Triple, Partition, f64, f64)> = None;
            for part in partitions(m) {
                let Some((i, j, k)) = qos_on(real, p, table, part) else {
                    continue;
                };
                let s = LinkSinrs::evaluate(real, p, i, j, k);
                let better = best.is_none_or(|(_, _, u1, u2)| s.u1 > u1 || (s.u1 == u1 && s.u2 > u2));
                if better {
                    best = Some(((i, j, k), part, s.u1, s.u2));
                }
            }
            best.map(|(t, part, _, _)| (t, part))
        }
    };
    Ok(match found {
        Some(((i, j, k), part)) => AntennaDecision {
            partition: Some(part),
            ..AntennaDecision::new(i, j, k)
        },
        None => fallback(real, p, Some(static_partition(p))),
    })
}

fn exhaustive(
    real: &ChannelRealization,
    p: &SystemParams,
    mut objective: impl FnMut(&LinkSinrs) -> f64,
) -> AntennaDecision {
    let part = static_partition(p);
    let mut best = (0, 0, 0);
    let mut best_v = f64::NEG_INFINITY;
    let mut first = true;
    for i in 0..real.n_t() {
        for j in part.rx() {
            for k in part.tx() {
                let v = objective(&LinkSinrs::evaluate(real, p, i, j, k));
                if first || v > best_v {
                    best = (i, j, k);
                    best_v = v;
                    first = false;
                }
            }
        }
    }
    AntennaDecision::new(best.0, best.1, best.2)
}

/// Exhaustive argmax of the instantaneous sum rate.
pub fn select_optimum(real: &ChannelRealization, p: &SystemParams) -> AntennaDecision {
    // (1+γ1)(1+γ2) orders triples like the sum of the logs.
    exhaustive(real, p, |s| (1.0 + s.u1) * (1.0 + s.u2))
}

/// Exhaustive argmax of U2's end-to-end SINR.
pub fn select_optimum_u2(real: &ChannelRealization, p: &SystemParams) -> AntennaDecision {
    exhaustive(real, p, |s| s.u2)
}

/// Independent uniform indices on the static split.
pub fn select_random(real: &ChannelRealization, p: &SystemParams, rng: &mut impl RngCore) -> AntennaDecision {
    let i = rng.random_range(0..real.n_t());
    let j = rng.random_range(0..p.m_r);
    let k = p.m_r + rng.random_range(0..p.m_t);
    AntennaDecision::new(i, j, k)
}

type Triple = (usize, usize, usize);

/// Options shared by every call of [`decide`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SelectionOptions {
    pub growth: Growth,
}

/// Runs `scheme` on one realization. `theta2` is the far user's SINR
/// threshold and `rng` is only consumed by [`Scheme::Random`].
pub fn decide(
    scheme: Scheme,
    real: &ChannelRealization,
    p: &SystemParams,
    theta2: f64,
    opts: SelectionOptions,
    rng: &mut impl RngCore,
) -> Result<AntennaDecision, SelectionError> {
    Ok(match scheme {
        Scheme::MaxU1 => select_max_u1(real, p),
        Scheme::MaxU2 => select_max_u2(real, p),
        Scheme::QosStatic => select_qos_static(real, p, theta2),
        Scheme::QosDynAlg1 => select_qos_dynamic(real, p, theta2, DynamicMode::Algorithm1, opts.growth)?,
        Scheme::QosDynExhaustive => select_qos_dynamic(real, p, theta2, DynamicMode::Exhaustive, opts.growth)?,
        Scheme::Optimum => select_optimum(real, p),
        Scheme::OptimumU2 => select_optimum_u2(real, p),
        Scheme::Random => select_random(real, p, rng),
    })
}
