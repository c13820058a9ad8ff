//! System constants and the per-realization SINR expressions of the
//! full-duplex cooperative NOMA downlink.
//!
//! All channel gains are stored pre-scaled by the transmit SNR of the node
//! that excites them (`γ = ρ|h|²`), so none of the functions here multiply by
//! an SNR. Noise at the far user is taken equal to the relay/near-user noise
//! power, which makes `γ̄_RU2 = ρ_R σ²_RU2`.

use thiserror::Error;

/// Errors raised by the deterministic model functions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// `a2 − a1·θ ≤ 0`: the far user's signal can never be decoded at this threshold.
    #[error("threshold {theta} is infeasible: a2 - a1*theta = {margin} <= 0")]
    InfeasibleThreshold { theta: f64, margin: f64 },
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
}

/// Scalar model constants. SNRs are linear.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub a1: f64,
    pub a2: f64,
    pub rho_s: f64,
    pub rho_r: f64,
    pub n_t: usize,
    pub m_r: usize,
    pub m_t: usize,
    pub var_su1: f64,
    pub var_sr: f64,
    pub var_ru1: f64,
    pub var_ru2: f64,
    pub var_si: f64,
    pub k1: f64,
    /// Target rate of the near user, bit/s/Hz.
    pub rate_target_u1: f64,
    /// Target rate of the far user, bit/s/Hz.
    pub rate_target_u2: f64,
}

impl Default for SystemParams {
    /// Power split and channel variances of the reference scenario, with a
    /// 20 dB SNR, 2/2/2 antennas, `k1 = 0.1` and unit target rates.
    fn default() -> Self {
        Self {
            a1: 0.1,
            a2: 0.9,
            rho_s: 100.0,
            rho_r: 100.0,
            n_t: 2,
            m_r: 2,
            m_t: 2,
            var_su1: 1.0,
            var_sr: 1.0,
            var_ru1: 0.5,
            var_ru2: 0.5,
            var_si: 0.3,
            k1: 0.1,
            rate_target_u1: 1.0,
            rate_target_u2: 1.0,
        }
    }
}

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemParams {
    /// Total number of relay antennas `M = M_R + M_T`.
    pub fn m(&self) -> usize {
        self.m_r + self.m_t
    }

    /// Sets both transmit SNRs from a single dB value (`ρ_S = ρ_R`).
    pub fn with_rho_db(mut self, db: f64) -> Self {
        let rho = db_to_linear(db);
        self.rho_s = rho;
        self.rho_r = rho;
        self
    }

    pub fn with_antennas(mut self, n_t: usize, m_r: usize, m_t: usize) -> Self {
        self.n_t = n_t;
        self.m_r = m_r;
        self.m_t = m_t;
        self
    }

    /// Checks every invariant and returns all violations at once.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.a1 > 0.0) || !(self.a2 > 0.0) {
            errs.push("a1 and a2 must be strictly positive".to_owned());
        }
        if (self.a1 + self.a2 - 1.0).abs() > 1e-9 {
            errs.push(format!("a1 + a2 must equal 1 (got {})", self.a1 + self.a2));
        }
        if !(self.a1 < self.a2) {
            errs.push("a1 < a2 violated".to_owned());
        }
        for (name, v) in [
            ("rho_s", self.rho_s),
            ("rho_r", self.rho_r),
            ("var_su1", self.var_su1),
            ("var_sr", self.var_sr),
            ("var_ru1", self.var_ru1),
            ("var_ru2", self.var_ru2),
            ("var_si", self.var_si),
            ("k1", self.k1),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                errs.push(format!("{name} must be finite and > 0 (got {v})"));
            }
        }
        for (name, v) in [("n_t", self.n_t), ("m_r", self.m_r), ("m_t", self.m_t)] {
            if v == 0 {
                errs.push(format!("{name} must be >= 1"));
            }
        }
        if self.m() > 32 {
            errs.push(format!("at most 32 relay antennas supported (got {})", self.m()));
        }
        for (name, v) in [
            ("rate_target_u1", self.rate_target_u1),
            ("rate_target_u2", self.rate_target_u2),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                errs.push(format!("{name} must be finite and >= 0 (got {v})"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams::new(self)
    }
}

/// Quantities that every formula and scheme derives from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub theta1: f64,
    pub theta2: f64,
    /// `max(Ψ(θ2), θ1/a1)`; infinite when the far-user threshold is infeasible.
    pub zeta: f64,
    pub gbar_su1: f64,
    pub gbar_sr: f64,
    pub gbar_ru1: f64,
    pub gbar_ru2: f64,
    pub gbar_si: f64,
    /// `a2/a1 > θ2`.
    pub feasible: bool,
}

impl DerivedParams {
    pub fn new(p: &SystemParams) -> Self {
        let theta1 = 2f64.powf(p.rate_target_u1) - 1.0;
        let theta2 = 2f64.powf(p.rate_target_u2) - 1.0;
        let feasible = p.a2 - p.a1 * theta2 > 0.0;
        let zeta = match psi(theta2, p) {
            Ok(v) => v.max(theta1 / p.a1),
            Err(_) => f64::INFINITY,
        };
        Self {
            theta1,
            theta2,
            zeta,
            gbar_su1: p.rho_s * p.var_su1,
            gbar_sr: p.rho_s * p.var_sr,
            gbar_ru1: p.rho_r * p.k1 * p.var_ru1,
            gbar_ru2: p.rho_r * p.var_ru2,
            gbar_si: p.rho_r * p.var_si,
            feasible,
        }
    }

    /// `Ψ(θ2)`; infinite when infeasible.
    pub fn psi2(&self, p: &SystemParams) -> f64 {
        psi(self.theta2, p).unwrap_or(f64::INFINITY)
    }
}

/// `Ψ(θ) = θ / (a2 − a1 θ)`: the signal-to-(interference+1) ratio a SIC stage
/// needs so that the far user's SINR reaches `θ`.
pub fn psi(theta: f64, p: &SystemParams) -> Result<f64, ModelError> {
    let margin = p.a2 - p.a1 * theta;
    if margin <= 0.0 {
        return Err(ModelError::InfeasibleThreshold { theta, margin });
    }
    Ok(theta / margin)
}

/// One draw of every channel power gain, for all `M` relay antennas.
///
/// Relay antennas are indexed globally `0..M`; the role (receive/transmit) of
/// an index is decided by the partition a scheme works with. Static schemes
/// use receive antennas `0..M_R` and transmit antennas `M_R..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_t: usize,
    m: usize,
    /// BS→U1, length `N_T`.
    pub g_su1: Vec<f64>,
    /// BS→relay, row-major `N_T × M`: `g_sr[i * M + j]`.
    pub g_sr: Vec<f64>,
    /// Relay self-interference, row-major `M × M`: `g_si[k * M + j]` (transmit `k` into receive `j`).
    pub g_si: Vec<f64>,
    /// Relay→U1 inter-user interference, length `M`.
    pub g_ru1: Vec<f64>,
    /// Relay→U2, length `M`.
    pub g_ru2: Vec<f64>,
}

impl ChannelRealization {
    pub fn zeros(n_t: usize, m: usize) -> Self {
        Self {
            n_t,
            m,
            g_su1: vec![0.0; n_t],
            g_sr: vec![0.0; n_t * m],
            g_si: vec![0.0; m * m],
            g_ru1: vec![0.0; m],
            g_ru2: vec![0.0; m],
        }
    }

    /// Builds a realization from explicit arrays; `g_sr` and `g_si` are row-major.
    pub fn from_parts(
        g_su1: Vec<f64>,
        g_sr: Vec<f64>,
        g_si: Vec<f64>,
        g_ru1: Vec<f64>,
        g_ru2: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let n_t = g_su1.len();
        let m = g_ru1.len();
        if n_t == 0 || m == 0 {
            return Err(ModelError::InvalidParams("empty gain arrays".into()));
        }
        if g_ru2.len() != m || g_sr.len() != n_t * m || g_si.len() != m * m {
            return Err(ModelError::InvalidParams(format!(
                "inconsistent shapes: N_T={n_t}, M={m}, |g_sr|={}, |g_si|={}, |g_ru2|={}",
                g_sr.len(),
                g_si.len(),
                g_ru2.len()
            )));
        }
        let all = [&g_su1, &g_sr, &g_si, &g_ru1, &g_ru2];
        if all.iter().any(|v| v.iter().any(|&g| !(g >= 0.0))) {
            return Err(ModelError::InvalidParams("gains must be >= 0".into()));
        }
        Ok(Self {
            n_t,
            m,
            g_su1,
            g_sr,
            g_si,
            g_ru1,
            g_ru2,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// Total relay antenna count.
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn sr(&self, i: usize, j: usize) -> f64 {
        self.g_sr[i * self.m + j]
    }

    #[inline]
    pub fn si(&self, k: usize, j: usize) -> f64 {
        self.g_si[k * self.m + j]
    }

    fn check(&self, what: &'static str, index: usize, len: usize) -> Result<(), ModelError> {
        if index < len {
            Ok(())
        } else {
            Err(ModelError::IndexOutOfRange { what, index, len })
        }
    }
}

// Unchecked kernels shared with the selection and Monte-Carlo hot loops.

#[inline]
pub(crate) fn relay_sinr(a1: f64, a2: f64, g_sr: f64, g_si: f64) -> f64 {
    a2 * g_sr / (a1 * g_sr + g_si + 1.0)
}

#[inline]
pub(crate) fn u1_sic_sinr(a1: f64, a2: f64, g_su1: f64, g_ru1: f64) -> f64 {
    a2 * g_su1 / (a1 * g_su1 + g_ru1 + 1.0)
}

#[inline]
pub(crate) fn u1_sinr(a1: f64, g_su1: f64, g_ru1: f64) -> f64 {
    a1 * g_su1 / (g_ru1 + 1.0)
}

/// SINR at the relay when decoding the far user's symbol from BS antenna `i`
/// on receive antenna `j`, with transmit antenna `k` leaking self-interference.
pub fn sinr_relay(
    real: &ChannelRealization,
    i: usize,
    j: usize,
    k: usize,
    p: &SystemParams,
) -> Result<f64, ModelError> {
    real.check("BS antenna", i, real.n_t)?;
    real.check("relay receive antenna", j, real.m)?;
    real.check("relay transmit antenna", k, real.m)?;
    Ok(relay_sinr(p.a1, p.a2, real.sr(i, j), real.si(k, j)))
}

/// SINR at the near user when it decodes the far user's symbol during SIC.
pub fn sinr_u1_decode_u2(real: &ChannelRealization, i: usize, k: usize, p: &SystemParams) -> Result<f64, ModelError> {
    real.check("BS antenna", i, real.n_t)?;
    real.check("relay transmit antenna", k, real.m)?;
    Ok(u1_sic_sinr(p.a1, p.a2, real.g_su1[i], real.g_ru1[k]))
}

/// SINR of the near user's own symbol after cancelling the far user's.
pub fn sinr_u1(real: &ChannelRealization, i: usize, k: usize, p: &SystemParams) -> Result<f64, ModelError> {
    real.check("BS antenna", i, real.n_t)?;
    real.check("relay transmit antenna", k, real.m)?;
    Ok(u1_sinr(p.a1, real.g_su1[i], real.g_ru1[k]))
}

pub fn snr_u2(real: &ChannelRealization, k: usize) -> Result<f64, ModelError> {
    real.check("relay transmit antenna", k, real.m)?;
    Ok(real.g_ru2[k])
}

/// End-to-end SINR of the far user: the weakest of the near-user SIC stage,
/// the relay decoding stage and the relay→U2 hop.
pub fn sinr_e2e_u2(
    real: &ChannelRealization,
    i: usize,
    j: usize,
    k: usize,
    p: &SystemParams,
) -> Result<f64, ModelError> {
    let g12 = sinr_u1_decode_u2(real, i, k, p)?;
    let gr = sinr_relay(real, i, j, k, p)?;
    let g2 = snr_u2(real, k)?;
    Ok(g12.min(gr).min(g2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(g_su1: f64, g_sr: f64, g_si: f64, g_ru1: f64, g_ru2: f64) -> ChannelRealization {
        ChannelRealization::from_parts(vec![g_su1], vec![g_sr], vec![g_si], vec![g_ru1], vec![g_ru2]).unwrap()
    }

    #[test]
    fn psi_examples() {
        let p = SystemParams::default();
        assert!((psi(1.0, &p).unwrap() - 1.25).abs() < 1e-15);
        assert_eq!(psi(0.0, &p).unwrap(), 0.0);
        assert!(matches!(psi(9.0, &p), Err(ModelError::InfeasibleThreshold { .. })));
    }

    #[test]
    fn relay_sinr_examples() {
        let p = SystemParams::default();
        let r = single(0.0, 10.0, 1.0, 0.0, 0.0);
        assert!((sinr_relay(&r, 0, 0, 0, &p).unwrap() - 3.0).abs() < 1e-12);
        let r = single(0.0, 0.0, 1.0, 0.0, 0.0);
        assert_eq!(sinr_relay(&r, 0, 0, 0, &p).unwrap(), 0.0);
        let r = single(0.0, 1e12, 0.0, 0.0, 0.0);
        let v = sinr_relay(&r, 0, 0, 0, &p).unwrap();
        assert!(v < 9.0 && v > 9.0 - 1e-9);
    }

    #[test]
    fn near_user_examples() {
        let p = SystemParams::default();
        let r = single(20.0, 0.0, 0.0, 1.0, 0.0);
        assert!((sinr_u1_decode_u2(&r, 0, 0, &p).unwrap() - 4.5).abs() < 1e-12);
        assert!((sinr_u1(&r, 0, 0, &p).unwrap() - 1.0).abs() < 1e-12);
        let r = single(10.0, 0.0, 0.0, 0.0, 0.0);
        assert!((sinr_u1_decode_u2(&r, 0, 0, &p).unwrap() - 4.5).abs() < 1e-12);
        let r = single(30.0, 0.0, 0.0, 0.0, 0.0);
        assert!((sinr_u1(&r, 0, 0, &p).unwrap() - 3.0).abs() < 1e-12);
        let r = single(0.0, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(sinr_u1(&r, 0, 0, &p).unwrap(), 0.0);
        assert_eq!(sinr_u1_decode_u2(&r, 0, 0, &p).unwrap(), 0.0);
    }

    #[test]
    fn snr_u2_reads_and_bounds() {
        let r = ChannelRealization::from_parts(vec![1.0], vec![1.0, 1.0], vec![0.0; 4], vec![0.0, 0.0], vec![4.2, 0.0])
            .unwrap();
        assert_eq!(snr_u2(&r, 0).unwrap(), 4.2);
        assert_eq!(snr_u2(&r, 1).unwrap(), 0.0);
        assert!(matches!(
            snr_u2(&r, 2),
            Err(ModelError::IndexOutOfRange { index: 2, len: 2, .. })
        ));
        assert!(sinr_relay(&r, 1, 0, 0, &SystemParams::default()).is_err());
    }

    #[test]
    fn e2e_is_minimum_of_stages() {
        let p = SystemParams::default();
        // γ12 = 4.5, γR = 3.0, γRU2 = 4.2
        let r = single(20.0, 10.0, 1.0, 1.0, 4.2);
        assert!((sinr_e2e_u2(&r, 0, 0, 0, &p).unwrap() - 3.0).abs() < 1e-12);
        let r = single(20.0, 10.0, 1.0, 1.0, 0.0);
        assert_eq!(sinr_e2e_u2(&r, 0, 0, 0, &p).unwrap(), 0.0);
    }

    #[test]
    fn derived_params_reference_values() {
        let p = SystemParams::default();
        let d = p.derived();
        assert_eq!(d.theta1, 1.0);
        assert_eq!(d.theta2, 1.0);
        assert!((d.zeta - 10.0).abs() < 1e-12);
        assert!(d.feasible);
        assert!((d.gbar_ru1 - 100.0 * 0.1 * 0.5).abs() < 1e-12);
        let mut q = p.clone();
        q.rate_target_u2 = 3.4;
        let d = q.derived();
        assert!(!d.feasible);
        assert!(d.zeta.is_infinite());
    }

    #[test]
    fn validation_aggregates() {
        let mut p = SystemParams {
            a1: 0.6,
            a2: 0.4,
            m_t: 0,
            ..SystemParams::default()
        };
        let errs = p.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.contains("a1 < a2 violated")));
        assert!(errs.iter().any(|e| e.contains("m_t")));
        p.a2 = 0.5;
        let errs = p.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.contains("a1 + a2")));
    }

    proptest! {
        #[test]
        fn sic_stages_stay_below_power_ratio(g in 0.0f64..1e9, i in 0.0f64..1e6) {
            let p = SystemParams::default();
            prop_assert!(relay_sinr(p.a1, p.a2, g, i) < p.a2 / p.a1);
            prop_assert!(u1_sic_sinr(p.a1, p.a2, g, i) < p.a2 / p.a1);
        }

        #[test]
        fn sinr_monotone_in_signal_and_interference(
            g in 0.0f64..1e6, dg in 0.0f64..1e6, i in 0.0f64..1e4, di in 0.0f64..1e4,
        ) {
            let p = SystemParams::default();
            prop_assert!(relay_sinr(p.a1, p.a2, g + dg, i) >= relay_sinr(p.a1, p.a2, g, i));
            prop_assert!(relay_sinr(p.a1, p.a2, g, i + di) <= relay_sinr(p.a1, p.a2, g, i));
            prop_assert!(u1_sic_sinr(p.a1, p.a2, g + dg, i) >= u1_sic_sinr(p.a1, p.a2, g, i));
            prop_assert!(u1_sic_sinr(p.a1, p.a2, g, i + di) <= u1_sic_sinr(p.a1, p.a2, g, i));
            prop_assert!(u1_sinr(p.a1, g + dg, i) >= u1_sinr(p.a1, g, i));
            prop_assert!(u1_sinr(p.a1, g, i + di) <= u1_sinr(p.a1, g, i));
        }

        #[test]
        fn e2e_below_each_stage(
            su1 in 0.0f64..1e4, sr in 0.0f64..1e4, si in 0.0f64..1e3, ru1 in 0.0f64..1e3, ru2 in 0.0f64..1e3,
        ) {
            let p = SystemParams::default();
            let r = single(su1, sr, si, ru1, ru2);
            let e = sinr_e2e_u2(&r, 0, 0, 0, &p).unwrap();
            prop_assert!(e <= sinr_u1_decode_u2(&r, 0, 0, &p).unwrap());
            prop_assert!(e <= sinr_relay(&r, 0, 0, 0, &p).unwrap());
            prop_assert!(e <= snr_u2(&r, 0).unwrap());
        }

        #[test]
        fn psi_strictly_increasing(a in 0.0f64..8.99, b in 0.0f64..8.99) {
            prop_assume!(a < b);
            let p = SystemParams::default();
            prop_assert!(psi(a, &p).unwrap() < psi(b, &p).unwrap());
        }
    }
}
