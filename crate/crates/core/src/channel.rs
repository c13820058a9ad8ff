//! i.i.d. Rayleigh-fading channel draws.
//!
//! Under Rayleigh fading every power gain `ρ|h|²` is exponential with mean
//! `ρσ²`. Draws come from a ChaCha8 stream addressed by `(seed, stream_id)`,
//! and the generator can seek to any draw index in O(1). A Monte-Carlo chunk
//! can therefore regenerate its realizations without coordinating with other
//! workers.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{ChannelRealization, DerivedParams, SystemParams};

/// Mean of each gain family, cached from [`DerivedParams`].
#[derive(Debug, Clone, Copy)]
struct GainMeans {
    su1: f64,
    sr: f64,
    si: f64,
    ru1: f64,
    ru2: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    n_t: usize,
    m: usize,
    means: GainMeans,
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl ChannelGenerator {
    pub fn new(params: &SystemParams, seed: u64, stream_id: u64) -> Self {
        let d: DerivedParams = params.derived();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            n_t: params.n_t,
            m: params.m(),
            means: GainMeans {
                su1: d.gbar_su1,
                sr: d.gbar_sr,
                si: d.gbar_si,
                ru1: d.gbar_ru1,
                ru2: d.gbar_ru2,
            },
            seed,
            stream_id,
            rng,
        }
    }

    /// Same seed and parameters on a different sub-stream.
    pub fn with_stream(&self, stream_id: u64) -> Self {
        let mut g = self.clone();
        g.stream_id = stream_id;
        g.rng = ChaCha8Rng::seed_from_u64(self.seed);
        g.rng.set_stream(stream_id);
        g
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 64-bit words one realization consumes.
    fn words_per_draw(&self) -> u64 {
        (self.n_t + self.n_t * self.m + self.m * self.m + 2 * self.m) as u64
    }

    /// Positions the stream so that the next [`draw`](Self::draw) returns draw number `index`.
    pub fn seek(&mut self, index: u64) {
        // ChaCha word positions count 32-bit words.
        self.rng
            .set_word_pos(u128::from(index) * u128::from(self.words_per_draw()) * 2);
    }

    pub fn draw(&mut self) -> ChannelRealization {
        let mut real = ChannelRealization::zeros(self.n_t, self.m);
        self.draw_into(&mut real);
        real
    }

    /// Overwrites `real` with the next draw; `real` must have this generator's shape.
    pub fn draw_into(&mut self, real: &mut ChannelRealization) {
        debug_assert_eq!(real.n_t(), self.n_t);
        debug_assert_eq!(real.m(), self.m);
        let GainMeans { su1, sr, si, ru1, ru2 } = self.means;
        let rng = &mut self.rng;
        fill_exponential(rng, &mut real.g_su1, su1);
        fill_exponential(rng, &mut real.g_sr, sr);
        fill_exponential(rng, &mut real.g_si, si);
        fill_exponential(rng, &mut real.g_ru1, ru1);
        fill_exponential(rng, &mut real.g_ru2, ru2);
    }
}

/// Uniform on `[0, 1)` with 53 random mantissa bits.
#[inline]
pub(crate) fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential variate with the given mean by inversion: `−mean·ln(1 − U)`.
#[inline]
pub(crate) fn exponential(rng: &mut impl RngCore, mean: f64) -> f64 {
    -mean * (-unit_uniform(rng)).ln_1p()
}

fn fill_exponential(rng: &mut impl RngCore, out: &mut [f64], mean: f64) {
    for g in out {
        *g = exponential(rng, mean);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho: f64) -> SystemParams {
        SystemParams {
            rho_s: rho,
            rho_r: rho,
            ..SystemParams::default()
        }
    }

    #[test]
    fn sample_means_match_exponential_means() {
        let p = params(10.0);
        let mut gen = ChannelGenerator::new(&p, 7, 0);
        let mut real = gen.draw();
        let n = 1_000_000;
        let (mut su1, mut ru1, mut below) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            gen.draw_into(&mut real);
            su1 += real.g_su1[0];
            ru1 += real.g_ru1[0];
            below += usize::from(real.sr(0, 0) <= 10.0);
        }
        let n = n as f64;
        assert!((su1 / n - 10.0).abs() < 0.03, "mean g_su1 = {}", su1 / n);
        assert!((ru1 / n - 0.5).abs() < 0.002, "mean g_ru1 = {}", ru1 / n);
        let cdf = below as f64 / n;
        assert!((cdf - (1.0 - (-1f64).exp())).abs() < 0.002, "cdf at mean = {cdf}");
    }

    /// Kolmogorov–Smirnov distance of every gain family against its exponential CDF.
    #[test]
    fn ks_statistic_below_one_percent_critical_value() {
        let p = params(10.0).with_antennas(2, 2, 2);
        let d = p.derived();
        let mut gen = ChannelGenerator::new(&p, 11, 3);
        let n = 100_000;
        let mut families: Vec<(Vec<f64>, f64)> = vec![
            (Vec::with_capacity(n), d.gbar_su1),
            (Vec::with_capacity(n), d.gbar_sr),
            (Vec::with_capacity(n), d.gbar_si),
            (Vec::with_capacity(n), d.gbar_ru1),
            (Vec::with_capacity(n), d.gbar_ru2),
        ];
        for _ in 0..n {
            let r = gen.draw();
            families[0].0.push(r.g_su1[1]);
            families[1].0.push(r.sr(1, 2));
            families[2].0.push(r.si(3, 0));
            families[3].0.push(r.g_ru1[2]);
            families[4].0.push(r.g_ru2[3]);
        }
        let critical = 1.628 / (n as f64).sqrt();
        for (mut xs, mean) in families {
            xs.sort_by(f64::total_cmp);
            let nf = n as f64;
            let ks = xs
                .iter()
                .enumerate()
                .map(|(idx, &x)| {
                    let f = 1.0 - (-x / mean).exp();
                    (f - idx as f64 / nf).abs().max(((idx + 1) as f64 / nf - f).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < critical, "KS {ks} >= {critical} for mean {mean}");
        }
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let p = params(1.0);
        let mut gen = ChannelGenerator::new(&p, 5, 0);
        let n = 200_000;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let r = gen.draw();
            a.push(r.g_su1[0]);
            b.push(r.g_ru2[1]);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n as f64;
        let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (var(&a, ma) * var(&b, mb)).sqrt();
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn reproducible_and_seekable() {
        let p = params(100.0).with_antennas(3, 2, 2);
        let mut g1 = ChannelGenerator::new(&p, 42, 9);
        let mut g2 = ChannelGenerator::new(&p, 42, 9);
        let seq1: Vec<_> = (0..20).map(|_| g1.draw()).collect();
        let seq2: Vec<_> = (0..20).map(|_| g2.draw()).collect();
        assert_eq!(seq1, seq2);
        let mut g3 = ChannelGenerator::new(&p, 42, 9);
        g3.seek(13);
        assert_eq!(g3.draw(), seq1[13]);
        let mut other = g1.with_stream(10);
        other.seek(0);
        assert_ne!(other.draw(), seq1[0]);
    }

    #[test]
    fn gains_are_nonnegative_and_finite() {
        let p = params(1e6);
        let mut gen = ChannelGenerator::new(&p, 0, 0);
        for _ in 0..10_000 {
            let r = gen.draw();
            for v in [&r.g_su1, &r.g_sr, &r.g_si, &r.g_ru1, &r.g_ru2] {
                assert!(v.iter().all(|g| *g >= 0.0 && g.is_finite()));
            }
        }
    }
}
