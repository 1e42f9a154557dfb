//! Simulation of `X_t = N ∘ X_{t-1} + eps_t` with reproducible streams.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Geometric, Poisson};
use serde::Serialize;

use crate::catalog::InarModel;
use crate::decompose::{InnovationDistribution, TabulatedPmf};
use crate::pgf::ThinningOperator;
use crate::{Error, Result};

/// One ChaCha8 stream; `(seed, stream)` pairs give independent sequences.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Inverse-CDF draw from a table with a geometric tail of the given ratio.
fn inverse_cdf(cdf: &[f64], tail_ratio: f64, rng: &mut RngStream) -> u64 {
    let u = rng.uniform();
    let idx = cdf.partition_point(|&c| c <= u);
    if idx < cdf.len() {
        return idx as u64;
    }
    let last = cdf.len() as u64 - 1;
    if !(tail_ratio > 0.0 && tail_ratio < 1.0) {
        return last;
    }
    let extra = Geometric::new(1.0 - tail_ratio).expect("ratio in (0, 1)").sample(rng.rng());
    last + 1 + extra
}

pub fn sample_innovation(d: &InnovationDistribution<f64>, rng: &mut RngStream) -> u64 {
    let s = d.tail_s();
    let ratio = if s > 1.0 { 1.0 / s } else { 0.0 };
    inverse_cdf(d.cdf(), ratio, rng)
}

pub fn sample_tabulated(t: &TabulatedPmf<f64>, rng: &mut RngStream) -> u64 {
    inverse_cdf(t.cdf(), t.tail_ratio(), rng)
}

/// Draws `N ∘ x`.
pub fn apply_thinning(x: u64, thinning: &ThinningOperator<f64>, rng: &mut RngStream) -> u64 {
    match *thinning {
        _ if x == 0 || thinning.alpha() == 0.0 => 0,
        ThinningOperator::Binomial { alpha } => {
            Binomial::new(x, alpha).expect("alpha in [0, 1)").sample(rng.rng())
        }
        ThinningOperator::NegativeBinomial { alpha } => {
            // sum of x geometric(mean alpha) counts = Poisson(Gamma(x, alpha))
            let lambda = Gamma::new(x as f64, alpha).expect("positive shape").sample(rng.rng());
            if lambda <= 0.0 {
                0
            } else {
                Poisson::new(lambda).expect("positive rate").sample(rng.rng()) as u64
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { n: 1000, burn_in: 100, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSample {
    pub seed: u64,
    pub stream: u64,
    pub values: Vec<u64>,
}

impl SeriesSample {
    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&x| x as f64).sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let n = self.values.len() as f64;
        self.values.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    pub fn lag1_autocorrelation(&self) -> f64 {
        let m = self.mean();
        let dev: Vec<f64> = self.values.iter().map(|&x| x as f64 - m).collect();
        let num: f64 = dev.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = dev.iter().map(|d| d * d).sum();
        num / den
    }

    /// Relative frequencies of `0..=max`.
    pub fn frequencies(&self) -> Vec<f64> {
        let max = self.values.iter().copied().max().unwrap_or(0) as usize;
        let mut f = vec![0.0; max + 1];
        for &x in &self.values {
            f[x as usize] += 1.0;
        }
        let n = self.values.len() as f64;
        f.iter_mut().for_each(|v| *v /= n);
        f
    }
}

/// Simulates one path: `X_0` from the stationary marginal, `burn_in`
/// discarded steps, then `n` recorded values.
pub fn simulate_series(model: &InarModel, cfg: &SimulationConfig, stream: u64) -> Result<SeriesSample> {
    if cfg.n < 2 {
        return Err(Error::InvalidParameter("series length must be at least 2".into()));
    }
    let mut rng = RngStream::new(cfg.seed, stream);
    let thinning = model.thinning();
    let mut x = sample_tabulated(&model.marginal, &mut rng);
    let step = |x: u64, rng: &mut RngStream| {
        apply_thinning(x, &thinning, rng) + sample_innovation(&model.innovation, rng)
    };
    for _ in 0..cfg.burn_in {
        x = step(x, &mut rng);
    }
    let mut values = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        values.push(x);
        x = step(x, &mut rng);
    }
    Ok(SeriesSample { seed: cfg.seed, stream, values })
}

/// Replicate `i` uses stream `i`, so results do not depend on the thread count.
pub fn simulate_replicates(model: &InarModel, cfg: &SimulationConfig, count: usize) -> Result<Vec<SeriesSample>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(count.max(1));
    let mut out: Vec<Option<Result<SeriesSample>>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in out.chunks_mut(count.div_ceil(workers).max(1)).enumerate() {
            let base = w * count.div_ceil(workers).max(1);
            scope.spawn(move || {
                for (j, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(simulate_series(model, cfg, (base + j) as u64));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("every replicate ran")).collect()
}

/// CSV with header `t,x` for one replicate, `replicate,t,x` for several.
pub fn write_csv<W: Write>(samples: &[SeriesSample], mut w: W) -> std::io::Result<()> {
    if samples.len() == 1 {
        writeln!(w, "t,x")?;
        for (t, x) in samples[0].values.iter().enumerate() {
            writeln!(w, "{t},{x}")?;
        }
    } else {
        writeln!(w, "replicate,t,x")?;
        for s in samples {
            for (t, x) in s.values.iter().enumerate() {
                writeln!(w, "{},{t},{x}", s.stream)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_model, CatalogModel};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 0);
        let mut b = RngStream::new(7, 0);
        let mut c = RngStream::new(7, 1);
        let xa: Vec<f64> = (0..5).map(|_| a.uniform()).collect();
        let xb: Vec<f64> = (0..5).map(|_| b.uniform()).collect();
        let xc: Vec<f64> = (0..5).map(|_| c.uniform()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn thinning_means() {
        let mut rng = RngStream::new(1, 0);
        let n = 20_000;
        for t in [ThinningOperator::Binomial { alpha: 0.4 }, ThinningOperator::NegativeBinomial { alpha: 0.4 }] {
            let total: u64 = (0..n).map(|_| apply_thinning(10, &t, &mut rng)).sum();
            let mean = total as f64 / n as f64;
            assert!((mean - 4.0).abs() < 0.1, "{t:?}: {mean}");
        }
        assert_eq!(apply_thinning(0, &ThinningOperator::NegativeBinomial { alpha: 0.4 }, &mut rng), 0);
    }

    #[test]
    fn innovation_frequencies() {
        let m = build_model(&CatalogModel::Ginar { theta: 0.5, alpha: 0.5 }).unwrap();
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let zeros = (0..n).filter(|_| sample_innovation(&m.innovation, &mut rng) == 0).count();
        assert!((zeros as f64 / n as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn replicates_match_single_runs() {
        let m = build_model(&CatalogModel::Nginar { mu: 1.0, alpha: 0.3 }).unwrap();
        let cfg = SimulationConfig { n: 50, burn_in: 10, seed: 11 };
        let reps = simulate_replicates(&m, &cfg, 5).unwrap();
        for (i, r) in reps.iter().enumerate() {
            assert_eq!(r, &simulate_series(&m, &cfg, i as u64).unwrap());
        }
    }

    #[test]
    fn csv_layout() {
        let s = SeriesSample { seed: 0, stream: 0, values: vec![3, 1] };
        let mut buf = Vec::new();
        write_csv(&[s], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,x\n0,3\n1,1\n");
    }
}
