//! Test signals, noise, quality metrics and block extraction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};
use crate::linops::norm2;

pub const DEFAULT_CANTOR_DEPTH: u32 = 12;
pub const DEFAULT_BLOCK_THRESHOLD: f64 = 0.01;
/// Reported in place of an infinite SNR.
pub const SNR_CAP_DB: f64 = 300.0;

/// Samples of the Cantor function at `t_k = k/(n-1)`, from the first
/// `depth` ternary digits of each `t_k`. Digits are extracted in exact
/// integer arithmetic so plateaus come out exactly flat.
pub fn cantor_signal(n: usize, depth: u32) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "Cantor signal needs n >= 2, got {n}"
        )));
    }
    if depth < 1 {
        return Err(Error::Parameter("Cantor depth must be >= 1".into()));
    }
    let den = (n - 1) as u64;
    Ok((0..n as u64)
        .map(|k| cantor_rational(k, den, depth))
        .collect())
}

/// Cantor function at `num/den` in `[0, 1]`.
fn cantor_rational(num: u64, den: u64, depth: u32) -> f64 {
    if num >= den {
        return 1.0;
    }
    let mut rem = num;
    let mut value = 0.0;
    let mut scale = 0.5;
    for _ in 0..depth {
        rem *= 3;
        let digit = rem / den;
        rem %= den;
        match digit {
            0 => {}
            1 => return value + scale,
            _ => value += scale,
        }
        scale *= 0.5;
    }
    value
}

/// `x + ε` with Gaussian `ε` rescaled so that `10 log10(‖x‖²/‖ε‖²)` equals
/// `target_snr_db` for this realization.
pub fn add_awgn(x: &[f64], target_snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    let noise = awgn(x, target_snr_db, seed)?;
    Ok(x.iter().zip(&noise).map(|(a, e)| a + e).collect())
}

/// The noise vector [`add_awgn`] adds.
pub fn awgn(x: &[f64], target_snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    let signal = norm2(x);
    if signal == 0.0 {
        return Err(Error::ZeroSignal);
    }
    if !target_snr_db.is_finite() {
        return Err(Error::Parameter(format!(
            "target SNR must be finite, got {target_snr_db}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..x.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let scale = signal / (norm2(&noise) * 10f64.powf(target_snr_db / 20.0));
    noise.iter_mut().for_each(|e| *e *= scale);
    Ok(noise)
}

/// Replaces a `density` fraction of the samples, chosen at random, with
/// `lo` or `hi` in equal proportion.
pub fn add_salt_and_pepper(
    x: &[f64],
    density: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Parameter(format!(
            "noise density must be in [0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.shuffle(&mut rng);
    let hit = (density * x.len() as f64).round() as usize;
    let mut out = x.to_vec();
    for (i, &k) in idx[..hit].iter().enumerate() {
        out[k] = if i % 2 == 0 { lo } else { hi };
    }
    Ok(out)
}

/// `10 log10(‖x‖² / ‖x − x̂‖²)` in dB; `+∞` for a perfect estimate.
pub fn snr(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_len("estimate", x_hat.len(), x.len())?;
    let signal: f64 = x.iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let err: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / err).log10())
}

/// Start indices of blocks inferred from jumps in the latent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    boundaries: Vec<usize>,
}

impl BlockPartition {
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
    pub fn num_blocks(&self) -> usize {
        self.boundaries.len()
    }
    /// `(start, end)` pairs, end exclusive, for a vector of length `len`.
    pub fn ranges(&self, len: usize) -> Vec<(usize, usize)> {
        let mut ends: Vec<usize> = self.boundaries[1..].to_vec();
        ends.push(len);
        self.boundaries.iter().copied().zip(ends).collect()
    }
}

/// A block starts at `k + 1` wherever `|σ_{k+1} − σ_k| > threshold · max σ`.
pub fn extract_blocks(sigma: &[f64], threshold: f64) -> Result<BlockPartition> {
    if sigma.is_empty() {
        return Err(Error::Dimension(
            "cannot extract blocks from an empty vector".into(),
        ));
    }
    if !(threshold > 0.0) {
        return Err(Error::Parameter(format!(
            "block threshold must be > 0, got {threshold}"
        )));
    }
    let peak = sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = threshold * peak;
    let mut boundaries = vec![0];
    for (k, pair) in sigma.windows(2).enumerate() {
        if (pair[1] - pair[0]).abs() > cut {
            boundaries.push(k + 1);
        }
    }
    Ok(BlockPartition { boundaries })
}
