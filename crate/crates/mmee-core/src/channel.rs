//! Seeded channel generation: user placement, large-scale gains, Rayleigh
//! fast fading, channel composition, and MRT precoding.
//!
//! The composed channel is `G = H * diag(sqrt(beta))`, where `H` has i.i.d.
//! circularly-symmetric unit-variance complex Gaussian entries and
//! `beta_k = phi * varsigma_k / d_k^alpha` combines path loss and log-normal
//! shadowing. The MRT precoder normalizes each composed column to unit norm.
//!
//! All sampling is deterministic in `(config, seed)`. A single seed feeds
//! three independent sub-streams (placement, shadowing, fast fading), so
//! e.g. changing the antenna count does not perturb user positions.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// RNG sub-stream indices; one master seed, independent streams per purpose.
const STREAM_PLACEMENT: u64 = 0;
const STREAM_SHADOWING: u64 = 1;
const STREAM_FAST_FADING: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Large-scale channel gains for one user drop.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    /// Linear power gains `beta_k > 0`, one per user.
    pub beta: Vec<f64>,
    /// Base-station-to-user distances in meters (provenance record).
    pub distances: Vec<f64>,
}

/// One fast-fading realization together with its composed channel and
/// MRT precoders.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Fast-fading matrix, `antennas x users`, unit-variance entries.
    pub h: Array2<Complex64>,
    /// Composed channel `G = H * diag(sqrt(beta))`.
    pub g: Array2<Complex64>,
    /// MRT precoding matrix; every column has unit L2 norm.
    pub v: Array2<Complex64>,
    /// The large-scale gains used in the composition.
    pub large_scale: LargeScale,
}

impl ChannelRealization {
    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }
}

/// Linear path gain `phi * varsigma / d^alpha`.
pub(crate) fn path_gain(phi: f64, varsigma: f64, distance_m: f64, alpha: f64) -> f64 {
    phi * varsigma / distance_m.powf(alpha)
}

/// Draw user positions and shadowing, returning per-user large-scale gains.
///
/// Users are placed uniformly over the annulus area between
/// `config.min_distance_m` and `config.cell_radius_m`; shadowing is drawn
/// once per user with `10*log10(varsigma) ~ Normal(0, shadowing_variance_db)`.
/// Deterministic in `(config, seed)`.
pub fn sample_large_scale(config: &SystemConfig, seed: u64) -> Result<LargeScale> {
    config.validate()?;
    let k = config.users;

    let mut placement = stream_rng(seed, STREAM_PLACEMENT);
    let mut shadowing = stream_rng(seed, STREAM_SHADOWING);

    let d_min2 = config.min_distance_m * config.min_distance_m;
    let d_max2 = config.cell_radius_m * config.cell_radius_m;
    let shadow_std_db = config.shadowing_variance_db.sqrt();

    let mut beta = Vec::with_capacity(k);
    let mut distances = Vec::with_capacity(k);
    for _ in 0..k {
        // Uniform over area: d = sqrt(d_min^2 + u * (R^2 - d_min^2)).
        let u: f64 = placement.random();
        let d = (d_min2 + u * (d_max2 - d_min2)).sqrt();
        let z: f64 = StandardNormal.sample(&mut shadowing);
        let sh_db = shadow_std_db * z;
        let varsigma = 10f64.powf(sh_db / 10.0);
        distances.push(d);
        beta.push(path_gain(config.gain_constant, varsigma, d, config.path_loss_exponent));
    }
    Ok(LargeScale { beta, distances })
}

/// Draw an `antennas x users` fast-fading matrix with i.i.d. CN(0,1)
/// entries (variance 1/2 per real and imaginary component), column by
/// column. Deterministic in `(m, k, seed)`.
pub fn sample_fast_fading(m: usize, k: usize, seed: u64) -> Result<Array2<Complex64>> {
    if m < 1 || k < 1 {
        return Err(Error::Dimension(format!("matrix dimensions must be >= 1, got {m}x{k}")));
    }
    let mut rng = stream_rng(seed, STREAM_FAST_FADING);
    let mut h = Array2::<Complex64>::zeros((m, k));
    for col in 0..k {
        for row in 0..m {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            h[(row, col)] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    Ok(h)
}

/// Scale the fast-fading columns by `sqrt(beta_k)` and attach MRT precoders.
pub fn compose_channel(h: &Array2<Complex64>, large_scale: &LargeScale) -> Result<ChannelRealization> {
    if h.ncols() != large_scale.beta.len() {
        return Err(Error::Dimension(format!(
            "channel has {} columns but {} large-scale gains",
            h.ncols(),
            large_scale.beta.len()
        )));
    }
    if let Some(i) = large_scale.beta.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::Domain(format!(
            "large-scale gain for user {i} must be > 0, got {}",
            large_scale.beta[i]
        )));
    }

    let mut g = h.clone();
    for (col, &b) in large_scale.beta.iter().enumerate() {
        let scale = b.sqrt();
        g.column_mut(col).mapv_inplace(|x| x * scale);
    }
    let v = mrt_precoder(&g)?;
    Ok(ChannelRealization { h: h.clone(), g, v, large_scale: large_scale.clone() })
}

/// Build the MRT precoding matrix by normalizing each column of `g` to
/// unit L2 norm. Fails on a zero column.
pub fn mrt_precoder(g: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let mut v = g.clone();
    for col in 0..g.ncols() {
        let norm = g.column(col).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::DegenerateChannel { column: col });
        }
        v.column_mut(col).mapv_inplace(|x| x / norm);
    }
    Ok(v)
}
