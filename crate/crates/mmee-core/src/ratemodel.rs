//! SINR and rate models: the exact per-realization rate, three deterministic
//! lower bounds that exploit channel hardening, and the energy-efficiency
//! metric with its subtractive (parametric) form.
//!
//! Rates are carried in bits/s throughout. The bounds take only the
//! large-scale gains: with many antennas the beamforming gain concentrates
//! at `M * beta_k` and the per-interferer leakage at `beta_k`, which gives
//!
//! ```text
//! lower_full:      B * log2(1 + M b_k p_k / (b_k * sum_{j!=k} p_j + B N0))
//! lower_high_snr:  B * log2(    M b_k p_k / (b_k * sum_{j!=k} p_j + B N0))
//! lower_low_snr:   B * (a + b * log2(  same ratio  ))
//! ```
//!
//! The high-SNR bound drops the `1 +` and may be negative when the ratio is
//! below one; it is the form used inside the solver. The low-SNR constants
//! `a`, `b` are caller-supplied.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

/// Per-user downlink transmit powers in Watts. Entries are validated
/// non-negative and finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(i) = p.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain(format!(
                "transmit power for user {i} must be finite and >= 0, got {}",
                p[i]
            )));
        }
        Ok(Self { p })
    }

    /// Uniform allocation of `total_w` over `users` users.
    pub fn uniform(users: usize, total_w: f64) -> Result<Self> {
        Self::new(vec![total_w / users as f64; users])
    }

    pub fn watts(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Sum transmit power in W.
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Which rate model produced a [`RateVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// Per-realization Shannon rate from the exact SINR.
    Exact,
    /// Hardening lower bound with the `1 +` kept.
    LowerFull,
    /// High-SNR lower bound (logarithm of the bare ratio).
    LowerHighSnr,
    /// Low-SNR affine approximation of the bound.
    LowerLowSnr,
}

/// Per-user rates in bits/s, tagged with the model that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    pub r: Vec<f64>,
    pub kind: RateKind,
}

impl RateVector {
    pub fn sum(&self) -> f64 {
        self.r.iter().sum()
    }
}

/// Constants of the low-SNR rate approximation: `B * (a + b * log2(ratio))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowSnrParams {
    pub a: f64,
    pub b: f64,
}

impl LowSnrParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Domain(format!("low-SNR slope must be > 0, got {b}")));
        }
        Ok(Self { a, b })
    }
}

/// Exact per-user SINR for one channel realization under its MRT precoders:
///
/// `gamma_k = p_k |g_k^H v_k|^2 / (sum_{j != k} p_j |g_k^H v_j|^2 + B*N0)`.
pub fn exact_sinr(
    ch: &ChannelRealization,
    p: &PowerAllocation,
    bandwidth_hz: f64,
    noise_psd: f64,
) -> Result<Vec<f64>> {
    let k_users = ch.users();
    if p.len() != k_users {
        return Err(Error::Dimension(format!(
            "power vector length {} != channel users {k_users}",
            p.len()
        )));
    }
    let noise = bandwidth_hz * noise_psd;
    let powers = p.watts();

    // |g_k^H v_j|^2 for all pairs.
    let mut cross = vec![vec![0.0f64; k_users]; k_users];
    for k in 0..k_users {
        let gk = ch.g.column(k);
        for j in 0..k_users {
            let vj = ch.v.column(j);
            let inner = gk
                .iter()
                .zip(vj.iter())
                .fold(num_complex::Complex64::ZERO, |acc, (g, v)| acc + g.conj() * v);
            cross[k][j] = inner.norm_sqr();
        }
    }

    let mut gamma = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let signal = powers[k] * cross[k][k];
        let interference: f64 = (0..k_users)
            .filter(|&j| j != k)
            .map(|j| powers[j] * cross[k][j])
            .sum();
        gamma.push(signal / (interference + noise));
    }
    Ok(gamma)
}

/// Shannon rates `B * log2(1 + gamma_k)` in bits/s.
pub fn exact_rate(gamma: &[f64], bandwidth_hz: f64) -> Result<RateVector> {
    if let Some(i) = gamma.iter().position(|&g| !(g >= 0.0)) {
        return Err(Error::Domain(format!("SINR for user {i} must be >= 0, got {}", gamma[i])));
    }
    let r = gamma.iter().map(|&g| bandwidth_hz * (1.0 + g).log2()).collect();
    Ok(RateVector { r, kind: RateKind::Exact })
}

fn check_beta(beta: &[f64], p: &PowerAllocation) -> Result<()> {
    if beta.len() != p.len() {
        return Err(Error::Dimension(format!(
            "gain vector length {} != power vector length {}",
            beta.len(),
            p.len()
        )));
    }
    if let Some(i) = beta.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::Domain(format!(
            "large-scale gain for user {i} must be > 0, got {}",
            beta[i]
        )));
    }
    Ok(())
}

/// The hardening SINR ratio `M b_k p_k / (b_k sum_{j!=k} p_j + B N0)` per user.
fn bound_ratios(
    beta: &[f64],
    p: &PowerAllocation,
    antennas: usize,
    bandwidth_hz: f64,
    noise_psd: f64,
) -> Vec<f64> {
    let noise = bandwidth_hz * noise_psd;
    let total = p.total();
    beta.iter()
        .zip(p.watts())
        .map(|(&b, &pk)| (antennas as f64) * b * pk / (b * (total - pk) + noise))
        .collect()
}

/// Hardening lower bound on the rate, `B * log2(1 + ratio_k)`.
pub fn lb_rate_full(
    beta: &[f64],
    p: &PowerAllocation,
    antennas: usize,
    bandwidth_hz: f64,
    noise_psd: f64,
) -> Result<RateVector> {
    check_beta(beta, p)?;
    let r = bound_ratios(beta, p, antennas, bandwidth_hz, noise_psd)
        .into_iter()
        .map(|x| bandwidth_hz * (1.0 + x).log2())
        .collect();
    Ok(RateVector { r, kind: RateKind::LowerFull })
}

/// High-SNR lower bound, `B * log2(ratio_k)`. Every power must be strictly
/// positive; a zero power would put the logarithm at negative infinity and
/// is reported as a domain error instead.
pub fn lb_rate_high_snr(
    beta: &[f64],
    p: &PowerAllocation,
    antennas: usize,
    bandwidth_hz: f64,
    noise_psd: f64,
) -> Result<RateVector> {
    check_beta(beta, p)?;
    if let Some(i) = p.watts().iter().position(|&x| x == 0.0) {
        return Err(Error::Domain(format!(
            "high-SNR rate bound requires positive power, user {i} has zero power"
        )));
    }
    let r = bound_ratios(beta, p, antennas, bandwidth_hz, noise_psd)
        .into_iter()
        .map(|x| bandwidth_hz * x.log2())
        .collect();
    Ok(RateVector { r, kind: RateKind::LowerHighSnr })
}

/// Low-SNR affine approximation, `B * (a + b * log2(ratio_k))`.
pub fn lb_rate_low_snr(
    beta: &[f64],
    p: &PowerAllocation,
    antennas: usize,
    bandwidth_hz: f64,
    noise_psd: f64,
    params: &LowSnrParams,
) -> Result<RateVector> {
    let high = lb_rate_high_snr(beta, p, antennas, bandwidth_hz, noise_psd)?;
    let r = high
        .r
        .into_iter()
        .map(|rk| bandwidth_hz * params.a + params.b * rk)
        .collect();
    Ok(RateVector { r, kind: RateKind::LowerLowSnr })
}

/// Energy efficiency in bits/Joule:
/// `sum_k r_k / (sum_k p_k + sum_m circuit_power_m)`.
pub fn energy_efficiency(r: &RateVector, p: &PowerAllocation, circuit_power_w: &[f64]) -> Result<f64> {
    if r.r.len() != p.len() {
        return Err(Error::Dimension(format!(
            "rate vector length {} != power vector length {}",
            r.r.len(),
            p.len()
        )));
    }
    let denom = p.total() + circuit_power_w.iter().sum::<f64>();
    if !(denom > 0.0) {
        return Err(Error::DegeneratePower);
    }
    Ok(r.sum() / denom)
}

/// Subtractive objective of the parametric (fractional-to-root) transform:
/// `F = sum_k r_k - q * (sum_k p_k + sum_m circuit_power_m)` in bits/s.
///
/// `F` is zero exactly when `q` equals the energy efficiency of the same
/// operating point.
pub fn subtractive_objective(
    r: &RateVector,
    p: &PowerAllocation,
    circuit_power_w: &[f64],
    q: f64,
) -> Result<f64> {
    if r.r.len() != p.len() {
        return Err(Error::Dimension(format!(
            "rate vector length {} != power vector length {}",
            r.r.len(),
            p.len()
        )));
    }
    Ok(r.sum() - q * (p.total() + circuit_power_w.iter().sum::<f64>()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{compose_channel, sample_fast_fading, LargeScale};
    use ndarray::Array2;
    use num_complex::Complex64;

    fn alloc(p: &[f64]) -> PowerAllocation {
        PowerAllocation::new(p.to_vec()).unwrap()
    }

    #[test]
    fn rejects_negative_power() {
        assert!(PowerAllocation::new(vec![0.1, -0.2]).is_err());
        assert!(PowerAllocation::new(vec![0.1, f64::NAN]).is_err());
    }

    #[test]
    fn single_user_sinr_has_no_interference() {
        // Under MRT, |g^H v| = ||g||, so gamma = p ||g||^2 / (B N0).
        let h = sample_fast_fading(8, 1, 1).unwrap();
        let ls = LargeScale { beta: vec![2.0], distances: vec![10.0] };
        let ch = compose_channel(&h, &ls).unwrap();
        let p = alloc(&[0.3]);
        let gamma = exact_sinr(&ch, &p, 2.0, 0.5).unwrap();
        let g_norm_sq: f64 = ch.g.column(0).iter().map(|x| x.norm_sqr()).sum();
        let expected = 0.3 * g_norm_sq / (2.0 * 0.5);
        assert!((gamma[0] - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn orthogonal_columns_have_zero_cross_terms() {
        let mut g = Array2::<Complex64>::zeros((4, 2));
        g[(0, 0)] = Complex64::new(2.0, 0.0);
        g[(1, 1)] = Complex64::new(3.0, 0.0);
        let ls = LargeScale { beta: vec![1.0, 1.0], distances: vec![1.0, 1.0] };
        // Feed g through composition with unit gains to get matching V.
        let ch = compose_channel(&g, &ls).unwrap();
        let p = alloc(&[0.5, 0.25]);
        let gamma = exact_sinr(&ch, &p, 1.0, 1.0).unwrap();
        assert!((gamma[0] - 0.5 * 4.0 / 1.0).abs() < 1e-12);
        assert!((gamma[1] - 0.25 * 9.0 / 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_matches_dense_reference() {
        // Independent evaluation with explicit complex arithmetic.
        let h = sample_fast_fading(4, 2, 77).unwrap();
        let ls = LargeScale { beta: vec![1.3, 0.4], distances: vec![1.0, 1.0] };
        let ch = compose_channel(&h, &ls).unwrap();
        let p = alloc(&[0.1, 0.2]);
        let gamma = exact_sinr(&ch, &p, 1.0, 1.0).unwrap();

        for k in 0..2 {
            let mut signal = Complex64::ZERO;
            for row in 0..4 {
                signal += ch.g[(row, k)].conj() * ch.v[(row, k)];
            }
            let j = 1 - k;
            let mut cross = Complex64::ZERO;
            for row in 0..4 {
                cross += ch.g[(row, k)].conj() * ch.v[(row, j)];
            }
            let expected =
                p.watts()[k] * signal.norm_sqr() / (p.watts()[j] * cross.norm_sqr() + 1.0);
            assert!((gamma[k] - expected).abs() / expected < 1e-12);
        }
    }

    #[test]
    fn exact_rate_reference_points() {
        let r = exact_rate(&[0.0], 5.0).unwrap();
        assert_eq!(r.r[0], 0.0);
        let r = exact_rate(&[1.0], 1.0).unwrap();
        assert!((r.r[0] - 1.0).abs() < 1e-15);
        let r = exact_rate(&[127.0], 120_000.0).unwrap();
        assert!((r.r[0] - 840_000.0).abs() < 1e-6);
        assert!(exact_rate(&[-0.1], 1.0).is_err());
    }

    #[test]
    fn full_bound_reference_points() {
        // Zero power gives a zero bound.
        let r = lb_rate_full(&[1.0, 1.0], &alloc(&[0.0, 1.0]), 32, 1.0, 1.0).unwrap();
        assert_eq!(r.r[0], 0.0);
        // Single user, unit everything, 128 antennas: log2(129).
        let r = lb_rate_full(&[1.0], &alloc(&[1.0]), 128, 1.0, 1.0).unwrap();
        assert!((r.r[0] - 129f64.log2()).abs() < 1e-12);
        assert!(lb_rate_full(&[0.0], &alloc(&[1.0]), 4, 1.0, 1.0).is_err());
    }

    #[test]
    fn high_snr_bound_reference_points() {
        let r = lb_rate_high_snr(&[1.0], &alloc(&[1.0]), 128, 1.0, 1.0).unwrap();
        assert!((r.r[0] - 7.0).abs() < 1e-12);
        // Symmetric two-user interference-only case: powers cancel.
        let r = lb_rate_high_snr(&[1.0, 1.0], &alloc(&[0.4, 0.4]), 128, 120e3, 0.0).unwrap();
        for &rk in &r.r {
            assert!((rk - 840_000.0).abs() < 1e-6);
        }
        assert!(lb_rate_high_snr(&[1.0], &alloc(&[0.0]), 128, 1.0, 1.0).is_err());
    }

    #[test]
    fn low_snr_bound_is_affine_in_high_snr_bound() {
        let beta = [1.0];
        let p = alloc(&[1.0]);
        let identity = LowSnrParams::new(0.0, 1.0).unwrap();
        let high = lb_rate_high_snr(&beta, &p, 128, 1.0, 1.0).unwrap();
        let low = lb_rate_low_snr(&beta, &p, 128, 1.0, 1.0, &identity).unwrap();
        assert_eq!(low.r, high.r);

        let shifted = LowSnrParams::new(1.0, 1.0).unwrap();
        let low = lb_rate_low_snr(&beta, &p, 128, 1.0, 1.0, &shifted).unwrap();
        assert!((low.r[0] - 8.0).abs() < 1e-12);

        let scaled = LowSnrParams::new(0.5, 0.75).unwrap();
        let low = lb_rate_low_snr(&beta, &p, 128, 1.0, 1.0, &scaled).unwrap();
        assert!((low.r[0] - 5.75).abs() < 1e-12);

        assert!(LowSnrParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn high_snr_bound_never_exceeds_full_bound() {
        let beta = [2e-10, 5e-11, 1e-9];
        let p = alloc(&[0.02, 0.3, 0.001]);
        let full = lb_rate_full(&beta, &p, 64, 120e3, 1e-20).unwrap();
        let high = lb_rate_high_snr(&beta, &p, 64, 120e3, 1e-20).unwrap();
        for (h, f) in high.r.iter().zip(full.r.iter()) {
            assert!(h <= f);
        }
    }

    #[test]
    fn energy_efficiency_reference_points() {
        let p = alloc(&[0.5, 0.5]);
        let r = RateVector { r: vec![840e3, 840e3], kind: RateKind::Exact };
        let pc = vec![0.01; 128];
        let ee = energy_efficiency(&r, &p, &pc).unwrap();
        assert!((ee - 1_680_000.0 / 2.28).abs() < 1e-6);

        let zero = RateVector { r: vec![0.0, 0.0], kind: RateKind::Exact };
        assert_eq!(energy_efficiency(&zero, &p, &pc).unwrap(), 0.0);

        // Circuit power only in the denominator.
        let idle = alloc(&[0.0, 0.0]);
        let r = RateVector { r: vec![500e3, 140e3], kind: RateKind::Exact };
        let ee = energy_efficiency(&r, &idle, &pc).unwrap();
        assert!((ee - 640e3 / 1.28).abs() < 1e-9);

        assert!(matches!(
            energy_efficiency(&zero, &idle, &[]),
            Err(Error::DegeneratePower)
        ));
    }

    #[test]
    fn subtractive_objective_reference_points() {
        let p = alloc(&[0.4, 0.6]);
        let r = RateVector { r: vec![1.0e6, 0.68e6], kind: RateKind::LowerHighSnr };
        let pc = vec![0.01; 128];

        // q = 0 disables the transform.
        assert_eq!(subtractive_objective(&r, &p, &pc, 0.0).unwrap(), r.sum());

        // Root identity at q = EE.
        let q = energy_efficiency(&r, &p, &pc).unwrap();
        let f = subtractive_objective(&r, &p, &pc, q).unwrap();
        assert!(f.abs() < 1e-9 * r.sum());

        // Direct arithmetic.
        let f = subtractive_objective(&r, &p, &pc, 5e5).unwrap();
        assert!((f - (1.68e6 - 5e5 * 2.28)).abs() < 1e-6);
    }

    #[test]
    fn high_snr_bound_is_monotone_in_powers() {
        // Increasing own power raises the rate; increasing another user's
        // power lowers it (finite-difference probes).
        let beta = [3e-10, 8e-11, 1.5e-10];
        let base = alloc(&[0.05, 0.02, 0.08]);
        let r0 = lb_rate_high_snr(&beta, &base, 128, 120e3, 1e-20).unwrap();
        let eps = 1e-6;
        for k in 0..3 {
            let mut up = base.watts().to_vec();
            up[k] += eps;
            let r1 = lb_rate_high_snr(&beta, &alloc(&up), 128, 120e3, 1e-20).unwrap();
            assert!(r1.r[k] > r0.r[k], "own-power monotonicity failed for user {k}");
            for j in 0..3 {
                if j != k {
                    assert!(r1.r[j] < r0.r[j], "cross-power monotonicity failed {k}->{j}");
                }
            }
        }
    }
}
