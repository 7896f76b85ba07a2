//! System configuration: physical and constraint parameters.
//!
//! All values are stored in SI units (W, Hz, bits/s, meters). Config files
//! use the conventional units of the domain (dBm/Hz for noise density,
//! bit/s/Hz for spectral-efficiency targets) and are converted on load; see
//! [`crate::experiment::load_config`].

use crate::error::{Error, Result};

/// Convert a dBm quantity to Watts: `10^((x - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert Watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// All physical and constraint parameters of the downlink scenario.
///
/// A base station with `antennas` elements serves `users` single-antenna
/// users on one resource block of bandwidth `bandwidth_hz`. Large-scale
/// channel gains follow a distance power law with log-normal shadowing;
/// users are dropped uniformly over the annulus between `min_distance_m`
/// and `cell_radius_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of base-station antennas (M).
    pub antennas: usize,
    /// Number of single-antenna users (K).
    pub users: usize,
    /// Resource-block bandwidth in Hz (B).
    pub bandwidth_hz: f64,
    /// Noise power spectral density in W/Hz (N0). Noise power per resource
    /// block is `bandwidth_hz * noise_psd`.
    pub noise_psd: f64,
    /// Per-antenna circuit power in W, length `antennas`.
    pub circuit_power_w: Vec<f64>,
    /// Maximum sum transmit power in W (the C1 budget).
    pub max_sum_power_w: f64,
    /// Per-user minimum rate in bits/s, length `users` (the C2 targets).
    pub min_rate_bps: Vec<f64>,
    /// Cell radius in meters.
    pub cell_radius_m: f64,
    /// Minimum base-station-to-user distance in meters. Not part of the
    /// original scenario description; it prevents an unbounded path gain as
    /// the distance approaches zero. Default 35 m.
    pub min_distance_m: f64,
    /// Path-loss exponent (dimensionless).
    pub path_loss_exponent: f64,
    /// Variance of the log-normal shadowing in dB (the variance of
    /// `10*log10(shadowing)`).
    pub shadowing_variance_db: f64,
    /// Carrier/antenna-gain constant (dimensionless, `phi`).
    pub gain_constant: f64,
}

/// Default minimum base-station-to-user distance in meters.
pub const DEFAULT_MIN_DISTANCE_M: f64 = 35.0;

impl Default for SystemConfig {
    /// The default hot-spot scenario: 128 antennas, 3 users, a 120 kHz
    /// resource block, -170 dBm/Hz noise density, 0.01 W per antenna of
    /// circuit power, a 1 W sum-power budget, and a 6 bit/s/Hz per-user
    /// rate target in a 500 m cell with exponent-3.8 path loss and 10 dB
    /// shadowing variance.
    fn default() -> Self {
        let bandwidth_hz = 120e3;
        Self {
            antennas: 128,
            users: 3,
            bandwidth_hz,
            noise_psd: dbm_to_watts(-170.0),
            circuit_power_w: vec![0.01; 128],
            max_sum_power_w: 1.0,
            min_rate_bps: vec![6.0 * bandwidth_hz; 3],
            cell_radius_m: 500.0,
            min_distance_m: DEFAULT_MIN_DISTANCE_M,
            path_loss_exponent: 3.8,
            shadowing_variance_db: 10.0,
            gain_constant: 1.0,
        }
    }
}

impl SystemConfig {
    /// Check every field invariant, naming the first violated field.
    pub fn validate(&self) -> Result<()> {
        fn fail(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::Config { field, reason: reason.into() })
        }
        if self.antennas < 1 {
            return fail("antennas", "must be >= 1");
        }
        if self.users < 1 {
            return fail("users", "must be >= 1");
        }
        if !(self.bandwidth_hz > 0.0) {
            return fail("bandwidth_hz", format!("must be > 0, got {}", self.bandwidth_hz));
        }
        if !(self.noise_psd > 0.0) {
            return fail("noise_psd", format!("must be > 0, got {}", self.noise_psd));
        }
        if !(self.max_sum_power_w > 0.0) {
            return fail("max_sum_power_w", format!("must be > 0, got {}", self.max_sum_power_w));
        }
        if self.circuit_power_w.len() != self.antennas {
            return fail(
                "circuit_power_w",
                format!("length {} != antennas {}", self.circuit_power_w.len(), self.antennas),
            );
        }
        if self.circuit_power_w.iter().any(|&p| !(p >= 0.0)) {
            return fail("circuit_power_w", "every entry must be >= 0 and finite");
        }
        if self.min_rate_bps.len() != self.users {
            return fail(
                "min_rate_bps",
                format!("length {} != users {}", self.min_rate_bps.len(), self.users),
            );
        }
        if self.min_rate_bps.iter().any(|&r| !(r >= 0.0)) {
            return fail("min_rate_bps", "every entry must be >= 0 and finite");
        }
        if !(self.min_distance_m > 0.0) {
            return fail("min_distance_m", format!("must be > 0, got {}", self.min_distance_m));
        }
        if !(self.min_distance_m < self.cell_radius_m) {
            return fail(
                "cell_radius_m",
                format!(
                    "must exceed min_distance_m ({} m), got {} m",
                    self.min_distance_m, self.cell_radius_m
                ),
            );
        }
        if !self.path_loss_exponent.is_finite() {
            return fail("path_loss_exponent", "must be finite");
        }
        if !(self.shadowing_variance_db >= 0.0) {
            return fail("shadowing_variance_db", "must be >= 0");
        }
        if !(self.gain_constant > 0.0) {
            return fail("gain_constant", format!("must be > 0, got {}", self.gain_constant));
        }
        Ok(())
    }

    /// Noise power over one resource block in W (`B * N0`).
    pub fn noise_power_w(&self) -> f64 {
        self.bandwidth_hz * self.noise_psd
    }

    /// Total circuit power in W (sum over antennas).
    pub fn total_circuit_power_w(&self) -> f64 {
        self.circuit_power_w.iter().sum()
    }

    /// Replace the antenna count, broadcasting a uniform per-antenna circuit
    /// power. Fails if the current circuit powers are not uniform.
    pub fn with_antennas(&self, antennas: usize) -> Result<Self> {
        let pc = uniform_value(&self.circuit_power_w).ok_or_else(|| Error::Specification(
            "antenna sweep requires a uniform per-antenna circuit power".into(),
        ))?;
        let mut cfg = self.clone();
        cfg.antennas = antennas;
        cfg.circuit_power_w = vec![pc; antennas];
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replace the user count, broadcasting a uniform per-user rate target.
    /// Fails if the current rate targets are not uniform.
    pub fn with_users(&self, users: usize) -> Result<Self> {
        let rt = uniform_value(&self.min_rate_bps).ok_or_else(|| Error::Specification(
            "user sweep requires a uniform per-user rate target".into(),
        ))?;
        let mut cfg = self.clone();
        cfg.users = users;
        cfg.min_rate_bps = vec![rt; users];
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The common value of a slice if all entries are equal, else `None`.
pub(crate) fn uniform_value(v: &[f64]) -> Option<f64> {
    match v.first() {
        Some(&x) if v.iter().all(|&y| y == x) => Some(x),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.antennas, 128);
        assert_eq!(cfg.users, 3);
        assert!((cfg.total_circuit_power_w() - 1.28).abs() < 1e-12);
        assert_eq!(cfg.min_rate_bps[0], 720e3);
    }

    #[test]
    fn noise_density_conversion() {
        // -170 dBm/Hz -> 1e-20 W/Hz
        let n0 = dbm_to_watts(-170.0);
        assert!((n0 - 1e-20).abs() < 1e-33, "got {n0}");
        assert!((watts_to_dbm(n0) + 170.0).abs() < 1e-9);
    }

    #[test]
    fn validation_names_violated_field() {
        let mut cfg = SystemConfig::default();
        cfg.bandwidth_hz = 0.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("bandwidth_hz"), "{err}");

        let mut cfg = SystemConfig::default();
        cfg.min_distance_m = 600.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("cell_radius_m"), "{err}");
    }

    #[test]
    fn sweep_rebuilds_require_uniform_vectors() {
        let mut cfg = SystemConfig::default();
        cfg.min_rate_bps[1] = 1.0;
        assert!(cfg.with_users(5).is_err());
        let cfg = SystemConfig::default();
        let cfg5 = cfg.with_users(5).unwrap();
        assert_eq!(cfg5.min_rate_bps.len(), 5);
    }
}
