//! Closed-loop write-verify programming of device memristance.
//!
//! The loop alternates a sub-threshold resistance measurement with one write
//! pulse. Pulse amplitude ramps up by `v_step` while the error keeps the same
//! sign and snaps back to `v_start` whenever the polarity flips, so an
//! overshoot is always corrected with the gentlest pulse available. This
//! tolerates wide device-to-device and cycle-to-cycle variation without any
//! per-device calibration.

use crate::device::{DeviceError, DeviceState};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TunerError {
    #[error("target {target} ohms outside achievable [{lo:.1}, {hi:.1}] for this device")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("read voltage {v_read} V risks disturbing the state (threshold {v_threshold} V)")]
    DisturbRisk { v_read: f64, v_threshold: f64 },
    #[error("devices ({devices}) and targets ({targets}) differ in length")]
    LengthMismatch { devices: usize, targets: usize },
    #[error("invalid tune config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Write-verify loop settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    /// Relative resistance tolerance; 0.05 targets +-5%.
    pub tolerance: f64,
    /// Verify voltage, volts (must stay at or below the device threshold).
    pub v_read: f64,
    /// First pulse amplitude after a polarity change, volts.
    pub v_start: f64,
    /// Amplitude increment while the polarity holds, volts.
    pub v_step: f64,
    /// Amplitude ceiling, volts.
    pub v_max: f64,
    /// Write pulse width, seconds.
    pub pulse_duration: f64,
    /// Give up after this many pulses.
    pub max_pulses: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            tolerance: 0.05,
            v_read: 0.1,
            v_start: 0.6,
            v_step: 0.05,
            v_max: 1.5,
            pulse_duration: 1e-3,
            max_pulses: 500,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self, v_threshold: f64) -> Result<(), TunerError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(TunerError::InvalidConfig(format!(
                "tolerance must be in (0, 1), got {}",
                self.tolerance
            )));
        }
        if !(self.v_start > v_threshold && self.v_start <= self.v_max) {
            return Err(TunerError::InvalidConfig(format!(
                "need v_threshold < v_start <= v_max, got {} / {} / {}",
                v_threshold, self.v_start, self.v_max
            )));
        }
        if !(self.v_step > 0.0) {
            return Err(TunerError::InvalidConfig(format!("v_step must be > 0, got {}", self.v_step)));
        }
        if !(self.pulse_duration > 0.0) {
            return Err(TunerError::InvalidConfig(format!(
                "pulse_duration must be > 0, got {}",
                self.pulse_duration
            )));
        }
        Ok(())
    }
}

/// One write pulse and the resistance verified right after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub voltage: f64,
    pub measured_r: f64,
}

/// Outcome of one closed-loop programming run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub converged: bool,
    pub pulses_used: usize,
    pub final_r: f64,
    pub trace: Vec<PulseRecord>,
}

/// Non-destructive resistance measurement at `v_read`.
pub fn measure_resistance(device: &DeviceState, v_read: f64) -> Result<f64, TunerError> {
    if !(v_read > 0.0) {
        return Err(TunerError::InvalidConfig(format!("v_read must be > 0, got {v_read}")));
    }
    if v_read > device.params().v_threshold {
        return Err(TunerError::DisturbRisk { v_read, v_threshold: device.params().v_threshold });
    }
    Ok(v_read / device.read_current(v_read)?)
}

/// Drives `device` to `target` ohms within `cfg.tolerance` relative error.
///
/// Resistance below target calls for a reset (positive) pulse, above target
/// for a set (negative) pulse. Non-convergence within `max_pulses` is a
/// report outcome, not an error; an unreachable target is an error.
pub fn tune<R: Rng + ?Sized>(
    device: &mut DeviceState,
    target: f64,
    cfg: &TuneConfig,
    rng: &mut R,
) -> Result<TuneReport, TunerError> {
    cfg.validate(device.params().v_threshold)?;
    let lo = device.params().r_on * (1.0 + cfg.tolerance);
    let hi = device.params().r_off * (1.0 - cfg.tolerance);
    if !(target >= lo && target <= hi) {
        return Err(TunerError::TargetOutOfRange { target, lo, hi });
    }

    let mut trace = Vec::new();
    let mut prev_positive: Option<bool> = None;
    let mut amplitude = cfg.v_start;
    let mut r = measure_resistance(device, cfg.v_read)?;
    let converged = loop {
        if (r - target).abs() <= cfg.tolerance * target {
            break true;
        }
        if trace.len() >= cfg.max_pulses {
            break false;
        }
        let positive = r < target; // too conductive -> reset toward r_off
        amplitude = match prev_positive {
            Some(p) if p == positive => (amplitude + cfg.v_step).min(cfg.v_max),
            _ => cfg.v_start,
        };
        let v = if positive { amplitude } else { -amplitude };
        device.apply_pulse(v, cfg.pulse_duration, rng)?;
        r = measure_resistance(device, cfg.v_read)?;
        trace.push(PulseRecord { voltage: v, measured_r: r });
        prev_positive = Some(positive);
    };
    Ok(TuneReport { converged, pulses_used: trace.len(), final_r: r, trace })
}

/// Programs a bank of devices to per-tap targets.
///
/// Each device consumes its own child stream seeded from `rng`, so reports
/// are index-ordered and reproducible no matter how the loop is scheduled;
/// a failure on one device leaves the others untouched.
pub fn tune_bank<R: Rng + ?Sized>(
    devices: &mut [DeviceState],
    targets: &[f64],
    cfg: &TuneConfig,
    rng: &mut R,
) -> Result<Vec<Result<TuneReport, TunerError>>, TunerError> {
    if devices.len() != targets.len() {
        return Err(TunerError::LengthMismatch { devices: devices.len(), targets: targets.len() });
    }
    let seeds: Vec<u64> = (0..devices.len()).map(|_| rng.gen()).collect();
    Ok(devices
        .iter_mut()
        .zip(targets)
        .zip(seeds)
        .map(|((device, &target), seed)| {
            let mut child = ChaCha12Rng::seed_from_u64(seed);
            tune(device, target, cfg, &mut child)
        })
        .collect())
}
