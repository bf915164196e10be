//! Behavioral model of a Pt/TiO2-x/Pt memristive device.
//!
//! The device stores a normalized ionic state `s` in [0, 1] that maps to a
//! memristance between `r_on` (s = 1) and `r_off` (s = 0). Static read
//! conduction is near-linear in the operating range; switching follows
//! threshold-gated sinh kinetics with a linear window term, so the rate of
//! reset switching slows as the state approaches the rail. Positive voltage
//! resets (toward `r_off`), negative voltage sets (toward `r_on`).

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

/// Largest read voltage magnitude accepted by [`DeviceState::read_current`].
pub const DEFAULT_READ_RANGE_V: f64 = 0.3;

/// Default voltage compliance bound for current-driven sweeps.
pub const DEFAULT_COMPLIANCE_V: f64 = 3.0;

/// Fixed number of explicit integration steps per pulse.
const PULSE_STEPS: usize = 100;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("invalid device parameter: {0}")]
    InvalidParams(String),
    #[error("read voltage {v} V outside read range ±{range} V")]
    ReadRange { v: f64, range: f64 },
    #[error("pulse duration must be positive, got {0} s")]
    NonPositiveDuration(f64),
    #[error("sweep requires {0}")]
    BadSweep(String),
    #[error("current sweep needs {v:.3} V across the device, above the {bound} V compliance bound")]
    Compliance { v: f64, bound: f64 },
}

/// Switching and conduction parameters of one device.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    /// Minimum memristance bound, ohms (fully set, s = 1).
    pub r_on: f64,
    /// Maximum memristance bound, ohms (fully reset, s = 0).
    pub r_off: f64,
    /// Characteristic voltage of the exponential kinetics, volts.
    pub v_char: f64,
    /// State-change prefactor for positive (reset) polarity, 1/s.
    pub rate_reset: f64,
    /// State-change prefactor for negative (set) polarity, 1/s.
    pub rate_set: f64,
    /// Magnitude below which the state is exactly retained, volts.
    pub v_threshold: f64,
    /// Cubic nonlinearity coefficient of the static I-V, 1/V^2.
    pub nl_coeff: f64,
}

impl DeviceParams {
    /// Preset for the Pt/TiO2-x/Pt devices modeled here.
    ///
    /// The rates are calibrated so a 1 ms pulse at 1.5 V traverses more
    /// than 90% of the state range; 0.5 V leaves a wide retention margin
    /// above the 0.2 V filter operating swing.
    pub fn pt_tio2() -> Self {
        DeviceParams {
            r_on: 1_000.0,
            r_off: 150_000.0,
            v_char: 0.15,
            rate_reset: 25.0,
            rate_set: 25.0,
            v_threshold: 0.5,
            nl_coeff: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let err = |m: String| Err(DeviceError::InvalidParams(m));
        if !(self.r_on > 0.0 && self.r_on < self.r_off) {
            return err(format!("need 0 < r_on < r_off, got r_on={} r_off={}", self.r_on, self.r_off));
        }
        if !(self.v_char > 0.0) {
            return err(format!("v_char must be > 0, got {}", self.v_char));
        }
        if !(self.v_threshold > 0.0) {
            return err(format!("v_threshold must be > 0, got {}", self.v_threshold));
        }
        if !(self.rate_reset > 0.0 && self.rate_set > 0.0) {
            return err(format!(
                "rates must be > 0, got rate_reset={} rate_set={}",
                self.rate_reset, self.rate_set
            ));
        }
        if !self.nl_coeff.is_finite() {
            return err(format!("nl_coeff must be finite, got {}", self.nl_coeff));
        }
        Ok(())
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::pt_tio2()
    }
}

/// Statistical variation applied when spawning devices and per write pulse.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationSpec {
    /// Relative log-scale spread of per-device r_on, r_off, rate_reset, rate_set.
    pub sigma_d2d: f64,
    /// Relative log-scale spread applied to each pulse's state increment.
    pub sigma_c2c: f64,
    /// Seed of the stream this spec is meant to consume.
    pub seed: u64,
}

impl VariationSpec {
    pub fn none() -> Self {
        VariationSpec { sigma_d2d: 0.0, sigma_c2c: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.sigma_d2d < 0.0 || self.sigma_c2c < 0.0 {
            return Err(DeviceError::InvalidParams(format!(
                "variation sigmas must be >= 0, got d2d={} c2c={}",
                self.sigma_d2d, self.sigma_c2c
            )));
        }
        Ok(())
    }
}

impl Default for VariationSpec {
    fn default() -> Self {
        Self::none()
    }
}

/// One memristive device: sampled parameters plus the ionic state.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    s: f64,
    params: DeviceParams,
    sigma_c2c: f64,
}

impl DeviceState {
    /// Samples a device from nominal parameters with device-to-device spread.
    ///
    /// Each varied parameter is the nominal value times an independent
    /// lognormal factor with log-scale `sigma_d2d`; the draw is repeated
    /// until the sampled bounds keep `r_on < r_off`. The fresh device starts
    /// fully reset (s = 0).
    pub fn spawn<R: Rng + ?Sized>(
        nominal: &DeviceParams,
        variation: &VariationSpec,
        rng: &mut R,
    ) -> Result<DeviceState, DeviceError> {
        nominal.validate()?;
        variation.validate()?;
        let mut params = *nominal;
        if variation.sigma_d2d > 0.0 {
            let dist = LogNormal::new(0.0, variation.sigma_d2d)
                .map_err(|e| DeviceError::InvalidParams(e.to_string()))?;
            loop {
                params.r_on = nominal.r_on * dist.sample(rng);
                params.r_off = nominal.r_off * dist.sample(rng);
                params.rate_reset = nominal.rate_reset * dist.sample(rng);
                params.rate_set = nominal.rate_set * dist.sample(rng);
                if params.r_on < params.r_off {
                    break;
                }
            }
        }
        Ok(DeviceState { s: 0.0, params, sigma_c2c: variation.sigma_c2c })
    }

    /// Device with exact parameters and a given initial state.
    pub fn with_state(params: DeviceParams, s: f64) -> Result<DeviceState, DeviceError> {
        params.validate()?;
        if !(0.0..=1.0).contains(&s) {
            return Err(DeviceError::InvalidParams(format!("state must be in [0,1], got {s}")));
        }
        Ok(DeviceState { s, params, sigma_c2c: 0.0 })
    }

    /// Device placed at an exact memristance between its bounds.
    pub fn from_memristance(params: DeviceParams, m: f64) -> Result<DeviceState, DeviceError> {
        params.validate()?;
        if !(params.r_on..=params.r_off).contains(&m) {
            return Err(DeviceError::InvalidParams(format!(
                "memristance {m} outside [{}, {}]",
                params.r_on, params.r_off
            )));
        }
        let g_on = 1.0 / params.r_on;
        let g_off = 1.0 / params.r_off;
        let s = (1.0 / m - g_off) / (g_on - g_off);
        Ok(DeviceState { s: s.clamp(0.0, 1.0), params, sigma_c2c: 0.0 })
    }

    pub fn state(&self) -> f64 {
        self.s
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    /// Instantaneous memristance, ohms.
    ///
    /// Conductance is affine in the state: G(s) = g_off + s (g_on - g_off),
    /// so the stored weight of Eq-style dot products is monotone in s.
    pub fn memristance(&self) -> f64 {
        let g_on = 1.0 / self.params.r_on;
        let g_off = 1.0 / self.params.r_off;
        1.0 / (g_off + self.s * (g_on - g_off))
    }

    /// Static conduction current at voltage `v`, no range guard.
    ///
    /// I = v/M (1 + nl_coeff v^2). Used internally by sweeps, which may
    /// legitimately see stress-level voltages.
    fn static_current(&self, v: f64) -> f64 {
        v / self.memristance() * (1.0 + self.params.nl_coeff * v * v)
    }

    /// Non-destructive read of the static I-V inside the read range.
    pub fn read_current(&self, v: f64) -> Result<f64, DeviceError> {
        if v.abs() > DEFAULT_READ_RANGE_V {
            return Err(DeviceError::ReadRange { v, range: DEFAULT_READ_RANGE_V });
        }
        Ok(self.static_current(v))
    }

    /// State derivative at voltage `v`: zero below threshold, otherwise
    /// sinh in the overdrive with a linear window toward the target rail.
    fn state_rate(&self, s: f64, v: f64) -> f64 {
        let p = &self.params;
        let overdrive = v.abs() - p.v_threshold;
        if overdrive <= 0.0 {
            return 0.0;
        }
        let kinetics = (overdrive / p.v_char).sinh();
        if v > 0.0 {
            // reset: toward s = 0, slowing as s shrinks
            -p.rate_reset * kinetics * s
        } else {
            // set: toward s = 1, slowing as s fills
            p.rate_set * kinetics * (1.0 - s)
        }
    }

    /// Applies one rectangular voltage pulse.
    ///
    /// The state ODE is integrated with fixed-step explicit RK4 (100 steps
    /// per pulse); the net state increment is then scaled by one lognormal
    /// cycle-to-cycle factor and the state clamped to [0, 1]. Sub-threshold
    /// pulses change nothing and consume no randomness, which keeps the
    /// retention contract bit-exact.
    pub fn apply_pulse<R: Rng + ?Sized>(
        &mut self,
        v: f64,
        duration: f64,
        rng: &mut R,
    ) -> Result<(), DeviceError> {
        if !(duration > 0.0) {
            return Err(DeviceError::NonPositiveDuration(duration));
        }
        if v.abs() <= self.params.v_threshold {
            return Ok(());
        }
        let dt = duration / PULSE_STEPS as f64;
        let mut s = self.s;
        for _ in 0..PULSE_STEPS {
            let k1 = self.state_rate(s, v);
            let k2 = self.state_rate(s + 0.5 * dt * k1, v);
            let k3 = self.state_rate(s + 0.5 * dt * k2, v);
            let k4 = self.state_rate(s + dt * k3, v);
            s = (s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
        }
        let mut delta = s - self.s;
        if self.sigma_c2c > 0.0 {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            delta *= (self.sigma_c2c * z).exp();
        }
        self.s = (self.s + delta).clamp(0.0, 1.0);
        Ok(())
    }

    /// Quasi-DC triangular voltage sweep 0 -> v_peak -> 0 over `n_steps`
    /// points. Records the static I-V at each point before the state
    /// advances, so the trace shows the hysteresis loop.
    pub fn quasi_dc_voltage_sweep<R: Rng + ?Sized>(
        &mut self,
        v_peak: f64,
        n_steps: usize,
        step_duration: f64,
        rng: &mut R,
    ) -> Result<Vec<(f64, f64)>, DeviceError> {
        if !(v_peak > 0.0) {
            return Err(DeviceError::BadSweep(format!("v_peak > 0, got {v_peak}")));
        }
        if n_steps < 2 {
            return Err(DeviceError::BadSweep(format!("n_steps >= 2, got {n_steps}")));
        }
        let mut trace = Vec::with_capacity(n_steps);
        for k in 0..n_steps {
            let v = v_peak * triangle(k, n_steps);
            trace.push((v, self.static_current(v)));
            self.apply_pulse(v, step_duration, rng)?;
        }
        Ok(trace)
    }

    /// Quasi-DC triangular current sweep 0 -> i_peak -> 0 (set polarity,
    /// i_peak < 0). The voltage at each point is solved from the static I-V
    /// at the current state, then the state advances at that voltage. The
    /// sweep is self-limiting: as the device sets, the required voltage
    /// falls back toward the threshold.
    pub fn quasi_dc_current_sweep<R: Rng + ?Sized>(
        &mut self,
        i_peak: f64,
        n_steps: usize,
        step_duration: f64,
        compliance_v: f64,
        rng: &mut R,
    ) -> Result<Vec<(f64, f64)>, DeviceError> {
        if !(i_peak < 0.0) {
            return Err(DeviceError::BadSweep(format!("i_peak < 0 for set sweeps, got {i_peak}")));
        }
        if n_steps < 2 {
            return Err(DeviceError::BadSweep(format!("n_steps >= 2, got {n_steps}")));
        }
        let mut trace = Vec::with_capacity(n_steps);
        for k in 0..n_steps {
            let i = i_peak * triangle(k, n_steps);
            let v = self.solve_drive_voltage(i);
            if v.abs() > compliance_v {
                return Err(DeviceError::Compliance { v, bound: compliance_v });
            }
            trace.push((v, i));
            if i != 0.0 {
                self.apply_pulse(v, step_duration, rng)?;
            }
        }
        Ok(trace)
    }

    /// Voltage satisfying I = V/M (1 + nl V^2) for the present state.
    fn solve_drive_voltage(&self, i: f64) -> f64 {
        let m = self.memristance();
        let nl = self.params.nl_coeff;
        if nl == 0.0 || i == 0.0 {
            return i * m;
        }
        // Newton from the linear estimate; the cubic is monotone for nl >= 0.
        let mut v = i * m;
        for _ in 0..50 {
            let f = v * (1.0 + nl * v * v) - i * m;
            let df = 1.0 + 3.0 * nl * v * v;
            let step = f / df;
            v -= step;
            if step.abs() < 1e-15 * v.abs().max(1.0) {
                break;
            }
        }
        v
    }
}

/// Unit triangle 0 -> 1 -> 0 sampled at `k` of `n` points (endpoints at 0).
fn triangle(k: usize, n: usize) -> f64 {
    let x = 2.0 * k as f64 / (n - 1) as f64;
    1.0 - (x - 1.0).abs()
}
