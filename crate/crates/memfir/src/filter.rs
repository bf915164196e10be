//! Mixed-signal FIR pipeline with memristive tap weights.
//!
//! The signal path mirrors the demonstrated circuit: the input voltage is
//! quantized by a symmetric mid-tread ADC, shifted through an N-stage
//! register, converted back per tap by a DAC whose gain keeps the swing at
//! `v_tap_max`, and summed by an inverting amplifier whose virtual ground
//! adds the per-device currents. The effective tap weight is
//! `w_i = alpha * r_f / M_i` with `alpha = v_tap_max / adc_fullscale`.
//!
//! [`ideal_fir`] is the double-precision reference convolution, and
//! [`ConductanceBank`] realizes the merged binary-weighted variant in which
//! each tap spends `k_d` devices with power-of-two conductances instead of a
//! DAC.

use crate::device::DeviceState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("input sampled at {input} Hz but the filter runs at {filter} Hz")]
    SampleRateMismatch { input: f64, filter: f64 },
    #[error("expected {expected} taps, got {got}")]
    TapCountMismatch { expected: usize, got: usize },
    #[error("code {code} outside the {k_d}-bit signed range")]
    CodeOutOfRange { code: i32, k_d: u32 },
    #[error("binary-weighted banks need non-negative weights, got {0}")]
    UnsupportedSign(f64),
    #[error("bank drive level must satisfy 0 < v_ref, got {0}")]
    BadDriveLevel(f64),
}

/// Static configuration of the filter signal path.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Number of taps N.
    pub n_taps: usize,
    /// ADC/DAC resolution in bits.
    pub k_d: u32,
    /// Sample rate, hertz.
    pub f_s: f64,
    /// Feedback resistor of the summing amplifier, ohms.
    pub r_f: f64,
    /// Maximum per-tap DAC-amplifier output, volts.
    pub v_tap_max: f64,
    /// Symmetric ADC full scale, volts.
    pub adc_fullscale: f64,
    /// Undo the summing amplifier inversion at the output.
    pub sign_compensated: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            n_taps: 6,
            k_d: 8,
            f_s: 15_000.0,
            r_f: 2_200.0,
            v_tap_max: 0.2,
            adc_fullscale: 1.28,
            sign_compensated: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        let err = |m: String| Err(FilterError::InvalidConfig(m));
        if self.n_taps == 0 {
            return err("n_taps must be >= 1".into());
        }
        if self.k_d == 0 || self.k_d > 30 {
            return err(format!("k_d must be in 1..=30, got {}", self.k_d));
        }
        if !(self.f_s > 0.0) {
            return err(format!("f_s must be > 0, got {}", self.f_s));
        }
        if !(self.r_f > 0.0) {
            return err(format!("r_f must be > 0, got {}", self.r_f));
        }
        if !(self.v_tap_max > 0.0) {
            return err(format!("v_tap_max must be > 0, got {}", self.v_tap_max));
        }
        if !(self.adc_fullscale > 0.0) {
            return err(format!("adc_fullscale must be > 0, got {}", self.adc_fullscale));
        }
        Ok(())
    }

    /// Cross-check against the device preset driving the taps: the DAC swing
    /// must never reach the switching threshold.
    pub fn validate_against_threshold(&self, v_threshold: f64) -> Result<(), FilterError> {
        self.validate()?;
        if self.v_tap_max > v_threshold {
            return Err(FilterError::InvalidConfig(format!(
                "v_tap_max {} V exceeds the device threshold {} V",
                self.v_tap_max, v_threshold
            )));
        }
        Ok(())
    }

    /// Analog gain relating ADC full scale to the tap swing.
    pub fn alpha(&self) -> f64 {
        self.v_tap_max / self.adc_fullscale
    }

    /// Quantization step, volts: full span over 2^k_d levels.
    pub fn lsb(&self) -> f64 {
        2.0 * self.adc_fullscale / (1u64 << self.k_d) as f64
    }

    fn code_min(&self) -> i32 {
        -(1i64 << (self.k_d - 1)) as i32
    }

    fn code_max(&self) -> i32 {
        ((1i64 << (self.k_d - 1)) - 1) as i32
    }
}

/// Uniformly sampled voltage waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub f_s: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, f_s: f64) -> Self {
        assert!(f_s > 0.0, "sample rate must be positive");
        Signal { samples, f_s }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.f_s
    }
}

/// Symmetric mid-tread quantizer with round-half-away-from-zero and
/// saturating clip to the signed `k_d`-bit range.
pub fn adc_quantize(v: f64, cfg: &FilterConfig) -> i32 {
    quantize_with_flag(v, cfg).0
}

fn quantize_with_flag(v: f64, cfg: &FilterConfig) -> (i32, bool) {
    let raw = (v / cfg.lsb()).round();
    let clipped = raw < cfg.code_min() as f64 || raw > cfg.code_max() as f64;
    (raw.clamp(cfg.code_min() as f64, cfg.code_max() as f64) as i32, clipped)
}

/// Mid-tread reconstruction of a code back to volts.
pub fn dequantize(code: i32, cfg: &FilterConfig) -> f64 {
    code as f64 * cfg.lsb()
}

/// Per-tap DAC-plus-gain output for one register code.
///
/// |result| never exceeds `v_tap_max`, which keeps the drive across every
/// device inside the retention region.
pub fn dac_tap_voltage(code: i32, cfg: &FilterConfig) -> f64 {
    code as f64 * cfg.v_tap_max / (1u64 << (cfg.k_d - 1)) as f64
}

/// Effective dimensionless tap weights of a programmed device bank.
pub fn weights_from_devices(taps: &[DeviceState], cfg: &FilterConfig) -> Vec<f64> {
    taps.iter().map(|d| cfg.alpha() * cfg.r_f / d.memristance()).collect()
}

/// Exact double-precision FIR convolution with zero initial history.
///
/// Reference oracle for the whole pipeline: y[n] = sum_i w[i] x[n-i].
pub fn ideal_fir(weights: &[f64], input: &Signal) -> Signal {
    assert!(!weights.is_empty(), "weights must be nonempty");
    let samples = (0..input.samples.len())
        .map(|n| {
            weights
                .iter()
                .enumerate()
                .take(n + 1)
                .map(|(i, w)| w * input.samples[n - i])
                .sum()
        })
        .collect();
    Signal::new(samples, input.f_s)
}

/// Live filter: configuration, programmed taps and the shift register.
#[derive(Debug, Clone)]
pub struct FilterState {
    cfg: FilterConfig,
    taps: Vec<DeviceState>,
    /// Most recent code first.
    shift_reg: Vec<i32>,
    saturation_count: u64,
}

impl FilterState {
    pub fn new(cfg: FilterConfig, taps: Vec<DeviceState>) -> Result<FilterState, FilterError> {
        cfg.validate()?;
        if taps.len() != cfg.n_taps {
            return Err(FilterError::TapCountMismatch { expected: cfg.n_taps, got: taps.len() });
        }
        Ok(FilterState { shift_reg: vec![0; cfg.n_taps], cfg, taps, saturation_count: 0 })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    pub fn taps(&self) -> &[DeviceState] {
        &self.taps
    }

    /// Consumes the filter, handing the tap devices back.
    pub fn into_taps(self) -> Vec<DeviceState> {
        self.taps
    }

    /// Inputs clipped by the ADC since construction or the last reset.
    pub fn saturation_count(&self) -> u64 {
        self.saturation_count
    }

    /// Clears the shift register and the saturation counter. Device states
    /// are untouched.
    pub fn reset_history(&mut self) {
        self.shift_reg.fill(0);
        self.saturation_count = 0;
    }

    /// Processes one input sample through ADC, shift register, per-tap DACs
    /// and the inverting adder. The tap devices are only ever read.
    pub fn step(&mut self, v_in: f64) -> f64 {
        let (code, clipped) = quantize_with_flag(v_in, &self.cfg);
        if clipped {
            self.saturation_count += 1;
        }
        self.shift_reg.rotate_right(1);
        self.shift_reg[0] = code;

        let mut y_raw = 0.0;
        for (code, tap) in self.shift_reg.iter().zip(&self.taps) {
            let v_tap = dac_tap_voltage(*code, &self.cfg);
            debug_assert!(v_tap.abs() <= self.cfg.v_tap_max + 1e-15);
            y_raw -= self.cfg.r_f * v_tap / tap.memristance();
        }
        if self.cfg.sign_compensated {
            -y_raw
        } else {
            y_raw
        }
    }

    /// Runs a whole signal through the filter.
    pub fn run(&mut self, input: &Signal) -> Result<Signal, FilterError> {
        if input.f_s != self.cfg.f_s {
            return Err(FilterError::SampleRateMismatch { input: input.f_s, filter: self.cfg.f_s });
        }
        let samples = input.samples.iter().map(|&v| self.step(v)).collect();
        Ok(Signal::new(samples, self.cfg.f_s))
    }
}

/// Binary-weighted conductance bank: the DAC-merged design where tap `i`
/// is realized by `k_d` devices with conductances `2^b * g_unit_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceBank {
    /// Row per tap, column per bit, siemens.
    g: Vec<Vec<f64>>,
    /// Digital drive level, volts.
    v_ref: f64,
    k_d: u32,
}

impl ConductanceBank {
    pub fn n_taps(&self) -> usize {
        self.g.len()
    }

    pub fn k_d(&self) -> u32 {
        self.k_d
    }

    pub fn v_ref(&self) -> f64 {
        self.v_ref
    }

    /// Total device count, N x K_d.
    pub fn device_count(&self) -> usize {
        self.g.len() * self.k_d as usize
    }

    pub fn conductances(&self) -> &[Vec<f64>] {
        &self.g
    }
}

/// Sizes a binary-weighted bank so that driving the bit devices at `v_ref`
/// reproduces the DAC-and-memristor tap output for every code.
pub fn build_binary_bank(
    weights: &[f64],
    cfg: &FilterConfig,
    v_ref: f64,
) -> Result<ConductanceBank, FilterError> {
    cfg.validate()?;
    if weights.len() != cfg.n_taps {
        return Err(FilterError::TapCountMismatch { expected: cfg.n_taps, got: weights.len() });
    }
    if !(v_ref > 0.0) {
        return Err(FilterError::BadDriveLevel(v_ref));
    }
    let g = weights
        .iter()
        .map(|&w| {
            if w < 0.0 {
                return Err(FilterError::UnsupportedSign(w));
            }
            // MSB device carries half of full scale, matching code 2^(k_d-1)
            let g_unit = w * cfg.adc_fullscale / (cfg.r_f * v_ref * (1u64 << (cfg.k_d - 1)) as f64);
            Ok((0..cfg.k_d).map(|b| (1u64 << b) as f64 * g_unit).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    Ok(ConductanceBank { g, v_ref, k_d: cfg.k_d })
}

/// One output sample of the binary-weighted bank for a register snapshot.
///
/// Each code is decomposed into magnitude bits; a set bit connects its
/// device to the drive rail (negative codes flip the rail sign), and the
/// virtual ground sums the currents. Output carries the compensated sign so
/// it is directly comparable with [`FilterState::step`].
pub fn step_binary(bank: &ConductanceBank, codes: &[i32], r_f: f64) -> Result<f64, FilterError> {
    if codes.len() != bank.g.len() {
        return Err(FilterError::TapCountMismatch { expected: bank.g.len(), got: codes.len() });
    }
    let code_min = -(1i64 << (bank.k_d - 1)) as i32;
    let code_max = ((1i64 << (bank.k_d - 1)) - 1) as i32;
    let mut y = 0.0;
    for (&code, row) in codes.iter().zip(&bank.g) {
        if code < code_min || code > code_max {
            return Err(FilterError::CodeOutOfRange { code, k_d: bank.k_d });
        }
        let magnitude = code.unsigned_abs() as u64;
        let mut tap = 0.0;
        for (b, &g) in row.iter().enumerate() {
            if magnitude & (1 << b) != 0 {
                tap += g;
            }
        }
        y += code.signum() as f64 * r_f * bank.v_ref * tap;
    }
    Ok(y)
}

/// Runs a signal through the binary-weighted bank with the same ADC and
/// shift-register semantics as [`FilterState::run`].
pub fn run_binary(
    bank: &ConductanceBank,
    cfg: &FilterConfig,
    input: &Signal,
) -> Result<Signal, FilterError> {
    if input.f_s != cfg.f_s {
        return Err(FilterError::SampleRateMismatch { input: input.f_s, filter: cfg.f_s });
    }
    let mut shift_reg = vec![0i32; bank.g.len()];
    let mut samples = Vec::with_capacity(input.samples.len());
    for &v in &input.samples {
        shift_reg.rotate_right(1);
        shift_reg[0] = adc_quantize(v, cfg);
        samples.push(step_binary(bank, &shift_reg, cfg.r_f)?);
    }
    Ok(Signal::new(samples, cfg.f_s))
}
