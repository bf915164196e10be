//! Stimulus synthesis and measurement: the noisy-sine input, analytic and
//! probed frequency responses, and the noise-reduction / cutoff metrics.

use crate::filter::{FilterError, FilterState, Signal};
use crate::rng::{self, STREAM_STIMULUS};
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid stimulus spec: {0}")]
    InvalidSpec(String),
    #[error("response curve ill-formed: {0}")]
    InvalidCurve(String),
    #[error("signals differ in length or sample rate")]
    SignalMismatch,
    #[error("signal too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("probe frequency {0} Hz outside (0, f_s/2)")]
    BadProbeFrequency(f64),
    #[error("probe amplitude must be positive and inside the ADC range")]
    BadProbeAmplitude,
    #[error("probe clipped by the ADC {0} times")]
    SaturatedProbe(u64),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("magnitude never crosses -3 dB below DC")]
    NoCutoffCrossing,
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// How the `noise_amp` figure of a stimulus maps to noise RMS.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseAmpConvention {
    /// `noise_amp` is the peak envelope, about three standard deviations.
    #[default]
    Peak3Sigma,
    /// `noise_amp` is the RMS value directly.
    Rms,
}

/// Sine-plus-bandlimited-noise stimulus description.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisySineSpec {
    /// Sine amplitude, volts.
    pub sine_amp: f64,
    /// Sine frequency, hertz.
    pub sine_freq: f64,
    /// Noise amplitude figure, volts; see `noise_amp_convention`.
    pub noise_amp: f64,
    /// One-sided noise bandwidth, hertz.
    pub noise_bw: f64,
    /// Sample rate, hertz.
    pub f_s: f64,
    /// Signal length, seconds.
    pub duration: f64,
    /// Generator seed; same seed reproduces the signal bit for bit.
    pub seed: u64,
    pub noise_amp_convention: NoiseAmpConvention,
}

impl Default for NoisySineSpec {
    fn default() -> Self {
        NoisySineSpec {
            sine_amp: 0.75,
            sine_freq: 5.0,
            noise_amp: 0.5,
            noise_bw: 20_000.0,
            f_s: 15_000.0,
            duration: 2.0,
            seed: 0,
            noise_amp_convention: NoiseAmpConvention::Peak3Sigma,
        }
    }
}

impl NoisySineSpec {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let err = |m: String| Err(AnalysisError::InvalidSpec(m));
        if !(self.sine_amp >= 0.0) || !(self.noise_amp >= 0.0) {
            return err("amplitudes must be >= 0".into());
        }
        if !(self.f_s > 0.0) {
            return err(format!("f_s must be > 0, got {}", self.f_s));
        }
        if !(self.sine_freq >= 0.0 && self.sine_freq < self.f_s / 2.0) {
            return err(format!("sine_freq must lie in [0, f_s/2), got {}", self.sine_freq));
        }
        if !(self.noise_bw > 0.0) {
            return err(format!("noise_bw must be > 0, got {}", self.noise_bw));
        }
        if !(self.duration > 0.0) {
            return err(format!("duration must be > 0, got {}", self.duration));
        }
        Ok(())
    }

    /// Target noise RMS in volts under the configured convention.
    pub fn noise_rms(&self) -> f64 {
        match self.noise_amp_convention {
            NoiseAmpConvention::Peak3Sigma => self.noise_amp / 3.0,
            NoiseAmpConvention::Rms => self.noise_amp,
        }
    }
}

/// Magnitude response sampled on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub freqs: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl ResponseCurve {
    pub fn new(freqs: Vec<f64>, magnitude: Vec<f64>) -> Result<Self, AnalysisError> {
        if freqs.len() != magnitude.len() {
            return Err(AnalysisError::InvalidCurve(format!(
                "{} frequencies vs {} magnitudes",
                freqs.len(),
                magnitude.len()
            )));
        }
        if freqs.is_empty() || freqs[0] < 0.0 {
            return Err(AnalysisError::InvalidCurve("grid must start at f >= 0".into()));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AnalysisError::InvalidCurve("grid must be strictly increasing".into()));
        }
        Ok(ResponseCurve { freqs, magnitude })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Synthesizes the noisy-sine stimulus.
///
/// samples[n] = sine_amp * sin(2 pi sine_freq n / f_s) + noise[n], where the
/// noise is Gaussian, band-limited to `noise_bw` and scaled so its
/// population RMS equals [`NoisySineSpec::noise_rms`]. A bandwidth at or
/// above Nyquist leaves the sampled noise white by aliasing.
///
/// # Panics
/// If `spec` fails [`NoisySineSpec::validate`].
pub fn noisy_sine(spec: &NoisySineSpec) -> Signal {
    spec.validate().expect("invalid NoisySineSpec");
    let n = (spec.duration * spec.f_s).round() as usize;
    let mut rng = rng::stream(spec.seed, STREAM_STIMULUS);
    let normal = Normal::new(0.0, 1.0).unwrap();

    let mut noise: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    if spec.noise_bw < spec.f_s / 2.0 {
        let h = windowed_sinc_lowpass(spec.noise_bw / spec.f_s, 129);
        noise = convolve_same(&noise, &h);
        // population RMS of filtered unit-variance noise is sqrt(sum h^2)
        let gain_rms = h.iter().map(|c| c * c).sum::<f64>().sqrt();
        let scale = spec.noise_rms() / gain_rms;
        for v in &mut noise {
            *v *= scale;
        }
    } else {
        let sigma = spec.noise_rms();
        for v in &mut noise {
            *v *= sigma;
        }
    }

    let w = 2.0 * std::f64::consts::PI * spec.sine_freq / spec.f_s;
    let samples = (0..n)
        .map(|k| spec.sine_amp * (w * k as f64).sin() + noise[k])
        .collect();
    Signal::new(samples, spec.f_s)
}

/// Hamming-windowed sinc lowpass, odd length, unit DC gain before windowing.
fn windowed_sinc_lowpass(cutoff_norm: f64, len: usize) -> Vec<f64> {
    assert!(len % 2 == 1 && cutoff_norm > 0.0 && cutoff_norm < 0.5);
    let mid = (len / 2) as f64;
    (0..len)
        .map(|k| {
            let t = k as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff_norm
            } else {
                (2.0 * std::f64::consts::PI * cutoff_norm * t).sin() / (std::f64::consts::PI * t)
            };
            let hamming =
                0.54 - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / (len - 1) as f64).cos();
            sinc * hamming
        })
        .collect()
}

/// Zero-padded convolution aligned to the kernel center.
fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mid = h.len() / 2;
    (0..x.len())
        .map(|n| {
            h.iter()
                .enumerate()
                .filter_map(|(k, &c)| (n + mid).checked_sub(k).filter(|i| *i < x.len()).map(|i| c * x[i]))
                .sum()
        })
        .collect()
}

/// Analytic magnitude response |H(f)| = |sum_i w_i exp(-j 2 pi f i / f_s)|
/// on a uniform `n_points` grid over [0, f_s/2].
pub fn frequency_response(weights: &[f64], f_s: f64, n_points: usize) -> ResponseCurve {
    assert!(n_points >= 2, "need at least two grid points");
    assert!(!weights.is_empty() && f_s > 0.0);
    let freqs: Vec<f64> =
        (0..n_points).map(|j| 0.5 * f_s * j as f64 / (n_points - 1) as f64).collect();
    let magnitude = freqs
        .iter()
        .map(|&f| {
            let theta = 2.0 * std::f64::consts::PI * f / f_s;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, w) in weights.iter().enumerate() {
                re += w * (theta * i as f64).cos();
                im -= w * (theta * i as f64).sin();
            }
            re.hypot(im)
        })
        .collect();
    ResponseCurve { freqs, magnitude }
}

/// Least-squares fit of `a sin(wt) + b cos(wt) + c`; returns (a, b, c).
///
/// Solves the 3x3 normal equations directly. `t[k] = start_index + k` in
/// samples; the fit is phase-exact for any start offset.
fn fit_sine(samples: &[f64], omega_per_sample: f64, start_index: usize) -> (f64, f64, f64) {
    let (mut ss, mut cc, mut sc, mut s1, mut c1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut ys, mut yc, mut y1) = (0.0, 0.0, 0.0);
    let n = samples.len() as f64;
    for (k, &y) in samples.iter().enumerate() {
        let t = (start_index + k) as f64 * omega_per_sample;
        let (s, c) = t.sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        s1 += s;
        c1 += c;
        ys += y * s;
        yc += y * c;
        y1 += y;
    }
    // Gaussian elimination on [ss sc s1; sc cc c1; s1 c1 n] [a b c]^T = [ys yc y1]^T
    let m = [[ss, sc, s1, ys], [sc, cc, c1, yc], [s1, c1, n, y1]];
    solve3(m)
}

fn solve3(mut m: [[f64; 4]; 3]) -> (f64, f64, f64) {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, pivot);
        let prow = m[col];
        let p = prow[col];
        assert!(p.abs() > 1e-12, "singular normal equations");
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / p;
                for c in col..4 {
                    row[c] -= f * prow[c];
                }
            }
        }
    }
    (m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2])
}

fn rms(samples: &[f64]) -> f64 {
    (samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Probes the live pipeline with pure sines and reports gain per frequency.
///
/// For each probe the filter history is cleared, `n_periods` full periods
/// are driven, the first `n_taps` samples are discarded, and the output
/// amplitude is estimated by least squares at the probe frequency.
pub fn measured_frequency_response(
    filter: &mut FilterState,
    freqs: &[f64],
    probe_amp: f64,
    n_periods: usize,
) -> Result<ResponseCurve, AnalysisError> {
    let cfg = *filter.config();
    if !(probe_amp > 0.0) || probe_amp > cfg.adc_fullscale {
        return Err(AnalysisError::BadProbeAmplitude);
    }
    if n_periods == 0 {
        return Err(AnalysisError::InvalidCurve("n_periods must be >= 1".into()));
    }
    let warmup = cfg.n_taps;
    let mut magnitude = Vec::with_capacity(freqs.len());
    for &f in freqs {
        if !(f > 0.0 && f < cfg.f_s / 2.0) {
            return Err(AnalysisError::BadProbeFrequency(f));
        }
        let omega = 2.0 * std::f64::consts::PI * f / cfg.f_s;
        let n = (n_periods as f64 * cfg.f_s / f).ceil() as usize + warmup;
        let probe: Vec<f64> = (0..n).map(|k| probe_amp * (omega * k as f64).sin()).collect();

        filter.reset_history();
        let out = filter.run(&Signal::new(probe, cfg.f_s))?;
        let clipped = filter.saturation_count();
        if clipped > 0 {
            return Err(AnalysisError::SaturatedProbe(clipped));
        }
        let (a, b, _) = fit_sine(&out.samples[warmup..], omega, warmup);
        magnitude.push(a.hypot(b) / probe_amp);
    }
    ResponseCurve::new(freqs.to_vec(), magnitude)
}

/// Noise-reduction metrics of one input/output pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseReductionReport {
    /// RMS(input residual) / RMS(gain-normalized output residual). The
    /// authoritative figure.
    pub rms_factor: f64,
    /// Same ratio on peak |residual| instead of RMS.
    pub peak_factor: f64,
    /// Fitted output sine amplitude over fitted input sine amplitude.
    pub sine_amplitude_ratio: f64,
}

/// Quantifies how much sine-band-excluded noise the filter removed.
///
/// Fits and removes the sine (plus DC) from both signals after a
/// `warmup`-sample trim, normalizes the output residual by the fitted
/// amplitude ratio — the passband gain at `sine_freq`, which for a deep
/// in-band sine is the DC gain — and compares residual RMS. Normalizing by
/// the fitted ratio makes the metric exactly invariant to output scaling
/// and sign.
pub fn noise_reduction_factor(
    input: &Signal,
    output: &Signal,
    sine_freq: f64,
    warmup: usize,
) -> Result<NoiseReductionReport, AnalysisError> {
    if input.samples.len() != output.samples.len() || input.f_s != output.f_s {
        return Err(AnalysisError::SignalMismatch);
    }
    let need = (10.0 * input.f_s / sine_freq).ceil() as usize;
    if !(sine_freq > 0.0) || input.samples.len() < need {
        return Err(AnalysisError::TooShort { need, got: input.samples.len() });
    }
    if input.samples.len() <= warmup {
        return Err(AnalysisError::TooShort { need: warmup + 1, got: input.samples.len() });
    }

    let omega = 2.0 * std::f64::consts::PI * sine_freq / input.f_s;
    let trimmed_in = &input.samples[warmup..];
    let trimmed_out = &output.samples[warmup..];
    let residual = |samples: &[f64]| -> (Vec<f64>, f64) {
        let (a, b, c) = fit_sine(samples, omega, warmup);
        let resid = samples
            .iter()
            .enumerate()
            .map(|(k, &y)| {
                let t = (warmup + k) as f64 * omega;
                y - a * t.sin() - b * t.cos() - c
            })
            .collect();
        (resid, a.hypot(b))
    };
    let (resid_in, amp_in) = residual(trimmed_in);
    let (resid_out, amp_out) = residual(trimmed_out);

    if amp_in == 0.0 {
        return Err(AnalysisError::DegenerateFit("input has no sine component".into()));
    }
    let gain = amp_out / amp_in;
    if gain == 0.0 {
        return Err(AnalysisError::DegenerateFit("output has no sine component".into()));
    }
    let (rms_in, rms_out) = (rms(&resid_in), rms(&resid_out));
    // all-zero up to fit round-off counts as degenerate
    if rms_in <= 1e-12 * rms(trimmed_in) || rms_out <= 1e-12 * rms(trimmed_out) {
        return Err(AnalysisError::DegenerateFit("all-zero residual".into()));
    }
    let peak = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(NoiseReductionReport {
        rms_factor: rms_in / (rms_out / gain),
        peak_factor: peak(&resid_in) / (peak(&resid_out) / gain),
        sine_amplitude_ratio: gain,
    })
}

/// First -3 dB crossing relative to DC, linearly interpolated.
pub fn cutoff_frequency(curve: &ResponseCurve) -> Result<f64, AnalysisError> {
    if curve.is_empty() || !(curve.magnitude[0] > 0.0) {
        return Err(AnalysisError::InvalidCurve("DC magnitude must be positive".into()));
    }
    let threshold = curve.magnitude[0] / 2.0f64.sqrt();
    for k in 1..curve.len() {
        let (m0, m1) = (curve.magnitude[k - 1], curve.magnitude[k]);
        if m1 <= threshold {
            let frac = if m0 == m1 { 1.0 } else { (m0 - threshold) / (m0 - m1) };
            return Ok(curve.freqs[k - 1] + frac * (curve.freqs[k] - curve.freqs[k - 1]));
        }
    }
    Err(AnalysisError::NoCutoffCrossing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceParams, DeviceState};
    use crate::filter::{ideal_fir, weights_from_devices, FilterConfig};
    use approx::assert_relative_eq;

    fn averager_filter() -> FilterState {
        let cfg = FilterConfig::default();
        let taps: Vec<DeviceState> = (0..6)
            .map(|_| DeviceState::from_memristance(DeviceParams::pt_tio2(), 2_000.0).unwrap())
            .collect();
        FilterState::new(cfg, taps).unwrap()
    }

    #[test]
    fn zero_noise_amp_gives_a_pure_sine() {
        let spec = NoisySineSpec { noise_amp: 0.0, ..NoisySineSpec::default() };
        let sig = noisy_sine(&spec);
        let w = 2.0 * std::f64::consts::PI * spec.sine_freq / spec.f_s;
        for (k, &v) in sig.samples.iter().enumerate() {
            assert_relative_eq!(v, 0.75 * (w * k as f64).sin(), epsilon = 1e-12);
        }
        let peak = sig.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak <= 0.75 && peak > 0.7499);
    }

    #[test]
    fn same_seed_reproduces_the_signal_bit_for_bit() {
        let spec = NoisySineSpec { seed: 7, ..NoisySineSpec::default() };
        let a = noisy_sine(&spec);
        let b = noisy_sine(&spec);
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let c = noisy_sine(&NoisySineSpec { seed: 8, ..spec });
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn default_spec_noise_rms_lands_near_one_sixth_volt() {
        // 0.5 V peak at the 3-sigma convention -> RMS 0.1667 V
        let spec = NoisySineSpec { seed: 3, ..NoisySineSpec::default() };
        let sig = noisy_sine(&spec);
        assert!(sig.samples.len() >= 15_000);
        let w = 2.0 * std::f64::consts::PI * spec.sine_freq / spec.f_s;
        let noise: Vec<f64> = sig
            .samples
            .iter()
            .enumerate()
            .map(|(k, &v)| v - 0.75 * (w * k as f64).sin())
            .collect();
        let measured = rms(&noise);
        assert!(
            (measured - 0.5 / 3.0).abs() <= 0.03 * (0.5 / 3.0),
            "noise RMS {measured} too far from 0.1667"
        );
    }

    #[test]
    fn rms_convention_scales_noise_directly() {
        let spec = NoisySineSpec {
            sine_amp: 0.0,
            noise_amp: 0.2,
            noise_amp_convention: NoiseAmpConvention::Rms,
            seed: 11,
            ..NoisySineSpec::default()
        };
        let measured = rms(&noisy_sine(&spec).samples);
        assert!((measured - 0.2).abs() <= 0.03 * 0.2, "noise RMS {measured}");
    }

    #[test]
    fn bandlimited_noise_concentrates_power_in_band() {
        let spec = NoisySineSpec {
            sine_amp: 0.0,
            noise_bw: 2_000.0,
            duration: 2.0,
            seed: 5,
            ..NoisySineSpec::default()
        };
        let sig = noisy_sine(&spec);
        let measured = rms(&sig.samples);
        assert!((measured - 0.5 / 3.0).abs() <= 0.05 * (0.5 / 3.0), "band RMS {measured}");

        // Goertzel-style power probe: deep stopband vs passband
        let power_at = |f: f64| {
            let w = 2.0 * std::f64::consts::PI * f / spec.f_s;
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &v) in sig.samples.iter().enumerate() {
                re += v * (w * k as f64).cos();
                im += v * (w * k as f64).sin();
            }
            re * re + im * im
        };
        let passband: f64 = [500.0, 1_000.0, 1_500.0].iter().map(|&f| power_at(f)).sum();
        let stopband: f64 = [4_000.0, 5_000.0, 6_000.0].iter().map(|&f| power_at(f)).sum();
        assert!(stopband < 1e-3 * passband, "stopband leak {}", stopband / passband);
    }

    #[test]
    fn single_weight_response_is_flat() {
        let curve = frequency_response(&[0.37], 15_000.0, 64);
        for m in &curve.magnitude {
            assert_relative_eq!(*m, 0.37, max_relative = 1e-12);
        }
    }

    #[test]
    fn dc_gain_is_the_weight_sum() {
        let curve = frequency_response(&[0.1, 0.2, -0.05, 0.4], 15_000.0, 16);
        assert_relative_eq!(curve.magnitude[0], 0.65, max_relative = 1e-12);
    }

    #[test]
    fn equal_weight_response_nulls_at_dirichlet_zeros() {
        // six equal taps at 15 kHz null at 2.5, 5.0, 7.5 kHz
        let curve = frequency_response(&[0.17; 6], 15_000.0, 7_501);
        for null in [2_500.0, 5_000.0, 7_500.0] {
            let idx = curve.freqs.iter().position(|&f| (f - null).abs() < 1e-9).unwrap();
            assert!(curve.magnitude[idx] < 1e-12, "|H({null})| = {}", curve.magnitude[idx]);
        }
    }

    #[test]
    fn response_grid_spans_zero_to_nyquist() {
        let curve = frequency_response(&[1.0, 1.0], 15_000.0, 151);
        assert_eq!(curve.freqs[0], 0.0);
        assert_eq!(*curve.freqs.last().unwrap(), 7_500.0);
        assert!(curve.freqs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn magnitude_is_homogeneous_and_cutoff_scale_free() {
        let w1 = [0.17; 6];
        let w3: Vec<f64> = w1.iter().map(|w| 3.0 * w).collect();
        let c1 = frequency_response(&w1, 15_000.0, 2_001);
        let c3 = frequency_response(&w3, 15_000.0, 2_001);
        for (a, b) in c1.magnitude.iter().zip(&c3.magnitude) {
            assert_relative_eq!(3.0 * a, *b, max_relative = 1e-12, epsilon = 1e-15);
        }
        let f1 = cutoff_frequency(&c1).unwrap();
        let f3 = cutoff_frequency(&c3).unwrap();
        assert_relative_eq!(f1, f3, max_relative = 1e-12);
    }

    #[test]
    fn measured_response_tracks_the_analytic_curve() {
        let mut filter = averager_filter();
        let weights = weights_from_devices(filter.taps(), filter.config());
        // probe grid avoids the nulls at 2.5/5.0/7.5 kHz
        let freqs: Vec<f64> = (1..24)
            .map(|k| k as f64 * 300.0)
            .filter(|f| [2_500.0, 5_000.0, 7_500.0].iter().all(|n| (f - n).abs() > 250.0))
            .collect();
        let measured = measured_frequency_response(&mut filter, &freqs, 1.0, 30).unwrap();

        let f_s = filter.config().f_s;
        for (i, &f) in freqs.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * f / f_s;
            let (mut re, mut im) = (0.0, 0.0);
            for (k, w) in weights.iter().enumerate() {
                re += w * (theta * k as f64).cos();
                im -= w * (theta * k as f64).sin();
            }
            let analytic = re.hypot(im);
            let dev = (measured.magnitude[i] - analytic).abs() / analytic;
            assert!(dev <= 0.02, "{f} Hz: measured {} vs {analytic}", measured.magnitude[i]);
        }
    }

    #[test]
    fn measured_gain_at_a_null_is_leakage_bounded() {
        let mut filter = averager_filter();
        let dc_gain: f64 = weights_from_devices(filter.taps(), filter.config()).iter().sum();
        let curve = measured_frequency_response(&mut filter, &[2_500.0], 1.0, 40).unwrap();
        assert!(curve.magnitude[0] <= 0.02 * dc_gain, "null gain {}", curve.magnitude[0]);
    }

    #[test]
    fn zero_probe_amplitude_is_refused() {
        let mut filter = averager_filter();
        let err = measured_frequency_response(&mut filter, &[500.0], 0.0, 10);
        assert!(matches!(err, Err(AnalysisError::BadProbeAmplitude)));
    }

    #[test]
    fn clipping_probe_is_refused() {
        let mut filter = averager_filter();
        // f_s/4 puts samples exactly on the +peak, which overflows the top code
        let err = measured_frequency_response(&mut filter, &[3_750.0], 1.28, 10);
        assert!(matches!(err, Err(AnalysisError::SaturatedProbe(_))));
        let err = measured_frequency_response(&mut filter, &[500.0], 1.29, 10);
        assert!(matches!(err, Err(AnalysisError::BadProbeAmplitude)));
    }

    #[test]
    fn probe_beyond_nyquist_is_refused() {
        let mut filter = averager_filter();
        let err = measured_frequency_response(&mut filter, &[8_000.0], 1.0, 10);
        assert!(matches!(err, Err(AnalysisError::BadProbeFrequency(_))));
    }

    #[test]
    fn identity_filter_scores_factor_one() {
        let sig = noisy_sine(&NoisySineSpec { seed: 2, ..NoisySineSpec::default() });
        let report = noise_reduction_factor(&sig, &sig, 5.0, 6).unwrap();
        assert!((report.rms_factor - 1.0).abs() < 1e-12);
        assert!((report.peak_factor - 1.0).abs() < 1e-12);
        assert!((report.sine_amplitude_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_averager_reaches_root_six_on_white_noise() {
        // variance of a 6-sample mean of i.i.d. noise drops by 6
        let sig = noisy_sine(&NoisySineSpec { seed: 9, ..NoisySineSpec::default() });
        let out = ideal_fir(&[1.0 / 6.0; 6], &sig);
        let report = noise_reduction_factor(&sig, &out, 5.0, 6).unwrap();
        assert!(
            (report.rms_factor - 6.0f64.sqrt()).abs() <= 0.1,
            "rms factor {}",
            report.rms_factor
        );
        assert!((report.sine_amplitude_ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn metric_ignores_output_sign_and_scale() {
        let sig = noisy_sine(&NoisySineSpec { seed: 13, ..NoisySineSpec::default() });
        let out = ideal_fir(&[1.0 / 6.0; 6], &sig);
        let base = noise_reduction_factor(&sig, &out, 5.0, 6).unwrap();
        for scale in [-1.0, 2.5, -0.3] {
            let scaled = Signal::new(out.samples.iter().map(|v| scale * v).collect(), out.f_s);
            let report = noise_reduction_factor(&sig, &scaled, 5.0, 6).unwrap();
            assert_relative_eq!(report.rms_factor, base.rms_factor, max_relative = 1e-9);
            assert_relative_eq!(report.peak_factor, base.peak_factor, max_relative = 1e-9);
        }
    }

    #[test]
    fn degenerate_residual_is_an_error() {
        let spec = NoisySineSpec { noise_amp: 0.0, ..NoisySineSpec::default() };
        let sig = noisy_sine(&spec);
        let err = noise_reduction_factor(&sig, &sig, 5.0, 6);
        assert!(matches!(err, Err(AnalysisError::DegenerateFit(_))));
    }

    #[test]
    fn mismatched_signals_are_refused() {
        let sig = noisy_sine(&NoisySineSpec::default());
        let short = Signal::new(sig.samples[..100].to_vec(), sig.f_s);
        assert!(matches!(
            noise_reduction_factor(&sig, &short, 5.0, 6),
            Err(AnalysisError::SignalMismatch)
        ));
        let wrong_rate = Signal::new(sig.samples.clone(), 2.0 * sig.f_s);
        assert!(matches!(
            noise_reduction_factor(&sig, &wrong_rate, 5.0, 6),
            Err(AnalysisError::SignalMismatch)
        ));
    }

    #[test]
    fn flat_response_has_no_cutoff() {
        let curve = frequency_response(&[1.0], 15_000.0, 256);
        assert!(matches!(cutoff_frequency(&curve), Err(AnalysisError::NoCutoffCrossing)));
    }

    /// |H(f)| of n equal unit weights: the Dirichlet kernel magnitude.
    fn dirichlet_mag(f: f64, f_s: f64, n: usize) -> f64 {
        let x = std::f64::consts::PI * f / f_s;
        if x.sin().abs() < 1e-300 {
            n as f64
        } else {
            ((n as f64 * x).sin() / x.sin()).abs()
        }
    }

    /// Bisects a decreasing closed-form magnitude to its -3 dB point.
    fn bisect_cutoff(mag: impl Fn(f64) -> f64, hi_start: f64) -> f64 {
        let target = mag(0.0) / 2.0f64.sqrt();
        let (mut lo, mut hi) = (0.0, hi_start);
        assert!(mag(hi) < target);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mag(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn averager_cutoff_matches_the_closed_form_bisection() {
        let oracle = bisect_cutoff(|f| dirichlet_mag(f, 15_000.0, 6), 2_000.0);
        let curve = frequency_response(&[0.17; 6], 15_000.0, 8_192);
        let cutoff = cutoff_frequency(&curve).unwrap();
        assert!((cutoff - oracle).abs() <= 1.0, "cutoff {cutoff} vs oracle {oracle}");
    }

    #[test]
    fn second_configuration_roughly_doubles_the_cutoff() {
        // weights 1 : 1 : 0.5 against six equal weights
        let mag2 = |f: f64| {
            let t = 2.0 * std::f64::consts::PI * f / 15_000.0;
            let re = 1.0 + t.cos() + 0.5 * (2.0 * t).cos();
            let im = -t.sin() - 0.5 * (2.0 * t).sin();
            re.hypot(im)
        };
        let oracle1 = bisect_cutoff(|f| dirichlet_mag(f, 15_000.0, 6), 2_000.0);
        let oracle2 = bisect_cutoff(mag2, 4_000.0);
        let ratio = oracle2 / oracle1;
        assert!((1.7..=2.3).contains(&ratio), "closed-form cutoff ratio {ratio}");

        let c1 = cutoff_frequency(&frequency_response(&[0.17; 6], 15_000.0, 8_192)).unwrap();
        let c2 = cutoff_frequency(&frequency_response(&[0.2, 0.2, 0.1], 15_000.0, 8_192)).unwrap();
        assert!((c1 - oracle1).abs() <= 1.0);
        assert!((c2 - oracle2).abs() <= 1.0);
        assert!((1.7..=2.3).contains(&(c2 / c1)), "grid cutoff ratio {}", c2 / c1);
    }

    #[test]
    fn curve_constructor_rejects_malformed_grids() {
        assert!(ResponseCurve::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(ResponseCurve::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(ResponseCurve::new(vec![-1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(ResponseCurve::new(vec![0.0, 1.0], vec![0.5, 0.5]).is_ok());
    }
}
