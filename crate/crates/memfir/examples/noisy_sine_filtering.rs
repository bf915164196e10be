//! The `paper-exp1` scenario as library calls: a six-tap averaging bank
//! filters a 5 Hz sine buried in wideband noise, and the metrics quantify
//! how much noise survives.
//!
//!     cargo run --example noisy_sine_filtering

use anyhow::Result;
use memfir::analysis::{noise_reduction_factor, noisy_sine, NoisySineSpec};
use memfir::device::{DeviceParams, DeviceState};
use memfir::filter::{weights_from_devices, FilterConfig, FilterState};

fn main() -> Result<()> {
    let cfg = FilterConfig::default();
    let taps: Vec<DeviceState> = (0..cfg.n_taps)
        .map(|_| DeviceState::from_memristance(DeviceParams::pt_tio2(), 2_000.0))
        .collect::<Result<_, _>>()?;
    let weights = weights_from_devices(&taps, &cfg);
    println!("tap weights: {weights:?}");
    println!("dc gain: {:.4}", weights.iter().sum::<f64>());

    let spec = NoisySineSpec { seed: 42, ..NoisySineSpec::default() };
    let input = noisy_sine(&spec);
    println!(
        "\nstimulus: {:.2} V sine at {} Hz + {:.2} V noise ({} samples at {} Hz)",
        spec.sine_amp,
        spec.sine_freq,
        spec.noise_amp,
        input.len(),
        spec.f_s
    );

    let mut filter = FilterState::new(cfg, taps)?;
    let output = filter.run(&input)?;
    let report = noise_reduction_factor(&input, &output, spec.sine_freq, cfg.n_taps)?;

    println!("\nnoise reduction (RMS):  {:.3}x", report.rms_factor);
    println!("noise reduction (peak): {:.3}x", report.peak_factor);
    println!("sine amplitude ratio:   {:.5} (gain-normalized: {:.5})",
        report.sine_amplitude_ratio,
        report.sine_amplitude_ratio / weights.iter().sum::<f64>());
    println!("ADC clips encountered:  {}", filter.saturation_count());
    Ok(())
}
