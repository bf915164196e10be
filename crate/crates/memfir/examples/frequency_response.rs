//! Frequency responses of the two bundled tap configurations: analytic curves
//! from the realized weights, sine-probe measurements through the live
//! pipeline, and the -3 dB cutoffs they imply.
//!
//!     cargo run --example frequency_response

use anyhow::Result;
use memfir::analysis::{
    cutoff_frequency, frequency_response, measured_frequency_response,
};
use memfir::device::{DeviceParams, DeviceState};
use memfir::filter::{weights_from_devices, FilterConfig, FilterState};

fn bank(memristances: &[f64]) -> Result<Vec<DeviceState>> {
    Ok(memristances
        .iter()
        .map(|&m| DeviceState::from_memristance(DeviceParams::pt_tio2(), m))
        .collect::<Result<_, _>>()?)
}

fn main() -> Result<()> {
    let cfg = FilterConfig::default();
    let configs: [(&str, Vec<f64>); 2] = [
        ("six equal 2k taps", vec![2_000.0; 6]),
        ("2k/2k/4k, rest parked", vec![2_000.0, 2_000.0, 4_000.0, 120_000.0, 120_000.0, 120_000.0]),
    ];

    let mut cutoffs = Vec::new();
    for (label, ms) in &configs {
        let taps = bank(ms)?;
        let weights = weights_from_devices(&taps, &cfg);
        let analytic = frequency_response(&weights, cfg.f_s, 4_001);
        let cutoff = cutoff_frequency(&analytic)?;
        cutoffs.push(cutoff);

        let mut filter = FilterState::new(cfg, taps)?;
        let probes: Vec<f64> = (1..=7).map(|k| 1_000.0 * k as f64).collect();
        let measured = measured_frequency_response(&mut filter, &probes, 1.0, 20)?;

        println!("{label}: cutoff {cutoff:.1} Hz");
        println!("  freq_hz   analytic   measured");
        for (i, f) in probes.iter().enumerate() {
            let idx = analytic.freqs.iter().position(|g| (g - f).abs() < 1.0).unwrap();
            println!(
                "  {f:>7.0}   {:>8.4}   {:>8.4}",
                analytic.magnitude[idx], measured.magnitude[i]
            );
        }
        println!();
    }
    println!("cutoff ratio (config 2 / config 1): {:.3}", cutoffs[1] / cutoffs[0]);
    Ok(())
}
