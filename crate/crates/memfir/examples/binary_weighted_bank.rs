//! The DAC-free variant: each tap's converter is replaced by K_d devices
//! with binary-weighted conductances, driven directly by the register bits.
//! The example sizes such a bank and shows it reproduces the per-tap DAC
//! output to numerical precision.
//!
//!     cargo run --example binary_weighted_bank

use anyhow::Result;
use memfir::analysis::{noisy_sine, NoisySineSpec};
use memfir::device::{DeviceParams, DeviceState};
use memfir::filter::{
    build_binary_bank, run_binary, weights_from_devices, FilterConfig, FilterState,
};

fn main() -> Result<()> {
    let cfg = FilterConfig::default();
    let taps: Vec<DeviceState> = [2_000.0, 2_000.0, 4_000.0, 120_000.0, 120_000.0, 120_000.0]
        .iter()
        .map(|&m| DeviceState::from_memristance(DeviceParams::pt_tio2(), m))
        .collect::<Result<_, _>>()?;
    let weights = weights_from_devices(&taps, &cfg);

    let v_ref = 0.2;
    let bank = build_binary_bank(&weights, &cfg, v_ref)?;
    println!(
        "bank: {} taps x {} bits = {} devices, driven at {v_ref} V",
        bank.n_taps(),
        bank.k_d(),
        bank.device_count()
    );
    println!("\ntap 0 conductance ladder (bit -> siemens -> ohm):");
    for (b, g) in bank.conductances()[0].iter().enumerate() {
        println!("  bit {b}: {g:.3e} S = {:>10.0} ohm", 1.0 / g);
    }

    // same stimulus through both realizations
    let input = noisy_sine(&NoisySineSpec { seed: 42, ..NoisySineSpec::default() });
    let mut dac_filter = FilterState::new(cfg, taps)?;
    let via_dac = dac_filter.run(&input)?;
    let via_bank = run_binary(&bank, &cfg, &input)?;

    let worst = via_dac
        .samples
        .iter()
        .zip(&via_bank.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("\nmax |DAC path - binary bank| over {} samples: {worst:.3e} V", input.len());
    Ok(())
}
