//! Write-verify programming: watch the pulse train steer one device into a
//! +-5% resistance band, then program a whole six-tap bank.
//!
//!     cargo run --example closed_loop_tuning

use anyhow::Result;
use memfir::device::{DeviceParams, DeviceState, VariationSpec};
use memfir::rng;
use memfir::tuner::{tune, tune_bank, TuneConfig};

fn main() -> Result<()> {
    let params = DeviceParams::pt_tio2();
    let cfg = TuneConfig::default();

    // single device, no variation: every pulse is visible in the trace
    let mut dev = DeviceState::with_state(params, 0.0)?;
    let mut r = rng::stream(1, rng::STREAM_TUNE);
    let report = tune(&mut dev, 2_000.0, &cfg, &mut r)?;
    println!("target 2000 ohm from the fully reset state:");
    for (k, rec) in report.trace.iter().enumerate() {
        println!("  pulse {k:>2}: {:+.2} V -> {:>8.1} ohm", rec.voltage, rec.measured_r);
    }
    println!(
        "  converged = {}, {} pulses, final {:.1} ohm\n",
        report.converged, report.pulses_used, report.final_r
    );

    // a varied bank against the paper-exp2 target set
    let variation = VariationSpec { sigma_d2d: 0.05, sigma_c2c: 0.1, seed: 42 };
    let mut spawn_rng = rng::stream(42, rng::STREAM_SPAWN);
    let mut bank: Vec<DeviceState> = (0..6)
        .map(|_| DeviceState::spawn(&params, &variation, &mut spawn_rng))
        .collect::<Result<_, _>>()?;
    let targets = [2_000.0, 2_000.0, 4_000.0, 120_000.0, 120_000.0, 120_000.0];
    let mut tune_rng = rng::stream(42, rng::STREAM_TUNE);
    let outcomes = tune_bank(&mut bank, &targets, &cfg, &mut tune_rng)?;

    println!("bank programming, targets {targets:?}:");
    for (i, outcome) in outcomes.iter().enumerate() {
        let report = outcome.as_ref().expect("feasible target");
        println!(
            "  tap {i}: target {:>6.0} -> {:>9.1} ohm in {:>3} pulses (converged = {})",
            targets[i], report.final_r, report.pulses_used, report.converged
        );
    }
    Ok(())
}
