//! Device model walkthrough: switching kinetics, retention, and the
//! quasi-DC I-V loop family under progressively larger stress amplitudes.
//!
//!     cargo run --example device_sweeps

use anyhow::Result;
use memfir::device::{DeviceParams, DeviceState};
use memfir::rng;

fn main() -> Result<()> {
    let params = DeviceParams::pt_tio2();
    let mut r = rng::stream(0, rng::STREAM_PROBE);

    println!("device preset: r_on = {} ohm, r_off = {} ohm, threshold = {} V", params.r_on, params.r_off, params.v_threshold);

    // sub-threshold drive leaves the state untouched, bit for bit
    let mut dev = DeviceState::with_state(params, 0.5)?;
    let before = dev.state();
    for v in [0.3, -0.5, 0.5] {
        dev.apply_pulse(v, 1e-2, &mut r)?;
    }
    println!("\nretention: 10 ms at up to +-0.5 V moved the state by {}", dev.state() - before);

    // above threshold the state walks exponentially; reset then set back
    let mut dev = DeviceState::with_state(params, 1.0)?;
    println!("\nreset staircase (1.0 V, 1 ms pulses):");
    for pulse in 1..=6 {
        dev.apply_pulse(1.0, 1e-3, &mut r)?;
        println!("  pulse {pulse}: s = {:.4}, M = {:.0} ohm", dev.state(), dev.memristance());
    }
    println!("set staircase (-1.0 V, 1 ms pulses):");
    for pulse in 1..=6 {
        dev.apply_pulse(-1.0, 1e-3, &mut r)?;
        println!("  pulse {pulse}: s = {:.4}, M = {:.0} ohm", dev.state(), dev.memristance());
    }

    // the loop family: larger peaks push the final resistance further up
    println!("\nreset-loop family (fresh device each, 201-point triangle):");
    for v_peak in [0.8, 1.0, 1.2, 1.5] {
        let mut dev = DeviceState::with_state(params, 1.0)?;
        let trace = dev.quasi_dc_voltage_sweep(v_peak, 201, 1e-4, &mut r)?;
        let i_max = trace.iter().map(|(_, i)| i.abs()).fold(0.0f64, f64::max);
        println!(
            "  peak {v_peak:.1} V: final M = {:>8.0} ohm, peak current = {:.2} mA",
            dev.memristance(),
            1e3 * i_max
        );
    }

    // set direction driven by current, self-limiting near v_threshold / I
    let mut dev = DeviceState::with_state(params, 0.0)?;
    println!("\nset sweep at -1 mA compliance-checked current drive:");
    dev.quasi_dc_current_sweep(-1e-3, 201, 1e-4, 3.0, &mut r)?;
    println!("  final M = {:.0} ohm (r_on = {} ohm)", dev.memristance(), params.r_on);
    Ok(())
}
