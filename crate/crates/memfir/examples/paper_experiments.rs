//! Both end-to-end experiments through the scenario runner: tune the banks,
//! filter the noisy sine, and emit every CSV artifact plus the comparison
//! metrics under out/demo-paper/.
//!
//!     cargo run --example paper_experiments

use anyhow::Result;
use std::path::Path;

fn main() -> Result<()> {
    let out = Path::new("out/demo-paper");
    let summary = memfir::scenario::demo_paper(42, out)?;

    println!("comparison metrics:");
    for (key, value) in &summary.metrics {
        println!("  {key} = {value}");
    }
    println!("\nper-tap programming (exp1 then exp2):");
    for (i, report) in summary.reports.iter().enumerate() {
        println!(
            "  tap {:>2}: converged={} pulses={:>3} final_r={:>9.1}",
            i, report.converged, report.pulses_used, report.final_r
        );
    }
    println!("\nartifacts under {}:", out.display());
    for name in &summary.files {
        println!("  {name}");
    }
    Ok(())
}
