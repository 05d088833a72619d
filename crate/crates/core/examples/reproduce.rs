//! Runs one reference experiment and prints its tables and comparisons.
//!
//! ```bash
//! cargo run --release --example reproduce -- fig3
//! ```

use mvpot::experiments::{reproduce, Experiment};

fn main() -> mvpot::Result<()> {
    let experiment: Experiment = std::env::args().nth(1).as_deref().unwrap_or("fig2").parse()?;
    let report = reproduce(experiment, 1)?;
    for check in &report.checks {
        println!(
            "[{}] {}: {} (target {})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.observed,
            check.target
        );
    }
    for t in &report.tables {
        println!("table {}: {} rows, columns {:?}", t.name, t.rows.len(), t.columns);
    }
    Ok(())
}
