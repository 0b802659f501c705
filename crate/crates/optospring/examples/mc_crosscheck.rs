//! Monte Carlo cross-check of the spectral predictions.
//!
//! Integrates the stochastic equations of motion in the time domain,
//! demodulates the output like a lock-in, and compares the resulting
//! quadrature variances with the integrated frequency-domain PSDs. A scaled
//! down version of the `oracle` subcommand: fewer segments, two depths.

use optospring::oracle::{crosscheck, ring_down_check, CrosscheckConfig};

fn main() -> optospring::Result<()> {
    let cfg = CrosscheckConfig {
        depth_fractions: vec![0.0, 0.5],
        segments: 8,
        segment_duration: 20_000.0,
        seed: 11,
        ..CrosscheckConfig::default()
    };
    println!(
        "system: A = {}, g = {}, alpha = {} | seed = {}, {} segments x {} time units",
        cfg.dp.coupling,
        cfg.dp.optical_damping,
        cfg.dp.feedback,
        cfg.seed,
        cfg.segments,
        cfg.segment_duration
    );
    let report = crosscheck(&cfg)?;
    println!(
        "{:>6} {:>6} {:>6} {:>13} {:>13} {:>10} {:>7}",
        "m/mc", "mode", "phi_M", "analytic", "monte-carlo", "3 sigma", "status"
    );
    for e in &report.entries {
        println!(
            "{:>6.2} {:>6} {:>6} {:>13.5e} {:>13.5e} {:>10.2e} {:>7}",
            e.depth_fraction,
            e.mode + 1,
            if e.phi_m == 0.0 { "0" } else { "pi/2" },
            e.analytic,
            e.monte_carlo,
            3.0 * e.sigma,
            if e.pass { "PASS" } else { "FAIL" }
        );
    }

    let (fitted, modes) = ring_down_check(&cfg.dp, cfg.dt)?;
    println!("\nring-down fits (noise off):");
    for (j, &(omega_fit, gamma_fit)) in fitted.iter().enumerate() {
        println!(
            "  mode {}: omega {:.6} (true {:.6}), gamma {:.6} (true {:.6})",
            j + 1,
            omega_fit,
            modes.modes[j].frequency(),
            gamma_fit,
            modes.modes[j].damping()
        );
    }
    println!("\noverall: {}", if report.pass() { "PASS" } else { "FAIL" });
    Ok(())
}
