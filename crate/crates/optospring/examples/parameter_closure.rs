//! Recover the physical (Gamma, Delta) pair for each built-in detector.
//!
//! The dimensionless description fixes (A, g); given a detector's arm
//! length, reduced mass, circulating power, and wavelength, the closure
//! inverts the nondimensionalization and reports the implied relaxation
//! rate, detuning, and where the two eigenmode lines sit in SI frequency.

use optospring::params::frequency_bridge;
use optospring::presets::builtin;
use optospring::{close_parameters, mode_set, DimensionlessParams};

fn main() -> optospring::Result<()> {
    let targets = (0.9, 0.1);
    let dp = DimensionlessParams::new(targets.0, targets.1, 0.1)?;
    let ms = mode_set(&dp)?;
    println!("closure targets: A = {}, g = {}", targets.0, targets.1);
    println!(
        "{:<8} {:>12} {:>12} {:>10} {:>10} {:>10}",
        "preset", "Gamma [1/s]", "Delta [1/s]", "f1 [Hz]", "f2 [Hz]", "kappa"
    );
    for preset in &builtin().presets {
        let (gamma, delta) = close_parameters(
            preset.arm_length,
            preset.reduced_mass,
            preset.equivalent_power(),
            preset.wavelength,
            targets.0,
            targets.1,
        )?;
        let bridge = frequency_bridge(gamma, delta);
        let to_hz = |x: f64| x * bridge / (2.0 * std::f64::consts::PI);
        let kappa = (gamma * preset.one_way_time()).sqrt();
        println!(
            "{:<8} {:>12.4} {:>12.2} {:>10.2} {:>10.2} {:>10.3e}",
            preset.name,
            gamma,
            delta,
            to_hz(ms.modes[0].frequency()),
            to_hz(ms.modes[1].frequency()),
            kappa
        );
    }
    Ok(())
}
