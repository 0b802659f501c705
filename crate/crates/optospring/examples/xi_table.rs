//! Thermal-influence factors for the built-in detector presets.
//!
//! xi is the square-rooted ratio of the thermal-only to the quantum-only PSD
//! of the demodulated output quadrature at the mode-1 line, at zero
//! modulation: below one, quadrature squeezing is a quantum-noise story; the
//! published reference values are printed alongside. The closure convention
//! behind (Gamma, Delta) is documented in the README; computed values track
//! the references with a uniform offset and reproduce their ordering.

use optospring::presets::builtin;
use optospring::{thermal_psd, xi_factor, DimensionlessParams};

fn main() -> optospring::Result<()> {
    let table = builtin();
    let dp = DimensionlessParams::new(0.9, 0.1, 0.1)?;
    println!(
        "{:<8} {:>10} {:>10} {:>12} {:>18}",
        "preset", "xi", "reference", "xi/reference", "S_z,th(20 Hz)"
    );
    for preset in &table.presets {
        let xi = xi_factor(preset, &table.coating, &dp)?;
        let s20 = thermal_psd(
            20.0,
            preset,
            &table.coating,
            dp.coupling,
            dp.optical_damping,
        )?;
        match preset.reference_xi {
            Some(r) => println!(
                "{:<8} {:>10.4} {:>10.2} {:>12.3} {:>18.4e}",
                preset.name,
                xi,
                r,
                xi / r,
                s20
            ),
            None => println!(
                "{:<8} {:>10.4} {:>10} {:>12} {:>18.4e}",
                preset.name, xi, "-", "-", s20
            ),
        }
    }
    Ok(())
}
