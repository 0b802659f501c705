//! Shot-normalized spectra of the demodulated output light.
//!
//! Reproduces the structure of the output-field picture: at zero modulation
//! both demodulated quadratures trace the same line; with increasing depth
//! the plus quadrature's line shrinks below the unmodulated trace while the
//! minus quadrature's grows, and both return to the shot-noise floor away
//! from resonance. Writes one CSV per depth into `out-example/` using the
//! same emitter as the `spectrum` subcommand.

use optospring::cli::{cmd_spectrum, ScenarioConfig};

fn main() -> optospring::Result<()> {
    let config: ScenarioConfig = toml::from_str(
        r#"
[system]
coupling = 0.9
optical_damping = 0.1
feedback = 0.1

[grid]
half_width_gammas = 10.0
points = 801
band_factor = 6.0

[output]
directory = "out-example"
plot = true
"#,
    )
    .map_err(|e| optospring::Error::Config(e.to_string()))?;
    let resolved = config.resolve()?;

    // Sample a few points of the unmodulated and half-critical spectra.
    let report = cmd_spectrum(&resolved, &[0.0, 0.25, 0.5, 0.75])?;
    print!("{report}");

    let text = std::fs::read_to_string("out-example/output_m0.500.csv")?;
    println!("\nhead of output_m0.500.csv:");
    for line in text.lines().take(24).filter(|l| l.starts_with('#')).take(6) {
        println!("  {line}");
    }
    let mut shown = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        println!("  {line}");
        shown += 1;
        if shown > 3 {
            println!("  ...");
            break;
        }
    }
    Ok(())
}
