//! Survey the optomechanical eigenmodes of the coupled cavity-mirror system.
//!
//! Prints the two positive-frequency modes (frequency, damping, quality
//! factor, mode and dual vectors), the parametric threshold of each mode,
//! and the stability verdict, first for the reference parameter set and then
//! for the same set without feedback, which a single detuned pump always
//! destabilizes.

use optospring::{mode_set, DimensionlessParams};

fn main() -> optospring::Result<()> {
    for (label, feedback) in [
        ("with feedback (alpha = 0.1)", 0.1),
        ("without feedback", 0.0),
    ] {
        let dp = DimensionlessParams {
            coupling: 0.9,
            optical_damping: 0.1,
            feedback,
            kappa: 1.0,
        };
        let ms = mode_set(&dp)?;
        println!("{label}: {}", if ms.stable { "STABLE" } else { "UNSTABLE" });
        for (j, m) in ms.modes.iter().enumerate() {
            println!(
                "  mode {}: omega = {:.6}, gamma = {:+.6}, Q = {:8.2}",
                j + 1,
                m.frequency(),
                m.damping(),
                m.quality()
            );
            println!(
                "    v  = ({:+.4}{:+.4}i, {:+.4}{:+.4}i)",
                m.mode_vector[0].re, m.mode_vector[0].im, m.mode_vector[1].re, m.mode_vector[1].im
            );
            println!(
                "    Pi = ({:+.4}{:+.4}i, {:+.4}{:+.4}i)",
                m.dual_vector[0].re, m.dual_vector[0].im, m.dual_vector[1].re, m.dual_vector[1].im
            );
            if ms.stable {
                println!(
                    "    critical modulation depth m_c = {:.6}",
                    ms.critical_modulation(j)?
                );
            }
        }
        println!("  characteristic roots:");
        for r in &ms.all_roots {
            println!("    {:+.6}{:+.6}i", r.re, r.im);
        }
        println!();
    }
    Ok(())
}
