//! Built-in and user-supplied detector preset tables.
//!
//! The built-in table ships as `data/presets.toml`; user files use the same
//! format (see the comments in that file) and are loaded with
//! [`load_presets_file`].

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::noise::{CoatingParams, DetectorPreset};

const BUILTIN: &str = include_str!("../data/presets.toml");

#[derive(Debug, Deserialize)]
struct PresetFile {
    #[serde(rename = "preset", default)]
    presets: Vec<DetectorPreset>,
    #[serde(default)]
    coating: Option<CoatingParams>,
}

/// A parsed preset table plus the coating stack it applies to.
#[derive(Debug, Clone)]
pub struct PresetTable {
    pub presets: Vec<DetectorPreset>,
    pub coating: CoatingParams,
}

impl PresetTable {
    pub fn lookup(&self, name: &str) -> Result<&DetectorPreset> {
        self.presets
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.presets.iter().map(|p| p.name.as_str()).collect()
    }
}

fn parse(text: &str, origin: &str) -> Result<PresetTable> {
    let file: PresetFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    let coating = file.coating.unwrap_or_default();
    coating.validate()?;
    if file.presets.is_empty() {
        return Err(Error::Config(format!("{origin}: no [[preset]] blocks")));
    }
    for p in &file.presets {
        p.validate()?;
    }
    Ok(PresetTable {
        presets: file.presets,
        coating,
    })
}

/// The built-in table (aLIGO, ET, GP, AEI, Gingin).
pub fn builtin() -> PresetTable {
    parse(BUILTIN, "builtin presets").expect("embedded preset table is valid")
}

/// Load a user preset file in the same format as the built-in table.
pub fn load_presets_file(path: &Path) -> Result<PresetTable> {
    let text = std::fs::read_to_string(path)?;
    parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_five_presets() {
        let table = builtin();
        assert_eq!(table.names(), vec!["aLIGO", "ET", "GP", "AEI", "Gingin"]);
    }

    #[test]
    fn builtin_values_match_source_table() {
        let table = builtin();
        let ligo = table.lookup("aLIGO").unwrap();
        assert_eq!(ligo.arm_length, 4.0e3);
        assert_eq!(ligo.reduced_mass, 10.0);
        assert_eq!(ligo.equivalent_power(), 1.0e4);
        let et = table.lookup("ET").unwrap();
        assert_eq!(et.wavelength, 1.55e-6);
        assert_eq!(et.temperature, 10.0);
        assert_eq!(et.reduced_mass, 50.0);
        // Coating stack is quarter-wave at 1.064 um for every preset.
        assert_eq!(table.coating.coating_wavelength, 1.064e-6);
    }

    #[test]
    fn lookup_is_case_insensitive_and_rejects_unknown() {
        let table = builtin();
        assert!(table.lookup("gingin").is_ok());
        assert!(matches!(table.lookup("LISA"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn user_file_round_trip() {
        let dir = std::env::temp_dir().join("optospring-preset-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("custom.toml");
        std::fs::write(
            &path,
            r#"
[[preset]]
name = "bench"
arm_length = 1.0
reduced_mass = 0.01
beam_spot_radius = 0.002
per_arm_power_kw = 0.5
wavelength = 1.064e-6
temperature = 300.0
"#,
        )
        .unwrap();
        let table = load_presets_file(&path).unwrap();
        let p = table.lookup("bench").unwrap();
        assert_eq!(p.equivalent_power(), 1e3);
        assert!(p.reference_xi.is_none());
    }

    #[test]
    fn rejects_invalid_preset_values() {
        let bad = r#"
[[preset]]
name = "broken"
arm_length = -1.0
reduced_mass = 0.01
beam_spot_radius = 0.002
per_arm_power_kw = 0.5
wavelength = 1.064e-6
temperature = 300.0
"#;
        assert!(super::parse(bad, "test").is_err());
    }
}
