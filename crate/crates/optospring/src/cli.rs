//! Scenario configuration and the four command pipelines behind the
//! `optospring` binary (`modes`, `spectrum`, `xi`, `oracle`).
//!
//! Scenarios come from a TOML config file and/or command-line overrides; a
//! scenario names either a dimensionless parameter triple or a detector
//! preset with closure targets, plus modulation, grid, noise and oracle
//! settings. Every emitted file starts with `#` comment lines echoing the
//! fully resolved configuration, so a run can be reproduced from any of its
//! outputs.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::modes::{mode_set, ModeSet};
use crate::noise::{xi_factor, NoiseModel, ThermalChannel};
use crate::oracle::{crosscheck, ring_down_check, CrosscheckConfig, CrosscheckReport};
use crate::params::{DimensionlessParams, ModulationParams};
use crate::presets::{builtin, load_presets_file, PresetTable};
use crate::readout::output_psd;
use crate::spectra::{linear_grid, quadrature_psd, SolverOptions};

/// Exit codes used by the binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ORACLE_FAIL: i32 = 3;

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::Config(_) | Error::UnknownPreset(_) => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub modulation: ModulationSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Dimensionless coupling A (mutually exclusive with `preset`).
    pub coupling: Option<f64>,
    pub optical_damping: Option<f64>,
    /// Dimensionless feedback alpha (used on both routes).
    pub feedback: Option<f64>,
    pub kappa: Option<f64>,
    /// Detector preset name (mutually exclusive with the dimensionless set).
    pub preset: Option<String>,
    /// Closure targets used with `preset`.
    pub coupling_target: Option<f64>,
    pub damping_target: Option<f64>,
    /// Optional user preset table file.
    pub preset_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    /// Depth as a fraction of the mode-1 critical depth (portable knob).
    pub depth_fraction: Option<f64>,
    /// Absolute depth |m| (mutually exclusive with `depth_fraction`).
    pub depth: Option<f64>,
    /// Modulation phase; defaults to the phase that makes eps11 real
    /// positive, so the plus quadrature is the squeezed one.
    pub phase: Option<f64>,
    /// Pump half-frequency p (power modulated at 2p); defaults to omega_1.
    pub pump_half_frequency: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_width_gammas: f64,
    pub points: usize,
    pub band_factor: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width_gammas: 10.0,
            points: 2001,
            band_factor: 6.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Include coating Brownian noise (requires a preset system).
    #[serde(default)]
    pub thermal: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub seed: u64,
    pub segments: usize,
    pub segment_duration: f64,
    pub dt: f64,
    pub noise_cutoff: f64,
    pub lowpass_gammas: f64,
    pub depth_fractions: Vec<f64>,
    /// Negative control: corrupt the modulation sign in the simulation.
    pub corrupt_epsilon: bool,
    /// Oracle system defaults to a gentle regime where the slow-amplitude
    /// model error is far below the tolerance; set to run the scenario
    /// system instead.
    pub use_scenario_system: bool,
    /// Write one raw trajectory (t, b1, z) to this file for debugging.
    pub dump_trajectory: Option<PathBuf>,
}

impl Default for OracleSection {
    fn default() -> Self {
        let d = CrosscheckConfig::default();
        Self {
            seed: d.seed,
            segments: d.segments,
            segment_duration: d.segment_duration,
            dt: d.dt,
            noise_cutoff: d.noise_cutoff,
            lowpass_gammas: d.lowpass_gammas,
            depth_fractions: d.depth_fractions,
            corrupt_epsilon: false,
            use_scenario_system: false,
            dump_trajectory: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Resolve into concrete parameters, running the closure when a preset
    /// system is requested.
    pub fn resolve(&self) -> Result<Resolved> {
        let table = match &self.system.preset_file {
            Some(path) => load_presets_file(path)?,
            None => builtin(),
        };
        let dimensionless_given =
            self.system.coupling.is_some() || self.system.optical_damping.is_some();
        let preset_given = self.system.preset.is_some();
        if dimensionless_given && preset_given {
            return Err(Error::Config(
                "system: give either (coupling, optical_damping) or preset, not both".into(),
            ));
        }
        let feedback = self.system.feedback.unwrap_or(0.1);
        let (dp, preset) = if preset_given {
            let name = self.system.preset.as_ref().unwrap();
            let preset = table.lookup(name)?.clone();
            let a = self.system.coupling_target.unwrap_or(0.9);
            let g = self.system.damping_target.unwrap_or(0.1);
            let channel = ThermalChannel::new(&preset, &table.coating, a, g)?;
            let kappa = self
                .system
                .kappa
                .unwrap_or((channel.gamma_si * preset.one_way_time()).sqrt());
            (
                DimensionlessParams::new(a, g, feedback)?.with_kappa(kappa)?,
                Some((preset, channel)),
            )
        } else {
            if !dimensionless_given {
                return Err(Error::Config(
                    "system: set (coupling, optical_damping) or preset".into(),
                ));
            }
            let a = self
                .system
                .coupling
                .ok_or_else(|| Error::Config("system.coupling missing".into()))?;
            let g = self
                .system
                .optical_damping
                .ok_or_else(|| Error::Config("system.optical_damping missing".into()))?;
            let kappa = self.system.kappa.unwrap_or(1.0);
            (
                DimensionlessParams::new(a, g, feedback)?.with_kappa(kappa)?,
                None,
            )
        };

        let modes = mode_set(&dp)?;
        let critical = modes.critical_modulation(0)?;

        if self.modulation.depth_fraction.is_some() && self.modulation.depth.is_some() {
            return Err(Error::Config(
                "modulation: give depth_fraction or depth, not both".into(),
            ));
        }
        if let Some(f) = self.modulation.depth_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!(
                    "modulation.depth_fraction must lie in [0, 1], got {f}"
                )));
            }
        }
        let depth = match (self.modulation.depth_fraction, self.modulation.depth) {
            (Some(f), None) => f * critical,
            (None, Some(d)) => d,
            (None, None) => 0.0,
            (Some(_), Some(_)) => unreachable!(),
        };
        let phase = self
            .modulation
            .phase
            .unwrap_or_else(|| modes.squeezing_phase(0));
        let pump = self
            .modulation
            .pump_half_frequency
            .unwrap_or_else(|| modes.modes[0].frequency());
        let modulation = ModulationParams::new(depth, phase, pump)?;

        let noise = match (&preset, self.noise.thermal) {
            (_, false) => NoiseModel::vacuum(),
            (Some((_, channel)), true) => NoiseModel::with_thermal(*channel),
            (None, true) => {
                return Err(Error::Config(
                    "noise.thermal = true requires a preset system".into(),
                ))
            }
        };

        if self.grid.points < 2 {
            return Err(Error::Config("grid.points must be >= 2".into()));
        }
        let grid = linear_grid(
            self.grid.half_width_gammas * modes.modes[0].damping(),
            self.grid.points,
        );

        Ok(Resolved {
            dp,
            modes,
            critical,
            modulation,
            noise,
            preset: preset.map(|(p, _)| p),
            grid,
            options: SolverOptions {
                band_factor: self.grid.band_factor,
            },
            table,
            oracle: self.oracle.clone(),
            out_dir: self.output.directory.clone(),
            plot: self.output.plot,
        })
    }
}

/// A fully resolved scenario.
pub struct Resolved {
    pub dp: DimensionlessParams,
    pub modes: ModeSet,
    pub critical: f64,
    pub modulation: ModulationParams,
    pub noise: NoiseModel,
    pub preset: Option<crate::noise::DetectorPreset>,
    pub grid: Vec<f64>,
    pub options: SolverOptions,
    pub table: PresetTable,
    pub oracle: OracleSection,
    pub out_dir: Option<PathBuf>,
    pub plot: bool,
}

impl Resolved {
    /// `# key = value` lines echoed into every emitted file.
    pub fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("coupling = {:.15}", self.dp.coupling),
            format!("optical_damping = {:.15}", self.dp.optical_damping),
            format!("feedback = {:.15}", self.dp.feedback),
            format!("kappa = {:.15}", self.dp.kappa),
            format!("omega_1 = {:.15}", self.modes.modes[0].frequency()),
            format!("gamma_1 = {:.15}", self.modes.modes[0].damping()),
            format!("omega_2 = {:.15}", self.modes.modes[1].frequency()),
            format!("gamma_2 = {:.15}", self.modes.modes[1].damping()),
            format!("critical_depth = {:.15}", self.critical),
            format!("modulation_depth = {:.15}", self.modulation.depth),
            format!("modulation_phase = {:.15}", self.modulation.phase),
            format!(
                "pump_half_frequency = {:.15}",
                self.modulation.pump_half_frequency
            ),
            format!("band_factor = {:.15}", self.options.band_factor),
            format!("thermal = {}", self.noise.thermal.is_some()),
        ];
        if let Some(p) = &self.preset {
            lines.push(format!("preset = {}", p.name));
        }
        lines
    }

    fn out_path(&self, file: &str) -> Result<PathBuf> {
        let dir = self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir.join(file))
    }
}

fn write_csv(path: &Path, header: &[String], columns: &[(&str, &[f64])]) -> Result<()> {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    let _ = writeln!(out, "{}", names.join(","));
    let rows = columns[0].1.len();
    for r in 0..rows {
        let vals: Vec<String> = columns
            .iter()
            .map(|(_, c)| format!("{:.14e}", c[r]))
            .collect();
        let _ = writeln!(out, "{}", vals.join(","));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Minimal SVG polyline plot (log10 ordinate).
fn write_svg(
    path: &Path,
    header: &[String],
    title: &str,
    x: &[f64],
    series: &[(&str, &[f64])],
) -> Result<()> {
    let (w, h, ml, mb) = (720.0, 480.0, 70.0, 50.0);
    let (x0, x1) = (x[0], *x.last().unwrap());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, s) in series {
        for &v in *s {
            if v > 0.0 {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let (ly0, ly1) = (
        lo.log10().floor(),
        hi.log10().ceil().max(lo.log10().floor() + 1.0),
    );
    let px = |xv: f64| ml + (xv - x0) / (x1 - x0) * (w - ml - 20.0);
    let py = |yv: f64| h - mb - (yv.max(1e-300).log10() - ly0) / (ly1 - ly0) * (h - mb - 30.0);
    let colors = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
    ];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#
    );
    for line in header {
        let _ = writeln!(svg, "<!-- {line} -->");
    }
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14">{title}</text>"#,
        ml
    );
    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - mb,
        w - 20.0,
        h - mb
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{ml}" y1="30" x2="{ml}" y2="{}" stroke="black"/>"#,
        h - mb
    );
    for k in 0..=4 {
        let xv = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{xv:.3}</text>"#,
            px(xv),
            h - mb + 18.0
        );
    }
    let mut dec = ly0;
    while dec <= ly1 {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">1e{dec:.0}</text>"#,
            ml - 6.0,
            py(10f64.powf(dec)) + 4.0
        );
        dec += 1.0;
    }
    for (idx, (name, s)) in series.iter().enumerate() {
        let pts: Vec<String> = x
            .iter()
            .zip(s.iter())
            .map(|(&xv, &yv)| format!("{:.2},{:.2}", px(xv), py(yv)))
            .collect();
        let color = colors[idx % colors.len()];
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{name}</text>"#,
            w - 150.0,
            40.0 + 16.0 * idx as f64
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg)?;
    Ok(())
}

fn fmt_c(c: num_complex::Complex64) -> String {
    format!("{:+.6}{:+.6}i", c.re, c.im)
}

/// Eigenmode survey: frequencies, dampings, quality factors, vectors,
/// critical depth, stability verdict.
pub fn cmd_modes(resolved: &Resolved) -> Result<String> {
    let ms = &resolved.modes;
    let mut out = String::new();
    for line in resolved.header_lines() {
        let _ = writeln!(out, "# {line}");
    }
    let verdict = if ms.stable { "STABLE" } else { "UNSTABLE" };
    let _ = writeln!(out, "stability: {verdict}");
    for (j, m) in ms.modes.iter().enumerate() {
        let _ = writeln!(out, "mode {}:", j + 1);
        let _ = writeln!(out, "  omega   = {:.12}", m.frequency());
        let _ = writeln!(out, "  gamma   = {:.12}", m.damping());
        let _ = writeln!(out, "  Q       = {:.4}", m.quality());
        let _ = writeln!(
            out,
            "  v       = ({}, {})",
            fmt_c(m.mode_vector[0]),
            fmt_c(m.mode_vector[1])
        );
        let _ = writeln!(
            out,
            "  Pi      = ({}, {})",
            fmt_c(m.dual_vector[0]),
            fmt_c(m.dual_vector[1])
        );
        let _ = writeln!(out, "  m_c     = {:.12}", ms.critical_modulation(j)?);
    }
    let _ = writeln!(out, "all roots:");
    for r in &ms.all_roots {
        let _ = writeln!(out, "  {}", fmt_c(*r));
    }
    if let Some(dir) = &resolved.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("modes.txt"), &out)?;
    }
    Ok(out)
}

/// Internal and output spectra for a list of modulation depths (fractions of
/// the critical depth). One CSV pair per depth; optional SVG plots.
pub fn cmd_spectrum(resolved: &Resolved, depth_fractions: &[f64]) -> Result<String> {
    if depth_fractions.is_empty() {
        return Err(Error::Config("spectrum: empty depth list".into()));
    }
    for &f in depth_fractions {
        if !(0.0..1.0).contains(&f) {
            return Err(Error::AboveThreshold {
                depth: f * resolved.critical,
                threshold: resolved.critical,
            });
        }
    }
    let ms = &resolved.modes;
    let header = resolved.header_lines();
    let unmod = ModulationParams::off(resolved.modulation.pump_half_frequency);
    let internal_unmod = quadrature_psd(
        ms,
        &unmod,
        &resolved.grid,
        &resolved.dp,
        &resolved.noise,
        &resolved.options,
    )?;
    let output_unmod = output_psd(
        ms,
        &unmod,
        &resolved.grid,
        &resolved.dp,
        &resolved.noise,
        &resolved.options,
    )?;
    let mut report = String::new();
    let mut warned = false;
    for &fraction in depth_fractions {
        let modulation = ModulationParams {
            depth: fraction * resolved.critical,
            ..resolved.modulation
        };
        let internal = quadrature_psd(
            ms,
            &modulation,
            &resolved.grid,
            &resolved.dp,
            &resolved.noise,
            &resolved.options,
        )?;
        let output = output_psd(
            ms,
            &modulation,
            &resolved.grid,
            &resolved.dp,
            &resolved.noise,
            &resolved.options,
        )?;
        if !warned {
            for w in internal[0].warnings.iter().chain(output.warnings.iter()) {
                let _ = writeln!(report, "warning: {w}");
            }
            warned = true;
        }
        let tag = format!("{fraction:.3}");
        let mut head = header.clone();
        head.push(format!("depth_fraction = {fraction:.15}"));
        head.push(format!("depth_absolute = {:.15}", modulation.depth));

        let internal_path = resolved.out_path(&format!("internal_m{tag}.csv"))?;
        write_csv(
            &internal_path,
            &head,
            &[
                ("x", &resolved.grid),
                ("S_G_plus", &internal[0].s_plus),
                ("S_G_minus", &internal[0].s_minus),
                ("S_unmod", &internal_unmod[0].s_plus),
            ],
        )?;
        let output_path = resolved.out_path(&format!("output_m{tag}.csv"))?;
        write_csv(
            &output_path,
            &head,
            &[
                ("x", &resolved.grid),
                ("S_A_plus", &output.s_a_plus),
                ("S_A_minus", &output.s_a_minus),
                ("S_unmod", &output_unmod.s_a_plus),
            ],
        )?;
        let _ = writeln!(
            report,
            "m = {fraction:.3} m_c: S_A+(0) = {:.6}, S_A-(0) = {:.6} -> {}, {}",
            mid(&output.s_a_plus),
            mid(&output.s_a_minus),
            internal_path.display(),
            output_path.display()
        );
        if resolved.plot {
            let svg_path = resolved.out_path(&format!("output_m{tag}.svg"))?;
            write_svg(
                &svg_path,
                &head,
                &format!("output spectra at m = {tag} m_c (shot-normalized)"),
                &resolved.grid,
                &[
                    ("S_A_plus", &output.s_a_plus),
                    ("S_A_minus", &output.s_a_minus),
                    ("S_unmod", &output_unmod.s_a_plus),
                ],
            )?;
            let _ = writeln!(report, "  plot -> {}", svg_path.display());
        }
    }
    Ok(report)
}

fn mid(v: &[f64]) -> f64 {
    v[v.len() / 2]
}

/// Thermal-influence table: computed xi per preset, with the published
/// reference where the table provides one.
pub fn cmd_xi(resolved: &Resolved, preset_names: &[String]) -> Result<String> {
    let names: Vec<String> = if preset_names.is_empty() {
        resolved
            .table
            .names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        preset_names.to_vec()
    };
    let mut out = String::new();
    for line in resolved.header_lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(
        out,
        "{:<10} {:>12} {:>12} {:>12}",
        "preset", "xi", "reference", "deviation"
    );
    let mut rows = Vec::new();
    for name in &names {
        let preset = resolved.table.lookup(name)?;
        let xi = xi_factor(preset, &resolved.table.coating, &resolved.dp)?;
        match preset.reference_xi {
            Some(reference) => {
                let dev = (xi - reference) / reference;
                let _ = writeln!(
                    out,
                    "{:<10} {:>12.4} {:>12.4} {:>11.1}%",
                    preset.name,
                    xi,
                    reference,
                    100.0 * dev
                );
                rows.push((preset.name.clone(), xi, Some(reference)));
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:<10} {:>12.4} {:>12} {:>12}",
                    preset.name, xi, "-", "-"
                );
                rows.push((preset.name.clone(), xi, None));
            }
        }
    }
    if let Some(dir) = &resolved.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("xi_table.txt"), &out)?;
    }
    Ok(out)
}

/// Monte Carlo oracle run; the binary exits nonzero when it reports FAIL.
pub fn cmd_oracle(resolved: &Resolved) -> Result<(String, CrosscheckReport)> {
    let section = &resolved.oracle;
    if section.depth_fractions.is_empty() {
        return Err(Error::Config("oracle: empty depth list".into()));
    }
    let cfg = CrosscheckConfig {
        dp: if section.use_scenario_system {
            resolved.dp
        } else {
            CrosscheckConfig::default().dp
        },
        depth_fractions: section.depth_fractions.clone(),
        seed: section.seed,
        segments: section.segments,
        segment_duration: section.segment_duration,
        dt: section.dt,
        noise_cutoff: section.noise_cutoff,
        lowpass_gammas: section.lowpass_gammas,
        corrupt_epsilon: section.corrupt_epsilon,
    };
    let report = crosscheck(&cfg)?;

    if let Some(path) = &section.dump_trajectory {
        let modes = mode_set(&cfg.dp)?;
        let modulation = crate::params::ModulationParams {
            depth: cfg.depth_fractions[0] * modes.critical_modulation(0)?,
            phase: modes.squeezing_phase(0),
            pump_half_frequency: modes.modes[0].frequency(),
        };
        let sim_cfg = crate::oracle::SimulationConfig {
            noise_cutoff: cfg.noise_cutoff,
            ..crate::oracle::SimulationConfig::new(
                cfg.dp,
                modulation,
                cfg.segment_duration,
                cfg.dt,
                cfg.seed,
            )
        };
        let run = crate::oracle::simulate(&sim_cfg)?;
        crate::oracle::dump_trajectory(&run, &sim_cfg, path)?;
    }

    let mut out = String::new();
    for line in resolved.header_lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# oracle seed = {}", report.seed);
    let _ = writeln!(
        out,
        "# segments = {}, segment_duration = {}, dt = {}",
        report.segments, report.segment_duration, report.dt
    );
    let _ = writeln!(
        out,
        "# oracle system: A = {:.4}, g = {:.4}, alpha = {:.4}",
        cfg.dp.coupling, cfg.dp.optical_damping, cfg.dp.feedback
    );
    if cfg.corrupt_epsilon {
        let _ = writeln!(
            out,
            "# NEGATIVE CONTROL: modulation sign corrupted in simulation"
        );
    }
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>8} {:>14} {:>14} {:>10} {:>7}",
        "m/mc", "mode", "phi_M", "analytic", "monte-carlo", "3sigma", "status"
    );
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{:>6.2} {:>6} {:>8} {:>14.6e} {:>14.6e} {:>10.2e} {:>7}",
            e.depth_fraction,
            e.mode + 1,
            if e.phi_m == 0.0 { "0" } else { "pi/2" },
            e.analytic,
            e.monte_carlo,
            3.0 * e.sigma,
            if e.pass { "PASS" } else { "FAIL" }
        );
    }
    // Ring-down consistency at the same system.
    let (fitted, ms) = ring_down_check(&cfg.dp, cfg.dt)?;
    for j in 0..2 {
        let (fo, fg) = fitted[j];
        let omega = ms.modes[j].frequency();
        let gamma = ms.modes[j].damping();
        let _ = writeln!(
            out,
            "ring-down mode {}: omega {:.6} vs {:.6} ({:+.3}%), gamma {:.6} vs {:.6} ({:+.3}%)",
            j + 1,
            fo,
            omega,
            100.0 * (fo - omega) / omega,
            fg,
            gamma,
            100.0 * (fg - gamma) / gamma
        );
    }
    let _ = writeln!(
        out,
        "overall: {}",
        if report.pass() { "PASS" } else { "FAIL" }
    );
    if let Some(dir) = &resolved.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("oracle_report.txt"), &out)?;
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ScenarioConfig {
        toml::from_str(
            r#"
[system]
coupling = 0.9
optical_damping = 0.1
feedback = 0.1
"#,
        )
        .unwrap()
    }

    #[test]
    fn resolves_dimensionless_scenario() {
        let resolved = base_config().resolve().unwrap();
        assert!((resolved.dp.coupling - 0.9).abs() < 1e-15);
        assert_eq!(resolved.grid.len(), 2001);
        assert!(resolved.critical > 0.0);
        // Default modulation phase makes eps11 real positive.
        let eps = resolved.modes.epsilon_matrix(&ModulationParams {
            depth: 0.01,
            ..resolved.modulation
        });
        assert!(eps[0][0].im.abs() < 1e-12 * eps[0][0].re);
    }

    #[test]
    fn rejects_both_system_routes() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
[system]
coupling = 0.9
optical_damping = 0.1
preset = "aLIGO"
"#,
        )
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_thermal_without_preset() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
[system]
coupling = 0.9
optical_damping = 0.1

[noise]
thermal = true
"#,
        )
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn preset_route_sets_physical_kappa() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
[system]
preset = "aLIGO"

[noise]
thermal = true
"#,
        )
        .unwrap();
        let resolved = cfg.resolve().unwrap();
        // kappa = sqrt(Gamma tau) for the closed aLIGO parameters.
        let expect = (8.635593901 * (4.0e3 / crate::params::SPEED_OF_LIGHT)).sqrt();
        assert!((resolved.dp.kappa - expect).abs() / expect < 1e-8);
        assert!(resolved.noise.thermal.is_some());
    }

    #[test]
    fn rejects_depth_fraction_out_of_range() {
        let mut cfg = base_config();
        cfg.modulation.depth_fraction = Some(1.5);
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn modes_report_has_verdict_and_echo() {
        let resolved = base_config().resolve().unwrap();
        let report = cmd_modes(&resolved).unwrap();
        assert!(report.contains("stability: STABLE"));
        assert!(report.contains("# coupling = 0.9"));
        assert!(report.contains("m_c"));
    }

    #[test]
    fn unstable_verdict_without_feedback() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
[system]
coupling = 0.9
optical_damping = 0.1
feedback = 0.0
"#,
        )
        .unwrap();
        let resolved = cfg.resolve().unwrap();
        let report = cmd_modes(&resolved).unwrap();
        assert!(report.contains("stability: UNSTABLE"));
    }

    #[test]
    fn spectrum_rejects_empty_and_overdriven_depths() {
        let resolved = base_config().resolve().unwrap();
        assert!(matches!(
            cmd_spectrum(&resolved, &[]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            cmd_spectrum(&resolved, &[1.2]),
            Err(Error::AboveThreshold { .. })
        ));
    }

    #[test]
    fn spectrum_emits_file_pairs_with_headers() {
        let dir = std::env::temp_dir().join(format!("optospring-cli-{}", std::process::id()));
        let mut cfg = base_config();
        cfg.output.directory = Some(dir.clone());
        cfg.grid.points = 41;
        let resolved = cfg.resolve().unwrap();
        let report = cmd_spectrum(&resolved, &[0.0, 0.5, 0.9]).unwrap();
        assert!(report.contains("m = 0.500"));
        for tag in ["0.000", "0.500", "0.900"] {
            for kind in ["internal", "output"] {
                let path = dir.join(format!("{kind}_m{tag}.csv"));
                let text = std::fs::read_to_string(&path).unwrap();
                assert!(text.starts_with("# coupling"), "{path:?}");
                assert!(text.contains("depth_fraction"));
                let data_lines = text.lines().filter(|l| !l.starts_with('#')).skip(1).count();
                assert_eq!(data_lines, 41);
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn partial_oracle_section_fills_defaults() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
[system]
coupling = 0.9
optical_damping = 0.1

[oracle]
seed = 123
depth_fractions = [0.5]
"#,
        )
        .unwrap();
        assert_eq!(cfg.oracle.seed, 123);
        assert_eq!(cfg.oracle.depth_fractions, vec![0.5]);
        assert_eq!(cfg.oracle.segments, OracleSection::default().segments);
    }

    #[test]
    fn xi_single_row_table() {
        let resolved = base_config().resolve().unwrap();
        let out = cmd_xi(&resolved, &["aLIGO".to_string()]).unwrap();
        assert!(out.contains("aLIGO"));
        assert!(out.contains("deviation"));
        assert!(!out.contains("Gingin"));
    }

    #[test]
    fn xi_defaults_to_all_builtin_rows() {
        let resolved = base_config().resolve().unwrap();
        let out = cmd_xi(&resolved, &[]).unwrap();
        for name in ["aLIGO", "ET", "GP", "AEI", "Gingin"] {
            assert!(out.contains(name), "missing row {name}");
        }
    }

    #[test]
    fn xi_custom_preset_has_no_reference_column() {
        let dir = std::env::temp_dir().join(format!("optospring-xi-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bench.toml");
        std::fs::write(
            &path,
            r#"
[[preset]]
name = "bench"
arm_length = 10.0
reduced_mass = 0.05
beam_spot_radius = 0.01
per_arm_power_kw = 5.0
wavelength = 1.064e-6
temperature = 300.0
"#,
        )
        .unwrap();
        let mut cfg = base_config();
        cfg.system.preset_file = Some(path);
        let resolved = cfg.resolve().unwrap();
        let out = cmd_xi(&resolved, &["bench".to_string()]).unwrap();
        let row = out.lines().find(|l| l.contains("bench")).unwrap();
        assert!(
            row.trim_end().ends_with('-'),
            "reference column should be empty: {row}"
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn malformed_config_file_is_a_validation_error() {
        let dir = std::env::temp_dir().join(format!("optospring-badcfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "[system\ncoupling = ").unwrap();
        let err = ScenarioConfig::from_file(&path).unwrap_err();
        assert_eq!(exit_code_for(&err), EXIT_VALIDATION);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn xi_unknown_preset_fails() {
        let resolved = base_config().resolve().unwrap();
        assert!(matches!(
            cmd_xi(&resolved, &["LISA".to_string()]),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn exit_codes_classified() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), EXIT_VALIDATION);
        assert_eq!(
            exit_code_for(&Error::UnknownPreset("x".into())),
            EXIT_VALIDATION
        );
        assert_eq!(
            exit_code_for(&Error::SingularSystem { x: 0.0 }),
            EXIT_NUMERICAL
        );
    }
}
