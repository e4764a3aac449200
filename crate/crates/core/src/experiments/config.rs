//! Flat, line-oriented `key = value` configuration with section headers.
//!
//! ```text
//! [experiment]
//! scenario = coercivity-sweep
//! out_dir = out
//!
//! [quadrature]
//! nodes_per_axis = 28
//! ```
//!
//! Keys may repeat within a section (schedules, norm lists). `#` starts a
//! comment. Parsing followed by re-serialization is idempotent.

use std::fmt::Write as FmtWrite;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// Raw parsed document: sections in file order, entries in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigDoc {
    pub sections: Vec<(String, Vec<(String, String)>)>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<ConfigDoc> {
        let mut sections: Vec<(String, Vec<(String, String)>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section", lineno + 1)))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::Config(format!("line {}: empty section name", lineno + 1)));
                }
                sections.push((name.to_string(), Vec::new()));
            } else if let Some((k, v)) = line.split_once('=') {
                let section = sections
                    .last_mut()
                    .ok_or_else(|| Error::Config(format!("line {}: entry before any section", lineno + 1)))?;
                section.1.push((k.trim().to_string(), v.trim().to_string()));
            } else {
                return Err(Error::Config(format!("line {}: expected 'key = value'", lineno + 1)));
            }
        }
        Ok(ConfigDoc { sections })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(n, _)| n == section)
            .and_then(|(_, es)| es.iter().find(|(k, _)| k == key))
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, section: &str, key: &'a str) -> Vec<&'a str> {
        self.sections
            .iter()
            .filter(|(n, _)| n == section)
            .flat_map(|(_, es)| es.iter())
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    fn parse_value<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse '{raw}'"))),
        }
    }
}

/// The experiment scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Scenario {
    CoercivitySweep,
    EigenvalueAnisotropy,
    ShellEstimate,
    CoveringAudit,
    CounterexampleScaling,
    OptimalityRatio,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::CoercivitySweep,
        Scenario::EigenvalueAnisotropy,
        Scenario::ShellEstimate,
        Scenario::CoveringAudit,
        Scenario::CounterexampleScaling,
        Scenario::OptimalityRatio,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::CoercivitySweep => "coercivity-sweep",
            Scenario::EigenvalueAnisotropy => "eigenvalue-anisotropy",
            Scenario::ShellEstimate => "shell-estimate",
            Scenario::CoveringAudit => "covering-audit",
            Scenario::CounterexampleScaling => "counterexample-scaling",
            Scenario::OptimalityRatio => "optimality-ratio",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scenario> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

/// Tolerances and thresholds of the scenario assertions. Values live in
/// the config's `[tolerances]` section; the defaults are the acceptance
/// thresholds.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Tolerances {
    /// |D(Maxwellian)| bound.
    pub equilibrium_dissipation: f64,
    /// D ≥ -floor for every density.
    pub positivity_floor: f64,
    /// error term ≥ -16 M₀² - slack.
    pub error_term_slack: f64,
    /// sweep minimum of c₁ estimates.
    pub coercivity_min: f64,
    /// radial·⟨v⟩³ window.
    pub radial_band: (f64, f64),
    /// tangential·⟨v⟩ window.
    pub tangential_band: (f64, f64),
    /// anisotropy ratio slope window (center, halfwidth).
    pub anisotropy_slope: (f64, f64),
    /// covering multiplicity cap.
    pub multiplicity_max: usize,
    /// shell ratio spread cap (max/min).
    pub shell_spread_max: f64,
    /// I₁ slope window vs B.
    pub slope_i1: (f64, f64),
    /// I₂ slope window vs B.
    pub slope_i2: (f64, f64),
    /// optimality slope window, p = 3 q = 1 along B = N⁷.
    pub slope_p3: (f64, f64),
    /// optimality slope window, p = 4 q = 0 at fixed N.
    pub slope_p4: (f64, f64),
    /// moment bound slack for the counterexample family.
    pub moment_slack: f64,
    /// cap for ∫ g|∇log g|² / (cB²N²).
    pub grad_log_cap: f64,
    /// cap for sup Newton potential × N⁴.
    pub newton_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equilibrium_dissipation: 1e-6,
            positivity_floor: 1e-8,
            error_term_slack: 1e-6,
            coercivity_min: 1e-4,
            radial_band: (1.6, 2.4),
            tangential_band: (0.8, 1.2),
            anisotropy_slope: (2.0, 0.2),
            multiplicity_max: 64,
            shell_spread_max: 10.0,
            slope_i1: (-1.0, 0.15),
            slope_i2: (1.0, 0.15),
            slope_p3: (-2.0 / 3.0, 0.2),
            slope_p4: (-0.25, 0.1),
            moment_slack: 1e-3,
            grad_log_cap: 60.0,
            newton_cap: 4.0,
        }
    }
}

/// A fully resolved experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub emit_csv: bool,
    pub emit_json: bool,
    pub threads: Option<usize>,
    pub quadrature: QuadratureSpec,
    /// (p, q) pairs for norm sweeps.
    pub pq: Vec<(f64, f64)>,
    /// (N, B) schedule of the counterexample family.
    pub schedule: Vec<(u32, f64)>,
    pub shells: Vec<u32>,
    pub speeds: Vec<f64>,
    pub seed_spacing: f64,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Scenario defaults (quadrature levels sized for desk-scale runs).
    pub fn default_for(scenario: Scenario) -> ExperimentConfig {
        let quadrature = match scenario {
            Scenario::CoercivitySweep => QuadratureSpec {
                truncation_radius: 12.0,
                nodes_per_axis: 28,
                singular_ball_radius: 0.5,
                radial_nodes: 8,
                sphere_nodes: 16,
                support_clamp: 1e-3,
                refinement_levels: 2,
            },
            Scenario::EigenvalueAnisotropy => QuadratureSpec {
                truncation_radius: 12.0,
                nodes_per_axis: 48,
                singular_ball_radius: 0.5,
                radial_nodes: 16,
                sphere_nodes: 32,
                support_clamp: 1e-3,
                refinement_levels: 2,
            },
            Scenario::ShellEstimate => QuadratureSpec {
                truncation_radius: 12.0,
                nodes_per_axis: 48,
                singular_ball_radius: 0.5,
                radial_nodes: 8,
                sphere_nodes: 16,
                support_clamp: 1e-3,
                refinement_levels: 2,
            },
            Scenario::CoveringAudit => QuadratureSpec::default_maxwellian(),
            Scenario::CounterexampleScaling | Scenario::OptimalityRatio => QuadratureSpec {
                truncation_radius: 12.0,
                nodes_per_axis: 24,
                singular_ball_radius: 0.5,
                radial_nodes: 8,
                sphere_nodes: 16,
                support_clamp: 1e-3,
                refinement_levels: 2,
            },
        };
        ExperimentConfig {
            scenario,
            out_dir: PathBuf::from("out"),
            emit_csv: true,
            emit_json: true,
            threads: None,
            quadrature,
            pq: vec![(3.0, 5.0 / 3.0)],
            schedule: vec![(2, 64.0), (2, 256.0), (2, 1024.0)],
            shells: match scenario {
                Scenario::CoveringAudit => vec![1, 2, 4, 8],
                _ => vec![1, 2, 3, 4, 5, 6],
            },
            speeds: vec![
                4.0,
                4.0 * std::f64::consts::SQRT_2,
                8.0,
                8.0 * std::f64::consts::SQRT_2,
                16.0,
                16.0 * std::f64::consts::SQRT_2,
                32.0,
            ],
            seed_spacing: 0.45,
            tolerances: Tolerances::default(),
        }
    }

    /// Parse a config document on top of the scenario defaults.
    pub fn from_doc(doc: &ConfigDoc) -> Result<ExperimentConfig> {
        let scenario: Scenario = doc
            .get("experiment", "scenario")
            .ok_or_else(|| Error::Config("[experiment] scenario is required".into()))?
            .parse()?;
        let mut cfg = ExperimentConfig::default_for(scenario);

        if let Some(dir) = doc.get("experiment", "out_dir") {
            cfg.out_dir = PathBuf::from(dir);
        }
        if let Some(v) = doc.parse_value::<bool>("experiment", "emit_csv")? {
            cfg.emit_csv = v;
        }
        if let Some(v) = doc.parse_value::<bool>("experiment", "emit_json")? {
            cfg.emit_json = v;
        }
        cfg.threads = doc.parse_value::<usize>("experiment", "threads")?;

        let q = &mut cfg.quadrature;
        if let Some(v) = doc.parse_value::<f64>("quadrature", "truncation_radius")? {
            q.truncation_radius = v;
        }
        if let Some(v) = doc.parse_value::<usize>("quadrature", "nodes_per_axis")? {
            q.nodes_per_axis = v;
        }
        if let Some(v) = doc.parse_value::<f64>("quadrature", "singular_ball_radius")? {
            q.singular_ball_radius = v;
        }
        if let Some(v) = doc.parse_value::<usize>("quadrature", "radial_nodes")? {
            q.radial_nodes = v;
        }
        if let Some(v) = doc.parse_value::<usize>("quadrature", "sphere_nodes")? {
            q.sphere_nodes = v;
        }
        if let Some(v) = doc.parse_value::<f64>("quadrature", "support_clamp")? {
            q.support_clamp = v;
        }
        if let Some(v) = doc.parse_value::<usize>("quadrature", "refinement_levels")? {
            q.refinement_levels = v;
        }
        cfg.quadrature.validate()?;

        let pq_raw = doc.get_all("norms", "pq");
        if !pq_raw.is_empty() {
            cfg.pq = pq_raw
                .iter()
                .map(|s| parse_pair::<f64, f64>(s, "norms", "pq"))
                .collect::<Result<_>>()?;
        }
        let sched_raw = doc.get_all("schedule", "entry");
        if !sched_raw.is_empty() {
            cfg.schedule = sched_raw
                .iter()
                .map(|s| parse_pair::<u32, f64>(s, "schedule", "entry"))
                .collect::<Result<_>>()?;
        }
        if let Some(raw) = doc.get("experiment", "shells") {
            cfg.shells = raw
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| Error::Config(format!("shells: bad entry '{t}'")))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(raw) = doc.get("experiment", "speeds") {
            cfg.speeds = raw
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Config(format!("speeds: bad entry '{t}'")))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(v) = doc.parse_value::<f64>("experiment", "seed_spacing")? {
            cfg.seed_spacing = v;
        }

        let t = &mut cfg.tolerances;
        if let Some(v) = doc.parse_value::<f64>("tolerances", "equilibrium_dissipation")? {
            t.equilibrium_dissipation = v;
        }
        if let Some(v) = doc.parse_value::<f64>("tolerances", "positivity_floor")? {
            t.positivity_floor = v;
        }
        if let Some(v) = doc.parse_value::<f64>("tolerances", "coercivity_min")? {
            t.coercivity_min = v;
        }
        if let Some(v) = doc.parse_value::<f64>("tolerances", "shell_spread_max")? {
            t.shell_spread_max = v;
        }
        if let Some(v) = doc.parse_value::<usize>("tolerances", "multiplicity_max")? {
            t.multiplicity_max = v;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_doc(&ConfigDoc::parse(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        match self.scenario {
            Scenario::CounterexampleScaling | Scenario::OptimalityRatio => {
                if self.schedule.is_empty() {
                    return Err(Error::Config("schedule must not be empty".into()));
                }
                for &(shell, b) in &self.schedule {
                    if shell < 2 {
                        return Err(Error::Config(format!("schedule shell {shell} < 2")));
                    }
                    let n6 = f64::from(shell).powi(6);
                    if b < n6 {
                        return Err(Error::Config(format!(
                            "schedule entry (N={shell}, B={b}) violates B >= N^6 = {n6}"
                        )));
                    }
                }
            }
            Scenario::CoveringAudit | Scenario::ShellEstimate => {
                if self.shells.is_empty() {
                    return Err(Error::Config("shells must not be empty".into()));
                }
                if self.shells.contains(&0) {
                    return Err(Error::Config("shell indices start at 1".into()));
                }
            }
            Scenario::EigenvalueAnisotropy => {
                if self.speeds.len() < 3 {
                    return Err(Error::Config("need at least 3 speeds for the slope fit".into()));
                }
            }
            Scenario::CoercivitySweep => {}
        }
        Ok(())
    }

    /// Canonical document form (used for echoing into reports and for the
    /// round-trip serialization).
    pub fn to_doc(&self) -> ConfigDoc {
        let mut experiment = vec![
            ("scenario".into(), self.scenario.name().into()),
            ("out_dir".into(), self.out_dir.display().to_string()),
            ("emit_csv".into(), self.emit_csv.to_string()),
            ("emit_json".into(), self.emit_json.to_string()),
            (
                "shells".into(),
                self.shells.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
            ),
            (
                "speeds".into(),
                self.speeds.iter().map(|s| format!("{s:.16e}")).collect::<Vec<_>>().join(" "),
            ),
            ("seed_spacing".into(), format!("{:.16e}", self.seed_spacing)),
        ];
        if let Some(t) = self.threads {
            experiment.push(("threads".into(), t.to_string()));
        }
        let q = &self.quadrature;
        let quadrature = vec![
            ("truncation_radius".into(), format!("{:.16e}", q.truncation_radius)),
            ("nodes_per_axis".into(), q.nodes_per_axis.to_string()),
            ("singular_ball_radius".into(), format!("{:.16e}", q.singular_ball_radius)),
            ("radial_nodes".into(), q.radial_nodes.to_string()),
            ("sphere_nodes".into(), q.sphere_nodes.to_string()),
            ("support_clamp".into(), format!("{:.16e}", q.support_clamp)),
            ("refinement_levels".into(), q.refinement_levels.to_string()),
        ];
        let norms = self
            .pq
            .iter()
            .map(|(p, qq)| ("pq".to_string(), format!("{p:.16e} {qq:.16e}")))
            .collect();
        let schedule = self
            .schedule
            .iter()
            .map(|(n, b)| ("entry".to_string(), format!("{n} {b:.16e}")))
            .collect();
        ConfigDoc {
            sections: vec![
                ("experiment".into(), experiment),
                ("quadrature".into(), quadrature),
                ("norms".into(), norms),
                ("schedule".into(), schedule),
            ],
        }
    }
}

fn parse_pair<A: FromStr, B: FromStr>(s: &str, section: &str, key: &str) -> Result<(A, B)> {
    let mut it = s.split_whitespace();
    let err = || Error::Config(format!("[{section}] {key}: expected two values, got '{s}'"));
    let a = it.next().ok_or_else(err)?.parse::<A>().map_err(|_| err())?;
    let b = it.next().ok_or_else(err)?.parse::<B>().map_err(|_| err())?;
    if it.next().is_some() {
        return Err(err());
    }
    Ok((a, b))
}
