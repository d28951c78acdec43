//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [system]
//! noise_dbm = -100
//! [thresholds]
//! theta_a = 10, 34.6 Mbps
//! ```
//!
//! Comments start with `#` or `;`. Unknown sections or keys are errors, as
//! are repeated keys within one source.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use aerial_noma::analysis::threshold_from_rate;
use aerial_noma::trajectory::{ChordWalkConfig, SpiralConfig};
use aerial_noma::units::{attenuation_db_to_gain, db_to_linear, dbm_to_watts, linear_to_db};
use aerial_noma::{HeightSearchConfig, LosEnvironment, McConfig, SystemParams};

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Override(usize),
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Override(i) => write!(f, "--set #{i}"),
            Origin::Default => f.write_str("defaults"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{}: {field}: {}", self.origin, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn fail(origin: &Origin, field: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin: origin.clone(),
        field: field.map(str::to_owned),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub section: String,
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

/// Splits INI text into settings, checking section and key syntax only.
pub fn parse_ini(text: &str, path: &Path) -> Result<Vec<Setting>, ConfigError> {
    let mut section: Option<String> = None;
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::File {
            path: path.to_owned(),
            line: i + 1,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| {
                    fail(
                        &origin,
                        None,
                        format!("unterminated section header {line:?}"),
                    )
                })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(fail(&origin, None, format!("unknown section [{name}]")));
            }
            section = Some(name.to_owned());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            fail(
                &origin,
                None,
                format!("expected `key = value`, got {line:?}"),
            )
        })?;
        let key = key.trim();
        let sec = section
            .clone()
            .ok_or_else(|| fail(&origin, Some(key), "setting appears before any [section]"))?;
        let value = strip_comment(value).trim().to_owned();
        if let Some(first) = seen.insert((sec.clone(), key.to_owned()), i + 1) {
            return Err(fail(
                &origin,
                Some(&format!("{sec}.{key}")),
                format!("already set on line {first}"),
            ));
        }
        out.push(Setting {
            section: sec,
            key: key.to_owned(),
            value,
            origin,
        });
    }
    Ok(out)
}

fn strip_comment(value: &str) -> &str {
    match value.find([';', '#']) {
        Some(i) if i == 0 || value[..i].ends_with(char::is_whitespace) => &value[..i],
        _ => value,
    }
}

/// Parses one `section.key=value` override.
pub fn parse_override(arg: &str, index: usize) -> Result<Setting, ConfigError> {
    let origin = Origin::Override(index);
    let (lhs, value) = arg.split_once('=').ok_or_else(|| {
        fail(
            &origin,
            None,
            format!("expected section.key=value, got {arg:?}"),
        )
    })?;
    let (section, key) = lhs
        .trim()
        .split_once('.')
        .ok_or_else(|| fail(&origin, Some(lhs), "key must be written as section.key"))?;
    if !SECTIONS.contains(&section) {
        return Err(fail(
            &origin,
            Some(lhs),
            format!("unknown section [{section}]"),
        ));
    }
    Ok(Setting {
        section: section.to_owned(),
        key: key.trim().to_owned(),
        value: value.trim().to_owned(),
        origin,
    })
}

pub const SECTIONS: [&str; 7] = [
    "system",
    "los",
    "trajectory",
    "thresholds",
    "mc",
    "search",
    "output",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosKind {
    Itu,
    ThreeGppUrban,
    Fixed,
}

/// Named ITU environments in the order they were listed.
#[derive(Debug, Clone, PartialEq)]
pub struct LosSelection {
    pub kind: LosKind,
    pub environments: Vec<String>,
    pub presets: BTreeMap<String, LosEnvironment>,
    pub fixed_probability: f64,
    pub table_heights: Vec<f64>,
    pub table_r_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectorySource {
    Spiral(SpiralConfig),
    ChordWalk(ChordWalkConfig),
    CsvFile(PathBuf),
}

/// A decoding threshold with the dB value reported in output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub linear: f64,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub los: LosSelection,
    pub trajectory: TrajectorySource,
    pub theta_a: Vec<Threshold>,
    pub theta_t: Vec<Threshold>,
    pub mc: McConfig,
    pub search: HeightSearchConfig,
    pub output: PathBuf,
}

pub fn default_presets() -> BTreeMap<String, LosEnvironment> {
    [
        ("suburban", LosEnvironment::SUBURBAN),
        ("urban", LosEnvironment::URBAN),
        ("dense-urban", LosEnvironment::DENSE_URBAN),
        ("high-rise", LosEnvironment::URBAN_HIGH_RISE),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Spiral,
    ChordWalk,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ThresholdList {
    Db,
    Mbps,
}

/// Settings as written, before cross-field checks.
#[derive(Debug, Clone)]
struct Draft {
    system: SystemParams,
    los_kind: LosKind,
    environments: Vec<String>,
    presets: BTreeMap<String, LosEnvironment>,
    fixed_probability: f64,
    table_heights: Vec<f64>,
    table_r_step: f64,
    shape: Shape,
    height: f64,
    heights: Option<Vec<f64>>,
    rounds: u32,
    speed: f64,
    period: f64,
    walk_seed: u64,
    walk_points: usize,
    file: Option<PathBuf>,
    theta_a: (Vec<f64>, ThresholdList),
    theta_t: (Vec<f64>, ThresholdList),
    mc: McConfig,
    search: HeightSearchConfig,
    output: PathBuf,
}

impl Default for Draft {
    fn default() -> Self {
        let spiral = SpiralConfig::reference(25.0);
        Self {
            system: SystemParams::reference(),
            los_kind: LosKind::Itu,
            environments: vec!["urban".into()],
            presets: default_presets(),
            fixed_probability: 1.0,
            table_heights: vec![25.0, 50.0, 100.0, 120.0, 200.0, 300.0],
            table_r_step: 10.0,
            shape: Shape::Spiral,
            height: spiral.height,
            heights: None,
            rounds: spiral.rounds,
            speed: spiral.speed,
            period: spiral.period,
            walk_seed: 2024,
            walk_points: 10,
            file: None,
            theta_a: (vec![0.0, 10.0, 20.0, 30.0, 40.0], ThresholdList::Db),
            theta_t: (vec![0.0], ThresholdList::Db),
            mc: McConfig::default(),
            search: HeightSearchConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

fn number(s: &Setting) -> Result<f64, String> {
    let v: f64 = s
        .value
        .parse()
        .map_err(|_| format!("expected a number, got {:?}", s.value))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got {:?}", s.value))
    }
}

fn integer<T: std::str::FromStr>(s: &Setting) -> Result<T, String> {
    s.value
        .parse()
        .map_err(|_| format!("expected a non-negative integer, got {:?}", s.value))
}

fn numbers(text: &str) -> Result<Vec<f64>, String> {
    let out: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad number {t:?} in list"))
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("list must not be empty".into());
    }
    Ok(out)
}

fn threshold_list(text: &str) -> Result<(Vec<f64>, ThresholdList), String> {
    let t = text.trim();
    let (body, unit) = if let Some(b) = t.strip_suffix("Mbps") {
        (b, ThresholdList::Mbps)
    } else if let Some(b) = t.strip_suffix("dB") {
        (b, ThresholdList::Db)
    } else {
        (t, ThresholdList::Db)
    };
    let values = numbers(body)?;
    if unit == ThresholdList::Mbps && values.iter().any(|v| *v < 0.0) {
        return Err("rates must be non-negative".into());
    }
    Ok((values, unit))
}

fn environment_triple(s: &Setting) -> Result<LosEnvironment, String> {
    match numbers(&s.value)?.as_slice() {
        &[a, b, d] => LosEnvironment::new(a, b, d).map_err(|e| e.to_string()),
        _ => Err("expected `alpha, beta, delta`".into()),
    }
}

impl Draft {
    fn apply(&mut self, s: &Setting, base: &Path) -> Result<(), String> {
        let sys = &mut self.system;
        match (s.section.as_str(), s.key.as_str()) {
            ("system", "cell_radius_m") => sys.cell_radius = number(s)?,
            ("system", "bs_height_m") => sys.bs_height = number(s)?,
            ("system", "noise_dbm") => sys.noise_power = dbm_to_watts(number(s)?),
            ("system", "aue_power_w") => sys.aue_tx_power = number(s)?,
            ("system", "aue_power_dbm") => sys.aue_tx_power = dbm_to_watts(number(s)?),
            ("system", "aue_gain_db") => sys.aue_gain = db_to_linear(number(s)?),
            ("system", "tue_gain_db") => sys.tue_gain = db_to_linear(number(s)?),
            ("system", "tue_cutoff_dbm") => sys.tue_cutoff_power = dbm_to_watts(number(s)?),
            ("system", "alpha_tue") => sys.alpha_tue = number(s)?,
            ("system", "alpha_los") => sys.alpha_los = number(s)?,
            ("system", "alpha_nlos") => sys.alpha_nlos = number(s)?,
            ("system", "eta_los_db") => sys.eta_los = attenuation_db_to_gain(number(s)?),
            ("system", "eta_nlos_db") => sys.eta_nlos = attenuation_db_to_gain(number(s)?),
            ("system", "m_los") => sys.m_los = integer(s)?,
            ("system", "m_nlos") => sys.m_nlos = integer(s)?,
            ("system", "bandwidth_mhz") => sys.bandwidth = number(s)? * 1e6,

            ("los", "model") => {
                self.los_kind = match s.value.as_str() {
                    "itu" => LosKind::Itu,
                    "3gpp-urban" => LosKind::ThreeGppUrban,
                    "fixed" => LosKind::Fixed,
                    other => {
                        return Err(format!(
                            "unknown model {other:?}; use itu, 3gpp-urban or fixed"
                        ))
                    }
                }
            }
            ("los", "env") => {
                let names: Vec<String> = s
                    .value
                    .split(',')
                    .map(|t| t.trim().to_owned())
                    .filter(|t| !t.is_empty())
                    .collect();
                if names.is_empty() {
                    return Err("environment list must not be empty".into());
                }
                self.environments = names;
            }
            ("los", "p_los") => self.fixed_probability = number(s)?,
            ("los", "table_heights_m") => self.table_heights = numbers(&s.value)?,
            ("los", "table_r_step_m") => self.table_r_step = number(s)?,
            ("los", key) if key.starts_with("preset.") => {
                self.presets
                    .insert(key["preset.".len()..].to_owned(), environment_triple(s)?);
            }

            ("trajectory", "source") => {
                self.shape = match s.value.as_str() {
                    "spiral" => Shape::Spiral,
                    "chord-walk" => Shape::ChordWalk,
                    "csv" => Shape::Csv,
                    other => {
                        return Err(format!(
                            "unknown source {other:?}; use spiral, chord-walk or csv"
                        ))
                    }
                }
            }
            ("trajectory", "height_m") => self.height = number(s)?,
            ("trajectory", "heights_m") => self.heights = Some(numbers(&s.value)?),
            ("trajectory", "rounds") => self.rounds = integer(s)?,
            ("trajectory", "speed_mps") => self.speed = number(s)?,
            ("trajectory", "period_s") => self.period = number(s)?,
            ("trajectory", "seed") => self.walk_seed = integer(s)?,
            ("trajectory", "points") => self.walk_points = integer(s)?,
            ("trajectory", "file") => self.file = Some(base.join(&s.value)),

            ("thresholds", "theta_a") => self.theta_a = threshold_list(&s.value)?,
            ("thresholds", "theta_t") => self.theta_t = threshold_list(&s.value)?,

            ("mc", "trials") => self.mc.trials = integer(s)?,
            ("mc", "seed") => self.mc.seed = integer(s)?,
            ("mc", "streams") => self.mc.stream_count = integer(s)?,

            ("search", "h_min_m") => self.search.h_min = number(s)?,
            ("search", "h_max_m") => self.search.h_max = number(s)?,
            ("search", "h_step_m") => self.search.h_step = number(s)?,
            ("search", "qos") => self.search.qos = number(s)?,

            ("output", "dir") => self.output = base.join(&s.value),

            (_, key) => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn finish(self) -> Result<RunConfig, String> {
        self.system.validate().map_err(|e| e.to_string())?;
        self.mc.validate().map_err(|e| e.to_string())?;
        self.search.validate().map_err(|e| e.to_string())?;
        if self.los_kind == LosKind::Itu {
            if let Some(bad) = self
                .environments
                .iter()
                .find(|e| !self.presets.contains_key(*e))
            {
                let known: Vec<&str> = self.presets.keys().map(String::as_str).collect();
                return Err(format!(
                    "[los] env: unknown environment {bad:?}; known: {}",
                    known.join(", ")
                ));
            }
        }
        if self.los_kind == LosKind::Fixed && !(0.0..=1.0).contains(&self.fixed_probability) {
            return Err("[los] p_los: must lie in [0, 1]".into());
        }
        if self.table_r_step <= 0.0 {
            return Err("[los] table_r_step_m: must be positive".into());
        }
        let bandwidth = self.system.bandwidth;
        let linear = |(values, unit): &(Vec<f64>, ThresholdList)| -> Vec<Threshold> {
            values
                .iter()
                .map(|&v| match unit {
                    ThresholdList::Db => Threshold {
                        linear: db_to_linear(v),
                        db: v,
                    },
                    ThresholdList::Mbps => {
                        let linear = threshold_from_rate(v * 1e6, bandwidth);
                        Threshold {
                            linear,
                            db: linear_to_db(linear),
                        }
                    }
                })
                .collect()
        };
        let trajectory = match self.shape {
            Shape::Spiral => TrajectorySource::Spiral(SpiralConfig {
                rounds: self.rounds,
                speed: self.speed,
                period: self.period,
                cell_radius: self.system.cell_radius,
                height: self.height,
                heights: self.heights,
            }),
            Shape::ChordWalk => TrajectorySource::ChordWalk(ChordWalkConfig {
                seed: self.walk_seed,
                n_points: self.walk_points,
                speed: self.speed,
                period: self.period,
                cell_radius: self.system.cell_radius,
                height: self.height,
            }),
            Shape::Csv => TrajectorySource::CsvFile(
                self.file
                    .ok_or("[trajectory] file: required when source = csv")?,
            ),
        };
        Ok(RunConfig {
            theta_a: linear(&self.theta_a),
            theta_t: linear(&self.theta_t),
            system: self.system,
            los: LosSelection {
                kind: self.los_kind,
                environments: self.environments,
                presets: self.presets,
                fixed_probability: self.fixed_probability,
                table_heights: self.table_heights,
                table_r_step: self.table_r_step,
            },
            trajectory,
            mc: self.mc,
            search: self.search,
            output: self.output,
        })
    }
}

impl RunConfig {
    /// Builds a configuration from defaults, then `settings` in order.
    ///
    /// Relative paths in file settings resolve against `base`; override
    /// paths resolve against the working directory.
    pub fn build(settings: &[Setting], base: &Path) -> Result<Self, ConfigError> {
        let mut draft = Draft::default();
        for s in settings {
            let dir = match s.origin {
                Origin::File { .. } => base,
                _ => Path::new(""),
            };
            draft
                .apply(s, dir)
                .map_err(|m| fail(&s.origin, Some(&format!("[{}] {}", s.section, s.key)), m))?;
        }
        draft.finish().map_err(|m| fail(&Origin::Default, None, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> Result<RunConfig, ConfigError> {
        let settings = parse_ini(text, Path::new("run.ini"))?;
        RunConfig::build(&settings, Path::new(""))
    }

    #[test]
    fn defaults_are_the_reference_setup() {
        let c = build("").unwrap();
        assert_eq!(c.system, SystemParams::reference());
        assert_eq!(c.theta_a.len(), 5);
        assert_eq!(
            c.theta_t,
            vec![Threshold {
                linear: 1.0,
                db: 0.0
            }]
        );
        assert_eq!(c.los.environments, vec!["urban"]);
        assert!(matches!(c.trajectory, TrajectorySource::Spiral(ref s) if s.height == 25.0));
    }

    #[test]
    fn explicit_reference_values_reproduce_defaults() {
        let c = build(
            "[system]\nnoise_dbm = -100\ntue_cutoff_dbm = -75\neta_los_db = 0\neta_nlos_db = 13 ; extra loss\n\
             bandwidth_mhz = 10\n",
        )
        .unwrap();
        assert_eq!(c.system, SystemParams::reference());
    }

    #[test]
    fn rate_thresholds() {
        let c = build("[thresholds]\ntheta_a = 10, 34.6 Mbps\ntheta_t = -3 dB\n").unwrap();
        assert_eq!(
            c.theta_a[0],
            Threshold {
                linear: 1.0,
                db: 0.0
            }
        );
        assert!((c.theta_a[1].linear - 10.0).abs() < 0.01);
        assert_eq!(
            c.theta_t,
            vec![Threshold {
                linear: db_to_linear(-3.0),
                db: -3.0
            }]
        );
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let e = build("[system]\n\nnoise_dbm = loud\n").unwrap_err();
        assert_eq!(
            e.to_string(),
            "run.ini:3: [system] noise_dbm: expected a number, got \"loud\""
        );
        let e = build("[search]\nqos = 0.9\nqos = 0.8\n").unwrap_err();
        assert!(
            e.to_string().contains("run.ini:3") && e.to_string().contains("already set on line 2")
        );
        let e = build("[nope]\n").unwrap_err();
        assert!(e.to_string().starts_with("run.ini:1: unknown section"));
        let e = build("[mc]\ncolour = red\n").unwrap_err();
        assert!(e.to_string().contains("[mc] colour"));
        let e = build("x = 1\n").unwrap_err();
        assert!(e.to_string().contains("before any [section]"));
    }

    #[test]
    fn cross_field_checks() {
        assert!(build("[los]\nenv = swamp\n")
            .unwrap_err()
            .to_string()
            .contains("unknown environment"));
        assert!(build("[trajectory]\nsource = csv\n").is_err());
        assert!(build("[search]\nqos = 1\n").is_err());
        assert!(build("[thresholds]\ntheta_a = \n").is_err());
    }

    #[test]
    fn overrides_apply_after_file() {
        let mut settings = parse_ini("[mc]\ntrials = 10\n", Path::new("a.ini")).unwrap();
        settings.push(parse_override("mc.trials=20", 1).unwrap());
        settings.push(parse_override("los.preset.swamp = 0.2, 100, 5", 2).unwrap());
        settings.push(parse_override("los.env=swamp,urban", 3).unwrap());
        let c = RunConfig::build(&settings, Path::new("")).unwrap();
        assert_eq!(c.mc.trials, 20);
        assert_eq!(c.los.environments, vec!["swamp", "urban"]);
        let e = parse_override("trials=3", 4).unwrap_err();
        assert!(e.to_string().starts_with("--set #4"));
    }
}
