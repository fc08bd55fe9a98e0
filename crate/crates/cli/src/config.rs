//! Run configuration: INI-style sections of `key = value` pairs with the unit
//! in the key suffix (`_m`, `_rad_per_s`, `_W`, `_Hz`, `_s`, `_rad`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use ini::{Ini, ParseOption};
use sfwm_core::dispersion::{CladdingRule, ModeEquation};
use sfwm_core::flux::GeomConfig;
use sfwm_core::spectral::Topology;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("duplicate key `{key}` in [{section}]")]
    DuplicateKey { section: String, key: String },
    #[error("duplicate section [{0}]")]
    DuplicateSection(String),
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key `{key}` in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("invalid value for `{key}` in [{section}]: `{value}` ({reason})")]
    Value {
        section: String,
        key: String,
        value: String,
        reason: String,
    },
    #[error("inconsistent settings: {0}")]
    Inconsistent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bad override `{0}`: expected section.key=value")]
    Override(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionMode {
    /// Chebyshev tables of n_eff and k′ over the band.
    Tabulated,
    /// Solve the mode equation at every frequency.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberSection {
    pub core_radius_m: f64,
    pub air_fill_fraction: f64,
    pub length_m: f64,
    pub gamma: f64,
    pub gamma_fwm: f64,
    pub cladding: CladdingRule,
    pub mode_equation: ModeEquation,
    pub dispersion: DispersionMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpSection {
    pub wavelength_m: f64,
    /// Intensity FWHM bandwidth σ_I.
    pub sigma_i: f64,
    pub avg_power_w: f64,
    pub rep_rate_hz: f64,
    /// Replaces p/(R·τ_p) when set.
    pub peak_power_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavitySection {
    pub topology: Topology,
    pub resonant_s: bool,
    pub resonant_i: bool,
    pub r2_s: f64,
    pub r2_i: f64,
    pub t2_s: Option<f64>,
    pub t2_i: Option<f64>,
    /// Put a resonance on each grid centre.
    pub tune: bool,
    /// δ₁, δ₂ per mode, used when `tune` is off.
    pub phases_s: (f64, f64),
    pub phases_i: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub center_s: Option<f64>,
    pub center_i: Option<f64>,
    pub span_s: Option<f64>,
    pub span_i: Option<f64>,
    pub points: usize,
    pub pad_factor: usize,
    pub jsa_nodes: usize,
    pub jsa_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSection {
    /// Windows `modes` resonance spacings wide around the grid centres.
    Modes(u32),
    Widths { width_s: f64, width_i: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxSection {
    pub sigma_list: Option<Vec<f64>>,
    pub sweep_points: usize,
    pub nodes_per_panel: usize,
    pub ladder_factor: f64,
    pub rel_tol: f64,
    pub max_doublings: usize,
    pub jsa_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSection {
    pub cutoff: f64,
    pub peak_threshold: f64,
    pub window_s: Option<f64>,
    pub closed_form_m: u32,
    pub time_points: usize,
    pub time_span_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomSection {
    pub sigma_i: Option<f64>,
    pub config: Option<GeomConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSection {
    pub target_wavelength_m: f64,
    pub linewidth: f64,
    pub length_m: Option<f64>,
    pub r2: Option<f64>,
    pub sigma_i: Option<f64>,
    pub skip_flux: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    /// Prepended to every output file name.
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fiber: FiberSection,
    pub pump: PumpSection,
    pub cavity: CavitySection,
    pub grid: GridSection,
    pub filter: Option<FilterSection>,
    pub flux: FluxSection,
    pub temporal: TemporalSection,
    pub geom: GeomSection,
    pub design: Option<DesignSection>,
    pub output: OutputSection,
}

/// A parsed configuration and the defaults that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: RunConfig,
    /// `section.key=value` for every applied default.
    pub defaults: Vec<String>,
}

const SECTIONS: [&str; 10] = [
    "fiber", "pump", "cavity", "grid", "filter", "flux", "temporal", "geom", "design", "output",
];

#[derive(Clone, Copy)]
enum Range {
    Positive,
    NonNegative,
    Unit,
    UnitOpen,
    Any,
}

impl Range {
    fn check(self, v: f64) -> std::result::Result<(), &'static str> {
        let ok = match self {
            Range::Positive => v > 0.0,
            Range::NonNegative => v >= 0.0,
            Range::Unit => (0.0..=1.0).contains(&v),
            Range::UnitOpen => (0.0..1.0).contains(&v),
            Range::Any => true,
        };
        if !v.is_finite() {
            return Err("must be finite");
        }
        if ok {
            Ok(())
        } else {
            Err(match self {
                Range::Positive => "must be > 0",
                Range::NonNegative => "must be >= 0",
                Range::Unit => "must lie in [0, 1]",
                Range::UnitOpen => "must lie in [0, 1)",
                Range::Any => unreachable!(),
            })
        }
    }
}

struct Section<'a> {
    name: &'static str,
    entries: BTreeMap<String, String>,
    used: BTreeSet<String>,
    defaults: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn value_error(&self, key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            section: self.name.into(),
            key: key.into(),
            value: value.into(),
            reason: reason.into(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.entries.get(key).cloned()
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn note_default(&mut self, key: &str, shown: String) {
        self.defaults.push(format!("{}.{key}={shown}", self.name));
    }

    fn parse<T>(&mut self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => f(&v).map(Some).map_err(|r| self.value_error(key, &v, r)),
        }
    }

    fn opt_f64(&mut self, key: &str, range: Range) -> Result<Option<f64>> {
        self.parse(key, |v| {
            let x: f64 = v.parse().map_err(|_| "not a number".to_string())?;
            range.check(x).map_err(str::to_string)?;
            Ok(x)
        })
    }

    fn req_f64(&mut self, key: &str, range: Range) -> Result<f64> {
        self.opt_f64(key, range)?.ok_or_else(|| ConfigError::MissingKey {
            section: self.name.into(),
            key: key.into(),
        })
    }

    fn f64_or(&mut self, key: &str, range: Range, default: f64) -> Result<f64> {
        match self.opt_f64(key, range)? {
            Some(x) => Ok(x),
            None => {
                self.note_default(key, default.to_string());
                Ok(default)
            }
        }
    }

    fn usize_or(&mut self, key: &str, min: usize, default: usize) -> Result<usize> {
        let v = self.parse(key, |v| {
            let n: usize = v.parse().map_err(|_| "not a non-negative integer".to_string())?;
            if n < min {
                return Err(format!("must be >= {min}"));
            }
            Ok(n)
        })?;
        Ok(v.unwrap_or_else(|| {
            self.note_default(key, default.to_string());
            default
        }))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = self.parse(key, |v| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err("expected true or false".into()),
        })?;
        Ok(v.unwrap_or_else(|| {
            self.note_default(key, default.to_string());
            default
        }))
    }

    fn choice_or<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: &str) -> Result<T> {
        let pick = |v: &str| {
            options
                .iter()
                .find(|(name, _)| *name == v)
                .map(|&(_, t)| t)
                .ok_or_else(|| {
                    let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                    format!("expected one of {}", names.join(", "))
                })
        };
        match self.parse(key, pick)? {
            Some(t) => Ok(t),
            None => {
                self.note_default(key, default.into());
                Ok(pick(default).expect("default is a listed option"))
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(ConfigError::UnknownKey {
                section: self.name.into(),
                key: k.clone(),
            }),
            None => Ok(()),
        }
    }
}

type Document = BTreeMap<String, BTreeMap<String, String>>;

fn read_document(text: &str) -> Result<Document> {
    let opt = ParseOption {
        enabled_quote: false,
        enabled_escape: false,
        ..ParseOption::default()
    };
    let ini = Ini::load_from_str_opt(text, opt).map_err(|e| ConfigError::Syntax {
        line: e.line,
        col: e.col,
        msg: e.msg.to_string(),
    })?;
    let mut doc = Document::new();
    for (name, props) in ini.iter() {
        let Some(name) = name else {
            if let Some((k, _)) = props.iter().next() {
                return Err(ConfigError::Inconsistent(format!("key `{k}` appears before any [section]")));
            }
            continue;
        };
        if doc.contains_key(name) {
            return Err(ConfigError::DuplicateSection(name.into()));
        }
        let mut entries = BTreeMap::new();
        for (k, v) in props.iter() {
            let v = v.split('#').next().unwrap_or("").trim();
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::DuplicateKey {
                    section: name.into(),
                    key: k.into(),
                });
            }
        }
        doc.insert(name.to_string(), entries);
    }
    Ok(doc)
}

fn apply_override(doc: &mut Document, spec: &str) -> Result<()> {
    let bad = || ConfigError::Override(spec.into());
    let (path, value) = spec.split_once('=').ok_or_else(bad)?;
    let (section, key) = path.trim().split_once('.').ok_or_else(bad)?;
    if section.is_empty() || key.is_empty() {
        return Err(bad());
    }
    doc.entry(section.to_string())
        .or_default()
        .insert(key.to_string(), value.trim().to_string());
    Ok(())
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    let list = v
        .split(',')
        .map(|s| {
            let x: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
            Range::Positive.check(x).map_err(|r| format!("{x}: {r}"))?;
            Ok(x)
        })
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    if list.is_empty() {
        return Err("empty list".into());
    }
    Ok(list)
}

const CLADDING: [(&str, CladdingRule); 2] = [
    ("linear", CladdingRule::LinearIndex),
    ("permittivity", CladdingRule::Permittivity),
];
const MODE_EQUATION: [(&str, ModeEquation); 2] = [("vector", ModeEquation::Vector), ("scalar", ModeEquation::Scalar)];
const DISPERSION: [(&str, DispersionMode); 2] = [
    ("tabulated", DispersionMode::Tabulated),
    ("exact", DispersionMode::Exact),
];
const TOPOLOGY: [(&str, Topology); 2] = [("linear", Topology::Linear), ("ring", Topology::Ring)];
const GEOM: [(&str, GeomConfig); 2] = [("csi", GeomConfig::Csi), ("cs", GeomConfig::Cs)];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], value: &T) -> &'static str {
    options.iter().find(|(_, t)| t == value).map(|(n, _)| *n).expect("every variant is listed")
}

pub fn parse_config(text: &str) -> Result<Parsed> {
    parse_config_with(text, &[])
}

/// Parses `text`, then applies `section.key=value` overrides in order.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<Parsed> {
    let mut doc = read_document(text)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    if doc.contains_key("pump2") {
        return Err(ConfigError::Unsupported(
            "two-pump configurations; only a single degenerate pump is modelled".into(),
        ));
    }
    if let Some(name) = doc.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownSection(name.clone()));
    }
    let mut defaults = Vec::new();
    let fiber_raw = doc.remove("fiber").ok_or_else(|| ConfigError::MissingSection("fiber".into()))?;

    let fiber = {
        let mut s = section("fiber", fiber_raw, &mut defaults);
        let core_radius_m = s.req_f64("core_radius_m", Range::Positive)?;
        let air_fill_fraction = s.req_f64("air_fill_fraction", Range::Unit)?;
        let length_m = s.req_f64("length_m", Range::Positive)?;
        let gamma = s.req_f64("gamma_per_W_per_m", Range::NonNegative)?;
        let f = FiberSection {
            core_radius_m,
            air_fill_fraction,
            length_m,
            gamma,
            gamma_fwm: s.f64_or("gamma_fwm_per_W_per_m", Range::NonNegative, gamma)?,
            cladding: s.choice_or("cladding", &CLADDING, "linear")?,
            mode_equation: s.choice_or("mode_equation", &MODE_EQUATION, "vector")?,
            dispersion: s.choice_or("dispersion", &DISPERSION, "tabulated")?,
        };
        s.finish()?;
        f
    };

    let pump_raw = doc.remove("pump").ok_or_else(|| ConfigError::MissingSection("pump".into()))?;
    let pump = {
        let mut s = section("pump", pump_raw, &mut defaults);
        if s.has("wavelength_2_m") {
            return Err(ConfigError::Unsupported(
                "two-pump configurations; only a single degenerate pump is modelled".into(),
            ));
        }
        let p = PumpSection {
            wavelength_m: s.req_f64("wavelength_m", Range::Positive)?,
            sigma_i: s.req_f64("sigma_I_rad_per_s", Range::Positive)?,
            avg_power_w: s.req_f64("avg_power_W", Range::NonNegative)?,
            rep_rate_hz: s.req_f64("rep_rate_Hz", Range::Positive)?,
            peak_power_w: s.opt_f64("peak_power_W", Range::NonNegative)?,
        };
        s.finish()?;
        p
    };

    let cavity_raw = doc.remove("cavity").ok_or_else(|| ConfigError::MissingSection("cavity".into()))?;
    let cavity = {
        let mut s = section("cavity", cavity_raw, &mut defaults);
        let topology = s.choice_or("topology", &TOPOLOGY, "linear")?;
        let resonant_s = s.bool_or("resonant_s", false)?;
        let resonant_i = s.bool_or("resonant_i", false)?;
        let r2_s = s.f64_or("r2_s", Range::UnitOpen, 0.0)?;
        let r2_i = s.f64_or("r2_i", Range::UnitOpen, 0.0)?;
        let t2_s = s.opt_f64("t2_s", Range::Unit)?;
        let t2_i = s.opt_f64("t2_i", Range::Unit)?;
        let phase_keys = ["delta1_s_rad", "delta2_s_rad", "delta1_i_rad", "delta2_i_rad"];
        let explicit_phase = phase_keys.iter().find(|k| s.has(k)).map(|k| k.to_string());
        let tune = s.bool_or("tune", explicit_phase.is_none())?;
        if let (true, Some(k)) = (tune, &explicit_phase) {
            return Err(ConfigError::Inconsistent(format!("tune = true with an explicit {k}")));
        }
        let (phases_s, phases_i) = if tune {
            ((0.0, 0.0), (0.0, 0.0))
        } else {
            let mut phase = |k: &str| s.f64_or(k, Range::Any, 0.0);
            (
                (phase("delta1_s_rad")?, phase("delta2_s_rad")?),
                (phase("delta1_i_rad")?, phase("delta2_i_rad")?),
            )
        };
        s.finish()?;
        for (mode, resonant, r2, t2) in [("s", resonant_s, r2_s, t2_s), ("i", resonant_i, r2_i, t2_i)] {
            if !resonant && r2 > 0.0 {
                return Err(ConfigError::Inconsistent(format!(
                    "resonant_{mode} = false with r2_{mode} = {r2} > 0"
                )));
            }
            if !resonant && t2.is_some_and(|t| t != 1.0) {
                return Err(ConfigError::Inconsistent(format!(
                    "resonant_{mode} = false with t2_{mode} != 1"
                )));
            }
            if t2.is_some_and(|t| r2 * r2 + t * t > 1.0 + 1e-12) {
                return Err(ConfigError::Inconsistent(format!("r2_{mode}^2 + t2_{mode}^2 exceeds 1")));
            }
        }
        if topology == Topology::Ring && (phases_s.0 != 0.0 || phases_i.0 != 0.0) {
            return Err(ConfigError::Inconsistent(
                "a ring cavity has no input mirror; delta1_s_rad and delta1_i_rad must be 0".into(),
            ));
        }
        CavitySection {
            topology,
            resonant_s,
            resonant_i,
            r2_s,
            r2_i,
            t2_s,
            t2_i,
            tune,
            phases_s,
            phases_i,
        }
    };

    let grid = {
        let mut s = section("grid", doc.remove("grid").unwrap_or_default(), &mut defaults);
        let g = GridSection {
            center_s: s.opt_f64("center_s_rad_per_s", Range::Positive)?,
            center_i: s.opt_f64("center_i_rad_per_s", Range::Positive)?,
            span_s: s.opt_f64("span_s_rad_per_s", Range::Positive)?,
            span_i: s.opt_f64("span_i_rad_per_s", Range::Positive)?,
            points: s.usize_or("points", 3, 512)?,
            pad_factor: s.usize_or("pad_factor", 1, 4)?,
            jsa_nodes: s.usize_or("jsa_nodes", 3, 201)?,
            jsa_half_width: s.f64_or("jsa_half_width_sigmas", Range::Positive, 5.0)?,
        };
        s.finish()?;
        g
    };

    let filter = match doc.remove("filter") {
        None => None,
        Some(raw) => {
            let mut s = section("filter", raw, &mut defaults);
            let modes = s.parse("modes", |v| match v.parse::<u32>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err("must be an integer >= 1".to_string()),
            })?;
            let width_s = s.opt_f64("width_s_rad_per_s", Range::Positive)?;
            let width_i = s.opt_f64("width_i_rad_per_s", Range::Positive)?;
            s.finish()?;
            Some(match (modes, width_s, width_i) {
                (Some(n), None, None) => FilterSection::Modes(n),
                (None, Some(width_s), Some(width_i)) => FilterSection::Widths { width_s, width_i },
                (Some(_), _, _) => {
                    return Err(ConfigError::Inconsistent(
                        "[filter] sets both modes and explicit widths".into(),
                    ))
                }
                _ => {
                    return Err(ConfigError::Inconsistent(
                        "[filter] needs modes, or both width_s_rad_per_s and width_i_rad_per_s".into(),
                    ))
                }
            })
        }
    };

    let flux = {
        let mut s = section("flux", doc.remove("flux").unwrap_or_default(), &mut defaults);
        let f = FluxSection {
            sigma_list: s.parse("sigma_I_list_rad_per_s", parse_list)?,
            sweep_points: s.usize_or("sweep_points", 2, 9)?,
            nodes_per_panel: s.usize_or("nodes_per_panel", 2, 12)?,
            ladder_factor: s.f64_or("ladder_factor", Range::Positive, 8.0)?,
            rel_tol: s.f64_or("rel_tol", Range::Positive, 1e-4)?,
            max_doublings: s.usize_or("max_doublings", 1, 3)?,
            jsa_nodes: s.usize_or("jsa_nodes", 3, 41)?,
        };
        s.finish()?;
        if f.ladder_factor <= 1.0 {
            return Err(ConfigError::Value {
                section: "flux".into(),
                key: "ladder_factor".into(),
                value: f.ladder_factor.to_string(),
                reason: "must be > 1".into(),
            });
        }
        f
    };

    let temporal = {
        let mut s = section("temporal", doc.remove("temporal").unwrap_or_default(), &mut defaults);
        let m = s.parse("closed_form_m", |v| v.parse::<u32>().map_err(|_| "not a non-negative integer".into()))?;
        let closed_form_m = m.unwrap_or_else(|| {
            s.note_default("closed_form_m", "2".into());
            2
        });
        let t = TemporalSection {
            cutoff: s.f64_or("cutoff", Range::UnitOpen, 1e-3)?,
            peak_threshold: s.f64_or("peak_threshold", Range::UnitOpen, 0.05)?,
            window_s: s.opt_f64("window_s", Range::Positive)?,
            closed_form_m,
            time_points: s.usize_or("time_points", 3, 512)?,
            time_span_s: s.opt_f64("time_span_s", Range::Positive)?,
        };
        s.finish()?;
        t
    };

    let geom = {
        let mut s = section("geom", doc.remove("geom").unwrap_or_default(), &mut defaults);
        let g = GeomSection {
            sigma_i: s.opt_f64("sigma_I_rad_per_s", Range::NonNegative)?,
            config: s.parse("config", |v| {
                GEOM.iter().find(|(n, _)| *n == v).map(|&(_, c)| c).ok_or("expected csi or cs".to_string())
            })?,
        };
        s.finish()?;
        g
    };

    let design = match doc.remove("design") {
        None => None,
        Some(raw) => {
            let mut s = section("design", raw, &mut defaults);
            let d = DesignSection {
                target_wavelength_m: s.req_f64("target_wavelength_m", Range::Positive)?,
                linewidth: s.req_f64("linewidth_rad_per_s", Range::Positive)?,
                length_m: s.opt_f64("length_m", Range::Positive)?,
                r2: s.opt_f64("r2", Range::UnitOpen)?,
                sigma_i: s.opt_f64("sigma_I_rad_per_s", Range::Positive)?,
                skip_flux: s.bool_or("skip_flux", false)?,
            };
            s.finish()?;
            Some(d)
        }
    };

    let output = {
        let mut s = section("output", doc.remove("output").unwrap_or_default(), &mut defaults);
        let prefix = s.raw("prefix").unwrap_or_default();
        if prefix.contains(['/', '\\']) {
            return Err(s.value_error("prefix", &prefix, "must not contain path separators"));
        }
        let format = s.raw("format");
        if let Some(f) = format.as_deref().filter(|f| *f != "csv") {
            return Err(s.value_error("format", f, "only csv is supported"));
        }
        s.finish()?;
        OutputSection { prefix }
    };

    Ok(Parsed {
        config: RunConfig {
            fiber,
            pump,
            cavity,
            grid,
            filter,
            flux,
            temporal,
            geom,
            design,
            output,
        },
        defaults,
    })
}

fn section<'a>(name: &'static str, entries: BTreeMap<String, String>, defaults: &'a mut Vec<String>) -> Section<'a> {
    Section {
        name,
        entries,
        used: BTreeSet::new(),
        defaults,
    }
}

impl RunConfig {
    /// Canonical text form; parsing it yields `self` again.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        let head = |out: &mut String, name: &str| {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
        };
        let kv = |out: &mut String, k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };

        let f = &self.fiber;
        head(&mut out, "fiber");
        kv(&mut out, "core_radius_m", &f.core_radius_m);
        kv(&mut out, "air_fill_fraction", &f.air_fill_fraction);
        kv(&mut out, "length_m", &f.length_m);
        kv(&mut out, "gamma_per_W_per_m", &f.gamma);
        kv(&mut out, "gamma_fwm_per_W_per_m", &f.gamma_fwm);
        kv(&mut out, "cladding", &name_of(&CLADDING, &f.cladding));
        kv(&mut out, "mode_equation", &name_of(&MODE_EQUATION, &f.mode_equation));
        kv(&mut out, "dispersion", &name_of(&DISPERSION, &f.dispersion));

        let p = &self.pump;
        head(&mut out, "pump");
        kv(&mut out, "wavelength_m", &p.wavelength_m);
        kv(&mut out, "sigma_I_rad_per_s", &p.sigma_i);
        kv(&mut out, "avg_power_W", &p.avg_power_w);
        kv(&mut out, "rep_rate_Hz", &p.rep_rate_hz);
        if let Some(x) = p.peak_power_w {
            kv(&mut out, "peak_power_W", &x);
        }

        let c = &self.cavity;
        head(&mut out, "cavity");
        kv(&mut out, "topology", &name_of(&TOPOLOGY, &c.topology));
        kv(&mut out, "resonant_s", &c.resonant_s);
        kv(&mut out, "resonant_i", &c.resonant_i);
        kv(&mut out, "r2_s", &c.r2_s);
        kv(&mut out, "r2_i", &c.r2_i);
        if let Some(t) = c.t2_s {
            kv(&mut out, "t2_s", &t);
        }
        if let Some(t) = c.t2_i {
            kv(&mut out, "t2_i", &t);
        }
        kv(&mut out, "tune", &c.tune);
        if !c.tune {
            kv(&mut out, "delta1_s_rad", &c.phases_s.0);
            kv(&mut out, "delta2_s_rad", &c.phases_s.1);
            kv(&mut out, "delta1_i_rad", &c.phases_i.0);
            kv(&mut out, "delta2_i_rad", &c.phases_i.1);
        }

        let g = &self.grid;
        head(&mut out, "grid");
        for (k, v) in [
            ("center_s_rad_per_s", g.center_s),
            ("center_i_rad_per_s", g.center_i),
            ("span_s_rad_per_s", g.span_s),
            ("span_i_rad_per_s", g.span_i),
        ] {
            if let Some(v) = v {
                kv(&mut out, k, &v);
            }
        }
        kv(&mut out, "points", &g.points);
        kv(&mut out, "pad_factor", &g.pad_factor);
        kv(&mut out, "jsa_nodes", &g.jsa_nodes);
        kv(&mut out, "jsa_half_width_sigmas", &g.jsa_half_width);

        match &self.filter {
            None => {}
            Some(FilterSection::Modes(n)) => {
                head(&mut out, "filter");
                kv(&mut out, "modes", n);
            }
            Some(FilterSection::Widths { width_s, width_i }) => {
                head(&mut out, "filter");
                kv(&mut out, "width_s_rad_per_s", width_s);
                kv(&mut out, "width_i_rad_per_s", width_i);
            }
        }

        let fl = &self.flux;
        head(&mut out, "flux");
        if let Some(list) = &fl.sigma_list {
            let joined: Vec<String> = list.iter().map(f64::to_string).collect();
            kv(&mut out, "sigma_I_list_rad_per_s", &joined.join(", "));
        }
        kv(&mut out, "sweep_points", &fl.sweep_points);
        kv(&mut out, "nodes_per_panel", &fl.nodes_per_panel);
        kv(&mut out, "ladder_factor", &fl.ladder_factor);
        kv(&mut out, "rel_tol", &fl.rel_tol);
        kv(&mut out, "max_doublings", &fl.max_doublings);
        kv(&mut out, "jsa_nodes", &fl.jsa_nodes);

        let t = &self.temporal;
        head(&mut out, "temporal");
        kv(&mut out, "cutoff", &t.cutoff);
        kv(&mut out, "peak_threshold", &t.peak_threshold);
        if let Some(w) = t.window_s {
            kv(&mut out, "window_s", &w);
        }
        kv(&mut out, "closed_form_m", &t.closed_form_m);
        kv(&mut out, "time_points", &t.time_points);
        if let Some(s) = t.time_span_s {
            kv(&mut out, "time_span_s", &s);
        }

        if self.geom.sigma_i.is_some() || self.geom.config.is_some() {
            head(&mut out, "geom");
            if let Some(s) = self.geom.sigma_i {
                kv(&mut out, "sigma_I_rad_per_s", &s);
            }
            if let Some(c) = &self.geom.config {
                kv(&mut out, "config", &name_of(&GEOM, c));
            }
        }

        if let Some(d) = &self.design {
            head(&mut out, "design");
            kv(&mut out, "target_wavelength_m", &d.target_wavelength_m);
            kv(&mut out, "linewidth_rad_per_s", &d.linewidth);
            if let Some(l) = d.length_m {
                kv(&mut out, "length_m", &l);
            }
            if let Some(r) = d.r2 {
                kv(&mut out, "r2", &r);
            }
            if let Some(s) = d.sigma_i {
                kv(&mut out, "sigma_I_rad_per_s", &s);
            }
            kv(&mut out, "skip_flux", &d.skip_flux);
        }

        head(&mut out, "output");
        if !self.output.prefix.is_empty() {
            kv(&mut out, "prefix", &self.output.prefix);
        }
        kv(&mut out, "format", &"csv");
        out
    }
}
