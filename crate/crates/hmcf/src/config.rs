//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [initial]
//! kind = perturbed
//! r0 = 1
//! eps = 0.05
//! m = 3
//!
//! [velocity]
//! kind = constant
//! f0 = 0.2
//!
//! [solver]
//! n = 128
//! record_dt = 0.001
//!
//! [output]
//! dir = out/perturbed
//! ```
//!
//! A `[string]` section turns the file into a string run; `[solver]` and
//! `[velocity]` are then rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hmcf_core::{make_initial, FlowConfig, InitialShape, StringOptions, ThetaGrid, VelocityShape};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_N: usize = 128;
pub const DEFAULT_SNAPSHOT_EVERY: usize = 10;
pub const DEFAULT_STRING_M: usize = 64;
pub const DEFAULT_STRING_CFL: f64 = 0.25;

const SECTIONS: [&str; 5] = ["initial", "velocity", "solver", "output", "string"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key \"{key}\" in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key \"{key}\"")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: {key} = {value}: expected {expected}")]
    BadValue { line: usize, key: String, value: String, expected: &'static str },
    #[error("missing required key {key}")]
    Missing { key: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write every this many recorded states as a snapshot file (the final
    /// state is always written).
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), snapshot_every: DEFAULT_SNAPSHOT_EVERY }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub flow: FlowConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StringInitial {
    Circle { r0: f64 },
    Ellipse { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringRunConfig {
    pub initial: StringInitial,
    /// Initial outward normal speed.
    pub vn: f64,
    pub m: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub options: StringOptions,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Flow(FlowRun),
    String(StringRunConfig),
}

impl RunConfig {
    pub fn output(&self) -> &OutputConfig {
        match self {
            RunConfig::Flow(f) => &f.output,
            RunConfig::String(s) => &s.output,
        }
    }

    pub fn output_mut(&mut self) -> &mut OutputConfig {
        match self {
            RunConfig::Flow(f) => &mut f.output,
            RunConfig::String(s) => &mut s.output,
        }
    }

    /// Fully resolved configuration in a fixed key order. The output
    /// directory is left out so that relocating a run keeps its digest.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        match self {
            RunConfig::Flow(run) => {
                let f = &run.flow;
                out.push_str("[initial]\n");
                match f.initial {
                    InitialShape::Circle { r0 } => kv(&mut out, &[("kind", "circle".into()), ("r0", num(r0))]),
                    InitialShape::Ellipse { a, b } => {
                        kv(&mut out, &[("kind", "ellipse".into()), ("a", num(a)), ("b", num(b))])
                    }
                    InitialShape::Perturbed { r0, eps, m } => kv(
                        &mut out,
                        &[("kind", "perturbed".into()), ("r0", num(r0)), ("eps", num(eps)), ("m", m.to_string())],
                    ),
                }
                out.push_str("[velocity]\n");
                match f.velocity {
                    VelocityShape::Constant { f0 } => kv(&mut out, &[("kind", "constant".into()), ("f0", num(f0))]),
                    VelocityShape::Cosine { f0, amp, mode } => kv(
                        &mut out,
                        &[
                            ("kind", "cosine".into()),
                            ("f0", num(f0)),
                            ("amp", num(amp)),
                            ("mode", mode.to_string()),
                        ],
                    ),
                }
                out.push_str("[solver]\n");
                kv(
                    &mut out,
                    &[
                        ("n", f.n.to_string()),
                        ("cfl", num(f.cfl)),
                        ("d", num(f.d)),
                        ("t_end", num(f.t_end)),
                        ("k_max_limit", num(f.k_max_limit)),
                        ("width_min", num(f.width_min)),
                        ("record_every", f.record_every.to_string()),
                        ("record_dt", f.record_dt.map_or_else(|| "none".into(), num)),
                        ("dealias", f.dealias.to_string()),
                    ],
                );
            }
            RunConfig::String(s) => {
                out.push_str("[initial]\n");
                match s.initial {
                    StringInitial::Circle { r0 } => kv(&mut out, &[("kind", "circle".into()), ("r0", num(r0))]),
                    StringInitial::Ellipse { a, b } => {
                        kv(&mut out, &[("kind", "ellipse".into()), ("a", num(a)), ("b", num(b))])
                    }
                }
                out.push_str("[string]\n");
                kv(
                    &mut out,
                    &[
                        ("m", s.m.to_string()),
                        ("vn", num(s.vn)),
                        ("cfl", num(s.cfl)),
                        ("t_end", num(s.t_end)),
                        ("record_every", s.options.record_every.to_string()),
                        ("diameter_min", num(s.options.diameter_min)),
                    ],
                );
            }
        }
        out.push_str("[output]\n");
        kv(&mut out, &[("snapshot_every", self.output().snapshot_every.to_string())]);
        out
    }

    /// Lower-case hex SHA-256 of [`RunConfig::canonical`].
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn kv(out: &mut String, pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
}

// Shortest round-trip form; identical on every platform.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse(&text)
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn split(text: &str) -> Result<Sections, ConfigError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("malformed section header {content:?}") })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection { line, name: name.to_string() });
            }
            sections.entry(name.to_string()).or_default();
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected key = value, got {content:?}") })?;
        let section = current
            .clone()
            .ok_or_else(|| ConfigError::Syntax { line, message: "key outside of any section".into() })?;
        let key = key.trim().to_string();
        let entry = Entry { value: value.trim().to_string(), line };
        let table = sections.entry(section.clone()).or_default();
        if table.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line, key: format!("{section}.{key}") });
        }
        table.insert(key, entry);
    }
    Ok(sections)
}

/// Typed, consuming view of one section: every key must be taken exactly
/// once, anything left over is an unknown key.
struct Table {
    name: &'static str,
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn take(sections: &mut Sections, name: &'static str) -> Self {
        Self { name, entries: sections.remove(name).unwrap_or_default() }
    }

    fn raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn full(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(ConfigError::BadValue {
                line: e.line,
                key: self.full(key),
                value: e.value,
                expected: "a finite real number",
            }),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        e.value.parse::<usize>().map(Some).map_err(|_| ConfigError::BadValue {
            line: e.line,
            key: self.full(key),
            value: e.value,
            expected: "a non-negative integer",
        })
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        match e.value.as_str() {
            "true" => Ok(Some(true)),
            "false" => Ok(Some(false)),
            _ => Err(ConfigError::BadValue {
                line: e.line,
                key: self.full(key),
                value: e.value,
                expected: "true or false",
            }),
        }
    }

    fn word(&mut self, key: &str) -> Option<Entry> {
        self.raw(key)
    }

    fn need_real(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.real(key)?.ok_or_else(|| ConfigError::Missing { key: self.full(key) })
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, e)) => {
                Err(ConfigError::UnknownKey { line: e.line, section: self.name.to_string(), key })
            }
        }
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let mut sections = split(text)?;
    let output = parse_output(Table::take(&mut sections, "output"))?;
    if sections.contains_key("string") {
        for name in ["solver", "velocity"] {
            if let Some(table) = sections.get(name) {
                let line = table.values().map(|e| e.line).min().unwrap_or(0);
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("section [{name}] does not apply to string runs"),
                });
            }
        }
        let initial = Table::take(&mut sections, "initial");
        let string = Table::take(&mut sections, "string");
        return parse_string(initial, string, output).map(RunConfig::String);
    }
    let initial = parse_initial(Table::take(&mut sections, "initial"))?;
    let velocity = parse_velocity(Table::take(&mut sections, "velocity"))?;
    let flow = parse_solver(Table::take(&mut sections, "solver"), initial, velocity)?;
    Ok(RunConfig::Flow(FlowRun { flow, output }))
}

fn kind(table: &mut Table) -> Result<(String, usize), ConfigError> {
    let e = table.word("kind").ok_or_else(|| ConfigError::Missing { key: table.full("kind") })?;
    Ok((e.value, e.line))
}

fn parse_initial(mut t: Table) -> Result<InitialShape, ConfigError> {
    let (kind, line) = kind(&mut t)?;
    let shape = match kind.as_str() {
        "circle" => InitialShape::Circle { r0: t.need_real("r0")? },
        "ellipse" => InitialShape::Ellipse { a: t.need_real("a")?, b: t.need_real("b")? },
        "perturbed" => {
            let r0 = t.need_real("r0")?;
            let eps = t.need_real("eps")?;
            let m_entry = t.raw("m").ok_or_else(|| ConfigError::Missing { key: "initial.m".into() })?;
            let m = m_entry.value.parse::<u32>().map_err(|_| ConfigError::BadValue {
                line: m_entry.line,
                key: "initial.m".into(),
                value: m_entry.value.clone(),
                expected: "a non-negative integer mode",
            })?;
            InitialShape::Perturbed { r0, eps, m }
        }
        _ => {
            return Err(ConfigError::BadValue {
                line,
                key: "initial.kind".into(),
                value: kind,
                expected: "circle, ellipse or perturbed",
            })
        }
    };
    t.finish()?;
    Ok(shape)
}

fn parse_velocity(mut t: Table) -> Result<VelocityShape, ConfigError> {
    if t.entries.is_empty() {
        return Ok(VelocityShape::default());
    }
    let (kind, line) = kind(&mut t)?;
    let v = match kind.as_str() {
        "constant" => VelocityShape::Constant { f0: t.real("f0")?.unwrap_or(0.0) },
        "cosine" => {
            let f0 = t.need_real("f0")?;
            let amp = t.need_real("amp")?;
            let e = t.raw("mode").ok_or_else(|| ConfigError::Missing { key: "velocity.mode".into() })?;
            let mode = e.value.parse::<u32>().map_err(|_| ConfigError::BadValue {
                line: e.line,
                key: "velocity.mode".into(),
                value: e.value.clone(),
                expected: "a non-negative integer mode",
            })?;
            VelocityShape::Cosine { f0, amp, mode }
        }
        _ => {
            return Err(ConfigError::BadValue {
                line,
                key: "velocity.kind".into(),
                value: kind,
                expected: "constant or cosine",
            })
        }
    };
    t.finish()?;
    Ok(v)
}

fn parse_solver(mut t: Table, initial: InitialShape, velocity: VelocityShape) -> Result<FlowConfig, ConfigError> {
    let n = t.count("n")?.unwrap_or(DEFAULT_N);
    let mut cfg = FlowConfig::new(initial, n).with_velocity(velocity);
    if let Some(v) = t.real("cfl")? {
        cfg.cfl = v;
    }
    if let Some(v) = t.real("d")? {
        cfg.d = v;
    }
    if let Some(v) = t.real("t_end")? {
        cfg.t_end = v;
    }
    if let Some(v) = t.real("k_max_limit")? {
        cfg.k_max_limit = v;
    }
    if let Some(v) = t.real("width_min")? {
        cfg.width_min = v;
    }
    if let Some(v) = t.count("record_every")? {
        cfg.record_every = v;
    }
    cfg.record_dt = t.real("record_dt")?;
    if let Some(v) = t.flag("dealias")? {
        cfg.dealias = v;
    }
    t.finish()?;

    cfg.validate().map_err(|e| ConfigError::Invalid { key: "solver".into(), message: e.to_string() })?;
    let grid = ThetaGrid::new(cfg.n).map_err(|e| ConfigError::Invalid { key: "solver.n".into(), message: e.to_string() })?;
    make_initial(&cfg.initial, &cfg.velocity, &grid)
        .map_err(|e| ConfigError::Invalid { key: "initial".into(), message: e.to_string() })?;
    Ok(cfg)
}

fn parse_output(mut t: Table) -> Result<OutputConfig, ConfigError> {
    let mut out = OutputConfig::default();
    if let Some(e) = t.raw("dir") {
        out.dir = PathBuf::from(e.value);
    }
    if let Some(v) = t.count("snapshot_every")? {
        if v == 0 {
            return Err(ConfigError::Invalid { key: "output.snapshot_every".into(), message: "must be >= 1".into() });
        }
        out.snapshot_every = v;
    }
    t.finish()?;
    Ok(out)
}

fn parse_string(mut initial: Table, mut t: Table, output: OutputConfig) -> Result<StringRunConfig, ConfigError> {
    let (kind, line) = kind(&mut initial)?;
    let shape = match kind.as_str() {
        "circle" => StringInitial::Circle { r0: initial.need_real("r0")? },
        "ellipse" => StringInitial::Ellipse { a: initial.need_real("a")?, b: initial.need_real("b")? },
        _ => {
            return Err(ConfigError::BadValue {
                line,
                key: "initial.kind".into(),
                value: kind,
                expected: "circle or ellipse for string runs",
            })
        }
    };
    initial.finish()?;

    let defaults = StringOptions::default();
    let cfg = StringRunConfig {
        initial: shape,
        m: t.count("m")?.unwrap_or(DEFAULT_STRING_M),
        vn: t.real("vn")?.unwrap_or(0.0),
        cfl: t.real("cfl")?.unwrap_or(DEFAULT_STRING_CFL),
        t_end: t.real("t_end")?.unwrap_or(FlowConfig::DEFAULT_T_END),
        options: StringOptions {
            record_every: t.count("record_every")?.unwrap_or(defaults.record_every),
            diameter_min: t.real("diameter_min")?.unwrap_or(defaults.diameter_min),
        },
        output,
    };
    t.finish()?;
    crate::runner::string_initial(&cfg)
        .map_err(|e| ConfigError::Invalid { key: "string".into(), message: e.to_string() })?;
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) || !(cfg.t_end > 0.0) || cfg.options.record_every == 0 {
        return Err(ConfigError::Invalid {
            key: "string".into(),
            message: format!(
                "need 0 < cfl <= 1, t_end > 0, record_every >= 1; got {}, {}, {}",
                cfg.cfl, cfg.t_end, cfg.options.record_every
            ),
        });
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_circle_gets_defaults() {
        let cfg = parse("[initial]\nkind = circle\nr0 = 1\n[solver]\nn = 128\n").unwrap();
        let RunConfig::Flow(run) = cfg else { panic!() };
        assert_eq!(run.flow.cfl, 0.5);
        assert_eq!(run.flow.d, 0.0);
        assert_eq!(run.flow.velocity, VelocityShape::Constant { f0: 0.0 });
        assert_eq!(run.flow.n, 128);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse("[initial]\nkind = circle\nr0 = 1\n[solver]\ndd = 0\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key, .. } => assert_eq!((line, key.as_str()), (5, "dd")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn convexity_margin_reported() {
        let err = parse("[initial]\nkind = perturbed\nr0 = 1\neps = 0.4\nm = 2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("convexity margin"), "{msg}");
    }

    #[test]
    fn key_belonging_to_another_kind_rejected() {
        assert!(matches!(
            parse("[initial]\nkind = circle\nr0 = 1\na = 2\n"),
            Err(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn digest_ignores_formatting_and_dir() {
        let a = parse("[initial]\nkind=circle\nr0=1\n[output]\ndir=x\n").unwrap();
        let b = parse("# c\n[output]\ndir = y\n\n[initial]\nr0 = 1.0\nkind = circle\n").unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = parse("[initial]\nkind=circle\nr0=1.5\n").unwrap();
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn string_config() {
        let cfg = parse("[initial]\nkind = circle\nr0 = 1\n[string]\nm = 64\nt_end = 1\n").unwrap();
        let RunConfig::String(s) = cfg else { panic!() };
        assert_eq!(s.cfl, DEFAULT_STRING_CFL);
        assert!(parse("[initial]\nkind = circle\nr0 = 1\n[string]\n[solver]\nn = 64\n").is_err());
        assert!(parse("[initial]\nkind = circle\nr0 = 1\n[string]\nvn = 1.5\n").is_err());
    }

    #[test]
    fn bad_values() {
        assert!(matches!(
            parse("[initial]\nkind = circle\nr0 = abc\n"),
            Err(ConfigError::BadValue { line: 3, .. })
        ));
        assert!(matches!(parse("[bogus]\n"), Err(ConfigError::UnknownSection { .. })));
        assert!(matches!(parse("[solver]\nn = 64\n"), Err(ConfigError::Missing { .. })));
        assert!(matches!(
            parse("[initial]\nkind = circle\nr0 = 1\nr0 = 2\n"),
            Err(ConfigError::DuplicateKey { line: 4, .. })
        ));
    }
}
