//! Run configuration: a flat `key = value` TOML subset.
//!
//! Every expression is parsed while the config is read, so a bad field
//! never reaches a solver.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use speclab_core::comparisons::Truncation;
use speclab_core::expr::Expr;
use speclab_core::warp::CurvatureProfile;

/// Smallest accepted grid size in either direction.
pub const MIN_GRID: usize = 16;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: `{key}`: {message}")]
    Key { line: usize, key: String, message: String },
    #[error("line {line}: `{key}`: syntax error at offset {offset}: {message}")]
    Expression { line: usize, key: String, offset: usize, message: String },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Warp,
    ModelSpectrum,
    Compare,
    Fact1,
    Reilly,
    Pohozaev,
    SteklovBound,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Warp => "warp",
            Command::ModelSpectrum => "model-spectrum",
            Command::Compare => "compare",
            Command::Fact1 => "fact1",
            Command::Reilly => "reilly",
            Command::Pohozaev => "pohozaev",
            Command::SteklovBound => "steklov-bound",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "warp" => Command::Warp,
            "model-spectrum" => Command::ModelSpectrum,
            "compare" => Command::Compare,
            "fact1" => Command::Fact1,
            "reilly" => Command::Reilly,
            "pohozaev" => Command::Pohozaev,
            "steklov-bound" => Command::SteklovBound,
            _ => return Err(format!("unknown command `{s}`")),
        })
    }
}

/// Domain the command runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Euclidean disc of radius `r`.
    Disc,
    /// Warped patch `dt^2 + J(t, theta)^2 dtheta^2` of radius `r`.
    Warped(Expr),
    /// Planar star-shaped domain `{ t < R(theta) }`.
    Pullback(Expr),
    /// Euclidean ball of radius `r` in three dimensions.
    Ball3,
}

impl Geometry {
    /// Coordinates the field expressions are written in.
    pub fn variables(&self) -> &'static [&'static str] {
        match self {
            Geometry::Disc | Geometry::Pullback(_) => &["x", "y"],
            Geometry::Warped(_) => &["t", "theta"],
            Geometry::Ball3 => &["x", "y", "z"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// `sigma_1 >= c`.
    Sharp,
    /// `sigma_1 > c / 2`.
    Escobar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    R,
    Beta,
    C,
    Grid,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::R => "r",
            SweepParam::Beta => "beta",
            SweepParam::C => "c",
            SweepParam::Grid => "grid",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "r" => SweepParam::R,
            "beta" | "β" => SweepParam::Beta,
            "c" => SweepParam::C,
            "grid" => SweepParam::Grid,
            _ => return Err(format!("cannot sweep `{s}` (expected r, beta, c or grid)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub case: String,
    /// Named domain when one was requested with `preset`.
    pub preset: Option<String>,
    pub geometry: Geometry,
    /// Radial curvature bound.
    pub k: CurvatureProfile,
    pub n: usize,
    pub r: f64,
    pub t_max: Option<f64>,
    pub beta: f64,
    /// The constant `K` of the Reilly formula.
    pub kappa: f64,
    pub c: Option<f64>,
    pub f: Option<Expr>,
    pub v: Option<Expr>,
    pub phi: Option<Expr>,
    /// Harmonic function of the analytic Pohozaev check.
    pub u: Option<Expr>,
    /// Vector field of the Pohozaev check; position when absent.
    pub field: Option<Vec<Expr>>,
    /// Dirichlet data in `theta` for the discrete Pohozaev check.
    pub data: Option<Expr>,
    pub n_t: usize,
    pub n_theta: usize,
    /// Inner truncation radius as a fraction of the outer radius.
    pub t0: Option<f64>,
    pub order: usize,
    pub refinement: usize,
    pub tol: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub variant: BoundVariant,
    pub truncation: Option<Truncation>,
    pub sweep: Option<(SweepParam, Vec<f64>)>,
}

const KEYS: &[&str] = &[
    "command", "case", "preset", "k", "J", "R", "n", "r", "t_max", "beta", "K", "c", "f", "V", "phi", "u", "F",
    "data", "n_t", "n_theta", "t0", "order", "refinement", "tol", "seed", "out", "variant", "trial", "sweep",
    "values",
];

fn canonical(key: &str) -> &str {
    match key {
        "β" => "beta",
        "φ" => "phi",
        "κ" => "K",
        "n_θ" => "n_theta",
        other => other,
    }
}

// Line of each key's definition, for error messages.
fn key_lines(text: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.starts_with('#') {
            continue;
        }
        if let Some(h) = s.strip_prefix('[') {
            let name = h.trim_start_matches('[').split(']').next().unwrap_or("").trim();
            out.entry(name.split('.').next().unwrap_or("").trim().to_string()).or_insert(i + 1);
            continue;
        }
        if let Some((k, _)) = s.split_once('=') {
            let k = k.trim().trim_matches('"').trim_matches('\'');
            out.entry(canonical(k).to_string()).or_insert(i + 1);
        }
    }
    out
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

struct Raw {
    values: BTreeMap<String, toml::Value>,
    lines: BTreeMap<String, usize>,
}

impl Raw {
    fn line(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Key { line: self.line(key), key: key.to_string(), message: message.into() }
    }

    fn string(&self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(toml::Value::String(s)) => {
                s.trim().parse::<f64>().map(Some).map_err(|_| self.err(key, "expected a number"))
            }
            Some(_) => Err(self.err(key, "expected a number")),
        }
    }

    fn count(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(self.err(key, "expected a non-negative integer")),
        }
    }

    fn expr(&self, key: &str, vars: &[&str]) -> Result<Option<Expr>, ConfigError> {
        let text = match self.values.get(key) {
            None => return Ok(None),
            Some(toml::Value::String(s)) => s.clone(),
            Some(toml::Value::Float(x)) => format!("{x:e}"),
            Some(toml::Value::Integer(i)) => i.to_string(),
            Some(_) => return Err(self.err(key, "expected an expression")),
        };
        parse_expr(&text, vars).map(Some).map_err(|(offset, message)| match offset {
            Some(offset) => ConfigError::Expression { line: self.line(key), key: key.to_string(), offset, message },
            None => self.err(key, message),
        })
    }
}

fn parse_expr(text: &str, vars: &[&str]) -> Result<Expr, (Option<usize>, String)> {
    Expr::parse(text, vars).map_err(|e| (e.offset(), e.to_string()))
}

fn positive(raw: &Raw, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(raw.err(key, "must be positive"))
    }
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
        text.parse()
    }

    /// Grid label used in CSV output.
    pub fn grid_label(&self) -> String {
        format!("{}x{}", self.n_t, self.n_theta)
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().trim().to_string(),
        })?;
        let lines = key_lines(text);
        let mut values = BTreeMap::new();
        for (k, v) in table {
            let key = canonical(&k).to_string();
            let line = lines.get(&key).copied().unwrap_or(0);
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Key { line, key, message: "unknown key".into() });
            }
            match &v {
                toml::Value::Table(_) => {
                    return Err(ConfigError::Key { line, key, message: "nested tables are not supported".into() })
                }
                toml::Value::Array(_) if key != "values" => {
                    return Err(ConfigError::Key { line, key, message: "arrays are only allowed for `values`".into() })
                }
                toml::Value::Datetime(_) => {
                    return Err(ConfigError::Key { line, key, message: "dates are not supported".into() })
                }
                _ => {}
            }
            values.insert(key, v);
        }
        let raw = Raw { values, lines };

        let command: Command = raw
            .string("command")?
            .ok_or(ConfigError::Missing("command"))?
            .parse()
            .map_err(|m: String| raw.err("command", m))?;
        let case = raw.string("case")?.unwrap_or_else(|| command.name().to_string());

        let r = positive(&raw, "r", raw.number("r")?.unwrap_or(1.0))?;
        let preset = raw.string("preset")?;
        let j = raw.expr("J", &["t", "theta"])?;
        let big_r = raw.expr("R", &["theta"])?;
        let geometry = match (preset.as_deref(), j, big_r) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) | (None, Some(_), Some(_)) => {
                return Err(raw.err("preset", "give at most one of preset, J and R"))
            }
            (None, Some(j), None) => Geometry::Warped(j),
            (None, None, Some(rf)) => Geometry::Pullback(rf),
            (None, None, None) | (Some("disc" | "disc-quadratic"), None, None) => Geometry::Disc,
            (Some("ellipse"), None, None) => Geometry::Pullback(
                Expr::parse("1/sqrt(cos(theta)^2 + sin(theta)^2/1.44)", &["theta"]).expect("literal parses"),
            ),
            (Some("ball3"), None, None) => Geometry::Ball3,
            (Some(p), None, None) => {
                return Err(raw.err("preset", format!("unknown preset `{p}` (disc, disc-quadratic, ellipse, ball3)")))
            }
        };

        let k = match raw.values.get("k") {
            None => CurvatureProfile::Constant(0.0),
            Some(toml::Value::Float(_) | toml::Value::Integer(_)) => {
                CurvatureProfile::Constant(raw.number("k")?.expect("present"))
            }
            Some(_) => {
                let e = raw.expr("k", &["t"])?.expect("present");
                match e.as_constant() {
                    Some(c) => CurvatureProfile::Constant(c),
                    None => CurvatureProfile::expression(e).map_err(|e| raw.err("k", e.to_string()))?,
                }
            }
        };

        let vars = geometry.variables();
        let defaults_quadratic = preset.as_deref() == Some("disc-quadratic");
        let mut f = raw.expr("f", vars)?;
        if f.is_none() && defaults_quadratic {
            f = Some(Expr::parse("x^2-y^2", vars).expect("literal parses"));
        }
        let v = raw.expr("V", vars)?;
        let phi = raw.expr("phi", vars)?;
        let u = raw.expr("u", vars)?;
        let field = match raw.string("F")? {
            None => None,
            Some(s) if s.trim() == "position" => None,
            Some(s) => {
                let mut comps = Vec::new();
                let mut base = 0;
                for part in s.split(';') {
                    let e = parse_expr(part, vars).map_err(|(off, message)| match off {
                        Some(o) => ConfigError::Expression { line: raw.line("F"), key: "F".into(), offset: base + o, message },
                        None => raw.err("F", message),
                    })?;
                    comps.push(e);
                    base += part.len() + 1;
                }
                if comps.len() != vars.len() {
                    return Err(raw.err("F", format!("expected {} components separated by `;`", vars.len())));
                }
                Some(comps)
            }
        };
        let data = raw.expr("data", &["theta"])?;

        let n = raw.count("n")?.unwrap_or(2) as usize;
        if n < 2 {
            return Err(raw.err("n", "dimension must be at least 2"));
        }
        let t_max = raw.number("t_max")?.map(|v| positive(&raw, "t_max", v)).transpose()?;
        let beta = raw.number("beta")?.unwrap_or(1.0);
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(raw.err("beta", "must be non-negative"));
        }
        let kappa = raw.number("K")?.unwrap_or(0.0);
        let c = raw.number("c")?.map(|v| positive(&raw, "c", v)).transpose()?;

        let n_t = raw.count("n_t")?.unwrap_or(64) as usize;
        let n_theta = raw.count("n_theta")?.unwrap_or(n_t as u64) as usize;
        for (key, v) in [("n_t", n_t), ("n_theta", n_theta)] {
            if v < MIN_GRID {
                return Err(raw.err(key, format!("grid size must be at least {MIN_GRID}")));
            }
        }
        let t0 = raw.number("t0")?.map(|v| positive(&raw, "t0", v)).transpose()?;
        let order = raw.count("order")?.unwrap_or(8) as usize;
        if order == 0 {
            return Err(raw.err("order", "quadrature order must be positive"));
        }
        let refinement = raw.count("refinement")?.unwrap_or(1).max(1) as usize;
        let tol = raw.number("tol")?.map(|v| positive(&raw, "tol", v)).transpose()?;
        let seed = raw.count("seed")?.unwrap_or(DEFAULT_SEED);
        let out = raw.string("out")?.map(PathBuf::from);
        let variant = match raw.string("variant")?.as_deref() {
            None | Some("sharp") => BoundVariant::Sharp,
            Some("escobar") => BoundVariant::Escobar,
            Some(s) => return Err(raw.err("variant", format!("unknown variant `{s}` (sharp or escobar)"))),
        };
        let truncation = match raw.string("trial")?.as_deref() {
            None | Some("none") => None,
            Some("min") => Some(Truncation::Min),
            Some("max") => Some(Truncation::Max),
            Some(s) => return Err(raw.err("trial", format!("unknown truncation `{s}` (min, max or none)"))),
        };
        let sweep = match raw.string("sweep")? {
            None => {
                if raw.values.contains_key("values") {
                    return Err(raw.err("values", "`values` needs `sweep`"));
                }
                None
            }
            Some(p) => {
                let param: SweepParam = p.parse().map_err(|m: String| raw.err("sweep", m))?;
                let vals = match raw.values.get("values") {
                    None => Vec::new(),
                    Some(toml::Value::Array(a)) => a
                        .iter()
                        .map(|x| match x {
                            toml::Value::Float(f) => Ok(*f),
                            toml::Value::Integer(i) => Ok(*i as f64),
                            _ => Err(raw.err("values", "expected numbers")),
                        })
                        .collect::<Result<_, _>>()?,
                    Some(_) => return Err(raw.err("values", "expected an array of numbers")),
                };
                Some((param, vals))
            }
        };

        Ok(RunConfig {
            command,
            case,
            preset,
            geometry,
            k,
            n,
            r,
            t_max,
            beta,
            kappa,
            c,
            f,
            v,
            phi,
            u,
            field,
            data,
            n_t,
            n_theta,
            t0,
            order,
            refinement,
            tol,
            seed,
            out,
            variant,
            truncation,
            sweep,
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
