//! Scenario files: schema checking and construction of the driven system.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::algebra::{BumpCover, PolynomialObservable};
use crate::bundle::{BundleModel, ParameterPath};
use crate::coords::{as_strs, Dims};
use crate::evolve::{DrivenHamiltonian, EvolutionMode, EvolveError};
use crate::expr::{parse_expr, Expr, ParseError};
use crate::quantize::{FiberGrid, Ordering, WaveSection};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("invalid expression at {pointer}: {source}")]
    Expression { pointer: String, source: ParseError },
    #[error("invalid value at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
    #[error("unknown preset `{name}` (available: {known})")]
    UnknownPreset { name: String, known: String },
}

impl ConfigError {
    /// JSON pointer of the offending field, when there is one.
    pub fn pointer(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { pointer, .. }
            | ConfigError::Expression { pointer, .. }
            | ConfigError::Invalid { pointer, .. } => Some(pointer),
            _ => None,
        }
    }
}

fn invalid(pointer: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimsSpec {
    pub m: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSpec {
    /// `lambda[k][l]` is `Lambda^k_lambda`.
    pub lambda: Vec<Vec<String>>,
    pub drift: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    ClosedForm,
    Samples,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: PathKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<Vec<f64>>,
    pub span: [f64; 2],
    pub closed: bool,
    /// Time warps compared by the reparametrization diagnostic.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warps: Vec<String>,
}

/// `coeff * p_{index[0]} ... p_{index[d-1]}`, indices starting at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub index: Vec<usize>,
    pub coeff: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub charts: usize,
}

impl Default for CoverSpec {
    fn default() -> Self {
        CoverSpec { charts: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub steps: usize,
    pub ordering: Ordering,
    #[serde(default)]
    pub mode: EvolutionMode,
    /// Stride of the recorded rows; defaults to `max(1, steps / 1000)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
}

impl IntegratorSpec {
    pub fn row_stride(&self) -> usize {
        self.sample_every.unwrap_or((self.steps / 1000).max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub center: Vec<f64>,
    pub width: f64,
    pub kick: Vec<f64>,
}

macro_rules! tolerances {
    ($($(#[$doc:meta])* $name:ident = $default:expr),* $(,)?) => {
        /// Pass/fail thresholds used by run checks and verification suites.
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        pub struct Tolerances {
            $($(#[$doc])* pub $name: f64,)*
        }

        impl Default for Tolerances {
            fn default() -> Self {
                Tolerances { $($name: $default,)* }
            }
        }

        impl Tolerances {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($name)),*];

            fn set(&mut self, key: &str, value: f64) -> bool {
                match key {
                    $(stringify!($name) => { self.$name = value; true })*
                    _ => false,
                }
            }
        }
    };
}

tolerances! {
    /// `||U^dagger U - I||_F`, or the norm drift in state mode.
    unitarity = 1e-10,
    hermiticity = 1e-12,
    /// `||U_geo - I||_F` around a closed loop of a flat connection.
    flat_holonomy = 1e-7,
    /// `max_t |<q> - q_cl|` and `|<p> - p_cl|`.
    ehrenfest = 1e-3,
    reparametrization = 5e-6,
    /// Lower bound on the step-doubling ratio.
    convergence_ratio = 3.5,
    richardson = 1e-6,
    /// `||U_geo(2s) - U_geo(s)||_F` at the finest step doubling.
    self_convergence = 1e-5,
    /// Lower bound on `||U_geo - I||_F` for a curved closed loop.
    nontrivial_holonomy = 1e-2,
    factorization = 1e-8,
    decomposition = 1e-12,
    dirac_symbol = 1e-12,
    /// Mass outside `[-0.9 L, 0.9 L]^n` above which a run flags its final
    /// state as unconfined (reported, never failed).
    confinement = 1e-8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Timeseries,
    Unitary,
    Holonomy,
    Convergence,
    Reparametrization,
    Ehrenfest,
    Split,
    Decomposition,
}

impl OutputKind {
    pub const ALL: [(&'static str, OutputKind); 8] = [
        ("timeseries", OutputKind::Timeseries),
        ("unitary", OutputKind::Unitary),
        ("holonomy", OutputKind::Holonomy),
        ("convergence", OutputKind::Convergence),
        ("reparametrization", OutputKind::Reparametrization),
        ("ehrenfest", OutputKind::Ehrenfest),
        ("split", OutputKind::Split),
        ("decomposition", OutputKind::Decomposition),
    ];
}

/// A scenario as written in its JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub dims: DimsSpec,
    pub connection: ConnectionSpec,
    pub path: PathSpec,
    pub hamiltonian: Vec<MonomialSpec>,
    #[serde(default)]
    pub cover: CoverSpec,
    pub grid: GridSpec,
    pub integrator: IntegratorSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub outputs: Vec<OutputKind>,
}

/// A validated scenario with every expression parsed.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub system: DrivenHamiltonian,
    pub warps: Vec<Expr>,
    pub initial: WaveSection,
}

impl ScenarioConfig {
    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parse every expression and assemble the driven system.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let dims = Dims::new(self.dims.m, self.dims.n);
        let field = dims.field_vars();
        let field = as_strs(&field);
        let expr = |pointer: String, src: &str, vars: &[&str]| {
            parse_expr(src, vars).map_err(|source| ConfigError::Expression { pointer, source })
        };

        if self.connection.lambda.len() != dims.n {
            return Err(invalid("/connection/lambda", format!("expected {} rows (one per q)", dims.n)));
        }
        let mut lambda = Vec::with_capacity(dims.n);
        for (k, row) in self.connection.lambda.iter().enumerate() {
            if row.len() != dims.m {
                return Err(invalid(
                    &format!("/connection/lambda/{k}"),
                    format!("expected {} entries (one per parameter)", dims.m),
                ));
            }
            let parsed = row
                .iter()
                .enumerate()
                .map(|(l, s)| expr(format!("/connection/lambda/{k}/{l}"), s, &field))
                .collect::<Result<Vec<_>, _>>()?;
            lambda.push(parsed);
        }
        if self.connection.drift.len() != dims.n {
            return Err(invalid("/connection/drift", format!("expected {} entries", dims.n)));
        }
        let drift = self
            .connection
            .drift
            .iter()
            .enumerate()
            .map(|(k, s)| expr(format!("/connection/drift/{k}"), s, &field))
            .collect::<Result<Vec<_>, _>>()?;
        let bundle = BundleModel::new(dims, lambda, drift, None).map_err(|e| invalid("/connection", e.to_string()))?;

        let span = (self.path.span[0], self.path.span[1]);
        let path = match self.path.kind {
            PathKind::ClosedForm => {
                if self.path.components.len() != dims.m {
                    return Err(invalid("/path/components", format!("expected {} expressions", dims.m)));
                }
                let comps = self
                    .path
                    .components
                    .iter()
                    .enumerate()
                    .map(|(l, s)| expr(format!("/path/components/{l}"), s, &["t"]))
                    .collect::<Result<Vec<_>, _>>()?;
                ParameterPath::closed_form(comps, span, self.path.closed)
            }
            PathKind::Samples => {
                if self.path.values.len() != self.path.times.len() {
                    return Err(invalid("/path/values", "needs one row per entry of /path/times"));
                }
                if let Some(i) = self.path.values.iter().position(|v| v.len() != dims.m) {
                    return Err(invalid(&format!("/path/values/{i}"), format!("expected {} values", dims.m)));
                }
                ParameterPath::sampled(&self.path.times, &self.path.values, span, self.path.closed)
            }
        }
        .map_err(|e| invalid("/path", e.to_string()))?;

        let warps = self
            .path
            .warps
            .iter()
            .enumerate()
            .map(|(i, s)| expr(format!("/path/warps/{i}"), s, &["t"]))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, w) in warps.iter().enumerate() {
            path.reparametrize(w).map_err(|e| invalid(&format!("/path/warps/{i}"), e.to_string()))?;
        }

        let mut dynamic = PolynomialObservable::zero(dims.n);
        for (i, mono) in self.hamiltonian.iter().enumerate() {
            if let Some(j) = mono.index.iter().position(|k| *k == 0 || *k > dims.n) {
                return Err(invalid(
                    &format!("/hamiltonian/{i}/index/{j}"),
                    format!("momentum index must lie in 1..={}", dims.n),
                ));
            }
            let coeff = expr(format!("/hamiltonian/{i}/coeff"), &mono.coeff, &field)?;
            let index: Vec<usize> = mono.index.iter().map(|k| k - 1).collect();
            let term = PolynomialObservable::monomial(dims.n, &index, coeff)
                .map_err(|e| invalid(&format!("/hamiltonian/{i}"), e.to_string()))?;
            dynamic = dynamic.add(&term).map_err(|e| invalid(&format!("/hamiltonian/{i}"), e.to_string()))?;
        }

        let grid = FiberGrid::new(dims.n, self.grid.points, self.grid.half_width).map_err(|e| {
            let pointer = match e {
                crate::quantize::QuantizeError::FiberDim(_) => "/dims/n",
                crate::quantize::QuantizeError::TooFewPoints(_) => "/grid/N",
                _ => "/grid/L",
            };
            invalid(pointer, e.to_string())
        })?;
        let cover = match (dims.n, self.cover.charts) {
            (_, 0) => return Err(invalid("/cover/charts", "at least one chart is needed")),
            (_, 1) => BumpCover::single(dims.n, self.grid.half_width),
            (1, r) => BumpCover::uniform_1d(self.grid.half_width, r),
            _ => return Err(invalid("/cover/charts", "multi-chart covers are one-dimensional")),
        };

        if self.initial.center.len() != dims.n {
            return Err(invalid("/initial/center", format!("expected {} coordinates", dims.n)));
        }
        if self.initial.kick.len() != dims.n {
            return Err(invalid("/initial/kick", format!("expected {} components", dims.n)));
        }
        if !(self.initial.width > 0.0 && self.initial.width.is_finite()) {
            return Err(invalid("/initial/width", "must be positive"));
        }
        if self.integrator.steps == 0 {
            return Err(invalid("/integrator/steps", "at least one step is needed"));
        }
        if self.integrator.sample_every == Some(0) {
            return Err(invalid("/integrator/sample_every", "must be at least 1"));
        }
        if self.wants(OutputKind::Unitary) && self.integrator.mode == EvolutionMode::State {
            return Err(invalid("/outputs", "a unitary dump needs integrator mode `unitary`"));
        }
        if self.wants(OutputKind::Convergence) && self.integrator.steps < 2 {
            return Err(invalid("/integrator/steps", "convergence needs at least 2 steps"));
        }
        if self.wants(OutputKind::Reparametrization) && warps.len() < 2 {
            return Err(invalid("/path/warps", "reparametrization needs at least two warps"));
        }

        let system = DrivenHamiltonian::new(bundle, path, dynamic, cover, grid.clone(), self.integrator.ordering)
            .map_err(|e| match e {
                EvolveError::Algebra(a) => invalid("/cover", a.to_string()),
                other => invalid("/hamiltonian", other.to_string()),
            })?;
        let t0 = span.0;
        let initial = WaveSection::gaussian(&grid, &self.initial.center, self.initial.width, &self.initial.kick)
            .normalized()
            .at(t0, &system.path().position(t0).map_err(|e| invalid("/path", e.to_string()))?);
        Ok(Scenario {
            config: self.clone(),
            system,
            warps,
            initial,
        })
    }
}

/// Read and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let config = parse_scenario(&text)?;
    config.build()?;
    Ok(config)
}

/// Schema-check a scenario from JSON text (expressions are not parsed yet).
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    from_value(&value)
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

struct At<'a> {
    value: &'a Value,
    pointer: String,
}

impl<'a> At<'a> {
    fn schema(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Schema {
            pointer: if self.pointer.is_empty() { "/".into() } else { self.pointer.clone() },
            message: message.into(),
        }
    }

    fn object(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        let map = self.value.as_object().ok_or_else(|| self.schema("expected an object"))?;
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError::Schema {
                    pointer: format!("{}/{}", self.pointer, escape(key)),
                    message: format!("unknown key (expected one of: {})", allowed.join(", ")),
                });
            }
        }
        Ok(())
    }

    fn opt(&self, key: &str) -> Option<At<'a>> {
        self.value.get(key).map(|value| At {
            value,
            pointer: format!("{}/{}", self.pointer, escape(key)),
        })
    }

    fn get(&self, key: &str) -> Result<At<'a>, ConfigError> {
        self.opt(key).ok_or_else(|| ConfigError::Schema {
            pointer: format!("{}/{}", self.pointer, escape(key)),
            message: "missing required key".into(),
        })
    }

    fn items(&self) -> Result<Vec<At<'a>>, ConfigError> {
        let arr = self.value.as_array().ok_or_else(|| self.schema("expected an array"))?;
        Ok(arr
            .iter()
            .enumerate()
            .map(|(i, value)| At {
                value,
                pointer: format!("{}/{i}", self.pointer),
            })
            .collect())
    }

    fn usize(&self) -> Result<usize, ConfigError> {
        self.value
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| self.schema("expected a non-negative integer"))
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        self.value.as_bool().ok_or_else(|| self.schema("expected true or false"))
    }

    fn str(&self) -> Result<&'a str, ConfigError> {
        self.value.as_str().ok_or_else(|| self.schema("expected a string"))
    }

    /// A number, or a string holding a constant expression such as `"2*pi"`.
    fn number(&self) -> Result<f64, ConfigError> {
        let v = match self.value {
            Value::Number(n) => n.as_f64().ok_or_else(|| self.schema("expected a number"))?,
            Value::String(s) => {
                let e = parse_expr(s, &[]).map_err(|source| ConfigError::Expression {
                    pointer: self.pointer.clone(),
                    source,
                })?;
                e.eval(&Default::default()).map_err(|e| self.schema(e.to_string()))?
            }
            _ => return Err(self.schema("expected a number")),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.schema("expected a finite number"))
        }
    }

    fn numbers(&self) -> Result<Vec<f64>, ConfigError> {
        self.items()?.iter().map(At::number).collect()
    }

    fn strings(&self) -> Result<Vec<String>, ConfigError> {
        self.items()?.iter().map(|a| a.str().map(str::to_string)).collect()
    }
}

fn from_value(value: &Value) -> Result<ScenarioConfig, ConfigError> {
    let root = At {
        value,
        pointer: String::new(),
    };
    root.object(&[
        "name",
        "description",
        "dims",
        "connection",
        "path",
        "hamiltonian",
        "cover",
        "grid",
        "integrator",
        "initial",
        "tolerances",
        "outputs",
    ])?;

    let name = match root.opt("name") {
        Some(a) => a.str()?.to_string(),
        None => "scenario".to_string(),
    };
    let description = match root.opt("description") {
        Some(a) => a.str()?.to_string(),
        None => String::new(),
    };

    let d = root.get("dims")?;
    d.object(&["m", "n"])?;
    let dims = DimsSpec {
        m: d.get("m")?.usize()?,
        n: d.get("n")?.usize()?,
    };
    if dims.m == 0 {
        return Err(invalid("/dims/m", "must be at least 1"));
    }
    if dims.n == 0 {
        return Err(invalid("/dims/n", "must be at least 1"));
    }

    let c = root.get("connection")?;
    c.object(&["lambda", "drift"])?;
    let lambda = c.get("lambda")?.items()?.iter().map(At::strings).collect::<Result<Vec<_>, _>>()?;
    let drift = match c.opt("drift") {
        Some(a) => a.strings()?,
        None => vec!["0".to_string(); dims.n],
    };

    let p = root.get("path")?;
    p.object(&["kind", "components", "times", "values", "span", "closed", "warps"])?;
    let kind_at = p.get("kind")?;
    let kind = match kind_at.str()? {
        "closed_form" => PathKind::ClosedForm,
        "samples" => PathKind::Samples,
        other => return Err(kind_at.schema(format!("unknown path kind `{other}` (expected closed_form or samples)"))),
    };
    let (components, times, values) = match kind {
        PathKind::ClosedForm => (p.get("components")?.strings()?, Vec::new(), Vec::new()),
        PathKind::Samples => (
            Vec::new(),
            p.get("times")?.numbers()?,
            p.get("values")?.items()?.iter().map(At::numbers).collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let span_at = p.get("span")?;
    let span = span_at.numbers()?;
    if span.len() != 2 {
        return Err(span_at.schema("expected [t0, t1]"));
    }
    let path = PathSpec {
        kind,
        components,
        times,
        values,
        span: [span[0], span[1]],
        closed: p.get("closed")?.bool()?,
        warps: match p.opt("warps") {
            Some(a) => a.strings()?,
            None => Vec::new(),
        },
    };

    let mut hamiltonian = Vec::new();
    for item in root.get("hamiltonian")?.items()? {
        item.object(&["index", "coeff"])?;
        let index = item.get("index")?.items()?.iter().map(At::usize).collect::<Result<Vec<_>, _>>()?;
        hamiltonian.push(MonomialSpec {
            index,
            coeff: item.get("coeff")?.str()?.to_string(),
        });
    }

    let cover = match root.opt("cover") {
        Some(a) => {
            a.object(&["charts"])?;
            CoverSpec {
                charts: a.get("charts")?.usize()?,
            }
        }
        None => CoverSpec::default(),
    };

    let g = root.get("grid")?;
    g.object(&["N", "L"])?;
    let grid = GridSpec {
        points: g.get("N")?.usize()?,
        half_width: g.get("L")?.number()?,
    };

    let i = root.get("integrator")?;
    i.object(&["steps", "ordering", "mode", "sample_every"])?;
    let ordering = match i.opt("ordering") {
        Some(a) => a.str()?.parse::<Ordering>().map_err(|m| a.schema(m))?,
        None => Ordering::default(),
    };
    let mode = match i.opt("mode") {
        Some(a) => match a.str()? {
            "unitary" => EvolutionMode::Unitary,
            "state" => EvolutionMode::State,
            other => return Err(a.schema(format!("unknown mode `{other}` (expected unitary or state)"))),
        },
        None => EvolutionMode::default(),
    };
    let integrator = IntegratorSpec {
        steps: i.get("steps")?.usize()?,
        ordering,
        mode,
        sample_every: i.opt("sample_every").map(|a| a.usize()).transpose()?,
    };

    let s = root.get("initial")?;
    s.object(&["center", "width", "kick"])?;
    let initial = InitialSpec {
        center: s.get("center")?.numbers()?,
        width: match s.opt("width") {
            Some(a) => a.number()?,
            None => 1.0,
        },
        kick: match s.opt("kick") {
            Some(a) => a.numbers()?,
            None => vec![0.0; dims.n],
        },
    };

    let mut tolerances = Tolerances::default();
    if let Some(t) = root.opt("tolerances") {
        t.object(Tolerances::KEYS)?;
        for key in Tolerances::KEYS {
            if let Some(a) = t.opt(key) {
                let v = a.number()?;
                if v <= 0.0 {
                    return Err(a.schema("tolerances must be positive"));
                }
                tolerances.set(key, v);
            }
        }
    }

    let mut outputs = Vec::new();
    if let Some(o) = root.opt("outputs") {
        for item in o.items()? {
            let s = item.str()?;
            let kind = OutputKind::ALL
                .iter()
                .find(|(name, _)| *name == s)
                .map(|(_, k)| *k)
                .ok_or_else(|| {
                    let names: Vec<&str> = OutputKind::ALL.iter().map(|(n, _)| *n).collect();
                    item.schema(format!("unknown output `{s}` (expected one of: {})", names.join(", ")))
                })?;
            if !outputs.contains(&kind) {
                outputs.push(kind);
            }
        }
    }

    Ok(ScenarioConfig {
        name,
        description,
        dims,
        connection: ConnectionSpec { lambda, drift },
        path,
        hamiltonian,
        cover,
        grid,
        integrator,
        initial,
        tolerances,
        outputs,
    })
}
