//! Run configuration: flat dotted keys resolved from defaults, a JSON file
//! and `--set` overrides, in that order of precedence.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use mbq::experiments::{DetuningPattern, Grid, NoiseVariant, ScanTolerances};
use mbq::model::SystemParams;
use mbq::numerics::C64;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown config key `{key}` for scenario {scenario}; valid keys: {}", valid.join(", "))]
    UnknownKey {
        key: String,
        scenario: Scenario,
        valid: Vec<String>,
    },
    #[error("config key `{key}`: expected {expected}, got {got}")]
    Type {
        key: String,
        expected: &'static str,
        got: String,
    },
    #[error("config file {path}: {message}")]
    File { path: String, message: String },
    #[error("malformed override `{0}`; expected key=value")]
    Override(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Where a resolved value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Default,
    File,
    CliOverride,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    /// Real number or `[re, im]`.
    Amplitude,
    Count,
    FloatList,
    PairList,
    Pattern,
}

impl Kind {
    fn expected(self) -> &'static str {
        match self {
            Kind::Float => "a finite number",
            Kind::Amplitude => "a number or [re, im]",
            Kind::Count => "a positive integer",
            Kind::FloatList => "a non-empty array of numbers",
            Kind::PairList => "a non-empty array of [lambda0, gamma] pairs",
            Kind::Pattern => "\"joint\" or \"independent\"",
        }
    }

    fn accepts(self, v: &Value) -> bool {
        let finite = |v: &Value| v.as_f64().is_some_and(f64::is_finite);
        match self {
            Kind::Float => finite(v),
            Kind::Amplitude => finite(v) || v.as_array().is_some_and(|a| a.len() == 2 && a.iter().all(finite)),
            Kind::Count => v.as_u64().is_some_and(|n| n >= 1),
            Kind::FloatList => v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(finite)),
            Kind::PairList => v.as_array().is_some_and(|a| {
                !a.is_empty()
                    && a.iter()
                        .all(|p| p.as_array().is_some_and(|p| p.len() == 2 && p.iter().all(finite)))
            }),
            Kind::Pattern => matches!(v.as_str(), Some("joint" | "independent")),
        }
    }
}

const PARAM_KEYS: [(&str, Kind); 13] = [
    ("params.e_c", Kind::Float),
    ("params.lambda0", Kind::Amplitude),
    ("params.lambda1", Kind::Amplitude),
    ("params.lambda2", Kind::Amplitude),
    ("params.phi", Kind::Float),
    ("params.eps1", Kind::Float),
    ("params.eps2", Kind::Float),
    ("params.n_g", Kind::Float),
    ("params.gamma1", Kind::Float),
    ("params.gamma2", Kind::Float),
    ("params.mu1", Kind::Float),
    ("params.mu2", Kind::Float),
    ("params.temperature", Kind::Float),
];

const TOLERANCE_KEYS: [&str; 6] = [
    "tolerances.residual",
    "tolerances.min_gap",
    "tolerances.trace",
    "tolerances.hermiticity",
    "tolerances.current_balance",
    "tolerances.positivity",
];

fn grid_defaults(name: &str, start: f64, stop: f64, points: u64) -> Vec<(String, Kind, Value)> {
    vec![
        (format!("grid.{name}.start"), Kind::Float, json!(start)),
        (format!("grid.{name}.stop"), Kind::Float, json!(stop)),
        (format!("grid.{name}.points"), Kind::Count, json!(points)),
    ]
}

fn variants(pairs: &[(f64, f64)]) -> Value {
    Value::Array(pairs.iter().map(|(l, g)| json!([l, g])).collect())
}

/// Default (λ0, Γ) pairs for the correlation scenario.
pub const CORRELATION_VARIANTS: [(f64, f64); 2] = [(0.01, 0.01), (0.1, 0.01)];
/// Default (λ0, Γ) pairs for the noise spectrum: λ0 varied at Γ = 0.01 and
/// Γ varied at λ0 = 0.1.
pub const PSD_VARIANTS: [(f64, f64); 5] = [(0.01, 0.01), (0.05, 0.01), (0.1, 0.01), (0.1, 0.005), (0.1, 0.02)];

/// Scenario-specific keys with their defaults, grids first.
fn scenario_keys(s: Scenario) -> Vec<(String, Kind, Value)> {
    let two_pi = 2.0 * PI;
    let mut k = Vec::new();
    match s {
        Scenario::Spectrum => k.extend(grid_defaults("phi", 0.0, two_pi, 201)),
        Scenario::Iv => {
            k.extend(grid_defaults("mu2", -0.03, 0.02, 201));
            k.push(("iv.window".into(), Kind::Float, json!(0.01)));
        }
        Scenario::Flux => {
            k.extend(grid_defaults("phi", 0.0, two_pi, 201));
            k.push(("flux.lambda0".into(), Kind::FloatList, json!([0.01, 0.02, 0.05, 0.1])));
        }
        Scenario::Temperature => {
            k.extend(grid_defaults("phi", 0.0, two_pi, 201));
            k.push((
                "temperature.values".into(),
                Kind::FloatList,
                json!([0.0, 0.01, 0.05, 0.1, 0.5]),
            ));
        }
        Scenario::Transient => k.extend(grid_defaults("t", 0.0, 40000.0, 4001)),
        Scenario::Dephasing => {
            k.extend(grid_defaults("t", 0.0, 50000.0, 2001));
            k.push(("dephasing.lambda0".into(), Kind::FloatList, json!([0.001, 0.1, 0.0])));
        }
        Scenario::Correlation => {
            k.extend(grid_defaults("t", 0.0, 1000.0, 4001));
            k.push(("noise.variants".into(), Kind::PairList, variants(&CORRELATION_VARIANTS)));
        }
        Scenario::Psd => {
            k.extend(grid_defaults("omega", -0.1, 0.1, 201));
            k.push(("noise.variants".into(), Kind::PairList, variants(&PSD_VARIANTS)));
        }
        Scenario::NgMap => {
            k.extend(grid_defaults("ng", 0.0, 2.0, 81));
            k.extend(grid_defaults("phi", 0.0, two_pi, 81));
        }
        Scenario::Detuning => {
            k.extend(grid_defaults("eps", -0.05, 0.05, 81));
            k.push(("detuning.pattern".into(), Kind::Pattern, json!("independent")));
        }
        Scenario::LiouvillianSpectrum => {}
    }
    k
}

fn amplitude_json(z: C64) -> Value {
    if z.im == 0.0 {
        json!(z.re)
    } else {
        json!([z.re, z.im])
    }
}

/// Every valid key for `scenario` with kind and default value.
fn schema(scenario: Scenario) -> Vec<(String, Kind, Value)> {
    let mut p = SystemParams::default();
    if scenario == Scenario::Temperature {
        // Temperature sweeps default to λ0 = 0.1, where the flux modulation is weak.
        p = p.with_lambda0(0.1);
    }
    let param_defaults = [
        json!(p.e_c),
        amplitude_json(p.lambda0),
        amplitude_json(p.lambda1),
        amplitude_json(p.lambda2),
        json!(p.phi),
        json!(p.eps1),
        json!(p.eps2),
        json!(p.n_g),
        json!(p.gamma1),
        json!(p.gamma2),
        json!(p.mu1),
        json!(p.mu2),
        json!(p.temperature),
    ];
    let t = ScanTolerances::default();
    let tol_defaults = [
        t.residual,
        t.min_gap,
        t.trace,
        t.hermiticity,
        t.current_balance,
        t.positivity,
    ];
    let mut out: Vec<(String, Kind, Value)> = PARAM_KEYS
        .iter()
        .zip(param_defaults)
        .map(|((k, kind), v)| (k.to_string(), *kind, v))
        .collect();
    out.extend(scenario_keys(scenario));
    out.extend(
        TOLERANCE_KEYS
            .iter()
            .zip(tol_defaults)
            .map(|(k, v)| (k.to_string(), Kind::Float, json!(v))),
    );
    out
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    values: BTreeMap<String, Value>,
    sources: BTreeMap<String, Source>,
}

impl RunConfig {
    /// All defaults for `scenario`.
    pub fn defaults(scenario: Scenario) -> Self {
        let mut values = BTreeMap::new();
        let mut sources = BTreeMap::new();
        for (k, _, v) in schema(scenario) {
            sources.insert(k.clone(), Source::Default);
            values.insert(k, v);
        }
        Self {
            scenario,
            values,
            sources,
        }
    }

    pub fn valid_keys(&self) -> Vec<String> {
        self.values.keys().cloned().collect()
    }

    fn kind(&self, key: &str) -> Option<Kind> {
        schema(self.scenario)
            .into_iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, kind, _)| kind)
    }

    /// Sets `key` after checking that it exists and has the right type.
    pub fn set(&mut self, key: &str, value: Value, source: Source) -> Result<(), ConfigError> {
        let kind = self.kind(key).ok_or_else(|| ConfigError::UnknownKey {
            key: key.to_string(),
            scenario: self.scenario,
            valid: self.valid_keys(),
        })?;
        if !kind.accepts(&value) {
            return Err(ConfigError::Type {
                key: key.to_string(),
                expected: kind.expected(),
                got: value.to_string(),
            });
        }
        self.values.insert(key.to_string(), value);
        self.sources.insert(key.to_string(), source);
        Ok(())
    }

    /// Applies a JSON object of dotted keys. A run manifest is accepted
    /// too; its `config` section is used.
    pub fn apply_json(&mut self, doc: &Value, source: Source) -> Result<(), ConfigError> {
        let obj = doc
            .as_object()
            .ok_or_else(|| ConfigError::Invalid("config must be a JSON object".into()))?;
        let obj = match (obj.get("manifest_version"), obj.get("config")) {
            (Some(_), Some(Value::Object(c))) => {
                if let Some(s) = obj.get("scenario").and_then(Value::as_str) {
                    if s != self.scenario.name() {
                        return Err(ConfigError::Invalid(format!(
                            "manifest is for scenario {s}, not {}",
                            self.scenario
                        )));
                    }
                }
                c
            }
            _ => obj,
        };
        for (k, v) in obj {
            self.set(k, v.clone(), source)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let file_err = |message: String| ConfigError::File {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        if text.trim().is_empty() {
            return Ok(());
        }
        let doc: Value = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
        self.apply_json(&doc, Source::File)
    }

    /// Applies one `key=value` override. The value is read as JSON when it
    /// parses, otherwise as a bare string.
    pub fn apply_override(&mut self, text: &str) -> Result<(), ConfigError> {
        let (key, raw) = text
            .split_once('=')
            .ok_or_else(|| ConfigError::Override(text.to_string()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Override(text.to_string()));
        }
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        self.set(key, value, Source::CliOverride)
    }

    pub fn value(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("config key {key} is not defined for {}", self.scenario))
    }

    fn float(&self, key: &str) -> f64 {
        self.value(key).as_f64().expect("validated number")
    }

    fn amplitude(&self, key: &str) -> C64 {
        match self.value(key) {
            Value::Array(a) => C64::new(a[0].as_f64().unwrap_or(0.0), a[1].as_f64().unwrap_or(0.0)),
            v => C64::from(v.as_f64().expect("validated number")),
        }
    }

    pub fn list(&self, key: &str) -> Vec<f64> {
        self.value(key)
            .as_array()
            .expect("validated list")
            .iter()
            .map(|v| v.as_f64().expect("validated number"))
            .collect()
    }

    pub fn params(&self) -> Result<SystemParams, ConfigError> {
        let p = SystemParams {
            e_c: self.float("params.e_c"),
            lambda0: self.amplitude("params.lambda0"),
            lambda1: self.amplitude("params.lambda1"),
            lambda2: self.amplitude("params.lambda2"),
            phi: self.float("params.phi"),
            eps1: self.float("params.eps1"),
            eps2: self.float("params.eps2"),
            n_g: self.float("params.n_g"),
            gamma1: self.float("params.gamma1"),
            gamma2: self.float("params.gamma2"),
            mu1: self.float("params.mu1"),
            mu2: self.float("params.mu2"),
            temperature: self.float("params.temperature"),
        };
        p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(p)
    }

    pub fn grid(&self, name: &str) -> Result<Grid, ConfigError> {
        let points = self
            .value(&format!("grid.{name}.points"))
            .as_u64()
            .expect("validated count") as usize;
        Grid::new(
            self.float(&format!("grid.{name}.start")),
            self.float(&format!("grid.{name}.stop")),
            points,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Names of the grids this scenario uses.
    pub fn grid_names(&self) -> Vec<String> {
        self.values
            .keys()
            .filter_map(|k| k.strip_prefix("grid.")?.strip_suffix(".points"))
            .map(str::to_string)
            .collect()
    }

    pub fn tolerances(&self) -> ScanTolerances {
        ScanTolerances {
            residual: self.float("tolerances.residual"),
            min_gap: self.float("tolerances.min_gap"),
            trace: self.float("tolerances.trace"),
            hermiticity: self.float("tolerances.hermiticity"),
            current_balance: self.float("tolerances.current_balance"),
            positivity: self.float("tolerances.positivity"),
        }
    }

    pub fn noise_variants(&self) -> Vec<NoiseVariant> {
        self.value("noise.variants")
            .as_array()
            .expect("validated pairs")
            .iter()
            .map(|p| NoiseVariant::new(p[0].as_f64().unwrap_or(0.0), p[1].as_f64().unwrap_or(0.0)))
            .collect()
    }

    pub fn pattern(&self) -> DetuningPattern {
        match self.value("detuning.pattern").as_str() {
            Some("joint") => DetuningPattern::Joint,
            _ => DetuningPattern::Independent,
        }
    }

    pub fn float_value(&self, key: &str) -> f64 {
        self.float(key)
    }

    /// Resolved values as a flat JSON object.
    pub fn to_json(&self) -> Value {
        Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect::<Map<_, _>>(),
        )
    }

    pub fn provenance(&self) -> &BTreeMap<String, Source> {
        &self.sources
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default_set() {
        let c = RunConfig::defaults(Scenario::Flux);
        let p = c.params().unwrap();
        assert_eq!(p, SystemParams::default());
        assert!(c.provenance().values().all(|s| *s == Source::Default));
        assert_eq!(c.grid("phi").unwrap().points, 201);
    }

    #[test]
    fn override_records_provenance() {
        let mut c = RunConfig::defaults(Scenario::Flux);
        c.apply_override("params.lambda0=0.02").unwrap();
        assert_eq!(c.params().unwrap().lambda0, C64::from(0.02));
        assert_eq!(c.provenance()["params.lambda0"], Source::CliOverride);
        assert_eq!(c.provenance()["params.lambda1"], Source::Default);
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let mut c = RunConfig::defaults(Scenario::Spectrum);
        let e = c.apply_override("grid.mu2.points=3").unwrap_err().to_string();
        assert!(e.contains("grid.mu2.points"));
        assert!(e.contains("grid.phi.points"));
        assert!(e.contains("params.lambda0"));
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let mut c = RunConfig::defaults(Scenario::Flux);
        let e = c
            .apply_json(&json!({"grid.phi.points": "many"}), Source::File)
            .unwrap_err();
        assert!(matches!(e, ConfigError::Type { ref key, .. } if key == "grid.phi.points"));
        assert!(c.apply_override("grid.phi.points=0").is_err());
        assert!(c.apply_override("flux.lambda0=[]").is_err());
        assert!(c.apply_override("params.lambda1=[0.1, 0.05]").is_ok());
    }

    #[test]
    fn bare_strings_and_json_values() {
        let mut c = RunConfig::defaults(Scenario::Detuning);
        c.apply_override("detuning.pattern=joint").unwrap();
        assert_eq!(c.pattern(), DetuningPattern::Joint);
        assert!(c.apply_override("detuning.pattern=diagonal").is_err());
        assert!(c.apply_override("novalue").is_err());
    }

    #[test]
    fn temperature_defaults_to_large_lambda0() {
        let c = RunConfig::defaults(Scenario::Temperature);
        assert_eq!(c.params().unwrap().lambda0, C64::from(0.1));
    }

    #[test]
    fn manifest_config_section_is_accepted() {
        let mut c = RunConfig::defaults(Scenario::Flux);
        let doc = json!({"manifest_version": 1, "scenario": "flux", "config": {"params.lambda0": 0.05}});
        c.apply_json(&doc, Source::File).unwrap();
        assert_eq!(c.params().unwrap().lambda0, C64::from(0.05));
        let wrong = json!({"manifest_version": 1, "scenario": "iv", "config": {}});
        assert!(c.apply_json(&wrong, Source::File).is_err());
    }
}
