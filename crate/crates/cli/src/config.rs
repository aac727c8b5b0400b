//! Run configuration: a TOML document with one block per subcommand.
//!
//! ```toml
//! name = "fig2"
//!
//! [params]
//! omega = 1.0
//! delta = 50.0
//! g1 = 0.3
//! g2 = 0.3
//! g3 = 0.3
//! j1 = 0.01
//! j2 = 0.01
//! j3 = 0.01
//! theta = 0.5235987755982988   # or "3el"
//! gamma = "3el"                # or a number, or "2el"
//!
//! [slice]
//! axis = { name = "gamma", min = 0.0, max = 0.03, count = 301 }
//! ```

use std::path::Path;

use jct_core::ep::{critical_3el, gamma_2c, surface_node, CLASSIFY_TOL};
use jct_core::ModelParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// A parameter given either as a number or as a point on a critical line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Keyword(String),
}

impl Default for ParamValue {
    fn default() -> Self {
        ParamValue::Number(0.0)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Number(v)
    }
}

impl ParamValue {
    fn check(&self, field: &str, allowed: &[&str]) -> CliResult<()> {
        match self {
            ParamValue::Number(v) if v.is_finite() => Ok(()),
            ParamValue::Number(v) => Err(CliError::Config(format!("{field} = {v} is not finite"))),
            ParamValue::Keyword(k) if allowed.contains(&k.as_str()) => Ok(()),
            ParamValue::Keyword(k) => Err(CliError::Config(format!(
                "{field} = \"{k}\": expected a number or one of {allowed:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    #[serde(default = "one")]
    pub omega: f64,
    pub delta: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    #[serde(default)]
    pub gamma: ParamValue,
    #[serde(default)]
    pub theta: ParamValue,
}

fn one() -> f64 {
    1.0
}

impl ParamsBlock {
    /// Numeric fields only; keywords are resolved later by [`resolve`].
    pub fn base(&self) -> ModelParams {
        let num = |v: &ParamValue| match v {
            ParamValue::Number(x) => *x,
            ParamValue::Keyword(_) => 0.0,
        };
        ModelParams {
            omega: self.omega,
            delta: self.delta,
            g1: self.g1,
            g2: self.g2,
            g3: self.g3,
            gamma: num(&self.gamma),
            j1: self.j1,
            j2: self.j2,
            j3: self.j3,
            theta: num(&self.theta),
        }
    }

    fn validate(&self) -> CliResult<()> {
        self.theta.check("theta", &["3el"])?;
        self.gamma.check("gamma", &["3el", "2el"])?;
        self.base()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Replaces critical-line keywords by their values at `p`.
pub fn resolve(
    mut p: ModelParams,
    theta: &ParamValue,
    gamma: &ParamValue,
) -> jct_core::Result<ModelParams> {
    if let ParamValue::Keyword(_) = theta {
        p.theta = critical_3el(&p)?.0;
    }
    match gamma {
        ParamValue::Keyword(k) if k == "3el" => p.gamma = critical_3el(&p)?.1,
        ParamValue::Keyword(_) => p.gamma = gamma_2c(&p)?,
        ParamValue::Number(_) => {}
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// A swept quantity. Besides the model fields, `g_ratio` sets
/// `g1 = g3 = r g2` and `j_ratio` sets `j1 = j2 = r j3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

pub const AXIS_NAMES: [&str; 12] = [
    "omega", "delta", "g1", "g2", "g3", "gamma", "j1", "j2", "j3", "theta", "g_ratio", "j_ratio",
];

impl Axis {
    pub fn linear(name: &str, min: f64, max: f64, count: usize) -> Self {
        Self {
            name: name.into(),
            min,
            max,
            count,
            scale: Scale::Linear,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if !AXIS_NAMES.contains(&self.name.as_str()) {
            return Err(CliError::Config(format!(
                "axis '{}' is not a parameter; expected one of {AXIS_NAMES:?}",
                self.name
            )));
        }
        if self.count < 2 {
            return Err(CliError::Config(format!(
                "axis '{}' needs count >= 2",
                self.name
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::Config(format!(
                "axis '{}' bounds must be finite",
                self.name
            )));
        }
        if self.scale == Scale::Log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(CliError::Config(format!(
                "log axis '{}' needs positive bounds",
                self.name
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let s = k as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * s,
                    Scale::Log => {
                        10f64.powf(self.min.log10() + (self.max.log10() - self.min.log10()) * s)
                    }
                }
            })
            .collect()
    }

    /// Sets this axis' quantity on `p`.
    pub fn apply(&self, p: ModelParams, value: f64) -> ModelParams {
        match self.name.as_str() {
            "g_ratio" => surface_node(&p, value, p.j1 / p.j3),
            "j_ratio" => ModelParams {
                j1: value * p.j3,
                j2: value * p.j3,
                ..p
            },
            field => {
                let mut p = p;
                let slot = match field {
                    "omega" => &mut p.omega,
                    "delta" => &mut p.delta,
                    "g1" => &mut p.g1,
                    "g2" => &mut p.g2,
                    "g3" => &mut p.g3,
                    "gamma" => &mut p.gamma,
                    "j1" => &mut p.j1,
                    "j2" => &mut p.j2,
                    "j3" => &mut p.j3,
                    "theta" => &mut p.theta,
                    _ => unreachable!("axis names are validated"),
                };
                *slot = value;
                p
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub axes: [Axis; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceBlock {
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceBlock {
    pub g_ratio: Axis,
    pub j_ratio: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbBlock {
    pub eps_min: f64,
    pub eps_max: f64,
    pub count: usize,
    pub scenario: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityBlock {
    pub eps: f64,
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchBlock {
    pub gamma_initial: f64,
    pub gamma_final: f64,
    /// Defaults to `20 / j1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    jct_core::dynamics::DEFAULT_TIME_SAMPLES
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Scaled residual below which a point counts as exceptional.
    pub classify: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            classify: CLASSIFY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub params: ParamsBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<SliceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelityBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchBlock>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let value: toml::Value =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: toml::Value) -> CliResult<Self> {
        let cfg: RunConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<toml::Value> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut value: toml::Value =
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(t) = value.as_table_mut() {
            if !t.contains_key("name") {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
                t.insert("name".into(), toml::Value::String(stem.into()));
            }
        }
        Ok(value)
    }

    pub fn to_value(&self) -> toml::Value {
        toml::Value::try_from(self).expect("config is always representable")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_".contains(c))
        {
            return Err(CliError::Config(format!(
                "name '{}' must be non-empty and use [A-Za-z0-9_-]",
                self.name
            )));
        }
        self.params.validate()?;
        if self.tolerances.classify.is_nan() || self.tolerances.classify <= 0.0 {
            return Err(CliError::Config(
                "tolerances.classify must be positive".into(),
            ));
        }
        if let Some(b) = &self.spectrum {
            b.axes.iter().try_for_each(Axis::validate)?;
        }
        if let Some(b) = &self.slice {
            b.axis.validate()?;
        }
        if let Some(b) = &self.surface {
            b.g_ratio.validate()?;
            b.j_ratio.validate()?;
        }
        if let Some(b) = &self.perturb {
            if b.count < jct_core::perturb::MIN_FIT_SAMPLES {
                return Err(CliError::Config(format!(
                    "perturb.count must be at least {}",
                    jct_core::perturb::MIN_FIT_SAMPLES
                )));
            }
            if b.scenario.is_empty() {
                return Err(CliError::Config(
                    "perturb needs at least one [[perturb.scenario]]".into(),
                ));
            }
            for s in &b.scenario {
                let (lo, hi) = (
                    s.eps_min.unwrap_or(b.eps_min),
                    s.eps_max.unwrap_or(b.eps_max),
                );
                if !(lo > 0.0 && hi > lo) {
                    return Err(CliError::Config(format!(
                        "scenario '{}': need 0 < eps_min < eps_max",
                        s.name
                    )));
                }
                if !(1..=3).contains(&s.site) {
                    return Err(CliError::Config(format!(
                        "scenario '{}': site must be 1, 2 or 3",
                        s.name
                    )));
                }
                if let Some(t) = &s.theta {
                    t.check("theta", &["3el"])?;
                }
                if let Some(g) = &s.gamma {
                    g.check("gamma", &["3el", "2el"])?;
                }
            }
        }
        if let Some(b) = &self.fidelity {
            b.axis.validate()?;
            if b.axis.name != "gamma" {
                return Err(CliError::Config("fidelity axis must be gamma".into()));
            }
            if b.eps.is_nan() || b.eps <= 0.0 {
                return Err(CliError::Config("fidelity.eps must be positive".into()));
            }
        }
        if let Some(b) = &self.quench {
            if b.samples < 2 {
                return Err(CliError::Config("quench.samples must be at least 2".into()));
            }
            if let Some(t) = b.t_max {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(CliError::Config("quench.t_max must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form. Thread count and output location
    /// are not part of the config, so they never change the hash.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// Applies `key.path=value` overrides. Values are parsed as TOML literals and
/// fall back to bare strings.
pub fn apply_overrides(value: &mut toml::Value, overrides: &[String]) -> CliResult<()> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{item}' is not key=value")))?;
        let parsed = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
        let mut slot = &mut *value;
        let keys: Vec<&str> = path.trim().split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            let table = slot.as_table_mut().ok_or_else(|| {
                CliError::Config(format!("override '{path}': '{key}' is not inside a table"))
            })?;
            if i + 1 == keys.len() {
                table.insert((*key).to_string(), parsed.clone());
                break;
            }
            slot = table
                .entry((*key).to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "t"
        [params]
        delta = 50.0
        g1 = 0.3
        g2 = 0.3
        g3 = 0.3
        j1 = 0.01
        j2 = 0.01
        j3 = 0.01
        theta = "3el"
        gamma = "3el"
    "#;

    #[test]
    fn keywords_resolve_to_critical_point() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let p = resolve(cfg.params.base(), &cfg.params.theta, &cfg.params.gamma).unwrap();
        assert!((p.theta - std::f64::consts::PI / 6.0).abs() < 1e-12);
        assert!((p.gamma - 3f64.sqrt() * 0.01).abs() < 1e-15);
        assert_eq!(p.omega, 1.0);
    }

    #[test]
    fn unknown_keys_and_keywords_rejected() {
        assert!(RunConfig::from_toml(&MINIMAL.replace("delta", "detla")).is_err());
        assert!(
            RunConfig::from_toml(&MINIMAL.replace("theta = \"3el\"", "theta = \"2el\"")).is_err()
        );
        let bad_axis = format!(
            "{MINIMAL}\n[slice]\naxis = {{ name = \"kappa\", min = 0.0, max = 1.0, count = 3 }}"
        );
        assert!(RunConfig::from_toml(&bad_axis).is_err());
        let short = format!(
            "{MINIMAL}\n[slice]\naxis = {{ name = \"gamma\", min = 0.0, max = 1.0, count = 1 }}"
        );
        assert!(RunConfig::from_toml(&short).is_err());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let mut v: toml::Value = toml::from_str(MINIMAL).unwrap();
        apply_overrides(
            &mut v,
            &[
                "params.g1=0.2".into(),
                "params.theta=0.5".into(),
                "name=other".into(),
            ],
        )
        .unwrap();
        let cfg = RunConfig::from_value(v).unwrap();
        assert_eq!(cfg.params.g1, 0.2);
        assert_eq!(cfg.params.theta, ParamValue::Number(0.5));
        assert_eq!(cfg.name, "other");
        let mut v: toml::Value = toml::from_str(MINIMAL).unwrap();
        assert!(apply_overrides(&mut v, &["params.g1".into()]).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::from_toml(MINIMAL).unwrap();
        let b = RunConfig::from_value(a.to_value()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.params.g1 = 0.31;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn axis_values() {
        let a = Axis::linear("gamma", 0.0, 1.0, 5);
        assert_eq!(a.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let l = Axis {
            scale: Scale::Log,
            ..Axis::linear("j1", 1e-3, 1e-1, 3)
        };
        let v = l.values();
        assert!((v[1] - 1e-2).abs() < 1e-17);
        let p = ModelParams::uniform(1.0, 20.0, 0.3, 0.0, 0.01, 0.0);
        let q = Axis::linear("j_ratio", 0.1, 2.0, 2).apply(p, 2.0);
        assert_eq!((q.j1, q.j2, q.j3), (0.02, 0.02, 0.01));
        let q = Axis::linear("g_ratio", 0.1, 2.0, 2).apply(p, 0.5);
        assert!((q.g1 - 0.15).abs() < 1e-16 && q.g1 == q.g3 && q.g2 == 0.3);
    }
}
