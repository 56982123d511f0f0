//! Experiment configuration files.

use heralded::circuits::{builtin, builtin_names, CircuitSpec};
use heralded::experiments::named_state;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    HbsgSweep,
    Teleport,
    ThresholdScan,
    GhzId,
    Fusion,
    ClosestState,
    JsaSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::HbsgSweep,
        Experiment::Teleport,
        Experiment::ThresholdScan,
        Experiment::GhzId,
        Experiment::Fusion,
        Experiment::ClosestState,
        Experiment::JsaSweep,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::HbsgSweep => "hbsg_sweep",
            Experiment::Teleport => "teleport",
            Experiment::ThresholdScan => "threshold_scan",
            Experiment::GhzId => "ghz_id",
            Experiment::Fusion => "fusion",
            Experiment::ClosestState => "closest_state",
            Experiment::JsaSweep => "jsa_sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.id() == s)
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::HbsgSweep => "tomography and Schur reduction of one HBSG over a visibility grid",
            Experiment::Teleport => "teleportation fidelity per input state over a visibility grid",
            Experiment::ThresholdScan => "threshold-detector fidelity over source/herald efficiency grids",
            Experiment::GhzId => "3-GHZ population under threshold detection against the ID model",
            Experiment::Fusion => "4P8M and fused 8P16M states with two-Schmidt RS photons",
            Experiment::ClosestState => "closest HBSG output to an analytic fusion state",
            Experiment::JsaSweep => "filter-width sweep from JSA to HBSG fidelity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    Ideal,
    Obb,
    Rs,
}

impl From<FamilyTag> for heralded::experiments::Family {
    fn from(f: FamilyTag) -> Self {
        use heralded::experiments::Family;
        match f {
            FamilyTag::Ideal => Family::Ideal,
            FamilyTag::Obb => Family::Obb,
            FamilyTag::Rs => Family::Rs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SearchTag {
    NelderMead,
    BackendGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum DetectorTag {
    Pnrd,
    Threshold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub family: FamilyTag,
    /// Strictly increasing pairwise visibilities.
    pub visibilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DetectorBlock {
    #[serde(default = "default_detector")]
    pub mode: DetectorTag,
    pub eta_s: Vec<f64>,
    pub eta_h: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_detector() -> DetectorTag {
    DetectorTag::Threshold
}

fn default_kappa() -> f64 {
    heralded::experiments::THRESHOLD_KAPPA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TeleportBlock {
    /// Any of "0", "1", "+", "-", "+i", "-i".
    pub inputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ClosestBlock {
    /// Source model of the analytic target state.
    pub target_model: FamilyTag,
    pub target_visibility: f64,
    #[serde(default = "default_stage")]
    pub stage: u8,
    /// Family searched for the closest HBSG output.
    pub family: FamilyTag,
    pub search: SearchTag,
}

fn default_stage() -> u8 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct JsaBlock {
    /// Filter widths in GHz, strictly increasing.
    pub filter_widths: Vec<f64>,
    pub epsilon: f64,
    pub circuits: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    /// Builtin circuit name or a path to a circuit TOML file relative to the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teleport: Option<TeleportBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closest: Option<ClosestBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jsa: Option<JsaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn schema_json() -> String {
    let schema = schemars::schema_for!(RunConfig);
    serde_json::to_string_pretty(&schema).expect("schema serialises") + "\n"
}

fn check_range(field: &str, vals: &[f64], lo: f64, hi: f64) -> Result<(), ConfigError> {
    if vals.is_empty() {
        return err(format!("{field}: must not be empty"));
    }
    for (k, &v) in vals.iter().enumerate() {
        if !v.is_finite() || v < lo || v > hi {
            return err(format!("{field}[{k}] = {v} outside [{lo}, {hi}]"));
        }
    }
    if vals.windows(2).any(|w| w[1] <= w[0]) {
        return err(format!("{field}: values must be strictly increasing"));
    }
    Ok(())
}

fn require<'a, T>(block: &'a Option<T>, name: &str, exp: Experiment) -> Result<&'a T, ConfigError> {
    block.as_ref().ok_or_else(|| ConfigError(format!("{name}: required by {}", exp.id())))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cfg = RunConfig::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Canonical TOML rendering; the config hash is taken over this.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn used_blocks(exp: Experiment) -> &'static [&'static str] {
        match exp {
            Experiment::HbsgSweep => &["circuit", "source"],
            Experiment::Teleport => &["source", "teleport"],
            Experiment::ThresholdScan => &["circuit", "detector"],
            Experiment::GhzId => &["detector"],
            Experiment::Fusion => &["source"],
            Experiment::ClosestState => &["closest"],
            Experiment::JsaSweep => &["jsa"],
        }
    }

    /// Checks every field without running anything.
    pub fn validate(&self, base: &Path) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return err(format!("schema_version: expected {SCHEMA_VERSION}, found {}", self.schema_version));
        }
        let exp = self.experiment;
        let present = [
            ("circuit", self.circuit.is_some()),
            ("source", self.source.is_some()),
            ("detector", self.detector.is_some()),
            ("teleport", self.teleport.is_some()),
            ("closest", self.closest.is_some()),
            ("jsa", self.jsa.is_some()),
        ];
        let used = Self::used_blocks(exp);
        for (name, is) in present {
            if is && !used.contains(&name) {
                return err(format!("{name}: not used by {}", exp.id()));
            }
        }
        if self.threads == Some(0) {
            return err("threads: must be at least 1");
        }
        if let Some(src) = &self.source {
            let fam: heralded::experiments::Family = src.family.into();
            check_range("source.visibilities", &src.visibilities, fam.min_visibility(), 1.0)?;
        }
        match exp {
            Experiment::HbsgSweep => {
                require(&self.source, "source", exp)?;
                let c = self.circuit_spec(base)?;
                if c.n_qubits() != 2 {
                    return err(format!("circuit: {} is not a two-qubit generator", c.name));
                }
            }
            Experiment::Teleport => {
                require(&self.source, "source", exp)?;
                let t = require(&self.teleport, "teleport", exp)?;
                if t.inputs.is_empty() {
                    return err("teleport.inputs: must not be empty");
                }
                for (k, s) in t.inputs.iter().enumerate() {
                    if named_state(s).is_err() {
                        return err(format!("teleport.inputs[{k}] = {s:?} is not a named qubit state"));
                    }
                }
            }
            Experiment::ThresholdScan | Experiment::GhzId => {
                if exp == Experiment::ThresholdScan {
                    self.circuit_spec(base)?;
                }
                let d = require(&self.detector, "detector", exp)?;
                if d.mode != DetectorTag::Threshold {
                    return err(format!("detector.mode: {} requires threshold detection", exp.id()));
                }
                check_range("detector.eta_s", &d.eta_s, 0.0, 1.0)?;
                check_range("detector.eta_h", &d.eta_h, 0.0, 1.0)?;
                if !(d.kappa > 0.0 && d.kappa < 1.0) {
                    return err(format!("detector.kappa = {} outside (0, 1)", d.kappa));
                }
            }
            Experiment::Fusion => {
                let src = require(&self.source, "source", exp)?;
                if src.family != FamilyTag::Rs {
                    return err("source.family: fusion uses rs photons");
                }
            }
            Experiment::ClosestState => {
                let c = require(&self.closest, "closest", exp)?;
                if c.target_model == FamilyTag::Ideal {
                    return err("closest.target_model: must be obb or rs");
                }
                if c.family == FamilyTag::Ideal {
                    return err("closest.family: must be obb or rs");
                }
                let fam: heralded::experiments::Family = c.target_model.into();
                check_range("closest.target_visibility", &[c.target_visibility], fam.min_visibility(), 1.0)?;
                if c.stage > 1 {
                    return err(format!("closest.stage = {} must be 0 or 1", c.stage));
                }
            }
            Experiment::JsaSweep => {
                let j = require(&self.jsa, "jsa", exp)?;
                check_range("jsa.filter_widths", &j.filter_widths, f64::MIN_POSITIVE, f64::MAX)?;
                if !(j.epsilon > 0.0 && j.epsilon < 1.0) {
                    return err(format!("jsa.epsilon = {} outside (0, 1)", j.epsilon));
                }
                if j.circuits.is_empty() {
                    return err("jsa.circuits: must not be empty");
                }
                for (k, name) in j.circuits.iter().enumerate() {
                    let c = builtin(name).map_err(|_| ConfigError(format!("jsa.circuits[{k}] = {name:?} is not a builtin circuit")))?;
                    if c.target.state().is_none() {
                        return err(format!("jsa.circuits[{k}] = {name:?} has no target state"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn circuit_spec(&self, base: &Path) -> Result<CircuitSpec, ConfigError> {
        let Some(name) = &self.circuit else {
            return err(format!("circuit: required by {}", self.experiment.id()));
        };
        if builtin_names().contains(&name.as_str()) {
            return builtin(name).map_err(|e| ConfigError(format!("circuit: {e}")));
        }
        if name.ends_with(".toml") {
            let path: PathBuf = base.join(name);
            let text = std::fs::read_to_string(&path).map_err(|e| ConfigError(format!("circuit: {}: {e}", path.display())))?;
            return heralded::circuits::CircuitFile::parse(&text)
                .and_then(|f| f.to_spec())
                .and_then(|s| s.validate().map(|_| s))
                .map_err(|e| ConfigError(format!("circuit: {e}")));
        }
        err(format!("circuit: {name:?} is neither a builtin nor a .toml file"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDEAL: &str = r#"
schema_version = 1
experiment = "hbsg_sweep"
circuit = "4P8M"

[source]
family = "ideal"
visibilities = [1.0]
"#;

    #[test]
    fn ideal_config_validates() {
        let cfg = RunConfig::parse(IDEAL).unwrap();
        cfg.validate(Path::new(".")).unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = IDEAL.replace("family = \"ideal\"", "family = \"ideal\"\ncolour = 3");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn out_of_range_visibility_names_field() {
        let text = IDEAL.replace("\"ideal\"", "\"obb\"").replace("[1.0]", "[0.5, 1.2]");
        let e = RunConfig::parse(&text).unwrap().validate(Path::new(".")).unwrap_err();
        assert!(e.0.contains("source.visibilities[1]"), "{e}");
    }

    #[test]
    fn unused_block_rejected() {
        let text = format!("{IDEAL}\n[jsa]\nfilter_widths = [100.0]\nepsilon = 0.01\ncircuits = [\"4P8M\"]\n");
        let e = RunConfig::parse(&text).unwrap().validate(Path::new(".")).unwrap_err();
        assert!(e.0.starts_with("jsa:"), "{e}");
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = RunConfig::parse(IDEAL).unwrap();
        let b = RunConfig::parse(&IDEAL.replace("visibilities = [1.0]", "visibilities = [ 1.0 ]  # one point")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
