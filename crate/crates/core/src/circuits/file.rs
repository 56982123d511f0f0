//! Versioned circuit definition files (TOML with `[re, im]` pairs).

use super::{CircuitSpec, HeraldPattern, Target};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use serde::{Deserialize, Serialize};

pub const FILE_VERSION: u32 = 1;

type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub version: u32,
    pub name: String,
    pub modes: usize,
    pub inputs: Vec<usize>,
    pub target: Target,
    pub logical_pairs: Vec<[usize; 2]>,
    pub herald_modes: Vec<usize>,
    pub unitary: Rows,
    pub heralds: Vec<HeraldFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldFile {
    pub pattern: Vec<usize>,
    pub correction: Vec<Rows>,
}

fn to_rows(m: &CMat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn from_rows(r: &Rows, what: &str) -> Result<CMat> {
    let n = r.len();
    let m = r.first().map_or(0, |x| x.len());
    if r.iter().any(|row| row.len() != m) {
        return Err(Error::Definition(format!("{what}: ragged matrix")));
    }
    Ok(CMat::from_fn(n, m, |i, j| c(r[i][j][0], r[i][j][1])))
}

impl CircuitFile {
    pub fn parse(text: &str) -> Result<CircuitFile> {
        let f: CircuitFile = toml::from_str(text).map_err(|e| Error::Definition(e.to_string()))?;
        if f.version != FILE_VERSION {
            return Err(Error::Definition(format!("unsupported circuit file version {}", f.version)));
        }
        Ok(f)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Definition(e.to_string()))
    }

    pub fn to_spec(&self) -> Result<CircuitSpec> {
        let heralds = self
            .heralds
            .iter()
            .map(|h| {
                Ok(HeraldPattern {
                    pattern: h.pattern.clone(),
                    correction: h.correction.iter().map(|r| from_rows(r, "correction")).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = CircuitSpec {
            name: self.name.clone(),
            modes: self.modes,
            inputs: self.inputs.clone(),
            unitary: from_rows(&self.unitary, "unitary")?,
            herald_modes: self.herald_modes.clone(),
            heralds,
            logical_pairs: self.logical_pairs.iter().map(|p| (p[0], p[1])).collect(),
            target: self.target,
        };
        spec.validate().map_err(|e| Error::Definition(e.to_string()))?;
        Ok(spec)
    }

    pub fn from_spec(spec: &CircuitSpec) -> CircuitFile {
        CircuitFile {
            version: FILE_VERSION,
            name: spec.name.clone(),
            modes: spec.modes,
            inputs: spec.inputs.clone(),
            target: spec.target,
            logical_pairs: spec.logical_pairs.iter().map(|&(a, b)| [a, b]).collect(),
            herald_modes: spec.herald_modes.clone(),
            unitary: to_rows(&spec.unitary),
            heralds: spec
                .heralds
                .iter()
                .map(|h| HeraldFile { pattern: h.pattern.clone(), correction: h.correction.iter().map(to_rows).collect() })
                .collect(),
        }
    }
}

pub fn load(text: &str) -> Result<CircuitSpec> {
    CircuitFile::parse(text)?.to_spec()
}
