//! JSON file formats for arrays, rules, designs and reports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::codes::GeneratorMatrix;
use crate::designs::{DesignStorage, RowWeights, WeightedDesign};
use crate::error::{Error, Result};
use crate::gf::FieldCtx;
use crate::oa::{
    full_factorial, verify_strength_exhaustive, verify_strength_linear, CertificationMethod,
    OaStorage, OrthogonalArray,
};
use crate::rules1d::{MeasureTag, Rule1D, RuleWeights};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OaFile {
    pub schema_version: u32,
    pub q: u32,
    pub k: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub strength: Option<usize>,
    pub certification: Option<CertificationMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_rows: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub full_factorial: bool,
}

impl OaFile {
    pub fn from_oa(oa: &OrthogonalArray) -> Self {
        let (rows, generator_rows, full) = match oa.storage() {
            OaStorage::Explicit(rows) => (Some(rows.clone()), None, false),
            OaStorage::Generator(g) => (None, Some(g.rows().to_vec()), false),
            OaStorage::FullFactorial => (None, None, true),
        };
        let cert = oa.certification();
        OaFile {
            schema_version: SCHEMA_VERSION,
            q: oa.q(),
            k: oa.k(),
            n: saturating_u64(oa.n_runs()),
            strength: cert.map(|c| c.strength),
            certification: cert.map(|c| c.method),
            rows,
            generator_rows,
            full_factorial: full,
        }
    }

    /// Rebuilds the array. A claimed certification is re-established with
    /// the matching verifier; a claim that does not hold is a schema error.
    pub fn into_oa(self, budget: &Budget) -> Result<OrthogonalArray> {
        check_version(self.schema_version)?;
        let storages = self.rows.is_some() as u8
            + self.generator_rows.is_some() as u8
            + self.full_factorial as u8;
        if storages != 1 {
            return Err(Error::Schema(
                "an array needs exactly one of \"rows\", \"generator_rows\", \"full_factorial\""
                    .into(),
            ));
        }
        let oa = if let Some(rows) = self.rows {
            OrthogonalArray::from_rows(self.q, self.k, rows)?
        } else if let Some(grows) = self.generator_rows {
            let field = FieldCtx::for_order(self.q as u64)?;
            OrthogonalArray::from_generator(GeneratorMatrix::from_rows(field, self.k, grows)?)
        } else {
            full_factorial(self.q, self.k)?
        };
        if oa.n_runs() != self.n as u128 {
            return Err(Error::Schema(format!(
                "\"N\" is {} but the array has {} runs",
                self.n,
                oa.n_runs()
            )));
        }
        match (self.strength, self.certification) {
            (None, None) => Ok(oa),
            (Some(t), Some(method)) => {
                let report = match (method, oa.storage()) {
                    (CertificationMethod::Construction, OaStorage::FullFactorial) => return Ok(oa),
                    (CertificationMethod::Linear, OaStorage::Generator(g)) => {
                        verify_strength_linear(g, t, budget)?
                    }
                    // explicit rows can only be certified by counting
                    (
                        CertificationMethod::Exhaustive | CertificationMethod::Linear,
                        OaStorage::Explicit(_),
                    ) => verify_strength_exhaustive(&oa, t, budget)?,
                    (CertificationMethod::Exhaustive, _) => {
                        verify_strength_exhaustive(&oa, t, budget)?
                    }
                    (m, _) => {
                        return Err(Error::Schema(format!(
                            "certification {m:?} does not apply to this storage"
                        )))
                    }
                };
                match report.certification() {
                    Some(c) => Ok(oa.with_certification(c)),
                    None => Err(Error::Schema(format!("claimed strength {t} does not hold"))),
                }
            }
            _ => Err(Error::Schema(
                "\"strength\" and \"certification\" must be given together".into(),
            )),
        }
    }
}

/// Run counts beyond `u64` cannot be stored; they saturate and then fail the
/// count check on load.
fn saturating_u64(n: u128) -> u64 {
    n.min(u64::MAX as u128) as u64
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleWeightsFile {
    Rational { q: u64, q_i: Vec<u64> },
    Real { weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleFile {
    pub measure: MeasureTag,
    pub nodes: Vec<f64>,
    #[serde(flatten)]
    pub weights: RuleWeightsFile,
    pub degree: usize,
}

impl RuleFile {
    pub fn from_rule(rule: &Rule1D) -> Self {
        let weights = match rule.weights() {
            RuleWeights::Real(w) => RuleWeightsFile::Real { weights: w.clone() },
            RuleWeights::Rational { q, counts } => RuleWeightsFile::Rational {
                q: *q,
                q_i: counts.clone(),
            },
        };
        RuleFile {
            measure: rule.measure().clone(),
            nodes: rule.nodes().to_vec(),
            weights,
            degree: rule.degree(),
        }
    }

    pub fn into_rule(self) -> Result<Rule1D> {
        let weights = match self.weights {
            RuleWeightsFile::Real { weights } => RuleWeights::Real(weights),
            RuleWeightsFile::Rational { q, q_i } => RuleWeights::Rational { q, counts: q_i },
        };
        Rule1D::new(self.nodes, weights, self.measure, self.degree)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OaRef {
    Inline(Box<OaFile>),
    /// Relative paths resolve against the design file's directory.
    Path(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignBody {
    Explicit {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    Factored {
        rule: RuleFile,
        oa_ref: OaRef,
        symbol_map: Vec<f64>,
        /// Per-symbol weights whose products weight the runs; absent means
        /// every run weighs `1/N`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symbol_weights: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub schema_version: u32,
    pub dim: usize,
    pub measure: MeasureTag,
    pub degree: usize,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(flatten)]
    pub body: DesignBody,
}

impl DesignFile {
    /// Serializable form; a factored design embeds its array inline.
    pub fn from_design(design: &WeightedDesign) -> Self {
        let body = match design.storage() {
            DesignStorage::Explicit { points, weights } => DesignBody::Explicit {
                points: points.clone(),
                weights: weights.clone(),
            },
            DesignStorage::Factored {
                rule,
                oa,
                symbol_map,
                row_weights,
            } => DesignBody::Factored {
                rule: RuleFile::from_rule(rule),
                oa_ref: OaRef::Inline(Box::new(OaFile::from_oa(oa))),
                symbol_map: symbol_map.clone(),
                symbol_weights: match row_weights {
                    RowWeights::Uniform => None,
                    RowWeights::Product(w) => Some(w.clone()),
                },
            },
        };
        DesignFile {
            schema_version: SCHEMA_VERSION,
            dim: design.dim(),
            measure: design.measure().clone(),
            degree: design.claimed_degree(),
            n: saturating_u64(design.n_points()),
            body,
        }
    }

    pub fn into_design(self, base_dir: Option<&Path>, budget: &Budget) -> Result<WeightedDesign> {
        check_version(self.schema_version)?;
        let design = match self.body {
            DesignBody::Explicit { points, weights } => {
                WeightedDesign::explicit(points, weights, self.measure.clone(), self.degree)?
            }
            DesignBody::Factored {
                rule,
                oa_ref,
                symbol_map,
                symbol_weights,
            } => {
                let oa_file = match oa_ref {
                    OaRef::Inline(f) => *f,
                    OaRef::Path(p) => {
                        let path = match base_dir {
                            Some(dir) => dir.join(&p),
                            None => p.into(),
                        };
                        let text = std::fs::read_to_string(&path).map_err(|e| {
                            Error::Schema(format!("cannot read {}: {e}", path.display()))
                        })?;
                        serde_json::from_str(&text)?
                    }
                };
                let rule = rule.into_rule()?;
                if rule.measure() != &self.measure {
                    return Err(Error::Schema(
                        "rule measure differs from the design measure".into(),
                    ));
                }
                let row_weights = symbol_weights.map_or(RowWeights::Uniform, RowWeights::Product);
                WeightedDesign::factored(
                    rule,
                    oa_file.into_oa(budget)?,
                    symbol_map,
                    row_weights,
                    self.degree,
                )?
            }
        };
        if design.dim() != self.dim {
            return Err(Error::Schema(format!(
                "\"dim\" is {} but points have dimension {}",
                self.dim,
                design.dim()
            )));
        }
        if design.n_points() != self.n as u128 {
            return Err(Error::Schema(format!(
                "\"N\" is {} but the design has {} points",
                self.n,
                design.n_points()
            )));
        }
        Ok(design)
    }
}

pub fn oa_to_json(oa: &OrthogonalArray) -> String {
    to_json(&OaFile::from_oa(oa))
}

pub fn oa_from_json(text: &str, budget: &Budget) -> Result<OrthogonalArray> {
    serde_json::from_str::<OaFile>(text)?.into_oa(budget)
}

pub fn design_to_json(design: &WeightedDesign) -> String {
    to_json(&DesignFile::from_design(design))
}

pub fn design_from_json(
    text: &str,
    base_dir: Option<&Path>,
    budget: &Budget,
) -> Result<WeightedDesign> {
    serde_json::from_str::<DesignFile>(text)?.into_design(base_dir, budget)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialization");
    s.push('\n');
    s
}
