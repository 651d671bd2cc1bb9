//! Run configuration: TOML (or JSON) with `[model]`, `[initial]`, `[correlation]`
//! and `[experiment]` sections.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use qkinetic_core::cumulant::CorrelationFamily;
use qkinetic_core::lattice::{Kinetic, Model, ModelSpec};
use qkinetic_core::states::{diagonal_state, pure_state, random_state, random_vector};
use qkinetic_core::tensor::{hermitian_eig, CMatrix, DensityOp};
use qkinetic_core::{KineticError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub initial: InitialState,
    #[serde(default)]
    pub correlation: Option<CorrelationSection>,
    #[serde(default)]
    pub experiment: Experiment,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    #[serde(default)]
    pub kinetic: Kinetic,
    /// `φ(r)` for torus distances `r = 0..=d/2`.
    pub phi: Vec<f64>,
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default)]
    pub max_rows: Option<usize>,
}

/// `(re, im)` pairs.
pub type ComplexEntry = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Seeded random positive state.
    Random {
        seed: u64,
        #[serde(default = "one")]
        trace_norm: f64,
    },
    /// `trace_norm · |ψ⟩⟨ψ|`; a missing vector draws a seeded random unit vector.
    Pure {
        #[serde(default)]
        vector: Option<Vec<ComplexEntry>>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "one")]
        trace_norm: f64,
    },
    Diagonal {
        weights: Vec<f64>,
        #[serde(default = "one")]
        trace_norm: f64,
    },
    /// Explicit Hermitian matrix, used as given.
    Matrix { matrix: Vec<Vec<ComplexEntry>> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrelationSection {
    Identity,
    /// `g_k = ∏_{i<j} diag(c(dist(q_i, q_j)))`.
    PairProduct { c: Vec<f64> },
    /// Operators `g_k` listed per particle count.
    Explicit { ops: Vec<ExplicitOp> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitOp {
    pub k: usize,
    pub matrix: Vec<Vec<ComplexEntry>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Theorem1,
    Theorem2,
    Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default = "default_sweeps")]
    pub sweeps: Vec<SweepKind>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Absolute times.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Times as fractions of `t_0`, appended to `times`.
    #[serde(default)]
    pub t0_fractions: Vec<f64>,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Evolution horizon for `evolve`.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Trajectory rows are written every `record_every` steps.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Time used by the `verify` identities.
    #[serde(default = "default_verify_t")]
    pub verify_t: f64,
}

fn default_sweeps() -> Vec<SweepKind> {
    vec![SweepKind::Theorem1]
}
fn default_orders() -> Vec<usize> {
    vec![2]
}
fn default_nodes() -> usize {
    24
}
fn default_t_end() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_record_every() -> usize {
    50
}
fn default_verify_t() -> f64 {
    0.8
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            sweeps: default_sweeps(),
            epsilons: Vec::new(),
            times: Vec::new(),
            t0_fractions: Vec::new(),
            orders: default_orders(),
            nodes: default_nodes(),
            t_end: default_t_end(),
            dt: default_dt(),
            record_every: default_record_every(),
            verify_t: default_verify_t(),
        }
    }
}

fn complex_matrix(rows: &[Vec<ComplexEntry>], what: &str) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(KineticError::Config(format!("{what} must be a nonempty square matrix")));
    }
    Ok(CMatrix::from_fn(n, n, |r, c| Complex64::new(rows[r][c][0], rows[r][c][1])))
}

impl RunConfig {
    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let cfg: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| format!("ConfigError: {e}"))?
        } else {
            toml::from_str(&text).map_err(|e| format!("ConfigError: {e}"))?
        };
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON encoding, first 16 hex digits.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        ModelSpec::new(m.d, m.kinetic.clone(), m.phi.clone(), m.epsilon)
    }

    pub fn model(&self) -> Result<Model> {
        let spec = self.spec()?;
        match self.model.max_rows {
            Some(cap) => Model::with_cap(spec, cap),
            None => Model::new(spec),
        }
    }

    pub fn initial_state(&self) -> Result<DensityOp> {
        let d = self.model.d;
        match &self.initial {
            InitialState::Random { seed, trace_norm } => {
                positive(*trace_norm)?;
                Ok(random_state(1, d, *seed, *trace_norm))
            }
            InitialState::Pure { trace_norm, .. } => {
                positive(*trace_norm)?;
                pure_state(&self.pure_vector()?.expect("pure state"), *trace_norm)
            }
            InitialState::Diagonal { weights, trace_norm } => {
                positive(*trace_norm)?;
                if weights.len() != d {
                    return Err(KineticError::Config(format!("diagonal weights need {d} entries")));
                }
                diagonal_state(weights, *trace_norm)
            }
            InitialState::Matrix { matrix } => {
                let m = complex_matrix(matrix, "initial matrix")?;
                if m.nrows() != d {
                    return Err(KineticError::Config(format!("initial matrix must be {d}x{d}")));
                }
                let op = DensityOp::new(1, d, m)?;
                hermitian_eig(&op, true)?;
                Ok(op)
            }
        }
    }

    /// The unit vector of a pure initial state.
    pub fn pure_vector(&self) -> Result<Option<Vec<Complex64>>> {
        let d = self.model.d;
        match &self.initial {
            InitialState::Pure { vector: Some(v), .. } => {
                if v.len() != d {
                    return Err(KineticError::Config(format!("pure vector needs {d} entries")));
                }
                Ok(Some(v.iter().map(|z| Complex64::new(z[0], z[1])).collect()))
            }
            InitialState::Pure { vector: None, seed, .. } => Ok(Some(random_vector(d, seed.unwrap_or(0)))),
            _ => Ok(None),
        }
    }

    pub fn correlation(&self) -> Result<Option<CorrelationFamily>> {
        let d = self.model.d;
        match &self.correlation {
            None => Ok(None),
            Some(CorrelationSection::Identity) => Ok(Some(CorrelationFamily::Identity)),
            Some(CorrelationSection::PairProduct { c }) => Ok(Some(CorrelationFamily::pair_product(d, c.clone())?)),
            Some(CorrelationSection::Explicit { ops }) => {
                let mut map = BTreeMap::new();
                for op in ops {
                    map.insert(op.k, complex_matrix(&op.matrix, "correlation operator")?);
                }
                Ok(Some(CorrelationFamily::explicit(d, map)?))
            }
        }
    }

    /// Absolute times followed by the `t_0` fractions.
    pub fn times(&self, t0: f64) -> Result<Vec<f64>> {
        let mut out = self.experiment.times.clone();
        if !self.experiment.t0_fractions.is_empty() {
            if !t0.is_finite() {
                return Err(KineticError::Config("t0_fractions given but t_0 is infinite (φ ≡ 0)".into()));
            }
            out.extend(self.experiment.t0_fractions.iter().map(|f| f * t0));
        }
        Ok(out)
    }
}

fn positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(KineticError::Config(format!("trace_norm must be positive, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
d = 2
phi = [1.0, 0.5]
epsilon = 1.0

[initial]
kind = "random"
seed = 11
"#;

    #[test]
    fn parses_minimal_toml() {
        let cfg: RunConfig = toml::from_str(BASE).unwrap();
        assert_eq!(cfg.experiment.orders, vec![2]);
        assert!(cfg.model().is_ok());
        assert!((cfg.initial_state().unwrap().trace().re - 1.0).abs() < 1e-14);
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn json_and_toml_hash_alike() {
        let cfg: RunConfig = toml::from_str(BASE).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn non_hermitian_matrix_is_symmetry_error() {
        let text = r#"
[model]
d = 2
phi = [1.0, 0.5]
epsilon = 1.0

[initial]
kind = "matrix"
matrix = [[[0.5, 0.0], [0.1, 0.0]], [[0.3, 0.0], [0.5, 0.0]]]
"#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert!(matches!(cfg.initial_state(), Err(KineticError::Symmetry(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{BASE}\n[experiment]\nepsilon = [0.1]\n");
        assert!(toml::from_str::<RunConfig>(&text).is_err());
    }
}
