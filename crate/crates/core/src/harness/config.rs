use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use super::catalog::{family_catalog, find_family, FamilySpec};
use crate::error::{Error, Result};
use crate::optim::{OptimizerKind, OptimizerSpec};
use crate::qsim::{Circuit, PauliSum};
use crate::vqe::{EnsembleContext, TOY_ANSATZ, TOY_HAMILTONIAN};

/// Starting point for the local optimizers. The population method draws
/// its own starting population and ignores this.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theta0Policy {
    #[default]
    Zeros,
    Uniform {
        var_min: f64,
        var_max: f64,
    },
}

/// One experiment matrix: families x optimizers x seeds.
///
/// In JSON, `families` entries may be catalog names or full specs and
/// `optimizers` entries may be bare kind names or full specs. Relative
/// paths resolve against the config file's directory; without paths the
/// built-in two-qubit toy problem is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit_path: Option<PathBuf>,
    #[serde(default)]
    pub phi_a: usize,
    #[serde(default = "default_phi_b")]
    pub phi_b: usize,
    #[serde(default = "family_catalog", deserialize_with = "families_from_json")]
    pub families: Vec<FamilySpec>,
    #[serde(default = "all_optimizers", deserialize_with = "optimizers_from_json")]
    pub optimizers: Vec<OptimizerSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub theta0_policy: Theta0Policy,
}

fn default_phi_b() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn all_optimizers() -> Vec<OptimizerSpec> {
    OptimizerKind::ALL
        .into_iter()
        .map(OptimizerSpec::new)
        .collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyEntry {
    Name(String),
    Spec(FamilySpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OptimizerEntry {
    Kind(OptimizerKind),
    Spec(OptimizerSpec),
}

fn families_from_json<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<FamilySpec>, D::Error> {
    Vec::<FamilyEntry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            FamilyEntry::Spec(s) => Ok(s),
            FamilyEntry::Name(n) => find_family(&n)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown family {n:?}"))),
        })
        .collect()
}

fn optimizers_from_json<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<OptimizerSpec>, D::Error> {
    Ok(Vec::<OptimizerEntry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            OptimizerEntry::Kind(k) => OptimizerSpec::new(k),
            OptimizerEntry::Spec(s) => s,
        })
        .collect())
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hamiltonian_path: None,
            circuit_path: None,
            phi_a: 0,
            phi_b: default_phi_b(),
            families: family_catalog(),
            optimizers: all_optimizers(),
            seeds: default_seeds(),
            theta0_policy: Theta0Policy::Zeros,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, resolves relative paths and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.hamiltonian_path, &mut cfg.circuit_path]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.families.is_empty() || self.optimizers.is_empty() || self.seeds.is_empty() {
            return bad("families, optimizers and seeds must all be non-empty".into());
        }
        for (i, f) in self.families.iter().enumerate() {
            if self.families[..i].iter().any(|g| g.name == f.name) {
                return bad(format!("duplicate family {:?}", f.name));
            }
            f.estimator
                .validate()
                .map_err(|e| Error::Config(format!("family {}: {e}", f.name)))?;
        }
        for (i, o) in self.optimizers.iter().enumerate() {
            if self.optimizers[..i].iter().any(|p| p.kind == o.kind) {
                return bad(format!("optimizer {} listed twice", o.kind));
            }
            o.validate()
                .map_err(|e| Error::Config(format!("optimizer {}: {e}", o.kind)))?;
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return bad(format!("duplicate seed {s}"));
            }
        }
        if let Theta0Policy::Uniform { var_min, var_max } = self.theta0_policy {
            if !(var_min < var_max) || !var_min.is_finite() || !var_max.is_finite() {
                return bad(format!(
                    "uniform theta0 needs var_min < var_max, got [{var_min}, {var_max}]"
                ));
            }
        }
        Ok(())
    }

    /// The problem definition shared by every run, with an exact estimator.
    pub fn base_context(&self) -> Result<EnsembleContext> {
        let cfg_err = |what: &str, e: Error| Error::Config(format!("{what}: {e}"));
        let h: PauliSum = match &self.hamiltonian_path {
            Some(p) => PauliSum::load(p).map_err(|e| cfg_err(&p.display().to_string(), e))?,
            None => TOY_HAMILTONIAN.parse()?,
        };
        let c: Circuit = match &self.circuit_path {
            Some(p) => {
                Circuit::load(p, h.n_qubits()).map_err(|e| cfg_err(&p.display().to_string(), e))?
            }
            None => TOY_ANSATZ.parse()?,
        };
        EnsembleContext::new(
            h,
            c,
            self.phi_a,
            self.phi_b,
            crate::qsim::EstimatorSpec::exact(),
        )
        .map_err(|e| cfg_err("problem", e))
    }

    pub fn n_runs(&self) -> usize {
        self.families.len() * self.optimizers.len() * self.seeds.len()
    }
}
