//! TOML run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vortexlab_core::lattice::TorusGeometry;
use vortexlab_core::solve::{AnsatzSpec, CoreProfile, Defect, MinimizeOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub geometry: GeometryConfig,
    pub bundle: BundleConfig,
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<AnsatzConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub sites: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    pub chern: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    pub truncate_each: bool,
    pub report_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = MinimizeOptions::default();
        Self { tolerance: d.grad_tol, max_iter: d.max_iter, truncate_each: d.truncate_each, report_every: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticePolicy {
    /// The configured lattice for every entry, warm-started.
    Fixed,
    /// A fresh lattice with `h = ratio · ε` per entry.
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lattice: LatticePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default)]
    pub defects: Vec<DefectConfig>,
}

fn default_profile() -> String {
    CoreProfile::default().name().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectConfig {
    pub position: [f64; 2],
    pub winding: i64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("cannot parse configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid configuration {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Check every precondition that can be checked before computing.
    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry()?;
        let n = geom.dim();
        if self.bundle.chern.len() != n || self.bundle.chern.iter().any(|r| r.len() != n) {
            bail!("bundle.chern must be a {n}x{n} matrix");
        }
        for i in 0..n {
            for j in 0..n {
                if self.bundle.chern[i][j] != -self.bundle.chern[j][i] {
                    bail!("bundle.chern must be antisymmetric (entry ({i}, {j}))");
                }
            }
        }
        if self.epsilon.is_empty() {
            bail!("epsilon list is empty");
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            bail!("epsilon > 0 and epsilon < 1 required, got {e}");
        }
        let o = &self.optimizer;
        if !(o.tolerance > 0.0 && o.tolerance.is_finite()) {
            bail!("optimizer.tolerance > 0 required, got {}", o.tolerance);
        }
        if o.max_iter == 0 {
            bail!("optimizer.max_iter >= 1 required");
        }
        if let Some(s) = &self.sweep {
            match (s.lattice, s.ratio) {
                (LatticePolicy::Scaled, None) => bail!("sweep.ratio is required for the scaled lattice"),
                (LatticePolicy::Scaled, Some(r)) if !(r > 0.0 && r <= 0.5) => {
                    bail!("sweep.ratio must lie in (0, 0.5], got {r}")
                }
                _ => {}
            }
        }
        if let Some(a) = &self.ansatz {
            if CoreProfile::from_name(&a.profile).is_none() {
                bail!("unknown core profile {:?}", a.profile);
            }
            match (n, a.axis) {
                (2, Some(_)) => bail!("ansatz.axis is only meaningful in three dimensions"),
                (3, None) => bail!("ansatz.axis is required in three dimensions"),
                (3, Some(k)) if k >= 3 => bail!("ansatz.axis must be 0, 1 or 2"),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<TorusGeometry> {
        TorusGeometry::new(&self.geometry.sites, &self.geometry.lengths).context("invalid geometry")
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            grad_tol: self.optimizer.tolerance,
            max_iter: self.optimizer.max_iter,
            truncate_each: self.optimizer.truncate_each,
            report_every: self.optimizer.report_every,
            ..MinimizeOptions::default()
        }
    }

    pub fn ansatz_spec(&self) -> Option<AnsatzSpec> {
        self.ansatz.as_ref().map(|a| AnsatzSpec {
            axis: a.axis,
            defects: a.defects.iter().map(|d| Defect { position: d.position, winding: d.winding }).collect(),
            profile: CoreProfile::from_name(&a.profile).unwrap_or_default(),
        })
    }
}
