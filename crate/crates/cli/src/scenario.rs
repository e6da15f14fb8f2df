//! Scenario configuration: JSON schema, defaults, validation and metric
//! construction.

use anyhow::{anyhow, bail, Context, Result};
use foliation_core::field::{ScalarField, SymTensorField};
use foliation_core::foliation::Regime;
use foliation_core::grid::BoundaryGrid;
use foliation_core::metric::{KappaSign, MetricExpansion, ModelKind};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ModelSpec {
    Builtin(String),
    Custom {
        h0: PathBuf,
        #[serde(default)]
        h1: Option<PathBuf>,
        #[serde(default)]
        h2: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LadderSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

impl Default for LadderSpec {
    fn default() -> Self {
        Self { min: 0.02, max: 0.5, count: 16, spacing: Spacing::Log }
    }
}

impl LadderSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => foliation_core::fit::linear_ladder(self.min, self.max, self.count),
            Spacing::Log => foliation_core::fit::log_ladder(self.min, self.max, self.count),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    pub newton_residual: f64,
    pub newton_update: f64,
    pub levelset: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { newton_residual: 1e-10, newton_update: 1e-10, levelset: 1e-12 }
    }
}

/// A diagonal cosine perturbation term amplitude*cos(2 pi mode.y + phase) I
/// added at the given power of x.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Perturbation {
    pub power: usize,
    pub amplitude: f64,
    pub mode: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
    /// constant offset added alongside the cosine
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResonanceSpec {
    pub eps_min: f64,
    pub eps_max: f64,
    pub samples: usize,
    pub m_eigs: usize,
    pub jn: f64,
    #[serde(default = "default_max_crossings")]
    pub max_crossings: usize,
}

fn default_max_crossings() -> usize {
    12
}

impl Default for ResonanceSpec {
    fn default() -> Self {
        Self { eps_min: 2e-3, eps_max: 5e-2, samples: 25, m_eigs: 12, jn: 3.0, max_crossings: 12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Scenario {
    pub model: ModelSpec,
    pub n: usize,
    pub resolution: Vec<usize>,
    pub periods: Vec<f64>,
    pub x_max: f64,
    pub regime: Option<Regime>,
    pub ladder: LadderSpec,
    pub eps: Option<f64>,
    pub k: usize,
    pub tolerances: Tolerances,
    pub steps: usize,
    pub pad: f64,
    pub dealias: bool,
    pub perturbation: Vec<Perturbation>,
    pub resonance: ResonanceSpec,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            model: ModelSpec::Builtin("fuchsian".into()),
            n: 2,
            resolution: Vec::new(),
            periods: Vec::new(),
            x_max: 1.5,
            regime: None,
            ladder: LadderSpec::default(),
            eps: None,
            k: 2,
            tolerances: Tolerances::default(),
            steps: 192,
            pad: 1.35,
            dealias: false,
            perturbation: Vec::new(),
            resonance: ResonanceSpec::default(),
            out_dir: None,
            seed: 0,
        }
    }
}

impl Scenario {
    /// Load from JSON, fill defaults and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        let mut s: Scenario =
            serde_json::from_str(&text).with_context(|| "parsing scenario JSON")?;
        s.fill_defaults();
        s.validate()?;
        Ok(s)
    }

    pub fn fill_defaults(&mut self) {
        if self.resolution.is_empty() {
            self.resolution = vec![64; self.n];
        }
        if self.periods.is_empty() {
            self.periods = vec![1.0; self.n];
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > 3 {
            bail!("n must be 2 or 3, got {}", self.n);
        }
        if self.resolution.len() != self.n || self.periods.len() != self.n {
            bail!(
                "resolution/periods must have length n = {} (got {}/{})",
                self.n,
                self.resolution.len(),
                self.periods.len()
            );
        }
        if self.ladder.max >= self.x_max {
            bail!(
                "ladder max {} must stay below the collar depth x_max {}",
                self.ladder.max,
                self.x_max
            );
        }
        if !(self.ladder.min > 0.0 && self.ladder.min < self.ladder.max) {
            bail!("ladder must satisfy 0 < min < max");
        }
        if self.tolerances.newton_residual <= 0.0
            || self.tolerances.newton_update <= 0.0
            || self.tolerances.levelset <= 0.0
        {
            bail!("tolerances must be positive");
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e < self.x_max) {
                bail!("eps {} must lie in (0, x_max = {})", e, self.x_max);
            }
        }
        if let ModelSpec::Builtin(name) = &self.model {
            if ModelKind::parse(name).is_none() {
                bail!(
                    "unknown model '{name}' (expected hyperbolic_ball | fuchsian | \
                     horospherical | exponential_collar | exponential_collar_reflected)"
                );
            }
        }
        Ok(())
    }

    /// Canonical resolved JSON (defaults filled), used for hashing.
    pub fn resolved_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn grid(&self) -> Result<Arc<BoundaryGrid>> {
        BoundaryGrid::new(self.resolution.clone(), self.periods.clone())
            .map_err(|e| anyhow!("{e}"))
    }

    fn perturbation_terms(
        &self,
        grid: &Arc<BoundaryGrid>,
    ) -> Result<Vec<(usize, SymTensorField)>> {
        let n = self.n;
        let mut out = Vec::new();
        for p in &self.perturbation {
            if p.mode.len() != n {
                bail!("perturbation mode length {} != n = {n}", p.mode.len());
            }
            let amp = p.amplitude;
            let offset = p.offset;
            let mode = p.mode.clone();
            let phase = p.phase;
            let periods = self.periods.clone();
            let field = ScalarField::from_fn(grid, move |y| {
                let mut arg = phase;
                for (d, kk) in mode.iter().enumerate() {
                    arg += 2.0 * PI * *kk as f64 * y[d] / periods[d];
                }
                offset + amp * arg.cos()
            });
            let mut t = SymTensorField::zeros(grid);
            for i in 0..n {
                t.set_component(i, i, &field);
            }
            out.push((p.power, t));
        }
        Ok(out)
    }

    /// Construct the metric expansion this scenario describes.
    pub fn metric(&self) -> Result<MetricExpansion> {
        let grid = self.grid()?;
        match &self.model {
            ModelSpec::Builtin(name) => {
                let kind = ModelKind::parse(name).ok_or_else(|| anyhow!("unknown model"))?;
                let h0 = SymTensorField::identity(&grid);
                let terms = self.perturbation_terms(&grid)?;
                MetricExpansion::model_with_terms(kind, h0, terms, self.x_max)
                    .map_err(|e| anyhow!("{e}"))
            }
            ModelSpec::Custom { h0, h1, h2 } => {
                let h0 = SymTensorField::load(h0).map_err(|e| anyhow!("loading h0: {e}"))?;
                let zero = SymTensorField::zeros(h0.grid());
                let h1 = match h1 {
                    Some(p) => SymTensorField::load(p).map_err(|e| anyhow!("loading h1: {e}"))?,
                    None => zero.clone(),
                };
                let h2 = match h2 {
                    Some(p) => SymTensorField::load(p).map_err(|e| anyhow!("loading h2: {e}"))?,
                    None => zero,
                };
                MetricExpansion::truncated(vec![h0, h1, h2], self.x_max)
                    .map_err(|e| anyhow!("{e}"))
            }
        }
    }

    /// Regime from the scenario or inferred from the kappa1 sign; errors on
    /// a mismatch between the two.
    pub fn resolve_regime(&self, m: &MetricExpansion) -> Result<Regime> {
        let k = m.kappas().map_err(|e| anyhow!("{e}"))?;
        let sign = k.kappa1_sign(1e-10);
        let inferred = match sign {
            KappaSign::Zero => Some(Regime::Kappa1Zero),
            KappaSign::Positive => Some(Regime::Kappa1Pos),
            KappaSign::Negative => Some(Regime::Kappa1Neg),
            KappaSign::Mixed => None,
        };
        match (self.regime, inferred) {
            (Some(r), Some(i)) if r == i => Ok(r),
            (Some(r), Some(i)) => bail!(
                "scenario regime {r:?} contradicts the metric's kappa1 sign (implies {i:?})"
            ),
            (Some(_), None) => bail!("kappa1 changes sign; no regime applies"),
            (None, Some(i)) => Ok(i),
            (None, None) => bail!("kappa1 changes sign; no regime applies"),
        }
    }

    pub fn solver_options(&self) -> foliation_core::foliation::SolverOptions {
        foliation_core::foliation::SolverOptions {
            cfg: foliation_core::leaf::PipelineCfg {
                steps: self.steps,
                pad: self.pad,
                dealias: self.dealias,
            },
            tol_residual: self.tolerances.newton_residual,
            tol_update: self.tolerances.newton_update,
            ..Default::default()
        }
    }

    /// Apply a dotted-path override such as `ladder.max=0.4` or `steps=96`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("override must look like key.path=value, got '{spec}'"))?;
        let mut doc = serde_json::to_value(&*self)?;
        let mut cursor = &mut doc;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if i + 1 == parts.len() {
                let parsed: serde_json::Value = serde_json::from_str(value)
                    .unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
                match cursor {
                    serde_json::Value::Object(map) => {
                        map.insert(part.to_string(), parsed);
                    }
                    _ => bail!("override path '{path}' does not address an object"),
                }
            } else {
                cursor = cursor
                    .get_mut(*part)
                    .ok_or_else(|| anyhow!("unknown override path segment '{part}'"))?;
            }
        }
        let mut updated: Scenario = serde_json::from_value(doc)?;
        updated.fill_defaults();
        updated.validate()?;
        *self = updated;
        Ok(())
    }
}
