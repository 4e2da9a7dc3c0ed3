//! JSON scenario configuration and its validation into a runnable plan.

use std::path::{Path, PathBuf};

use mavol_core::bergman::FiberQuadrature;
use mavol_core::geometry::{AuxWeight, FiberVolume, Perturbation, Potential};
use mavol_core::mavol::BaseVolume;
use mavol_core::sympow::SplitBundle;
use mavol_core::toeplitz::{SymbolFunction, SymbolMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Base grids with more points than this cap the k ladder at [`HEAVY_K_CAP`].
pub const HEAVY_GRID_POINTS: usize = 200;
pub const HEAVY_K_CAP: u32 = 16;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub family: FamilySpec,
    #[serde(default)]
    pub symbols: SymbolSpec,
    #[serde(default = "default_ladder")]
    pub k_ladder: Vec<u32>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_base_volume")]
    pub base_volume: String,
    #[serde(default = "default_fiber_volume")]
    pub fiber_volume: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub gates: Gates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySpec {
    Model(ModelSpec),
    SplitBundle(BundleSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub a: u32,
    pub b: u32,
    pub perturbation: String,
    pub eps: f64,
    #[serde(default = "default_aux")]
    pub aux: String,
    #[serde(default)]
    pub aux_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    pub degrees: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    /// Symbol `f` of the product defect `k ‖T_f T_f - T_{f²}‖`.
    #[serde(default = "default_defect_symbol")]
    pub defect: String,
    /// Symbol matrix of the determinant ratio.
    #[serde(default = "default_det_symbols")]
    pub det_lemma: String,
}

impl Default for SymbolSpec {
    fn default() -> Self {
        Self { defect: default_defect_symbol(), det_lemma: default_det_symbols() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "d_base_radial")]
    pub base_radial: usize,
    #[serde(default = "d_base_angular")]
    pub base_angular: usize,
    /// Fiber Gram rule for degree `d`: `2(d + p)` radial and `4(d + p)`
    /// angular nodes.
    #[serde(default = "d_fiber_padding")]
    pub fiber_padding: usize,
    /// Radial nodes of the fixed fiber rule used for `ω_H` integrals
    /// (twice as many angles).
    #[serde(default = "d_integration_radial")]
    pub integration_radial: usize,
    #[serde(default = "d_fd_step")]
    pub fd_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            base_radial: d_base_radial(),
            base_angular: d_base_angular(),
            fiber_padding: d_fiber_padding(),
            integration_radial: d_integration_radial(),
            fd_step: d_fd_step(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gates {
    #[serde(default = "d_demailly")]
    pub demailly: f64,
    #[serde(default = "d_product")]
    pub product: f64,
    #[serde(default = "d_saturation")]
    pub saturation: f64,
    #[serde(default = "d_order")]
    pub order: f64,
    #[serde(default = "d_mz_product")]
    pub mz_product: f64,
    #[serde(default = "d_mz_spread")]
    pub mz_spread: f64,
    #[serde(default = "d_defect_spread")]
    pub defect_spread: f64,
    #[serde(default = "d_sympow")]
    pub sympow: f64,
    #[serde(default = "d_crosscheck")]
    pub crosscheck: f64,
    #[serde(default = "d_griffiths")]
    pub griffiths: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            demailly: d_demailly(),
            product: d_product(),
            saturation: d_saturation(),
            order: d_order(),
            mz_product: d_mz_product(),
            mz_spread: d_mz_spread(),
            defect_spread: d_defect_spread(),
            sympow: d_sympow(),
            crosscheck: d_crosscheck(),
            griffiths: d_griffiths(),
        }
    }
}

fn default_ladder() -> Vec<u32> {
    vec![8, 16, 32]
}
fn default_base_volume() -> String {
    "fs".into()
}
fn default_fiber_volume() -> String {
    "omega".into()
}
fn default_aux() -> String {
    "none".into()
}
fn default_defect_symbol() -> String {
    "x".into()
}
fn default_det_symbols() -> String {
    "chol2".into()
}
fn d_base_radial() -> usize {
    10
}
fn d_base_angular() -> usize {
    12
}
fn d_fiber_padding() -> usize {
    4
}
fn d_integration_radial() -> usize {
    48
}
fn d_fd_step() -> f64 {
    1e-2
}
fn d_demailly() -> f64 {
    1e-6
}
fn d_product() -> f64 {
    1e-6
}
fn d_saturation() -> f64 {
    1e-10
}
fn d_order() -> f64 {
    0.9
}
fn d_mz_product() -> f64 {
    1e-4
}
fn d_mz_spread() -> f64 {
    2.0
}
fn d_defect_spread() -> f64 {
    3.0
}
fn d_sympow() -> f64 {
    1e-6
}
fn d_crosscheck() -> f64 {
    1e-6
}
fn d_griffiths() -> f64 {
    1e-8
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    /// Checks every field against its guard range and resolves catalog ids.
    pub fn validate(&self) -> Result<Plan, ConfigError> {
        if self.scenario.is_empty()
            || !self.scenario.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(invalid("scenario", "expected a nonempty id of letters, digits, '-', '_', '.'"));
        }
        let family = match &self.family {
            FamilySpec::Model(m) => Family::Model(m.validate()?),
            FamilySpec::SplitBundle(b) => Family::Bundle(b.validate()?),
        };
        let ladder = validate_ladder(&self.k_ladder)?;
        let grid = self.grid.validate()?;
        let base_volume = BaseVolume::from_id(&self.base_volume)
            .ok_or_else(|| invalid("base_volume", format!("unknown id '{}' (fs, fs-cubed)", self.base_volume)))?;
        let fiber_volume = FiberVolume::from_id(&self.fiber_volume).ok_or_else(|| {
            invalid("fiber_volume", format!("unknown id '{}' (omega, reference)", self.fiber_volume))
        })?;
        let defect_symbol = SymbolFunction::from_id(&self.symbols.defect).ok_or_else(|| {
            invalid(
                "symbols.defect",
                format!("unknown id '{}' ({})", self.symbols.defect, SymbolFunction::CATALOG.join(", ")),
            )
        })?;
        let det_symbols = SymbolMatrix::from_id(&self.symbols.det_lemma)
            .map_err(|_| invalid("symbols.det_lemma", format!("unknown id '{}' (chol2, diag2, scalar)", self.symbols.det_lemma)))?;
        self.gates.validate()?;
        if let Some(out) = &self.output {
            if out.is_empty() {
                return Err(invalid("output", "empty path"));
            }
        }
        Ok(Plan {
            scenario: self.scenario.clone(),
            family,
            ladder,
            grid,
            base_volume,
            fiber_volume,
            defect_symbol,
            det_symbols,
            gates: self.gates,
            output: self.output.clone(),
        })
    }
}

fn validate_ladder(ladder: &[u32]) -> Result<Vec<u32>, ConfigError> {
    if ladder.is_empty() {
        return Err(invalid("k_ladder", "must not be empty"));
    }
    if let Some(&k) = ladder.iter().find(|&&k| !(1..=64).contains(&k)) {
        return Err(invalid("k_ladder", format!("k = {k} outside [1, 64]")));
    }
    if ladder.windows(2).any(|p| p[0] >= p[1]) {
        return Err(invalid("k_ladder", "must be strictly increasing"));
    }
    Ok(ladder.to_vec())
}

impl ModelSpec {
    fn validate(&self) -> Result<ModelPlan, ConfigError> {
        for (field, v) in [("family.model.a", self.a), ("family.model.b", self.b)] {
            if !(1..=8).contains(&v) {
                return Err(invalid(field, format!("{v} outside [1, 8]")));
            }
        }
        let perturbation = Perturbation::from_id(&self.perturbation).ok_or_else(|| {
            invalid("family.model.perturbation", format!("unknown id '{}' (none, sep, cross, fiber-only)", self.perturbation))
        })?;
        if !(self.eps.is_finite() && self.eps.abs() <= 10.0) {
            return Err(invalid("family.model.eps", format!("{} outside [-10, 10]", self.eps)));
        }
        if !(self.aux_coefficient.is_finite() && self.aux_coefficient.abs() <= 1.0) {
            return Err(invalid("family.model.aux_coefficient", format!("{} outside [-1, 1]", self.aux_coefficient)));
        }
        let aux = AuxWeight::from_id(&self.aux, self.aux_coefficient)
            .ok_or_else(|| invalid("family.model.aux", format!("unknown id '{}' (none, fiber, mixed)", self.aux)))?;
        let potential = Potential::model(self.a, self.b, perturbation, self.eps)
            .map_err(|e| invalid("family.model", e.to_string()))?;
        Ok(ModelPlan { potential, aux })
    }
}

impl BundleSpec {
    fn validate(&self) -> Result<SplitBundle, ConfigError> {
        if self.degrees.len() != 2 {
            return Err(invalid("family.split-bundle.degrees", format!("need exactly 2 degrees, got {}", self.degrees.len())));
        }
        if let Some(&d) = self.degrees.iter().find(|&&d| !(1..=8).contains(&d)) {
            return Err(invalid("family.split-bundle.degrees", format!("{d} outside [1, 8]")));
        }
        SplitBundle::new(self.degrees.clone()).map_err(|e| invalid("family.split-bundle.degrees", e.to_string()))
    }
}

impl GridSpec {
    fn validate(&self) -> Result<GridSpec, ConfigError> {
        let ranges: [(&'static str, usize, usize, usize); 4] = [
            ("grid.base_radial", self.base_radial, 2, 64),
            ("grid.base_angular", self.base_angular, 4, 128),
            ("grid.fiber_padding", self.fiber_padding, 2, 64),
            ("grid.integration_radial", self.integration_radial, 8, 256),
        ];
        for (field, v, lo, hi) in ranges {
            if !(lo..=hi).contains(&v) {
                return Err(invalid(field, format!("{v} outside [{lo}, {hi}]")));
            }
        }
        if !(self.fd_step >= mavol_core::numerics::MIN_FD_STEP && self.fd_step <= 0.1) {
            return Err(invalid("grid.fd_step", format!("{} outside [1e-6, 0.1]", self.fd_step)));
        }
        Ok(*self)
    }

    pub fn base_points(&self) -> usize {
        self.base_radial * self.base_angular
    }

    pub fn fiber_quadrature(&self, degree: usize) -> FiberQuadrature {
        FiberQuadrature { radial: 2 * (degree + self.fiber_padding), angular: 4 * (degree + self.fiber_padding) }
    }
}

impl Gates {
    fn validate(&self) -> Result<(), ConfigError> {
        let tolerances = [
            ("gates.demailly", self.demailly),
            ("gates.product", self.product),
            ("gates.saturation", self.saturation),
            ("gates.mz_product", self.mz_product),
            ("gates.sympow", self.sympow),
            ("gates.crosscheck", self.crosscheck),
            ("gates.griffiths", self.griffiths),
        ];
        for (field, v) in tolerances {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(field, format!("{v} outside (0, 1]")));
            }
        }
        if !(self.order > 0.0 && self.order <= 4.0) {
            return Err(invalid("gates.order", format!("{} outside (0, 4]", self.order)));
        }
        for (field, v) in [("gates.mz_spread", self.mz_spread), ("gates.defect_spread", self.defect_spread)] {
            if !(v >= 1.0 && v <= 100.0) {
                return Err(invalid(field, format!("{v} outside [1, 100]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPlan {
    pub potential: Potential,
    pub aux: AuxWeight,
}

impl ModelPlan {
    /// Whether the curvature of `E_k` is exactly `k b ĉ Id`: the weight
    /// has no `w`-dependence beyond the base Fubini-Study term.
    pub fn is_exact_product(&self) -> bool {
        let flat = match self.potential {
            Potential::Model { perturbation, eps, .. } => {
                matches!(perturbation, Perturbation::None | Perturbation::FiberOnly) || eps == 0.0
            }
            Potential::Projectivized { .. } => false,
        };
        flat && !matches!(self.aux, AuxWeight::Mixed(c) if c != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Model(ModelPlan),
    Bundle(SplitBundle),
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub scenario: String,
    pub family: Family,
    pub ladder: Vec<u32>,
    pub grid: GridSpec,
    pub base_volume: BaseVolume,
    pub fiber_volume: FiberVolume,
    pub defect_symbol: SymbolFunction,
    pub det_symbols: SymbolMatrix,
    pub gates: Gates,
    pub output: Option<String>,
}

impl Plan {
    /// The ladder actually run: capped at [`HEAVY_K_CAP`] on large base grids.
    pub fn effective_ladder(&self) -> Vec<u32> {
        if self.grid.base_points() > HEAVY_GRID_POINTS {
            self.ladder.iter().copied().filter(|&k| k <= HEAVY_K_CAP).collect()
        } else {
            self.ladder.clone()
        }
    }

    /// Same plan with `ε` replaced, for sweeps over model families.
    pub fn with_eps(&self, eps: f64) -> Result<Plan, ConfigError> {
        let Family::Model(model) = self.family else {
            return Err(invalid("family", "ε sweeps need a model family"));
        };
        let Potential::Model { a, b, perturbation, .. } = model.potential else {
            unreachable!("model plans hold model potentials")
        };
        if !(eps.is_finite() && eps.abs() <= 10.0) {
            return Err(invalid("--eps", format!("{eps} outside [-10, 10]")));
        }
        let potential = Potential::model(a, b, perturbation, eps).map_err(|e| invalid("--eps", e.to_string()))?;
        Ok(Plan { family: Family::Model(ModelPlan { potential, ..model }), ..self.clone() })
    }

    pub fn with_ladder(&self, ladder: &[u32]) -> Result<Plan, ConfigError> {
        Ok(Plan { ladder: validate_ladder(ladder)?, ..self.clone() })
    }
}
