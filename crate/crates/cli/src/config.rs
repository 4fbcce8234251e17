//! Run configuration: a single TOML file with flat sections and typed
//! scalars/arrays, mapped onto the library's model, protocol and grid
//! objects.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use udw_core::algebra::{DensityMatrix, Observable};
use udw_core::kms::{fit_discrete_modes, DiscreteModeSet, Mode, SpectralModel};
use udw_core::oracle::EvolutionSpec;
use udw_core::switching::{Leg, Protocol, Shape, SwitchingFunction};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub kms: KmsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub acceleration: Option<f64>,
    #[serde(default, alias = "lambda_uv")]
    pub uv_cutoff: Option<f64>,
    /// `[frequency, coupling]` pairs for `discrete_modes`.
    #[serde(default)]
    pub modes: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    FlatOhmic,
    AcceleratedMassless3p1,
    DiscreteModes,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub lambda: f64,
    pub first: LegConfig,
    pub second: LegConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegConfig {
    pub observable: ObservableConfig,
    pub shape: ShapeConfig,
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ObservableConfig {
    Axis(String),
    Direction([f64; 3]),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeConfig {
    CosineBump,
    SmoothBump,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    pub bloch: [f64; 3],
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self {
            bloch: [0.8, 0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Beta,
    Acceleration,
    Lambda,
    UvCutoff,
    Gap,
    Amplitude,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Acceleration => "acceleration",
            Self::Lambda => "lambda",
            Self::UvCutoff => "uv_cutoff",
            Self::Gap => "gap",
            Self::Amplitude => "amplitude",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub n_max: usize,
    /// Mode count for compressing a continuum model.
    pub mode_count: usize,
    /// Fit range for the compression.
    pub omega_max: f64,
    pub fit_target: f64,
    pub step: f64,
    pub lambda_start: f64,
    pub lambda_stop: f64,
    pub lambda_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_max: 10,
            mode_count: 2,
            omega_max: 6.0,
            fit_target: 1e-2,
            step: 3e-3,
            lambda_start: 0.01,
            lambda_stop: 0.3,
            lambda_points: 10,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub s_start: f64,
    pub s_stop: f64,
    pub s_step: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            s_start: 0.0,
            s_stop: 5.0,
            s_step: 0.1,
        }
    }
}

impl GeometryConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.s_step > 0.0) || self.s_stop < self.s_start || self.s_start < 0.0 {
            bail!(
                "geometry grid invalid: start {}, stop {}, step {}",
                self.s_start,
                self.s_stop,
                self.s_step
            );
        }
        let n = ((self.s_stop - self.s_start) / self.s_step).round() as usize;
        Ok((0..=n).map(|i| self.s_start + self.s_step * i as f64).collect())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KmsConfig {
    pub frequency_points: usize,
    pub time_start: f64,
    pub time_stop: f64,
    pub time_points: usize,
}

impl Default for KmsConfig {
    fn default() -> Self {
        Self {
            frequency_points: 200,
            time_start: -3.0,
            time_stop: 3.0,
            time_points: 25,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub quadrature: f64,
    /// Relative three-way agreement of the asymmetry coefficient.
    pub agreement: f64,
    pub kms_detailed_balance: f64,
    pub kms_time_domain: f64,
    pub slope_min: f64,
    pub r_squared_min: f64,
    pub geometry_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: 1e-9,
            agreement: 1e-6,
            kms_detailed_balance: 1e-12,
            kms_time_domain: 1e-6,
            slope_min: 2.8,
            r_squared_min: 0.99,
            geometry_residual: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quadrature", self.quadrature),
            ("agreement", self.agreement),
            ("kms_detailed_balance", self.kms_detailed_balance),
            ("kms_time_domain", self.kms_time_domain),
            ("geometry_residual", self.geometry_residual),
        ] {
            if !(v > 0.0) {
                bail!("tolerance `{name}` must be positive (got {v})");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub seed: u64,
    /// 0 means the library default; the `UDW_WORKERS` environment variable
    /// supplies a default when unset.
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            seed: 0,
            workers: 0,
        }
    }
}

/// The configuration file together with its raw bytes (hashed into the run
/// metadata).
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: String,
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: RunConfig = toml::from_str(&raw)
        .with_context(|| format!("parsing config {}", path.display()))?;
    config.tolerances.validate()?;
    Ok(LoadedConfig { config, raw })
}

impl ModelConfig {
    pub fn build(&self) -> Result<SpectralModel<f64>> {
        match self.kind {
            ModelKind::FlatOhmic => {
                let beta = self
                    .beta
                    .context("flat_ohmic model requires `beta`")?;
                let cutoff = self
                    .uv_cutoff
                    .context("flat_ohmic model requires `uv_cutoff`")?;
                Ok(SpectralModel::flat_ohmic(beta, cutoff)?)
            }
            ModelKind::AcceleratedMassless3p1 => {
                let a = self
                    .acceleration
                    .context("accelerated model requires `acceleration`")?;
                let cutoff = self
                    .uv_cutoff
                    .context("accelerated model requires `uv_cutoff`")?;
                Ok(SpectralModel::accelerated(a, cutoff)?)
            }
            ModelKind::DiscreteModes => Ok(SpectralModel::discrete(self.mode_set()?)),
        }
    }

    pub fn mode_set(&self) -> Result<DiscreteModeSet<f64>> {
        let beta = self
            .beta
            .context("discrete_modes model requires `beta`")?;
        if self.modes.is_empty() {
            bail!("discrete_modes model requires a non-empty `modes` list");
        }
        let modes = self
            .modes
            .iter()
            .map(|&[frequency, coupling]| Mode {
                frequency,
                coupling,
            })
            .collect();
        Ok(DiscreteModeSet::new(modes, beta)?)
    }

    fn with_beta(&self, beta: f64) -> Result<Self> {
        if self.kind == ModelKind::AcceleratedMassless3p1 {
            bail!("sweep `beta` directly only on thermal models; sweep `acceleration` instead");
        }
        Ok(Self {
            beta: Some(beta),
            ..self.clone()
        })
    }
}

impl LegConfig {
    pub fn build(&self) -> Result<Leg<f64>> {
        let observable = match &self.observable {
            ObservableConfig::Axis(axis) => match axis.as_str() {
                "x" => Observable::sigma_x(),
                "y" => Observable::sigma_y(),
                "z" => Observable::sigma_z(),
                other => bail!("unknown observable `{other}`; use x, y, z or a direction"),
            },
            ObservableConfig::Direction(n) => Observable::along_axis(*n)?,
        };
        let shape = match self.shape {
            ShapeConfig::CosineBump => Shape::CosineBump,
            ShapeConfig::SmoothBump => Shape::SmoothBump,
        };
        let switching = SwitchingFunction::new(shape, self.center, self.half_width, self.amplitude)?;
        Ok(Leg::new(observable, switching))
    }
}

impl ProtocolConfig {
    pub fn build(&self) -> Result<Protocol<f64>> {
        Ok(Protocol::new(
            self.first.build()?,
            self.second.build()?,
            self.lambda,
        )?)
    }
}

impl RunConfig {
    pub fn initial_state(&self) -> Result<DensityMatrix<f64>> {
        Ok(DensityMatrix::from_bloch(self.initial_state.bloch)?)
    }

    /// A `(model, protocol)` pair with one sweep parameter replaced.
    pub fn run_point(
        &self,
        parameter: SweepParameter,
        value: f64,
    ) -> Result<(SpectralModel<f64>, Protocol<f64>)> {
        let mut model_cfg = self.model.clone();
        let mut protocol_cfg = self.protocol.clone();
        match parameter {
            SweepParameter::Beta => model_cfg = model_cfg.with_beta(value)?,
            SweepParameter::Acceleration => {
                if model_cfg.kind != ModelKind::AcceleratedMassless3p1 {
                    bail!("sweep `acceleration` requires the accelerated model");
                }
                model_cfg.acceleration = Some(value);
            }
            SweepParameter::Lambda => protocol_cfg.lambda = value,
            SweepParameter::UvCutoff => {
                if model_cfg.kind == ModelKind::DiscreteModes {
                    bail!("sweep `uv_cutoff` is undefined for discrete_modes");
                }
                model_cfg.uv_cutoff = Some(value);
            }
            SweepParameter::Gap => {
                // Reposition both windows symmetrically about their midpoint
                // so the support gap equals the requested value.
                if !(value > 0.0) {
                    bail!("sweep `gap` values must be positive");
                }
                let mid = (protocol_cfg.first.center + protocol_cfg.second.center) / 2.0;
                let half_gap = value / 2.0;
                let sign = if protocol_cfg.second.center >= protocol_cfg.first.center {
                    1.0
                } else {
                    -1.0
                };
                protocol_cfg.first.center =
                    mid - sign * (half_gap + protocol_cfg.first.half_width);
                protocol_cfg.second.center =
                    mid + sign * (half_gap + protocol_cfg.second.half_width);
            }
            SweepParameter::Amplitude => {
                protocol_cfg.first.amplitude *= value;
                protocol_cfg.second.amplitude *= value;
            }
        }
        Ok((model_cfg.build()?, protocol_cfg.build()?))
    }

    /// The mode set the oracle evolves: the model's own modes, or a
    /// Gauss-compressed stand-in for a continuum model. Returns the modes
    /// and an optional warning about the compression quality.
    pub fn oracle_modes(&self) -> Result<(DiscreteModeSet<f64>, Option<String>)> {
        if self.model.kind == ModelKind::DiscreteModes {
            return Ok((self.model.mode_set()?, None));
        }
        let model = self.model.build()?;
        let fit = fit_discrete_modes(
            &model,
            self.oracle.mode_count,
            self.oracle.omega_max,
            self.oracle.fit_target,
        )?;
        let warning = (!fit.within_target).then(|| {
            format!(
                "mode compression reached {:.3e}, above target {:.3e}; increase mode_count or omega_max",
                fit.reconstruction_error, self.oracle.fit_target
            )
        });
        Ok((fit.modes, warning))
    }

    pub fn oracle_spec(&self) -> Result<EvolutionSpec<f64>> {
        // A single-point grid is constructible; the scaling fit is the layer
        // that refuses it, with an explicit insufficient-points error.
        let grid = if self.oracle.lambda_points == 1 {
            vec![self.oracle.lambda_start]
        } else {
            EvolutionSpec::geometric_grid(
                self.oracle.lambda_start,
                self.oracle.lambda_stop,
                self.oracle.lambda_points,
            )?
        };
        Ok(EvolutionSpec::new(self.oracle.step, grid)?)
    }
}
