//! Scenario files: TOML, schema version 1.
//!
//! ```toml
//! version = 1
//! engine = "full"
//!
//! [model]
//! builtin = "iswap-11001"
//! delta = 10.0
//!
//! [decoherence]
//! kappa = 0.025
//! relative_to = "gbar_over_sqrt2"
//!
//! [units]
//! system = "si"
//! g_over_2pi_hz = 50e3
//! ```

use std::path::{Path, PathBuf};

use cqed_core::decoherence::DecoherenceSpec;
use cqed_core::gates::Engine;
use cqed_core::model::{Coupling, Direction, DEFAULT_FOCK_CUTOFF};
use cqed_core::{AtomLevel, BasisState, LinkageModel, ResonancePattern};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{CliError, Result};
use crate::scenario::{self, Builtin, RateUnit, Units};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: Spanned<u32>,
    pub model: ModelConfig,
    #[serde(default)]
    pub engine: EngineName,
    #[serde(default)]
    pub decoherence: DecoherenceConfig,
    #[serde(default)]
    pub time: TimeConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub units: UnitsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub builtin: Option<Spanned<String>>,
    pub inline: Option<InlineModel>,
    /// Common detuning `Δ/g` of a built-in model.
    pub delta: Option<f64>,
    /// Overrides the built-in couplings.
    pub couplings: Option<Vec<f64>>,
    /// Overrides the built-in detunings (before tuning).
    pub detunings: Option<Vec<f64>>,
    /// Tune the free detunings to exact resonance.
    pub tune: Option<bool>,
    /// Match `g1` to the second effective coupling (`11…` patterns).
    pub spin_j: Option<bool>,
    /// Photon numbers `[n, m]` of the two-mode Λ seed.
    pub photons: Option<[u8; 2]>,
    /// Drive strength `Ω/2` of the NOT gate, in units of `g`.
    pub half_omega: Option<f64>,
    pub fock_cutoff: Option<u8>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub name: String,
    pub levels: String,
    pub n_modes: usize,
    pub seed: Spanned<String>,
    pub pattern: Spanned<String>,
    pub detunings: Vec<f64>,
    pub couplings: Vec<CouplingConfig>,
    #[serde(default)]
    pub decaying_levels: Option<String>,
    #[serde(default)]
    pub fock_cutoff: Option<u8>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub from: char,
    pub to: char,
    pub mode: Option<usize>,
    pub drive: Option<usize>,
    pub direction: Option<DirectionName>,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionName {
    Absorb,
    Emit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineName {
    #[default]
    Full,
    Effective,
    Master,
}

impl From<EngineName> for Engine {
    fn from(e: EngineName) -> Self {
        match e {
            EngineName::Full => Engine::Full,
            EngineName::Effective => Engine::Effective,
            EngineName::Master => Engine::Master,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceConfig {
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub relative_to: RateUnit,
    /// Overrides the model's decaying levels, e.g. `"bd"`.
    pub decaying_levels: Option<String>,
    /// Decay events must be counted, which needs the master engine.
    #[serde(default)]
    pub count_jumps: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Interaction time `g t`; derived from the model when absent.
    pub t_int: Option<f64>,
    /// End of the trajectory; defaults to `1.25 t_int`.
    pub t_end: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

fn default_samples() -> usize {
    401
}

fn default_rtol() -> f64 {
    1e-9
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_int: None,
            t_end: None,
            samples: default_samples(),
            rtol: default_rtol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Delta,
    Kappa,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Explicit values; overrides `start`/`stop`/`points`.
    pub values: Option<Vec<f64>>,
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Validation("sweep values must be finite and nonempty".into()));
            }
            return Ok(v.clone());
        }
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Validation("sweep range must be finite with at least one point".into()));
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        let n = (self.points - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..self.points)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / n)
                .collect()),
            Spacing::Log => {
                if !(self.start > 0.0 && self.stop > 0.0) {
                    return Err(CliError::Validation("log spacing needs positive start and stop".into()));
                }
                let (a, b) = (self.start.ln(), self.stop.ln());
                Ok((0..self.points).map(|k| (a + (b - a) * k as f64 / n).exp()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    #[default]
    Dimensionless,
    Si,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    #[serde(default)]
    pub system: UnitSystem,
    #[serde(default = "default_g")]
    pub g_over_2pi_hz: f64,
}

fn default_g() -> f64 {
    scenario::G_OVER_2PI_HZ
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self {
            system: UnitSystem::Dimensionless,
            g_over_2pi_hz: default_g(),
        }
    }
}

impl UnitsConfig {
    pub fn units(&self) -> Result<Units> {
        match self.system {
            UnitSystem::Dimensionless => Ok(Units::Dimensionless),
            UnitSystem::Si if self.g_over_2pi_hz > 0.0 && self.g_over_2pi_hz.is_finite() => Ok(Units::Si {
                g_over_2pi_hz: self.g_over_2pi_hz,
            }),
            UnitSystem::Si => Err(CliError::Validation("g_over_2pi_hz must be positive".into())),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the model name.
    pub stem: Option<String>,
}

/// A parsed scenario with its source text, for located error messages.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: String,
    pub source: String,
    pub config: ScenarioConfig,
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&path.display().to_string(), source)
    }

    pub fn parse(path: &str, source: String) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(&source).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(&source, s.start));
            CliError::Config {
                path: path.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let loaded = Self {
            path: path.to_string(),
            source,
            config,
        };
        if *loaded.config.version.get_ref() != SCHEMA_VERSION {
            return Err(loaded.located(
                loaded.config.version.span().start,
                format!("unsupported schema version {}; expected {SCHEMA_VERSION}", loaded.config.version.get_ref()),
            ));
        }
        let m = &loaded.config.model;
        if m.builtin.is_some() == m.inline.is_some() {
            return Err(CliError::Validation(format!(
                "{}: [model] needs exactly one of `builtin` or `inline`",
                loaded.path
            )));
        }
        if let Some(s) = &loaded.config.sweep {
            s.values()?;
        }
        loaded.config.units.units()?;
        Ok(loaded)
    }

    fn located(&self, offset: usize, message: String) -> CliError {
        let (line, column) = line_col(&self.source, offset);
        CliError::Config {
            path: self.path.clone(),
            line,
            column,
            message,
        }
    }

    /// Error at a string value's position, `inner` characters into it.
    fn at_string(&self, s: &Spanned<String>, inner: usize, message: String) -> CliError {
        let quote = usize::from(self.source[s.span()].starts_with(['"', '\'']));
        let offset = s.span().start + quote + s.get_ref().char_indices().nth(inner).map_or(0, |(i, _)| i);
        self.located(offset, message)
    }

    fn pattern(&self, s: &Spanned<String>) -> Result<ResonancePattern> {
        ResonancePattern::parse(s.get_ref()).map_err(|e| match e {
            cqed_core::Error::InvalidPattern { position, found, .. } => {
                self.at_string(s, position, format!("invalid resonance pattern: unexpected {found:?}"))
            }
            other => self.at_string(s, 0, other.to_string()),
        })
    }

    pub fn builtin(&self) -> Result<Option<Builtin>> {
        self.config
            .model
            .builtin
            .as_ref()
            .map(|b| b.get_ref().parse().map_err(|e: CliError| self.at_string(b, 0, e.to_string())))
            .transpose()
    }

    /// Builds the model, with `delta` overriding the configured `Δ`.
    pub fn model(&self, delta: Option<f64>) -> Result<LinkageModel> {
        let mc = &self.config.model;
        let mut model = match (&mc.inline, self.builtin()?) {
            (Some(inline), _) => self.inline_model(inline)?,
            (None, Some(b)) => builtin_model(b, mc, delta.or(mc.delta).unwrap_or(b.default_delta()))?,
            (None, None) => unreachable!("checked at parse"),
        };
        if let Some(c) = mc.fock_cutoff {
            model.fock_cutoff = c;
        }
        if let Some(levels) = &self.config.decoherence.decaying_levels {
            model.decaying_levels = levels.chars().map(AtomLevel).collect();
        }
        model.validate()?;
        Ok(model)
    }

    fn inline_model(&self, m: &InlineModel) -> Result<LinkageModel> {
        let pattern = self.pattern(&m.pattern)?;
        let seed: BasisState = m
            .seed
            .get_ref()
            .parse()
            .map_err(|e: cqed_core::Error| self.at_string(&m.seed, 0, e.to_string()))?;
        let couplings = m
            .couplings
            .iter()
            .map(|c| match (c.mode, c.drive, c.direction) {
                (Some(j), None, Some(d)) => Ok(Coupling::mode(
                    c.from,
                    c.to,
                    j,
                    match d {
                        DirectionName::Absorb => Direction::Absorb,
                        DirectionName::Emit => Direction::Emit,
                    },
                    c.strength,
                )),
                (None, Some(k), None) => Ok(Coupling::drive(c.from, c.to, k, c.strength)),
                _ => Err(CliError::Validation(format!(
                    "coupling {}→{} needs either `mode` with `direction` or `drive`",
                    c.from, c.to
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let model = LinkageModel {
            name: m.name.clone(),
            levels: m.levels.chars().map(AtomLevel).collect(),
            n_modes: m.n_modes,
            couplings,
            detunings: m.detunings.clone(),
            pattern,
            seed,
            fock_cutoff: m.fock_cutoff.unwrap_or(DEFAULT_FOCK_CUTOFF),
            decaying_levels: m
                .decaying_levels
                .as_deref()
                .unwrap_or_else(|| m.levels.get(1..).unwrap_or(""))
                .chars()
                .map(AtomLevel)
                .collect(),
        };
        model.validate()?;
        if self.config.model.tune.unwrap_or(false) {
            Ok(cqed_core::elimination::tune_resonances(&model)?)
        } else {
            Ok(model)
        }
    }

    /// Decay rates in units of `g` for `model`, with optional overrides.
    pub fn decoherence(&self, model: &LinkageModel, kappa: Option<f64>, gamma: Option<f64>) -> Result<DecoherenceSpec> {
        let d = &self.config.decoherence;
        let (kappa, gamma) = (kappa.unwrap_or(d.kappa), gamma.unwrap_or(d.gamma));
        let scale = if kappa == 0.0 && gamma == 0.0 {
            1.0
        } else {
            d.relative_to.scale(model)?
        };
        let spec = DecoherenceSpec::uniform(model, kappa * scale, gamma * scale);
        spec.validate()?;
        Ok(spec)
    }

    pub fn engine(&self) -> Engine {
        self.config.engine.into()
    }

    pub fn units(&self) -> Units {
        self.config.units.units().expect("checked at parse")
    }

    pub fn stem(&self, model: &LinkageModel) -> String {
        self.config.output.stem.clone().unwrap_or_else(|| model.name.clone())
    }
}

fn builtin_model(b: Builtin, mc: &ModelConfig, delta: f64) -> Result<LinkageModel> {
    if !delta.is_finite() {
        return Err(CliError::Validation(format!("delta = {delta} must be finite")));
    }
    let custom = mc.couplings.is_some() || mc.detunings.is_some();
    let mut model = match b {
        Builtin::Iswap10001 if !custom => return scenario::iswap_10001(delta),
        Builtin::Iswap11001 if !custom => return scenario::iswap_11001(delta, mc.spin_j.unwrap_or(true)),
        Builtin::Fredkin if !custom => return scenario::fredkin(delta),
        Builtin::NotGate if !custom => return scenario::not_gate(delta, mc.half_omega.unwrap_or(1.0)),
        Builtin::TwoModeLambda => {
            let [n, m] = mc.photons.unwrap_or([1, 1]);
            return scenario::two_mode_lambda(delta, n, m);
        }
        Builtin::Iswap10001 => scenario::iswap_10001(delta)?,
        Builtin::Iswap11001 => scenario::iswap_11001(delta, false)?,
        Builtin::Fredkin => scenario::fredkin(delta)?,
        Builtin::NotGate => scenario::not_gate(delta, mc.half_omega.unwrap_or(1.0))?,
    };
    if let Some(g) = &mc.couplings {
        if g.len() != model.couplings.len() {
            return Err(CliError::Validation(format!(
                "{} has {} couplings, config gives {}",
                b,
                model.couplings.len(),
                g.len()
            )));
        }
        for (k, &v) in g.iter().enumerate() {
            model.set_coupling(k, v);
        }
    }
    if let Some(d) = &mc.detunings {
        if d.len() != model.detunings.len() {
            return Err(CliError::Validation(format!(
                "{} has {} detunings, config gives {}",
                b,
                model.detunings.len(),
                d.len()
            )));
        }
        model.detunings = d.clone();
    }
    model.validate()?;
    let tuned = if mc.tune.unwrap_or(true) {
        cqed_core::elimination::tune_resonances(&model)?
    } else {
        model
    };
    if b == Builtin::Iswap11001 && mc.spin_j.unwrap_or(true) {
        Ok(cqed_core::elimination::spin_j_match(&tuned)?)
    } else {
        Ok(tuned)
    }
}
