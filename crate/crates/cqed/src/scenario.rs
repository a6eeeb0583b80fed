//! Built-in gate models at given detunings, their logical encodings, and
//! the unit conversions used by the front end.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use cqed_core::dynamics::ThreeLevelKind;
use cqed_core::elimination::{effective_system, spin_j_match, tune_resonances};
use cqed_core::gates::{LogicalEncoding, TargetGate};
use cqed_core::model::builtin;
use cqed_core::LinkageModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Reference scale `g / 2π` of the microwave experiment, in Hz.
pub const G_OVER_2PI_HZ: f64 = 50e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    TwoModeLambda,
    #[serde(rename = "iswap-10001")]
    Iswap10001,
    #[serde(rename = "iswap-11001")]
    Iswap11001,
    #[serde(rename = "fredkin-1001001")]
    Fredkin,
    NotGate,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::TwoModeLambda,
        Builtin::Iswap10001,
        Builtin::Iswap11001,
        Builtin::Fredkin,
        Builtin::NotGate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::TwoModeLambda => "two-mode-lambda",
            Builtin::Iswap10001 => "iswap-10001",
            Builtin::Iswap11001 => "iswap-11001",
            Builtin::Fredkin => "fredkin-1001001",
            Builtin::NotGate => "not-gate",
        }
    }

    pub fn default_delta(self) -> f64 {
        match self {
            Builtin::Fredkin | Builtin::NotGate => 20.0,
            _ => 10.0,
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL.into_iter().find(|b| b.name() == s).ok_or_else(|| {
            let names: Vec<_> = Builtin::ALL.iter().map(|b| b.name()).collect();
            CliError::Validation(format!("unknown built-in model {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// `(10001)` with `Δ1,2,3 = Δ` and `Δ4` tuned to resonance.
pub fn iswap_10001(delta: f64) -> Result<LinkageModel> {
    let m = builtin::iswap("10001", [1.0; 4], [delta, delta, delta, 0.0])?;
    Ok(tune_resonances(&m)?)
}

/// `(11001)` with `Δ2,3 = Δ`, `Δ1, Δ4` tuned, and optionally `g1` matched
/// to the second effective coupling.
pub fn iswap_11001(delta: f64, spin_j: bool) -> Result<LinkageModel> {
    let m = builtin::iswap("11001", [1.0; 4], [0.0, delta, delta, 0.0])?;
    Ok(if spin_j { spin_j_match(&m)? } else { tune_resonances(&m)? })
}

/// `(1001001)` with `Δ1,2,4,5 = Δ` and `Δ3, Δ6` tuned.
pub fn fredkin(delta: f64) -> Result<LinkageModel> {
    let m = builtin::fredkin([1.0; 6], [delta, delta, 0.0, delta, delta, 0.0])?;
    Ok(tune_resonances(&m)?)
}

/// NOT gate with `Δ1 = Δ2 = Δ`, `Ω/2 = g` and `Δ3` tuned.
pub fn not_gate(delta: f64, half_omega: f64) -> Result<LinkageModel> {
    let m = builtin::not_gate(1.0, 1.0, half_omega, [delta, delta, 0.0])?;
    Ok(tune_resonances(&m)?)
}

pub fn two_mode_lambda(delta: f64, n: u8, m: u8) -> Result<LinkageModel> {
    Ok(builtin::two_mode_lambda(1.0, 1.0, delta, n, m)?)
}

/// Logical encoding and ideal gate of a gate model, chosen by its mode count
/// and pattern.
pub fn encoding_for(model: &LinkageModel) -> Option<(LogicalEncoding, TargetGate)> {
    match (model.n_modes, model.pattern.to_string().as_str()) {
        (4, "10001" | "11001") => Some((LogicalEncoding::iswap(), TargetGate::Iswap)),
        (6, "1001001") => Some((LogicalEncoding::fredkin(), TargetGate::Fredkin)),
        (2, "1001") => Some((LogicalEncoding::single(), TargetGate::Not)),
        _ => None,
    }
}

pub fn three_level_kind(model: &LinkageModel) -> Option<ThreeLevelKind> {
    match (model.n_modes, model.pattern.to_string().as_str()) {
        (4, "11001") => Some(ThreeLevelKind::Iswap),
        (6, "1001001") => Some(ThreeLevelKind::Fredkin),
        _ => None,
    }
}

/// Scale that decay rates are quoted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateUnit {
    #[default]
    G,
    /// `|g_eff|` of a two-level reduction.
    GEff,
    /// `ḡ / √2` of a three-level reduction.
    GbarOverSqrt2,
}

impl RateUnit {
    /// Size of one unit in units of `g`.
    pub fn scale(self, model: &LinkageModel) -> Result<f64> {
        if self == RateUnit::G {
            return Ok(1.0);
        }
        let eff = effective_system(model)?;
        match (self, eff.basis.len()) {
            (RateUnit::GEff, 2) => Ok(eff.g(1).abs()),
            (RateUnit::GbarOverSqrt2, 3) => Ok((eff.g(1).powi(2) + eff.g(2).powi(2)).sqrt() / 2f64.sqrt()),
            (u, n) => Err(CliError::Validation(format!(
                "rates in {u:?} need a {}-level reduction; model {} reduces to {n} states",
                if u == RateUnit::GEff { 2 } else { 3 },
                model.name
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum Units {
    #[default]
    Dimensionless,
    Si { g_over_2pi_hz: f64 },
}

impl Units {
    /// `g` in rad/s.
    pub fn g_rad_per_s(self) -> Option<f64> {
        match self {
            Units::Dimensionless => None,
            Units::Si { g_over_2pi_hz } => Some(2.0 * PI * g_over_2pi_hz),
        }
    }

    /// Converts `g t` to milliseconds.
    pub fn ms(self, gt: f64) -> Option<f64> {
        self.g_rad_per_s().map(|g| 1e3 * gt / g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for b in Builtin::ALL {
            assert_eq!(b.name().parse::<Builtin>().unwrap(), b);
        }
        assert!("iswap".parse::<Builtin>().is_err());
    }

    #[test]
    fn si_conversion() {
        let u = Units::Si { g_over_2pi_hz: G_OVER_2PI_HZ };
        assert!((u.ms(490.0 * PI).unwrap() - 4.9).abs() < 1e-12);
        assert_eq!(Units::Dimensionless.ms(1.0), None);
    }

    #[test]
    fn rate_units() {
        let m = iswap_10001(10.0).unwrap();
        assert!((RateUnit::GEff.scale(&m).unwrap() - 1.0 / 980.0).abs() < 1e-5);
        assert!(RateUnit::GbarOverSqrt2.scale(&m).is_err());
        let m = iswap_11001(10.0, true).unwrap();
        let eff = effective_system(&m).unwrap();
        assert!((RateUnit::GbarOverSqrt2.scale(&m).unwrap() - eff.g(2).abs()).abs() < 1e-12);
    }

    #[test]
    fn encodings() {
        assert!(encoding_for(&fredkin(20.0).unwrap()).is_some());
        assert!(encoding_for(&two_mode_lambda(10.0, 1, 1).unwrap()).is_none());
        assert_eq!(three_level_kind(&iswap_11001(10.0, false).unwrap()), Some(ThreeLevelKind::Iswap));
    }
}
