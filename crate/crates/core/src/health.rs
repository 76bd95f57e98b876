//! Body mass index, Ponderal index, and obesity classification.
//!
//! Inputs carry unit tags and are canonicalized to kilograms and meters
//! before any index is computed, so a classification threshold always refers
//! to kg/m².

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scales::{DerivedScale, ScaleBinding, ScaleType};
use crate::statements::Quantity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HealthError {
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("unknown {kind} unit `{unit}`")]
    UnknownUnit { kind: &'static str, unit: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassUnit {
    Kg,
    Lb,
    G,
}

impl MassUnit {
    pub fn to_kg(self) -> f64 {
        match self {
            MassUnit::Kg => 1.0,
            MassUnit::Lb => 0.453_592_37,
            MassUnit::G => 0.001,
        }
    }
}

impl FromStr for MassUnit {
    type Err = HealthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kg" => Ok(MassUnit::Kg),
            "lb" | "lbs" => Ok(MassUnit::Lb),
            "g" => Ok(MassUnit::G),
            _ => Err(HealthError::UnknownUnit {
                kind: "mass",
                unit: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    M,
    Cm,
    In,
}

impl LengthUnit {
    pub fn to_m(self) -> f64 {
        match self {
            LengthUnit::M => 1.0,
            LengthUnit::Cm => 0.01,
            LengthUnit::In => 0.0254,
        }
    }
}

impl FromStr for LengthUnit {
    type Err = HealthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" => Ok(LengthUnit::M),
            "cm" => Ok(LengthUnit::Cm),
            "in" => Ok(LengthUnit::In),
            _ => Err(HealthError::UnknownUnit {
                kind: "length",
                unit: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyMetrics {
    weight: f64,
    weight_unit: MassUnit,
    height: f64,
    height_unit: LengthUnit,
}

impl BodyMetrics {
    pub fn new(weight: f64, weight_unit: MassUnit, height: f64, height_unit: LengthUnit) -> Result<Self, HealthError> {
        for (what, value) in [("weight", weight), ("height", height)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(HealthError::NonPositive { what, value });
            }
        }
        Ok(Self {
            weight,
            weight_unit,
            height,
            height_unit,
        })
    }

    pub fn weight_kg(&self) -> f64 {
        self.weight * self.weight_unit.to_kg()
    }

    pub fn height_m(&self) -> f64 {
        self.height * self.height_unit.to_m()
    }
}

/// A body mass index in kg/m².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bmi(f64);

impl Bmi {
    /// Wraps a value the caller asserts is already in kg/m².
    pub fn kg_per_m2(value: f64) -> Result<Self, HealthError> {
        if !(value.is_finite() && value > 0.0) {
            return Err(HealthError::NonPositive { what: "bmi", value });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn bmi(m: &BodyMetrics) -> Bmi {
    let h = m.height_m();
    Bmi(m.weight_kg() / (h * h))
}

/// Weight over height cubed, kg/m³.
pub fn ponderal(m: &BodyMetrics) -> f64 {
    m.weight_kg() / m.height_m().powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BmiCategory {
    /// Below 25.0
    UnderweightOrNormal,
    /// [25.0, 30.0)
    Overweight,
    /// 30.0 and above
    Obese,
}

impl BmiCategory {
    pub fn name(self) -> &'static str {
        match self {
            BmiCategory::UnderweightOrNormal => "underweight/normal",
            BmiCategory::Overweight => "overweight",
            BmiCategory::Obese => "obese",
        }
    }
}

impl fmt::Display for BmiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify(bmi: Bmi) -> BmiCategory {
    match bmi.0 {
        v if v >= 30.0 => BmiCategory::Obese,
        v if v >= 25.0 => BmiCategory::Overweight,
        _ => BmiCategory::UnderweightOrNormal,
    }
}

pub const WEIGHT_SCALE: &str = "weight";
pub const HEIGHT_SCALE: &str = "height";

/// Ratio-scale bindings for weight and height with independent units.
pub fn body_scales() -> [ScaleBinding; 2] {
    [
        ScaleBinding::independent(WEIGHT_SCALE, ScaleType::Ratio),
        ScaleBinding::independent(HEIGHT_SCALE, ScaleType::Ratio),
    ]
}

/// weight¹·height^(−height_power)
pub fn body_index_scale(height_power: i32) -> DerivedScale {
    DerivedScale::Monomial {
        factors: vec![(WEIGHT_SCALE.into(), 1), (HEIGHT_SCALE.into(), -height_power)],
    }
}

/// BMI of `entity` as a monomial quantity over the weight and height scales,
/// in the metrics' own units.
pub fn bmi_quantity(entity: impl Into<String>, m: &BodyMetrics) -> Quantity {
    Quantity::derived(body_index_scale(2), entity, vec![m.weight, m.height])
}

/// weight + height of `entity`; not an index, only a counterexample fixture.
pub fn weight_plus_height(entity: impl Into<String>, m: &BodyMetrics) -> Quantity {
    Quantity::derived(
        DerivedScale::Sum {
            bases: vec![WEIGHT_SCALE.into(), HEIGHT_SCALE.into()],
        },
        entity,
        vec![m.weight, m.height],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(w: f64, wu: MassUnit, h: f64, hu: LengthUnit) -> BodyMetrics {
        BodyMetrics::new(w, wu, h, hu).unwrap()
    }

    #[test]
    fn bmi_examples() {
        assert_eq!(bmi(&metrics(90.0, MassUnit::Kg, 1.5, LengthUnit::M)).value(), 40.0);
        assert_eq!(bmi(&metrics(75.0, MassUnit::Kg, 2.0, LengthUnit::M)).value(), 18.75);
        let cm = bmi(&metrics(90.0, MassUnit::Kg, 150.0, LengthUnit::Cm)).value();
        assert!((cm - 40.0).abs() < 1e-12);
    }

    #[test]
    fn ponderal_examples() {
        assert_eq!(ponderal(&metrics(80.0, MassUnit::Kg, 2.0, LengthUnit::M)), 10.0);
        assert_eq!(ponderal(&metrics(27.0, MassUnit::Kg, 3.0, LengthUnit::M)), 1.0);
        // height rescaled by 2 (same unit) divides by 8
        let a = ponderal(&metrics(27.0, MassUnit::Kg, 3.0, LengthUnit::M));
        let b = ponderal(&metrics(27.0, MassUnit::Kg, 6.0, LengthUnit::M));
        assert!((a / b - 8.0).abs() < 1e-12);
    }

    #[test]
    fn classify_bands() {
        let c = |v| classify(Bmi::kg_per_m2(v).unwrap());
        assert_eq!(c(30.0), BmiCategory::Obese);
        assert_eq!(c(29.9), BmiCategory::Overweight);
        assert_eq!(c(25.0), BmiCategory::Overweight);
        assert_eq!(c(18.75), BmiCategory::UnderweightOrNormal);
        assert!(Bmi::kg_per_m2(0.0).is_err());
        assert!(Bmi::kg_per_m2(-3.0).is_err());
    }

    #[test]
    fn invalid_metrics() {
        assert!(BodyMetrics::new(0.0, MassUnit::Kg, 1.7, LengthUnit::M).is_err());
        assert!(BodyMetrics::new(70.0, MassUnit::Kg, -1.0, LengthUnit::M).is_err());
        assert!("stone".parse::<MassUnit>().is_err());
        assert_eq!("LB".parse::<MassUnit>().unwrap(), MassUnit::Lb);
    }

    #[test]
    fn unit_retagging_is_invariant() {
        let kg_m = metrics(82.0, MassUnit::Kg, 1.78, LengthUnit::M);
        let lb_in = metrics(82.0 / 0.453_592_37, MassUnit::Lb, 1.78 / 0.0254, LengthUnit::In);
        let g_cm = metrics(82_000.0, MassUnit::G, 178.0, LengthUnit::Cm);
        let base = bmi(&kg_m).value();
        for other in [lb_in, g_cm] {
            assert!((bmi(&other).value() - base).abs() <= 1e-9 * base);
        }
    }
}
