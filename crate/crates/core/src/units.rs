//! Natural units with ħ = m = η = 1.
//!
//! Everything inside the crate works in these units. A [`PhysicalScale`]
//! converts to and from dimensioned values at the program boundary:
//! time is measured in mη²/ħ, length in η, velocity in ħ/(mη), and the
//! point-detector coupling κ through the dimensionless α = mηκ/ħ.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScale {
    pub hbar: f64,
    pub mass: f64,
    /// Packet width scale η.
    pub eta: f64,
}

impl PhysicalScale {
    pub fn new(hbar: f64, mass: f64, eta: f64) -> Result<Self> {
        for (name, value) in [("hbar", hbar), ("mass", mass), ("eta", eta)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {value}")));
            }
        }
        Ok(Self { hbar, mass, eta })
    }

    /// ħ = m = η = 1.
    pub fn natural() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            eta: 1.0,
        }
    }

    pub fn time_unit(&self) -> f64 {
        self.mass * self.eta * self.eta / self.hbar
    }

    pub fn length_unit(&self) -> f64 {
        self.eta
    }

    pub fn velocity_unit(&self) -> f64 {
        self.hbar / (self.mass * self.eta)
    }

    /// Coupling κ that corresponds to α = 1.
    pub fn coupling_unit(&self) -> f64 {
        self.hbar / (self.mass * self.eta)
    }

    pub fn unit_of(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Time => self.time_unit(),
            Dimension::Length => self.length_unit(),
            Dimension::Velocity => self.velocity_unit(),
            Dimension::Coupling => self.coupling_unit(),
        }
    }
}

impl Default for PhysicalScale {
    fn default() -> Self {
        Self::natural()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Time,
    Length,
    Velocity,
    /// Detector coupling κ; its natural-unit value is α.
    Coupling,
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "time" | "t" => Ok(Self::Time),
            "length" | "position" | "x" => Ok(Self::Length),
            "velocity" | "v" => Ok(Self::Velocity),
            "coupling" | "coupling-rate" | "kappa" => Ok(Self::Coupling),
            other => Err(Error::UnsupportedDimension(other.to_string())),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Time => "time",
            Self::Length => "length",
            Self::Velocity => "velocity",
            Self::Coupling => "coupling",
        };
        f.write_str(name)
    }
}

/// A dimensioned value in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

impl Quantity {
    pub fn new(value: f64, dimension: Dimension) -> Self {
        Self { value, dimension }
    }
}

pub fn to_natural(scale: &PhysicalScale, quantity: Quantity) -> Result<f64> {
    if !quantity.value.is_finite() {
        return Err(invalid(format!("non-finite {} value", quantity.dimension)));
    }
    Ok(quantity.value / scale.unit_of(quantity.dimension))
}

pub fn from_natural(scale: &PhysicalScale, value: f64, dimension: Dimension) -> Quantity {
    Quantity::new(value * scale.unit_of(dimension), dimension)
}

/// α = mηκ/ħ.
pub fn alpha_from_kappa(scale: &PhysicalScale, kappa: f64) -> Result<f64> {
    to_natural(scale, Quantity::new(kappa, Dimension::Coupling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn optimal_kappa_maps_to_alpha() {
        let scale = PhysicalScale::new(1.054_571_817e-34, 1.67e-27, 2.0e-9).unwrap();
        let kappa = 1.3216 * scale.hbar / (scale.mass * scale.eta);
        let alpha = alpha_from_kappa(&scale, kappa).unwrap();
        assert!((alpha - 1.3216).abs() < 1e-12);
    }

    #[test]
    fn caption_velocity_is_two() {
        let scale = PhysicalScale::new(2.0, 3.0, 0.5).unwrap();
        let v = 2.0 * scale.hbar / (scale.mass * scale.eta);
        let v_nat = to_natural(&scale, Quantity::new(v, Dimension::Velocity)).unwrap();
        assert!((v_nat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eta_is_unit_length() {
        let scale = PhysicalScale::new(1.0, 4.0, 7.5).unwrap();
        let x = to_natural(&scale, Quantity::new(7.5, Dimension::Length)).unwrap();
        assert_eq!(x, 1.0);
    }

    #[test]
    fn rejects_unknown_dimension() {
        assert!(matches!(
            "mass".parse::<Dimension>(),
            Err(Error::UnsupportedDimension(_))
        ));
        assert_eq!("velocity".parse::<Dimension>().unwrap(), Dimension::Velocity);
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert!(PhysicalScale::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalScale::new(1.0, -1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            hbar in 1e-3f64..1e3, mass in 1e-3f64..1e3, eta in 1e-3f64..1e3,
            value in -1e6f64..1e6, which in 0usize..4,
        ) {
            let scale = PhysicalScale::new(hbar, mass, eta).unwrap();
            let dim = [Dimension::Time, Dimension::Length, Dimension::Velocity, Dimension::Coupling][which];
            let nat = to_natural(&scale, Quantity::new(value, dim)).unwrap();
            let back = from_natural(&scale, nat, dim);
            prop_assert!((back.value - value).abs() <= 1e-12 * value.abs().max(1e-300));
        }
    }
}
