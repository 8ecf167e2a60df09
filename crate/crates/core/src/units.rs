//! Physical parameter records and unit conversions.
//!
//! Internal units are atomic-style (Hartree, bohr, electron mass) with the
//! dispersion convention `k = sqrt(m E)`. Display units are eV / MeV for
//! energies and nm for lengths.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// eV per internal energy unit.
pub const HARTREE_EV: f64 = 27.2114;

/// nm per internal length unit.
pub const BOHR_NM: f64 = 0.0529177;

/// Which member of the time-reversal pair is being described.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `V(x) = -v0 / (1 + exp(i rho x))`
    Forward,
    /// The complex conjugate potential; amplitudes follow from `a2 -> -a2, a3 -> -a3`.
    TimeReversed,
}

impl Variant {
    /// Sign applied to the channel parameters `a2`, `a3`.
    pub fn sign(self) -> f64 {
        match self {
            Variant::Forward => 1.0,
            Variant::TimeReversed => -1.0,
        }
    }

    pub fn partner(self) -> Variant {
        match self {
            Variant::Forward => Variant::TimeReversed,
            Variant::TimeReversed => Variant::Forward,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Forward => f.write_str("forward"),
            Variant::TimeReversed => f.write_str("time_reversed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("v0 must be positive")]
    NonPositiveDepth,
    #[error("rho must be positive")]
    NonPositiveShape,
    #[error("mass must be positive")]
    NonPositiveMass,
    #[error("{0} must be finite")]
    NonFinite(&'static str),
}

/// Physical parameters of the complexified Woods-Saxon potential.
///
/// `zeta` (the imaginary shift of the coordinate) only enters potential
/// sampling; scattering amplitudes never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub v0: f64,
    pub rho: f64,
    pub mass: f64,
    pub zeta: f64,
    pub variant: Variant,
}

impl PotentialSpec {
    /// Forward-variant spec with `zeta = 0`. Not validated.
    pub fn new(v0: f64, rho: f64, mass: f64) -> Self {
        PotentialSpec {
            v0,
            rho,
            mass,
            zeta: 0.0,
            variant: Variant::Forward,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    /// The time-reversal partner of this spec.
    pub fn partner(self) -> Self {
        self.with_variant(self.variant.partner())
    }

    /// Returns the spec unchanged if every field is in range.
    pub fn validate(self) -> Result<Self, ParamError> {
        for (name, value) in [
            ("v0", self.v0),
            ("rho", self.rho),
            ("mass", self.mass),
            ("zeta", self.zeta),
        ] {
            if !value.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        if self.v0 <= 0.0 {
            return Err(ParamError::NonPositiveDepth);
        }
        if self.rho <= 0.0 {
            return Err(ParamError::NonPositiveShape);
        }
        if self.mass <= 0.0 {
            return Err(ParamError::NonPositiveMass);
        }
        Ok(self)
    }

    /// `rho^2 / (16 m)`, the energy quantum of every closed-form level family.
    pub fn level_unit(&self) -> f64 {
        self.rho * self.rho / (16.0 * self.mass)
    }

    /// Diffuseness `a = 1/rho` in internal length units.
    pub fn diffuseness(&self) -> f64 {
        1.0 / self.rho
    }

    /// Display-only radius `r0 = pi a`. Amplitudes always use `q = 1`.
    pub fn display_radius(&self) -> f64 {
        std::f64::consts::PI * self.diffuseness()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyScale {
    Internal,
    ElectronVolt,
    MegaElectronVolt,
}

impl EnergyScale {
    /// Internal units per one unit of this scale.
    fn internal_per_unit(self) -> f64 {
        match self {
            EnergyScale::Internal => 1.0,
            EnergyScale::ElectronVolt => 1.0 / HARTREE_EV,
            EnergyScale::MegaElectronVolt => 1.0e6 / HARTREE_EV,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EnergyScale::Internal => "Eh",
            EnergyScale::ElectronVolt => "eV",
            EnergyScale::MegaElectronVolt => "MeV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthScale {
    Internal,
    Nanometer,
}

impl LengthScale {
    fn internal_per_unit(self) -> f64 {
        match self {
            LengthScale::Internal => 1.0,
            LengthScale::Nanometer => 1.0 / BOHR_NM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitSystem {
    pub energy_scale: EnergyScale,
    pub length_scale: LengthScale,
}

impl UnitSystem {
    pub const INTERNAL: UnitSystem = UnitSystem {
        energy_scale: EnergyScale::Internal,
        length_scale: LengthScale::Internal,
    };
    pub const EV_NM: UnitSystem = UnitSystem {
        energy_scale: EnergyScale::ElectronVolt,
        length_scale: LengthScale::Nanometer,
    };
    pub const MEV_NM: UnitSystem = UnitSystem {
        energy_scale: EnergyScale::MegaElectronVolt,
        length_scale: LengthScale::Nanometer,
    };
}

pub fn convert_energy(value: f64, from: UnitSystem, to: UnitSystem) -> f64 {
    if from.energy_scale == to.energy_scale {
        return value;
    }
    value * from.energy_scale.internal_per_unit() / to.energy_scale.internal_per_unit()
}

pub fn convert_length(value: f64, from: UnitSystem, to: UnitSystem) -> f64 {
    if from.length_scale == to.length_scale {
        return value;
    }
    value * from.length_scale.internal_per_unit() / to.length_scale.internal_per_unit()
}

/// Convenience: internal energy to the given display scale.
pub fn energy_to(value: f64, scale: EnergyScale) -> f64 {
    convert_energy(
        value,
        UnitSystem::INTERNAL,
        UnitSystem {
            energy_scale: scale,
            length_scale: LengthScale::Internal,
        },
    )
}

/// Potential parameters as they appear in a display table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplayParams {
    pub v0: f64,
    pub a_nm: f64,
    pub r0_nm: f64,
}

pub fn display_params(spec: &PotentialSpec, energy_scale: EnergyScale) -> DisplayParams {
    let to_nm = |l: f64| convert_length(l, UnitSystem::INTERNAL, UnitSystem::EV_NM);
    DisplayParams {
        v0: energy_to(spec.v0, energy_scale),
        a_nm: to_nm(spec.diffuseness()),
        r0_nm: to_nm(spec.display_radius()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn energy_examples() {
        let ev = convert_energy(1.2, UnitSystem::INTERNAL, UnitSystem::EV_NM);
        assert!((ev - 32.65).abs() < 0.005, "{ev}");
        assert_eq!(convert_energy(0.0, UnitSystem::INTERNAL, UnitSystem::EV_NM), 0.0);
        let mev = convert_energy(5.5e6, UnitSystem::INTERNAL, UnitSystem::MEV_NM);
        assert!((mev - 149.66).abs() < 0.005, "{mev}");
        assert!(rel(mev, 150.0) < 0.005);
    }

    #[test]
    fn length_examples() {
        let nm = |x| convert_length(x, UnitSystem::INTERNAL, UnitSystem::EV_NM);
        assert!((nm(1.0 / 1.8) - 0.0294).abs() < 5e-5);
        assert!((nm(1.0 / 60.0) - 0.00088).abs() < 5e-6);
        assert!((nm(1.0) - BOHR_NM).abs() < 1e-16);
    }

    #[test]
    fn validation_errors_are_distinct() {
        assert!(PotentialSpec::new(1.2, 1.8, 1.0).validate().is_ok());
        let e = PotentialSpec::new(-1.0, 1.0, 1.0).validate().unwrap_err();
        assert_eq!(e.to_string(), "v0 must be positive");
        let e = PotentialSpec::new(1.0, 0.0, 1.0).validate().unwrap_err();
        assert_eq!(e.to_string(), "rho must be positive");
        let e = PotentialSpec::new(1.0, 1.0, 0.0).validate().unwrap_err();
        assert_eq!(e, ParamError::NonPositiveMass);
        let e = PotentialSpec::new(1.0, f64::NAN, 1.0).validate().unwrap_err();
        assert_eq!(e, ParamError::NonFinite("rho"));
        let e = PotentialSpec::new(1.0, 1.0, 1.0)
            .with_zeta(f64::INFINITY)
            .validate()
            .unwrap_err();
        assert_eq!(e, ParamError::NonFinite("zeta"));
    }

    // Table rows: (v0 display, a nm, r0 nm, caption v0, caption rho, v0 scale).
    // The printed a and r0 columns are rounded, so each is checked to within
    // one unit of its last printed digit or 0.5%, whichever is looser.
    #[test]
    fn table_parameter_rows_match_captions() {
        let rows: [(f64, f64, f64, u32, u32, f64, f64, EnergyScale); 5] = [
            (32.65, 0.029, 0.093, 3, 3, 1.2, 1.8, EnergyScale::ElectronVolt),
            (27.2, 88.3, 277.5, 1, 1, 1.0, 0.0006, EnergyScale::ElectronVolt),
            (150.0, 0.0009, 0.003, 4, 3, 5.5e6, 60.0, EnergyScale::MegaElectronVolt),
            (54.41, 0.02, 0.08, 2, 2, 2.0, 2.0, EnergyScale::ElectronVolt),
            (408.01, 53.0, 166.5, 0, 1, 15.0, 0.000998, EnergyScale::ElectronVolt),
        ];
        for (v0_d, a_d, r0_d, a_dec, r0_dec, v0, rho, scale) in rows {
            let spec = PotentialSpec::new(v0, rho, 1.0);
            let d = display_params(&spec, scale);
            assert!(rel(d.v0, v0_d) < 0.005, "v0 {} vs {}", d.v0, v0_d);
            let ok = |got: f64, printed: f64, dec: u32| {
                (got - printed).abs() <= 10f64.powi(-(dec as i32)) || rel(got, printed) < 0.005
            };
            assert!(ok(d.a_nm, a_d, a_dec), "a {} vs {}", d.a_nm, a_d);
            assert!(ok(d.r0_nm, r0_d, r0_dec), "r0 {} vs {}", d.r0_nm, r0_d);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn systems() -> impl Strategy<Value = UnitSystem> {
            let e = prop_oneof![
                Just(EnergyScale::Internal),
                Just(EnergyScale::ElectronVolt),
                Just(EnergyScale::MegaElectronVolt)
            ];
            let l = prop_oneof![Just(LengthScale::Internal), Just(LengthScale::Nanometer)];
            (e, l).prop_map(|(energy_scale, length_scale)| UnitSystem {
                energy_scale,
                length_scale,
            })
        }

        proptest! {
            #[test]
            fn conversions_round_trip(x in -1e12f64..1e12, a in systems(), b in systems()) {
                let e = convert_energy(convert_energy(x, a, b), b, a);
                let l = convert_length(convert_length(x, a, b), b, a);
                let tol = 1e-12 * x.abs().max(f64::MIN_POSITIVE);
                prop_assert!((e - x).abs() <= tol);
                prop_assert!((l - x).abs() <= tol);
            }
        }
    }
}
