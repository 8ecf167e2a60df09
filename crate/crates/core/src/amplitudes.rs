//! Closed-form scattering amplitudes from Gamma-function connection
//! coefficients.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::special::{gamma_term, log_gamma, Difference, SingularValue};
use crate::units::{ParamError, PotentialSpec, Variant};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplitudeError {
    #[error("energy must be positive and finite, got {0}")]
    NonPositiveEnergy(f64),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Per-energy channel quantities. For the time-reversed variant `a2`, `a3`
/// (and their energy slopes) carry a negative sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    pub energy: f64,
    pub k1: f64,
    pub k2: f64,
    pub a2: f64,
    pub a3: f64,
    pub variant: Variant,
}

impl ChannelParams {
    /// `da2/dE`, signed like `a2`.
    pub fn a2_slope(&self) -> f64 {
        self.a2 / (2.0 * self.energy)
    }

    /// `da3/dE`, signed like `a3`. Uses `E + v0 = E k2^2 / k1^2`.
    pub fn a3_slope(&self) -> f64 {
        let ratio = self.k1 / self.k2;
        self.a3 * ratio * ratio / (2.0 * self.energy)
    }
}

pub fn channel_params(spec: &PotentialSpec, energy: f64) -> Result<ChannelParams, AmplitudeError> {
    let spec = spec.validate()?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(AmplitudeError::NonPositiveEnergy(energy));
    }
    let k1 = (spec.mass * energy).sqrt();
    let k2 = (spec.mass * (energy + spec.v0)).sqrt();
    let sign = spec.variant.sign();
    Ok(ChannelParams {
        energy,
        k1,
        k2,
        a2: sign * 2.0 * k1 / spec.rho,
        a3: sign * 2.0 * k2 / spec.rho,
        variant: spec.variant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GFactors {
    pub g1: SingularValue,
    pub g2: SingularValue,
    pub g3: SingularValue,
    pub g4: SingularValue,
}

/// Connection coefficients at the (signed) channel parameters.
pub fn g_factors(ch: &ChannelParams) -> GFactors {
    g_factors_raw(ch.a2, ch.a3, ch.a2_slope(), ch.a3_slope())
}

/// Connection coefficients for arbitrary real `a2`, `a3` moving with the
/// given energy slopes (the slopes only matter at poles).
pub fn g_factors_raw(a2: f64, a3: f64, s2: f64, s3: f64) -> GFactors {
    let g = gamma_term;
    let num_p = g(1.0 + 2.0 * a2, 2.0 * s2);
    let num_m = g(1.0 - 2.0 * a2, -2.0 * s2);
    let big_p = g(2.0 * a3, 2.0 * s3);
    let big_m = g(-2.0 * a3, -2.0 * s3);
    let ratio = |x: f64, s: f64| g(x, s) * g(1.0 + x, s);
    GFactors {
        g1: num_p * big_m / ratio(a2 - a3, s2 - s3),
        g2: num_p * big_p / ratio(a2 + a3, s2 + s3),
        g3: num_m * big_m / ratio(-a2 - a3, -s2 - s3),
        g4: num_m * big_p / ratio(a3 - a2, s3 - s2),
    }
}

fn ln_gamma_finite(z: Complex64) -> SingularValue {
    // Purely imaginary channel parameters never reach a pole.
    SingularValue::from_ln(log_gamma(z).expect("complex argument off the real axis"))
}

/// Connection coefficients at complex channel parameters (Hermitian case).
pub fn g_factors_complex(a2: Complex64, a3: Complex64) -> GFactors {
    let g = ln_gamma_finite;
    let one = Complex64::new(1.0, 0.0);
    let num_p = g(one + 2.0 * a2);
    let num_m = g(one - 2.0 * a2);
    let big_p = g(2.0 * a3);
    let big_m = g(-2.0 * a3);
    let ratio = |x: Complex64| g(x) * g(one + x);
    GFactors {
        g1: num_p * big_m / ratio(a2 - a3),
        g2: num_p * big_p / ratio(a2 + a3),
        g3: num_m * big_m / ratio(-a2 - a3),
        g4: num_m * big_p / ratio(a3 - a2),
    }
}

/// Reflection/transmission amplitudes, their squared magnitudes and the
/// S-matrix determinant at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSet {
    pub energy: f64,
    pub rl: SingularValue,
    pub rr: SingularValue,
    pub tl: SingularValue,
    pub tr: SingularValue,
    /// `|rl|^2`
    pub refl_left: SingularValue,
    /// `|rr|^2`
    pub refl_right: SingularValue,
    /// `|t|^2`
    pub trans: SingularValue,
    /// Closed form `G2/G3` at the signed parameters.
    pub det_s: SingularValue,
    /// `tl tr - rl rr` by leading-order algebra.
    pub det_s_direct: Difference,
}

impl AmplitudeSet {
    /// Assembles amplitudes from connection coefficients; `k_ratio = k1/k2`.
    pub fn from_g_factors(energy: f64, k_ratio: f64, g: &GFactors) -> Self {
        let rl = g.g4 / g.g3;
        let t = g.g3.recip().scale(k_ratio.sqrt());
        let rr = (g.g1 / g.g3).neg();
        let det_s = g.g2 / g.g3;
        let det_s_direct = (t * t).sub(rl * rr);
        AmplitudeSet {
            energy,
            rl,
            rr,
            tl: t,
            tr: t,
            refl_left: rl.norm_sqr(),
            refl_right: rr.norm_sqr(),
            trans: t.norm_sqr(),
            det_s,
            det_s_direct,
        }
    }

    /// Whether the direct and closed-form determinants agree to `rel_tol`.
    /// A cancelled leading term agrees when the closed form vanishes at least
    /// to that order.
    pub fn det_s_consistent(&self, rel_tol: f64) -> bool {
        match self.det_s_direct {
            Difference::Value(v) => v.kind == self.det_s.kind && v.rel_diff(&self.det_s) <= rel_tol,
            Difference::Cancelled { min_order } => self.det_s.order() >= min_order,
        }
    }
}

pub fn amplitudes(spec: &PotentialSpec, energy: f64) -> Result<AmplitudeSet, AmplitudeError> {
    let ch = channel_params(spec, energy)?;
    Ok(AmplitudeSet::from_g_factors(energy, ch.k1 / ch.k2, &g_factors(&ch)))
}

/// S-matrix determinant: `G2/G3` forward, `G3/G2` time-reversed (in terms of
/// the forward coefficients).
pub fn det_s(spec: &PotentialSpec, energy: f64) -> Result<SingularValue, AmplitudeError> {
    let ch = channel_params(spec, energy)?;
    let g = g_factors(&ch);
    Ok(g.g2 / g.g3)
}

/// Amplitudes of the real Woods-Saxon step `-v0 / (1 + exp(delta x))`, using
/// purely imaginary channel parameters.
pub fn hermitian_amplitudes(v0: f64, delta: f64, mass: f64, energy: f64) -> Result<AmplitudeSet, AmplitudeError> {
    PotentialSpec::new(v0, delta, mass).validate()?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(AmplitudeError::NonPositiveEnergy(energy));
    }
    let k1 = (mass * energy).sqrt();
    let k2 = (mass * (energy + v0)).sqrt();
    let a2 = Complex64::new(0.0, 2.0 * k1 / delta);
    let a3 = Complex64::new(0.0, 2.0 * k2 / delta);
    Ok(AmplitudeSet::from_g_factors(energy, k1 / k2, &g_factors_complex(a2, a3)))
}

/// Samples the complex potential along `x - i zeta` for each `zeta`.
pub fn potential_profile(spec: &PotentialSpec, x: f64, zeta_grid: &[f64]) -> Vec<Complex64> {
    zeta_grid
        .iter()
        .map(|&zeta| potential_at(spec, x, zeta))
        .collect()
}

/// `-v0 / (1 + e^{rho zeta} e^{i rho x})`, conjugated for the time-reversed variant.
pub fn potential_at(spec: &PotentialSpec, x: f64, zeta: f64) -> Complex64 {
    let (rz, rx) = (spec.rho * zeta, spec.rho * x);
    let v = if rz <= 0.0 {
        let w = Complex64::from_polar(rz.exp(), rx);
        -spec.v0 / (1.0 + w)
    } else {
        let w = Complex64::from_polar((-rz).exp(), -rx);
        -spec.v0 * w / (1.0 + w)
    };
    match spec.variant {
        Variant::Forward => v,
        Variant::TimeReversed => v.conj(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::Kind;

    fn table_spec() -> PotentialSpec {
        PotentialSpec::new(1.2, 1.8, 1.0)
    }

    #[test]
    fn channel_params_examples() {
        let ch = channel_params(&table_spec(), 0.6225).unwrap();
        assert!((ch.a3 - 1.5).abs() < 1e-12);
        assert!(0.0 < ch.a2 && ch.a2 < ch.a3);
        let tr = channel_params(&table_spec().with_variant(Variant::TimeReversed), 0.6225).unwrap();
        assert!((tr.a3 + 1.5).abs() < 1e-12);
        let tiny = channel_params(&table_spec(), 1e-16).unwrap();
        assert!(tiny.a2 < 1e-7);
        assert!((tiny.a3 - 2.0 / 1.8 * 1.2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            channel_params(&table_spec(), 0.0),
            Err(AmplitudeError::NonPositiveEnergy(_))
        ));
        assert!(matches!(
            channel_params(&PotentialSpec::new(-1.0, 1.0, 1.0), 1.0),
            Err(AmplitudeError::Param(ParamError::NonPositiveDepth))
        ));
    }

    #[test]
    fn g_factor_examples() {
        let g = g_factors_raw(0.7, 0.7, 1.0, 0.5);
        assert_eq!(g.g1.kind, Kind::Zero(1));
        let g = g_factors_raw(0.5, 1.0, 1.0, 0.5);
        assert_eq!(g.g2.kind, Kind::Finite);
        assert!((g.g2.coefficient().re - 0.848_826_363_156_775_124).abs() < 1e-14);
        let ch = channel_params(&table_spec(), 0.6225).unwrap();
        assert!((ch.a2 - 0.876_65).abs() < 1e-4);
        assert!(g_factors(&ch).g3.kind.is_pole());
    }

    #[test]
    fn cc_left_point_forward_and_reversed() {
        let f = amplitudes(&table_spec(), 0.6225).unwrap();
        assert!(f.rl.kind.is_zero());
        assert!(f.tl.kind.is_zero());
        assert_eq!(f.rr.kind, Kind::Finite);
        let r = amplitudes(&table_spec().with_variant(Variant::TimeReversed), 0.6225).unwrap();
        assert!(r.refl_left.kind.is_pole());
        assert!(f.det_s_consistent(1e-10));
        assert!(r.det_s_consistent(1e-10));
    }

    #[test]
    fn det_s_forward_times_reversed_is_one() {
        let spec = table_spec();
        for e in [0.3, 1.0, 2.7, 9.1] {
            let f = det_s(&spec, e).unwrap();
            let r = det_s(&spec.partner(), e).unwrap();
            let p = f * r;
            assert_eq!(p.kind, Kind::Finite);
            assert!(p.log_magnitude.abs() < 1e-12 && p.phase.abs() < 1e-12);
        }
        // 2a3 = 3 makes G3 a pole.
        assert!(det_s(&spec, 0.6225).unwrap().kind.is_zero());
    }

    #[test]
    fn hermitian_examples() {
        let a = hermitian_amplitudes(1.2, 1.8, 1.0, 0.7).unwrap();
        let sum = a.refl_left.coefficient().re + a.trans.coefficient().re;
        assert!((sum - 1.0).abs() < 1e-10);
        assert!((a.rl.log_magnitude - a.rr.log_magnitude).abs() < 1e-10);
        assert!(a.det_s.log_magnitude.abs() < 1e-10);
        let hi = hermitian_amplitudes(1.2, 1.8, 1.0, 1.2e4).unwrap();
        assert!(hi.trans.coefficient().re > 0.99);
        assert!(hi.refl_left.coefficient().re < 0.01);
    }

    #[test]
    fn hermitian_conjugate_pairs() {
        let a2 = Complex64::new(0.0, 0.8);
        let a3 = Complex64::new(0.0, 1.7);
        let g = g_factors_complex(a2, a3);
        assert!(g.g1.conj().rel_diff(&g.g4) < 1e-10);
        assert!(g.g2.conj().rel_diff(&g.g3) < 1e-10);
    }

    #[test]
    fn potential_profile_examples() {
        let spec = table_spec();
        let v = potential_profile(&spec, 0.0, &[0.0, 400.0, -400.0]);
        assert!((v[0] - Complex64::new(-0.6, 0.0)).norm() < 1e-15);
        assert!(v[1].norm() < 1e-100);
        assert!((v[2] + 1.2).norm() < 1e-100);
        let grid: Vec<f64> = (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect();
        let curve = potential_profile(&spec, 2.0, &grid);
        assert!((curve[0].re + 1.2).abs() < 0.01);
        assert!(curve[80].re.abs() < 0.01);
        assert!(curve[0].im.abs() < 0.01 && curve[80].im.abs() < 0.01);
        let tr = potential_profile(&spec.partner(), 2.0, &grid);
        for (a, b) in curve.iter().zip(&tr) {
            assert_eq!(*a, b.conj());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn generic(x: f64) -> bool {
            (x - x.round()).abs() > 1e-3
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn gamma_identity(a2 in 0.01f64..20.0, a3 in 0.01f64..20.0) {
                prop_assume!(generic(2.0 * a2) && generic(2.0 * a3));
                prop_assume!(generic(a2 + a3) && generic(a2 - a3));
                // k1/k2 = a2/a3 for any consistent spec.
                let g = g_factors_raw(a2, a3, 1.0, 1.0);
                let lhs = g.g4 * g.g1;
                let rhs = g.g2 * g.g3;
                let sum = lhs.coefficient() + a2 / a3;
                let err = (sum / rhs.coefficient() - 1.0).norm();
                prop_assert!(err < 1e-9, "err {}", err);
            }

            #[test]
            fn channel_invariant(v0 in 0.1f64..10.0, rho in 0.1f64..5.0, m in 0.2f64..3.0, e in 1e-3f64..50.0, rev in any::<bool>()) {
                let mut spec = PotentialSpec::new(v0, rho, m);
                if rev { spec = spec.partner(); }
                let ch = channel_params(&spec, e).unwrap();
                let lhs = ch.a3 * ch.a3 - ch.a2 * ch.a2;
                let rhs = 4.0 * m * v0 / (rho * rho);
                prop_assert!(((lhs - rhs) / rhs).abs() < 1e-10);
            }

            #[test]
            fn det_s_routes_agree(v0 in 0.2f64..8.0, rho in 0.3f64..4.0, e in 0.01f64..30.0, rev in any::<bool>()) {
                let mut spec = PotentialSpec::new(v0, rho, 1.0);
                if rev { spec = spec.partner(); }
                let ch = channel_params(&spec, e).unwrap();
                // The direct route loses ~eps/d^2 within d of a critical integer.
                for x in [2.0 * ch.a2, 2.0 * ch.a3, ch.a2 + ch.a3, ch.a3 - ch.a2] {
                    prop_assume!((x - x.round()).abs() > 1e-2);
                }
                let a = amplitudes(&spec, e).unwrap();
                prop_assert!(a.det_s_consistent(1e-10), "{:?} vs {:?}", a.det_s_direct, a.det_s);
                prop_assert_eq!(a.tl, a.tr);
                prop_assert!((a.refl_left.log_magnitude - a.refl_right.log_magnitude).abs() > 1e-8);
            }

            #[test]
            fn zeta_does_not_enter(v0 in 0.2f64..8.0, rho in 0.3f64..4.0, e in 0.01f64..30.0) {
                let base = PotentialSpec::new(v0, rho, 1.0);
                let a = amplitudes(&base.with_zeta(-2.0), e).unwrap();
                prop_assert_eq!(a, amplitudes(&base.with_zeta(0.0), e).unwrap());
                prop_assert_eq!(a, amplitudes(&base.with_zeta(3.0), e).unwrap());
            }

            #[test]
            fn hermitian_unitarity(v0 in 0.1f64..10.0, delta in 0.2f64..5.0, e in 0.01f64..50.0) {
                let a = hermitian_amplitudes(v0, delta, 1.0, e).unwrap();
                let sum = a.refl_left.coefficient().re + a.trans.coefficient().re;
                prop_assert!((sum - 1.0).abs() < 1e-10, "{}", sum);
                prop_assert!((a.rl.log_magnitude - a.rr.log_magnitude).abs() < 1e-10);
                prop_assert!(a.det_s.log_magnitude.abs() < 1e-10);
            }
        }
    }
}
