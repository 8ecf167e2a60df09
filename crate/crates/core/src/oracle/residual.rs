//! Finite-difference check of the closed-form solution against the wave equation.

use num_complex::Complex64;

use super::OracleError;
use crate::amplitudes::potential_at;
use crate::special::hyp2f1;
use crate::units::PotentialSpec;

pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// `psi1` in closed form:
/// `u^{a2} (1+u)^{-a2-a3} 2F1(1+a2+a3, a2+a3; 1+2 a2; u/(1+u))`, `u = exp(-i rho xbar)`.
///
/// `zeta` follows the same convention as [`potential_at`]: the forward point is
/// `x - i zeta` and the time-reversed one its mirror `x + i zeta` with conjugated
/// `rho`, so `|u| = exp(-rho zeta)` for both. Only positivity of `rho`, `mass` and `energy` is required; `v0 = 0` is allowed.
pub fn psi_one_closed_form(spec: &PotentialSpec, energy: f64, x: f64, zeta: f64) -> Result<Complex64, OracleError> {
    let (a2, a3, rho) = channel(spec, energy)?;
    let xbar = Complex64::new(x, -zeta * spec.variant.sign());
    let ln_u = Complex64::new(0.0, -rho) * xbar;
    let u = ln_u.exp();
    let w = u / (1.0 + u);
    let c = |v: f64| Complex64::new(v, 0.0);
    let f = hyp2f1(c(1.0 + a2 + a3), c(a2 + a3), c(1.0 + 2.0 * a2), w)?;
    Ok((ln_u * a2 - (1.0 + u).ln() * (a2 + a3)).exp() * f)
}

/// Signed `(a2, a3, rho_eff)` without the positive-depth requirement.
fn channel(spec: &PotentialSpec, energy: f64) -> Result<(f64, f64, f64), OracleError> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(OracleError::InvalidInput("energy must be positive"));
    }
    if !(spec.rho > 0.0 && spec.mass > 0.0 && spec.v0 >= 0.0) {
        return Err(OracleError::InvalidInput("rho and mass must be positive, v0 non-negative"));
    }
    let sign = spec.variant.sign();
    let a2 = 2.0 * (spec.mass * energy).sqrt() / spec.rho;
    let a3 = 2.0 * (spec.mass * (energy + spec.v0)).sqrt() / spec.rho;
    Ok((sign * a2, sign * a3, sign * spec.rho))
}

pub fn wavefunction_residual(spec: &PotentialSpec, energy: f64, samples: &[(f64, f64)]) -> Result<f64, OracleError> {
    wavefunction_residual_with(spec, energy, samples, DEFAULT_FD_STEP)
}

/// `max |psi'' + 4m(E - V) psi| / max |psi|` over the samples, with `psi''` from a
/// five-point stencil along the real direction.
pub fn wavefunction_residual_with(spec: &PotentialSpec, energy: f64, samples: &[(f64, f64)], step: f64) -> Result<f64, OracleError> {
    if !(step > 0.0) || samples.is_empty() {
        return Err(OracleError::InvalidInput("need a positive step and at least one sample"));
    }
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &(x, zeta) in samples {
        let f = |dx: f64| psi_one_closed_form(spec, energy, x + dx, zeta);
        let (m2, m1, z0, p1, p2) = (f(-2.0 * step)?, f(-step)?, f(0.0)?, f(step)?, f(2.0 * step)?);
        let second = (-m2 + 16.0 * m1 - 30.0 * z0 + 16.0 * p1 - p2) / (12.0 * step * step);
        let v = potential_at(spec, x, zeta);
        let r = second + 4.0 * spec.mass * (energy - v) * z0;
        worst = worst.max(r.norm());
        scale = scale.max(z0.norm());
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points() -> Vec<(f64, f64)> {
        vec![(0.0, 0.0), (0.3, 0.15), (-0.4, -0.15), (0.5, 0.0), (-0.2, 0.1)]
    }

    #[test]
    fn closed_form_solves_wave_equation() {
        let spec = PotentialSpec::new(1.2, 1.8, 1.0);
        assert!(wavefunction_residual(&spec, 1.0, &points()).unwrap() < 1e-6);
        let r = wavefunction_residual(&spec.partner(), 1.0, &points()).unwrap();
        assert!(r < 1e-6);
    }

    #[test]
    fn free_motion_is_plane_wave() {
        let spec = PotentialSpec::new(0.0, 1.8, 1.0);
        let r = wavefunction_residual_with(&spec, 0.1, &points(), 1e-2).unwrap();
        assert!(r < 1e-10, "{r}");
        let psi = psi_one_closed_form(&spec, 0.1, 0.7, 0.0).unwrap();
        let want = Complex64::new(0.0, -2.0 * 0.1f64.sqrt() * 0.7).exp();
        assert!((psi - want).norm() < 1e-14);
    }

    #[test]
    fn step_halving_follows_stencil_order() {
        let spec = PotentialSpec::new(1.2, 1.8, 1.0);
        let coarse = wavefunction_residual_with(&spec, 1.0, &points(), 0.1).unwrap();
        let fine = wavefunction_residual_with(&spec, 1.0, &points(), 0.05).unwrap();
        let ratio = coarse / fine;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rejects_points_outside_series_disc() {
        let spec = PotentialSpec::new(1.2, 1.8, 1.0);
        assert!(matches!(
            wavefunction_residual(&spec, 1.0, &[(0.0, -3.0)]),
            Err(OracleError::Special(_))
        ));
    }
}
