//! Real-axis integration for the real Woods-Saxon step, where flux is conserved.

use num_complex::Complex64;

use super::rk45::{integrate, Rk45Options, State};
use super::{fit_plane_waves, OracleError};
use crate::amplitudes::{AmplitudeSet, GFactors};
use crate::special::SingularValue;
use crate::units::PotentialSpec;

/// Flat-region half-width in units of the diffuseness `1/delta`.
const HALF_WIDTH: f64 = 40.0;

/// Amplitudes of `-v0 / (1 + exp(delta x))` from two plane-wave launches at
/// large positive `x`, fitted on plane waves at large negative `x`.
pub fn hermitian_oracle(v0: f64, delta: f64, mass: f64, energy: f64) -> Result<AmplitudeSet, OracleError> {
    PotentialSpec::new(v0, delta, mass)
        .validate()
        .map_err(crate::amplitudes::AmplitudeError::from)?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(crate::amplitudes::AmplitudeError::NonPositiveEnergy(energy).into());
    }
    let kk1 = 2.0 * (mass * energy).sqrt();
    let kk2 = 2.0 * (mass * (energy + v0)).sqrt();
    let x_end = HALF_WIDTH / delta;
    let rhs = move |x: f64, y: &State| {
        // Written to stay finite for either sign of delta x.
        let v = if x >= 0.0 {
            let e = (-delta * x).exp();
            -v0 * e / (1.0 + e)
        } else {
            -v0 / (1.0 + (delta * x).exp())
        };
        [y[1], y[0] * (-4.0 * mass * (energy - v))]
    };
    let opts = Rk45Options::default();
    let i = Complex64::new(0.0, 1.0);
    let mut g = [Complex64::new(0.0, 0.0); 4];
    for (slot, sign) in [(0usize, -1.0), (2usize, 1.0)] {
        let psi = (i * sign * kk1 * x_end).exp();
        let y0 = [psi, i * sign * kk1 * psi];
        let r = integrate(rhs, x_end, y0, -x_end, &opts)?;
        let fit = fit_plane_waves(r.y[0], r.y[1], Complex64::new(-x_end, 0.0), kk2)?;
        g[slot] = fit.c_plus;
        g[slot + 1] = fit.c_minus;
    }
    let sv = SingularValue::from_complex;
    let gf = GFactors {
        g1: sv(g[0]),
        g2: sv(g[1]),
        g3: sv(g[2]),
        g4: sv(g[3]),
    };
    Ok(AmplitudeSet::from_g_factors(energy, kk1 / kk2, &gf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::hermitian_amplitudes;

    #[test]
    fn conserves_flux_and_matches_closed_form() {
        for (v0, delta, e) in [(1.2, 1.8, 1.0), (3.0, 0.7, 0.4), (0.5, 2.5, 6.0)] {
            let a = hermitian_oracle(v0, delta, 1.0, e).unwrap();
            let r = a.refl_left.value().re;
            let t = a.trans.value().re;
            assert!((r + t - 1.0).abs() < 1e-8, "R + T = {}", r + t);
            let c = hermitian_amplitudes(v0, delta, 1.0, e).unwrap();
            assert!(a.rl.rel_diff(&c.rl) < 1e-6);
            assert!(a.tl.rel_diff(&c.tl) < 1e-6);
        }
    }
}
