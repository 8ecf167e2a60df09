//! Adaptive Dormand-Prince 5(4) for a complex two-component system.

use num_complex::Complex64;

use super::OracleError;

pub type State = [Complex64; 2];

#[derive(Debug, Clone, Copy)]
pub struct Rk45Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub overflow: f64,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Rk45Options {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 2_000_000,
            overflow: 1e120,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rk45Result {
    pub y: State,
    pub steps: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
pub fn integrate<F>(f: F, x0: f64, y0: State, x1: f64, opts: &Rk45Options) -> Result<Rk45Result, OracleError>
where
    F: Fn(f64, &State) -> State,
{
    let dir = (x1 - x0).signum();
    let span = (x1 - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut h = (span / 100.0).max(1e-12) * dir;
    let (mut steps, mut rejected) = (0usize, 0usize);
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
    k[0] = f(x, &y);
    while (x1 - x) * dir > 0.0 {
        if steps + rejected >= opts.max_steps {
            return Err(OracleError::StepLimit(x));
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        for s in 1..7 {
            let mut yt = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..2 {
                    yt[c] += kj[c] * (h * A[s][j]);
                }
            }
            k[s] = f(x + C[s] * h, &yt);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut d5 = Complex64::new(0.0, 0.0);
            let mut d4 = Complex64::new(0.0, 0.0);
            for s in 0..7 {
                d5 += k[s][c] * B5[s];
                d4 += k[s][c] * B4[s];
            }
            y5[c] += d5 * h;
            let sc = opts.atol + opts.rtol * y[c].norm().max(y5[c].norm());
            err = err.max(((d5 - d4) * h).norm() / sc);
        }
        if err <= 1.0 {
            x += h;
            y = y5;
            k[0] = k[6];
            steps += 1;
            if y[0].norm() > opts.overflow {
                return Err(OracleError::Overflow(x));
            }
        } else {
            rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * x.abs().max(1.0) {
            return Err(OracleError::StepUnderflow(x));
        }
    }
    Ok(Rk45Result { y, steps, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_phase() {
        // psi'' = -4 psi, psi = exp(2ix)
        let f = |_x: f64, y: &State| [y[1], y[0] * -4.0];
        let i = Complex64::new(0.0, 1.0);
        let y0 = [Complex64::new(1.0, 0.0), 2.0 * i];
        let r = integrate(f, 0.0, y0, -10.0, &Rk45Options::default()).unwrap();
        let want = (i * -20.0).exp();
        assert!((r.y[0] - want).norm() < 1e-9);
        assert!(r.steps > 10);
    }

    #[test]
    fn overflow_is_reported() {
        let f = |_x: f64, y: &State| [y[1], y[0] * 400.0];
        let y0 = [Complex64::new(1.0, 0.0), Complex64::new(20.0, 0.0)];
        let opts = Rk45Options { overflow: 1e20, ..Default::default() };
        assert!(matches!(integrate(f, 0.0, y0, 100.0, &opts), Err(OracleError::Overflow(_))));
    }
}
