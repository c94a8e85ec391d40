use super::coupling::euclidean;
use super::integrate::{Rk4, TimeGrid};
use super::lorenz::NodeDynamics;
use crate::error::{Error, Result};

const SEPARATION: f64 = 1e-8;

/// Largest Lyapunov exponent by two-trajectory renormalization (Benettin).
///
/// A companion starts `1e-8` away along the diagonal direction; every
/// `renorm_interval` steps its separation is logged and rescaled back.
pub fn estimate_lyapunov<G: NodeDynamics + ?Sized>(
    node: &G,
    initial: &[f64],
    t_total: f64,
    h: f64,
    renorm_interval: usize,
) -> Result<f64> {
    let dim = node.dim();
    if initial.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: initial.len(),
        });
    }
    if renorm_interval == 0 {
        return Err(Error::invalid("renormalization interval must be at least one step"));
    }
    let grid = TimeGrid::covering(0.0, t_total, h)?;
    let mut base = initial.to_vec();
    let offset = SEPARATION / (dim as f64).sqrt();
    let mut companion: Vec<f64> = base.iter().map(|v| v + offset).collect();
    let mut rhs = |_: f64, u: &[f64], out: &mut [f64]| node.rhs(u, out);
    let mut stepper = Rk4::new(dim);

    let mut log_sum = 0.0;
    let mut elapsed = 0.0;
    let mut since = 0.0;
    for m in 1..grid.len {
        let t = grid.time(m - 1);
        let dt = grid.step(m - 1);
        stepper.step(&mut rhs, t, &mut base, dt);
        stepper.step(&mut rhs, t, &mut companion, dt);
        since += dt;
        if base.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged { time: grid.time(m) });
        }
        if m % renorm_interval == 0 || m + 1 == grid.len {
            let d = euclidean(&base, &companion);
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::IntegrationDiverged { time: grid.time(m) });
            }
            log_sum += (d / SEPARATION).ln();
            elapsed += since;
            since = 0.0;
            let scale = SEPARATION / d;
            for (c, b) in companion.iter_mut().zip(&base) {
                *c = b + (*c - b) * scale;
            }
        }
    }
    Ok(log_sum / elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(f64);

    impl NodeDynamics for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, u: &[f64], out: &mut [f64]) {
            out[0] = self.0 * u[0];
        }
    }

    #[test]
    fn linear_exponents() {
        let down = estimate_lyapunov(&Linear(-1.0), &[0.0], 100.0, 0.01, 10).unwrap();
        let up = estimate_lyapunov(&Linear(1.0), &[0.0], 100.0, 0.01, 10).unwrap();
        assert!((down + 1.0).abs() < 0.05, "{down}");
        assert!((up - 1.0).abs() < 0.05, "{up}");
    }

    #[test]
    fn zero_interval_rejected() {
        assert!(estimate_lyapunov(&Linear(1.0), &[0.0], 1.0, 0.01, 0).is_err());
    }
}
