use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side of an autonomous `n`-dimensional node system.
pub trait NodeDynamics: Sync {
    fn dim(&self) -> usize;

    /// Writes `g(u)` into `out`; both slices have length `dim()`.
    fn rhs(&self, u: &[f64], out: &mut [f64]);
}

/// Lorenz oscillator parameters `(delta, gamma, beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub delta: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    /// The non-chaotic configuration used for flexibility analysis.
    fn default() -> Self {
        Self {
            delta: 1.0,
            gamma: 12.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl LorenzParams {
    pub fn new(delta: f64, gamma: f64, beta: f64) -> Result<Self> {
        let params = Self { delta, gamma, beta };
        params.validate()?;
        Ok(params)
    }

    /// The classic chaotic regime (10, 28, 8/3).
    pub fn chaotic() -> Self {
        Self {
            delta: 10.0,
            gamma: 28.0,
            beta: 8.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.gamma.is_finite() && self.beta.is_finite()) {
            return Err(Error::invalid("Lorenz parameters must be finite"));
        }
        if self.beta <= 0.0 {
            return Err(Error::invalid("Lorenz beta must be positive"));
        }
        Ok(())
    }

    /// Equilibria of the uncoupled oscillator: the origin, plus the symmetric
    /// pair `(±√(β(γ−1)), ±√(β(γ−1)), γ−1)` when `γ > 1`.
    pub fn fixed_points(&self) -> Vec<[f64; 3]> {
        let mut points = vec![[0.0; 3]];
        if self.gamma > 1.0 {
            let r = (self.beta * (self.gamma - 1.0)).sqrt();
            points.push([r, r, self.gamma - 1.0]);
            points.push([-r, -r, self.gamma - 1.0]);
        }
        points
    }
}

pub fn lorenz_rhs(state: [f64; 3], params: &LorenzParams) -> [f64; 3] {
    let [x, y, z] = state;
    [
        params.delta * (y - x),
        x * (params.gamma - z) - y,
        x * y - params.beta * z,
    ]
}

impl NodeDynamics for LorenzParams {
    fn dim(&self) -> usize {
        3
    }

    #[inline]
    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        let g = lorenz_rhs([u[0], u[1], u[2]], self);
        out[..3].copy_from_slice(&g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_fixed() {
        for p in [LorenzParams::default(), LorenzParams::chaotic()] {
            assert_eq!(lorenz_rhs([0.0; 3], &p), [0.0; 3]);
        }
    }

    #[test]
    fn unit_state_direct_evaluation() {
        let g = lorenz_rhs([1.0, 1.0, 1.0], &LorenzParams::chaotic());
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 26.0);
        assert!((g[2] - (1.0 - 8.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn z_axis_symmetry() {
        let p = LorenzParams::chaotic();
        let s = [1.3, -0.7, 4.2];
        let [a, b, c] = lorenz_rhs(s, &p);
        let m = lorenz_rhs([-s[0], -s[1], s[2]], &p);
        assert_eq!(m, [-a, -b, c]);
    }

    #[test]
    fn fixed_points_are_equilibria() {
        let p = LorenzParams::default();
        for fp in p.fixed_points() {
            let g = lorenz_rhs(fp, &p);
            assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
        }
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(LorenzParams::new(1.0, 12.0, 0.0).is_err());
        assert!(LorenzParams::new(f64::NAN, 12.0, 1.0).is_err());
    }
}
