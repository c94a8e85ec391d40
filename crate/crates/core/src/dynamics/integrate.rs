use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default integration step.
pub const DEFAULT_STEP: f64 = 0.01;

/// Uniform sample times `t0, t0 + h, ...`; the final sample sits exactly at
/// `t_end`, which may be closer than `h` to its predecessor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub h: f64,
    pub t_end: f64,
    pub len: usize,
}

impl TimeGrid {
    /// Grid covering `[t0, t_end]`. A remainder below `1e-9 h` is absorbed
    /// into the last full step rather than producing a sliver step.
    pub fn covering(t0: f64, t_end: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("step size h must be positive"));
        }
        if !(t0.is_finite() && t_end.is_finite() && t_end > t0) {
            return Err(Error::invalid("t_end must exceed t0"));
        }
        let ratio = (t_end - t0) / h;
        let rounded = ratio.round();
        let steps = if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        };
        Ok(Self {
            t0,
            h,
            t_end,
            len: steps.max(1) + 1,
        })
    }

    /// Grid of `steps` full steps from `t0`.
    pub fn with_steps(t0: f64, h: f64, steps: usize) -> Self {
        Self {
            t0,
            h,
            t_end: t0 + steps as f64 * h,
            len: steps + 1,
        }
    }

    pub fn single(t0: f64, h: f64) -> Self {
        Self {
            t0,
            h,
            t_end: t0,
            len: 1,
        }
    }

    #[inline]
    pub fn time(&self, m: usize) -> f64 {
        if m + 1 == self.len {
            self.t_end
        } else {
            self.t0 + m as f64 * self.h
        }
    }

    /// Width of the interval `[t_m, t_{m+1}]`: exactly `h` except for a
    /// shortened final step.
    #[inline]
    pub fn step(&self, m: usize) -> f64 {
        if m + 2 == self.len && self.t_end != self.t0 + (m + 1) as f64 * self.h {
            self.t_end - self.time(m)
        } else {
            self.h
        }
    }
}

/// Sampled states of a system of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    pub fn time(&self, m: usize) -> f64 {
        self.grid.time(m)
    }

    pub fn state(&self, m: usize) -> &[f64] {
        &self.states[m * self.dim..(m + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub(crate) fn from_parts(grid: TimeGrid, dim: usize, states: Vec<f64>) -> Self {
        debug_assert_eq!(states.len(), grid.len * dim);
        Self { grid, dim, states }
    }
}

/// Classical four-stage Runge-Kutta stepper with preallocated stage buffers.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `u` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, rhs: &mut F, t: f64, u: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let half = 0.5 * h;
        rhs(t, u, &mut self.k1);
        for ((x, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k1) {
            *x = u + half * k;
        }
        rhs(t + half, &self.tmp, &mut self.k2);
        for ((x, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k2) {
            *x = u + half * k;
        }
        rhs(t + half, &self.tmp, &mut self.k3);
        for ((x, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k3) {
            *x = u + h * k;
        }
        rhs(t + h, &self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for (i, u) in u.iter_mut().enumerate() {
            *u += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates over `grid`, calling `observe(m, t_m, u_m)` for every sample
/// including the initial one. Returns the final state.
pub fn integrate_observed<F, O>(
    mut rhs: F,
    initial: &[f64],
    grid: &TimeGrid,
    mut observe: O,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(usize, f64, &[f64]),
{
    let mut u = initial.to_vec();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationDiverged { time: grid.t0 });
    }
    let mut stepper = Rk4::new(u.len());
    observe(0, grid.t0, &u);
    for m in 1..grid.len {
        let t = grid.time(m - 1);
        stepper.step(&mut rhs, t, &mut u, grid.step(m - 1));
        let now = grid.time(m);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged { time: now });
        }
        observe(m, now, &u);
    }
    Ok(u)
}

/// Fixed-step RK4 from `t0` to `t_end`, storing every sample.
pub fn integrate_rk4<F>(rhs: F, initial: &[f64], t0: f64, t_end: f64, h: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let grid = TimeGrid::covering(t0, t_end, h)?;
    let dim = initial.len();
    let mut states = Vec::with_capacity(grid.len * dim);
    integrate_observed(rhs, initial, &grid, |_, _, u| states.extend_from_slice(u))?;
    Ok(Trajectory::from_parts(grid, dim, states))
}
