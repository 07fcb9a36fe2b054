//! Crank–Nicolson time stepping of the damped plate, discrete energy and the
//! dissipation ledger `E(t) = E(0) - ∫∫ a |u_t|²`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid_operators::{ConfigTag, DampedPlateOperator, GridSpec, PlateState};
use crate::linalg::BandLu;

/// Energies below this fraction of `E0` are kept but not used for fitting.
pub const ENERGY_FLOOR: f64 = 1e-14;

/// Longest default horizon.
pub const MAX_DEFAULT_T_FINAL: f64 = 20.0;

/// Horizon used when no decay is predicted.
pub const UNDAMPED_T_FINAL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub n: usize,
    pub m: usize,
}

impl ModeIndex {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(invalid(format!("mode indices are 1-based, got ({n}, {m})")));
        }
        Ok(ModeIndex { n, m })
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.n > grid.nx || self.m > grid.ny {
            return Err(invalid(format!(
                "mode {self} aliases on a {}x{} grid (need 1 <= n <= {}, 1 <= m <= {})",
                grid.nx, grid.ny, grid.nx, grid.ny
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.m)
    }
}

/// `Φ_{n,m}(x, y) = √(2/lx) sin(nπx/lx) · √(2/ly) sin(mπy/ly)` at the nodes.
pub fn mode_shape(grid: &GridSpec, mode: ModeIndex) -> Result<Vec<f64>> {
    mode.check(grid)?;
    let (cx, cy) = ((2.0 / grid.lx).sqrt(), (2.0 / grid.ly).sqrt());
    Ok(grid
        .nodes()
        .map(|(x, y)| cx * (mode.n as f64 * PI * x / grid.lx).sin() * cy * (mode.m as f64 * PI * y / grid.ly).sin())
        .collect())
}

/// Displacement `amplitude · Φ_{n,m}`, zero velocity, time 0.
pub fn modal_initial_state(grid: &GridSpec, mode: ModeIndex, amplitude: f64) -> Result<PlateState> {
    let phi = mode_shape(grid, mode)?;
    Ok(PlateState {
        displacement: phi.into_iter().map(|p| amplitude * p).collect(),
        velocity: vec![0.0; grid.unknowns()],
        time: 0.0,
    })
}

/// `E = ½ hx hy (‖v‖² + ‖Δ_h u‖²)`.
pub fn discrete_energy(op: &DampedPlateOperator, state: &PlateState) -> Result<f64> {
    state.check(op.unknowns())?;
    let lu = op.laplacian().mul_vec(&state.displacement);
    let s: f64 = state.velocity.iter().chain(&lu).map(|x| x * x).sum();
    Ok(0.5 * op.grid().cell_area() * s)
}

/// `min(1e-3, 0.05 / √Λ_max)` with `Λ_max` the largest discrete frequency.
pub fn default_dt(grid: &GridSpec) -> f64 {
    (0.05 / grid.max_mode_frequency().sqrt()).min(1e-3)
}

/// Largest `|Im λ| dt / 2` kept by [`resolving_dt`].
pub const RESOLVING_HALF_PHASE: f64 = 0.15;

/// Step that keeps the per-step phase of `λ` small enough for the discrete
/// decay rate of that eigenvector to stay within ~2% of `Re λ`:
/// `min(default_dt, 2 · 0.15 / |Im λ|)`.
pub fn resolving_dt(grid: &GridSpec, lambda: Complex64) -> f64 {
    let dt = default_dt(grid);
    if lambda.im == 0.0 {
        dt
    } else {
        dt.min(2.0 * RESOLVING_HALF_PHASE / lambda.im.abs())
    }
}

/// Time for the energy to fall by `e^{-6}` at rate `2μ`, capped.
pub fn default_t_final(mu: f64) -> f64 {
    if mu < -1e-9 {
        (6.0 / (2.0 * mu.abs())).min(MAX_DEFAULT_T_FINAL)
    } else {
        UNDAMPED_T_FINAL
    }
}

/// Factorized Crank–Nicolson stepper for one `(operator, dt)` pair.
///
/// Each step solves `[I + dt/2 D + dt²/4 B] v⁺ = r₂ - dt/2 B r₁` and sets
/// `u⁺ = r₁ + dt/2 v⁺`, where `r₁ = u + dt/2 v` and `r₂ = v - dt/2 (B u + D v)`.
pub struct CrankNicolson<'a> {
    op: &'a DampedPlateOperator,
    dt: f64,
    lu: BandLu<f64>,
}

impl<'a> CrankNicolson<'a> {
    pub fn new(op: &'a DampedPlateOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive and finite, got {dt}")));
        }
        let m = op.unknowns();
        let q = 0.25 * dt * dt;
        let entries = op
            .bilaplacian()
            .triplets()
            .map(|(r, c, v)| (r, c, q * v))
            .chain(op.damping().iter().enumerate().map(|(k, a)| (k, k, 1.0 + 0.5 * dt * a)));
        let bw = 2 * op.grid().nx;
        let lu = BandLu::factor(m, bw, bw, entries).ok_or(Error::SingularStep { dt })?;
        Ok(CrankNicolson { op, dt, lu })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` by one step; returns the midpoint dissipation
    /// `dt · hx hy · Σ a ((v + v⁺)/2)²` of that step.
    pub fn step_in_place(&self, state: &mut PlateState) -> f64 {
        let (dt, h) = (self.dt, 0.5 * self.dt);
        let a = self.op.damping();
        let b = self.op.bilaplacian();
        let r1: Vec<f64> = state.displacement.iter().zip(&state.velocity).map(|(u, v)| u + h * v).collect();
        let bu = b.mul_vec(&state.displacement);
        let br1 = b.mul_vec(&r1);
        let mut rhs: Vec<f64> = (0..r1.len())
            .map(|k| state.velocity[k] - h * (bu[k] + a[k] * state.velocity[k]) - h * br1[k])
            .collect();
        self.lu.solve_in_place(&mut rhs);
        let mut diss = 0.0;
        for k in 0..r1.len() {
            let mid = 0.5 * (state.velocity[k] + rhs[k]);
            diss += a[k] * mid * mid;
        }
        for (k, v) in rhs.into_iter().enumerate() {
            state.displacement[k] = r1[k] + h * v;
            state.velocity[k] = v;
        }
        state.time += dt;
        dt * self.op.grid().cell_area() * diss
    }

    pub fn step(&self, state: &PlateState) -> Result<PlateState> {
        state.check(self.op.unknowns())?;
        let mut next = state.clone();
        self.step_in_place(&mut next);
        Ok(next)
    }

    /// Takes `steps` steps from `state`.
    pub fn advance(&self, state: &PlateState, steps: usize) -> Result<PlateState> {
        state.check(self.op.unknowns())?;
        let mut s = state.clone();
        for _ in 0..steps {
            self.step_in_place(&mut s);
        }
        Ok(s)
    }
}

/// One Crank–Nicolson step (factorizes on every call; use [`CrankNicolson`]
/// for trajectories).
pub fn step_crank_nicolson(op: &DampedPlateOperator, state: &PlateState, dt: f64) -> Result<PlateState> {
    CrankNicolson::new(op, dt)?.step(state)
}

/// Sampled energy history of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Cumulative `∫₀ᵗ ∫ a |u_t|²` at each sample.
    pub dissipated: Vec<f64>,
    pub initial_energy: f64,
    pub dt: f64,
    pub config: ConfigTag,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples above the `ENERGY_FLOOR · E0` noise floor.
    pub fn usable(&self) -> Vec<bool> {
        self.energies.iter().map(|e| *e > ENERGY_FLOOR * self.initial_energy && *e > 0.0).collect()
    }

    /// `max_k |E_k - E0 + D_k| / E0`.
    pub fn balance_error(&self) -> f64 {
        let e0 = self.initial_energy;
        if e0 == 0.0 {
            return 0.0;
        }
        self.energies
            .iter()
            .zip(&self.dissipated)
            .map(|(e, d)| (e - e0 + d).abs() / e0)
            .fold(0.0, f64::max)
    }

    /// Largest increase between consecutive samples, relative to `E0`.
    pub fn max_increase(&self) -> f64 {
        let e0 = self.initial_energy;
        if e0 == 0.0 {
            return 0.0;
        }
        self.energies.windows(2).map(|w| (w[1] - w[0]) / e0).fold(0.0, f64::max)
    }

    /// CSV body with columns `t,E,dissipated`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,E,dissipated")?;
        for ((t, e), d) in self.times.iter().zip(&self.energies).zip(&self.dissipated) {
            writeln!(w, "{t:.10e},{e:.16e},{d:.16e}")?;
        }
        Ok(())
    }
}

/// Integrates from `state0` to `t_final`, recording energy and cumulative
/// dissipation every `sample_every` steps and at the last step.
pub fn simulate(
    op: &DampedPlateOperator,
    state0: &PlateState,
    dt: f64,
    t_final: f64,
    sample_every: usize,
) -> Result<EnergyTrace> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(invalid(format!("final time must be positive and finite, got {t_final}")));
    }
    if sample_every == 0 {
        return Err(invalid("sample_every must be at least 1"));
    }
    state0.check(op.unknowns())?;
    let cn = CrankNicolson::new(op, dt)?;
    let steps = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    let e0 = discrete_energy(op, state0)?;
    let mut trace = EnergyTrace {
        times: vec![state0.time],
        energies: vec![e0],
        dissipated: vec![0.0],
        initial_energy: e0,
        dt,
        config: op.tag(),
    };
    let mut state = state0.clone();
    let mut diss = 0.0;
    for k in 1..=steps {
        diss += cn.step_in_place(&mut state);
        if k % sample_every == 0 || k == steps {
            trace.times.push(state0.time + k as f64 * dt);
            trace.energies.push(discrete_energy(op, &state)?);
            trace.dissipated.push(diss);
        }
    }
    Ok(trace)
}
