//! Finite-difference discretization of the hinged plate on a rectangle.
//!
//! Unknowns live on the interior nodes `(i*hx, j*hy)`, `1 <= i <= nx`,
//! `1 <= j <= ny`, numbered x-fastest: `k = (j-1)*nx + (i-1)`. Homogeneous
//! Dirichlet values outside the interior are eliminated, and the hinged
//! condition `u = Δu = 0` is obtained by squaring the Dirichlet Laplacian.

mod sparse;

pub use sparse::SparseOperator;

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::damping::DampingField;
use crate::error::{invalid, Error, Result};
use crate::linalg::BandLu;

/// Node ordering used by every vector and file in this crate.
pub const NODE_ORDERING: &str = "x-fastest: k = (j-1)*nx + (i-1)";

/// Uniform interior grid on `(0, lx) x (0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl GridSpec {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && lx.is_finite()) || !(ly > 0.0 && ly.is_finite()) {
            return Err(invalid(format!("domain dimensions must be positive, got {lx} x {ly}")));
        }
        if nx < 2 || ny < 2 {
            return Err(invalid(format!("need at least 2 interior points per direction, got {nx} x {ny}")));
        }
        Ok(GridSpec {
            lx,
            ly,
            nx,
            ny,
            hx: lx / (nx + 1) as f64,
            hy: ly / (ny + 1) as f64,
        })
    }

    /// Number of interior unknowns `M = nx * ny`.
    pub fn unknowns(&self) -> usize {
        self.nx * self.ny
    }

    /// Dimension of the first-order state `(u, v)`.
    pub fn state_dim(&self) -> usize {
        2 * self.unknowns()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..=self.nx).contains(&i) && (1..=self.ny).contains(&j));
        (j - 1) * self.nx + (i - 1)
    }

    /// Coordinates of node `k`.
    pub fn node(&self, k: usize) -> (f64, f64) {
        let i = k % self.nx + 1;
        let j = k / self.nx + 1;
        (i as f64 * self.hx, j as f64 * self.hy)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.unknowns()).map(|k| self.node(k))
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Eigenvalue of `-Δ_h` for the discrete mode `(n, m)`; the undamped
    /// generator has eigenvalues `±i` times this value.
    pub fn mode_frequency(&self, n: usize, m: usize) -> f64 {
        let sx = (n as f64 * PI * self.hx / (2.0 * self.lx)).sin();
        let sy = (m as f64 * PI * self.hy / (2.0 * self.ly)).sin();
        4.0 * sx * sx / (self.hx * self.hx) + 4.0 * sy * sy / (self.hy * self.hy)
    }

    /// Frequencies of every discrete mode, `(n, m, frequency)`.
    pub fn mode_frequencies(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.unknowns());
        for m in 1..=self.ny {
            for n in 1..=self.nx {
                out.push((n, m, self.mode_frequency(n, m)));
            }
        }
        out
    }

    pub fn max_mode_frequency(&self) -> f64 {
        self.mode_frequency(self.nx, self.ny)
    }
}

/// Five-point Dirichlet Laplacian on the interior nodes.
pub fn assemble_laplacian(grid: &GridSpec) -> SparseOperator {
    let (nx, ny) = (grid.nx, grid.ny);
    let cx = 1.0 / (grid.hx * grid.hx);
    let cy = 1.0 / (grid.hy * grid.hy);
    let mut t = Vec::with_capacity(5 * grid.unknowns());
    for j in 1..=ny {
        for i in 1..=nx {
            let k = grid.index(i, j);
            if j > 1 {
                t.push((k, grid.index(i, j - 1), cy));
            }
            if i > 1 {
                t.push((k, grid.index(i - 1, j), cx));
            }
            t.push((k, k, -2.0 * cx - 2.0 * cy));
            if i < nx {
                t.push((k, grid.index(i + 1, j), cx));
            }
            if j < ny {
                t.push((k, grid.index(i, j + 1), cy));
            }
        }
    }
    SparseOperator::from_triplets(grid.unknowns(), grid.unknowns(), t)
}

/// Hinged bilaplacian `Δ_h · Δ_h`.
pub fn assemble_bilaplacian(grid: &GridSpec) -> SparseOperator {
    let lap = assemble_laplacian(grid);
    lap.matmul(&lap)
}

/// Interior state `U = (u, ∂u/∂t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateState {
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
    pub time: f64,
}

impl PlateState {
    pub fn zeros(m: usize) -> Self {
        PlateState {
            displacement: vec![0.0; m],
            velocity: vec![0.0; m],
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.displacement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacement.is_empty()
    }

    pub(crate) fn check(&self, m: usize) -> Result<()> {
        for len in [self.displacement.len(), self.velocity.len()] {
            if len != m {
                return Err(Error::Dimension { expected: m, found: len });
            }
        }
        Ok(())
    }
}

/// Identifies the operator configuration a result was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigTag {
    pub grid: GridSpec,
    pub profile: String,
    pub region: String,
}

impl ConfigTag {
    /// `NXxNY` grid descriptor.
    pub fn grid_label(&self) -> String {
        format!("{}x{}", self.grid.nx, self.grid.ny)
    }
}

impl std::fmt::Display for ConfigTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} on {}, grid {}", self.profile, self.region, self.grid_label())
    }
}

/// Discrete damped plate generator `(u, v) ↦ (v, -Δ_h² u - a v)`.
#[derive(Debug)]
pub struct DampedPlateOperator {
    grid: GridSpec,
    profile: String,
    region: String,
    laplacian: SparseOperator,
    bilaplacian: SparseOperator,
    damping: Vec<f64>,
    laplacian_lu: OnceLock<BandLu<f64>>,
}

impl Clone for DampedPlateOperator {
    fn clone(&self) -> Self {
        DampedPlateOperator {
            grid: self.grid,
            profile: self.profile.clone(),
            region: self.region.clone(),
            laplacian: self.laplacian.clone(),
            bilaplacian: self.bilaplacian.clone(),
            damping: self.damping.clone(),
            laplacian_lu: OnceLock::new(),
        }
    }
}

impl DampedPlateOperator {
    /// Packages the grid operators with a damping field sampled on `grid`.
    pub fn new(grid: &GridSpec, damping: &DampingField) -> Result<Self> {
        if damping.grid() != grid {
            return Err(invalid("damping field was sampled on a different grid"));
        }
        let mut op = Self::with_damping(grid, damping.values().to_vec())?;
        op.profile = damping.profile().to_string();
        op.region = damping.region().to_string();
        Ok(op)
    }

    /// Same as [`DampedPlateOperator::new`] from raw nodal damping values.
    pub fn with_damping(grid: &GridSpec, damping: Vec<f64>) -> Result<Self> {
        if damping.len() != grid.unknowns() {
            return Err(Error::Dimension {
                expected: grid.unknowns(),
                found: damping.len(),
            });
        }
        if let Some(k) = damping.iter().position(|a| !(*a >= 0.0 && a.is_finite())) {
            let (x, y) = grid.node(k);
            return Err(invalid(format!("damping at node ({x}, {y}) is {}, must be finite and >= 0", damping[k])));
        }
        let laplacian = assemble_laplacian(grid);
        let bilaplacian = laplacian.matmul(&laplacian);
        Ok(DampedPlateOperator {
            grid: *grid,
            profile: "nodal values".into(),
            region: "-".into(),
            laplacian,
            bilaplacian,
            damping,
            laplacian_lu: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Description of the damping this operator was built from.
    pub fn label(&self) -> String {
        format!("{} on {}", self.profile, self.region)
    }

    pub fn tag(&self) -> ConfigTag {
        ConfigTag {
            grid: self.grid,
            profile: self.profile.clone(),
            region: self.region.clone(),
        }
    }

    pub fn laplacian(&self) -> &SparseOperator {
        &self.laplacian
    }

    pub fn bilaplacian(&self) -> &SparseOperator {
        &self.bilaplacian
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    pub fn max_damping(&self) -> f64 {
        self.damping.iter().copied().fold(0.0, f64::max)
    }

    pub fn unknowns(&self) -> usize {
        self.grid.unknowns()
    }

    /// Time derivative `(v, -Δ_h² u - a∘v)` of a state.
    pub fn apply_generator(&self, state: &PlateState) -> Result<PlateState> {
        state.check(self.unknowns())?;
        let mut dv = self.bilaplacian.mul_vec(&state.displacement);
        for ((d, a), v) in dv.iter_mut().zip(&self.damping).zip(&state.velocity) {
            *d = -*d - a * v;
        }
        Ok(PlateState {
            displacement: state.velocity.clone(),
            velocity: dv,
            time: state.time,
        })
    }

    pub(crate) fn laplacian_lu(&self) -> &BandLu<f64> {
        self.laplacian_lu.get_or_init(|| {
            let bw = self.grid.nx;
            BandLu::factor(self.unknowns(), bw, bw, self.laplacian.triplets())
                .expect("Dirichlet Laplacian is nonsingular")
        })
    }

    /// Solves `Δ_h u = w`.
    pub fn solve_laplacian(&self, w: &[f64]) -> Vec<f64> {
        let mut u = w.to_vec();
        self.laplacian_lu().solve_in_place(&mut u);
        u
    }

    /// Dense generator in energy coordinates `(Δ_h u, v)`:
    /// `[[0, Δ_h], [-Δ_h, -diag(a)]]`.
    ///
    /// The similarity transform `diag(Δ_h, I)` leaves the spectrum unchanged
    /// and turns the undamped part into a skew-symmetric matrix, so Euclidean
    /// norms here are energy norms (up to the factor `hx*hy`).
    pub fn dense_energy_generator(&self) -> DMatrix<f64> {
        let m = self.unknowns();
        let mut k = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for (r, c, v) in self.laplacian.triplets() {
            k[(r, m + c)] = v;
            k[(m + r, c)] = -v;
        }
        for (i, a) in self.damping.iter().enumerate() {
            k[(m + i, m + i)] = -a;
        }
        k
    }
}
