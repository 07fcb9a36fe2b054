//! Spectrum of the damped plate generator and its spectral abscissa.
//!
//! All eigenvalues are reported for the generator `(u, v) ↦ (v, -Δ_h² u - a v)`,
//! so damped modes have negative real parts. Internally both solvers work in
//! energy coordinates `(Δ_h u, v)`, where the undamped operator is
//! skew-symmetric; residuals are therefore energy-norm residuals.

mod arnoldi;
mod dense;
mod shifted;
mod sweep;

pub use arnoldi::{shift_invert_spectrum, ArnoldiOptions};
pub use dense::{dense_spectrum, DEFAULT_DENSE_CAP};
pub use sweep::{abscissa_state, rightmost_eigenvalues, sweep_spectrum, SweepOptions, SweepPlan};

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::grid_operators::{ConfigTag, DampedPlateOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Dense,
    ShiftInvert,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Dense => "dense",
            SolveMethod::ShiftInvert => "shift-invert",
        })
    }
}

/// Computed eigenvalues with residuals, sorted by descending real part and
/// then ascending `|Im|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub method: SolveMethod,
    pub config: ConfigTag,
    /// Set when the eigenvalues are known to be the entire spectrum.
    pub complete: bool,
}

pub(crate) fn spectral_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.re.total_cmp(&a.re)
        .then(a.im.abs().total_cmp(&b.im.abs()))
        .then(b.im.total_cmp(&a.im))
}

impl Spectrum {
    pub(crate) fn from_pairs(
        mut pairs: Vec<(Complex64, f64, bool)>,
        method: SolveMethod,
        config: ConfigTag,
        complete: bool,
    ) -> Self {
        pairs.sort_by(|a, b| spectral_order(&a.0, &b.0));
        Spectrum {
            eigenvalues: pairs.iter().map(|p| p.0).collect(),
            residuals: pairs.iter().map(|p| p.1).collect(),
            converged: pairs.iter().map(|p| p.2).collect(),
            method,
            config,
            complete,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }

    /// The `count` eigenvalues with the largest real parts.
    pub fn rightmost(&self, count: usize) -> Spectrum {
        let n = count.min(self.len());
        Spectrum {
            eigenvalues: self.eigenvalues[..n].to_vec(),
            residuals: self.residuals[..n].to_vec(),
            converged: self.converged[..n].to_vec(),
            method: self.method,
            config: self.config.clone(),
            complete: self.complete && n == self.len(),
        }
    }

    /// CSV body with columns `re,im,residual,method`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im,residual,method")?;
        for (l, r) in self.eigenvalues.iter().zip(&self.residuals) {
            writeln!(w, "{:.16e},{:.16e},{:.6e},{}", l.re, l.im, r, self.method)?;
        }
        Ok(())
    }
}

/// Solver choice for [`compute_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenMethod {
    /// Dense when `2M` fits under [`DEFAULT_DENSE_CAP`], otherwise a full shift sweep.
    Auto,
    Dense { cap: usize },
    ShiftInvert(SweepOptions),
}

impl Default for EigenMethod {
    fn default() -> Self {
        EigenMethod::Auto
    }
}

/// Spectrum of `op` by the selected method.
pub fn compute_spectrum(op: &DampedPlateOperator, method: &EigenMethod) -> Result<Spectrum> {
    match method {
        EigenMethod::Auto if op.grid().state_dim() <= DEFAULT_DENSE_CAP => dense_spectrum(op, DEFAULT_DENSE_CAP),
        EigenMethod::Auto => sweep_spectrum(op, &SweepOptions::default()),
        EigenMethod::Dense { cap } => dense_spectrum(op, *cap),
        EigenMethod::ShiftInvert(opts) => sweep_spectrum(op, opts),
    }
}

/// Spectral abscissa `μ = max Re λ` over a computed set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbscissaResult {
    pub mu: f64,
    pub attaining_eigenvalue: Complex64,
    pub residual: f64,
}

impl fmt::Display for AbscissaResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.attaining_eigenvalue;
        write!(f, "mu = {:.12e} attained at {:.12e}{:+.12e}i", self.mu, l.re, l.im)
    }
}

/// Maximum real part over the converged eigenvalues of `spectrum`.
pub fn spectral_abscissa(spectrum: &Spectrum) -> Result<AbscissaResult> {
    spectrum
        .eigenvalues
        .iter()
        .zip(&spectrum.residuals)
        .zip(&spectrum.converged)
        .filter(|(_, c)| **c)
        .map(|((l, r), _)| (*l, *r))
        .min_by(|a, b| spectral_order(&a.0, &b.0))
        .map(|(l, r)| AbscissaResult {
            mu: l.re,
            attaining_eigenvalue: l,
            residual: r,
        })
        .ok_or_else(|| invalid("spectral abscissa of an empty (or fully unconverged) spectrum"))
}
