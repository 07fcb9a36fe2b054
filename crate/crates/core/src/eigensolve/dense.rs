use nalgebra::Schur;
use num_complex::Complex64;

use super::shifted::apply_energy;
use super::{SolveMethod, Spectrum};
use crate::error::{Error, Result};
use crate::grid_operators::DampedPlateOperator;
use crate::linalg::{cnorm, complex_schur, complex_schur_eigvecs, real_schur_eigpairs};

/// Largest state dimension `2M` the dense path accepts by default (a 30x30 grid).
pub const DEFAULT_DENSE_CAP: usize = 2 * 30 * 30;

/// Residual threshold used to mark a dense eigenpair as converged.
const DENSE_RESIDUAL_TOL: f64 = 1e-6;

/// All `2M` eigenvalues of the generator via a real Schur decomposition of the
/// materialized energy-coordinate matrix.
pub fn dense_spectrum(op: &DampedPlateOperator, cap: usize) -> Result<Spectrum> {
    let n = op.grid().state_dim();
    if n > cap {
        return Err(Error::TooLarge { dim: n, cap });
    }
    let k = op.dense_energy_generator();
    let pairs = match Schur::try_new(k.clone(), f64::EPSILON, 100 * n) {
        Some(schur) => {
            let (q, t) = schur.unpack();
            real_schur_eigpairs(&q, &t)
        }
        None => {
            let (q, t) = complex_schur(k.map(|v| Complex64::new(v, 0.0)))
                .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
            let which: Vec<usize> = (0..n).collect();
            which.iter().map(|&i| t[(i, i)]).zip(complex_schur_eigvecs(&q, &t, &which)).collect()
        }
    };
    let scale = 1.0 + op.grid().max_mode_frequency() + op.max_damping();
    let mut kv = vec![Complex64::new(0.0, 0.0); n];
    let out = pairs
        .into_iter()
        .map(|(lambda, v)| {
            apply_energy(op, &v, &mut kv);
            let r: Vec<Complex64> = kv.iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
            let res = cnorm(&r) / cnorm(&v);
            (lambda, res, res <= DENSE_RESIDUAL_TOL * scale)
        })
        .collect();
    Ok(Spectrum::from_pairs(out, SolveMethod::Dense, op.tag(), true))
}
