use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid_operators::DampedPlateOperator;
use crate::linalg::BandLu;

/// `y ↦ K y` for the energy-coordinate generator `[[0, Δ_h], [-Δ_h, -a]]`.
pub(crate) fn apply_energy(op: &DampedPlateOperator, y: &[Complex64], out: &mut [Complex64]) {
    let m = op.unknowns();
    let (w, v) = y.split_at(m);
    let (ow, ov) = out.split_at_mut(m);
    op.laplacian().apply(v, ow);
    op.laplacian().apply(w, ov);
    for ((o, a), vi) in ov.iter_mut().zip(op.damping()).zip(v) {
        *o = -*o - vi * *a;
    }
}

/// Sparse LU of `K - σ I`, with unknowns interleaved node by node so the
/// matrix is banded with half-bandwidth `2 nx + 1`.
pub(crate) struct ShiftedSystem {
    lu: BandLu<Complex64>,
    m: usize,
    pub shift: Complex64,
}

impl ShiftedSystem {
    pub fn factor(op: &DampedPlateOperator, shift: Complex64) -> Result<Self> {
        let m = op.unknowns();
        let bw = 2 * op.grid().nx + 1;
        let lap = op.laplacian();
        let mut entries = Vec::with_capacity(2 * lap.nnz() + 4 * m);
        for (r, c, v) in lap.triplets() {
            entries.push((2 * r, 2 * c + 1, Complex64::new(v, 0.0)));
            entries.push((2 * r + 1, 2 * c, Complex64::new(-v, 0.0)));
        }
        for (k, a) in op.damping().iter().enumerate() {
            entries.push((2 * k, 2 * k, -shift));
            entries.push((2 * k + 1, 2 * k + 1, Complex64::new(-a, 0.0) - shift));
        }
        let lu = BandLu::factor(2 * m, bw, bw, entries).ok_or(Error::ShiftFailure { shift })?;
        Ok(ShiftedSystem { lu, m, shift })
    }

    /// `(K - σ I)^{-1} y` in block layout `[w; v]`.
    pub fn solve(&self, y: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        let mut z = vec![Complex64::new(0.0, 0.0); 2 * m];
        for k in 0..m {
            z[2 * k] = y[k];
            z[2 * k + 1] = y[m + k];
        }
        self.lu.solve_in_place(&mut z);
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * m];
        for k in 0..m {
            out[k] = z[2 * k];
            out[m + k] = z[2 * k + 1];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_operators::GridSpec;

    #[test]
    fn shifted_solve_inverts_generator() {
        let g = GridSpec::new(1.0, 1.3, 5, 4).unwrap();
        let a: Vec<f64> = (0..20).map(|k| 0.1 * (k % 3) as f64).collect();
        let op = DampedPlateOperator::with_damping(&g, a).unwrap();
        for shift in [Complex64::new(0.0, 0.0), Complex64::new(-0.3, 57.0)] {
            let sys = ShiftedSystem::factor(&op, shift).unwrap();
            let y: Vec<Complex64> = (0..40).map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.5).cos())).collect();
            let x = sys.solve(&y);
            let mut kx = vec![Complex64::new(0.0, 0.0); 40];
            apply_energy(&op, &x, &mut kx);
            for i in 0..40 {
                let r = kx[i] - shift * x[i] - y[i];
                assert!(r.norm() < 1e-9, "residual {r} at {i}");
            }
        }
    }
}
