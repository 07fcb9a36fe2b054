use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::shifted::{apply_energy, ShiftedSystem};
use super::{SolveMethod, Spectrum};
use crate::error::{invalid, Result};
use crate::grid_operators::DampedPlateOperator;
use crate::linalg::{cdot, cnorm, complex_schur, complex_schur_eigvecs};

type C = Complex64;
const C0: C = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// Absolute residual bound `‖𝒜v − λv‖` for a pair to count as converged.
    pub tol: f64,
    /// Maximum number of restarts per Krylov cycle.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions {
            tol: 1e-8,
            max_iter: 300,
            seed: 0x5eed_1e55,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EigenPair {
    pub lambda: C,
    pub residual: f64,
    pub converged: bool,
    /// Unit eigenvector in energy coordinates `[Δ_h u; v]`.
    pub vector: Vec<C>,
}

/// The `k` eigenvalues nearest `shift`, from Krylov–Schur iteration with
/// locking on `(𝒜 − shift)^{-1}`.
pub fn shift_invert_spectrum(op: &DampedPlateOperator, shift: C, k: usize, opts: &ArnoldiOptions) -> Result<Spectrum> {
    let n = op.grid().state_dim();
    if k == 0 || k > n {
        return Err(invalid(format!("eigenvalue count must be in 1..={n}, got {k}")));
    }
    let sys = ShiftedSystem::factor(op, shift)?;
    let pairs = shift_invert_pairs(op, &sys, k, opts);
    let complete = pairs.len() == n && pairs.iter().all(|p| p.converged);
    let pairs = pairs.into_iter().map(|p| (p.lambda, p.residual, p.converged)).collect();
    Ok(Spectrum::from_pairs(pairs, SolveMethod::ShiftInvert, op.tag(), complete))
}

pub(crate) fn shift_invert_pairs(op: &DampedPlateOperator, sys: &ShiftedSystem, k: usize, opts: &ArnoldiOptions) -> Vec<EigenPair> {
    let n = op.grid().state_dim();
    let k = k.min(n);
    let mut kr = Krylov::new(op, sys, opts.seed ^ sys.shift.re.to_bits().rotate_left(17) ^ sys.shift.im.to_bits());
    let mut leftovers = kr.run(k, opts);
    if leftovers.is_empty() {
        for _ in 0..(2 * k + 10) {
            if kr.locked.len() >= n {
                break;
            }
            let mut thetas: Vec<f64> = kr.thetas.iter().map(|t| t.norm()).collect();
            if thetas.len() < k {
                break;
            }
            thetas.sort_by(|a, b| b.total_cmp(a));
            let kth = thetas[k - 1];
            let before = kr.locked.len();
            leftovers = kr.run(1, opts);
            if kr.locked.len() == before || kr.thetas[before].norm() < kth * (1.0 - 1e-9) {
                break;
            }
        }
    }
    let mut basis = kr.locked;
    for mut x in leftovers {
        orthogonalize(&basis, &mut x);
        let nx = cnorm(&x);
        if nx > 1e-8 {
            x.iter_mut().for_each(|z| *z /= nx);
            basis.push(x);
        }
    }
    let mut pairs = rayleigh_ritz(op, &basis, opts.tol);
    pairs.sort_by(|a, b| (a.lambda - sys.shift).norm().total_cmp(&(b.lambda - sys.shift).norm()));
    pairs.truncate(k);
    pairs
}

/// Eigenpairs of `K` restricted to the span of an orthonormal basis.
fn rayleigh_ritz(op: &DampedPlateOperator, basis: &[Vec<C>], tol: f64) -> Vec<EigenPair> {
    let p = basis.len();
    if p == 0 {
        return Vec::new();
    }
    let n = basis[0].len();
    let kq: Vec<Vec<C>> = basis
        .iter()
        .map(|q| {
            let mut out = vec![C0; n];
            apply_energy(op, q, &mut out);
            out
        })
        .collect();
    let g = DMatrix::from_fn(p, p, |i, j| cdot(&basis[i], &kq[j]));
    let Some((zq, t)) = complex_schur(g) else {
        return Vec::new();
    };
    let which: Vec<usize> = (0..p).collect();
    complex_schur_eigvecs(&zq, &t, &which)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let lambda = t[(i, i)];
            let mut z = vec![C0; n];
            let mut kz = vec![C0; n];
            for (j, sj) in s.iter().enumerate() {
                axpy(*sj, &basis[j], &mut z);
                axpy(*sj, &kq[j], &mut kz);
            }
            let nz = cnorm(&z);
            z.iter_mut().for_each(|v| *v /= nz);
            kz.iter_mut().for_each(|v| *v /= nz);
            let r: Vec<C> = kz.iter().zip(&z).map(|(a, b)| a - lambda * b).collect();
            let residual = cnorm(&r);
            EigenPair {
                lambda,
                residual,
                converged: residual <= tol,
                vector: z,
            }
        })
        .collect()
}

fn axpy(a: C, x: &[C], y: &mut [C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Two passes of classical Gram–Schmidt against an orthonormal set.
fn orthogonalize(basis: &[Vec<C>], w: &mut [C]) {
    for _ in 0..2 {
        for q in basis {
            let c = cdot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// Orthonormalizes the columns in place; returns false if one is dependent.
fn orthonormalize_columns(cols: &mut [Vec<C>]) -> bool {
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let w = &mut rest[0];
        orthogonalize(done, w);
        let nw = cnorm(w);
        if nw < 1e-10 {
            return false;
        }
        w.iter_mut().for_each(|z| *z /= nw);
    }
    true
}

fn combine(v: &[Vec<C>], s: &[C]) -> Vec<C> {
    let mut out = vec![C0; v[0].len()];
    for (vj, sj) in v.iter().zip(s) {
        axpy(*sj, vj, &mut out);
    }
    out
}

struct Krylov<'a> {
    op: &'a DampedPlateOperator,
    sys: &'a ShiftedSystem,
    n: usize,
    rng: ChaCha8Rng,
    locked: Vec<Vec<C>>,
    thetas: Vec<C>,
}

impl<'a> Krylov<'a> {
    fn new(op: &'a DampedPlateOperator, sys: &'a ShiftedSystem, seed: u64) -> Self {
        Krylov {
            op,
            sys,
            n: op.grid().state_dim(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            locked: Vec::new(),
            thetas: Vec::new(),
        }
    }

    fn random_orthogonal(&mut self, extra: &[Vec<C>]) -> Option<Vec<C>> {
        for _ in 0..3 {
            let mut w: Vec<C> = (0..self.n)
                .map(|_| C::new(self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0)))
                .collect();
            orthogonalize(&self.locked, &mut w);
            orthogonalize(extra, &mut w);
            let nw = cnorm(&w);
            if nw > 1e-6 * (self.n as f64).sqrt() {
                w.iter_mut().for_each(|z| *z /= nw);
                return Some(w);
            }
        }
        None
    }

    fn apply(&self, v: &[C]) -> Vec<C> {
        let mut w = self.sys.solve(v);
        orthogonalize(&self.locked, &mut w);
        w
    }

    fn shifted_norm(&self, v: &[C]) -> f64 {
        let mut kv = vec![C0; v.len()];
        apply_energy(self.op, v, &mut kv);
        cnorm(&kv.iter().zip(v).map(|(a, b)| a - self.sys.shift * b).collect::<Vec<_>>())
    }

    /// Locks `want` further eigenvectors, nearest the shift first. On
    /// non-convergence returns the best unconverged Ritz vectors instead.
    fn run(&mut self, want: usize, opts: &ArnoldiOptions) -> Vec<Vec<C>> {
        let want = want.min(self.n - self.locked.len());
        if want == 0 {
            return Vec::new();
        }
        let m_max = (2 * want + 2).max(20);
        let Some(start) = self.random_orthogonal(&[]) else {
            return Vec::new();
        };
        let mut v = vec![start];
        let mut h = DMatrix::<C>::zeros(m_max + 1, m_max);
        let mut l = 0;
        let mut newly = 0;
        for iter in 0..opts.max_iter.max(1) {
            let m = m_max.min(self.n - self.locked.len());
            let mut j = l;
            while j < m {
                let mut w = self.apply(&v[j]);
                for _ in 0..2 {
                    for (i, vi) in v.iter().enumerate() {
                        let c = cdot(vi, &w);
                        h[(i, j)] += c;
                        axpy(-c, vi, &mut w);
                    }
                }
                let beta = cnorm(&w);
                let scale = (0..=j).map(|i| h[(i, j)].norm()).fold(beta, f64::max);
                if beta > 1e-12 * scale {
                    h[(j + 1, j)] = C::new(beta, 0.0);
                    w.iter_mut().for_each(|z| *z /= beta);
                } else {
                    h[(j + 1, j)] = C0;
                    match self.random_orthogonal(&v) {
                        Some(r) => w = r,
                        None => {
                            j += 1;
                            break;
                        }
                    }
                }
                v.push(w);
                j += 1;
            }
            let m = j;
            let hm = h.view((0, 0), (m, m)).clone_owned();
            let Some((q, t)) = complex_schur(hm.clone()) else {
                return Vec::new();
            };
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|a, b| t[(*b, *b)].norm().total_cmp(&t[(*a, *a)].norm()));
            let svecs = complex_schur_eigvecs(&q, &t, &order);
            let brow: Vec<C> = (0..m).map(|c| h[(m, c)]).collect();
            let kv = if v.len() > m { self.shifted_norm(&v[m]) } else { 0.0 };
            let need = (want - newly).min(m);
            let est: Vec<f64> = svecs
                .iter()
                .zip(&order)
                .map(|(s, &i)| {
                    let bs: C = brow.iter().zip(s).map(|(b, x)| b * x).sum();
                    bs.norm() * kv / t[(i, i)].norm().max(f64::MIN_POSITIVE)
                })
                .collect();
            let lock: Vec<usize> = (0..need).filter(|&r| est[r] <= 0.5 * opts.tol && t[(order[r], order[r])].norm() > 0.0).collect();
            let last = iter + 1 == opts.max_iter.max(1);
            let exhausted = v.len() <= m;
            if (last && lock.len() < need) || exhausted {
                let mut out = Vec::new();
                for r in 0..need {
                    let x = combine(&v[..m], &svecs[r]);
                    if exhausted || lock.contains(&r) {
                        self.push_locked(x, t[(order[r], order[r])]);
                    } else {
                        out.push(x);
                    }
                }
                return out;
            }
            let nl = lock.len();
            let unlocked = need - nl;
            let nkeep = (unlocked + (m - need) / 2).max(1).min(m.saturating_sub(nl + 1));
            let mut sel: Vec<usize> = lock.clone();
            sel.extend((0..m).filter(|r| !lock.contains(r)).take(nkeep));
            let mut y: Vec<Vec<C>> = sel.iter().map(|&r| svecs[r].clone()).collect();
            if !orthonormalize_columns(&mut y) {
                y.retain(|c| cnorm(c) > 0.5);
                if y.len() < lock.len() {
                    return Vec::new();
                }
            }
            let ymat = DMatrix::from_fn(m, y.len(), |i, c| y[c][i]);
            let g = ymat.adjoint() * &hm * &ymat;
            let b: Vec<C> = (0..y.len()).map(|c| (0..m).map(|i| brow[i] * y[c][i]).sum()).collect();
            for (c, &r) in lock.iter().enumerate() {
                let x = combine(&v[..m], &y[c]);
                self.push_locked(x, t[(order[r], order[r])]);
            }
            newly += nl;
            if newly >= want {
                return Vec::new();
            }
            let tail = v.pop().expect("residual vector");
            let kept: Vec<Vec<C>> = (nl..y.len()).map(|c| combine(&v[..m], &y[c])).collect();
            let p = kept.len();
            h.fill(C0);
            for r in 0..p {
                for c in 0..p {
                    h[(r, c)] = g[(nl + r, nl + c)];
                }
                h[(p, r)] = b[nl + r];
            }
            v = kept;
            v.push(tail);
            l = p;
        }
        Vec::new()
    }

    fn push_locked(&mut self, mut x: Vec<C>, theta: C) {
        orthogonalize(&self.locked, &mut x);
        let nx = cnorm(&x);
        if nx > 1e-8 {
            x.iter_mut().for_each(|z| *z /= nx);
            self.locked.push(x);
            self.thetas.push(theta);
        }
    }
}
