use nalgebra::DMatrix;
use num_complex::Complex64;

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy)]
struct Block {
    start: usize,
    size: usize,
}

fn blocks(t: &DMatrix<f64>) -> Vec<Block> {
    let n = t.nrows();
    let mut out = Vec::new();
    let mut p = 0;
    while p < n {
        if p + 1 < n && t[(p + 1, p)] != 0.0 {
            out.push(Block { start: p, size: 2 });
            p += 2;
        } else {
            out.push(Block { start: p, size: 1 });
            p += 1;
        }
    }
    out
}

fn frob(t: &DMatrix<f64>) -> f64 {
    t.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn guard(z: Complex64, smin: f64) -> Complex64 {
    if z.norm() < smin {
        Complex64::new(smin, 0.0)
    } else {
        z
    }
}

/// Solves the 2x2 complex system `[[a, b], [c, d]] x = r` by elimination with
/// complete pivoting; a vanishing second pivot is replaced by `smin`.
fn solve2(a: Complex64, b: Complex64, c: Complex64, d: Complex64, r: [Complex64; 2], smin: f64) -> [Complex64; 2] {
    let m = [[a, b], [c, d]];
    let (mut pi, mut pj) = (0, 0);
    for i in 0..2 {
        for j in 0..2 {
            if m[i][j].norm() > m[pi][pj].norm() {
                (pi, pj) = (i, j);
            }
        }
    }
    let p = guard(m[pi][pj], smin);
    let (oi, oj) = (1 - pi, 1 - pj);
    let l = m[oi][pj] / p;
    let u = guard(m[oi][oj] - l * m[pi][oj], smin);
    let mut x = [C0; 2];
    x[oj] = (r[oi] - l * r[pi]) / u;
    x[pj] = (r[pi] - m[pi][oj] * x[oj]) / p;
    x
}

fn rescale(x: &mut [Complex64]) {
    let m = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m > 1e100 {
        for z in x.iter_mut() {
            *z /= m;
        }
    }
}

/// Eigenvalues and unit eigenvectors of `A = Q T Q^T` from a real Schur form.
///
/// Conjugate pairs are produced from one back-substitution so that the pair is
/// exactly conjugate.
pub(crate) fn real_schur_eigpairs(q: &DMatrix<f64>, t: &DMatrix<f64>) -> Vec<(Complex64, Vec<Complex64>)> {
    let n = t.nrows();
    let bl = blocks(t);
    let tn = frob(t);
    let smin = (f64::EPSILON * tn).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    for (bi, b) in bl.iter().enumerate() {
        let s = b.start;
        let lambdas: Vec<(Complex64, bool)> = if b.size == 1 {
            vec![(Complex64::new(t[(s, s)], 0.0), false)]
        } else {
            let (a, bb, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
            let half = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + bb * c;
            if disc < 0.0 {
                vec![(Complex64::new(half, (-disc).sqrt()), true)]
            } else {
                let r = disc.sqrt();
                vec![(Complex64::new(half + r, 0.0), false), (Complex64::new(half - r, 0.0), false)]
            }
        };
        for (lambda, paired) in lambdas {
            let mut x = vec![C0; n];
            let end = s + b.size;
            if b.size == 1 {
                x[s] = Complex64::new(1.0, 0.0);
            } else {
                let (a, bb, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
                let v1 = [Complex64::new(bb, 0.0), lambda - a];
                let v2 = [lambda - d, Complex64::new(c, 0.0)];
                let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
                let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
                let v = if n1 >= n2 { v1 } else { v2 };
                x[s] = v[0];
                x[s + 1] = v[1];
            }
            for blk in bl[..bi].iter().rev() {
                let r = blk.start;
                let rhs = |i: usize, x: &[Complex64]| -> Complex64 {
                    let mut acc = C0;
                    for l in (r + blk.size)..end {
                        acc += x[l] * t[(i, l)];
                    }
                    acc
                };
                if blk.size == 1 {
                    let den = guard(Complex64::new(t[(r, r)], 0.0) - lambda, smin);
                    x[r] = -rhs(r, &x) / den;
                } else {
                    let sol = solve2(
                        Complex64::new(t[(r, r)], 0.0) - lambda,
                        Complex64::new(t[(r, r + 1)], 0.0),
                        Complex64::new(t[(r + 1, r)], 0.0),
                        Complex64::new(t[(r + 1, r + 1)], 0.0) - lambda,
                        [-rhs(r, &x), -rhs(r + 1, &x)],
                        smin,
                    );
                    x[r] = sol[0];
                    x[r + 1] = sol[1];
                }
                rescale(&mut x[..end]);
            }
            let v = back_transform(q, &x[..end]);
            if paired {
                let vc: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
                out.push((lambda, v));
                out.push((lambda.conj(), vc));
            } else {
                out.push((lambda, v));
            }
        }
    }
    out
}

fn back_transform(q: &DMatrix<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let n = q.nrows();
    let mut v = vec![C0; n];
    for (l, xl) in x.iter().enumerate() {
        if *xl == C0 {
            continue;
        }
        let col = q.column(l);
        for i in 0..n {
            v[i] += xl * col[i];
        }
    }
    normalize(&mut v);
    v
}

fn normalize(v: &mut [Complex64]) {
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for z in v.iter_mut() {
            *z /= nrm;
        }
    }
}

/// Unit eigenvectors of `H = Q T Q^H` for the diagonal positions in `which`,
/// given a complex Schur form with upper-triangular `T`.
pub(crate) fn complex_schur_eigvecs(
    q: &DMatrix<Complex64>,
    t: &DMatrix<Complex64>,
    which: &[usize],
) -> Vec<Vec<Complex64>> {
    let n = t.nrows();
    let tn = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let smin = (f64::EPSILON * tn).max(f64::MIN_POSITIVE);
    which
        .iter()
        .map(|&k| {
            let lambda = t[(k, k)];
            let mut x = vec![C0; k + 1];
            x[k] = Complex64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let mut acc = C0;
                for l in (j + 1)..=k {
                    acc += t[(j, l)] * x[l];
                }
                x[j] = -acc / guard(t[(j, j)] - lambda, smin);
                rescale(&mut x);
            }
            let mut v = vec![C0; n];
            for (l, xl) in x.iter().enumerate() {
                for i in 0..n {
                    v[i] += q[(i, l)] * xl;
                }
            }
            normalize(&mut v);
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Schur;

    #[test]
    fn real_schur_pairs_are_eigenpairs() {
        let n = 9;
        let a = DMatrix::<f64>::from_fn(n, n, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0 + if i == j { 0.5 } else { 0.0 });
        let (q, t) = Schur::new(a.clone()).unpack();
        let pairs = real_schur_eigpairs(&q, &t);
        assert_eq!(pairs.len(), n);
        let ac = a.map(|v| Complex64::new(v, 0.0));
        for (lambda, v) in pairs {
            let vv = nalgebra::DVector::from_vec(v);
            let r = &ac * &vv - vv.clone() * lambda;
            assert!(r.norm() < 1e-10, "residual {} for {lambda}", r.norm());
        }
    }

    #[test]
    fn complex_schur_vectors() {
        let n = 7;
        let h = DMatrix::<Complex64>::from_fn(n, n, |i, j| Complex64::new(((i * 3 + j) % 5) as f64, ((i + 2 * j) % 3) as f64 - 1.0));
        let (q, t) = Schur::new(h.clone()).unpack();
        let which: Vec<usize> = (0..n).collect();
        for (k, v) in which.iter().zip(complex_schur_eigvecs(&q, &t, &which)) {
            let vv = nalgebra::DVector::from_vec(v);
            let r = &h * &vv - vv.clone() * t[(*k, *k)];
            assert!(r.norm() < 1e-10);
        }
    }
}
#[cfg(test)]
mod degenerate {
    use super::*;
    use crate::grid_operators::{DampedPlateOperator, GridSpec};

    #[test]
    fn repeated_eigenvalues_keep_small_residuals() {
        // constant damping: every frequency (n, m) != (m, n) is a double eigenvalue
        let g = GridSpec::new(1.0, 1.0, 9, 9).unwrap();
        let op = DampedPlateOperator::with_damping(&g, vec![1.0; g.unknowns()]).unwrap();
        let k = op.dense_energy_generator();
        let n = k.nrows();
        let (q, t) = nalgebra::Schur::try_new(k.clone(), f64::EPSILON, 100 * n).unwrap().unpack();
        let kc = k.map(|v| Complex64::new(v, 0.0));
        let knorm = frob(&k);
        for (l, v) in real_schur_eigpairs(&q, &t) {
            let vv = nalgebra::DVector::from_vec(v);
            let r = (&kc * &vv - vv.clone() * l).norm();
            assert!(r < 1e-11 * knorm, "{l}: residual {r:e}");
        }
    }
}
