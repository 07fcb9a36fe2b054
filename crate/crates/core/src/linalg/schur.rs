use nalgebra::DMatrix;
use num_complex::Complex64;

type C = Complex64;
const C0: C = Complex64::new(0.0, 0.0);

/// Complex Schur decomposition `A = Z T Z^H` by Householder reduction to
/// Hessenberg form followed by single-shift QR sweeps with Wilkinson shifts
/// and periodic exceptional shifts.
///
/// Returns `None` if the iteration budget `30 n` sweeps per eigenvalue runs out.
pub(crate) fn complex_schur(mut h: DMatrix<C>) -> Option<(DMatrix<C>, DMatrix<C>)> {
    let n = h.nrows();
    assert_eq!(n, h.ncols());
    let mut z = DMatrix::<C>::identity(n, n);
    if n == 0 {
        return Some((z, h));
    }
    hessenberg(&mut h, &mut z);

    let eps = f64::EPSILON;
    let small = f64::MIN_POSITIVE * (n as f64 / eps);
    let mut hi = n - 1;
    let mut its = 0usize;
    let budget = 30 * n.max(10);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let s = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if sub <= small || sub <= eps * s {
                h[(l, l - 1)] = C0;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        if its > budget {
            return None;
        }
        let shift = if its % 10 == 0 {
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].re.abs()
        } else {
            let (a, b, c, d) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
            let half = 0.5 * (a - d);
            let disc = (half * half + b * c).sqrt();
            let (m1, m2) = (0.5 * (a + d) + disc, 0.5 * (a + d) - disc);
            if (m1 - d).norm() <= (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let Some((c, s)) = givens(x, y) else { continue };
            let start = if k == l { l } else { k - 1 };
            for j in start..n {
                let (a, b) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = c * a + s * b;
                h[(k + 1, j)] = -s.conj() * a + c * b;
            }
            if k > l {
                h[(k + 1, k - 1)] = C0;
            }
            for i in 0..=(k + 2).min(hi) {
                let (a, b) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = c * a + s.conj() * b;
                h[(i, k + 1)] = -s * a + c * b;
            }
            for i in 0..n {
                let (a, b) = (z[(i, k)], z[(i, k + 1)]);
                z[(i, k)] = c * a + s.conj() * b;
                z[(i, k + 1)] = -s * a + c * b;
            }
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = C0;
        }
    }
    Some((z, h))
}

/// Rotation `[[c, s], [-s̄, c]]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C, y: C) -> Option<(C, C)> {
    let (ax, ay) = (x.norm(), y.norm());
    let nrm = ax.hypot(ay);
    if nrm == 0.0 {
        return None;
    }
    if ax == 0.0 {
        return Some((C0, y.conj() / ay));
    }
    let alpha = x / ax;
    Some((C::new(ax / nrm, 0.0), alpha * y.conj() / nrm))
}

fn hessenberg(h: &mut DMatrix<C>, z: &mut DMatrix<C>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let xn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if xn == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { C::new(1.0, 0.0) };
        v[0] += phase * xn;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= vn);
        // H <- P H P with P = I - 2 v v^H acting on indices k+1..n
        for j in 0..n {
            let dot: C = v.iter().enumerate().map(|(r, vr)| vr.conj() * h[(k + 1 + r, j)]).sum();
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= 2.0 * vr * dot;
            }
        }
        for mat in [&mut *h, &mut *z] {
            for i in 0..n {
                let dot: C = v.iter().enumerate().map(|(r, vr)| mat[(i, k + 1 + r)] * vr).sum();
                for (r, vr) in v.iter().enumerate() {
                    mat[(i, k + 1 + r)] -= 2.0 * dot * vr.conj();
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &DMatrix<C>) {
        let (z, t) = complex_schur(a.clone()).expect("converges");
        let n = a.nrows();
        let recon = &z * &t * z.adjoint();
        let scale = 1.0 + a.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!((recon - a).iter().all(|c| c.norm() < 1e-12 * scale * n as f64));
        let orth = z.adjoint() * &z - DMatrix::<C>::identity(n, n);
        assert!(orth.iter().all(|c| c.norm() < 1e-12 * n as f64));
        for j in 0..n {
            for i in (j + 1)..n {
                assert_eq!(t[(i, j)], C0);
            }
        }
    }

    #[test]
    fn general_complex_matrix() {
        let a = DMatrix::<C>::from_fn(12, 12, |i, j| C::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64));
        check(&a);
    }

    #[test]
    fn hard_cases() {
        let n = 9;
        let cyclic = DMatrix::<C>::from_fn(n, n, |i, j| if (i + 1) % n == j { C::new(1.0, 0.0) } else { C0 });
        check(&cyclic);
        check(&DMatrix::<C>::zeros(n, n));
        check(&DMatrix::<C>::identity(n, n));
        let jordan = DMatrix::<C>::from_fn(n, n, |i, j| if j == i + 1 || i == j { C::new(1.0, 0.0) } else { C0 });
        check(&jordan);
        let sparse = DMatrix::<C>::from_fn(n, n, |i, j| if (i * j) % 4 == 1 { C::new(0.0, 2.0) } else { C0 });
        check(&sparse);
        check(&DMatrix::<C>::from_element(1, 1, C::new(3.0, -1.0)));
    }
}
