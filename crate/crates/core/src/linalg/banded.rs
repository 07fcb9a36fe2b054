use super::Scalar;

/// LU factorization with partial pivoting of a banded matrix.
///
/// Storage follows the LAPACK `gbtrf` layout: column `j` holds rows
/// `j - kl - ku ..= j + kl`, the top `kl` slots receiving the fill produced by
/// row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<T>,
    ipiv: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    /// Factorizes the `n x n` matrix whose nonzeros are produced by `entries`
    /// (duplicates are summed). Entries outside the declared band are a bug.
    ///
    /// Returns `None` when a pivot is numerically zero relative to the largest
    /// entry of the matrix.
    pub fn factor<I>(n: usize, kl: usize, ku: usize, entries: I) -> Option<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let ld = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            ld,
            ab: vec![T::zero(); ld * n],
            ipiv: vec![0; n],
        };
        let mut scale = 0.0f64;
        for (i, j, v) in entries {
            assert!(
                i < n && j < n && i <= j + kl && j <= i + ku,
                "entry ({i}, {j}) outside band kl={kl} ku={ku}"
            );
            let k = lu.idx(i, j);
            lu.ab[k] += v;
            scale = scale.max(lu.ab[k].modulus());
        }
        let threshold = scale * f64::EPSILON * 4.0;
        lu.decompose(threshold).then_some(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + (self.kl + self.ku + i - j)
    }

    fn decompose(&mut self, threshold: f64) -> bool {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let m = self.ab[self.idx(j + r, j)].modulus();
                if m > best {
                    best = m;
                    jp = r;
                }
            }
            self.ipiv[j] = j + jp;
            if !(best > threshold) {
                return false;
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.idx(j, j)];
            for r in 1..=km {
                let k = self.idx(j + r, j);
                self.ab[k] = self.ab[k] / pivot;
            }
            for c in (j + 1)..=ju {
                let t = self.ab[self.idx(j, c)];
                if t == T::zero() {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[self.idx(j + r, j)];
                    let k = self.idx(j + r, c);
                    self.ab[k] -= l * t;
                }
            }
        }
        true
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let (n, kl) = (self.n, self.kl);
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj == T::zero() {
                continue;
            }
            let km = kl.min(n - 1 - j);
            for r in 1..=km {
                b[j + r] -= self.ab[self.idx(j + r, j)] * bj;
            }
        }
        let kv = self.kl + self.ku;
        for j in (0..n).rev() {
            b[j] = b[j] / self.ab[self.idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(kv)..j {
                b[i] -= self.ab[self.idx(i, j)] * bj;
            }
        }
    }
}
