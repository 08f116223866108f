//! Banded LU factorization with partial pivoting.
//!
//! Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl` columns on
//! the right hold the fill produced by row interchanges.

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<f64>,
    pivots: Vec<usize>,
}

/// Returned when a pivot column is numerically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub column: usize,
}

impl BandLu {
    /// Factorize the `n × n` matrix with lower bandwidth `kl` and upper
    /// bandwidth `ku` whose entries are produced by `entries`. The callback
    /// receives a sink `(row, col, value)` and must only emit in-band entries.
    pub fn factorize<F>(n: usize, kl: usize, ku: usize, entries: F) -> Result<Self, SingularPivot>
    where
        F: FnOnce(&mut dyn FnMut(usize, usize, f64)),
    {
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        let mut scale = 0.0f64;
        entries(&mut |i, j, v| {
            assert!(
                j + kl >= i && j <= i + ku,
                "entry ({i}, {j}) outside band kl={kl} ku={ku}"
            );
            band[i * width + (j + kl - i)] += v;
            scale = scale.max(v.abs());
        });

        let at = |i: usize, j: usize| i * width + (j + kl - i);
        let tiny = scale * f64::EPSILON * n as f64 * 1e-3;
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = band[at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = band[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(SingularPivot { column: k });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    band.swap(at(k, j), at(p, j));
                }
            }
            let pivot = band[at(k, k)];
            for i in k + 1..=last_row {
                let l = band[at(i, k)] / pivot;
                band[at(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        band[at(i, j)] -= l * band[at(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            band,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.band[i * self.width + (j + self.kl - i)]
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.get(i, k) * bk;
                }
            }
        }
        let reach = self.kl + self.ku;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
    }

    /// Solve `Aᵀ x = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let reach = self.kl + self.ku;
        // Uᵀ y = b
        for i in 0..n {
            let mut acc = b[i];
            for j in i.saturating_sub(reach)..i {
                acc -= self.get(j, i) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
        // Undo the elimination steps in reverse.
        for k in (0..n).rev() {
            let mut acc = 0.0;
            for i in k + 1..=(k + self.kl).min(n - 1) {
                acc += self.get(i, k) * b[i];
            }
            b[k] -= acc;
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }
}
