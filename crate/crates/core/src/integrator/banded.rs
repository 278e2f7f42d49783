//! Cholesky factorization and solve for symmetric positive definite banded
//! matrices stored by lower diagonals.

/// Lower band of an n×n SPD matrix. Row i stores columns i − b..=i in order at
/// `data[i * (b + 1)..(i + 1) * (b + 1)]`; slots left of column 0 stay zero.
#[derive(Debug, Clone)]
pub(crate) struct BandedSpd {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub(crate) fn new(n: usize, b: usize) -> Self {
        Self {
            n,
            b,
            data: vec![0.0; n * (b + 1)],
        }
    }

    pub(crate) fn reset(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        i * (self.b + 1) + self.b + j - i
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(j <= i && i - j <= self.b);
        let o = self.offset(i, j);
        self.data[o] += value;
    }

    /// In-place factorization A = L Lᵀ; false if A is not numerically positive definite.
    pub(crate) fn factorize(&mut self) -> bool {
        let b = self.b;
        let w = b + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(b);
            let (before, row_i) = self.data.split_at_mut(i * w);
            let row_i = &mut row_i[..w];
            for k in lo..i {
                let row_k = &before[k * w..(k + 1) * w];
                // columns lo..k of rows i and k
                let len = k - lo;
                let a = &row_i[b + lo - i..b + lo - i + len];
                let c = &row_k[b + lo - k..b + lo - k + len];
                let dot: f64 = a.iter().zip(c).map(|(x, y)| x * y).sum();
                let diag_k = row_k[b];
                let idx = b + k - i;
                row_i[idx] = (row_i[idx] - dot) / diag_k;
            }
            let len = i - lo;
            let tail = &row_i[b - len..b];
            let sq: f64 = tail.iter().map(|x| x * x).sum();
            let s = row_i[b] - sq;
            if !(s > 0.0) || !s.is_finite() {
                return false;
            }
            row_i[b] = s.sqrt();
        }
        true
    }

    /// Solves L Lᵀ x = rhs in place after `factorize`.
    pub(crate) fn solve(&self, rhs: &mut [f64]) {
        let b = self.b;
        let w = b + 1;
        let n = self.n;
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let row = &self.data[i * w..(i + 1) * w];
            let dot: f64 = row[b + lo - i..b].iter().zip(&rhs[lo..i]).map(|(l, x)| l * x).sum();
            rhs[i] = (rhs[i] - dot) / row[b];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for m in (i + 1)..(i + b + 1).min(n) {
                s -= self.data[self.offset(m, i)] * rhs[m];
            }
            rhs[i] = s / self.data[self.offset(i, i)];
        }
    }
}
