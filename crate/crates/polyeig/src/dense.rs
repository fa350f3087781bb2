//! Small dense complex kernel: the matrix type, QR, and single-shift QZ.
//!
//! Used for the k×k preprocessing of the extreme coefficients and as the
//! brute-force oracle on the full companion pencil.

use std::ops::{Index, IndexMut, Mul};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rotation::{eliminate, CoreTransformation, C64, EPS};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Column-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Builds from row-major nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        DenseMatrix::from_fn(r, c, |i, j| rows[i][j])
    }

    /// Builds from row-major real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        DenseMatrix::from_fn(rows, cols, |i, j| C64::new(entries[i * cols + j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * alpha).collect() }
    }

    pub fn add(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for p in 0..self.cols {
                let b = other[(p, j)];
                if b == ZERO {
                    continue;
                }
                let src = self.col(p);
                let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (d, a) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        let m = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * self.data.iter().map(|z| (z / m).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude strictly below the diagonal.
    pub fn max_below_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.cols {
            for i in j + 1..self.rows {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    /// Largest magnitude strictly above the diagonal.
    pub fn max_above_diagonal(&self) -> f64 {
        self.transpose().max_below_diagonal()
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        DenseMatrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        for j in 0..block.cols {
            for i in 0..block.rows {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Zeroes every entry below the diagonal.
    pub fn clear_lower(&mut self) {
        for j in 0..self.cols {
            for i in j + 1..self.rows {
                self[(i, j)] = ZERO;
            }
        }
    }

    /// Zeroes every entry above the diagonal.
    pub fn clear_upper(&mut self) {
        for j in 0..self.cols {
            for i in 0..j.min(self.rows) {
                self[(i, j)] = ZERO;
            }
        }
    }

    /// `self ← G·self`.
    pub fn rotate_rows(&mut self, g: &CoreTransformation) {
        let i = g.index;
        for j in 0..self.cols {
            let (a, b) = g.apply(self[(i, j)], self[(i + 1, j)]);
            self[(i, j)] = a;
            self[(i + 1, j)] = b;
        }
    }

    /// `self ← G*·self`.
    pub fn rotate_rows_adjoint(&mut self, g: &CoreTransformation) {
        let i = g.index;
        for j in 0..self.cols {
            let (a, b) = g.apply_adjoint(self[(i, j)], self[(i + 1, j)]);
            self[(i, j)] = a;
            self[(i + 1, j)] = b;
        }
    }

    /// `self ← self·G`.
    pub fn rotate_cols(&mut self, g: &CoreTransformation) {
        let i = g.index;
        let r = self.rows;
        let (left, right) = self.data.split_at_mut((i + 1) * r);
        let x = &mut left[i * r..];
        let y = &mut right[..r];
        for (a, b) in x.iter_mut().zip(y.iter_mut()) {
            let (p, q) = g.apply_right(*a, *b);
            *a = p;
            *b = q;
        }
    }

    /// `self ← self·G*`.
    pub fn rotate_cols_adjoint(&mut self, g: &CoreTransformation) {
        self.rotate_cols(&g.adjoint());
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.rows];
        for (j, xj) in x.iter().enumerate() {
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.rows + i]
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

/// Rotation `G` on columns `(i, i+1)` such that `(x, y)·G = (0, r)`.
fn annihilate_left(index: usize, x: C64, y: C64) -> CoreTransformation {
    let r = x.norm().hypot(y.norm());
    if r == 0.0 {
        return CoreTransformation::identity(index);
    }
    CoreTransformation::new(index, y / r, -x / r)
}

/// QR factorization by Givens rotations: `a = q·r`.
pub fn qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let mut r = a.clone();
    let mut q = DenseMatrix::identity(a.rows());
    for j in 0..a.cols().min(a.rows()) {
        for i in (j + 1..a.rows()).rev() {
            let (c, s, _) = eliminate(r[(i - 1, j)], r[(i, j)]);
            let g = CoreTransformation { index: i - 1, c, s };
            r.rotate_rows_adjoint(&g);
            r[(i, j)] = ZERO;
            q.rotate_cols(&g);
        }
    }
    (q, r)
}

/// Result of a generalized Schur decomposition `u*·a·v = s`, `u*·b·v = t`.
#[derive(Clone, Debug)]
pub struct GeneralizedSchur {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub s: DenseMatrix,
    pub t: DenseMatrix,
}

impl GeneralizedSchur {
    /// Eigenvalue pairs `(s_jj, t_jj)`.
    pub fn eigenvalues(&self) -> Vec<(C64, C64)> {
        (0..self.s.rows()).map(|j| (self.s[(j, j)], self.t[(j, j)])).collect()
    }
}

/// Homogeneous eigenvalues of the 2×2 pencil `(a, b)`.
pub(crate) fn pencil_2x2_eigenvalues(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> [(C64, C64); 2] {
    let scale = a
        .iter()
        .chain(b.iter())
        .flat_map(|r| r.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return [(ONE, ONE), (ONE, ONE)];
    }
    let a = a.map(|r| r.map(|z| z / scale));
    let b = b.map(|r| r.map(|z| z / scale));
    let c2 = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let c1 = -(a[0][0] * b[1][1] + a[1][1] * b[0][0] - a[0][1] * b[1][0] - a[1][0] * b[0][1]);
    let c0 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let sq = (c1 * c1 - 4.0 * c2 * c0).sqrt();
    let sq = if (c1.conj() * sq).re < 0.0 { -sq } else { sq };
    let q = -(c1 + sq) / 2.0;
    if q.norm() == 0.0 {
        return if c2.norm() > 0.0 { [(ZERO, ONE), (ZERO, ONE)] } else { [(ONE, ZERO), (ONE, ZERO)] };
    }
    [(q, c2), (c0, q)]
}

/// Chordal distance between homogeneous pairs.
pub fn chordal(a: (C64, C64), b: (C64, C64)) -> f64 {
    let na = a.0.norm().hypot(a.1.norm());
    let nb = b.0.norm().hypot(b.1.norm());
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    ((a.0 / na) * (b.1 / nb) - (a.1 / na) * (b.0 / nb)).norm()
}

/// Shift from a trailing 2×2 pencil: the eigenvalue closest to the bottom
/// diagonal ratio, or `None` when no finite candidate exists.
pub(crate) fn wilkinson_2x2(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> Option<C64> {
    let target = (a[1][1], b[1][1]);
    let mut roots = pencil_2x2_eigenvalues(a, b);
    if chordal(roots[1], target) < chordal(roots[0], target) {
        roots.swap(0, 1);
    }
    roots
        .iter()
        .find(|(s, t)| t.norm() > 1e3 * EPS * s.norm() && t.norm() > 0.0)
        .map(|(s, t)| s / t)
}

/// The other finite eigenvalue of the trailing 2×2 pencil, farther from
/// the bottom ratio.
pub(crate) fn far_shift_2x2(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> Option<C64> {
    let target = (a[1][1], b[1][1]);
    let mut roots = pencil_2x2_eigenvalues(a, b);
    if chordal(roots[1], target) > chordal(roots[0], target) {
        roots.swap(0, 1);
    }
    roots
        .iter()
        .find(|(s, t)| t.norm() > 1e3 * EPS * s.norm() && t.norm() > 0.0)
        .map(|(s, t)| s / t)
}

/// Single-shift complex QZ: returns unitary `u`, `v` and triangular `s`, `t`.
pub fn generalized_schur(a: &DenseMatrix, b: &DenseMatrix) -> Result<GeneralizedSchur> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "generalized Schur needs equal square matrices, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let (q, r) = qr(b);
    let mut s = q.adjoint().matmul(a);
    let mut t = r;
    let mut u = q;
    let mut v = DenseMatrix::identity(n);
    if n == 0 {
        return Ok(GeneralizedSchur { u, v, s, t });
    }

    // Hessenberg-triangular reduction.
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            let (c, sn, _) = eliminate(s[(i - 1, j)], s[(i, j)]);
            let g = CoreTransformation { index: i - 1, c, s: sn };
            s.rotate_rows_adjoint(&g);
            s[(i, j)] = ZERO;
            t.rotate_rows_adjoint(&g);
            u.rotate_cols(&g);
            let z = annihilate_left(i - 1, t[(i, i - 1)], t[(i, i)]);
            t.rotate_cols(&z);
            t[(i, i - 1)] = ZERO;
            s.rotate_cols(&z);
            v.rotate_cols(&z);
        }
    }

    let norm_t = t.norm_fro();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let budget = 30 * n.max(1);
    let mut total = 0usize;
    let mut stagnant = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        for j in 1..=hi {
            let h = s[(j, j - 1)];
            if h != ZERO && h.norm() <= EPS * (s[(j - 1, j - 1)].norm() + s[(j, j)].norm()) {
                s[(j, j - 1)] = ZERO;
            }
        }
        if s[(hi, hi - 1)] == ZERO {
            hi -= 1;
            stagnant = 0;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && s[(lo, lo - 1)] != ZERO {
            lo -= 1;
        }

        if let Some(j) = (lo..=hi).find(|&j| t[(j, j)].norm() <= EPS * norm_t) {
            t[(j, j)] = ZERO;
            push_infinite_down(&mut s, &mut t, &mut u, &mut v, lo, j, hi);
            stagnant = 0;
            continue;
        }

        total += 1;
        stagnant += 1;
        if total > budget {
            return Err(Error::Convergence(format!(
                "dense QZ exhausted {budget} iterations with active window [{lo}, {hi}]"
            )));
        }
        let block = |m: &DenseMatrix| {
            [[m[(hi - 1, hi - 1)], m[(hi - 1, hi)]], [m[(hi, hi - 1)], m[(hi, hi)]]]
        };
        let shift = if stagnant.is_multiple_of(15) {
            None
        } else {
            wilkinson_2x2(block(&s), block(&t))
        };
        let mu = shift.unwrap_or_else(|| {
            let mag = (s[(hi, hi)] / t[(hi, hi)]).norm();
            let mag = if mag.is_finite() && mag > 0.0 { mag } else { 1.0 };
            C64::from_polar(mag, rng.gen_range(0.0..std::f64::consts::TAU))
        });
        qz_sweep(&mut s, &mut t, &mut u, &mut v, lo, hi, mu);
    }
    s.clear_lower();
    t.clear_lower();
    Ok(GeneralizedSchur { u, v, s, t })
}

fn qz_sweep(
    s: &mut DenseMatrix,
    t: &mut DenseMatrix,
    u: &mut DenseMatrix,
    v: &mut DenseMatrix,
    lo: usize,
    hi: usize,
    mu: C64,
) {
    let (c, sn, _) = eliminate(s[(lo, lo)] - mu * t[(lo, lo)], s[(lo + 1, lo)]);
    let mut g = CoreTransformation { index: lo, c, s: sn };
    for m in lo..hi {
        if m > lo {
            let (c, sn, _) = eliminate(s[(m, m - 1)], s[(m + 1, m - 1)]);
            g = CoreTransformation { index: m, c, s: sn };
        }
        s.rotate_rows_adjoint(&g);
        if m > lo {
            s[(m + 1, m - 1)] = ZERO;
        }
        t.rotate_rows_adjoint(&g);
        u.rotate_cols(&g);
        let z = annihilate_left(m, t[(m + 1, m)], t[(m + 1, m + 1)]);
        t.rotate_cols(&z);
        t[(m + 1, m)] = ZERO;
        s.rotate_cols(&z);
        v.rotate_cols(&z);
    }
}

/// Moves a zero diagonal entry of `t` at `j` to `hi` and deflates it there.
fn push_infinite_down(
    s: &mut DenseMatrix,
    t: &mut DenseMatrix,
    u: &mut DenseMatrix,
    v: &mut DenseMatrix,
    lo: usize,
    j: usize,
    hi: usize,
) {
    for m in j..hi {
        let (c, sn, _) = eliminate(t[(m, m + 1)], t[(m + 1, m + 1)]);
        let g = CoreTransformation { index: m, c, s: sn };
        s.rotate_rows_adjoint(&g);
        t.rotate_rows_adjoint(&g);
        t[(m + 1, m + 1)] = ZERO;
        t[(m + 1, m)] = ZERO;
        u.rotate_cols(&g);
        if m > lo {
            let z = annihilate_left(m - 1, s[(m + 1, m - 1)], s[(m + 1, m)]);
            s.rotate_cols(&z);
            s[(m + 1, m - 1)] = ZERO;
            t.rotate_cols(&z);
            t[(m, m - 1)] = ZERO;
            v.rotate_cols(&z);
        }
    }
    let z = annihilate_left(hi - 1, s[(hi, hi - 1)], s[(hi, hi)]);
    s.rotate_cols(&z);
    s[(hi, hi - 1)] = ZERO;
    t.rotate_cols(&z);
    t[(hi, hi - 1)] = ZERO;
    v.rotate_cols(&z);
}

/// Unitary `u`, `v` with `u*·a·v` upper and `u*·b·v` lower triangular.
///
/// Goes through the explicit product `a·b*`, so `b` must be nonsingular.
pub fn product_schur_pair(a: &DenseMatrix, b: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = a.rows();
    if !a.is_square() || !b.is_square() || b.rows() != n {
        return Err(Error::Dimension("product Schur pair needs equal square matrices".into()));
    }
    let (_, r) = qr(b);
    let nb = b.norm_fro();
    let tiny = (0..n).map(|j| r[(j, j)].norm()).fold(f64::INFINITY, f64::min);
    if nb == 0.0 || tiny <= (n as f64) * EPS * nb {
        return Err(Error::Preprocessing(
            "the constant coefficient is singular; the Frobenius flavor needs it invertible, use the Gaussian flavor"
                .into(),
        ));
    }
    let schur = generalized_schur(&a.matmul(&b.adjoint()), &DenseMatrix::identity(n))?;
    let u = schur.u;
    let (v, _) = qr(&b.adjoint().matmul(&u));
    Ok((u, v))
}
