//! Compact storage of upper-triangular identity-plus-spike matrices.
//!
//! An n×n matrix `R` whose only non-identity column is a spike is embedded in
//! an (n+1)×(n+1) unitary-plus-rank-one matrix `C* (B + e₀ yᵀ)` and stored as
//! the two rotation sequences `C` and `B` (n rotations each). The rank-one
//! part is never stored; it is recovered from the rotations on demand.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rotation::{
    eliminate, fuse_unchecked, turnover_unchecked, turnover_up_unchecked, CoreTransformation, C64,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeFactor {
    n: usize,
    spike_col: usize,
    c: Vec<CoreTransformation>,
    b: Vec<CoreTransformation>,
}

impl SpikeFactor {
    /// Factor of `I + (x − e_l) e_lᵀ`, the identity with column `l` replaced
    /// by `x`. Entries of `x` below position `l` must be zero.
    pub fn from_spike(x: &[C64], l: usize) -> Result<Self> {
        let n = x.len();
        if n == 0 || l >= n {
            return Err(Error::Input(format!("spike column {l} out of range for n = {n}")));
        }
        if let Some(j) = (l + 1..n).find(|&j| x[j] != C64::new(0.0, 0.0)) {
            return Err(Error::Input(format!(
                "spike in column {l} has a nonzero entry in row {j} below the diagonal"
            )));
        }
        let mut v: Vec<C64> = x.to_vec();
        v.push(C64::new(-1.0, 0.0));
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // Rescale first if the squares overflowed.
        if !norm.is_finite() {
            let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            v.iter_mut().for_each(|z| *z /= m);
            let n2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= n2);
        } else {
            v.iter_mut().for_each(|z| *z /= norm);
        }

        let mut c = vec![CoreTransformation::identity(0); n];
        for j in (0..n).rev() {
            if j > l {
                c[j] = CoreTransformation::counteridentity(j);
                v[j] = -v[j + 1];
            } else {
                let (gc, gs, r) = eliminate(v[j], v[j + 1]);
                c[j] = CoreTransformation { index: j, c: gc.conj(), s: -gs };
                v[j] = r;
            }
            v[j + 1] = C64::new(0.0, 0.0);
        }
        let sign = if (n - 1 - l).is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut b = c.clone();
        let twist = CoreTransformation { index: l, c: C64::new(0.0, 0.0), s: C64::new(sign, 0.0) };
        b[l] = fuse_unchecked(&c[l], &twist);
        Ok(SpikeFactor { n, spike_col: l, c, b })
    }

    /// The n×n identity, stored with its spike in the last column.
    pub fn identity(n: usize) -> Self {
        let mut x = vec![C64::new(0.0, 0.0); n];
        x[n - 1] = C64::new(1.0, 0.0);
        SpikeFactor::from_spike(&x, n - 1).expect("identity spike is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Column that carried the spike at construction.
    pub fn spike_col(&self) -> usize {
        self.spike_col
    }

    pub fn c_rotations(&self) -> &[CoreTransformation] {
        &self.c
    }

    pub fn b_rotations(&self) -> &[CoreTransformation] {
        &self.b
    }

    pub(crate) fn b_mut(&mut self, i: usize) -> &mut CoreTransformation {
        &mut self.b[i]
    }

    /// Last entry of `C* e₀`.
    pub fn rho(&self) -> C64 {
        self.c.iter().fold(C64::new(1.0, 0.0), |acc, g| acc * -g.s)
    }

    /// Dense reconstruction of `R` (test and diagnostic use).
    pub fn reconstruct(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let rho = self.rho();
        if rho.norm() == 0.0 {
            return Err(Error::SingularRepresentation("rho vanished".into()));
        }
        let mut m = DenseMatrix::identity(n + 1);
        for g in &self.b {
            m.rotate_cols(g);
        }
        for g in &self.c {
            m.rotate_rows_adjoint(g);
        }
        let mut z = vec![C64::new(0.0, 0.0); n + 1];
        z[0] = C64::new(1.0, 0.0);
        for g in &self.c {
            let i = g.index;
            let (a, b) = g.apply_adjoint(z[i], z[i + 1]);
            z[i] = a;
            z[i + 1] = b;
        }
        let y: Vec<C64> = (0..=n).map(|j| -m[(n, j)] / rho).collect();
        Ok(DenseMatrix::from_fn(n, n, |i, j| m[(i, j)] + z[i] * y[j]))
    }

    /// Diagonal entry `r_ii`.
    #[inline]
    pub(crate) fn diag(&self, i: usize) -> C64 {
        self.b[i].s / self.c[i].s
    }

    /// The 2×2 block `(r_ii, r_{i,i+1}, r_{i+1,i+1})`.
    pub fn diag_block(&self, i: usize) -> Result<(C64, C64, C64)> {
        if i + 1 >= self.n {
            return Err(Error::Contract(format!("block index {i} out of range for n = {}", self.n)));
        }
        let (ci, ci1) = (&self.c[i], &self.c[i + 1]);
        if ci.s.norm() == 0.0 || ci1.s.norm() == 0.0 {
            return Err(Error::SingularRepresentation(format!("trivial C rotation near {i}")));
        }
        Ok(self.diag_block_unchecked(i))
    }

    #[inline]
    pub(crate) fn diag_block_unchecked(&self, i: usize) -> (C64, C64, C64) {
        let (ci, ci1, bi, bi1) = (&self.c[i], &self.c[i + 1], &self.b[i], &self.b[i + 1]);
        let super_diag = (bi1.c * bi.c.conj() * ci1.s - ci.c.conj() * ci1.c * bi1.s) / (ci.s * ci1.s);
        (bi.s / ci.s, super_diag, bi1.s / ci1.s)
    }

    /// Principal `m×m` window of `R` starting at `a`. It depends only on the
    /// rotations with indices `a..a+m`, so it is rebuilt from those alone.
    pub fn window(&self, a: usize, m: usize) -> Result<DenseMatrix> {
        if m == 0 || a + m > self.n {
            return Err(Error::Contract(format!("window {a}+{m} out of range for n = {}", self.n)));
        }
        let local = SpikeFactor {
            n: m,
            spike_col: 0,
            c: self.c[a..a + m].iter().enumerate().map(|(j, g)| g.with_index(j)).collect(),
            b: self.b[a..a + m].iter().enumerate().map(|(j, g)| g.with_index(j)).collect(),
        };
        local.reconstruct()
    }

    /// Index of a trivial `B` rotation, which marks a zero on the diagonal.
    pub fn singular_index(&self, tol: f64) -> Option<usize> {
        self.b.iter().position(|g| g.s.norm() <= tol)
    }

    fn check_index(&self, g: &CoreTransformation) -> Result<()> {
        if g.index + 1 >= self.n {
            return Err(Error::Contract(format!(
                "rotation index {} out of range for n = {}",
                g.index, self.n
            )));
        }
        Ok(())
    }

    /// Moves `g` from the right of `R` to its left: `R·G = G̃·R̃`.
    pub fn pass_through_right_to_left(&mut self, g: &CoreTransformation) -> Result<CoreTransformation> {
        self.check_index(g)?;
        Ok(self.pass_rl(g))
    }

    /// Moves `g` across `R` for inverted use: `G*·R = R̃·G̃*`, returns `G̃`.
    pub fn pass_through_left_to_right(&mut self, g: &CoreTransformation) -> Result<CoreTransformation> {
        self.check_index(g)?;
        Ok(self.pass_lr(g))
    }

    #[inline]
    pub(crate) fn pass_rl(&mut self, g: &CoreTransformation) -> CoreTransformation {
        let i = g.index;
        let (w, bi, bi1) = turnover_unchecked(&self.b[i], &self.b[i + 1], g);
        self.b[i] = bi;
        self.b[i + 1] = bi1;
        let (out, x, y) = turnover_up_unchecked(&self.c[i + 1].adjoint(), &self.c[i].adjoint(), &w);
        self.c[i + 1] = x.adjoint();
        self.c[i] = y.adjoint();
        out
    }

    #[inline]
    pub(crate) fn pass_lr(&mut self, g: &CoreTransformation) -> CoreTransformation {
        let i = g.index;
        let (w, ci, ci1) = turnover_unchecked(&self.c[i], &self.c[i + 1], g);
        self.c[i] = ci;
        self.c[i + 1] = ci1;
        let (bi, bi1, z) = turnover_up_unchecked(&w.adjoint(), &self.b[i], &self.b[i + 1]);
        self.b[i] = bi;
        self.b[i + 1] = bi1;
        z.adjoint()
    }
}
