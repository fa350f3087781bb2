//! Reordering of the factored Schur form and left eigenvector extraction.

use crate::dense::{chordal, DenseMatrix};
use crate::error::{Error, Result};
use crate::pencil::{NoRecord, Recorder};
use crate::polynomial::MatrixPolynomial;
use crate::qz::{carry_right, trailing_pencil_block, SchurForm};
use crate::rotation::{fuse_unchecked, make_eliminator, CoreTransformation, C64, EPS};

/// The rows of `U` needed for eigenvectors: top `k` then bottom `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedAccumulator {
    k: usize,
    pu: DenseMatrix,
}

impl ProjectedAccumulator {
    pub fn new(n: usize, k: usize) -> Self {
        let pu = DenseMatrix::from_fn(2 * k, n, |i, j| {
            let row = if i < k { i } else { n - k + (i - k) };
            if row == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        ProjectedAccumulator { k, pu }
    }

    /// `pu ← pu·G`.
    pub fn accumulate(&mut self, g: &CoreTransformation) {
        self.pu.rotate_cols(g);
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.pu
    }

    /// Top `k` entries of column `j` of `U`.
    pub fn top(&self, j: usize) -> Vec<C64> {
        self.pu.col(j)[..self.k].to_vec()
    }

    /// Bottom `k` entries of column `j` of `U`.
    pub fn bottom(&self, j: usize) -> Vec<C64> {
        self.pu.col(j)[self.k..].to_vec()
    }
}

impl Recorder for ProjectedAccumulator {
    fn left(&mut self, g: &CoreTransformation) {
        self.accumulate(g);
    }
    fn right(&mut self, _: &CoreTransformation) {}
}

/// An eigenvalue with a unit-norm left eigenvector `w`, `wᵀ·P(λ) ≈ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub lambda: (C64, C64),
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Exchanges the eigenvalues at positions `i` and `i + 1`. Returns `false`
/// (and does nothing) when they coincide.
pub fn swap_adjacent(schur: &mut SchurForm, i: usize) -> Result<bool> {
    match schur.pu.take() {
        Some(mut pu) => {
            let r = swap_with(schur, i, &mut pu);
            schur.pu = Some(pu);
            r
        }
        None => swap_with(schur, i, &mut NoRecord),
    }
}

/// [`swap_adjacent`] reporting its rotations to `rec`.
pub fn swap_with<R: Recorder + ?Sized>(schur: &mut SchurForm, i: usize, rec: &mut R) -> Result<bool> {
    let p = &mut schur.pencil;
    if i + 1 >= p.n() {
        return Err(Error::Contract(format!("swap index {i} out of range for n = {}", p.n())));
    }
    if !p.main_sequence().rotations().iter().all(CoreTransformation::is_diagonal) {
        return Err(Error::Contract("swaps need a fully deflated Schur form".into()));
    }
    let (s, t) = trailing_pencil_block(p, i)?;
    let (first, second) = ((s[0][0], t[0][0]), (s[1][1], t[1][1]));
    if chordal(first, second) <= 10.0 * EPS {
        return Ok(false);
    }
    // Right eigenvector of the block for the second eigenvalue, then the
    // common direction of its images under both matrices.
    let (sig, tau) = second;
    let m00 = tau * s[0][0] - sig * t[0][0];
    let m01 = tau * s[0][1] - sig * t[0][1];
    let x = [m01, -m00];
    let sx = [s[0][0] * x[0] + s[0][1] * x[1], s[1][1] * x[1]];
    let tx = [t[0][0] * x[0] + t[0][1] * x[1], t[1][1] * x[1]];
    let norm = |v: &[C64; 2]| v[0].norm().hypot(v[1].norm());
    let y = if norm(&sx) >= norm(&tx) { sx } else { tx };
    let (g, _) = make_eliminator(i, y[0], y[1]);

    rec.left(&g);
    let h = p.carry_left_inverse(g);
    rec.right(&h);
    let h = p.carry_left_factors(h);
    // The mismatch between g and h sits left of R, where flattening drops
    // |s|·‖row_i(R)‖. One lap through R and T⁻¹ scales |s| by about
    // |σ₂τ₁/σ₁τ₂|, so it is carried around first when that shrinks it.
    let g_r = g.conj_by_diagonal(p.q_diag(i).conj(), p.q_diag(i + 1).conj());
    let e = fuse_unchecked(&g_r.adjoint(), &h);
    let gain = (second.0 * first.1).norm() / (first.0 * second.1).norm();
    let e = if gain < 1.0 {
        let x = carry_right(p, e, rec);
        rec.left(&x.adjoint());
        x
    } else {
        e
    };
    let entering = e.conj_by_diagonal(p.q_c(i as isize - 1), C64::new(1.0, 0.0));
    let slot = p.q().slot_mut(i);
    *slot = fuse_unchecked(&entering, slot);
    slot.flatten();
    p.counters.swaps += 1;
    schur.refresh(i);
    schur.refresh(i + 1);
    Ok(true)
}

/// `‖wᵀ·P(λ)‖ / Σ|λ|^j`, evaluated homogeneously so infinite eigenvalues
/// are covered.
pub fn residual(p: &MatrixPolynomial, lambda: (C64, C64), w: &[C64]) -> f64 {
    let (sigma, tau) = normalize_pair(lambda);
    let d = p.degree();
    let m = p.eval_homogeneous(sigma, tau);
    let row: Vec<C64> = (0..p.size()).map(|j| w.iter().zip(m.col(j)).map(|(a, b)| a * b).sum()).collect();
    let num = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = (0..=d).map(|i| sigma.norm().powi(i as i32) * tau.norm().powi((d - i) as i32)).sum();
    num / den
}

fn normalize_pair((s, t): (C64, C64)) -> (C64, C64) {
    let m = s.norm().max(t.norm());
    if m == 0.0 { (s, t) } else { (s / m, t / m) }
}

/// Unit norm, first significant entry real positive.
pub fn normalize_vector(w: &mut [C64]) {
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let big = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = w.iter().find(|z| z.norm() > 1e-10 * big).copied().unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm() / norm;
    w.iter_mut().for_each(|z| *z *= phase);
}

/// Which `k` entries of the pencil eigenvector become `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SliceChoice {
    /// Top slice when `|λ| ≤ 1`, bottom slice otherwise.
    Modulus,
    /// Both slices; keeps the one with the smaller residual.
    #[default]
    SmallerResidual,
}

/// Left eigenvector for the eigenvalue at the bottom of the Schur form,
/// in the coordinates of the polynomial the pencil was built from.
pub fn left_eigenvector(schur: &SchurForm, p: &MatrixPolynomial, choice: SliceChoice) -> Result<Eigenpair> {
    let pu = schur.pu.as_ref().ok_or_else(|| Error::Contract("no accumulated U".into()))?;
    let n = schur.pencil.n();
    let lambda = schur.eigenvalues[n - 1];
    let (top, bottom) = (pu.top(n - 1), pu.bottom(n - 1));
    let (first, other) = if lambda.0.norm() <= lambda.1.norm() { (top, bottom) } else { (bottom, top) };
    let candidate = |slice: &[C64]| {
        let size = slice.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (size > 10.0 * EPS).then(|| {
            let mut w: Vec<C64> = slice.iter().map(|z| z.conj()).collect();
            normalize_vector(&mut w);
            let residual = residual(p, lambda, &w);
            Eigenpair { lambda, vector: w, residual }
        })
    };
    let primary = candidate(&first);
    let pair = match (choice, primary) {
        (SliceChoice::Modulus, Some(pair)) => Some(pair),
        (SliceChoice::SmallerResidual, Some(pair)) => match candidate(&other) {
            Some(alt) if alt.residual < pair.residual => Some(alt),
            _ => Some(pair),
        },
        (_, None) => candidate(&other),
    };
    pair.ok_or_else(|| Error::Extraction(format!("both slices vanish for eigenvalue {}", n - 1)))
}

/// Every eigenpair: extract at the bottom, bubble that eigenvalue to the
/// top, repeat. Uses `(n − 1)²` swaps.
pub fn all_left_eigenvectors(
    schur: &mut SchurForm,
    p: &MatrixPolynomial,
    choice: SliceChoice,
) -> Result<Vec<Eigenpair>> {
    let n = schur.pencil.n();
    let mut out = Vec::with_capacity(n);
    for round in 0..n {
        out.push(left_eigenvector(schur, p, choice)?);
        if round + 1 < n {
            for i in (0..n - 1).rev() {
                swap_adjacent(schur, i)?;
            }
        }
    }
    Ok(out)
}
