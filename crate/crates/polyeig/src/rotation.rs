//! Core transformations and the primitives built on them: eliminators,
//! fusion and turnover.
//!
//! A core transformation at index `i` is the identity except for the 2×2
//! block `[[c, -conj(s)], [s, conj(c)]]` on rows and columns `i`, `i + 1`.
//! Indices are zero-based.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

pub const EPS: f64 = f64::EPSILON / 2.0;

/// Threshold on `|s|` under which a rotation counts as trivial.
pub const TRIVIAL_TOL: f64 = 100.0 * EPS;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// An essentially 2×2 unitary acting on rows `index` and `index + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoreTransformation {
    pub index: usize,
    pub c: C64,
    pub s: C64,
}

impl CoreTransformation {
    /// Builds a transformation from generators, renormalizing them.
    pub fn new(index: usize, c: C64, s: C64) -> Self {
        let (c, s) = normalize(c, s);
        CoreTransformation { index, c, s }
    }

    pub fn identity(index: usize) -> Self {
        CoreTransformation { index, c: ONE, s: ZERO }
    }

    /// The counteridentity `[[0, -1], [1, 0]]`.
    pub fn counteridentity(index: usize) -> Self {
        CoreTransformation { index, c: ZERO, s: ONE }
    }

    /// A real plane rotation by `theta`.
    pub fn rotation(index: usize, theta: f64) -> Self {
        CoreTransformation {
            index,
            c: C64::new(theta.cos(), 0.0),
            s: C64::new(theta.sin(), 0.0),
        }
    }

    /// Diagonal transformation `diag(phase, conj(phase))`.
    pub fn diagonal(index: usize, phase: C64) -> Self {
        CoreTransformation::new(index, phase, ZERO)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        CoreTransformation { index: self.index, c: self.c.conj(), s: -self.s }
    }

    pub fn with_index(self, index: usize) -> Self {
        CoreTransformation { index, ..self }
    }

    /// The active 2×2 block, row-major.
    pub fn block(&self) -> [[C64; 2]; 2] {
        [[self.c, -self.s.conj()], [self.s, self.c.conj()]]
    }

    /// `| |c|² + |s|² − 1 |`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.c.norm_sqr() + self.s.norm_sqr() - 1.0).abs()
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        self.s.norm() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        self.s == ZERO
    }

    /// Sets `s` to zero and makes `c` unimodular.
    pub fn flatten(&mut self) {
        let m = self.c.norm();
        self.c = if m > 0.0 { self.c / m } else { ONE };
        self.s = ZERO;
    }

    /// `G · (x, y)ᵀ`.
    #[inline]
    pub fn apply(&self, x: C64, y: C64) -> (C64, C64) {
        (self.c * x - self.s.conj() * y, self.s * x + self.c.conj() * y)
    }

    /// `G* · (x, y)ᵀ`.
    #[inline]
    pub fn apply_adjoint(&self, x: C64, y: C64) -> (C64, C64) {
        (self.c.conj() * x + self.s.conj() * y, -self.s * x + self.c * y)
    }

    /// `(x, y) · G` for a row vector.
    #[inline]
    pub fn apply_right(&self, x: C64, y: C64) -> (C64, C64) {
        (x * self.c + y * self.s, -x * self.s.conj() + y * self.c.conj())
    }

    /// `Δ · G · Δ*` for `Δ = diag(a, b)` with unimodular `a`, `b` on the
    /// same rows.
    pub fn conj_by_diagonal(&self, a: C64, b: C64) -> Self {
        CoreTransformation {
            index: self.index,
            c: self.c,
            s: self.s * b * a.conj(),
        }
    }

    /// Conjugation by the 2×2 antidiagonal flip.
    pub(crate) fn flipped(&self) -> Self {
        CoreTransformation { index: self.index, c: self.c.conj(), s: -self.s.conj() }
    }

    /// Dense n×n matrix (row-major), for tests.
    pub fn to_dense(&self, n: usize) -> Vec<Vec<C64>> {
        let mut m = vec![vec![ZERO; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        let b = self.block();
        let i = self.index;
        m[i][i] = b[0][0];
        m[i][i + 1] = b[0][1];
        m[i + 1][i] = b[1][0];
        m[i + 1][i + 1] = b[1][1];
        m
    }
}

#[inline]
fn normalize(c: C64, s: C64) -> (C64, C64) {
    let n = c.norm().hypot(s.norm());
    if n == 0.0 {
        (ONE, ZERO)
    } else if n == 1.0 {
        (c, s)
    } else {
        (c / n, s / n)
    }
}

/// Eliminator for `(a, b)`: returns `g` with `g* · (a, b)ᵀ = (r, 0)ᵀ`.
pub fn make_eliminator(index: usize, a: C64, b: C64) -> (CoreTransformation, C64) {
    let (c, s, r) = eliminate(a, b);
    (CoreTransformation { index, c, s }, r)
}

#[inline]
pub(crate) fn eliminate(a: C64, b: C64) -> (C64, C64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        if na == 0.0 {
            return (ONE, ZERO, ZERO);
        }
        return (a / na, ZERO, C64::new(na, 0.0));
    }
    if na == 0.0 {
        return (ZERO, b / nb, C64::new(nb, 0.0));
    }
    let r = na.hypot(nb);
    let (c, s) = normalize(a / r, b / r);
    (c, s, C64::new(r, 0.0))
}

/// Product `g · h` of two transformations on the same rows.
pub fn fuse(g: &CoreTransformation, h: &CoreTransformation) -> Result<CoreTransformation> {
    if g.index != h.index {
        return Err(Error::Contract(format!(
            "fuse needs equal indices, got {} and {}",
            g.index, h.index
        )));
    }
    Ok(fuse_unchecked(g, h))
}

#[inline]
pub(crate) fn fuse_unchecked(g: &CoreTransformation, h: &CoreTransformation) -> CoreTransformation {
    let c = g.c * h.c - g.s.conj() * h.s;
    let s = g.s * h.c + g.c.conj() * h.s;
    CoreTransformation::new(h.index, c, s)
}

/// Refactors `f@i · g@i+1 · h@i` into `f'@i+1 · g'@i · h'@i+1`.
pub fn turnover(
    f: &CoreTransformation,
    g: &CoreTransformation,
    h: &CoreTransformation,
) -> Result<(CoreTransformation, CoreTransformation, CoreTransformation)> {
    if g.index != f.index + 1 || h.index != f.index {
        return Err(Error::Contract(format!(
            "turnover needs pattern (i, i+1, i), got ({}, {}, {})",
            f.index, g.index, h.index
        )));
    }
    Ok(turnover_unchecked(f, g, h))
}

/// Refactors `f@i+1 · g@i · h@i+1` into `f'@i · g'@i+1 · h'@i`.
pub fn turnover_up(
    f: &CoreTransformation,
    g: &CoreTransformation,
    h: &CoreTransformation,
) -> Result<(CoreTransformation, CoreTransformation, CoreTransformation)> {
    if f.index != g.index + 1 || h.index != f.index {
        return Err(Error::Contract(format!(
            "reverse turnover needs pattern (i+1, i, i+1), got ({}, {}, {})",
            f.index, g.index, h.index
        )));
    }
    Ok(turnover_up_unchecked(f, g, h))
}

pub(crate) fn turnover_unchecked(
    f: &CoreTransformation,
    g: &CoreTransformation,
    h: &CoreTransformation,
) -> (CoreTransformation, CoreTransformation, CoreTransformation) {
    let i = f.index;
    // Columns 0 and 1 of f·g·h; column 2 is implied by unitarity.
    let hb = h.block();
    let mut col0 = [hb[0][0], hb[1][0], ZERO];
    let mut col1 = [hb[0][1], hb[1][1], ZERO];
    for col in [&mut col0, &mut col1] {
        let (a, b) = g.apply(col[1], col[2]);
        col[1] = a;
        col[2] = b;
        let (a, b) = f.apply(col[0], col[1]);
        col[0] = a;
        col[1] = b;
    }
    // Nothing to eliminate: keep the identity rather than a diagonal phase.
    let fp = if col0[2] == ZERO {
        CoreTransformation::identity(i + 1)
    } else {
        let (fc, fs, r) = eliminate(col0[1], col0[2]);
        col0[1] = r;
        col0[2] = ZERO;
        CoreTransformation { index: i + 1, c: fc, s: fs }
    };
    let (a, b) = fp.apply_adjoint(col1[1], col1[2]);
    col1[1] = a;
    col1[2] = b;
    let (gc, gs, _) = eliminate(col0[0], col0[1]);
    let gp = CoreTransformation { index: i, c: gc, s: gs };
    // Column 0 is now e_0 (unit norm, real positive pivot), so the remaining
    // factor acts on rows 1, 2 and its first column sits in column 1.
    let (_, b) = gp.apply_adjoint(col1[0], col1[1]);
    let hp = CoreTransformation::new(i + 1, b, col1[2]);
    (fp, gp, hp)
}

pub(crate) fn turnover_up_unchecked(
    f: &CoreTransformation,
    g: &CoreTransformation,
    h: &CoreTransformation,
) -> (CoreTransformation, CoreTransformation, CoreTransformation) {
    let i = g.index;
    let (a, b, c) = turnover_unchecked(
        &f.flipped().with_index(i),
        &g.flipped().with_index(i + 1),
        &h.flipped().with_index(i),
    );
    (
        a.flipped().with_index(i),
        b.flipped().with_index(i + 1),
        c.flipped().with_index(i),
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    type M3 = [[C64; 3]; 3];

    pub(crate) fn embed3(g: &CoreTransformation, offset: usize) -> M3 {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        let b = g.block();
        let i = g.index - offset;
        m[i][i] = b[0][0];
        m[i][i + 1] = b[0][1];
        m[i + 1][i] = b[1][0];
        m[i + 1][i + 1] = b[1][1];
        m
    }

    pub(crate) fn mul3(a: &M3, b: &M3) -> M3 {
        let mut m = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|p| a[i][p] * b[p][j]).sum();
            }
        }
        m
    }

    fn product(f: &CoreTransformation, g: &CoreTransformation, h: &CoreTransformation, offset: usize) -> M3 {
        mul3(&mul3(&embed3(f, offset), &embed3(g, offset)), &embed3(h, offset))
    }

    fn distance(a: &M3, b: &M3) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn arb_core(index: usize) -> impl Strategy<Value = CoreTransformation> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("nonzero", |(a, b, c, d)| a.abs() + b.abs() + c.abs() + d.abs() > 1e-3)
            .prop_map(move |(a, b, c, d)| CoreTransformation::new(index, C64::new(a, b), C64::new(c, d)))
    }

    #[test]
    fn eliminator_examples() {
        let (g, r) = make_eliminator(0, ONE, ZERO);
        assert_eq!((g.c, g.s, r), (ONE, ZERO, ONE));
        let (g, r) = make_eliminator(0, ZERO, ONE);
        assert_eq!((g.c, g.s, r), (ZERO, ONE, ONE));
        let (g, r) = make_eliminator(0, C64::new(3.0, 0.0), C64::new(4.0, 0.0));
        assert!((g.c - 0.6).norm() < 1e-16 && (g.s - 0.8).norm() < 1e-16 && (r - 5.0).norm() < 1e-15);
        let (g, r) = make_eliminator(0, ZERO, ZERO);
        assert_eq!((g, r), (CoreTransformation::identity(0), ZERO));
    }

    #[test]
    fn fuse_examples() {
        let f = CoreTransformation::counteridentity(2);
        // F is the SU(2) counteridentity, so F·F = −I: trivial with c = −1.
        let ff = fuse(&f, &f).unwrap();
        assert!(ff.s.norm() == 0.0 && (ff.c + 1.0).norm() == 0.0);
        let g = CoreTransformation::rotation(2, 0.3);
        assert_eq!(fuse(&g, &CoreTransformation::identity(2)).unwrap(), g);
        let sum = fuse(&CoreTransformation::rotation(1, 0.3), &CoreTransformation::rotation(1, 0.5)).unwrap();
        let expect = CoreTransformation::rotation(1, 0.8);
        assert!((sum.c - expect.c).norm() < 1e-15 && (sum.s - expect.s).norm() < 1e-15);
        assert!(fuse(&g, &CoreTransformation::identity(3)).is_err());
    }

    #[test]
    fn turnover_examples() {
        let g = CoreTransformation::rotation(1, 0.7);
        let (a, b, c) = turnover(&CoreTransformation::identity(0), &g, &CoreTransformation::identity(0)).unwrap();
        assert!(distance(&product(&a, &b, &c, 0), &embed3(&g, 0)) < 1e-15);
        // QR order leaves the nontrivial factor in the last slot.
        assert!(a.s.norm() == 0.0 && b.s.norm() == 0.0);
        let f = CoreTransformation::counteridentity(0);
        let f1 = CoreTransformation::counteridentity(1);
        let (a, b, c) = turnover(&f, &f1, &f).unwrap();
        assert!(distance(&product(&f, &f1, &f, 0), &product(&a, &b, &c, 0)) < 1e-15);
        assert!(turnover(&f, &f, &f).is_err());
        assert!(turnover_up(&f, &f1, &f1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn turnover_preserves_product(f in arb_core(4), g in arb_core(5), h in arb_core(4)) {
            let (a, b, c) = turnover(&f, &g, &h).unwrap();
            prop_assert_eq!((a.index, b.index, c.index), (5, 4, 5));
            prop_assert!(distance(&product(&f, &g, &h, 4), &product(&a, &b, &c, 4)) <= 50.0 * EPS);
            for x in [a, b, c] {
                prop_assert!(x.unitarity_defect() <= 10.0 * EPS);
            }
        }

        #[test]
        fn reverse_turnover_preserves_product(f in arb_core(5), g in arb_core(4), h in arb_core(5)) {
            let (a, b, c) = turnover_up(&f, &g, &h).unwrap();
            prop_assert_eq!((a.index, b.index, c.index), (4, 5, 4));
            prop_assert!(distance(&product(&f, &g, &h, 4), &product(&a, &b, &c, 4)) <= 50.0 * EPS);
        }

        #[test]
        fn eliminator_zeroes_second_entry(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64, d in -1e3..1e3f64) {
            let (x, y) = (C64::new(a, b), C64::new(c, d));
            let (g, r) = make_eliminator(0, x, y);
            let (p, q) = g.apply_adjoint(x, y);
            let scale = x.norm().hypot(y.norm());
            prop_assert!(q.norm() <= 10.0 * EPS * scale);
            prop_assert!((p - r).norm() <= 10.0 * EPS * scale);
            prop_assert!(g.unitarity_defect() <= 10.0 * EPS);
        }

        #[test]
        fn chains_of_operations_stay_unitary(gs in proptest::collection::vec(arb_core(0), 3..40)) {
            let mut acc = CoreTransformation::identity(0);
            for g in &gs {
                acc = fuse(&acc, g).unwrap();
                let (a, b, c) = turnover(&acc, &g.with_index(1), &g.adjoint()).unwrap();
                let (x, _, _) = turnover_up(&a, &b, &c).unwrap();
                acc = fuse(&acc, &x).unwrap();
                prop_assert!(acc.unitarity_defect() <= 10.0 * EPS);
            }
        }
    }
}
