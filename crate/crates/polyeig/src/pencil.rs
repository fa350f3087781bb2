//! Companion pencils of matrix polynomials in exactly factored form.
//!
//! `S` is stored as a chain of descending rotation sequences and
//! upper-triangular spike factors, `T = T_1 ⋯ T_k` as spike factors only.
//! Building the chain involves no arithmetic on the coefficients: every
//! spike is a (possibly sign-flipped) column of the stacked coefficients.

use crate::dense::{generalized_schur, product_schur_pair, DenseMatrix};
use crate::error::{Error, Result};
use crate::polynomial::{MatrixPolynomial, PencilSplit};
use crate::rotation::{fuse_unchecked, turnover_unchecked, CoreTransformation, C64};
use crate::spike::SpikeFactor;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Diagonal entries of the triangularized end coefficients below
/// `SNAP_FACTOR·k·u·‖P_i‖_F` are set to zero, so rank deficiency that the
/// Schur step only resolves to rounding level becomes exact.
pub const SNAP_FACTOR: f64 = 100.0;

/// Which factorization of `S` to use. `T` is always factored the Gaussian
/// way.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Flavor {
    /// `S = 𝒬ᵏ R_1 ⋯ R_k`.
    #[default]
    Gaussian,
    /// `S = 𝒬 R_1 𝒬 R_2 ⋯ 𝒬 R_k`.
    Frobenius,
}

/// A descending sequence of core transformations `G_first ⋯ G_{n−2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSequence {
    slots: Vec<CoreTransformation>,
    first: usize,
}

pub(crate) enum Absorb {
    Passed(CoreTransformation),
    Turned(CoreTransformation),
    Fused,
}

impl RotationSequence {
    /// `F_0 F_1 ⋯ F_{n−2}`, the cyclic down-shift with a sign on its corner.
    pub(crate) fn shift(n: usize) -> Self {
        let slots = (0..n.saturating_sub(1)).map(CoreTransformation::counteridentity).collect();
        RotationSequence { slots, first: 0 }
    }

    pub fn from_rotations(slots: Vec<CoreTransformation>) -> Self {
        RotationSequence { slots, first: 0 }
    }

    /// The rotations still present, in product order.
    pub fn rotations(&self) -> &[CoreTransformation] {
        &self.slots[self.first.min(self.slots.len())..]
    }

    pub fn first_index(&self) -> usize {
        self.first
    }

    pub fn is_empty(&self) -> bool {
        self.first >= self.slots.len()
    }

    pub(crate) fn slot(&self, i: usize) -> &CoreTransformation {
        &self.slots[i]
    }

    pub(crate) fn slot_mut(&mut self, i: usize) -> &mut CoreTransformation {
        &mut self.slots[i]
    }

    pub(crate) fn pop_front(&mut self) -> CoreTransformation {
        let g = self.slots[self.first];
        self.slots[self.first] = CoreTransformation::identity(self.first);
        self.first += 1;
        g
    }

    /// Moves `g` from the right of the sequence to its left.
    pub(crate) fn absorb(&mut self, g: CoreTransformation) -> Absorb {
        let i = g.index;
        if self.is_empty() || i + 1 < self.first {
            return Absorb::Passed(g);
        }
        assert!(i >= self.first, "rotation at {i} cannot cross a sequence starting at {}", self.first);
        if i + 1 == self.slots.len() {
            self.slots[i] = fuse_unchecked(&self.slots[i], &g);
            return Absorb::Fused;
        }
        let (m, a, b) = turnover_unchecked(&self.slots[i], &self.slots[i + 1], &g);
        self.slots[i] = a;
        self.slots[i + 1] = b;
        Absorb::Turned(m)
    }

    fn apply_to_cols(&self, m: &mut DenseMatrix) {
        for g in self.rotations() {
            m.rotate_cols(g);
        }
    }
}

/// Position in the chain representing `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    Sequence(usize),
    Factor(usize),
}

/// Operation counts, for complexity checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    /// Turnovers against rotation sequences (excluding those inside
    /// pass-throughs).
    pub turnovers: u64,
    pub pass_throughs: u64,
    pub sweeps: u64,
    pub fusions: u64,
    pub qz_steps: u64,
    pub swaps: u64,
}

/// The factored pencil `(S, T)`, with `S` a chain and `T = T_1 ⋯ T_k`.
#[derive(Clone, Debug)]
pub struct FactoredPencil {
    n: usize,
    k: usize,
    d: usize,
    flavor: Flavor,
    pub(crate) sequences: Vec<RotationSequence>,
    pub(crate) s_factors: Vec<SpikeFactor>,
    pub(crate) t_factors: Vec<SpikeFactor>,
    pub(crate) layout: Vec<Link>,
    s_spikes: Vec<Vec<C64>>,
    t_spikes: Vec<Vec<C64>>,
    pub(crate) counters: OpCounters,
}

pub(crate) enum Transit {
    Fused,
    Emerged(CoreTransformation),
}

/// Receives the rotations making up the equivalence `U*·(S, T)·V`.
pub trait Recorder {
    /// `U ← U·G`.
    fn left(&mut self, g: &CoreTransformation);
    /// `V ← V·G`.
    fn right(&mut self, g: &CoreTransformation);
}

/// Discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoRecord;

impl Recorder for NoRecord {
    fn left(&mut self, _: &CoreTransformation) {}
    fn right(&mut self, _: &CoreTransformation) {}
}

/// Dense `U` and `V`, for checks on small problems.
#[derive(Clone, Debug)]
pub struct DenseRecorder {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl DenseRecorder {
    pub fn new(n: usize) -> Self {
        DenseRecorder { u: DenseMatrix::identity(n), v: DenseMatrix::identity(n) }
    }
}

impl Recorder for DenseRecorder {
    fn left(&mut self, g: &CoreTransformation) {
        self.u.rotate_cols(g);
    }
    fn right(&mut self, g: &CoreTransformation) {
        self.v.rotate_cols(g);
    }
}

impl<A: Recorder + ?Sized, B: Recorder + ?Sized> Recorder for (&mut A, &mut B) {
    fn left(&mut self, g: &CoreTransformation) {
        self.0.left(g);
        self.1.left(g);
    }
    fn right(&mut self, g: &CoreTransformation) {
        self.0.right(g);
        self.1.right(g);
    }
}

impl FactoredPencil {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn layout(&self) -> &[Link] {
        &self.layout
    }

    pub fn sequences(&self) -> &[RotationSequence] {
        &self.sequences
    }

    pub fn s_factors(&self) -> &[SpikeFactor] {
        &self.s_factors
    }

    pub fn t_factors(&self) -> &[SpikeFactor] {
        &self.t_factors
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    /// Dense `S` from the current chain (roundoff from the spike encoding).
    pub fn dense_s(&self) -> DenseMatrix {
        let mut m = DenseMatrix::identity(self.n);
        for link in &self.layout {
            match *link {
                Link::Sequence(j) => self.sequences[j].apply_to_cols(&mut m),
                Link::Factor(i) => m = m.matmul(&self.s_factors[i].reconstruct().expect("nonzero rho")),
            }
        }
        m
    }

    /// Dense `T` from the current factors.
    pub fn dense_t(&self) -> DenseMatrix {
        let mut m = DenseMatrix::identity(self.n);
        for f in &self.t_factors {
            m = m.matmul(&f.reconstruct().expect("nonzero rho"));
        }
        m
    }

    /// Dense `S` as originally factored, multiplied from the exact spike
    /// columns. Equals the companion `S` without rounding.
    pub fn factored_s(&self) -> DenseMatrix {
        let shift = {
            let mut m = DenseMatrix::identity(self.n);
            RotationSequence::shift(self.n).apply_to_cols(&mut m);
            m
        };
        let mut m = DenseMatrix::identity(self.n);
        for link in &self.layout {
            match *link {
                Link::Sequence(_) => m = m.matmul(&shift),
                Link::Factor(i) => m = m.matmul(&spike_matrix(&self.s_spikes[i], self.s_col(i))),
            }
        }
        m
    }

    /// Dense `T` as originally factored, exact.
    pub fn factored_t(&self) -> DenseMatrix {
        let mut m = DenseMatrix::identity(self.n);
        for (i, x) in self.t_spikes.iter().enumerate() {
            m = m.matmul(&spike_matrix(x, self.n - 1 - i));
        }
        m
    }

    /// Exact spike columns of the `S` factors as built.
    pub fn s_spikes(&self) -> &[Vec<C64>] {
        &self.s_spikes
    }

    /// Frobenius norm of the coefficient part of `S`, `‖[M_0 .. M_{d−1}]‖_F`.
    pub fn spike_norm(&self) -> f64 {
        self.s_spikes.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Exact spike columns of `T_1 .. T_k` as built.
    pub fn t_spikes(&self) -> &[Vec<C64>] {
        &self.t_spikes
    }

    fn s_col(&self, i: usize) -> usize {
        match self.flavor {
            Flavor::Frobenius => self.n - 1,
            Flavor::Gaussian => self.n - 1 - i,
        }
    }

    /// True once a single rotation sequence remains.
    pub fn is_reduced(&self) -> bool {
        self.sequences.iter().skip(1).all(RotationSequence::is_empty)
    }

    /// The remaining sequence after reduction.
    pub fn main_sequence(&self) -> &RotationSequence {
        &self.sequences[0]
    }

    pub(crate) fn q(&mut self) -> &mut RotationSequence {
        &mut self.sequences[0]
    }

    /// Drops emptied sequences so the chain reads `Q R_1 ⋯ R_k`.
    pub(crate) fn compact(&mut self) {
        debug_assert!(self.is_reduced());
        self.sequences.truncate(1);
        self.layout = std::iter::once(Link::Sequence(0)).chain((0..self.k).map(Link::Factor)).collect();
    }

    /// Carries `g`, sitting just right of link `end`, leftwards through
    /// links `end−1, …, 0`.
    pub(crate) fn carry_left(&mut self, end: usize, mut g: CoreTransformation) -> Transit {
        for pos in (0..end).rev() {
            match self.layout[pos] {
                Link::Factor(i) => {
                    g = self.s_factors[i].pass_rl(&g);
                    self.counters.pass_throughs += 1;
                }
                Link::Sequence(j) => match self.sequences[j].absorb(g) {
                    Absorb::Passed(h) => g = h,
                    Absorb::Turned(h) => {
                        self.counters.turnovers += 1;
                        g = h;
                    }
                    Absorb::Fused => {
                        self.counters.fusions += 1;
                        return Transit::Fused;
                    }
                },
            }
        }
        Transit::Emerged(g)
    }

    /// Carries `g` leftwards through `R_k, …, R_1` only.
    pub(crate) fn carry_left_factors(&mut self, mut g: CoreTransformation) -> CoreTransformation {
        for f in self.s_factors.iter_mut().rev() {
            g = f.pass_rl(&g);
        }
        self.counters.pass_throughs += self.k as u64;
        g
    }

    /// Carries `g` from the right of `T⁻¹ = T_k⁻¹ ⋯ T_1⁻¹` to its left.
    pub(crate) fn carry_left_inverse(&mut self, mut g: CoreTransformation) -> CoreTransformation {
        for f in self.t_factors.iter_mut() {
            g = f.pass_lr(&g);
        }
        self.counters.pass_throughs += self.k as u64;
        g
    }

    /// Similarity with `g` from the outer left, then transit back to the
    /// `S` chain's right end.
    pub(crate) fn wrap<R: Recorder + ?Sized>(&mut self, g: CoreTransformation, rec: &mut R) -> CoreTransformation {
        rec.left(&g);
        let g = self.carry_left_inverse(g);
        rec.right(&g);
        g
    }

    /// One sweep: `g`, at the outer left of the chain, is removed by
    /// similarity, reenters on the right and travels left until it fuses
    /// (`None`) or emerges again.
    pub fn sweep<R: Recorder + ?Sized>(&mut self, g: CoreTransformation, rec: &mut R) -> Option<CoreTransformation> {
        self.counters.sweeps += 1;
        let g = self.wrap(g, rec);
        match self.carry_left(self.layout.len(), g) {
            Transit::Fused => None,
            Transit::Emerged(h) => Some(h),
        }
    }
}

fn spike_matrix(x: &[C64], col: usize) -> DenseMatrix {
    let mut m = DenseMatrix::identity(x.len());
    m.col_mut(col).copy_from_slice(x);
    m
}

fn sign(n: usize) -> f64 {
    if (n - 1).is_multiple_of(2) { 1.0 } else { -1.0 }
}

/// Unitary `u`, `v` and `u*·P_i·v` with `u*·P_d·v` upper triangular and
/// `u*·P_0·v` upper (Gaussian) or lower (Frobenius) triangular. The
/// structural zeros are set exactly.
pub fn preprocess(p: &MatrixPolynomial, flavor: Flavor) -> Result<(DenseMatrix, DenseMatrix, MatrixPolynomial)> {
    let d = p.degree();
    let (u, v) = match flavor {
        Flavor::Gaussian => {
            let schur = generalized_schur(p.coeff(0), p.coeff(d))?;
            (schur.u, schur.v)
        }
        Flavor::Frobenius => product_schur_pair(p.coeff(d), p.coeff(0))?,
    };
    let mut coeffs: Vec<DenseMatrix> = p.transformed(&u, &v).coeffs().to_vec();
    coeffs[d].clear_lower();
    match flavor {
        Flavor::Gaussian => coeffs[0].clear_lower(),
        Flavor::Frobenius => coeffs[0].clear_upper(),
    }
    let k = p.size();
    for idx in [0, d] {
        let tol = SNAP_FACTOR * k as f64 * f64::EPSILON * p.coeff(idx).norm_fro();
        for j in 0..k {
            if coeffs[idx][(j, j)].norm() <= tol {
                coeffs[idx][(j, j)] = ZERO;
            }
        }
    }
    Ok((u, v, MatrixPolynomial::new(coeffs)?))
}

/// Dense `S` and `T` of the companion pencil.
pub fn build_companion(split: &PencilSplit) -> (DenseMatrix, DenseMatrix) {
    let (d, k) = (split.degree(), split.size());
    let n = d * k;
    let mut s = DenseMatrix::zeros(n, n);
    let mut t = DenseMatrix::zeros(n, n);
    let last = (d - 1) * k;
    let neg = C64::new(-1.0, 0.0);
    for i in 0..d {
        s.set_block(i * k, last, &split.m[i].scaled(neg));
        if i > 0 {
            s.set_block(i * k, (i - 1) * k, &DenseMatrix::identity(k));
        }
        if i + 1 < d {
            t.set_block(i * k, i * k, &DenseMatrix::identity(k));
        }
        t.set_block(i * k, last, &split.n[i]);
    }
    (s, t)
}

/// Column `j` of the stacked blocks, length `n`.
fn stacked_column(blocks: &[DenseMatrix], j: usize) -> Vec<C64> {
    blocks.iter().flat_map(|b| b.col(j).iter().copied()).collect()
}

fn upper_spikes(blocks: &[DenseMatrix], what: &str) -> Result<Vec<(Vec<C64>, usize)>> {
    let k = blocks[0].rows();
    let n = blocks.len() * k;
    (0..k)
        .map(|i| {
            let col = n - 1 - i;
            let x = stacked_column(blocks, k - 1 - i);
            if x[col + 1..].iter().any(|z| *z != ZERO) {
                return Err(Error::Input(format!("{what} must be upper triangular")));
            }
            Ok((x, col))
        })
        .collect()
}

/// `T_1 .. T_k` with `T = T_1 ⋯ T_k`; `T_i` has its spike in column `n − i`.
pub fn factor_gaussian_t(split: &PencilSplit) -> Result<Vec<SpikeFactor>> {
    gaussian_t_spikes(split)?.iter().map(|(x, col)| SpikeFactor::from_spike(x, *col)).collect()
}

fn gaussian_t_spikes(split: &PencilSplit) -> Result<Vec<(Vec<C64>, usize)>> {
    upper_spikes(&split.n, "the leading coefficient")
}

fn assemble(
    split: &PencilSplit,
    flavor: Flavor,
    s_spikes: Vec<(Vec<C64>, usize)>,
) -> Result<FactoredPencil> {
    let (d, k) = (split.degree(), split.size());
    let n = d * k;
    let t_spikes = gaussian_t_spikes(split)?;
    let s_factors = s_spikes.iter().map(|(x, c)| SpikeFactor::from_spike(x, *c)).collect::<Result<_>>()?;
    let t_factors = t_spikes.iter().map(|(x, c)| SpikeFactor::from_spike(x, *c)).collect::<Result<_>>()?;
    let layout = match flavor {
        Flavor::Gaussian => (0..k).map(Link::Sequence).chain((0..k).map(Link::Factor)).collect(),
        Flavor::Frobenius => (0..k).flat_map(|i| [Link::Sequence(i), Link::Factor(i)]).collect(),
    };
    Ok(FactoredPencil {
        n,
        k,
        d,
        flavor,
        sequences: (0..k).map(|_| RotationSequence::shift(n)).collect(),
        s_factors,
        t_factors,
        layout,
        s_spikes: s_spikes.into_iter().map(|(x, _)| x).collect(),
        t_spikes: t_spikes.into_iter().map(|(x, _)| x).collect(),
        counters: OpCounters::default(),
    })
}

/// `S = 𝒬ᵏ R_1 ⋯ R_k` with `R` the identity carrying the last block column
/// `(−M_1, …, −M_{d−1}, −M_0)`. Needs `M_0` and `N_d` upper triangular.
pub fn factor_gaussian_s(split: &PencilSplit) -> Result<FactoredPencil> {
    let (d, k) = (split.degree(), split.size());
    let n = d * k;
    let neg = C64::new(-1.0, 0.0);
    // Z = F_0 ⋯ F_{n−2} differs from the cyclic shift by a sign on the last
    // k rows of Zᵏ, which goes into the corner block.
    let corner = C64::new(-sign(n), 0.0);
    let blocks: Vec<DenseMatrix> = (1..d)
        .map(|i| split.m[i].scaled(neg))
        .chain(std::iter::once(split.m[0].scaled(corner)))
        .collect();
    let spikes = upper_spikes(&blocks, "the constant coefficient")?;
    assemble(split, Flavor::Gaussian, spikes)
}

/// `S = S_1 ⋯ S_k` with Frobenius companion factors `S_i = 𝒬 R_i`. Needs
/// `M_0` lower and `N_d` upper triangular.
pub fn factor_frobenius(split: &PencilSplit) -> Result<FactoredPencil> {
    let (d, k) = (split.degree(), split.size());
    let n = d * k;
    let neg = C64::new(-1.0, 0.0);
    let blocks: Vec<DenseMatrix> = split.m.iter().map(|m| m.scaled(neg)).collect();
    let corner = sign(n);
    let spikes = (0..k)
        .map(|j| {
            let col = stacked_column(&blocks, j);
            if col[..j].iter().any(|z| *z != ZERO) {
                return Err(Error::Input("the constant coefficient must be lower triangular".into()));
            }
            // Companion column v = col shifted up j rows; R's spike is v
            // rotated up by one with the wrapped entry signed.
            let v: Vec<C64> = (0..n).map(|i| if i + j < n { col[i + j] } else { ZERO }).collect();
            let mut y: Vec<C64> = v[1..].to_vec();
            y.push(v[0] * corner);
            Ok((y, n - 1))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(split, Flavor::Frobenius, spikes)
}

/// Factors the pencil of `split` in the requested flavor.
pub fn factor(split: &PencilSplit, flavor: Flavor) -> Result<FactoredPencil> {
    match flavor {
        Flavor::Gaussian => factor_gaussian_s(split),
        Flavor::Frobenius => factor_frobenius(split),
    }
}
