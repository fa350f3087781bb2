//! Single-shift core-chasing QZ on a reduced factored pencil.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{far_shift_2x2, wilkinson_2x2, DenseMatrix};
use crate::error::{Error, Result};
use crate::eigenvectors::ProjectedAccumulator;
use crate::pencil::{FactoredPencil, Recorder};
use crate::rotation::{fuse_unchecked, make_eliminator, turnover_unchecked, CoreTransformation, C64, TRIVIAL_TOL};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

type Block = [[C64; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct QzOptions {
    /// Iterations allowed per eigenvalue.
    pub iterations_per_eigenvalue: usize,
    /// Stagnant iterations before an exceptional shift.
    pub exceptional_every: usize,
    /// Within each cycle of `exceptional_every` stagnant iterations, the
    /// steps after this many (plus 0, 1, 2 in successive cycles) use the
    /// other eigenvalue of the trailing block.
    pub reverse_after: usize,
    /// Deflation threshold on `|s|` of the main sequence.
    pub deflation_tol: f64,
    /// Stagnant iterations after which the bottom rotation of the window
    /// deflates at `deflation_tol·max(1, ‖[M_0 .. M_{d−1}]‖_F)`.
    pub relax_after: usize,
    pub seed: u64,
}

impl Default for QzOptions {
    fn default() -> Self {
        QzOptions {
            iterations_per_eigenvalue: 30,
            exceptional_every: 15,
            reverse_after: 7,
            deflation_tol: TRIVIAL_TOL,
            relax_after: 4,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationStats {
    pub iterations: usize,
    pub exceptional_shifts: usize,
    /// `(iteration, index)` for every deflation found, in order.
    pub deflations: Vec<(usize, usize)>,
    /// Positions of zero eigenvalues deflated before iterating.
    pub zero_deflations: Vec<usize>,
}

/// Converged factored pencil `U*·(S, T)·V = (Ŝ, T̂)`.
#[derive(Clone, Debug)]
pub struct SchurForm {
    pub(crate) pencil: FactoredPencil,
    pub(crate) eigenvalues: Vec<(C64, C64)>,
    pub stats: IterationStats,
    /// Top and bottom `k` rows of `U`, when tracked.
    pub pu: Option<ProjectedAccumulator>,
}

impl SchurForm {
    /// Homogeneous pairs `(σ_j, τ_j)` in diagonal order.
    pub fn eigenvalues(&self) -> &[(C64, C64)] {
        &self.eigenvalues
    }

    pub fn pencil(&self) -> &FactoredPencil {
        &self.pencil
    }

    pub fn into_pencil(self) -> FactoredPencil {
        self.pencil
    }

    pub fn infinite_count(&self) -> usize {
        self.eigenvalues.iter().filter(|(_, t)| *t == ZERO).count()
    }

    pub fn zero_count(&self) -> usize {
        self.eigenvalues.iter().filter(|(s, _)| *s == ZERO).count()
    }

    pub(crate) fn refresh(&mut self, j: usize) {
        let p = &self.pencil;
        self.eigenvalues[j] = (p.q_diag(j) * p.r_diag(j), p.t_diag(j));
    }
}

impl FactoredPencil {
    /// `Π_i diag_j(R_i)`.
    pub(crate) fn r_diag(&self, j: usize) -> C64 {
        self.s_factors.iter().map(|f| f.diag(j)).product()
    }

    /// `Π_i diag_j(T_i)`.
    pub(crate) fn t_diag(&self, j: usize) -> C64 {
        self.t_factors.iter().map(|f| f.diag(j)).product()
    }

    /// `c` of main-sequence rotation `i`, 1 outside the sequence.
    pub(crate) fn q_c(&self, i: isize) -> C64 {
        if i < 0 || i as usize + 1 >= self.n() {
            ONE
        } else {
            self.main_sequence().slot(i as usize).c
        }
    }

    /// Diagonal entry `j` of the unitary factor, exact when its neighbours
    /// are diagonal.
    pub(crate) fn q_diag(&self, j: usize) -> C64 {
        self.q_c(j as isize - 1).conj() * self.q_c(j as isize)
    }
}

fn mul2(a: &Block, b: &Block) -> Block {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn upper(block: (C64, C64, C64)) -> Block {
    [[block.0, block.1], [ZERO, block.2]]
}

/// 2×2 diagonal blocks of `Ŝ = Q·R` and `T̂` at rows `(i, i+1)`. The `Ŝ`
/// block includes the subdiagonal coupling `q_{i,i−1}·r_{i−1,·}`, which
/// dominates when `R` has large off-diagonal entries.
pub fn trailing_pencil_block(p: &FactoredPencil, i: usize) -> Result<(Block, Block)> {
    if i + 1 >= p.n() {
        return Err(Error::Contract(format!("block index {i} out of range for n = {}", p.n())));
    }
    let ident = [[ONE, ZERO], [ZERO, ONE]];
    let mut t = ident;
    for f in p.t_factors() {
        t = mul2(&t, &upper(f.diag_block(i)?));
    }
    let g = p.main_sequence().slot(i);
    let left = p.q_c(i as isize - 1).conj();
    let right = p.q_c(i as isize + 1);
    let q = [[left * g.c, -left * g.s.conj() * right], [g.s, g.c.conj() * right]];
    if i == 0 {
        let mut r = ident;
        for f in p.s_factors() {
            r = mul2(&r, &upper(f.diag_block(i)?));
        }
        return Ok((mul2(&q, &r), t));
    }
    // Rows i−1..i+1 of R, columns i..i+1.
    let mut r = DenseMatrix::identity(3);
    for f in p.s_factors() {
        r = r.matmul(&f.window(i - 1, 3)?);
    }
    let sub = p.main_sequence().slot(i - 1).s;
    let mut s = [[ZERO; 2]; 2];
    for col in 0..2 {
        s[0][col] = sub * r[(0, col + 1)] + q[0][0] * r[(1, col + 1)] + q[0][1] * r[(2, col + 1)];
        s[1][col] = q[1][0] * r[(1, col + 1)] + q[1][1] * r[(2, col + 1)];
    }
    Ok((s, t))
}

/// Eigenvalue of the trailing block closest to its bottom ratio, `None`
/// when both candidates are infinite.
pub fn wilkinson_shift(p: &FactoredPencil, hi: usize) -> Result<Option<C64>> {
    let (s, t) = trailing_pencil_block(p, hi - 1)?;
    Ok(wilkinson_2x2(s, t))
}

/// Flattens main-sequence rotations with `|s| ≤ tol`; returns all indices
/// that are diagonal afterwards.
pub fn check_deflation(p: &mut FactoredPencil, tol: f64) -> Vec<usize> {
    let n = p.n();
    let q = p.q();
    (0..n.saturating_sub(1))
        .filter(|&i| {
            let g = q.slot_mut(i);
            if g.s.norm() <= tol {
                g.flatten();
            }
            g.is_diagonal()
        })
        .collect()
}

/// One implicit single-shift step on the active window `[lo, hi]`.
pub fn qz_step<R: Recorder + ?Sized>(p: &mut FactoredPencil, lo: usize, hi: usize, mu: C64, rec: &mut R) {
    debug_assert!(lo < hi && hi < p.n());
    p.counters.qz_steps += 1;
    let r = p.r_diag(lo);
    let g = *p.main_sequence().slot(lo);
    let left = p.q_c(lo as isize - 1);
    let (u1, _) = make_eliminator(lo, left.conj() * g.c * r - mu * p.t_diag(lo), g.s * r);
    rec.left(&u1);
    let entering = u1.adjoint().conj_by_diagonal(left, ONE);
    let slot = p.q().slot_mut(lo);
    *slot = fuse_unchecked(&entering, slot);

    let mut x = u1;
    loop {
        x = p.carry_left_inverse(x);
        rec.right(&x);
        x = p.carry_left_factors(x);
        let i = x.index;
        if i + 1 == hi {
            let x = x.conj_by_diagonal(ONE, p.q_c(hi as isize));
            let slot = p.q().slot_mut(i);
            *slot = fuse_unchecked(slot, &x);
            p.counters.fusions += 1;
            return;
        }
        let q = p.q();
        let (m, a, b) = turnover_unchecked(q.slot(i), q.slot(i + 1), &x);
        *q.slot_mut(i) = a;
        *q.slot_mut(i + 1) = b;
        p.counters.turnovers += 1;
        rec.left(&m);
        x = m;
    }
}

/// Carries `g`, sitting left of `R_1`, rightwards past the whole chain;
/// returns it as it leaves `T⁻¹` on the right.
pub(crate) fn carry_right<R: Recorder + ?Sized>(p: &mut FactoredPencil, g: CoreTransformation, rec: &mut R) -> CoreTransformation {
    let mut g = g;
    for f in p.s_factors.iter_mut() {
        g = f.pass_lr(&g.adjoint()).adjoint();
    }
    rec.right(&g.adjoint());
    for f in p.t_factors.iter_mut().rev() {
        g = f.pass_rl(&g.adjoint()).adjoint();
    }
    p.counters.pass_throughs += 2 * p.k() as u64;
    g
}

/// Carries `g` from the right end of `T⁻¹` leftwards to the left of `R_1`.
fn carry_back<R: Recorder + ?Sized>(p: &mut FactoredPencil, g: CoreTransformation, rec: &mut R) -> CoreTransformation {
    let g = p.carry_left_inverse(g);
    rec.right(&g);
    p.carry_left_factors(g)
}

/// Deflates the zero eigenvalue signalled by a trivial `B` rotation at
/// position `l` of some `S` factor, isolating it between two diagonal
/// rotations of the main sequence.
pub fn deflate_zero<R: Recorder + ?Sized>(p: &mut FactoredPencil, l: usize, rec: &mut R) -> Result<()> {
    let n = p.n();
    let Some(f) = p.s_factors.iter().position(|f| f.singular_index(TRIVIAL_TOL) == Some(l)) else {
        return Err(Error::Contract(format!("no S factor is singular at position {l}")));
    };
    p.s_factors[f].b_mut(l).s = ZERO;

    // Lower part: q_{n-2}, …, q_l travel right; the one at l comes out
    // diagonal because r_ll = 0. Bringing them back from the right in the
    // opposite order leaves a diagonal rotation at l.
    let mut out: Vec<CoreTransformation> = Vec::new();
    for i in (l..n.saturating_sub(1)).rev() {
        let g = std::mem::replace(p.q().slot_mut(i), CoreTransformation::identity(i));
        out.push(carry_right(p, g, rec));
    }
    if let Some(last) = out.last_mut() {
        last.flatten();
    }
    for g in out.into_iter().rev() {
        let h = carry_back(p, g, rec);
        *p.q().slot_mut(h.index) = h;
    }
    if l + 1 < n {
        p.q().slot_mut(l).flatten();
    }

    // Upper part: similarity with q_0 ⋯ q_{l-1}, chased back through the
    // chain; the rotation at l-1 comes out diagonal.
    if l > 0 {
        for i in 0..l {
            let g = std::mem::replace(p.q().slot_mut(i), CoreTransformation::identity(i));
            rec.left(&g);
            let h = carry_back(p, g, rec);
            *p.q().slot_mut(h.index) = h;
        }
        p.q().slot_mut(l - 1).flatten();
    }
    p.s_factors[f].b_mut(l).s = ZERO;
    Ok(())
}

fn is_isolated(p: &FactoredPencil, l: usize) -> bool {
    let q = p.main_sequence();
    (l == 0 || q.slot(l - 1).is_diagonal()) && (l + 1 >= p.n() || q.slot(l).is_diagonal())
}

/// Deflates every zero eigenvalue visible as a trivial `B` rotation in an
/// `S` factor. Returns the positions handled.
pub fn deflate_zeros<R: Recorder + ?Sized>(p: &mut FactoredPencil, rec: &mut R) -> Result<Vec<usize>> {
    let mut done = Vec::new();
    // Each pass can move other zeros; the loop ends once all are isolated.
    for _ in 0..=p.n() {
        let pending = p
            .s_factors
            .iter()
            .filter_map(|f| f.singular_index(TRIVIAL_TOL))
            .find(|&l| !is_isolated(p, l));
        match pending {
            Some(l) => {
                deflate_zero(p, l, rec)?;
                done.push(l);
            }
            None => return Ok(done),
        }
    }
    Err(Error::Convergence("zero eigenvalues could not be isolated".into()))
}

fn diagonal_pairs(p: &FactoredPencil) -> Vec<(C64, C64)> {
    (0..p.n()).map(|j| (p.q_diag(j) * p.r_diag(j), p.t_diag(j))).collect()
}

fn exceptional_shift(p: &FactoredPencil, hi: usize, rng: &mut ChaCha8Rng) -> C64 {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (p.r_diag(hi)).norm() + (p.r_diag(hi - 1)).norm();
    let t = p.t_diag(hi).norm().max(p.t_diag(hi - 1).norm());
    let scale = if t > 0.0 && s > 0.0 { s / t } else { 1.0 };
    C64::from_polar(scale * rng.gen_range(0.5..1.5), theta)
}

/// Number of singular diagonal positions in the `T` factors. Infinite
/// eigenvalues need no action of their own: iterations carry the trivial
/// rotation upward until it deflates.
pub fn deflate_infinite(p: &FactoredPencil, tol: f64) -> usize {
    p.t_factors.iter().map(|f| f.b_rotations().iter().filter(|b| b.s.norm() <= tol).count()).sum()
}

/// Iterates a reduced pencil to Schur form.
pub fn run<R: Recorder + ?Sized>(mut p: FactoredPencil, rec: &mut R, opts: &QzOptions) -> Result<SchurForm> {
    if !p.is_reduced() || p.sequences().len() != 1 {
        return Err(Error::Contract("QZ needs a reduced pencil".into()));
    }
    let n = p.n();
    let mut stats = IterationStats { zero_deflations: deflate_zeros(&mut p, rec)?, ..Default::default() };
    let budget = opts.iterations_per_eigenvalue * n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut hi = n.saturating_sub(1);
    let mut stagnant = 0usize;
    // Unscaled pencils only reach `|s| ≈ u·‖S‖`; the strict threshold would
    // stall at that floor.
    let loose = opts.deflation_tol * p.spike_norm().max(1.0);
    while hi > 0 {
        if stagnant >= opts.relax_after {
            let g = p.q().slot_mut(hi - 1);
            if g.s.norm() <= loose {
                g.flatten();
            }
        }
        let deflated = check_deflation(&mut p, opts.deflation_tol);
        if deflated.contains(&(hi - 1)) {
            stats.deflations.push((stats.iterations, hi - 1));
            hi -= 1;
            stagnant = 0;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && !deflated.contains(&(lo - 1)) {
            lo -= 1;
        }
        if stats.iterations >= budget {
            return Err(Error::Convergence(format!(
                "window [{lo}, {hi}] unconverged after {} iterations",
                stats.iterations
            )));
        }
        stats.iterations += 1;
        stagnant += 1;
        // A tiny diagonal entry of R just above the last rotation caps how
        // small that rotation can get; moving the other eigenvalue of the
        // trailing block down swaps the pair and lifts the cap.
        let phase = stagnant % opts.exceptional_every;
        let reverse_at = opts.reverse_after + (stagnant / opts.exceptional_every) % 3;
        let mu = if phase == 0 {
            None
        } else if phase > reverse_at {
            let (s, t) = trailing_pencil_block(&p, hi - 1)?;
            far_shift_2x2(s, t)
        } else {
            wilkinson_shift(&p, hi)?
        };
        let mu = mu.unwrap_or_else(|| {
            stats.exceptional_shifts += 1;
            exceptional_shift(&p, hi, &mut rng)
        });
        qz_step(&mut p, lo, hi, mu, rec);
    }
    snap_trivial_factors(&mut p);
    let eigenvalues = diagonal_pairs(&p);
    Ok(SchurForm { pencil: p, eigenvalues, stats, pu: None })
}

/// Makes negligible diagonal entries of the triangular factors exact zeros.
fn snap_trivial_factors(p: &mut FactoredPencil) {
    for f in p.s_factors.iter_mut().chain(p.t_factors.iter_mut()) {
        for i in 0..f.n() {
            let b = f.b_mut(i);
            if b.s.norm() <= TRIVIAL_TOL {
                b.s = ZERO;
                let m = b.c.norm();
                b.c = if m > 0.0 { b.c / m } else { ONE };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{chordal, generalized_schur, DenseMatrix};
    use crate::pencil::{build_companion, factor, DenseRecorder, Flavor, NoRecord};
    use crate::polynomial::PencilSplit;
    use crate::reduction::reduce;
    use crate::rotation::EPS;
    use rand_distr::{Distribution, StandardNormal};

    pub(crate) fn random_split(d: usize, k: usize, seed: u64, flavor: Flavor) -> PencilSplit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gen = || {
            DenseMatrix::from_fn(k, k, |_, _| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        };
        let mut m: Vec<DenseMatrix> = (0..d).map(|_| gen()).collect();
        let mut n: Vec<DenseMatrix> = (0..d).map(|_| gen()).collect();
        match flavor {
            Flavor::Gaussian => m[0].clear_lower(),
            Flavor::Frobenius => m[0].clear_upper(),
        }
        n[d - 1].clear_lower();
        PencilSplit { m, n }
    }

    /// Greedy matching is enough for well separated random spectra.
    pub(crate) fn max_pairing_error(a: &[(C64, C64)], b: &[(C64, C64)]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, chordal(*x, *y)))
                .min_by(|u, v| u.1.total_cmp(&v.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    fn solve(split: &PencilSplit, flavor: Flavor) -> (SchurForm, DenseRecorder) {
        let mut p = factor(split, flavor).unwrap();
        let mut rec = DenseRecorder::new(p.n());
        reduce(&mut p, &mut rec);
        let schur = run(p, &mut rec, &QzOptions::default()).unwrap();
        (schur, rec)
    }

    fn oracle(split: &PencilSplit) -> Vec<(C64, C64)> {
        let (s, t) = build_companion(split);
        generalized_schur(&s, &t).unwrap().eigenvalues()
    }

    #[test]
    fn matches_dense_oracle_on_random_pencils() {
        for flavor in [Flavor::Gaussian, Flavor::Frobenius] {
            for (d, k, seed) in [(1, 1, 0), (1, 2, 1), (2, 2, 2), (3, 3, 3), (4, 2, 4), (2, 5, 5), (6, 1, 6)] {
                let split = random_split(d, k, seed, flavor);
                let (schur, rec) = solve(&split, flavor);
                let err = max_pairing_error(schur.eigenvalues(), &oracle(&split));
                assert!(err < 1e-8, "{flavor:?} d={d} k={k}: {err}");
                let (s, t) = build_companion(&split);
                let n = s.rows();
                let bs = rec.u.matmul(&schur.pencil().dense_s()).matmul(&rec.v.adjoint()).sub(&s).norm_fro();
                let bt = rec.u.matmul(&schur.pencil().dense_t()).matmul(&rec.v.adjoint()).sub(&t).norm_fro();
                assert!(bs <= 1000.0 * EPS * n as f64 * s.norm_fro().powi(2), "{bs}");
                assert!(bt <= 1000.0 * EPS * n as f64 * t.norm_fro().powi(2), "{bt}");
                let ds = schur.pencil().dense_s();
                assert!(ds.max_below_diagonal() <= 1e-12 * s.norm_fro().powi(2));
            }
        }
    }

    #[test]
    fn single_step_preserves_equivalence() {
        for seed in 0..8 {
            let split = random_split(3, 2, seed, Flavor::Gaussian);
            let mut p = factor(&split, Flavor::Gaussian).unwrap();
            reduce(&mut p, &mut NoRecord);
            let (s0, t0) = (p.dense_s(), p.dense_t());
            let mut rec = DenseRecorder::new(p.n());
            qz_step(&mut p, 0, 5, C64::new(0.3, -0.2), &mut rec);
            let (s1, t1) = (p.dense_s(), p.dense_t());
            let ws = rec.u.adjoint().matmul(&s0).matmul(&rec.v);
            let wt = rec.u.adjoint().matmul(&t0).matmul(&rec.v);
            assert!(s1.sub(&ws).norm_fro() <= 200.0 * EPS * s0.norm_fro());
            assert!(t1.sub(&wt).norm_fro() <= 200.0 * EPS * t0.norm_fro());
        }
    }

    #[test]
    fn exact_shift_deflates_two_by_two() {
        let split = random_split(1, 2, 4, Flavor::Gaussian);
        let mut p = factor(&split, Flavor::Gaussian).unwrap();
        reduce(&mut p, &mut NoRecord);
        let (s, t) = trailing_pencil_block(&p, 0).unwrap();
        let roots = crate::dense::pencil_2x2_eigenvalues(s, t);
        let mu = roots[0].0 / roots[0].1;
        qz_step(&mut p, 0, 1, mu, &mut NoRecord);
        assert!(p.main_sequence().slot(0).s.norm() < 1e-12);
    }

    #[test]
    fn pencil_blocks_match_dense_hessenberg() {
        for flavor in [Flavor::Gaussian, Flavor::Frobenius] {
            let mut split = random_split(3, 2, 12, flavor);
            // Large spikes make the subdiagonal coupling matter.
            split.m.iter_mut().for_each(|m| *m = m.scaled(C64::new(1e4, 0.0)));
            let mut p = factor(&split, flavor).unwrap();
            reduce(&mut p, &mut NoRecord);
            let (sd, td) = (p.dense_s(), p.dense_t());
            for i in 0..p.n() - 1 {
                let (s, t) = trailing_pencil_block(&p, i).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        assert!((s[a][b] - sd[(i + a, i + b)]).norm() <= 1e3 * EPS * sd.norm_fro(), "{flavor:?} s at {i}");
                        assert!((t[a][b] - td[(i + a, i + b)]).norm() <= 1e3 * EPS * td.norm_fro(), "{flavor:?} t at {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn shift_examples() {
        // Diagonal pencil diag(2, 3) vs I: the shift is the bottom ratio.
        let s = [[C64::new(2.0, 0.0), ZERO], [ZERO, C64::new(3.0, 0.0)]];
        let i = [[ONE, ZERO], [ZERO, ONE]];
        assert!((wilkinson_2x2(s, i).unwrap() - C64::new(3.0, 0.0)).norm() < 1e-14);
        let b = [[ONE, ZERO], [ZERO, ZERO]];
        let inf = wilkinson_2x2(i, b);
        assert!(inf.is_none() || (inf.unwrap() - ONE).norm() < 1e-14);
    }

    #[test]
    fn identity_block() {
        let k = 2;
        let split = PencilSplit {
            m: vec![DenseMatrix::identity(k).scaled(C64::new(-1.0, 0.0))],
            n: vec![DenseMatrix::identity(k)],
        };
        let mut p = factor(&split, Flavor::Gaussian).unwrap();
        reduce(&mut p, &mut NoRecord);
        let (s, t) = trailing_pencil_block(&p, 0).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { ONE } else { ZERO };
                assert!((t[a][b] - want).norm() < 1e-15);
                assert!((s[a][b].norm() - want.norm()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deflation_scan_reports_flattened_indices() {
        let split = random_split(2, 2, 9, Flavor::Gaussian);
        let mut p = factor(&split, Flavor::Gaussian).unwrap();
        reduce(&mut p, &mut NoRecord);
        assert!(check_deflation(&mut p, TRIVIAL_TOL).is_empty());
        p.q().slot_mut(2).s = C64::new(1e-17, 0.0);
        assert_eq!(check_deflation(&mut p, TRIVIAL_TOL), vec![2]);
        assert!(p.main_sequence().slot(2).is_diagonal());
    }

    fn singular_split(d: usize, k: usize, seed: u64, zeros_m0: &[usize], zeros_nd: &[usize]) -> PencilSplit {
        let mut split = random_split(d, k, seed, Flavor::Gaussian);
        for &z in zeros_m0 {
            split.m[0][(z, z)] = ZERO;
        }
        for &z in zeros_nd {
            split.n[d - 1][(z, z)] = ZERO;
        }
        split
    }

    #[test]
    fn zero_and_infinite_eigenvalues_are_counted() {
        let cases: &[(usize, usize, &[usize], &[usize])] = &[
            (2, 3, &[1], &[]),
            (2, 3, &[0], &[]),
            (2, 3, &[2], &[]),
            (3, 2, &[0, 1], &[]),
            (2, 3, &[], &[1]),
            (2, 3, &[], &[0, 2]),
            (3, 3, &[1], &[2]),
            (1, 4, &[3], &[0]),
        ];
        for (seed, (d, k, z, inf)) in cases.iter().enumerate() {
            let split = singular_split(*d, *k, seed as u64, z, inf);
            let (schur, rec) = solve(&split, Flavor::Gaussian);
            let (s, t) = build_companion(&split);
            let bs = rec.u.matmul(&schur.pencil().dense_s()).matmul(&rec.v.adjoint()).sub(&s).norm_fro();
            let bt = rec.u.matmul(&schur.pencil().dense_t()).matmul(&rec.v.adjoint()).sub(&t).norm_fro();
            assert!(bs <= 1e-12 * s.norm_fro().powi(2) && bt <= 1e-12 * t.norm_fro().powi(2), "case {seed}: {bs} {bt}");
            // Zero diagonal entries bound the counts from above; the oracle
            // decides multiplicities (a nilpotent M_0 can give a simple zero).
            let dense = oracle(&split);
            let zeros = dense.iter().filter(|(s, t)| s.norm() <= 1e-10 * t.norm()).count();
            let infs = dense.iter().filter(|(s, t)| t.norm() <= 1e-10 * s.norm()).count();
            assert!(zeros >= 1.min(z.len()) && zeros <= z.len());
            assert_eq!(schur.zero_count(), zeros, "zeros in case {seed}: {:?}", schur.eigenvalues());
            assert_eq!(schur.infinite_count(), infs, "infinities in case {seed}: {:?}", schur.eigenvalues());
            let err = max_pairing_error(schur.eigenvalues(), &dense);
            assert!(err < 1e-8, "case {seed}: {err}");
        }
    }

    #[test]
    fn infinite_positions_are_counted() {
        let fresh = |split: &PencilSplit| factor(split, Flavor::Gaussian).unwrap();
        assert_eq!(deflate_infinite(&fresh(&random_split(2, 3, 4, Flavor::Gaussian)), TRIVIAL_TOL), 0);
        assert_eq!(deflate_infinite(&fresh(&singular_split(2, 3, 5, &[], &[1])), TRIVIAL_TOL), 1);
        assert_eq!(deflate_infinite(&fresh(&singular_split(2, 3, 6, &[], &[0, 2])), TRIVIAL_TOL), 2);
    }

    #[test]
    fn missing_zero_is_a_contract_error() {
        let mut p = factor(&random_split(2, 2, 1, Flavor::Gaussian), Flavor::Gaussian).unwrap();
        reduce(&mut p, &mut NoRecord);
        assert!(matches!(deflate_zero(&mut p, 1, &mut NoRecord), Err(Error::Contract(_))));
    }
}
