//! The full pipeline: scale, triangularize, factor, reduce, iterate and
//! optionally extract eigenvectors.

use crate::dense::DenseMatrix;
use crate::eigenvectors::{all_left_eigenvectors, normalize_vector, residual, Eigenpair, ProjectedAccumulator, SliceChoice};
use crate::error::{Error, Result};
use crate::pencil::{build_companion, factor, preprocess, DenseRecorder, Flavor, NoRecord, OpCounters, Recorder};
use crate::polynomial::{scale, MatrixPolynomial, PencilSplit, ScaleMode, ScaleReport};
use crate::qz::{run, IterationStats, QzOptions};
use crate::reduction::reduce;
use crate::rotation::C64;

/// Which eigenvectors to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Side {
    #[default]
    None,
    /// `wᵀ·P(λ) = 0`.
    Left,
    /// `P(λ)·v = 0`, computed as left eigenvectors of the transpose.
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub flavor: Flavor,
    pub scale: ScaleMode,
    pub vectors: Side,
    pub slice: SliceChoice,
    /// Blocks `N_1 .. N_{d−1}` of a custom split, in the coordinates of the
    /// input polynomial. `None` uses the standard split.
    pub split: Option<Vec<DenseMatrix>>,
    /// Accumulate dense `U`, `V` and report the backward error.
    pub dense_check: bool,
    pub qz: QzOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            flavor: Flavor::Gaussian,
            scale: ScaleMode::CoefficientNorm,
            vectors: Side::None,
            slice: SliceChoice::default(),
            split: None,
            dense_check: false,
            qz: QzOptions::default(),
        }
    }
}

/// `‖U·Ŝ·V* − S‖_F` and `‖U·T̂·V* − T‖_F` for the pencil that was iterated,
/// that is after scaling and triangularization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackwardError {
    pub s_error: f64,
    pub t_error: f64,
    pub s_norm: f64,
    pub t_norm: f64,
    /// Scalar divisor applied before factoring.
    pub alpha: f64,
}

impl BackwardError {
    /// The larger error expressed in the units of the unscaled problem.
    pub fn unscaled(&self) -> f64 {
        self.alpha * self.s_error.max(self.t_error)
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Homogeneous pairs `(σ, τ)`, `λ = σ/τ`.
    pub eigenvalues: Vec<(C64, C64)>,
    /// Eigenpairs in the coordinates of the input, residuals measured on
    /// the input polynomial. Empty unless requested.
    pub eigenpairs: Vec<Eigenpair>,
    pub side: Side,
    pub scale: ScaleReport,
    /// `√(‖[M]‖² + ‖[N]‖²) / √(Σ‖P_i‖²)` of the split that was factored.
    pub balance_ratio: f64,
    pub stats: IterationStats,
    pub counters: OpCounters,
    pub backward: Option<BackwardError>,
}

/// `σ/τ`, or `None` for an infinite eigenvalue.
pub fn finite_value((sigma, tau): (C64, C64)) -> Option<C64> {
    if tau == C64::new(0.0, 0.0) { None } else { Some(sigma / tau) }
}

fn scale_block(b: &DenseMatrix, report: &ScaleReport) -> DenseMatrix {
    let b = b.scaled(C64::new(1.0 / report.alpha, 0.0));
    match &report.column_scaling {
        Some(diag) => DenseMatrix::from_fn(b.rows(), b.cols(), |i, j| b[(i, j)] * diag[j]),
        None => b,
    }
}

pub fn solve(p: &MatrixPolynomial, opts: &SolverOptions) -> Result<Solution> {
    let target = match opts.vectors {
        Side::Right => p.transpose(),
        _ => p.clone(),
    };
    let (scaled, report) = scale(&target, opts.scale)?;
    let (u, v, pre) = preprocess(&scaled, opts.flavor)?;
    let split = match &opts.split {
        None => PencilSplit::standard(&pre),
        Some(middle) => {
            if middle.len() + 1 != p.degree() {
                return Err(Error::Dimension(format!(
                    "a split of a degree-{} polynomial needs {} blocks, got {}",
                    p.degree(),
                    p.degree() - 1,
                    middle.len()
                )));
            }
            let ua = u.adjoint();
            let moved: Vec<DenseMatrix> = middle
                .iter()
                .map(|b| {
                    let b = if opts.vectors == Side::Right { b.transpose() } else { b.clone() };
                    ua.matmul(&scale_block(&b, &report)).matmul(&v)
                })
                .collect();
            PencilSplit::with_middle(&pre, &moved)?
        }
    };
    let balance_ratio = split.balance_ratio(&pre);
    let mut pencil = factor(&split, opts.flavor)?;
    let n = pencil.n();
    let k = p.size();

    let mut pu = (opts.vectors != Side::None).then(|| ProjectedAccumulator::new(n, k));
    let mut dense = opts.dense_check.then(|| DenseRecorder::new(n));
    let mut none_a = NoRecord;
    let mut none_b = NoRecord;
    let first: &mut dyn Recorder = match pu.as_mut() {
        Some(r) => r,
        None => &mut none_a,
    };
    let second: &mut dyn Recorder = match dense.as_mut() {
        Some(r) => r,
        None => &mut none_b,
    };
    let mut rec = (first, second);
    reduce(&mut pencil, &mut rec);
    let mut schur = run(pencil, &mut rec, &opts.qz)?;

    let backward = dense.map(|rec| {
        let (s, t) = build_companion(&split);
        let s_hat = schur.pencil().dense_s();
        let t_hat = schur.pencil().dense_t();
        let va = rec.v.adjoint();
        BackwardError {
            s_error: rec.u.matmul(&s_hat).matmul(&va).sub(&s).norm_fro(),
            t_error: rec.u.matmul(&t_hat).matmul(&va).sub(&t).norm_fro(),
            s_norm: s.norm_fro(),
            t_norm: t.norm_fro(),
            alpha: report.alpha,
        }
    });
    let eigenvalues = schur.eigenvalues().to_vec();
    let stats = schur.stats.clone();

    let eigenpairs = match pu {
        None => Vec::new(),
        Some(acc) => {
            schur.pu = Some(acc);
            let raw = all_left_eigenvectors(&mut schur, &pre, opts.slice)?;
            let back = DenseMatrix::from_fn(k, k, |i, j| u[(i, j)].conj());
            raw.into_iter()
                .map(|pair| {
                    let mut w = back.mul_vec(&pair.vector);
                    normalize_vector(&mut w);
                    let residual = residual(&target, pair.lambda, &w);
                    Eigenpair { lambda: pair.lambda, vector: w, residual }
                })
                .collect()
        }
    };
    let counters = schur.pencil().counters();
    Ok(Solution {
        eigenvalues,
        eigenpairs,
        side: opts.vectors,
        scale: report,
        balance_ratio,
        stats,
        counters,
        backward,
    })
}
