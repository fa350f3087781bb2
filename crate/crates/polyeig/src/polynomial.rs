//! Matrix polynomials, coefficient splits and scaling.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rotation::C64;

/// `P(λ) = Σ λ^i P_i` with k×k coefficients, `P_0` first.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    k: usize,
    coeffs: Vec<DenseMatrix>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<DenseMatrix>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Input(format!(
                "degree must be at least 1, got {} coefficient(s)",
                coeffs.len()
            )));
        }
        let k = coeffs[0].rows();
        if k == 0 {
            return Err(Error::Input("coefficients must be at least 1x1".into()));
        }
        for (i, c) in coeffs.iter().enumerate() {
            if c.rows() != k || c.cols() != k {
                return Err(Error::Dimension(format!(
                    "coefficient {i} is {}x{}, expected {k}x{k}",
                    c.rows(),
                    c.cols()
                )));
            }
            if !c.is_finite() {
                return Err(Error::Input(format!("coefficient {i} has non-finite entries")));
            }
        }
        if coeffs.last().is_some_and(|c| c.max_abs() == 0.0) {
            return Err(Error::Input("leading coefficient is identically zero".into()));
        }
        Ok(MatrixPolynomial { k, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn coeff(&self, i: usize) -> &DenseMatrix {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[DenseMatrix] {
        &self.coeffs
    }

    /// `√(Σ ‖P_i‖_F²)`.
    pub fn norm(&self) -> f64 {
        let norms: Vec<f64> = self.coeffs.iter().map(DenseMatrix::norm_fro).collect();
        let m = norms.iter().cloned().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * norms.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
    }

    /// Coefficient-wise transpose, whose left eigenvectors are the right
    /// eigenvectors of `self`.
    pub fn transpose(&self) -> Self {
        MatrixPolynomial { k: self.k, coeffs: self.coeffs.iter().map(DenseMatrix::transpose).collect() }
    }

    /// `u*·P_i·v` for every coefficient.
    pub fn transformed(&self, u: &DenseMatrix, v: &DenseMatrix) -> Self {
        let ua = u.adjoint();
        MatrixPolynomial { k: self.k, coeffs: self.coeffs.iter().map(|c| ua.matmul(c).matmul(v)).collect() }
    }

    /// Homogeneous evaluation `Σ P_i σ^i τ^(d−i)`.
    pub fn eval_homogeneous(&self, sigma: C64, tau: C64) -> DenseMatrix {
        let d = self.degree();
        let mut acc = DenseMatrix::zeros(self.k, self.k);
        for (i, c) in self.coeffs.iter().enumerate() {
            let w = sigma.powu(i as u32) * tau.powu((d - i) as u32);
            acc = acc.add(&c.scaled(w));
        }
        acc
    }

    pub fn eval(&self, lambda: C64) -> DenseMatrix {
        self.eval_homogeneous(lambda, C64::new(1.0, 0.0))
    }

    pub(crate) fn map_coeffs(&self, f: impl Fn(&DenseMatrix) -> DenseMatrix) -> Self {
        MatrixPolynomial { k: self.k, coeffs: self.coeffs.iter().map(f).collect() }
    }
}

/// How the coefficients enter the two sides of the pencil:
/// `M_0 = P_0`, `N_d = P_d`, `M_i + N_i = P_i` in between.
#[derive(Clone, Debug, PartialEq)]
pub struct PencilSplit {
    /// `M_0 .. M_{d−1}`.
    pub m: Vec<DenseMatrix>,
    /// `N_1 .. N_d`.
    pub n: Vec<DenseMatrix>,
}

impl PencilSplit {
    /// Everything but `P_d` on the `S` side.
    pub fn standard(p: &MatrixPolynomial) -> Self {
        let d = p.degree();
        let k = p.size();
        let m = (0..d).map(|i| p.coeff(i).clone()).collect();
        let n = (1..=d)
            .map(|i| if i == d { p.coeff(d).clone() } else { DenseMatrix::zeros(k, k) })
            .collect();
        PencilSplit { m, n }
    }

    /// Split with user-chosen `N_1 .. N_{d−1}`; `M_i = P_i − N_i`.
    pub fn with_middle(p: &MatrixPolynomial, middle: &[DenseMatrix]) -> Result<Self> {
        let d = p.degree();
        if middle.len() != d - 1 {
            return Err(Error::Dimension(format!(
                "split needs {} middle blocks, got {}",
                d - 1,
                middle.len()
            )));
        }
        let mut split = PencilSplit::standard(p);
        for (i, nb) in middle.iter().enumerate() {
            if nb.rows() != p.size() || nb.cols() != p.size() {
                return Err(Error::Dimension(format!("split block {} has the wrong shape", i + 1)));
            }
            split.m[i + 1] = p.coeff(i + 1).sub(nb);
            split.n[i] = nb.clone();
        }
        Ok(split)
    }

    pub fn degree(&self) -> usize {
        self.m.len()
    }

    pub fn size(&self) -> usize {
        self.m[0].rows()
    }

    /// `√(‖[M]‖² + ‖[N]‖²) / √(Σ‖P_i‖²)`.
    pub fn balance_ratio(&self, p: &MatrixPolynomial) -> f64 {
        let sq = |v: &[DenseMatrix]| v.iter().map(|b| b.norm_fro().powi(2)).sum::<f64>();
        let pn = p.norm();
        if pn == 0.0 {
            return f64::NAN;
        }
        (sq(&self.m) + sq(&self.n)).sqrt() / pn
    }

    /// `‖S‖_F` of the companion built from this split.
    pub fn s_norm(&self) -> f64 {
        let ones = ((self.degree() - 1) * self.size()) as f64;
        (ones + self.m.iter().map(|b| b.norm_fro().powi(2)).sum::<f64>()).sqrt()
    }

    /// `‖T‖_F` of the companion built from this split.
    pub fn t_norm(&self) -> f64 {
        let ones = ((self.degree() - 1) * self.size()) as f64;
        (ones + self.n.iter().map(|b| b.norm_fro().powi(2)).sum::<f64>()).sqrt()
    }
}

/// Scaling strategies applied before factoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleMode {
    None,
    /// Divide by `max(‖S‖_F, ‖T‖_F)` of the standard companion.
    PencilMax,
    /// Divide by `√(Σ‖P_i‖_F²)`.
    CoefficientNorm,
    /// Right diagonal scaling giving every gathered coefficient column unit
    /// norm.
    BlockColumn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    pub mode: ScaleMode,
    /// Scalar divisor; 1 when unused.
    pub alpha: f64,
    /// Diagonal right scaling `D`, present in block-column mode.
    pub column_scaling: Option<Vec<f64>>,
}

/// Scales `p` for a normwise backward-stable solve.
pub fn scale(p: &MatrixPolynomial, mode: ScaleMode) -> Result<(MatrixPolynomial, ScaleReport)> {
    if p.norm() == 0.0 {
        return Err(Error::Input("zero polynomial".into()));
    }
    let k = p.size();
    let divide = |alpha: f64| {
        let inv = C64::new(1.0 / alpha, 0.0);
        (p.map_coeffs(|c| c.scaled(inv)), ScaleReport { mode, alpha, column_scaling: None })
    };
    Ok(match mode {
        ScaleMode::None => (p.clone(), ScaleReport { mode, alpha: 1.0, column_scaling: None }),
        ScaleMode::CoefficientNorm => divide(p.norm()),
        ScaleMode::PencilMax => {
            let split = PencilSplit::standard(p);
            divide(split.s_norm().max(split.t_norm()))
        }
        ScaleMode::BlockColumn => {
            let diag: Vec<f64> = (0..k)
                .map(|j| {
                    let n = p
                        .coeffs()
                        .iter()
                        .flat_map(|c| c.col(j).iter())
                        .map(|z| z.norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    if n > 0.0 { 1.0 / n } else { 1.0 }
                })
                .collect();
            let scaled = p.map_coeffs(|c| DenseMatrix::from_fn(k, k, |i, j| c[(i, j)] * diag[j]));
            (scaled, ScaleReport { mode, alpha: 1.0, column_scaling: Some(diag) })
        }
    })
}
