//! Finite-dimensional symplectic machinery for coherent-preserving
//! encryption.
//!
//! A canonical encryption is an M x M unitary acting on the complex mode
//! amplitudes; on the 2M real canonical coordinates it appears as
//! L = Omega O Omega^-1, where O is the realification of the unitary
//! (entry r e^{i theta} becomes the 2x2 block r [[cos, -sin], [sin, cos]])
//! and Omega is the per-mode diagonal scaling between amplitudes and
//! (q, p) coordinates. Such L preserve the coherent covariance A = Omega^2/4,
//! which is exactly what makes the encrypted state a coherent product state
//! again.
//!
//! Phase masks are the diagonal case and keep an O(M) representation so that
//! very wide bands never materialize a dense matrix.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::waveform::{ModeAmplitudes, ModeGrid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Construction tolerance for unitarity and symplecticity checks.
pub const CONSTRUCTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense(DMatrix<Complex64>),
    Diagonal(Vec<Complex64>),
}

/// An M x M unitary matrix (checked on construction to 1e-10).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexUnitary {
    dim: usize,
    repr: Repr,
}

impl ComplexUnitary {
    pub fn identity(dim: usize) -> Self {
        ComplexUnitary {
            dim,
            repr: Repr::Diagonal(vec![Complex64::new(1.0, 0.0); dim]),
        }
    }

    /// Diagonal unitary with entries exp(i theta_m): always unitary by
    /// construction.
    pub fn phase_mask(thetas: &[f64]) -> Self {
        ComplexUnitary {
            dim: thetas.len(),
            repr: Repr::Diagonal(thetas.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()),
        }
    }

    pub fn from_diagonal(entries: Vec<Complex64>) -> Result<Self> {
        let defect = entries
            .iter()
            .map(|z| (z.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max);
        if defect > CONSTRUCTION_TOL {
            return Err(Error::NotUnitary {
                defect,
                tol: CONSTRUCTION_TOL,
            });
        }
        Ok(ComplexUnitary {
            dim: entries.len(),
            repr: Repr::Diagonal(entries),
        })
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                operator: m.nrows(),
                operand: m.ncols(),
            });
        }
        let dim = m.nrows();
        let product = &m * m.adjoint();
        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                defect = defect.max((product[(i, j)] - want).norm());
            }
        }
        if defect > CONSTRUCTION_TOL {
            return Err(Error::NotUnitary {
                defect,
                tol: CONSTRUCTION_TOL,
            });
        }
        Ok(ComplexUnitary {
            dim,
            repr: Repr::Dense(m),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match &self.repr {
            Repr::Dense(m) => m[(i, j)],
            Repr::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        match &self.repr {
            Repr::Dense(m) => ComplexUnitary {
                dim: self.dim,
                repr: Repr::Dense(m.adjoint()),
            },
            Repr::Diagonal(d) => ComplexUnitary {
                dim: self.dim,
                repr: Repr::Diagonal(d.iter().map(|z| z.conj()).collect()),
            },
        }
    }

    /// Matrix product self * rhs.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                operator: self.dim,
                operand: rhs.dim,
            });
        }
        let repr = match (&self.repr, &rhs.repr) {
            (Repr::Diagonal(a), Repr::Diagonal(b)) => {
                Repr::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => Repr::Dense(self.to_dense() * rhs.to_dense()),
        };
        Ok(ComplexUnitary {
            dim: self.dim,
            repr,
        })
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                operator: self.dim,
                operand: v.len(),
            });
        }
        Ok(match &self.repr {
            Repr::Diagonal(d) => d.iter().zip(v).map(|(u, x)| u * x).collect(),
            Repr::Dense(m) => {
                let x = DVector::from_column_slice(v);
                (m * x).iter().copied().collect()
            }
        })
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Diagonal(d) => {
                DMatrix::from_diagonal(&DVector::from_column_slice(d))
            }
        }
    }
}

impl Serialize for ComplexUnitary {
    /// Row-major [re, im] pairs plus the dimension, matching the
    /// RealSymplectic layout.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self.entry(i, j);
                entries.push((z.re, z.im));
            }
        }
        let mut s = serializer.serialize_struct("ComplexUnitary", 2)?;
        s.serialize_field("M", &self.dim)?;
        s.serialize_field("entries", &entries)?;
        s.end()
    }
}

/// A 2M x 2M real symplectic matrix on interleaved (q1, p1, ..., qM, pM)
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSymplectic {
    mat: DMatrix<f64>,
}

impl RealSymplectic {
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        if !matrix_is_symplectic(&mat, CONSTRUCTION_TOL)? {
            return Err(Error::invalid(
                "symplectic matrix",
                "does not preserve the commutation form",
            ));
        }
        Ok(RealSymplectic { mat })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn modes(&self) -> usize {
        self.mat.nrows() / 2
    }

    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.mat.nrows() != rhs.mat.nrows() {
            return Err(Error::DimensionMismatch {
                operator: self.mat.nrows(),
                operand: rhs.mat.nrows(),
            });
        }
        Ok(RealSymplectic {
            mat: &self.mat * &rhs.mat,
        })
    }
}

impl Serialize for RealSymplectic {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<f64> = self.mat.transpose().as_slice().to_vec(); // row-major
        let mut s = serializer.serialize_struct("RealSymplectic", 2)?;
        s.serialize_field("M", &self.modes())?;
        s.serialize_field("entries", &entries)?;
        s.end()
    }
}

/// Gaussian state parameters: mean vector (length 2M) and symmetric
/// covariance (2M x 2M). Positive semidefiniteness against the commutation
/// form is deliberately not checked.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                operator: cov.nrows(),
                operand: mean.len(),
            });
        }
        if !mean.len().is_multiple_of(2) {
            return Err(Error::OddDimension { dim: mean.len() });
        }
        let scale = cov.abs().max().max(1.0);
        let asym = (&cov - cov.transpose()).abs().max() / scale;
        if asym > CONSTRUCTION_TOL {
            return Err(Error::invalid(
                "covariance",
                format!("not symmetric (max asymmetry {asym:.3e})"),
            ));
        }
        Ok(GaussianParams { mean, cov })
    }
}

/// The diagonal scaling Omega between complex amplitudes and canonical
/// coordinates: per mode, diag(sqrt(2/omega_j), sqrt(2 omega_j)) with
/// hbar = 1.
pub fn omega_matrix(grid: &ModeGrid) -> DMatrix<f64> {
    let m = grid.len();
    let mut mat = DMatrix::zeros(2 * m, 2 * m);
    for (i, &j) in grid.modes().iter().enumerate() {
        let w = grid.omega(j);
        mat[(2 * i, 2 * i)] = (2.0 / w).sqrt();
        mat[(2 * i + 1, 2 * i + 1)] = (2.0 * w).sqrt();
    }
    mat
}

/// Coherent-state covariance A = Omega^2 / 4.
pub fn coherent_covariance(grid: &ModeGrid) -> DMatrix<f64> {
    let m = grid.len();
    let mut mat = DMatrix::zeros(2 * m, 2 * m);
    for (i, &j) in grid.modes().iter().enumerate() {
        let w = grid.omega(j);
        mat[(2 * i, 2 * i)] = 0.5 / w;
        mat[(2 * i + 1, 2 * i + 1)] = 0.5 * w;
    }
    mat
}

/// Mean vector of the coherent state with the given amplitudes:
/// v = Omega (x_1, y_1, ..., x_M, y_M)^T with alpha_j = x_j + i y_j.
pub fn coherent_mean(a: &ModeAmplitudes) -> DVector<f64> {
    let grid = a.grid();
    let mut v = DVector::zeros(2 * grid.len());
    for (i, (&j, z)) in grid.modes().iter().zip(a.amplitudes()).enumerate() {
        let w = grid.omega(j);
        v[2 * i] = (2.0 / w).sqrt() * z.re;
        v[2 * i + 1] = (2.0 * w).sqrt() * z.im;
    }
    v
}

/// Full Gaussian parameters of the coherent state with the given amplitudes.
pub fn coherent_params(a: &ModeAmplitudes) -> GaussianParams {
    GaussianParams {
        mean: coherent_mean(a),
        cov: coherent_covariance(a.grid()),
    }
}

fn matrix_is_symplectic(l: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let dim = l.nrows();
    if dim != l.ncols() {
        return Err(Error::DimensionMismatch {
            operator: dim,
            operand: l.ncols(),
        });
    }
    if !dim.is_multiple_of(2) {
        return Err(Error::OddDimension { dim });
    }
    // J has per-mode blocks [[0, -1], [1, 0]]; compute L J L^T - J blockwise
    // without materializing J. Coherent-preserving L mix canonical
    // coordinates whose natural scales differ by factors of omega, so the
    // residual in row r, column c is weighed against the row norms: the
    // check is |(L J L^T - J)_{rc}| <= tol (1 + |L_r| |L_c|).
    let m = dim / 2;
    let row_norms: Vec<f64> = (0..dim).map(|r| l.row(r).norm()).collect();
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = 0.0;
            for k in 0..m {
                acc += l[(r, 2 * k + 1)] * l[(c, 2 * k)] - l[(r, 2 * k)] * l[(c, 2 * k + 1)];
            }
            let want = match (r % 2, c % 2) {
                (0, 1) if c == r + 1 => -1.0,
                (1, 0) if r == c + 1 => 1.0,
                _ => 0.0,
            };
            if (acc - want).abs() > tol * (1.0 + row_norms[r] * row_norms[c]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Test whether L preserves the Weyl-Segal commutation form to `tol`
/// (relative to the row-norm scale of L, so the verdict is meaningful for
/// matrices carrying physical omega factors).
pub fn is_symplectic(l: &DMatrix<f64>, tol: f64) -> Result<bool> {
    matrix_is_symplectic(l, tol)
}

/// Realify a unitary into the coherent-preserving symplectic
/// L = Omega O Omega^-1, where the (i, j) entry u = r e^{i theta} of U
/// becomes the block r [[cos theta, -sin theta], [sin theta, cos theta]].
pub fn unitary_to_symplectic(u: &ComplexUnitary, grid: &ModeGrid) -> Result<RealSymplectic> {
    if u.dim() != grid.len() {
        return Err(Error::DimensionMismatch {
            operator: u.dim(),
            operand: grid.len(),
        });
    }
    let m = grid.len();
    let mut l = DMatrix::zeros(2 * m, 2 * m);
    let scale: Vec<f64> = grid.modes().iter().map(|&j| grid.omega(j)).collect();
    let mut fill = |i: usize, j: usize, z: Complex64| {
        if z.norm_sqr() == 0.0 {
            return;
        }
        // Omega-conjugated block: rows scale by Omega_i, columns by
        // Omega_j^-1. q rows carry sqrt(2/omega), p rows sqrt(2 omega).
        let qi = (2.0 / scale[i]).sqrt();
        let pi = (2.0 * scale[i]).sqrt();
        let qj = (2.0 / scale[j]).sqrt();
        let pj = (2.0 * scale[j]).sqrt();
        l[(2 * i, 2 * j)] = z.re * qi / qj;
        l[(2 * i, 2 * j + 1)] = -z.im * qi / pj;
        l[(2 * i + 1, 2 * j)] = z.im * pi / qj;
        l[(2 * i + 1, 2 * j + 1)] = z.re * pi / pj;
    };
    match &u.repr {
        Repr::Diagonal(d) => {
            for (i, &z) in d.iter().enumerate() {
                fill(i, i, z);
            }
        }
        Repr::Dense(mat) => {
            for i in 0..m {
                for j in 0..m {
                    fill(i, j, mat[(i, j)]);
                }
            }
        }
    }
    Ok(RealSymplectic { mat: l })
}

/// Encrypt mode amplitudes: beta = U alpha on the same grid.
pub fn apply_encryption(u: &ComplexUnitary, a: &ModeAmplitudes) -> Result<ModeAmplitudes> {
    let beta = u.apply(a.amplitudes())?;
    ModeAmplitudes::new(a.grid().clone(), beta)
}

/// Push Gaussian parameters through a symplectic transformation:
/// mean -> L v, covariance -> L A L^T.
pub fn transform_gaussian(l: &RealSymplectic, g: &GaussianParams) -> Result<GaussianParams> {
    if l.mat.nrows() != g.mean.len() {
        return Err(Error::DimensionMismatch {
            operator: l.mat.nrows(),
            operand: g.mean.len(),
        });
    }
    Ok(GaussianParams {
        mean: &l.mat * &g.mean,
        cov: &l.mat * &g.cov * l.mat.transpose(),
    })
}

/// Pseudo-random unitary from the QR factorization of a Gaussian complex
/// matrix. Deterministic in (dim, seed); used by the invariant suite and
/// property tests.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexUnitary {
    let mut rng = CounterRng::for_trial(seed, 0x5eed);
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.next_gaussian(), rng.next_gaussian())
    });
    let q = raw.qr().q();
    ComplexUnitary::from_matrix(q).expect("QR factor must be unitary")
}
