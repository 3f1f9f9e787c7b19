//! Dense complex linear algebra: the matrix carrier, exponential, resolvent,
//! positivity and norms.

mod expm;
mod psd;
mod spectrum;

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use expm::{matrix_exponential, ExponentialTable};
pub use psd::{is_positive_semidefinite, PsdVerdict};
pub use spectrum::{eigenvalues, spectral_abscissa, spectrum_clusters, SpectrumCluster};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix".into()));
        }
        Ok(Self(m))
    }

    /// Wraps without validation. Callers guarantee squareness; finiteness is
    /// checked at the public entry points that can produce overflow.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds from row-major entries; `entries.len()` must be a perfect square.
    pub fn from_row_major(entries: &[C64]) -> Result<Self> {
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() || n == 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let flat: Vec<C64> = rows.iter().flat_map(|r| r.iter().map(|&x| c(x, 0.0))).collect();
        Self::from_row_major(&flat)
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self(&self.0 * z)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        Self(&self.0 * c(x, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.dim())
            .map(|j| self.0.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::identity(self.dim());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Assembles a square block matrix; `blocks[i][j]` must all be square of
    /// the same size. `None` blocks are zero.
    pub fn from_blocks(blocks: &[Vec<Option<ComplexMatrix>>], block_dims: &[usize]) -> Result<Self> {
        let nb = block_dims.len();
        if blocks.len() != nb || blocks.iter().any(|r| r.len() != nb) {
            return Err(Error::ShapeMismatch("block layout is not square".into()));
        }
        let offsets: Vec<usize> = block_dims
            .iter()
            .scan(0, |acc, &d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        let n: usize = block_dims.iter().sum();
        let mut m = DMatrix::zeros(n, n);
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    if b.0.nrows() != block_dims[bi] || b.0.ncols() != block_dims[bj] {
                        return Err(Error::ShapeMismatch(format!("block ({bi},{bj})")));
                    }
                    m.view_mut((offsets[bi], offsets[bj]), (block_dims[bi], block_dims[bj]))
                        .copy_from(&b.0);
                }
            }
        }
        Ok(Self(m))
    }

    pub fn sub_block(&self, row: usize, col: usize, size: usize) -> Self {
        Self(self.0.view((row, col), (size, size)).into_owned())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.0[(i, j)] * v[j]).sum()).collect()
    }

    /// Adds `z * other` in place.
    pub fn axpy(&mut self, z: C64, other: &Self) {
        self.0.zip_apply(&other.0, |a, b| *a += z * b);
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $m(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $m(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op rhs.0)
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $m(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 -= &rhs.0;
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, z: C64) -> ComplexMatrix {
        ComplexMatrix(&self.0 * z)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let flat: Vec<[f64; 2]> = self.to_row_major().iter().map(|z| [z.re, z.im]).collect();
        flat.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let flat: Vec<[f64; 2]> = Vec::deserialize(d)?;
        let entries: Vec<C64> = flat.iter().map(|p| c(p[0], p[1])).collect();
        ComplexMatrix::from_row_major(&entries).map_err(serde::de::Error::custom)
    }
}

pub fn hermitian_adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.0.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    m.0.singular_values().max()
}

fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    m.0.singular_values().iter().copied().collect()
}

/// (λI − A)⁻¹. Fails when λI − A is singular to working precision.
pub fn resolvent(a: &ComplexMatrix, lambda: C64) -> Result<ComplexMatrix> {
    let n = a.dim();
    let shifted = &ComplexMatrix::identity(n).scale(lambda) - a;
    let sv = singular_values(&shifted);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= smax * 1e-14 {
        return Err(Error::Singular(format!("lambda*I - A at lambda = {lambda}")));
    }
    let inv = shifted
        .0
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("lambda*I - A at lambda = {lambda}")))?;
    Ok(ComplexMatrix(inv))
}

/// Solves `a * x = b` for square `a`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.0.clone()
        .lu()
        .solve(&b.0)
        .map(ComplexMatrix)
        .ok_or_else(|| Error::Singular("linear system".into()))
}

/// Hermitian square root of a PSD Hermitian matrix (negative eigenvalues are
/// clamped to zero).
pub fn hermitian_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let h = (&m.0 + m.0.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let n = m.dim();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(eig.eigenvalues[i].max(0.0).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    ComplexMatrix(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Singular value decomposition `m = W Σ V*`, returned as (W, σ, V).
pub fn svd(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let s = m.0.clone().svd(true, true);
    let u = s.u.expect("requested U");
    let v_t = s.v_t.expect("requested V*");
    (ComplexMatrix(u), s.singular_values.iter().copied().collect(), ComplexMatrix(v_t.adjoint()))
}

/// Orthonormalizes the columns of a tall `rows x cols` matrix via thin QR and
/// returns the Q factor as a row-major dense matrix.
pub fn orthonormal_columns(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.clone().qr().q()
}
