//! Dense complex vectors and matrices sized for antenna-domain math.
//!
//! Everything here is deliberately small and allocation-simple: the study
//! never needs matrices larger than the antenna counts (8x8), so a dense
//! row-major layout plus a power-iteration eigensolver covers all of it
//! without pulling in a full linear-algebra stack.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Index;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

use crate::error::{Error, Result};

/// Real scalar type underlying all complex arithmetic in this crate.
///
/// Implemented by `f32` and `f64`. The crate root exports `f64` aliases of
/// the common container types for everyday use.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Residual tolerance used by [`CMat::dominant_eigpair`].
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Iteration cap used by [`CMat::dominant_eigpair`].
pub const DEFAULT_EIG_MAX_ITER: usize = 10_000;

/// `|z|` computed as `sqrt(re^2 + im^2)`.
///
/// All precoder-selection metrics go through this one helper so that every
/// code path (search loops, re-evaluation of a wide-band choice, diagnostics)
/// produces bit-identical values for identical inputs.
pub fn cabs<T: Scalar>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVec<T> {
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> CVec<T> {
    /// Wraps a list of complex entries.
    pub fn new(entries: Vec<Complex<T>>) -> Self {
        Self { entries }
    }

    /// Builds a vector from real values (imaginary parts zero).
    pub fn from_reals(reals: &[T]) -> Self {
        Self {
            entries: reals.iter().map(|&r| Complex::new(r, T::zero())).collect(),
        }
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the vector has no entries.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Borrow of the underlying entries.
    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    /// Sum of squared entry moduli.
    pub fn norm_sqr(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Entrywise scaling by a complex factor.
    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            entries: self.entries.iter().map(|&z| z * s).collect(),
        }
    }

    /// Unit-norm copy of `self`.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::Parameter("cannot normalize a zero vector".into()));
        }
        Ok(self.scale(Complex::new(T::one() / n, T::zero())))
    }

    /// Inner product `self^H other` (conjugate-linear in `self`).
    pub fn dot_conj(&self, other: &Self) -> Result<Complex<T>> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "inner product of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            }))
    }

    /// Kronecker product `self (x) other`, length `self.len() * other.len()`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut entries = Vec::with_capacity(self.len() * other.len());
        for a in &self.entries {
            for b in &other.entries {
                entries.push(a * b);
            }
        }
        Self { entries }
    }

    /// Rotates the global phase so the first entry of non-negligible modulus
    /// becomes real non-negative. No-op on the zero vector.
    pub fn phase_normalized(&self) -> Self {
        let threshold = T::epsilon().sqrt();
        let Some(pivot) = self.entries.iter().position(|z| cabs(*z) > threshold) else {
            return self.clone();
        };
        let z = self.entries[pivot];
        let r = cabs(z);
        let rotation = z.conj() / r;
        let mut out = self.scale(rotation);
        // By construction the pivot is now `|z|`; pin its imaginary part to
        // exactly zero so the convention survives rounding.
        out.entries[pivot].im = T::zero();
        out
    }
}

impl<T: Scalar> Index<usize> for CVec<T> {
    type Output = Complex<T>;

    fn index(&self, i: usize) -> &Complex<T> {
        &self.entries[i]
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMat<T> {
    /// Wraps row-major data of the given shape.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at `(r, c)`.
    pub fn at(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    /// Overwrites the entry at `(r, c)`.
    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r * self.cols + c] = v;
    }

    /// Borrow of the row-major entries.
    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    /// Matrix-vector product `self * x`.
    pub fn mul_vec(&self, x: &CVec<T>) -> Result<CVec<T>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let y = row
                .iter()
                .zip(x.entries())
                .fold(Complex::new(T::zero(), T::zero()), |acc, (m, v)| {
                    acc + m * v
                });
            out.push(y);
        }
        Ok(CVec::new(out))
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "adding {}x{} to {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// In-place entrywise accumulation `self += other`.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "adding {}x{} to {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Entrywise scaling by a real factor.
    pub fn scale(&self, s: T) -> Self {
        let s = Complex::new(s, T::zero());
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c).conj());
            }
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc.max(cabs(*z)))
    }

    /// Gram matrix `self^H * self`.
    ///
    /// Computed symmetrically: each upper-triangle entry is evaluated once and
    /// mirrored by conjugation, so the result equals its own conjugate
    /// transpose exactly (not merely up to rounding).
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = Complex::new(T::zero(), T::zero());
                for k in 0..self.rows {
                    s = s + self.at(k, i).conj() * self.at(k, j);
                }
                g.set(i, j, s);
                if j != i {
                    g.set(j, i, s.conj());
                }
            }
        }
        g
    }

    /// Dominant eigenpair of a Hermitian positive semi-definite matrix, via
    /// power iteration from the deterministic start vector `(1, ..., 1)/sqrt(n)`.
    ///
    /// The eigenvalue is the Rayleigh quotient of the returned vector; the
    /// iteration stops once the residual `||m v - sigma v||` drops below
    /// `tol * max(1, sigma)`. The eigenvector is unit-norm with its first
    /// non-negligible entry real non-negative. For degenerate spectra any
    /// unit vector in the dominant eigenspace is a valid result.
    ///
    /// Errors: non-square or non-Hermitian (within `tol`) input, or no
    /// convergence within `max_iter` multiplications.
    pub fn herm_dominant_eigpair(&self, tol: T, max_iter: usize) -> Result<(T, CVec<T>)> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "eigenpair of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n == 0 {
            return Err(Error::Dimension("eigenpair of an empty matrix".into()));
        }
        let herm_tol = tol * T::one().max(self.max_abs());
        let mut max_asym = T::zero();
        for i in 0..n {
            for j in i..n {
                let asym = cabs(self.at(i, j) - self.at(j, i).conj());
                max_asym = max_asym.max(asym);
            }
        }
        if max_asym > herm_tol {
            return Err(Error::NotHermitian {
                max_asymmetry: max_asym.to_f64().unwrap_or(f64::NAN),
                tolerance: herm_tol.to_f64().unwrap_or(f64::NAN),
            });
        }

        let inv_sqrt_n = T::one() / T::from_usize(n).expect("small dimension").sqrt();
        let mut x = CVec::new(vec![Complex::new(inv_sqrt_n, T::zero()); n]);
        let mut y = self.mul_vec(&x)?;
        let mut iterations = 0usize;
        loop {
            // Rayleigh quotient of the unit vector x; real for Hermitian input.
            let sigma = x.dot_conj(&y)?.re;
            let residual = residual_norm(&y, sigma, &x);
            if residual <= tol * T::one().max(sigma.abs()) {
                // Clamp roundoff-scale negatives: the input is PSD by contract.
                return Ok((sigma.max(T::zero()), x.phase_normalized()));
            }
            if iterations >= max_iter {
                return Err(Error::NoConvergence {
                    max_iter,
                    residual: residual.to_f64().unwrap_or(f64::NAN),
                });
            }
            let ny = y.norm();
            if ny == T::zero() {
                // y = 0 implies sigma = 0 and residual = 0, handled above.
                return Ok((T::zero(), x.phase_normalized()));
            }
            x = y.scale(Complex::new(T::one() / ny, T::zero()));
            y = self.mul_vec(&x)?;
            iterations += 1;
        }
    }

    /// [`Self::herm_dominant_eigpair`] with the default tolerance and cap.
    pub fn dominant_eigpair(&self) -> Result<(T, CVec<T>)> {
        self.herm_dominant_eigpair(
            T::from_f64(DEFAULT_EIG_TOL).expect("tolerance fits scalar"),
            DEFAULT_EIG_MAX_ITER,
        )
    }
}

/// `||y - sigma x||` for the power-iteration convergence test.
fn residual_norm<T: Scalar>(y: &CVec<T>, sigma: T, x: &CVec<T>) -> T {
    let s = Complex::new(sigma, T::zero());
    y.entries()
        .iter()
        .zip(x.entries())
        .fold(T::zero(), |acc, (yi, xi)| acc + (yi - s * xi).norm_sqr())
        .sqrt()
}
