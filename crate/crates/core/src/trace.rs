//! Matrix-valued functions on non-crossing pair partitions.
//!
//! For a square matrix `V`, every partition gets a diagonal matrix `V(π)`:
//! one block maps to `τ(V)` (column sums on the diagonal), a covered partition
//! maps to `τ(V(π₁)⋯V(π_r)·V)` over the pieces of its interior, and anything
//! else is the product over its covered pieces. The scalar `v(π)` is the
//! normalized trace of `V(π)`. The variant `V₀(π)` replaces the right factor
//! `V` by its main diagonal and `v₀` is the (unnormalized) trace, extended
//! multiplicatively over the covered pieces.
//!
//! [`colored_oracle_v`] and [`colored_oracle_v0`] evaluate the same quantities
//! as explicit sums over block colorings and serve as an independent check.

use crate::ncpart::NcPairPartition;
use crate::numeric::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix rows have unequal lengths")]
    Ragged,
    #[error("matrix must have at least one row")]
    EmptyMatrix,
    #[error("V0(π) is only defined for covered partitions")]
    NotCovered,
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, TraceError> {
        let n = rows.len();
        if n == 0 {
            return Err(TraceError::EmptyMatrix);
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(TraceError::Ragged);
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self { n, entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn scale(&self, c: &T) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    /// Main diagonal as a diagonal matrix (`V₀`).
    pub fn main_diagonal(&self) -> DiagonalMatrix<T> {
        DiagonalMatrix::new((0..self.n).map(|i| self.get(i, i).clone()).collect())
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    /// `D·self`, scaling row `i` by `d_i`.
    pub fn left_diag_mul(&self, d: &DiagonalMatrix<T>) -> Self {
        Self::from_fn(self.n, |i, j| d.diag[i].clone() * self.get(i, j).clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SquareMatrix<U> {
        SquareMatrix {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

/// Diagonal matrix stored as its diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMatrix<T> {
    pub diag: Vec<T>,
}

impl<T: Scalar> DiagonalMatrix<T> {
    pub fn new(diag: Vec<T>) -> Self {
        Self { diag }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            diag: vec![T::one(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a.clone() * b.clone())
                .collect(),
        }
    }

    /// `τ(self · V)` for diagonal `self`: entry `q` is `Σ_j self_j v_{j,q}`.
    pub fn tau_times(&self, v: &SquareMatrix<T>) -> Self {
        let n = v.dim();
        let diag = (0..n)
            .map(|q| (0..n).fold(T::zero(), |acc, j| acc + self.diag[j].clone() * v.get(j, q).clone()))
            .collect();
        Self { diag }
    }

    /// `Tr`.
    pub fn trace(&self) -> T {
        self.diag.iter().fold(T::zero(), |acc, x| acc + x.clone())
    }

    /// Normalized trace `tr = Tr / n`.
    pub fn normalized_trace(&self) -> T {
        self.trace() / T::from_i64(self.diag.len() as i64)
    }
}

/// Column sums on the diagonal.
pub fn tau<T: Scalar>(v: &SquareMatrix<T>) -> DiagonalMatrix<T> {
    DiagonalMatrix::identity(v.dim()).tau_times(v)
}

/// `V(π)`; the empty partition maps to the identity.
pub fn v_matrix<T: Scalar>(pi: &NcPairPartition, v: &SquareMatrix<T>) -> DiagonalMatrix<T> {
    let decomposition = pi.decompose();
    let product = decomposition
        .segments
        .iter()
        .fold(DiagonalMatrix::identity(v.dim()), |acc, s| {
            acc.mul(&v_matrix(&s.partition, v))
        });
    if decomposition.covering.is_some() {
        product.tau_times(v)
    } else {
        product
    }
}

/// `V₀(π)` for a covered partition.
pub fn v0_matrix<T: Scalar>(pi: &NcPairPartition, v: &SquareMatrix<T>) -> Result<DiagonalMatrix<T>, TraceError> {
    if !pi.is_covered() {
        return Err(TraceError::NotCovered);
    }
    let interior = pi
        .decompose()
        .segments
        .iter()
        .fold(DiagonalMatrix::identity(v.dim()), |acc, s| {
            acc.mul(&v_matrix(&s.partition, v))
        });
    Ok(interior.mul(&v.main_diagonal()))
}

/// `v(π) = tr V(π)`.
pub fn v_of<T: Scalar>(pi: &NcPairPartition, v: &SquareMatrix<T>) -> T {
    v_matrix(pi, v).normalized_trace()
}

/// `v₀(π)`: `Tr V₀(π)` on covered partitions, multiplicative over covered pieces.
pub fn v0_of<T: Scalar>(pi: &NcPairPartition, v: &SquareMatrix<T>) -> T {
    if pi.is_covered() {
        return v0_matrix(pi, v).expect("covered").trace();
    }
    pi.decompose()
        .segments
        .iter()
        .fold(T::one(), |acc, s| acc * v0_of(&s.partition, v))
}

/// `Σ_f Π_p v_{f(p), f(σ(p))}` over colorings of the blocks, where outermost
/// blocks pair with themselves.
pub fn colored_oracle_v0<T: Scalar>(pi: &NcPairPartition, v: &SquareMatrix<T>) -> T {
    let mut total = T::zero();
    for f in pi.colorings(v.dim()).filter(|f| f.conditional() == 0) {
        let term = (0..pi.blocks()).fold(T::one(), |acc, p| acc * v.get(f.block(p), f.block(pi.sigma(p))).clone());
        total = total + term;
    }
    total
}

/// `(1/n) Σ_f Σ_j Π_p v_j(π_p, f)`: outermost blocks pair with the conditional color.
pub fn colored_oracle_v<T: Scalar>(pi: &NcPairPartition, v: &SquareMatrix<T>) -> T {
    let mut total = T::zero();
    for f in pi.colorings(v.dim()) {
        let term = (0..pi.blocks()).fold(T::one(), |acc, p| {
            let outer_color = pi.outer(p).map_or(f.conditional(), |q| f.block(q));
            acc * v.get(f.block(p), outer_color).clone()
        });
        total = total + term;
    }
    total / T::from_i64(v.dim() as i64)
}

/// `b(π) = Tr(B(π) D)`.
pub fn b_of<T: Scalar>(pi: &NcPairPartition, b: &SquareMatrix<T>, d: &DiagonalMatrix<T>) -> Result<T, TraceError> {
    if d.dim() != b.dim() {
        return Err(TraceError::Dimension {
            expected: b.dim(),
            got: d.dim(),
        });
    }
    Ok(v_matrix(pi, b).mul(d).trace())
}

/// `b₀(π) = v₀(π)` for the matrix `B`.
pub fn b0_of<T: Scalar>(pi: &NcPairPartition, b: &SquareMatrix<T>) -> T {
    v0_of(pi, b)
}
