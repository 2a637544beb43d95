//! Sparse matrices and smallest singular values by inverse subspace iteration.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with merged duplicate entries.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds the matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; nrows + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(
                r < nrows && c < ncols,
                "entry ({r}, {c}) outside {nrows}x{ncols}"
            );
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (i, &yi) in y.iter().enumerate() {
            for (j, v) in self.row(i) {
                out[j] += v * yi;
            }
        }
        out
    }

    /// Sparse-times-dense product.
    pub fn mul_dense(&self, x: &Mat<f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut out = Mat::<f64>::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                out[(i, c)] = self.row(i).map(|(j, v)| v * x[(j, c)]).sum();
            }
        }
        out
    }

    /// Sparse-times-sparse product.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut entries = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    entries.push((i, j, a * b));
                }
            }
        }
        SparseMatrix::from_triplets(self.nrows, other.ncols, entries)
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)).collect(),
        )
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::LinearAlgebra(format!("sparse assembly failed: {e:?}")))
    }
}

/// Smallest singular values with their right singular vectors (as columns).
#[derive(Clone, Debug)]
pub struct SmallestSingular {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl SmallestSingular {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.nrows())
            .map(|i| self.vectors[(i, k)])
            .collect()
    }
}

fn orthonormalize(x: &Mat<f64>) -> Mat<f64> {
    x.qr().compute_thin_Q()
}

fn random_block(n: usize, q: usize, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Mat::from_fn(n, q, |_, _| rng.gen::<f64>() - 0.5);
    orthonormalize(&x)
}

fn rayleigh_ritz(m: &SparseMatrix, x: Mat<f64>) -> Result<SmallestSingular> {
    let c = m.mul_dense(&x);
    let svd = c
        .thin_svd()
        .map_err(|e| Error::LinearAlgebra(format!("dense SVD failed: {e:?}")))?;
    let q = x.ncols();
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let vals: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let rot = svd.V();
    let mut vectors = Mat::<f64>::zeros(x.nrows(), q);
    for (dst, &k) in order.iter().enumerate() {
        for i in 0..x.nrows() {
            let mut acc = 0.0;
            for l in 0..q {
                acc += x[(i, l)] * rot[(l, k)];
            }
            vectors[(i, dst)] = acc;
        }
    }
    Ok(SmallestSingular {
        values: vals,
        vectors,
    })
}

/// The `q` smallest singular values of a square sparse matrix by block
/// inverse iteration with `(MᵀM)⁻¹`, followed by a Rayleigh–Ritz step.
pub fn smallest_singular_values(
    m: &SparseMatrix,
    q: usize,
    iters: usize,
    seed: u64,
) -> Result<SmallestSingular> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::LinearAlgebra("square matrix expected".into()));
    }
    let q = q.min(n);
    let lu = m
        .to_faer()?
        .sp_lu()
        .map_err(|e| Error::LinearAlgebra(format!("sparse LU failed: {e:?}")))?;
    let mut x = random_block(n, q, seed);
    for _ in 0..iters {
        lu.solve_transpose_in_place(x.as_mut());
        lu.solve_in_place(x.as_mut());
        if x.col_iter()
            .flat_map(|c| c.iter().copied())
            .any(|v| !v.is_finite())
        {
            return Err(Error::LinearAlgebra(
                "matrix is numerically singular".into(),
            ));
        }
        x = orthonormalize(&x);
    }
    rayleigh_ritz(m, x)
}

/// The `q` smallest singular values of a tall sparse matrix `B` (N×n, N ≥ n).
///
/// `(BᵀB)⁻¹` is applied through the augmented system `[[I, B], [Bᵀ, 0]]`,
/// which avoids forming the normal equations.
pub fn smallest_singular_values_rect(
    b: &SparseMatrix,
    q: usize,
    iters: usize,
    seed: u64,
) -> Result<SmallestSingular> {
    let (big, n) = (b.nrows(), b.ncols());
    if big < n {
        return Err(Error::LinearAlgebra("tall matrix expected".into()));
    }
    let q = q.min(n);
    let mut entries: Vec<(usize, usize, f64)> = (0..big).map(|i| (i, i, 1.0)).collect();
    for (i, j, v) in b.triplets() {
        entries.push((i, big + j, v));
        entries.push((big + j, i, v));
    }
    let aug = SparseMatrix::from_triplets(big + n, big + n, entries);
    let lu = aug
        .to_faer()?
        .sp_lu()
        .map_err(|e| Error::LinearAlgebra(format!("sparse LU failed: {e:?}")))?;
    let mut x = random_block(n, q, seed);
    for _ in 0..iters {
        let mut rhs = Mat::<f64>::zeros(big + n, q);
        for c in 0..q {
            for i in 0..n {
                rhs[(big + i, c)] = -x[(i, c)];
            }
        }
        lu.solve_in_place(rhs.as_mut());
        let z = Mat::from_fn(n, q, |i, c| rhs[(big + i, c)]);
        if z.col_iter()
            .flat_map(|c| c.iter().copied())
            .any(|v| !v.is_finite())
        {
            return Err(Error::LinearAlgebra(
                "matrix is numerically rank deficient".into(),
            ));
        }
        x = orthonormalize(&z);
    }
    rayleigh_ritz(b, x)
}
