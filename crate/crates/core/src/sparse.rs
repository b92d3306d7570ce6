//! Sparse matrices assembled from triplets, and a direct LU solver.
//!
//! Matrices are stored row-compressed. Factorization converts to the
//! column-compressed layout expected by `faer` and runs its sparse LU with
//! partial pivoting, sequentially so results do not depend on thread count.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::PartialPivLuParams;
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, NumericLu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Spec};

use crate::error::{Error, Result};

/// Relative residual accepted by [`solve_sparse`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Unsorted `(row, col, value)` entries with a target shape.
#[derive(Clone, Debug, Default)]
pub struct TripletBuffer {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl TripletBuffer {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            ..Default::default()
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(capacity),
            cols: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.values.push(value);
    }

    /// Adds `scale * m` with its top-left corner at `(row0, col0)`.
    pub fn add_matrix(&mut self, m: &SparseMatrix, row0: usize, col0: usize, scale: f64) {
        for (i, j, v) in m.iter() {
            self.push(row0 + i, col0 + j, scale * v);
        }
    }

    /// Adds `scale * mᵀ` with its top-left corner at `(row0, col0)`.
    pub fn add_transposed(&mut self, m: &SparseMatrix, row0: usize, col0: usize, scale: f64) {
        for (i, j, v) in m.iter() {
            self.push(row0 + j, col0 + i, scale * v);
        }
    }

    pub fn build(&self) -> Result<SparseMatrix> {
        from_triplets(self)
    }
}

/// Row-compressed sparse matrix. Column indices are strictly increasing
/// within each row; explicit zeros may be present.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Sums duplicate triplets. Within each entry the summation follows
/// insertion order, so a fixed triplet order gives bit-identical output.
pub fn from_triplets(buf: &TripletBuffer) -> Result<SparseMatrix> {
    let (nrows, ncols) = buf.shape();
    for (&i, &j) in buf.rows.iter().zip(&buf.cols) {
        if i >= nrows {
            return Err(Error::IndexOutOfRange { index: i, len: nrows });
        }
        if j >= ncols {
            return Err(Error::IndexOutOfRange { index: j, len: ncols });
        }
    }
    // stable counting sort by row
    let mut start = vec![0usize; nrows + 1];
    for &i in &buf.rows {
        start[i + 1] += 1;
    }
    for i in 0..nrows {
        start[i + 1] += start[i];
    }
    let mut order = vec![0usize; buf.len()];
    let mut next = start.clone();
    for (t, &i) in buf.rows.iter().enumerate() {
        order[next[i]] = t;
        next[i] += 1;
    }

    let mut row_ptr = Vec::with_capacity(nrows + 1);
    let mut col_idx = Vec::with_capacity(buf.len());
    let mut values = Vec::with_capacity(buf.len());
    row_ptr.push(0);
    for i in 0..nrows {
        let seg = &mut order[start[i]..start[i + 1]];
        seg.sort_by_key(|&t| buf.cols[t]);
        let mut last = usize::MAX;
        for &t in seg.iter() {
            let j = buf.cols[t];
            if j == last {
                *values.last_mut().unwrap() += buf.values[t];
            } else {
                col_idx.push(j);
                values.push(buf.values[t]);
                last = j;
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseMatrix {
        nrows,
        ncols,
        row_ptr,
        col_idx,
        values,
    })
}

/// Dense vector of length `len` whose entry `i` sums all values at index `i`.
pub fn scatter_add(indices: &[usize], values: &[f64], len: usize) -> Result<Vec<f64>> {
    if indices.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} indices but {} values",
            indices.len(),
            values.len()
        )));
    }
    let mut out = vec![0.0; len];
    for (&i, &v) in indices.iter().zip(values) {
        *out.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, len })? += v;
    }
    Ok(out)
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Block-diagonal matrix with dense `3 x 3` blocks, all entries stored.
    /// Equal to assembling the blocks through [`TripletBuffer`].
    pub fn block_diagonal(blocks: &[[[f64; 3]; 3]]) -> Self {
        let n = 3 * blocks.len();
        let mut col_idx = Vec::with_capacity(3 * n);
        let mut values = Vec::with_capacity(3 * n);
        for (m, block) in blocks.iter().enumerate() {
            for row in block {
                col_idx.extend([3 * m, 3 * m + 1, 3 * m + 2]);
                values.extend_from_slice(row);
            }
        }
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).map(|i| 3 * i).collect(),
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    /// Number of stored entries, explicit zeros included.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// Stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "vector length must match column count");
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    /// `y = Aᵀ x`.
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "vector length must match row count");
        let mut y = vec![0.0; self.ncols];
        for (i, j, v) in self.iter() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut buf = TripletBuffer::with_capacity(self.ncols, self.nrows, self.nnz());
        buf.add_transposed(self, 0, 0, 1.0);
        from_triplets(&buf).expect("indices are in range")
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `Σ s_k A_k` over matrices of equal shape.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix> {
        let (nrows, ncols) = terms.first().map_or((0, 0), |(_, m)| m.shape());
        let mut buf = TripletBuffer::with_capacity(nrows, ncols, terms.iter().map(|(_, m)| m.nnz()).sum());
        for &(s, m) in terms {
            if m.shape() != (nrows, ncols) {
                return Err(Error::DimensionMismatch(format!(
                    "{nrows}x{ncols} and {}x{}",
                    m.nrows, m.ncols
                )));
            }
            buf.add_matrix(m, 0, 0, s);
        }
        from_triplets(&buf)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] = v;
        }
        d
    }

    /// Largest absolute difference to `other` over all positions.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        let diff = SparseMatrix::linear_combination(&[(1.0, self), (-1.0, other)]).expect("equal shapes");
        diff.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖A x − b‖_∞ / max(1, ‖b‖_∞)`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        let r = ax.iter().zip(b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        r / inf_norm(b).max(1.0)
    }

    fn to_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut col_ptr = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            col_ptr[j + 1] += 1;
        }
        for j in 0..self.ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            row_idx[next[j]] = i;
            values[next[j]] = v;
            next[j] += 1;
        }
        (col_ptr, row_idx, values)
    }
}

pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Sparse LU factors of a square matrix, reusable across right-hand sides.
pub struct SparseLu {
    n: usize,
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish_non_exhaustive()
    }
}

impl SparseLu {
    pub fn factorize(a: &SparseMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch(format!(
                "cannot factorize a {}x{} matrix",
                a.nrows, a.ncols
            )));
        }
        let n = a.nrows;
        let mut col_seen = vec![false; n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            let mut any = false;
            for (&j, &v) in cols.iter().zip(vals) {
                if !v.is_finite() {
                    return Err(Error::Solver(format!("non-finite entry at ({i}, {j})")));
                }
                if v != 0.0 {
                    any = true;
                    col_seen[j] = true;
                }
            }
            if !any {
                return Err(Error::Singular(format!("row {i} is zero")));
            }
        }
        if let Some(j) = col_seen.iter().position(|&s| !s) {
            return Err(Error::Singular(format!("column {j} is zero")));
        }

        let (col_ptr, row_idx, values) = a.to_csc();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let mat = SparseColMatRef::new(sym, &values);
        let symbolic = factorize_symbolic_lu(sym, Default::default())
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        let mut numeric = NumericLu::new();
        let params: Spec<PartialPivLuParams, f64> = Default::default();
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_lu_scratch::<f64>(Par::Seq, params));
        symbolic
            .factorize_numeric_lu(&mut numeric, mat, Par::Seq, MemStack::new(&mut mem), params)
            .map_err(|e| match e {
                LuError::SymbolicSingular { index } => {
                    Error::Singular(format!("no pivot available at step {index}"))
                }
                LuError::Generic(e) => Error::Solver(format!("{e:?}")),
            })?;
        Ok(Self { n, symbolic, numeric })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`. Fails if the result is not finite, which is how a
    /// numerically singular pivot shows up.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.n
            )));
        }
        let mut x = b.to_vec();
        let lu = LuRef::new_unchecked(&self.symbolic, &self.numeric);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        let rhs = MatMut::from_column_major_slice_mut(&mut x, self.n, 1);
        lu.solve_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut mem));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("factorization produced non-finite values".into()));
        }
        Ok(x)
    }
}

/// Solves `A x = b` and checks the relative residual, applying up to two
/// steps of iterative refinement if the first solve falls short.
pub fn solve_sparse(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = SparseLu::factorize(a)?;
    solve_refined(a, &lu, b)
}

/// Like [`solve_sparse`] with precomputed factors of `a`.
pub fn solve_refined(a: &SparseMatrix, lu: &SparseLu, b: &[f64]) -> Result<Vec<f64>> {
    let mut x = lu.solve(b)?;
    let mut res = a.relative_residual(&x, b);
    for _ in 0..2 {
        if res <= RESIDUAL_TOLERANCE {
            break;
        }
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = lu.solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
        res = a.relative_residual(&x, b);
    }
    if res > RESIDUAL_TOLERANCE {
        return Err(Error::Singular(format!("relative residual {res:e} after refinement")));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(n: usize, entries: &[(usize, usize, f64)]) -> SparseMatrix {
        let mut b = TripletBuffer::new(n, n);
        for &(i, j, v) in entries {
            b.push(i, j, v);
        }
        b.build().unwrap()
    }

    #[test]
    fn block_diagonal_matches_triplets() {
        let blocks = [[[1.0, 2.0, 0.0], [3.0, 4.0, 5.0], [6.0, 0.0, 7.0]], [[8.0; 3]; 3]];
        let mut b = TripletBuffer::new(6, 6);
        for (m, blk) in blocks.iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    b.push(3 * m + i, 3 * m + j, blk[i][j]);
                }
            }
        }
        assert_eq!(SparseMatrix::block_diagonal(&blocks), b.build().unwrap());
    }

    #[test]
    fn duplicates_are_summed() {
        let m = mat(2, &[(0, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 5.0);
        assert_eq!(m.nnz(), 1);
        assert_eq!(mat(3, &[]).to_dense(), vec![vec![0.0; 3]; 3]);
    }

    #[test]
    fn out_of_range_triplet() {
        let mut b = TripletBuffer::new(2, 2);
        b.push(2, 0, 1.0);
        assert!(matches!(b.build(), Err(Error::IndexOutOfRange { index: 2, len: 2 })));
    }

    #[test]
    fn scatter() {
        assert_eq!(scatter_add(&[0, 0, 2], &[1.0, 2.0, 4.0], 3).unwrap(), vec![3.0, 0.0, 4.0]);
        assert_eq!(scatter_add(&[], &[], 2).unwrap(), vec![0.0, 0.0]);
        assert!(scatter_add(&[3], &[1.0], 3).is_err());
    }

    #[test]
    fn identity_and_permutation_solves() {
        let x = solve_sparse(&SparseMatrix::identity(4), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0]);
        let p = mat(2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(solve_sparse(&p, &[5.0, -7.0]).unwrap(), vec![-7.0, 5.0]);
    }

    #[test]
    fn zero_row_is_singular() {
        let m = mat(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 0.0), (2, 1, 0.0)]);
        assert!(matches!(solve_sparse(&m, &[1.0, 1.0, 1.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn rank_deficient_is_singular() {
        let m = mat(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)]);
        let r = solve_sparse(&m, &[1.0, 1.0]);
        assert!(matches!(r, Err(Error::Singular(_))), "{r:?}");
    }

    #[test]
    fn transpose_and_products() {
        let m = SparseMatrix::linear_combination(&[(2.0, &mat(2, &[(0, 1, 1.5), (1, 0, -1.0)]))]).unwrap();
        assert_eq!(m.transpose().get(1, 0), 3.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![6.0, -2.0]);
        assert_eq!(m.mul_vec_transposed(&[1.0, 2.0]), vec![-4.0, 3.0]);
    }
}
