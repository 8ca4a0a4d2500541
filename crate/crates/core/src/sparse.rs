//! Compressed-row sparse matrices and restarted GMRES.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, _) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, _, _) in entries {
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        // bucket by row, then sort and merge columns within each row
        let mut next = counts.clone();
        let mut cols = vec![0usize; entries.len()];
        let mut vals = vec![0.0; entries.len()];
        for &(r, c, v) in entries {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n_rows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in &scratch {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            n_rows: d.len(),
            n_cols: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates the stored entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: y.len(),
            });
        }
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            entries.extend(self.row(r).map(|(c, v)| (c, r, v)));
        }
        Self::from_triplets(self.n_cols, self.n_rows, &entries).expect("indices are in range")
    }

    /// `self + scale * other`, merging sparsity patterns row by row.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows * self.n_cols,
                got: other.n_rows * other.n_cols,
            });
        }
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for r in 0..self.n_rows {
            let (mut a, a_end) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let (mut b, b_end) = (other.row_ptr[r], other.row_ptr[r + 1]);
            while a < a_end || b < b_end {
                let ca = if a < a_end { self.col_idx[a] } else { usize::MAX };
                let cb = if b < b_end { other.col_idx[b] } else { usize::MAX };
                if ca == cb {
                    col_idx.push(ca);
                    values.push(self.values[a] + scale * other.values[b]);
                    a += 1;
                    b += 1;
                } else if ca < cb {
                    col_idx.push(ca);
                    values.push(self.values[a]);
                    a += 1;
                } else {
                    col_idx.push(cb);
                    values.push(scale * other.values[b]);
                    b += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `diag(row) * self * diag(col)`.
    #[allow(clippy::needless_range_loop)]
    pub fn scale_rows_cols(&self, row: &[f64], col: &[f64]) -> Result<Self> {
        if row.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: row.len(),
            });
        }
        if col.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: col.len(),
            });
        }
        let mut out = self.clone();
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[k] *= row[r] * col[self.col_idx[k]];
            }
        }
        Ok(out)
    }

    /// Assembles the 2x2 block matrix `[[a, b], [c, d]]` of equally sized square blocks.
    pub fn block2x2(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        let n = a.n_rows;
        for m in [a, b, c, d] {
            if m.n_rows != n || m.n_cols != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.n_rows,
                });
            }
        }
        let nnz = a.nnz() + b.nnz() + c.nnz() + d.nnz();
        let mut row_ptr = Vec::with_capacity(2 * n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (left, right) in [(a, b), (c, d)] {
            for r in 0..n {
                for (col, v) in left.row(r) {
                    col_idx.push(col);
                    values.push(v);
                }
                for (col, v) in right.row(r) {
                    col_idx.push(col + n);
                    values.push(v);
                }
                row_ptr.push(col_idx.len());
            }
        }
        Ok(Self {
            n_rows: 2 * n,
            n_cols: 2 * n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Row-major dense copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let diff = self.add_scaled(&t, -1.0).expect("square");
        diff.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_off_diagonal(&self) -> f64 {
        (0..self.n_rows)
            .flat_map(|r| self.row(r).filter(move |&(c, _)| c != r).map(|(_, v)| v.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 2000,
            restart: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    /// Diagonal scaling; zero diagonal entries are replaced by one.
    Jacobi,
    /// Element-block Jacobi plus a coarse correction on element aggregates.
    /// Only solvers that know the mesh can build it; [`gmres`] treats it as
    /// [`Preconditioner::Jacobi`].
    #[default]
    TwoLevel,
}

/// Right preconditioner: `z = P^{-1} r`.
pub trait Precond {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Identity or inverse diagonal.
pub struct Diagonal {
    inv: Vec<f64>,
}

impl Diagonal {
    pub fn new(a: &CsrMatrix, kind: Preconditioner) -> Self {
        let inv = match kind {
            Preconditioner::None => vec![1.0; a.n_rows()],
            Preconditioner::Jacobi | Preconditioner::TwoLevel => a
                .diagonal()
                .into_iter()
                .map(|d| if d == 0.0 { 1.0 } else { 1.0 / d })
                .collect(),
        };
        Self { inv }
    }
}

impl Precond for Diagonal {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().zip(r).zip(&self.inv).for_each(|((z, r), d)| *z = r * d);
    }
}

/// LU factorization with partial pivoting of a small dense matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factors the row-major `n x n` matrix `a`.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: a.len(),
            });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap_or(k);
            if a[piv * n + k] == 0.0 || !a[piv * n + k].is_finite() {
                return Err(Error::SolverBreakdown { iteration: k });
            }
            if piv != k {
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        a[i * n + c] -= f * a[k * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|c| self.lu[i * n + c] * x[c]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|c| self.lu[i * n + c] * x[c]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

/// Exact inverses of the principal submatrices on disjoint index blocks;
/// indices outside every block are left unchanged.
pub struct BlockJacobi {
    blocks: Vec<(Vec<usize>, DenseLu)>,
}

impl BlockJacobi {
    pub fn new(a: &CsrMatrix, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = a.n_rows();
        let mut local = vec![usize::MAX; n];
        let mut out = Vec::with_capacity(blocks.len());
        for idx in blocks {
            let m = idx.len();
            for (l, &i) in idx.iter().enumerate() {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        row: i,
                        col: i,
                        n_rows: n,
                        n_cols: n,
                    });
                }
                local[i] = l;
            }
            let mut dense = vec![0.0; m * m];
            for (l, &i) in idx.iter().enumerate() {
                for (j, v) in a.row(i) {
                    if local[j] != usize::MAX {
                        dense[l * m + local[j]] = v;
                    }
                }
            }
            for &i in &idx {
                local[i] = usize::MAX;
            }
            let lu = DenseLu::factor(m, dense)?;
            out.push((idx, lu));
        }
        Ok(Self { blocks: out })
    }
}

impl Precond for BlockJacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for (idx, lu) in &self.blocks {
            let rl: Vec<f64> = idx.iter().map(|&i| r[i]).collect();
            for (&i, v) in idx.iter().zip(lu.solve(&rl)) {
                z[i] = v;
            }
        }
    }
}

/// Jacobi smoothing after an exact solve on a coarse space spanned by
/// vectors with disjoint supports:
/// `z = P A_c^{-1} P^T r + D^{-1} (r - A P A_c^{-1} P^T r)`, `A_c = P^T A P`.
pub struct TwoLevel<'a, S = Diagonal> {
    a: &'a CsrMatrix,
    smoother: S,
    /// Columns of `P` as `(row, value)` lists.
    columns: Vec<Vec<(usize, f64)>>,
    coarse: DenseLu,
}

impl<'a> TwoLevel<'a, Diagonal> {
    /// `kernel`, when given, must lie in the span of the columns; it is
    /// lifted out of the singular coarse matrix by a rank-one shift.
    pub fn new(a: &'a CsrMatrix, columns: Vec<Vec<(usize, f64)>>, kernel: Option<&[f64]>) -> Result<Self> {
        Self::with_smoother(a, columns, kernel, Diagonal::new(a, Preconditioner::Jacobi))
    }
}

impl<'a, S: Precond> TwoLevel<'a, S> {
    pub fn with_smoother(
        a: &'a CsrMatrix,
        columns: Vec<Vec<(usize, f64)>>,
        kernel: Option<&[f64]>,
        smoother: S,
    ) -> Result<Self> {
        let n = a.n_rows();
        let nc = columns.len();
        let mut owner = vec![usize::MAX; n];
        let mut weight = vec![0.0; n];
        for (c, col) in columns.iter().enumerate() {
            for &(i, p) in col {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        row: i,
                        col: c,
                        n_rows: n,
                        n_cols: nc,
                    });
                }
                if owner[i] != usize::MAX {
                    return Err(Error::param("columns", "coarse vectors must have disjoint supports"));
                }
                owner[i] = c;
                weight[i] = p;
            }
        }
        let mut ac = vec![0.0; nc * nc];
        for (c, col) in columns.iter().enumerate() {
            for &(i, pi) in col {
                for (j, aij) in a.row(i) {
                    let d = owner[j];
                    if d != usize::MAX {
                        ac[c * nc + d] += pi * aij * weight[j];
                    }
                }
            }
        }
        if let Some(k) = kernel {
            let kc: Vec<f64> = columns
                .iter()
                .map(|col| {
                    let (num, den) = col.iter().fold((0.0, 0.0), |(n, d), &(i, p)| (n + p * k[i], d + p * p));
                    if den > 0.0 {
                        num / den
                    } else {
                        0.0
                    }
                })
                .collect();
            let kk: f64 = kc.iter().map(|v| v * v).sum();
            if kk > 0.0 {
                let mu = (0..nc).map(|c| ac[c * nc + c].abs()).fold(0.0, f64::max) / kk;
                for c in 0..nc {
                    for d in 0..nc {
                        ac[c * nc + d] += mu * kc[c] * kc[d];
                    }
                }
            }
        }
        Ok(Self {
            a,
            smoother,
            columns,
            coarse: DenseLu::factor(nc, ac)?,
        })
    }
}

impl<S: Precond> Precond for TwoLevel<'_, S> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let rc: Vec<f64> = self
            .columns
            .iter()
            .map(|col| col.iter().map(|&(i, p)| p * r[i]).sum())
            .collect();
        let yc = self.coarse.solve(&rc);
        let mut zc = vec![0.0; r.len()];
        for (col, y) in self.columns.iter().zip(&yc) {
            for &(i, p) in col {
                zc[i] = p * y;
            }
        }
        let mut res = self.a.spmv(&zc).expect("square operator");
        res.iter_mut().zip(r).for_each(|(v, r)| *v = r - *v);
        self.smoother.apply(&res, z);
        z.iter_mut().zip(&zc).for_each(|(z, c)| *z += c);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out(v: &mut [f64], kernel: Option<(&[f64], f64)>) {
    if let Some((k, kk)) = kernel {
        let c = dot(v, k) / kk;
        v.iter_mut().zip(k).for_each(|(v, k)| *v -= c * k);
    }
}

/// Right-preconditioned restarted GMRES.
///
/// With `deflation = Some(k)` the vector `k` is treated as a kernel direction
/// shared by `A` and `A^T`: it is projected out of the right-hand side, the
/// initial guess and every search direction, so the iterate stays orthogonal
/// to `k`. Non-convergence is reported through [`SolverReport::converged`];
/// a non-finite value aborts with [`Error::SolverBreakdown`].
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
    precond: Preconditioner,
    deflation: Option<&[f64]>,
) -> Result<(Vec<f64>, SolverReport)> {
    let diag = Diagonal::new(a, precond);
    gmres_with(a, b, x0, opts, &diag, deflation)
}

/// [`gmres`] with an arbitrary right preconditioner.
pub fn gmres_with(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
    precond: &dyn Precond,
    deflation: Option<&[f64]>,
) -> Result<(Vec<f64>, SolverReport)> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.n_cols(),
        });
    }
    for v in [b, x0] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    if let Some(k) = deflation {
        if k.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: k.len(),
            });
        }
    }
    let kernel = deflation.map(|k| (k, dot(k, k))).filter(|&(_, kk)| kk > 0.0);

    let mut rhs = b.to_vec();
    project_out(&mut rhs, kernel);
    let mut x = x0.to_vec();
    project_out(&mut x, kernel);

    let b_norm = norm(&rhs);
    if b_norm == 0.0 {
        let zero = vec![0.0; n];
        return Ok((
            zero,
            SolverReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let target = opts.rel_tol * b_norm;
    let m = opts.restart.max(1);
    let mut basis: Vec<Vec<f64>> = vec![vec![0.0; n]; m + 1];
    let mut z: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut iterations = 0;

    let residual = |x: &[f64], r: &mut [f64]| -> Result<f64> {
        a.spmv_into(x, r)?;
        r.iter_mut().zip(&rhs).for_each(|(r, b)| *r = b - *r);
        Ok(norm(r))
    };

    let mut r_norm = residual(&x, &mut r)?;
    loop {
        if !r_norm.is_finite() {
            return Err(Error::SolverBreakdown { iteration: iterations });
        }
        if r_norm <= target || iterations >= opts.max_iter {
            break;
        }
        basis[0].iter_mut().zip(&r).for_each(|(v, r)| *v = r / r_norm);
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = r_norm;
        let mut k_used = 0;
        for j in 0..m {
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;
            precond.apply(&basis[j], &mut z[j]);
            project_out(&mut z[j], kernel);
            a.spmv_into(&z[j], &mut w)?;
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                h[i][j] = hij;
                w.iter_mut().zip(&basis[i]).for_each(|(w, v)| *w -= hij * v);
            }
            let h_next = norm(&w);
            if !h_next.is_finite() {
                return Err(Error::SolverBreakdown { iteration: iterations });
            }
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h_next);
            if denom == 0.0 {
                k_used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h_next / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            if g[j + 1].abs() <= target || h_next == 0.0 {
                break;
            }
            basis[j + 1].iter_mut().zip(&w).for_each(|(v, w)| *v = w / h_next);
        }
        // back substitution on the triangular Hessenberg factor
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|l| h[i][l] * y[l]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            x.iter_mut().zip(&z[i]).for_each(|(x, z)| *x += yi * z);
        }
        let new_norm = residual(&x, &mut r)?;
        if k_used == 0 || (new_norm >= r_norm && new_norm > target) {
            r_norm = new_norm;
            break;
        }
        r_norm = new_norm;
    }
    project_out(&mut x, kernel);
    let rel = r_norm / b_norm;
    if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverBreakdown { iteration: iterations });
    }
    Ok((
        x,
        SolverReport {
            iterations,
            relative_residual: rel,
            converged: r_norm <= target,
        },
    ))
}
