//! Sparse storage and the direct solve of the saddle-point systems.

use std::fmt::Write as _;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::assembly::{MixedSolution, SaddleSystem};
use crate::{Error, Result};

/// Relative residual every accepted solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicate entries are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in entries {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) outside {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; entries.len()];
        let mut vals = vec![0.0; entries.len()];
        for &(r, c, v) in entries {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_offsets.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|i| (cols[i], vals[i])));
            // stable: equal columns keep insertion order before summation
            scratch.sort_by_key(|&(c, _)| c);
            let mut iter = scratch.iter().peekable();
            while let Some(&(c, mut v)) = iter.next() {
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Self { nrows, ncols, row_offsets, col_indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[range.clone()].binary_search(&c) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let entries: Vec<_> = (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v))).collect();
        SparseMatrix::from_triplets(self.ncols, self.nrows, &entries)
    }

    /// `max |A − Aᵀ|` over stored entries of either.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// `row col value` per line, zero-based.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 32);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {v:.17e}").unwrap();
            }
        }
        out
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A x = b` by sparse LU with partial pivoting, followed by one
/// step of iterative refinement when the residual is above tolerance.
pub fn solve_linear(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows;
    if a.ncols != n || b.len() != n {
        return Err(Error::Singular(format!("dimension mismatch: {}x{} with rhs {}", a.nrows, a.ncols, b.len())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut col_seen = vec![false; n];
    for r in 0..n {
        let mut any = false;
        for (c, v) in a.row(r) {
            if !v.is_finite() {
                return Err(Error::Singular(format!("row {r} holds a non-finite entry")));
            }
            if v != 0.0 {
                any = true;
                col_seen[c] = true;
            }
        }
        if !any {
            return Err(Error::Singular(format!("row {r} is structurally zero")));
        }
    }
    if let Some(c) = col_seen.iter().position(|&s| !s) {
        return Err(Error::Singular(format!("column {c} is structurally zero")));
    }

    let triplets: Vec<Triplet<usize, usize, f64>> = (0..n)
        .flat_map(|r| a.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
        .collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Singular(format!("sparse matrix construction failed: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;

    let run = |rhs: &[f64]| -> Result<Vec<f64>> {
        let col = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let sol = lu.solve(&col);
        let out: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("zero pivot: solution component {i} is not finite")));
        }
        Ok(out)
    };

    let mut x = run(b)?;
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let residual = |x: &[f64]| -> Vec<f64> { a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let mut r = residual(&x);
    let mut rel = norm2(&r) / bnorm;
    if rel > RESIDUAL_TOLERANCE {
        let dx = run(&r)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        r = residual(&x);
        rel = norm2(&r) / bnorm;
    }
    if rel > RESIDUAL_TOLERANCE || !rel.is_finite() {
        return Err(Error::ResidualTooLarge { achieved: rel, tolerance: RESIDUAL_TOLERANCE });
    }
    Ok(x)
}

/// Solves an assembled system and maps the result back to edge fluxes and
/// element values, restoring the fixed Neumann fluxes.
pub fn solve(system: &SaddleSystem) -> Result<MixedSolution> {
    let x = solve_linear(&system.matrix, &system.rhs)?;
    let dofs = &system.dofs;
    let mut flux = vec![0.0; dofs.edge_row.len()];
    for (e, row) in dofs.edge_row.iter().enumerate() {
        if let Some(r) = row {
            flux[e] = x[*r];
        }
    }
    for &(e, g) in &system.fixed_flux {
        flux[e] = g;
    }
    let pressure = x[dofs.free_edges..].to_vec();
    Ok(MixedSolution { flux, pressure, scheme: system.scheme })
}
