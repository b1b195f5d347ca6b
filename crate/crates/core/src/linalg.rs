//! Complex symmetric admittance matrices and the two factorizations used to
//! read entries of their inverse.
//!
//! [`SparseLdl`] eliminates nodes in dynamic minimum-degree order and stores
//! `Y = L·D·Lᵀ` (plain transpose, no conjugation; admittance matrices are
//! complex symmetric, not Hermitian). [`DenseLu`] is a row-pivoted LU kept for
//! small systems.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative pivot magnitude below which a matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-13;

/// Systems up to this dimension use [`DenseLu`] under [`SolverStrategy::Auto`].
pub const DENSE_MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (no acceptable pivot at row {row})")]
    Singular { row: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStrategy {
    #[default]
    Auto,
    Dense,
    Sparse,
}

/// Square complex matrix stored row-wise with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(ZERO)
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        let mut out = vec![vec![ZERO; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[i][j] = v;
            }
        }
        out
    }

    /// Bitwise symmetry check.
    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, v)| self.get(j, i) == v))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }
}

/// Accumulates branch and shunt stamps.
#[derive(Debug, Clone)]
pub struct AdmittanceBuilder {
    rows: Vec<HashMap<usize, Complex64>>,
}

impl AdmittanceBuilder {
    pub fn new(dim: usize) -> Self {
        AdmittanceBuilder {
            rows: vec![HashMap::new(); dim],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        *self.rows[i].entry(j).or_insert(ZERO) += v;
    }

    pub fn add_shunt(&mut self, i: usize, y: Complex64) {
        self.add(i, i, y);
    }

    /// Series admittance `y` (referred to the `to` side) behind an ideal
    /// transformer with real ratio `tap` at the `from` side.
    pub fn add_branch(&mut self, from: usize, to: usize, y: Complex64, tap: f64) {
        let mutual = -y / tap;
        self.add(from, from, y / (tap * tap));
        self.add(to, to, y);
        self.add(from, to, mutual);
        self.add(to, from, mutual);
    }

    pub fn build(self) -> AdmittanceMatrix {
        let rows = self
            .rows
            .into_iter()
            .map(|r| {
                let mut row: Vec<_> = r.into_iter().collect();
                row.sort_unstable_by_key(|&(j, _)| j);
                row
            })
            .collect();
        AdmittanceMatrix { rows }
    }
}

#[derive(Debug, Clone)]
struct EliminationStep {
    pivot: usize,
    d: Complex64,
    /// Column of L below the pivot: `(row, l_row)`.
    l: Vec<(usize, Complex64)>,
}

/// Sparse `L·D·Lᵀ` factorization with dynamic minimum-degree pivoting.
///
/// Pivots are chosen among remaining nodes by smallest current degree
/// (ties by index); a candidate whose diagonal is numerically zero is
/// deferred in favour of the next one.
#[derive(Debug, Clone)]
pub struct SparseLdl {
    steps: Vec<EliminationStep>,
    position: Vec<usize>,
}

impl SparseLdl {
    pub fn factorize(y: &AdmittanceMatrix) -> Result<Self, LinalgError> {
        let n = y.dim();
        let mut diag = vec![ZERO; n];
        let mut adj: Vec<HashMap<usize, Complex64>> = vec![HashMap::new(); n];
        for i in 0..n {
            for &(j, v) in y.row(i) {
                if i == j {
                    diag[i] = v;
                } else if v != ZERO {
                    adj[i].insert(j, v);
                }
            }
        }
        let scale = diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);

        let mut alive = vec![true; n];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            (0..n).map(|i| Reverse((adj[i].len(), i))).collect();
        let mut steps = Vec::with_capacity(n);
        let mut position = vec![usize::MAX; n];
        let mut deferred = Vec::new();

        while steps.len() < n {
            let k = loop {
                let Some(Reverse((deg, k))) = heap.pop() else {
                    let row = deferred.first().copied().unwrap_or(0);
                    return Err(LinalgError::Singular { row });
                };
                if !alive[k] || deg != adj[k].len() {
                    continue;
                }
                if diag[k].norm() > tol {
                    break k;
                }
                deferred.push(k);
            };
            for &node in &deferred {
                heap.push(Reverse((adj[node].len(), node)));
            }
            deferred.clear();

            let d = diag[k];
            let mut col: Vec<(usize, Complex64)> = adj[k].drain().collect();
            col.sort_unstable_by_key(|&(i, _)| i);
            alive[k] = false;
            for &(i, _) in &col {
                adj[i].remove(&k);
            }
            let l: Vec<(usize, Complex64)> = col.iter().map(|&(i, a)| (i, a / d)).collect();
            for &(i, li) in &l {
                for &(j, akj) in &col {
                    let update = li * akj;
                    if i == j {
                        diag[i] -= update;
                    } else {
                        *adj[i].entry(j).or_insert(ZERO) -= update;
                    }
                }
            }
            for &(i, _) in &col {
                heap.push(Reverse((adj[i].len(), i)));
            }
            position[k] = steps.len();
            steps.push(EliminationStep { pivot: k, d, l });
        }

        Ok(SparseLdl { steps, position })
    }

    pub fn dim(&self) -> usize {
        self.steps.len()
    }

    /// Number of stored off-diagonal entries of L.
    pub fn fill(&self) -> usize {
        self.steps.iter().map(|s| s.l.len()).sum()
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        for step in &self.steps {
            let v = x[step.pivot];
            if v != ZERO {
                for &(i, l) in &step.l {
                    x[i] -= l * v;
                }
            }
        }
        for step in &self.steps {
            x[step.pivot] /= step.d;
        }
        for step in self.steps.iter().rev() {
            let s: Complex64 = step.l.iter().map(|&(i, l)| l * x[i]).sum();
            x[step.pivot] -= s;
        }
        x
    }

    /// `(Y⁻¹)_jj = Σ_s w_s² / d_s` with `w = L⁻¹ e_j`; only the forward sweep
    /// from the pivot position of `j` is needed.
    pub fn inverse_diag_entry(&self, j: usize) -> Complex64 {
        let n = self.dim();
        let mut w = vec![ZERO; n];
        w[j] = Complex64::new(1.0, 0.0);
        let mut acc = ZERO;
        for step in &self.steps[self.position[j]..] {
            let v = w[step.pivot];
            if v == ZERO {
                continue;
            }
            acc += v * v / step.d;
            for &(i, l) in &step.l {
                w[i] -= l * v;
            }
        }
        acc
    }
}

/// Row-pivoted dense LU, `P·Y = L·U` stored in place.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factorize(y: &AdmittanceMatrix) -> Result<Self, LinalgError> {
        let n = y.dim();
        let mut lu = vec![ZERO; n * n];
        for i in 0..n {
            for &(j, v) in y.row(i) {
                lu[i * n + j] = v;
            }
        }
        let scale = lu.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, best) = (k..n)
                .map(|r| (r, lu[r * n + k].norm()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if best <= tol {
                return Err(LinalgError::Singular { row: perm[k] });
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                if f == ZERO {
                    continue;
                }
                lu[r * n + k] = f;
                for c in k + 1..n {
                    let u = lu[k * n + c];
                    lu[r * n + c] -= f * u;
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let s: Complex64 = (0..r).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let s: Complex64 = (r + 1..n).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] = (x[r] - s) / self.lu[r * n + r];
        }
        x
    }

    pub fn inverse_diag_entry(&self, j: usize) -> Complex64 {
        let mut e = vec![ZERO; self.n];
        e[j] = Complex64::new(1.0, 0.0);
        self.solve(&e)[j]
    }
}

#[derive(Debug, Clone)]
pub enum Factorization {
    Dense(DenseLu),
    Sparse(SparseLdl),
}

impl Factorization {
    pub fn new(y: &AdmittanceMatrix, strategy: SolverStrategy) -> Result<Self, LinalgError> {
        let dense = match strategy {
            SolverStrategy::Auto => y.dim() <= DENSE_MAX_DIM,
            SolverStrategy::Dense => true,
            SolverStrategy::Sparse => false,
        };
        if dense {
            DenseLu::factorize(y).map(Factorization::Dense)
        } else {
            SparseLdl::factorize(y).map(Factorization::Sparse)
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        match self {
            Factorization::Dense(f) => f.solve(b),
            Factorization::Sparse(f) => f.solve(b),
        }
    }

    pub fn inverse_diag_entry(&self, j: usize) -> Complex64 {
        match self {
            Factorization::Dense(f) => f.inverse_diag_entry(j),
            Factorization::Sparse(f) => f.inverse_diag_entry(j),
        }
    }

    /// Diagonal entries of the inverse for the given rows. Columns are
    /// independent, so they are evaluated in parallel; output order follows
    /// `rows`.
    pub fn inverse_diag(&self, rows: &[usize]) -> Vec<Complex64> {
        rows.par_iter().map(|&j| self.inverse_diag_entry(j)).collect()
    }
}
