//! Exact rational arithmetic and sparse linear solving.
//!
//! Elimination is Gauss-Jordan with a fixed pivot rule: columns are processed in
//! increasing order and the pivot row is the smallest-index unused row holding a
//! nonzero entry in that column. Identical inputs give identical outputs.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{GtkvError, Result};

pub type Rational = num_rational::BigRational;

pub fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Prints `n` or `n/d` in lowest terms.
pub fn fmt_rational(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rational::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Rational::from_integer(n))
    }
}

pub fn factorial(n: usize) -> Rational {
    let mut f = BigInt::one();
    for k in 2..=n {
        f *= BigInt::from(k);
    }
    Rational::from_integer(f)
}

/// Sparse matrix with rational entries; absent entries are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<Rational>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::new(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged dense matrix");
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: &Rational) {
        let cur = self.get(r, c);
        self.set(r, c, cur + v);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Rational)> {
        self.entries.iter()
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|(&(r, c), v)| ((c, r), v.clone())).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        if x.len() != self.cols {
            return Err(GtkvError::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        let mut out = vec![Rational::zero(); self.rows];
        for (&(r, c), v) in &self.entries {
            if !x[c].is_zero() {
                out[r] += v * &x[c];
            }
        }
        Ok(out)
    }

    fn row_maps(&self) -> Vec<BTreeMap<usize, Rational>> {
        let mut rows = vec![BTreeMap::new(); self.rows];
        for (&(r, c), v) in &self.entries {
            rows[r].insert(c, v.clone());
        }
        rows
    }

    pub fn rank(&self) -> usize {
        let zero = vec![Rational::zero(); self.rows];
        let e = eliminate(self.row_maps(), zero, self.cols);
        e.pivots.len()
    }
}

/// Result of `solve_affine`: a particular solution (if consistent) and a kernel basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Option<Vec<Rational>>,
    pub nullspace: Vec<Vec<Rational>>,
}

struct Echelon {
    rows: Vec<BTreeMap<usize, Rational>>,
    rhs: Vec<Rational>,
    /// (pivot column, pivot row), in column order
    pivots: Vec<(usize, usize)>,
}

fn eliminate(mut rows: Vec<BTreeMap<usize, Rational>>, mut rhs: Vec<Rational>, cols: usize) -> Echelon {
    let nrows = rows.len();
    let mut used = vec![false; nrows];
    let mut pivots = Vec::new();
    // column -> rows currently holding a nonzero there
    let mut col_rows: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); cols];
    for (r, row) in rows.iter().enumerate() {
        for &c in row.keys() {
            col_rows[c].insert(r);
        }
    }
    for c in 0..cols {
        let Some(&p) = col_rows[c].iter().find(|&&r| !used[r]) else {
            continue;
        };
        used[p] = true;
        let inv = rows[p][&c].recip();
        let prow: Vec<(usize, Rational)> = rows[p].iter().map(|(&k, v)| (k, v * &inv)).collect();
        rows[p] = prow.iter().cloned().collect();
        rhs[p] = &rhs[p] * &inv;
        let targets: Vec<usize> = col_rows[c].iter().copied().filter(|&r| r != p).collect();
        for r in targets {
            let factor = rows[r][&c].clone();
            for (k, v) in &prow {
                let delta = v * &factor;
                let entry = rows[r].entry(*k).or_insert_with(Rational::zero);
                *entry -= delta;
                if entry.is_zero() {
                    rows[r].remove(k);
                    col_rows[*k].remove(&r);
                } else {
                    col_rows[*k].insert(r);
                }
            }
            let d = &rhs[p] * &factor;
            rhs[r] -= d;
        }
        pivots.push((c, p));
    }
    Echelon { rows, rhs, pivots }
}

/// Solves `M x = b` exactly. The particular solution sets every free variable to
/// zero; the kernel basis has one vector per free column, in column order.
pub fn solve_affine(m: &SparseMatrix, b: &[Rational]) -> Result<AffineSolution> {
    if b.len() != m.rows {
        return Err(GtkvError::DimensionMismatch { expected: m.rows, found: b.len() });
    }
    let e = eliminate(m.row_maps(), b.to_vec(), m.cols);
    let pivot_rows: std::collections::BTreeSet<usize> = e.pivots.iter().map(|&(_, r)| r).collect();
    let consistent = (0..m.rows).all(|r| pivot_rows.contains(&r) || e.rhs[r].is_zero());
    let mut is_pivot = vec![false; m.cols];
    for &(c, _) in &e.pivots {
        is_pivot[c] = true;
    }
    let particular = consistent.then(|| {
        let mut x = vec![Rational::zero(); m.cols];
        for &(c, r) in &e.pivots {
            x[c] = e.rhs[r].clone();
        }
        x
    });
    let mut nullspace = Vec::new();
    for f in (0..m.cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rational::zero(); m.cols];
        v[f] = Rational::one();
        for &(c, r) in &e.pivots {
            if let Some(a) = e.rows[r].get(&f) {
                v[c] = -a;
            }
        }
        nullspace.push(v);
    }
    Ok(AffineSolution { particular, nullspace })
}

pub fn kernel(m: &SparseMatrix) -> Vec<Vec<Rational>> {
    let zero = vec![Rational::zero(); m.rows];
    solve_affine(m, &zero).expect("dimensions agree").nullspace
}

/// A left-kernel vector `y` with `y M = 0` and `y . b != 0`, witnessing that
/// `M x = b` has no solution.
pub fn inconsistency_witness(m: &SparseMatrix, b: &[Rational]) -> Option<Vec<Rational>> {
    kernel(&m.transpose()).into_iter().find(|y| !dot(y, b).is_zero())
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum()
}

/// Reduced row echelon basis of the span of `vectors` (deterministic).
pub fn row_reduce(vectors: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let rows: Vec<BTreeMap<usize, Rational>> = vectors
        .iter()
        .map(|v| v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i, x.clone())).collect())
        .collect();
    let n = rows.len();
    let e = eliminate(rows, vec![Rational::zero(); n], cols);
    e.pivots
        .iter()
        .map(|&(_, r)| {
            let mut v = vec![Rational::zero(); cols];
            for (&c, x) in &e.rows[r] {
                v[c] = x.clone();
            }
            v
        })
        .collect()
}

pub fn is_integer(c: &Rational) -> bool {
    c.denom().is_one()
}

pub fn abs(c: &Rational) -> Rational {
    c.abs()
}
