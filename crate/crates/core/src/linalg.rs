//! Dense linear algebra over `F_p`: row reduction, rank, solving and
//! canonical row spaces.

use crate::error::{PirError, Result};
use crate::gf::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Matrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(field: FieldSpec, cols: usize, rows: &[Vec<u64>]) -> Result<Self> {
        let mut m = Matrix::zeros(field, rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(PirError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            m.row_mut(i).copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (head, tail) = self.data.split_at_mut(hi * self.cols);
        head[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }

    /// row[target] -= factor * row[source], from column `from` on.
    fn eliminate(&mut self, target: usize, source: usize, factor: u64, from: usize) {
        let f = self.field;
        let cols = self.cols;
        let (t, s) = if target < source {
            let (head, tail) = self.data.split_at_mut(source * cols);
            (&mut head[target * cols..(target + 1) * cols], &tail[..cols])
        } else {
            let (head, tail) = self.data.split_at_mut(target * cols);
            (&mut tail[..cols], &head[source * cols..(source + 1) * cols])
        };
        for c in from..cols {
            if s[c] != 0 {
                t[c] = f.sub(t[c], f.mul(factor, s[c]));
            }
        }
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            self.swap_rows(row, p);
            let inv = f.inv(self.get(row, col)).expect("pivot is nonzero");
            for c in col..self.cols {
                let v = self.get(row, c);
                self.set(row, c, f.mul(v, inv));
            }
            for r in 0..self.rows {
                if r != row {
                    let factor = self.get(r, col);
                    if factor != 0 {
                        self.eliminate(r, row, factor, col);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Solves `self * x = b` for square nonsingular `self`.
    pub fn solve(&self, b: &[u64]) -> Result<Vec<u64>> {
        if self.rows != self.cols {
            return Err(PirError::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        if b.len() != self.rows {
            return Err(PirError::DimensionMismatch {
                expected: self.rows,
                got: b.len(),
            });
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(self.field, n, n + 1);
        for r in 0..n {
            aug.row_mut(r)[..n].copy_from_slice(self.row(r));
            aug.set(r, n, b[r]);
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(PirError::Singular(format!(
                "rank {} < {n}",
                pivots.iter().filter(|&&c| c < n).count()
            )));
        }
        Ok((0..n).map(|r| aug.get(r, n)).collect())
    }
}

/// A subspace of `F_p^dim` held as its reduced echelon basis, which is a
/// canonical form: two spaces are equal iff their bases are identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSpace {
    dim: usize,
    pivots: Vec<usize>,
    basis: Vec<Vec<u64>>,
}

impl RowSpace {
    pub fn of(mut m: Matrix) -> RowSpace {
        let pivots = m.rref();
        let basis = (0..pivots.len()).map(|r| m.row(r).to_vec()).collect();
        RowSpace {
            dim: m.cols,
            pivots,
            basis,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.dim
    }

    pub fn contains(&self, field: FieldSpec, v: &[u64]) -> bool {
        if v.len() != self.dim {
            return false;
        }
        if self.is_full() {
            return true;
        }
        let mut w = v.to_vec();
        for (row, &pc) in self.basis.iter().zip(&self.pivots) {
            let factor = w[pc];
            if factor != 0 {
                for c in pc..self.dim {
                    w[c] = field.sub(w[c], field.mul(factor, row[c]));
                }
            }
        }
        w.iter().all(|&x| x == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f() -> FieldSpec {
        FieldSpec::new(65537).unwrap()
    }

    #[test]
    fn solve_random_systems() {
        let field = f();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..8 {
            let rows: Vec<Vec<u64>> = (0..n).map(|_| field.random_vec(&mut rng, n)).collect();
            let a = Matrix::from_rows(field, n, &rows).unwrap();
            let x = field.random_vec(&mut rng, n);
            let b: Vec<u64> = rows.iter().map(|r| field.dot(r, &x)).collect();
            assert_eq!(a.solve(&b).unwrap(), x);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let field = f();
        let a = Matrix::from_rows(field, 2, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert!(matches!(a.solve(&[1, 1]), Err(PirError::Singular(_))));
    }

    #[test]
    fn row_space_is_canonical() {
        let field = f();
        let a = Matrix::from_rows(field, 3, &[vec![1, 2, 3], vec![0, 1, 1]]).unwrap();
        // same span, different generators
        let b = Matrix::from_rows(field, 3, &[vec![1, 3, 4], vec![2, 5, 7], vec![1, 2, 3]]).unwrap();
        assert_eq!(RowSpace::of(a.clone()), RowSpace::of(b));
        let s = RowSpace::of(a);
        assert!(s.contains(field, &[3, 7, 10]));
        assert!(!s.contains(field, &[0, 0, 1]));
    }

    #[test]
    fn rank_of_product_structure() {
        let field = f();
        // rank-1 outer product
        let u = [3u64, 5, 7];
        let v = [2u64, 11];
        let rows: Vec<Vec<u64>> = u.iter().map(|&a| v.iter().map(|&b| field.mul(a, b)).collect()).collect();
        assert_eq!(Matrix::from_rows(field, 2, &rows).unwrap().rank(), 1);
    }
}
