//! Exact linear algebra over the rationals: incremental row reduction.

use num_traits::{One, Zero};

use crate::Q;

/// Incrementally row-reduced linear system `A x = b`.
///
/// Rows are added one at a time; a row that contradicts the previous ones is
/// rejected, which lets callers name the offending equation.
#[derive(Debug, Clone)]
pub struct RowReducer {
    width: usize,
    // (pivot column, row of width+1 entries with 1 at the pivot)
    rows: Vec<(usize, Vec<Q>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inconsistent;

impl RowReducer {
    pub fn new(width: usize) -> Self {
        RowReducer {
            width,
            rows: Vec::new(),
        }
    }

    fn reduce(&self, mut row: Vec<Q>) -> Vec<Q> {
        for (p, r) in &self.rows {
            if !row[*p].is_zero() {
                let f = row[*p].clone();
                for (x, y) in row.iter_mut().zip(r) {
                    *x -= &f * y;
                }
            }
        }
        row
    }

    /// Adds the equation `coeffs · x = rhs`.
    pub fn push(&mut self, coeffs: &[Q], rhs: Q) -> Result<(), Inconsistent> {
        assert_eq!(coeffs.len(), self.width);
        let mut row: Vec<Q> = coeffs.to_vec();
        row.push(rhs);
        let mut row = self.reduce(row);
        let Some(p) = (0..self.width).find(|&c| !row[c].is_zero()) else {
            return if row[self.width].is_zero() {
                Ok(())
            } else {
                Err(Inconsistent)
            };
        };
        let inv = Q::one() / &row[p];
        for x in row.iter_mut() {
            *x *= &inv;
        }
        for (_, r) in self.rows.iter_mut() {
            if !r[p].is_zero() {
                let f = r[p].clone();
                for (x, y) in r.iter_mut().zip(&row) {
                    *x -= &f * y;
                }
            }
        }
        self.rows.push((p, row));
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// A solution with every free variable set to zero.
    pub fn solution(&self) -> Vec<Q> {
        let mut x = vec![Q::zero(); self.width];
        for (p, r) in &self.rows {
            x[*p] = r[self.width].clone();
        }
        x
    }
}

/// Solves a square or overdetermined system exactly; free variables are zero.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Result<Vec<Q>, Inconsistent> {
    let width = a.first().map_or(0, Vec::len);
    let mut r = RowReducer::new(width);
    for (row, rhs) in a.iter().zip(b) {
        r.push(row, rhs.clone())?;
    }
    Ok(r.solution())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    #[test]
    fn solves_and_detects_contradictions() {
        let a = vec![vec![q(1), q(1)], vec![q(1), q(-1)]];
        assert_eq!(solve(&a, &[q(3), q(1)]).unwrap(), vec![q(2), q(1)]);
        let mut r = RowReducer::new(2);
        r.push(&[q(1), q(2)], q(1)).unwrap();
        r.push(&[q(2), q(4)], q(2)).unwrap();
        assert_eq!(r.push(&[q(2), q(4)], q(3)), Err(Inconsistent));
        assert_eq!(r.rank(), 1);
        assert_eq!(r.solution(), vec![q(1), q(0)]);
    }
}
