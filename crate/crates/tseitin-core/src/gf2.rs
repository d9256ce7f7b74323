//! Linear systems over GF(2) with packed rows.

use alloc::vec;
use alloc::vec::Vec;

/// A system of equations `row . x = rhs` over `cols` unknowns.
#[derive(Clone, Debug, Default)]
pub struct System {
    cols: usize,
    words: usize,
    rows: Vec<(Vec<u64>, bool)>,
}

impl System {
    pub fn new(cols: usize) -> Self {
        System { cols, words: cols.div_ceil(64).max(1), rows: Vec::new() }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn push(&mut self, vars: impl IntoIterator<Item = usize>, rhs: bool) {
        let mut row = vec![0u64; self.words];
        for v in vars {
            row[v / 64] ^= 1 << (v % 64);
        }
        self.rows.push((row, rhs));
    }

    /// Reduced row echelon form: returns the pivot rows and `None` when inconsistent.
    fn eliminate(&self) -> Option<Vec<(usize, Vec<u64>, bool)>> {
        let mut rows = self.rows.clone();
        let mut pivots: Vec<(usize, Vec<u64>, bool)> = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            let (w, b) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (r..rows.len()).find(|&i| rows[i].0[w] & b != 0) else { continue };
            rows.swap(r, p);
            let (prow, prhs) = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row.0[w] & b != 0 {
                    for (x, y) in row.0.iter_mut().zip(&prow) {
                        *x ^= y;
                    }
                    row.1 ^= prhs;
                }
            }
            r += 1;
        }
        for (i, (row, rhs)) in rows.into_iter().enumerate() {
            if i < r {
                let c = first_bit(&row).expect("pivot row is non-zero");
                pivots.push((c, row, rhs));
            } else if rhs {
                return None;
            }
        }
        Some(pivots)
    }

    pub fn is_consistent(&self) -> bool {
        self.eliminate().is_some()
    }

    /// Some solution with free variables set to zero.
    pub fn solve(&self) -> Option<Vec<bool>> {
        let pivots = self.eliminate()?;
        let mut x = vec![false; self.cols];
        for (c, _, rhs) in pivots {
            x[c] = rhs;
        }
        Some(x)
    }

    pub fn rank(&self) -> usize {
        let mut s = self.clone();
        for r in s.rows.iter_mut() {
            r.1 = false;
        }
        s.eliminate().map_or(0, |p| p.len())
    }
}

fn first_bit(row: &[u64]) -> Option<usize> {
    row.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut s = System::new(3);
        s.push([0, 1], true);
        s.push([1, 2], false);
        let x = s.solve().unwrap();
        assert!(x[0] ^ x[1]);
        assert!(!(x[1] ^ x[2]));
        assert_eq!(s.rank(), 2);
        s.push([0, 2], false);
        assert!(!s.is_consistent());
    }

    #[test]
    fn wide_rows() {
        let mut s = System::new(130);
        s.push([0, 129], true);
        s.push([129], true);
        let x = s.solve().unwrap();
        assert!(!x[0] && x[129]);
    }
}
