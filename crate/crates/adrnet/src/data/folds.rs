//! Deterministic k-fold partition of all M×N matrix cells.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AdrnetError, Result};

/// Balanced fold assignment over every cell, fully determined by
/// (M, N, k, seed). Cell (i, j) lives at flat index i·N + j.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    assignment: Vec<u32>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self, drug: usize, adr: usize) -> usize {
        self.assignment[drug * self.n + adr] as usize
    }

    /// Held-out cells of one fold, in row-major order.
    pub fn test_cells(&self, fold: usize) -> Vec<(usize, usize)> {
        self.cells_where(|f| f == fold)
    }

    /// Training cells for one fold (everything outside it), row-major.
    pub fn train_cells(&self, fold: usize) -> Vec<(usize, usize)> {
        self.cells_where(|f| f != fold)
    }

    fn cells_where(&self, pred: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for i in 0..self.m {
            for j in 0..self.n {
                if pred(self.assignment[i * self.n + j] as usize) {
                    cells.push((i, j));
                }
            }
        }
        cells
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignment {
            sizes[f as usize] += 1;
        }
        sizes
    }
}

/// Assigns each of the M·N cells one of k fold labels with sizes differing by
/// at most one, via a seeded shuffle of a balanced label multiset.
pub fn make_folds(m: usize, n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    let cells = m * n;
    if k < 2 {
        return Err(AdrnetError::Config(format!("fold count {k} below 2")));
    }
    if k > cells {
        return Err(AdrnetError::Config(format!(
            "fold count {k} exceeds {cells} cells ({m}x{n})"
        )));
    }
    let mut assignment: Vec<u32> = (0..cells).map(|c| (c % k) as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    assignment.shuffle(&mut rng);
    Ok(FoldPlan {
        m,
        n,
        k,
        seed,
        assignment,
    })
}
