use ndarray::Array2;

use super::CostMatrix;

/// Monotone warping path from `(0, 0)` to `(n - 1, m - 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentPath(Vec<(usize, usize)>);

impl AlignmentPath {
    pub fn steps(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 0/1 indicator matrix of the cells visited by the path.
    pub fn to_matrix(&self, rows: usize, cols: usize) -> Array2<f64> {
        let mut a = Array2::zeros((rows, cols));
        for &(i, j) in &self.0 {
            a[[i, j]] = 1.0;
        }
        a
    }

    /// Swaps the roles of the two series.
    pub fn transpose(&self) -> Self {
        Self(self.0.iter().map(|&(i, j)| (j, i)).collect())
    }
}

/// Classic dynamic-programming DTW with unit step weights.
///
/// Backtracking breaks ties in the order diagonal, vertical (`i - 1`),
/// horizontal (`j - 1`).
pub fn dtw_hard(cost: &CostMatrix) -> (f64, AlignmentPath) {
    let delta = cost.delta();
    let (n, m) = delta.dim();
    let mut r = Array2::<f64>::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => r[[0, j - 1]],
                (_, 0) => r[[i - 1, 0]],
                _ => r[[i - 1, j - 1]].min(r[[i - 1, j]]).min(r[[i, j - 1]]),
            };
            r[[i, j]] = delta[[i, j]] + best;
        }
    }

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = r[[i - 1, j - 1]];
            let up = r[[i - 1, j]];
            let left = r[[i, j - 1]];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    (r[[n - 1, m - 1]], AlignmentPath(path))
}
