//! Exact maximum-weight bipartite assignment.
//!
//! Hungarian algorithm with row/column potentials and shortest augmenting
//! paths, O(n³). Weights are non-negative; a zero weight means "no edge".
//! The matrix is padded to square with zero-weight cells, so leaving a vertex
//! unmatched is always available to the optimizer, and only genuine edges are
//! reported back.

/// Solves `max Σ weight(r, c)` over one-to-one row/column assignments.
///
/// `weight(r, c)` must return a finite value `>= 0`, with `0` meaning the pair
/// cannot be linked. Returns matched `(row, col)` pairs with strictly positive
/// weight, sorted by row.
pub fn max_weight_matching<F>(n_rows: usize, n_cols: usize, weight: F) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> f64,
{
    if n_rows == 0 || n_cols == 0 {
        return Vec::new();
    }
    let n = n_rows.max(n_cols);
    // Minimize negated weights; padding cells cost 0 (skip edges).
    let cost = |r: usize, c: usize| -> f64 {
        if r < n_rows && c < n_cols {
            -weight(r, c)
        } else {
            0.0
        }
    };

    // Potentials and matching, 1-indexed; p[j] is the row matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut matches = Vec::new();
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < n_rows && j - 1 < n_cols && weight(i - 1, j - 1) > 0.0 {
            matches.push((i - 1, j - 1));
        }
    }
    matches.sort_unstable();
    matches
}

/// Total weight of a matching under `weight`, summed in row order.
pub fn matching_total<F>(matches: &[(usize, usize)], weight: F) -> f64
where
    F: Fn(usize, usize) -> f64,
{
    matches.iter().map(|&(r, c)| weight(r, c)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn of(matrix: &[Vec<f64>]) -> impl Fn(usize, usize) -> f64 + '_ {
        |r, c| matrix[r][c]
    }

    /// Brute force over all matchings (rows may stay unmatched), used as the
    /// independent oracle. Exponential; keep instances small.
    fn brute_force_best(matrix: &[Vec<f64>]) -> f64 {
        fn recurse(matrix: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == matrix.len() {
                return 0.0;
            }
            // Leave this row unmatched.
            let mut best = recurse(matrix, row + 1, used);
            for col in 0..used.len() {
                if !used[col] && matrix[row][col] > 0.0 {
                    used[col] = true;
                    let total = matrix[row][col] + recurse(matrix, row + 1, used);
                    used[col] = false;
                    if total > best {
                        best = total;
                    }
                }
            }
            best
        }
        let cols = matrix.first().map(|r| r.len()).unwrap_or(0);
        recurse(matrix, 0, &mut vec![false; cols])
    }

    #[test]
    fn prefers_total_over_single_best_edge() {
        // Picking the 0.9 edge alone yields 0.9; the cross pairing yields 1.6.
        let m = vec![vec![0.9, 0.8], vec![0.8, 0.1]];
        let matches = max_weight_matching(2, 2, of(&m));
        assert_eq!(matches, vec![(0, 1), (1, 0)]);
        assert_eq!(matching_total(&matches, of(&m)), 1.6);
    }

    #[test]
    fn zero_cells_are_not_edges() {
        let m = vec![vec![0.0, 0.7], vec![0.0, 0.0]];
        let matches = max_weight_matching(2, 2, of(&m));
        assert_eq!(matches, vec![(0, 1)]);
    }

    #[test]
    fn rectangular_shapes() {
        let m = vec![vec![0.2, 0.9, 0.4]];
        assert_eq!(max_weight_matching(1, 3, of(&m)), vec![(0, 1)]);
        let tall = vec![vec![0.3], vec![0.8], vec![0.5]];
        assert_eq!(max_weight_matching(3, 1, of(&tall)), vec![(1, 0)]);
    }

    #[test]
    fn sparse_skip_beats_forced_assignment() {
        // A full assignment would need the zero cell; optimum skips row 1.
        let m = vec![vec![0.9, 0.8], vec![0.9, 0.0]];
        let matches = max_weight_matching(2, 2, of(&m));
        let total = matching_total(&matches, of(&m));
        assert_eq!(total, brute_force_best(&m));
        assert!((total - 1.7).abs() < 1e-12);
    }

    #[test]
    fn random_instances_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..100 {
            let rows = rng.random_range(1..=5);
            let cols = rng.random_range(1..=5);
            let matrix: Vec<Vec<f64>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| {
                            // Mix genuine edges and holes.
                            if rng.random_bool(0.25) {
                                0.0
                            } else {
                                rng.random_range(0.01..1.0)
                            }
                        })
                        .collect()
                })
                .collect();
            let matches = max_weight_matching(rows, cols, of(&matrix));
            let total = matching_total(&matches, of(&matrix));
            let best = brute_force_best(&matrix);
            assert!(
                (total - best).abs() < 1e-12,
                "trial {trial}: solver {total} vs brute force {best} on {matrix:?}"
            );
        }
    }
}
