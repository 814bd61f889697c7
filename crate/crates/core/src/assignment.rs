//! Rectangular linear assignment (Hungarian method, shortest augmenting
//! paths with potentials, O(n^2 m)).

use nalgebra::DMatrix;

/// Minimum-cost assignment of `min(rows, cols)` pairs.
///
/// Returns `(row, col)` pairs sorted by row. Costs must be finite.
pub fn linear_sum_assignment(cost: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let (rows, cols) = cost.shape();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let mut pairs: Vec<(usize, usize)> = solve(&cost.transpose())
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        return pairs;
    }
    solve(cost)
}

/// Sum of `cost` over the given pairs.
pub fn assignment_cost(cost: &DMatrix<f64>, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| cost[(r, c)]).sum()
}

// rows <= cols
fn solve(cost: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let (n, m) = cost.shape();
    // 1-based bookkeeping; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| col_owner[j] != 0)
        .map(|j| (col_owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_example() {
        let c = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let p = linear_sum_assignment(&c);
        assert_eq!(p, vec![(0, 1), (1, 0), (2, 2)]);
        assert_eq!(assignment_cost(&c, &p), 5.0);
    }

    #[test]
    fn wide_and_tall() {
        let wide = DMatrix::from_row_slice(2, 3, &[5.0, 1.0, 9.0, 1.0, 8.0, 9.0]);
        assert_eq!(linear_sum_assignment(&wide), vec![(0, 1), (1, 0)]);
        let tall = wide.transpose();
        assert_eq!(linear_sum_assignment(&tall), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn empty() {
        assert!(linear_sum_assignment(&DMatrix::zeros(0, 4)).is_empty());
        assert!(linear_sum_assignment(&DMatrix::zeros(3, 0)).is_empty());
    }
}
