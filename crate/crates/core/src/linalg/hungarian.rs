use crate::matrix::Matrix;

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with row/column potentials). Returns `assignment[row] = col`.
pub fn min_cost_assignment(cost: &Matrix) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-indexed potentials; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
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
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] > 0 {
            assignment[matched_row[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Maximum-weight perfect matching; `assignment[row] = col`.
pub fn max_weight_assignment(weight: &Matrix) -> Vec<usize> {
    let mut cost = weight.clone();
    cost.as_mut_slice().iter_mut().for_each(|w| *w = -*w);
    min_cost_assignment(&cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &Matrix) -> f64 {
        fn rec(cost: &Matrix, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.rows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[(row, j)] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.cols()])
    }

    #[test]
    fn matches_brute_force() {
        use rand::Rng;
        let mut rng = crate::rng::stream(5, &[1]);
        for n in 1..=6 {
            for _ in 0..20 {
                let data: Vec<f64> = (0..n * n).map(|_| rng.random_range(-5.0..5.0)).collect();
                let cost = Matrix::from_vec(n, n, data).unwrap();
                let a = min_cost_assignment(&cost);
                let mut seen = vec![false; n];
                a.iter().for_each(|&j| seen[j] = true);
                assert!(seen.iter().all(|&s| s));
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
                assert!((total - brute_force(&cost)).abs() < 1e-9);
            }
        }
    }
}
