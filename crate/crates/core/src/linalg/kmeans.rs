use rand::Rng;

use crate::matrix::Matrix;

#[derive(Clone, Debug)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centers: Matrix,
    /// Squared distance of every point to every center.
    pub sq_dists: Matrix,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(dists: &[f64]) -> usize {
    let mut best = 0;
    for (c, &d) in dists.iter().enumerate() {
        if d < dists[best] {
            best = c;
        }
    }
    best
}

fn plus_plus_init<R: Rng + ?Sized>(points: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = points.rows();
    let mut centers = Matrix::zeros(k, points.cols());
    centers.row_mut(0).copy_from_slice(points.row(rng.random_range(0..n)));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centers.row(c)));
        }
    }
    centers
}

fn lloyd(points: &Matrix, mut centers: Matrix, max_iter: usize) -> KMeans {
    let n = points.rows();
    let k = centers.rows();
    let dim = points.cols();
    let mut labels = vec![usize::MAX; n];
    let mut sq_dists = Matrix::zeros(n, k);
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            for c in 0..k {
                sq_dists[(i, c)] = sq_dist(points.row(i), centers.row(c));
            }
            let best = nearest(sq_dists.row(i));
            if best != labels[i] {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums.row_mut(labels[i]).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s / counts[c] as f64;
                }
            } else {
                // reseed an empty cluster at the point farthest from its center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dists[(a, labels[a])]
                            .partial_cmp(&sq_dists[(b, labels[b])])
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .unwrap_or(0);
                centers.row_mut(c).copy_from_slice(points.row(far));
            }
        }
    }
    for i in 0..n {
        for c in 0..k {
            sq_dists[(i, c)] = sq_dist(points.row(i), centers.row(c));
        }
        labels[i] = nearest(sq_dists.row(i));
    }
    let inertia = (0..n).map(|i| sq_dists[(i, labels[i])]).sum();
    KMeans {
        labels,
        centers,
        sq_dists,
        inertia,
    }
}

/// Lloyd's k-means with k-means++ seeding; the best of `restarts` runs by
/// inertia is returned. Ties in assignment go to the lowest center index.
pub fn kmeans<R: Rng + ?Sized>(
    points: &Matrix,
    k: usize,
    restarts: usize,
    max_iter: usize,
    rng: &mut R,
) -> KMeans {
    assert!(k >= 1 && points.rows() >= 1, "k-means needs points and k >= 1");
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, plus_plus_init(points, k, rng), max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}
