use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Coordinate-format sparse matrix.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    /// A · X for dense X (cols × l).
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, x.ncols());
        for &(i, k, v) in &self.triplets {
            for c in 0..x.ncols() {
                out[(i, c)] += v * x[(k, c)];
            }
        }
        out
    }

    /// Aᵀ · X for dense X (rows × l).
    pub fn tmul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.cols, x.ncols());
        for &(i, k, v) in &self.triplets {
            for c in 0..x.ncols() {
                out[(k, c)] += v * x[(i, c)];
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for &(i, k, v) in &self.triplets {
            out[(i, k)] += v;
        }
        out
    }
}

/// Leading singular triplets, singular values in descending order.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Randomized range-finder SVD with power iterations.
///
/// The sketch width is `rank + oversample`, capped at `min(rows, cols)`;
/// when the cap is hit the decomposition is exact up to round-off.
pub fn randomized_svd<R: Rng + ?Sized>(
    a: &SparseMatrix,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    rng: &mut R,
) -> TruncatedSvd {
    let width = (rank + oversample).min(a.rows.min(a.cols)).max(rank);
    let omega = DMatrix::from_fn(a.cols, width, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = orthonormal_basis(a.mul_dense(&omega));
    for _ in 0..power_iters {
        let z = orthonormal_basis(a.tmul_dense(&q));
        q = orthonormal_basis(a.mul_dense(&z));
    }
    // B = Qᵀ A, formed as (Aᵀ Q)ᵀ
    let small = a.tmul_dense(&q).transpose();
    let svd = small.svd(true, true);
    let u_small = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y]
            .partial_cmp(&svd.singular_values[x])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let keep = rank.min(order.len());
    let u_full = &q * &u_small;
    let u = DMatrix::from_fn(a.rows, keep, |i, c| u_full[(i, order[c])]);
    let v = DMatrix::from_fn(a.cols, keep, |k, c| v_t[(order[c], k)]);
    let singular_values = order[..keep].iter().map(|&c| svd.singular_values[c]).collect();
    TruncatedSvd {
        u,
        singular_values,
        v,
    }
}
