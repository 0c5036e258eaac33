//! One-sided Jacobi SVD for tall, narrow matrices (at most a few dozen rows,
//! at most nine columns).
//!
//! Columns of a working copy of `M` are orthogonalised pairwise by plane
//! rotations accumulated into `V`; on convergence the column norms are the
//! singular values and the normalised columns are `U`. A pair is rotated
//! while `|a_p·a_q| > 1e-14 ‖a_p‖‖a_q‖`, unless the product is below
//! `(1e-14 ‖M‖_F)²` (both columns at round-off level).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 60;
const PAIR_TOL: f64 = 1e-14;

/// Default numerical-rank tolerance `9 · σ₁ · 1e-12`.
pub fn default_tol(sigma_max: f64) -> f64 {
    9.0 * sigma_max * 1e-12
}

/// `U diag(σ) Vᵀ` with `σ` sorted in descending order.
///
/// `u` is `m × n`; columns belonging to zero singular values are zero.
/// `v` is a full `n × n` orthogonal matrix stored row-major (`v[i][j] = V_ij`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Svd {
    pub u: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub sweeps: usize,
}

impl Svd {
    pub fn ncols(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn default_tol(&self) -> f64 {
        default_tol(self.sigma_max())
    }

    /// A singular value is retained iff `σ ≥ tol` and `σ > 0`.
    pub fn is_retained(sigma: f64, tol: f64) -> bool {
        sigma > 0.0 && sigma >= tol
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.sigma.iter().filter(|&&s| Self::is_retained(s, tol)).count()
    }

    pub fn v_col(&self, j: usize) -> Vec<f64> {
        self.v.iter().map(|row| row[j]).collect()
    }

    pub fn u_col(&self, j: usize) -> Vec<f64> {
        self.u.iter().map(|row| row[j]).collect()
    }

    /// Right singular vectors of the non-retained singular values.
    pub fn kernel(&self, tol: f64) -> Vec<Vec<f64>> {
        (self.rank(tol)..self.ncols()).map(|j| self.v_col(j)).collect()
    }

    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.ncols();
        self.u
            .iter()
            .map(|urow| {
                (0..n)
                    .map(|c| (0..n).map(|k| urow[k] * self.sigma[k] * self.v[c][k]).sum())
                    .collect()
            })
            .collect()
    }
}

/// SVD of the `m × n` matrix given by `rows` (all rows of length `n`).
pub fn jacobi_svd(rows: &[Vec<f64>], n: usize) -> Result<Svd> {
    if n == 0 {
        return Err(Error::Empty("matrix has no columns"));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::LengthMismatch {
            left: rows[bad].len(),
            right: n,
        });
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let m = rows.len();
    // Column-major working copy.
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let floor = (PAIR_TOL * a.iter().map(|c| dot(c, c)).sum::<f64>().sqrt()).powi(2);
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        let mut worst = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                if rel <= PAIR_TOL || gamma.abs() <= floor {
                    continue;
                }
                worst = worst.max(rel);
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps >= MAX_SWEEPS {
            return Err(Error::SvdNoConvergence {
                sweeps,
                off_diagonal: worst,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = (0..m)
        .map(|i| {
            order
                .iter()
                .map(|&j| if norms[j] > 0.0 { a[j][i] / norms[j] } else { 0.0 })
                .collect()
        })
        .collect();
    let v = (0..n)
        .map(|i| order.iter().map(|&j| v[j][i]).collect())
        .collect();
    Ok(Svd { u, sigma, v, sweeps })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// An `m × 9` matrix acting on row-major `vec(A)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixRx9 {
    rows: Vec<[f64; 9]>,
}

impl MatrixRx9 {
    pub fn new(rows: Vec<[f64; 9]>) -> Result<Self> {
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[f64; 9]] {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn push_row(&mut self, row: [f64; 9]) {
        self.rows.push(row);
    }

    pub fn mul_vec(&self, x: &[f64; 9]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `M B` for a set of basis columns (each a length-9 vector).
    pub fn mul_columns(&self, cols: &[[f64; 9]]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                cols.iter()
                    .map(|c| r.iter().zip(c).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn svd(&self) -> Result<Svd> {
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| r.to_vec()).collect();
        jacobi_svd(&rows, 9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_rows(m: usize, seed: u64) -> Vec<[f64; 9]> {
        let mut r = rng::stream(seed, 0);
        (0..m)
            .map(|_| {
                let mut row = [0.0; 9];
                row.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut r));
                row
            })
            .collect()
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let m = MatrixRx9::new(vec![[0.0; 9]; 5]).unwrap();
        let svd = m.svd().unwrap();
        assert!(svd.sigma.iter().all(|&s| s == 0.0));
        assert_eq!(svd.rank(svd.default_tol()), 0);
        assert_eq!(svd.kernel(svd.default_tol()).len(), 9);
    }

    #[test]
    fn stacked_identity_has_unit_spectrum() {
        let rows: Vec<[f64; 9]> = (0..9)
            .map(|i| {
                let mut r = [0.0; 9];
                r[i] = 1.0;
                r
            })
            .collect();
        let svd = MatrixRx9::new(rows).unwrap().svd().unwrap();
        assert!(svd.sigma.iter().all(|&s| (s - 1.0).abs() < 1e-15));
        assert_eq!(svd.rank(svd.default_tol()), 9);
    }

    #[test]
    fn reconstruction_and_orthogonality_on_random_matrices() {
        for (seed, m) in [(1, 3), (2, 9), (3, 13), (4, 40), (5, 64)] {
            let rows = random_rows(m, seed);
            let mat = MatrixRx9::new(rows.clone()).unwrap();
            let svd = mat.svd().unwrap();
            let s1 = svd.sigma_max();
            let rec = svd.reconstruct();
            let err: f64 = rows
                .iter()
                .zip(&rec)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-10 * s1, "m={m}: reconstruction error {err}");
            assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
            for i in 0..9 {
                for j in 0..9 {
                    let d: f64 = (0..9).map(|k| svd.v[k][i] * svd.v[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((d - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        // Rank-4 matrix: 12 rows spanned by 4 random rows.
        let base = random_rows(4, 9);
        let mut r = rng::stream(10, 0);
        let rows: Vec<[f64; 9]> = (0..12)
            .map(|_| {
                let w: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut r)).collect();
                let mut row = [0.0; 9];
                for (k, b) in base.iter().enumerate() {
                    for c in 0..9 {
                        row[c] += w[k] * b[c];
                    }
                }
                row
            })
            .collect();
        let mat = MatrixRx9::new(rows).unwrap();
        let svd = mat.svd().unwrap();
        let tol = svd.default_tol();
        assert_eq!(svd.rank(tol), 4);
        let kernel = svd.kernel(tol);
        assert_eq!(kernel.len(), 5);
        for k in kernel {
            let k: [f64; 9] = k.try_into().unwrap();
            let mk = mat.mul_vec(&k);
            let n = mk.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(n <= 1e-10 * svd.sigma_max());
        }
    }

    #[test]
    fn tie_at_threshold_is_retained() {
        let svd = MatrixRx9::new(vec![[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]])
            .unwrap()
            .svd()
            .unwrap();
        assert_eq!(svd.rank(2.0), 1);
        assert_eq!(svd.rank(2.0 + 1e-15), 0);
    }

    #[test]
    fn narrow_generic_matrix() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![0.0, 0.0]];
        let svd = jacobi_svd(&rows, 2).unwrap();
        assert_eq!(svd.sigma, vec![2.0, 1.0]);
        assert!(jacobi_svd(&[vec![1.0]], 2).is_err());
        assert!(jacobi_svd(&[vec![f64::NAN, 1.0]], 2).is_err());
    }
}
