//! Analytic inverse of the observation map.
//!
//! Each pair contributes three rows of the linear system `M vec(A) = b`,
//!
//! ```text
//! M[(i,α), (β,γ)] = s_α s_β s_γ − δ_αβ s_γ,     b[(i,α)] = ṡ_α
//! ```
//!
//! with `vec(A)` row-major. The optional final row `vec(I)ᵀ vec(A) = 0`
//! imposes incompressibility and removes the isotropic kernel direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::ObservationSet;
use crate::svd::{MatrixRx9, Svd};
use crate::tensor::{IrrepDecomp, Tensor3, Vec3, UNIT_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSystem {
    pub matrix: MatrixRx9,
    pub rhs: Vec<f64>,
    pub trace_row: bool,
    pub svd: Svd,
}

/// The three rows contributed by one direction.
pub fn design_rows(s: Vec3) -> [[f64; 9]; 3] {
    let mut rows = [[0.0; 9]; 3];
    for (alpha, row) in rows.iter_mut().enumerate() {
        for beta in 0..3 {
            for gamma in 0..3 {
                let delta = if alpha == beta { 1.0 } else { 0.0 };
                row[3 * beta + gamma] = s[alpha] * s[beta] * s[gamma] - delta * s[gamma];
            }
        }
    }
    rows
}

/// Stacked design matrix for a direction list, without a trace row.
pub fn design_matrix(directions: &[Vec3]) -> Result<MatrixRx9> {
    if directions.is_empty() {
        return Err(Error::Empty("direction list"));
    }
    let mut rows = Vec::with_capacity(3 * directions.len());
    for (index, &s) in directions.iter().enumerate() {
        let norm = s.norm();
        if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
            return Err(Error::NonUnitDirection { index, norm });
        }
        rows.extend(design_rows(s));
    }
    MatrixRx9::new(rows)
}

pub fn build_design(obs: &ObservationSet, trace_row: bool) -> Result<DesignSystem> {
    let mut matrix = design_matrix(&obs.directions())?;
    let mut rhs: Vec<f64> = obs.pairs.iter().flat_map(|p| p.sdot.to_array()).collect();
    if trace_row {
        matrix.push_row(Tensor3::IDENTITY.to_vec9());
        rhs.push(0.0);
    }
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("observed rates are not finite".into()));
    }
    let svd = matrix.svd()?;
    Ok(DesignSystem {
        matrix,
        rhs,
        trace_row,
        svd,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub estimate: Tensor3,
    pub residual_norm: f64,
    pub rank: usize,
    pub kernel_dim: usize,
    /// `σ_max/σ_min` over the retained spectrum; `None` if nothing is retained.
    pub condition: Option<f64>,
    pub regularization: f64,
    pub tol: f64,
    pub singular_values: Vec<f64>,
    /// Unit kernel vectors as orthonormal irrep coefficients `[v0, √2 ω, v2]`.
    pub kernel: Vec<[f64; 9]>,
}

impl DesignSystem {
    fn projections(&self) -> Vec<f64> {
        (0..9)
            .map(|j| self.svd.u.iter().zip(&self.rhs).map(|(u, b)| u[j] * b).sum())
            .collect()
    }

    fn finish(&self, x: [f64; 9], tol: f64, regularization: f64) -> Reconstruction {
        let mx = self.matrix.mul_vec(&x);
        let residual_norm = mx
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let rank = self.svd.rank(tol);
        let condition = (rank > 0).then(|| self.svd.sigma[0] / self.svd.sigma[rank - 1]);
        let kernel = self
            .svd
            .kernel(tol)
            .into_iter()
            .map(|k| Tensor3::from_vec9(&k.try_into().expect("kernel vectors have 9 entries")).decompose().to_coeffs())
            .collect();
        Reconstruction {
            estimate: Tensor3::from_vec9(&x),
            residual_norm,
            rank,
            kernel_dim: 9 - rank,
            condition,
            regularization,
            tol,
            singular_values: self.svd.sigma.clone(),
            kernel,
        }
    }
}

/// Minimum-norm least squares by truncated-SVD pseudoinverse.
pub fn solve_min_norm(sys: &DesignSystem, tol: f64) -> Result<Reconstruction> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("rank tolerance must be > 0, got {tol}")));
    }
    let proj = sys.projections();
    let mut x = [0.0; 9];
    for (j, &sigma) in sys.svd.sigma.iter().enumerate() {
        if Svd::is_retained(sigma, tol) {
            let c = proj[j] / sigma;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += c * sys.svd.v[i][j];
            }
        }
    }
    Ok(sys.finish(x, tol, 0.0))
}

/// Minimises `‖M x − b‖² + λ² ‖x‖²` with filter factors `σ/(σ² + λ²)`.
pub fn solve_tikhonov(sys: &DesignSystem, lambda: f64) -> Result<Reconstruction> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!("Tikhonov lambda must be > 0, got {lambda}")));
    }
    let proj = sys.projections();
    let mut x = [0.0; 9];
    for (j, &sigma) in sys.svd.sigma.iter().enumerate() {
        let c = sigma / (sigma * sigma + lambda * lambda) * proj[j];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += c * sys.svd.v[i][j];
        }
    }
    Ok(sys.finish(x, sys.svd.default_tol(), lambda))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Solver {
    /// `tol: None` uses `9 σ₁ 1e-12`.
    MinNorm { tol: Option<f64> },
    Tikhonov { lambda: f64 },
}

impl Default for Solver {
    fn default() -> Self {
        Solver::MinNorm { tol: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub trace_row: bool,
    pub solver: Solver,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            trace_row: true,
            solver: Solver::default(),
        }
    }
}

pub fn reconstruct(obs: &ObservationSet, options: &ReconstructOptions) -> Result<Reconstruction> {
    let sys = build_design(obs, options.trace_row)?;
    match options.solver {
        Solver::MinNorm { tol } => {
            let tol = tol.unwrap_or_else(|| sys.svd.default_tol());
            // All-zero system: default tol is 0, any positive tol gives the zero estimate.
            solve_min_norm(&sys, if tol > 0.0 { tol } else { f64::MIN_POSITIVE })
        }
        Solver::Tikhonov { lambda } => solve_tikhonov(&sys, lambda),
    }
}

/// Flat JSON form of a [`Reconstruction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRecord {
    /// Row-major estimate.
    pub estimate: [f64; 9],
    pub irreps: IrrepDecomp,
    pub residual_norm: f64,
    pub rank: usize,
    pub kernel_dim: usize,
    pub condition: Option<f64>,
    pub regularization: f64,
    pub singular_values: Vec<f64>,
    pub kernel: Vec<[f64; 9]>,
}

impl From<&Reconstruction> for ReconstructionRecord {
    fn from(r: &Reconstruction) -> Self {
        Self {
            estimate: r.estimate.to_vec9(),
            irreps: r.estimate.decompose(),
            residual_norm: r.residual_norm,
            rank: r.rank,
            kernel_dim: r.kernel_dim,
            condition: r.condition,
            regularization: r.regularization,
            singular_values: r.singular_values.clone(),
            kernel: r.kernel.clone(),
        }
    }
}
