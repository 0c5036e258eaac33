//! Error metrics over ensembles of estimates, and the rotation audit.
//!
//! Squared errors are summed over tensor entries (Frobenius) and over samples:
//! `nMSE = Σ_i ‖Â_i − A_i‖²_F / Σ_i ‖A_i‖²_F`, `RSE_i = ‖Â_i − A_i‖²_F / ‖A_i‖²_F`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::observation::ObservationSet;
use crate::tensor::{Rotation, Tensor3};

/// Published reference values for learned estimators; context only, nothing here reproduces them.
pub mod reference {
    /// CovErr of a trained SO(3)-equivariant network.
    pub const EQUIVARIANT_NET_COVERR: f64 = 2.52e-4;
    /// CovErr of an unconstrained MLP on the same task.
    pub const MLP_COVERR: f64 = 9.09e1;
    /// `(N, V₁ nMSE, V₂ nMSE)` of the trained equivariant network.
    pub const EQUIVARIANT_NET_COMPONENT_NMSE: [(usize, f64, f64); 3] =
        [(3, 0.2716, 0.6805), (4, 0.2096, 0.6183), (5, 0.1641, 0.5495)];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmse: f64,
    pub mrse: f64,
    pub rse_values: Vec<f64>,
    pub coverr: Option<f64>,
    pub count: usize,
}

fn check_lengths(estimates: &[Tensor3], truths: &[Tensor3]) -> Result<()> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::Empty("no samples"));
    }
    Ok(())
}

fn sq(t: &Tensor3) -> f64 {
    t.frobenius_dot(t)
}

pub fn nmse(estimates: &[Tensor3], truths: &[Tensor3]) -> Result<f64> {
    check_lengths(estimates, truths)?;
    let den: f64 = truths.iter().map(sq).sum();
    if den == 0.0 {
        return Err(Error::ZeroNormalization);
    }
    let num: f64 = estimates.iter().zip(truths).map(|(e, t)| sq(&(*e - *t))).sum();
    Ok(num / den)
}

pub fn rse(estimate: &Tensor3, truth: &Tensor3) -> Result<f64> {
    let den = sq(truth);
    if den == 0.0 {
        return Err(Error::ZeroNormalization);
    }
    Ok(sq(&(*estimate - *truth)) / den)
}

pub fn mrse(estimates: &[Tensor3], truths: &[Tensor3]) -> Result<f64> {
    check_lengths(estimates, truths)?;
    let v = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| rse(e, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Fraction of samples with RSE strictly below `threshold`.
pub fn fraction_below(rse_values: &[f64], threshold: f64) -> f64 {
    if rse_values.is_empty() {
        return 0.0;
    }
    rse_values.iter().filter(|&&r| r < threshold).count() as f64 / rse_values.len() as f64
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

impl MetricReport {
    pub fn from_samples(estimates: &[Tensor3], truths: &[Tensor3]) -> Result<Self> {
        let nmse = nmse(estimates, truths)?;
        let rse_values = estimates
            .iter()
            .zip(truths)
            .map(|(e, t)| rse(e, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nmse,
            mrse: rse_values.iter().sum::<f64>() / rse_values.len() as f64,
            count: rse_values.len(),
            rse_values,
            coverr: None,
        })
    }

    pub fn fraction_below_one(&self) -> f64 {
        fraction_below(&self.rse_values, 1.0)
    }

    pub fn median_rse(&self) -> f64 {
        median(&self.rse_values).unwrap_or(0.0)
    }
}

/// Reports on the rotational (V₁) and strain (V₂) parts separately.
pub fn component_errors(estimates: &[Tensor3], truths: &[Tensor3]) -> Result<(MetricReport, MetricReport)> {
    check_lengths(estimates, truths)?;
    let split = |ts: &[Tensor3]| -> (Vec<Tensor3>, Vec<Tensor3>) {
        ts.iter()
            .map(|t| {
                let d = t.decompose();
                (d.v1_tensor(), d.v2_tensor())
            })
            .unzip()
    };
    let (e1, e2) = split(estimates);
    let (t1, t2) = split(truths);
    Ok((MetricReport::from_samples(&e1, &t1)?, MetricReport::from_samples(&e2, &t2)?))
}

/// Mean over all `(obs, R)` of `‖F(ρ(R) obs) − R F(obs) Rᵀ‖_F`.
pub fn coverr<F>(estimator: F, obs_list: &[ObservationSet], rotations: &[Rotation]) -> Result<f64>
where
    F: Fn(&ObservationSet) -> Result<Tensor3>,
{
    if obs_list.is_empty() {
        return Err(Error::Empty("no observation sets"));
    }
    if rotations.is_empty() {
        return Err(Error::Empty("no rotations"));
    }
    let mut total = 0.0;
    for obs in obs_list {
        let base = estimator(obs)?;
        for r in rotations {
            let rotated = estimator(&obs.rotated(r))?;
            total += (rotated - r.conjugate(&base)).frobenius_norm();
        }
    }
    Ok(total / (obs_list.len() * rotations.len()) as f64)
}

/// Decade bin edges `0, 10^lo, …, 10^hi`; the last bin is open above.
pub fn decade_edges(lo: i32, hi: i32) -> Vec<f64> {
    std::iter::once(0.0).chain((lo..=hi).map(|k| 10f64.powi(k))).collect()
}

/// Counts per bin `[edges[i], edges[i+1])`, with the final bin `[edges.last(), ∞)`.
/// Values below the first edge are dropped.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let mut counts = vec![0; edges.len()];
    for &v in values {
        if let Some(i) = edges.iter().rposition(|&e| v >= e) {
            counts[i] += 1;
        }
    }
    counts
}

/// `lower,upper,count` rows; the open upper edge is written as `inf`.
pub fn write_histogram_csv<W: Write>(edges: &[f64], counts: &[usize], mut w: W) -> Result<()> {
    w.write_all(b"lower,upper,count\n")?;
    for (i, c) in counts.iter().enumerate() {
        let upper = edges.get(i + 1).map_or_else(|| "inf".to_string(), |&u| csvfmt::real(u));
        w.write_all(csvfmt::line([csvfmt::real(edges[i]), upper, c.to_string()]).as_bytes())?;
    }
    Ok(())
}
