pub mod equivariance;
pub mod ident_table;
pub mod noise_sweep;
pub mod rank_profile;
pub mod roundtrip;

use velgrad_core::csvfmt;
use velgrad_core::metrics::{component_errors, MetricReport};
use velgrad_core::Tensor3;

/// `rse` of one part of the decomposition, `NaN` when the true part vanishes.
fn part_rse(estimate: &Tensor3, truth: &Tensor3, part: fn(&Tensor3) -> Tensor3) -> f64 {
    let t = part(truth);
    let d = part(estimate) - t;
    let den = t.frobenius_dot(&t);
    if den == 0.0 {
        f64::NAN
    } else {
        d.frobenius_dot(&d) / den
    }
}

pub fn v1_part(t: &Tensor3) -> Tensor3 {
    t.decompose().v1_tensor()
}

pub fn v2_part(t: &Tensor3) -> Tensor3 {
    t.decompose().v2_tensor()
}

/// Component reports, skipped when a part of the truth vanishes in some sample.
fn component_reports(estimates: &[Tensor3], truths: &[Tensor3]) -> (Option<MetricReport>, Option<MetricReport>) {
    match component_errors(estimates, truths) {
        Ok((v1, v2)) => (Some(v1), Some(v2)),
        Err(_) => {
            let one = |part: fn(&Tensor3) -> Tensor3| {
                let e: Vec<_> = estimates.iter().map(part).collect();
                let t: Vec<_> = truths.iter().map(part).collect();
                MetricReport::from_samples(&e, &t).ok()
            };
            (one(v1_part), one(v2_part))
        }
    }
}

fn tensor_fields(t: &Tensor3) -> impl Iterator<Item = String> {
    t.to_vec9().into_iter().map(csvfmt::real)
}

fn tensor_header(prefix: &str) -> String {
    (1..=3)
        .flat_map(|i| (1..=3).map(move |j| format!("{prefix}{i}{j}")))
        .collect::<Vec<_>>()
        .join(",")
}
