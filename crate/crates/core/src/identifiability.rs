//! Identifiable degrees of freedom per irrep.
//!
//! Two different quantities live here and are never mixed:
//!
//! * **Multiplicity bounds** ([`multiplicity_bound`]): how many copies of each
//!   irrep an equivariant map can draw from `N` observation pairs, depending
//!   on how the pairs are combined. These are upper bounds for *any*
//!   equivariant estimator.
//! * **Empirical ranks** ([`empirical_profile`]): what the physical forward
//!   map actually resolves for a concrete set of directions,
//!   `dof_k = rank(M B_k)` where `B_k` spans irrep `V_k`.
//!
//! They disagree in both directions. With a single pair the direct-sum bound
//! allows one V₁ degree of freedom, while the forward map restricted to V₁ is
//! `ω ↦ s × ω`, which has rank 2:
//!
//! ```
//! use velgrad_core::identifiability::{empirical_profile, multiplicity_bound, BoundRule};
//! use velgrad_core::Vec3;
//!
//! let bound = multiplicity_bound(BoundRule::DirectSum, 1).unwrap();
//! let seen = empirical_profile(&[Vec3::new(0.6, 0.0, 0.8)], None).unwrap();
//! assert_eq!(bound.dof_v1, 1);
//! assert_eq!(seen.profile.dof_v1, 2);
//! // The isotropic part never reaches the observations.
//! assert_eq!(seen.profile.dof_v0, 0);
//! ```
//!
//! Note that `dof_k` counts how much of `V_k` is resolved *if the other irreps
//! are absent*. It does not mean the `V_k` component of a general tensor can
//! be recovered: at `N = 3` the kernel `{A : A s_i ∥ s_i}` contains
//! non-symmetric tensors whenever the directions are not mutually orthogonal,
//! so the min-norm estimate mixes V₁ and V₂ errors even though
//! `dof_v1 = 3`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::design_matrix;
use crate::svd::{default_tol, jacobi_svd};
use crate::tensor::{irrep_basis, IrrepDecomp, Tensor3, Vec3, IRREP_RANGES};

/// Dimensions of V₀, V₁, V₂.
pub const IRREP_DIMS: [usize; 3] = [1, 3, 5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRule {
    /// All pairwise combinations of the `2N` observed vectors: `C(2N, 2)` copies.
    Fundamental,
    /// Each pair contributes one copy of `V₀ ⊕ V₁ ⊕ V₂`: `N` copies.
    DirectSum,
    /// Published values for the reference equivariant network; no generating rule.
    ExpectedVgnReference,
}

impl BoundRule {
    pub const ALL: [BoundRule; 3] = [BoundRule::Fundamental, BoundRule::DirectSum, BoundRule::ExpectedVgnReference];

    pub fn name(self) -> &'static str {
        match self {
            BoundRule::Fundamental => "fundamental",
            BoundRule::DirectSum => "direct_sum",
            BoundRule::ExpectedVgnReference => "expected_vgn_reference",
        }
    }
}

impl fmt::Display for BoundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::UnknownRule(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rule", rename_all = "snake_case")]
pub enum ProfileSource {
    Bound(BoundRule),
    Empirical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentProfile {
    pub n_pairs: usize,
    pub dof_v0: usize,
    pub dof_v1: usize,
    pub dof_v2: usize,
    pub total: usize,
    pub source: ProfileSource,
}

impl IdentProfile {
    pub fn new(n_pairs: usize, dof: [usize; 3], source: ProfileSource) -> Self {
        Self {
            n_pairs,
            dof_v0: dof[0],
            dof_v1: dof[1],
            dof_v2: dof[2],
            total: dof.iter().sum(),
            source,
        }
    }

    pub fn dofs(&self) -> [usize; 3] {
        [self.dof_v0, self.dof_v1, self.dof_v2]
    }
}

/// `(V₀, V₁, V₂)` for N = 1..=4, the tabulated range of the reference network.
const EXPECTED_VGN: [[usize; 3]; 4] = [[1, 1, 1], [1, 3, 3], [1, 3, 4], [1, 3, 5]];

pub fn multiplicity_bound(rule: BoundRule, n: usize) -> Result<IdentProfile> {
    if n < 1 {
        return Err(Error::InvalidArgument("number of pairs must be at least 1".into()));
    }
    let copies = match rule {
        BoundRule::Fundamental => n * (2 * n - 1), // C(2n, 2)
        BoundRule::DirectSum => n,
        BoundRule::ExpectedVgnReference => {
            let dof = EXPECTED_VGN.get(n - 1).ok_or(Error::UntabulatedBound {
                rule: rule.name(),
                n,
                max: EXPECTED_VGN.len(),
            })?;
            return Ok(IdentProfile::new(n, *dof, ProfileSource::Bound(rule)));
        }
    };
    let dof = IRREP_DIMS.map(|d| copies.min(d));
    Ok(IdentProfile::new(n, dof, ProfileSource::Bound(rule)))
}

pub fn bound_table(rule: BoundRule, n_max: usize) -> Result<Vec<IdentProfile>> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    (1..=n_max).map(|n| multiplicity_bound(rule, n)).collect()
}

/// Writes `N,V0,V1,V2,Total` rows.
pub fn write_table_csv<W: Write>(profiles: &[IdentProfile], mut w: W) -> Result<()> {
    w.write_all(b"N,V0,V1,V2,Total\n")?;
    for p in profiles {
        writeln!(w, "{},{},{},{},{}", p.n_pairs, p.dof_v0, p.dof_v1, p.dof_v2, p.total)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalProfile {
    pub profile: IdentProfile,
    /// Rank of the full design matrix (no trace row).
    pub rank: usize,
    pub kernel_dim: usize,
    pub tol: f64,
}

fn basis_columns(k: usize) -> Vec<[f64; 9]> {
    IRREP_RANGES[k].clone().map(|i| irrep_basis(i).to_vec9()).collect()
}

/// Per-irrep ranks of the forward map for the given directions.
///
/// `tol: None` uses `9 σ₁ 1e-12` with `σ₁` the largest singular value of the
/// full design matrix; the same absolute tolerance is applied to every block.
pub fn empirical_profile(directions: &[Vec3], tol: Option<f64>) -> Result<EmpiricalProfile> {
    let m = design_matrix(directions)?;
    let svd = m.svd()?;
    let tol = tol.unwrap_or_else(|| default_tol(svd.sigma_max()));
    let rank = svd.rank(tol);
    let mut dof = [0; 3];
    for (k, d) in dof.iter_mut().enumerate() {
        let cols = basis_columns(k);
        let block = jacobi_svd(&m.mul_columns(&cols), cols.len())?;
        *d = block.rank(tol);
    }
    Ok(EmpiricalProfile {
        profile: IdentProfile::new(directions.len(), dof, ProfileSource::Empirical),
        rank,
        kernel_dim: 9 - rank,
        tol,
    })
}

/// Unit-norm kernel basis of the forward map (no trace row), in irrep form.
pub fn kernel_report(directions: &[Vec3], tol: Option<f64>) -> Result<Vec<IrrepDecomp>> {
    let m = design_matrix(directions)?;
    let svd = m.svd()?;
    let tol = tol.unwrap_or_else(|| svd.default_tol());
    Ok(svd
        .kernel(tol)
        .into_iter()
        .map(|k| Tensor3::from_vec9(&k.try_into().expect("9 columns")).decompose())
        .collect())
}

/// Largest norm of the projection of a kernel basis vector onto irrep `k`.
pub fn max_kernel_overlap(kernel: &[IrrepDecomp], k: usize) -> f64 {
    kernel.iter().map(|d| d.part_norms()[k]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::orientation_rate;
    use crate::observation::sample_sphere_uniform;

    #[test]
    fn direct_sum_rows() {
        let want = [[1, 1, 1, 3], [1, 2, 2, 5], [1, 3, 3, 7], [1, 3, 4, 8], [1, 3, 5, 9]];
        for (row, w) in bound_table(BoundRule::DirectSum, 5).unwrap().iter().zip(want) {
            assert_eq!([row.dof_v0, row.dof_v1, row.dof_v2, row.total], w);
        }
    }

    #[test]
    fn fundamental_rows() {
        let want = [[1, 1, 1, 3], [1, 3, 5, 9], [1, 3, 5, 9], [1, 3, 5, 9]];
        for (row, w) in bound_table(BoundRule::Fundamental, 4).unwrap().iter().zip(want) {
            assert_eq!([row.dof_v0, row.dof_v1, row.dof_v2, row.total], w);
        }
    }

    #[test]
    fn expected_reference_rows_and_range() {
        let rows = bound_table(BoundRule::ExpectedVgnReference, 4).unwrap();
        assert_eq!(rows[1].dofs(), [1, 3, 3]);
        assert_eq!(rows[2].dofs(), [1, 3, 4]);
        assert_eq!(rows[3].dofs(), [1, 3, 5]);
        assert!(matches!(
            multiplicity_bound(BoundRule::ExpectedVgnReference, 5),
            Err(Error::UntabulatedBound { n: 5, .. })
        ));
    }

    #[test]
    fn bounds_are_ordered_and_monotone() {
        for n in 1..=4 {
            let a = multiplicity_bound(BoundRule::Fundamental, n).unwrap().dofs();
            let c = multiplicity_bound(BoundRule::ExpectedVgnReference, n).unwrap().dofs();
            let b = multiplicity_bound(BoundRule::DirectSum, n).unwrap().dofs();
            for k in 0..3 {
                assert!(a[k] >= c[k] && c[k] >= b[k], "n={n} k={k}");
            }
        }
        for rule in [BoundRule::Fundamental, BoundRule::DirectSum] {
            let t = bound_table(rule, 20).unwrap();
            for w in t.windows(2) {
                for ((next, prev), dim) in w[1].dofs().into_iter().zip(w[0].dofs()).zip(IRREP_DIMS) {
                    assert!(next >= prev && next <= dim);
                }
            }
        }
    }

    #[test]
    fn rule_names_parse() {
        for r in BoundRule::ALL {
            assert_eq!(r.name().parse::<BoundRule>().unwrap(), r);
        }
        assert!(matches!("tensor".parse::<BoundRule>(), Err(Error::UnknownRule(_))));
    }

    #[test]
    fn table_csv_layout() {
        let mut buf = Vec::new();
        write_table_csv(&bound_table(BoundRule::DirectSum, 2).unwrap(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "N,V0,V1,V2,Total\n1,1,1,1,3\n2,1,2,2,5\n");
    }

    #[test]
    fn empirical_profiles_for_generic_directions() {
        let want_v1 = [2, 3, 3, 3, 3];
        let want_v2 = [2, 4, 5, 5, 5];
        let want_rank = [2, 4, 6, 8, 8];
        for seed in 0..50 {
            let dirs = sample_sphere_uniform(5, seed).unwrap();
            for n in 1..=5 {
                let p = empirical_profile(&dirs[..n], None).unwrap();
                assert_eq!(p.profile.dof_v0, 0);
                assert_eq!(p.profile.dof_v1, want_v1[n - 1], "seed {seed} n {n}");
                assert_eq!(p.profile.dof_v2, want_v2[n - 1], "seed {seed} n {n}");
                assert_eq!(p.rank, want_rank[n - 1]);
            }
        }
    }

    #[test]
    fn coplanar_directions_lose_rank() {
        let dirs: Vec<Vec3> = (0..4)
            .map(|k| {
                let t = 0.2 + 1.1 * k as f64;
                Vec3::new(t.cos(), 0.0, t.sin())
            })
            .collect();
        assert!(empirical_profile(&dirs, None).unwrap().rank < 8);
    }

    #[test]
    fn kernel_reports() {
        let dirs = sample_sphere_uniform(5, 77).unwrap();
        let k4 = kernel_report(&dirs[..4], None).unwrap();
        assert_eq!(k4.len(), 1);
        assert!((k4[0].v0.abs() - 1.0).abs() < 1e-12);
        assert_eq!(kernel_report(&dirs[..1], None).unwrap().len(), 7);
        let k3 = kernel_report(&dirs[..3], None).unwrap();
        assert_eq!(k3.len(), 3);
        for d in &k3 {
            let n: f64 = d.to_coeffs().iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_directions_are_invisible_to_the_forward_map() {
        let dirs = sample_sphere_uniform(3, 78).unwrap();
        let truth = Tensor3::from_vec9(&[0.2, -0.3, 0.5, 0.1, 0.4, -0.6, 0.7, 0.0, -0.6]);
        for d in kernel_report(&dirs, None).unwrap() {
            let perturbed = truth + d.recompose().scale(0.8);
            for &s in &dirs {
                let diff = orientation_rate(&perturbed, s).unwrap() - orientation_rate(&truth, s).unwrap();
                assert!(diff.norm() < 1e-12);
            }
        }
        // A direction outside the kernel does change some observation.
        let visible = Tensor3::skew(Vec3::new(0.0, 0.0, 1.0));
        let moved = dirs
            .iter()
            .map(|&s| (orientation_rate(&(truth + visible), s).unwrap() - orientation_rate(&truth, s).unwrap()).norm())
            .fold(0.0, f64::max);
        assert!(moved > 1e-3);
    }
}
