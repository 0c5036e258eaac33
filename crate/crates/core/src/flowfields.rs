//! Sources of velocity-gradient tensors.
//!
//! [`random_ensemble`] draws tensors with independent per-irrep amplitudes.
//! The `scf_*` functions evaluate the Stokes flow between two concentric
//! spheres rotating about `ẑ`: `u = ω(r) ẑ × x` with `ω(r) = a + b/r³`.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{IrrepDecomp, Tensor3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub amp_v0: f64,
    pub amp_v1: f64,
    pub amp_v2: f64,
    pub count: usize,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            amp_v0: 0.0,
            amp_v1: 1.0,
            amp_v2: 1.0,
            count: 1,
            seed: 0,
        }
    }
}

/// Member `i` of the ensemble; depends only on `(spec.seed, i)` and the amplitudes.
pub fn ensemble_member(spec: &EnsembleSpec, i: usize) -> Tensor3 {
    let mut r = rng::stream(spec.seed, i as u64);
    let mut c = [0.0; 9];
    for (k, x) in c.iter_mut().enumerate() {
        let z: f64 = StandardNormal.sample(&mut r);
        let amp = match k {
            0 => spec.amp_v0,
            1..=3 => spec.amp_v1,
            _ => spec.amp_v2,
        };
        *x = amp * z;
    }
    IrrepDecomp::from_coeffs(&c).recompose()
}

/// Each orthonormal irrep coefficient is `amp_k · N(0,1)`.
pub fn random_ensemble(spec: &EnsembleSpec) -> Result<Vec<Tensor3>> {
    if spec.count < 1 {
        return Err(Error::InvalidArgument("ensemble count must be at least 1".into()));
    }
    let amps = [spec.amp_v0, spec.amp_v1, spec.amp_v2];
    if amps.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidArgument(format!("amplitudes must be finite and >= 0, got {amps:?}")));
    }
    Ok((0..spec.count).map(|i| ensemble_member(spec, i)).collect())
}

/// Concentric spheres rotating about `ẑ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScfParams {
    pub r_in: f64,
    pub r_out: f64,
    pub omega_in: f64,
    pub omega_out: f64,
}

impl Default for ScfParams {
    fn default() -> Self {
        Self {
            r_in: 0.5,
            r_out: 1.0,
            omega_in: 1.0,
            omega_out: 0.0,
        }
    }
}

impl ScfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_in > 0.0 && self.r_in < self.r_out && self.r_out.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < r_in < r_out, got r_in={} r_out={}",
                self.r_in, self.r_out
            )));
        }
        if !self.omega_in.is_finite() || !self.omega_out.is_finite() {
            return Err(Error::InvalidArgument("angular velocities must be finite".into()));
        }
        Ok(())
    }

    /// `(a, b)` in `ω(r) = a + b/r³`.
    pub fn coefficients(&self) -> (f64, f64) {
        let (ri3, ro3) = (self.r_in.powi(3), self.r_out.powi(3));
        let d = ro3 - ri3;
        let a = (self.omega_out * ro3 - self.omega_in * ri3) / d;
        let b = (self.omega_in - self.omega_out) * ri3 * ro3 / d;
        (a, b)
    }

    pub fn angular_velocity(&self, r: f64) -> f64 {
        let (a, b) = self.coefficients();
        a + b / r.powi(3)
    }

    fn check_gap(&self, x: Vec3) -> Result<f64> {
        self.validate()?;
        let r = x.norm();
        if !(r >= self.r_in && r <= self.r_out) {
            return Err(Error::OutsideGap {
                radius: r,
                r_in: self.r_in,
                r_out: self.r_out,
            });
        }
        Ok(r)
    }
}

pub fn scf_velocity(p: &ScfParams, x: Vec3) -> Result<Vec3> {
    let r = p.check_gap(x)?;
    Ok(Vec3::Z.cross(x) * p.angular_velocity(r))
}

/// `∂u_i/∂x_j = ω [ẑ]× + (ẑ × x) ⊗ (ω′(r) x / r)`.
pub fn scf_gradient(p: &ScfParams, x: Vec3) -> Result<Tensor3> {
    let r = p.check_gap(x)?;
    let (_, b) = p.coefficients();
    let omega = p.angular_velocity(r);
    let d_omega = -3.0 * b / r.powi(4);
    Ok(Tensor3::skew(Vec3::Z).scale(omega) + Vec3::Z.cross(x).outer(x * (d_omega / r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    pub position: Vec3,
    pub gradient: Tensor3,
}

/// Uniform `nx × ny` grid over `[−r_out, r_out]²` in the plane `z = z0`, keeping
/// only points inside the gap. Rows run over `y`, then `x` within a row.
pub fn plane_grid(p: &ScfParams, z0: f64, nx: usize, ny: usize) -> Result<Vec<GridSample>> {
    p.validate()?;
    if nx < 1 || ny < 1 {
        return Err(Error::InvalidArgument("grid needs at least one point per axis".into()));
    }
    let axis = |n: usize, k: usize| {
        if n == 1 {
            0.0
        } else {
            // Integer numerator keeps the grid exactly symmetric about 0.
            p.r_out * (2 * k as i64 - (n as i64 - 1)) as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let x = Vec3::new(axis(nx, i), axis(ny, j), z0);
            let r = x.norm();
            if r >= p.r_in && r <= p.r_out {
                out.push(GridSample {
                    position: x,
                    gradient: scf_gradient(p, x)?,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("grid does not intersect the spherical gap"));
    }
    Ok(out)
}

/// `x,y,z,a11,…,a33` per row.
pub fn write_grid_csv<W: Write>(samples: &[GridSample], mut w: W) -> Result<()> {
    w.write_all(b"x,y,z,a11,a12,a13,a21,a22,a23,a31,a32,a33\n")?;
    for s in samples {
        let fields = s
            .position
            .to_array()
            .into_iter()
            .chain(s.gradient.to_vec9())
            .map(csvfmt::real);
        w.write_all(csvfmt::line(fields).as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rotation;

    #[test]
    fn ensemble_amplitude_controls() {
        let base = EnsembleSpec {
            count: 200,
            seed: 3,
            ..Default::default()
        };
        for t in random_ensemble(&base).unwrap() {
            assert!(t.trace().abs() <= 1e-12 * t.frobenius_norm().max(1.0));
        }
        let rot_only = EnsembleSpec {
            amp_v2: 0.0,
            ..base
        };
        for t in random_ensemble(&rot_only).unwrap() {
            assert_eq!(t, t.antisymmetric_part());
        }
        assert!(random_ensemble(&EnsembleSpec { count: 0, ..base }).is_err());
        assert!(random_ensemble(&EnsembleSpec { amp_v1: -1.0, ..base }).is_err());
        assert_eq!(random_ensemble(&base).unwrap(), random_ensemble(&base).unwrap());
    }

    #[test]
    fn ensemble_second_moments() {
        let spec = EnsembleSpec {
            amp_v0: 0.5,
            amp_v1: 2.0,
            amp_v2: 1.5,
            count: 100_000,
            seed: 9,
        };
        let mut sums = [0.0; 9];
        for t in random_ensemble(&spec).unwrap() {
            for (s, c) in sums.iter_mut().zip(t.decompose().to_coeffs()) {
                *s += c * c;
            }
        }
        for (k, s) in sums.iter().enumerate() {
            let amp = [0.5, 2.0, 2.0, 2.0, 1.5, 1.5, 1.5, 1.5, 1.5][k];
            let m = s / spec.count as f64;
            assert!((m / (amp * amp) - 1.0).abs() < 0.05, "coefficient {k}: {m}");
        }
    }

    #[test]
    fn boundary_conditions() {
        let p = ScfParams::default();
        let on_inner = Vec3::new(0.3, 0.4, 0.0);
        let u = scf_velocity(&p, on_inner).unwrap();
        assert!((u - Vec3::Z.cross(on_inner) * p.omega_in).norm() < 1e-15);
        let on_outer = Vec3::new(0.0, 0.6, 0.8);
        assert!(scf_velocity(&p, on_outer).unwrap().norm() < 1e-15);
        let rigid = ScfParams {
            omega_out: 1.0,
            ..p
        };
        let (a, b) = rigid.coefficients();
        assert!((a - 1.0).abs() < 1e-15 && b.abs() < 1e-15);
        let g = scf_gradient(&rigid, Vec3::new(0.7, 0.0, 0.1)).unwrap();
        assert!(g.decompose().v2.iter().all(|c| c.abs() < 1e-15));
        assert!(matches!(scf_velocity(&p, Vec3::new(0.1, 0.0, 0.0)), Err(Error::OutsideGap { .. })));
        assert!(scf_velocity(&ScfParams { r_in: 1.0, ..p }, on_outer).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = ScfParams::default();
        for x in [Vec3::new(0.6, 0.1, 0.2), Vec3::new(-0.3, 0.5, -0.4), Vec3::new(0.0, -0.8, 0.1)] {
            let g = scf_gradient(&p, x).unwrap();
            let h = 1e-6 * x.norm();
            let mut fd = Tensor3::ZERO;
            for (j, e) in [Vec3::X, Vec3::Y, Vec3::Z].into_iter().enumerate() {
                let d = (scf_velocity(&p, x + e * h).unwrap() - scf_velocity(&p, x - e * h).unwrap()) * (0.5 / h);
                for i in 0..3 {
                    fd.a[i][j] = d[i];
                }
            }
            assert!((fd - g).frobenius_norm() <= 1e-6 * g.frobenius_norm());
            assert!(g.trace().abs() < 1e-12);
        }
    }

    #[test]
    fn grid_is_axisymmetric() {
        let p = ScfParams::default();
        let grid = plane_grid(&p, 0.0, 21, 21).unwrap();
        assert!(grid.len() <= 21 * 21);
        // A quarter turn maps the symmetric grid onto itself.
        let rot = Rotation::from_axis_angle(Vec3::Z, std::f64::consts::FRAC_PI_2).unwrap();
        for s in &grid {
            let moved = rot.apply(s.position);
            let partner = grid
                .iter()
                .find(|t| (t.position - moved).norm() < 1e-12)
                .expect("rotated grid point present");
            assert!((partner.gradient - rot.conjugate(&s.gradient)).frobenius_norm() < 1e-10);
            assert!(s.gradient.trace().abs() <= 1e-12);
        }
    }

    #[test]
    fn gradient_equivariant_about_z() {
        let p = ScfParams::default();
        let x = Vec3::new(0.5, 0.3, 0.2);
        for angle in [0.3, 1.7, -2.2] {
            let rot = Rotation::from_axis_angle(Vec3::Z, angle).unwrap();
            let lhs = scf_gradient(&p, rot.apply(x)).unwrap();
            let rhs = rot.conjugate(&scf_gradient(&p, x).unwrap());
            assert!((lhs - rhs).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn empty_grid_intersection() {
        assert!(matches!(
            plane_grid(&ScfParams::default(), 2.0, 10, 10),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn grid_csv_header() {
        let grid = plane_grid(&ScfParams::default(), 0.0, 3, 3).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), grid.len() + 1);
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 12);
    }
}
