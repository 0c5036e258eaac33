//! Orientation dynamics of a small spherical particle in a linear flow:
//! `ṡ = s × (s × (A s)) = (sᵀ A s) s − A s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tensor3, Vec3, UNIT_TOL};

/// Default time step, `2⁻¹⁴`.
pub const DEFAULT_DT: f64 = 1.0 / 16384.0;

fn check_unit(s: Vec3, index: usize) -> Result<()> {
    let norm = s.norm();
    if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
        return Err(Error::NonUnitDirection { index, norm });
    }
    Ok(())
}

/// The same vector field evaluated off the sphere; the unit sphere is invariant under it.
fn rate_field(a: &Tensor3, s: Vec3) -> Vec3 {
    let as_ = a.mul_vec(s);
    s * s.dot(as_) - as_
}

/// `ṡ` for a unit orientation `s`.
pub fn orientation_rate(a: &Tensor3, s: Vec3) -> Result<Vec3> {
    check_unit(s, 0)?;
    Ok(rate_field(a, s))
}

/// One classical RK4 step followed by projection back onto the unit sphere.
pub fn rk4_step(a: &Tensor3, s: Vec3, dt: f64) -> Result<Vec3> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::NonPositiveStep(dt));
    }
    check_unit(s, 0)?;
    Ok(rk4_unchecked(a, s, dt))
}

fn rk4_unchecked(a: &Tensor3, s: Vec3, dt: f64) -> Vec3 {
    let k1 = rate_field(a, s);
    let k2 = rate_field(a, s + k1 * (0.5 * dt));
    let k3 = rate_field(a, s + k2 * (0.5 * dt));
    let k4 = rate_field(a, s + k3 * dt);
    let next = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    // A finite step from a unit vector cannot land on the origin for sane dt.
    next.normalized().unwrap_or(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec3>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Vec3 {
        *self.states.last().expect("trajectory is never empty")
    }
}

/// `n_steps` RK4 steps from `s0`, starting at `t = 0`.
pub fn integrate(a: &Tensor3, s0: Vec3, dt: f64, n_steps: usize) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::NoSteps);
    }
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::NonPositiveStep(dt));
    }
    check_unit(s0, 0)?;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(s0);
    let mut s = s0;
    for k in 1..=n_steps {
        s = rk4_unchecked(a, s, dt);
        times.push(k as f64 * dt);
        states.push(s);
    }
    Ok(Trajectory { times, states })
}

/// Central-difference rate at sample `i`, projected onto the tangent plane at `s_i`.
pub fn rate_from_trajectory(traj: &Trajectory, i: usize) -> Result<Vec3> {
    if traj.len() < 3 || i < 1 || i > traj.len() - 2 {
        return Err(Error::IndexOutOfRange {
            index: i,
            min: 1,
            max: traj.len().saturating_sub(2),
        });
    }
    let s = traj.states[i];
    let d = (traj.states[i + 1] - traj.states[i - 1]) * (1.0 / (traj.times[i + 1] - traj.times[i - 1]));
    Ok(d - s * s.dot(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::Rotation;
    use rand_distr::{Distribution, StandardNormal};

    fn random_vec<R: rand::Rng>(r: &mut R) -> Vec3 {
        Vec3::new(StandardNormal.sample(r), StandardNormal.sample(r), StandardNormal.sample(r))
    }

    fn random_tensor<R: rand::Rng>(r: &mut R) -> Tensor3 {
        let mut v = [0.0; 9];
        v.iter_mut().for_each(|x| *x = StandardNormal.sample(r));
        Tensor3::from_vec9(&v)
    }

    #[test]
    fn isotropic_tensor_produces_no_motion() {
        let s = Vec3::new(1.0, 2.0, 2.0).normalized().unwrap();
        let r = orientation_rate(&Tensor3::IDENTITY.scale(3.7), s).unwrap();
        assert!(r.norm() < 1e-15);
    }

    #[test]
    fn pure_rotation_gives_cross_product() {
        // (sᵀWs)s − Ws = −ω×s = s×ω, checked against the literal double cross product.
        let mut r = rng::stream(21, 0);
        for _ in 0..1000 {
            let w = random_vec(&mut r);
            let s = random_vec(&mut r).normalized().unwrap();
            let a = Tensor3::skew(w);
            let got = orientation_rate(&a, s).unwrap();
            let direct = s.cross(s.cross(a.mul_vec(s)));
            assert!((got - s.cross(w)).norm() < 1e-12);
            assert!((got - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn principal_strain_axis_is_fixed() {
        let a = Tensor3::diag([-0.5, -0.5, 1.0]);
        assert!(orientation_rate(&a, Vec3::X).unwrap().norm() < 1e-15);
    }

    #[test]
    fn non_unit_orientation_is_rejected() {
        let err = orientation_rate(&Tensor3::ZERO, Vec3::new(2.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::NonUnitDirection { .. }));
    }

    #[test]
    fn tangency_trace_invariance_and_equivariance() {
        let mut r = rng::stream(22, 0);
        for _ in 0..1000 {
            let a = random_tensor(&mut r);
            let s = random_vec(&mut r).normalized().unwrap();
            let rot = Rotation::random(&mut r);
            let c: f64 = StandardNormal.sample(&mut r);
            let sd = orientation_rate(&a, s).unwrap();
            let scale = 1.0 + a.frobenius_norm();
            assert!(s.dot(sd).abs() <= 1e-12 * scale);
            let shifted = orientation_rate(&(a + Tensor3::IDENTITY.scale(c)), s).unwrap();
            assert!((shifted - sd).norm() <= 1e-12 * (scale + c.abs()));
            let rotated = orientation_rate(&rot.conjugate(&a), rot.apply(s)).unwrap();
            assert!((rotated - rot.apply(sd)).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn zero_flow_step_is_identity() {
        let s = Vec3::new(0.0, 0.6, 0.8);
        assert_eq!(rk4_step(&Tensor3::ZERO, s, 0.1).unwrap(), s);
        assert!(matches!(rk4_step(&Tensor3::ZERO, s, 0.0), Err(Error::NonPositiveStep(_))));
        assert!(matches!(rk4_step(&Tensor3::ZERO, s, -1.0), Err(Error::NonPositiveStep(_))));
    }

    #[test]
    fn rotation_matches_closed_form() {
        // ṡ = s×ω = −ω×s: rotation about ω̂ by −|ω| t.
        let w = Vec3::new(0.3, -1.1, 0.7);
        let s0 = Vec3::new(1.0, 1.0, 0.0).normalized().unwrap();
        let traj = integrate(&Tensor3::skew(w), s0, DEFAULT_DT, 16384).unwrap();
        let exact = Rotation::from_axis_angle(w, -w.norm() * 1.0).unwrap().apply(s0);
        assert!((traj.last() - exact).norm() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence_for_generic_traceless_flow() {
        let mut r = rng::stream(23, 0);
        let mut a = random_tensor(&mut r);
        let t = a.trace() / 3.0;
        a = a - Tensor3::IDENTITY.scale(t);
        let s0 = random_vec(&mut r).normalized().unwrap();
        let reference = integrate(&a, s0, 1.0 / 4096.0, 4096).unwrap().last();
        let err = |n: usize| (integrate(&a, s0, 1.0 / n as f64, n).unwrap().last() - reference).norm();
        let ratio = err(16) / err(32);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn integrate_shape_and_errors() {
        let s0 = Vec3::Z;
        assert!(matches!(integrate(&Tensor3::ZERO, s0, 0.1, 0), Err(Error::NoSteps)));
        let a = Tensor3::skew(Vec3::X);
        let traj = integrate(&a, s0, 0.1, 1).unwrap();
        assert_eq!(traj.states, vec![s0, rk4_step(&a, s0, 0.1).unwrap()]);
        assert_eq!(traj.times, vec![0.0, 0.1]);
    }

    #[test]
    fn pure_strain_aligns_with_dominant_axis() {
        // The projected linear field is −A s + (sᵀAs) s, so the attractor is the
        // eigenvector of the most negative eigenvalue of A (here ẑ).
        let a = Tensor3::diag([1.0, 0.5, -1.5]);
        let s0 = Vec3::new(0.9, 0.3, 0.2).normalized().unwrap();
        let traj = integrate(&a, s0, 1.0 / 64.0, 64 * 20).unwrap();
        // Angle to the ±ẑ axis, sampled once per unit time.
        let angles: Vec<f64> = traj
            .states
            .iter()
            .step_by(64)
            .map(|s| s.z.abs().min(1.0).acos())
            .collect();
        assert!(angles.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(*angles.last().unwrap() < 1e-6);
    }

    #[test]
    fn long_rotation_stays_on_sphere() {
        let mut a = Tensor3::skew(Vec3::new(2.0, -1.0, 3.0));
        a.a[0][1] += 0.1;
        let traj = integrate(&a, Vec3::X, 1e-3, 10_000).unwrap();
        assert!(traj.states.iter().all(|s| (s.norm() - 1.0).abs() <= 1e-9));
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn finite_difference_rate() {
        let w = Vec3::new(0.0, 0.0, 2.0);
        let a = Tensor3::skew(w);
        let dt = 1e-3;
        let traj = integrate(&a, Vec3::new(0.6, 0.0, 0.8), dt, 4).unwrap();
        let est = rate_from_trajectory(&traj, 2).unwrap();
        let exact = orientation_rate(&a, traj.states[2]).unwrap();
        assert!((est - exact).norm() < 10.0 * dt * dt * w.norm().powi(3));
        assert!(est.dot(traj.states[2]).abs() < 1e-15);

        let still = integrate(&Tensor3::ZERO, Vec3::Y, dt, 3).unwrap();
        assert_eq!(rate_from_trajectory(&still, 1).unwrap(), Vec3::ZERO);
        assert!(rate_from_trajectory(&still, 0).is_err());
        assert!(rate_from_trajectory(&still, 3).is_err());
    }
}
