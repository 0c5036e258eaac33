//! Observation sets `{(s_i, ṡ_i)}`: direction sampling, the forward map applied
//! to a direction list, and Gaussian direction noise.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::csvfmt;
use crate::dynamics::orientation_rate;
use crate::error::{Error, Result};
use crate::rng;
use crate::svd::jacobi_svd;
use crate::tensor::{Rotation, Tensor3, Vec3, UNIT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    Fibonacci,
    UniformRandom,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionPool {
    pub directions: Vec<Vec3>,
    pub scheme: SamplingScheme,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationPair {
    pub s: Vec3,
    pub sdot: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub pairs: Vec<ObservationPair>,
    pub truth: Option<Tensor3>,
    pub noise_sigma: f64,
    pub seed: u64,
    pub scheme: Option<SamplingScheme>,
}

/// How `ṡ` is treated when directions are perturbed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Recompute `ṡ` from the truth at the perturbed direction (falls back to
    /// [`NoiseMode::KeepRate`] when no truth is recorded).
    #[default]
    RecomputeRate,
    /// Keep the clean `ṡ`; only the recorded direction is wrong.
    KeepRate,
}

/// `n` i.i.d. uniform directions (normalised 3-d Gaussians), deterministic per seed.
pub fn sample_sphere_uniform(n: usize, seed: u64) -> Result<Vec<Vec3>> {
    if n < 1 {
        return Err(Error::Empty("direction count must be at least 1"));
    }
    let mut r = rng::stream(seed, 0);
    Ok((0..n).map(|_| random_unit(&mut r)).collect())
}

pub(crate) fn random_unit<R: Rng + ?Sized>(r: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(StandardNormal.sample(r), StandardNormal.sample(r), StandardNormal.sample(r));
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// Fibonacci lattice: `z_i = 1 − (2i+1)/m`, azimuth advancing by the golden angle.
pub fn fibonacci_pool(m: usize) -> Result<DirectionPool> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("Fibonacci pool needs m >= 4, got {m}")));
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let directions = (0..m)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / m as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect();
    Ok(DirectionPool {
        directions,
        scheme: SamplingScheme::Fibonacci,
    })
}

impl DirectionPool {
    /// `n` distinct pool members chosen uniformly at random.
    pub fn choose<R: Rng + ?Sized>(&self, n: usize, r: &mut R) -> Result<Vec<Vec3>> {
        if n == 0 || n > self.directions.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot choose {n} directions from a pool of {}",
                self.directions.len()
            )));
        }
        Ok(rand::seq::index::sample(r, self.directions.len(), n)
            .into_iter()
            .map(|i| self.directions[i])
            .collect())
    }
}

fn check_directions(dirs: &[Vec3]) -> Result<()> {
    if dirs.is_empty() {
        return Err(Error::Empty("direction list"));
    }
    for (index, s) in dirs.iter().enumerate() {
        let norm = s.norm();
        if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
            return Err(Error::NonUnitDirection { index, norm });
        }
    }
    Ok(())
}

/// Applies the forward map at every direction.
pub fn observe(a: &Tensor3, directions: &[Vec3]) -> Result<ObservationSet> {
    check_directions(directions)?;
    let pairs = directions
        .iter()
        .map(|&s| Ok(ObservationPair { s, sdot: orientation_rate(a, s)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservationSet {
        pairs,
        truth: Some(*a),
        noise_sigma: 0.0,
        seed: 0,
        scheme: None,
    })
}

/// Perturbs each direction by i.i.d. `N(0, σ²)` per component and renormalises.
pub fn add_noise(obs: &ObservationSet, sigma: f64, seed: u64, mode: NoiseMode) -> Result<ObservationSet> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut out = obs.clone();
    out.noise_sigma = sigma;
    out.seed = seed;
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut r = rng::stream(seed, 0);
    for pair in &mut out.pairs {
        let n = Vec3::new(StandardNormal.sample(&mut r), StandardNormal.sample(&mut r), StandardNormal.sample(&mut r));
        let s = (pair.s + n * sigma).normalized().unwrap_or(pair.s);
        pair.s = s;
        if let (NoiseMode::RecomputeRate, Some(truth)) = (mode, &obs.truth) {
            pair.sdot = orientation_rate(truth, s)?;
        }
    }
    Ok(out)
}

/// Smallest singular value of the `n × 4` matrix with rows `(s_i, 1)`.
///
/// Zero iff all directions lie on one affine plane (in particular any great
/// circle, or any three directions).
pub fn coplanarity_defect(directions: &[Vec3]) -> f64 {
    let rows: Vec<Vec<f64>> = directions.iter().map(|s| vec![s.x, s.y, s.z, 1.0]).collect();
    match jacobi_svd(&rows, 4) {
        Ok(svd) => svd.sigma[3],
        Err(_) => 0.0,
    }
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn directions(&self) -> Vec<Vec3> {
        self.pairs.iter().map(|p| p.s).collect()
    }

    /// The group action on observations: every `s`, `ṡ` and the truth rotated by `R`.
    pub fn rotated(&self, r: &Rotation) -> ObservationSet {
        ObservationSet {
            pairs: self
                .pairs
                .iter()
                .map(|p| ObservationPair {
                    s: r.apply(p.s),
                    sdot: r.apply(p.sdot),
                })
                .collect(),
            truth: self.truth.map(|t| r.conjugate(&t)),
            ..self.clone()
        }
    }

    /// One row per pair: `sx,sy,sz,sdx,sdy,sdz`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"sx,sy,sz,sdx,sdy,sdz\n")?;
        for p in &self.pairs {
            let fields = [p.s.x, p.s.y, p.s.z, p.sdot.x, p.sdot.y, p.sdot.z].map(csvfmt::real);
            w.write_all(csvfmt::line(fields).as_bytes())?;
        }
        Ok(())
    }

    pub fn sidecar(&self) -> ObservationSidecar {
        ObservationSidecar {
            truth: self.truth.map(|t| t.to_vec9()),
            sigma: self.noise_sigma,
            seed: self.seed,
            scheme: self.scheme,
        }
    }

    pub fn write_sidecar<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.sidecar())?;
        Ok(())
    }

    pub fn read<R1: Read, R2: Read>(csv_data: R1, sidecar: R2) -> Result<ObservationSet> {
        let meta: ObservationSidecar = serde_json::from_reader(sidecar)?;
        let mut rdr = csv::Reader::from_reader(csv_data);
        let mut pairs = Vec::new();
        for rec in rdr.deserialize() {
            let [sx, sy, sz, dx, dy, dz]: [f64; 6] = rec?;
            pairs.push(ObservationPair {
                s: Vec3::new(sx, sy, sz),
                sdot: Vec3::new(dx, dy, dz),
            });
        }
        check_directions(&pairs.iter().map(|p| p.s).collect::<Vec<_>>())?;
        Ok(ObservationSet {
            pairs,
            truth: meta.truth.map(|v| Tensor3::from_vec9(&v)),
            noise_sigma: meta.sigma,
            seed: meta.seed,
            scheme: meta.scheme,
        })
    }
}

/// JSON metadata written next to an observation CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSidecar {
    /// Row-major truth tensor.
    pub truth: Option<[f64; 9]>,
    pub sigma: f64,
    pub seed: u64,
    pub scheme: Option<SamplingScheme>,
}

/// Reads a direction list from CSV with a header and three numeric columns.
/// Rows are normalised; a zero row is an error.
pub fn read_directions<R: Read>(data: R) -> Result<Vec<Vec3>> {
    let mut rdr = csv::Reader::from_reader(data);
    let mut out = Vec::new();
    for (index, rec) in rdr.deserialize().enumerate() {
        let [x, y, z]: [f64; 3] = rec?;
        let v = Vec3::new(x, y, z);
        out.push(v.normalized().ok_or(Error::NonUnitDirection { index, norm: v.norm() })?);
    }
    if out.is_empty() {
        return Err(Error::Empty("direction file has no rows"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> Vec<Vec3> {
        [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
            .into_iter()
            .map(|(x, y, z)| Vec3::new(x, y, z).normalized().unwrap())
            .collect()
    }

    #[test]
    fn uniform_sampling_is_deterministic_and_unit() {
        let a = sample_sphere_uniform(50, 3).unwrap();
        assert_eq!(a, sample_sphere_uniform(50, 3).unwrap());
        assert_ne!(a, sample_sphere_uniform(50, 4).unwrap());
        assert!(a.iter().all(|s| (s.norm() - 1.0).abs() <= 1e-12));
        assert!(sample_sphere_uniform(0, 3).is_err());
    }

    #[test]
    fn uniform_sampling_has_small_mean() {
        // Each component of the mean has std 1/sqrt(3n); 3-sigma on the norm is ~0.0095.
        let pts = sample_sphere_uniform(100_000, 5).unwrap();
        let mean = pts.iter().fold(Vec3::ZERO, |m, &p| m + p) * (1.0 / pts.len() as f64);
        assert!(mean.norm() <= 0.02, "mean norm {}", mean.norm());
    }

    #[test]
    fn fibonacci_pool_geometry() {
        let pool = fibonacci_pool(100).unwrap();
        assert_eq!(pool.directions.len(), 100);
        assert!(pool.directions.iter().all(|s| (s.norm() - 1.0).abs() <= 1e-12));
        let mut min_angle = f64::INFINITY;
        for (i, a) in pool.directions.iter().enumerate() {
            for b in &pool.directions[i + 1..] {
                min_angle = min_angle.min(a.dot(*b).clamp(-1.0, 1.0).acos());
            }
        }
        assert!(min_angle.to_degrees() > 10.0, "min angle {}", min_angle.to_degrees());

        let four = fibonacci_pool(4).unwrap().directions;
        let volume = (four[1] - four[0]).dot((four[2] - four[0]).cross(four[3] - four[0]));
        assert!(volume.abs() > 1e-3);
        assert!(coplanarity_defect(&four) > 1e-3);
        assert!(fibonacci_pool(3).is_err());
    }

    #[test]
    fn observe_kernel_and_errors() {
        let dirs = tetrahedron();
        let zero = observe(&Tensor3::ZERO, &dirs).unwrap();
        assert!(zero.pairs.iter().all(|p| p.sdot == Vec3::ZERO));
        let iso = observe(&Tensor3::IDENTITY.scale(2.0), &dirs).unwrap();
        assert!(iso.pairs.iter().all(|p| p.sdot.norm() < 1e-15));
        assert!(matches!(observe(&Tensor3::ZERO, &[]), Err(Error::Empty(_))));
        assert!(matches!(
            observe(&Tensor3::ZERO, &[Vec3::new(1.0, 1.0, 0.0)]),
            Err(Error::NonUnitDirection { index: 0, .. })
        ));
    }

    #[test]
    fn observe_commutes_with_rotation() {
        let mut r = rng::stream(31, 0);
        let dirs = sample_sphere_uniform(6, 1).unwrap();
        let a = Tensor3::from_vec9(&[0.3, -1.0, 0.2, 0.5, 0.1, -0.7, 1.2, 0.4, -0.4]);
        for _ in 0..100 {
            let rot = Rotation::random(&mut r);
            let lhs = observe(&rot.conjugate(&a), &dirs.iter().map(|&s| rot.apply(s)).collect::<Vec<_>>()).unwrap();
            let rhs = observe(&a, &dirs).unwrap().rotated(&rot);
            for (p, q) in lhs.pairs.iter().zip(&rhs.pairs) {
                assert!((p.s - q.s).norm() < 1e-12);
                assert!((p.sdot - q.sdot).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_noise_is_identity_and_noise_is_deterministic() {
        let a = Tensor3::skew(Vec3::new(0.1, 0.2, 0.3));
        let obs = observe(&a, &tetrahedron()).unwrap();
        let same = add_noise(&obs, 0.0, 9, NoiseMode::RecomputeRate).unwrap();
        assert_eq!(same.pairs, obs.pairs);
        let n1 = add_noise(&obs, 1e-2, 9, NoiseMode::RecomputeRate).unwrap();
        let n2 = add_noise(&obs, 1e-2, 9, NoiseMode::RecomputeRate).unwrap();
        assert_eq!(n1, n2);
        assert_eq!(n1.noise_sigma, 1e-2);
        for p in &n1.pairs {
            assert!((p.sdot - orientation_rate(&a, p.s).unwrap()).norm() < 1e-15);
        }
        let kept = add_noise(&obs, 1e-2, 9, NoiseMode::KeepRate).unwrap();
        for (p, q) in kept.pairs.iter().zip(&obs.pairs) {
            assert_eq!(p.sdot, q.sdot);
            assert_ne!(p.s, q.s);
        }
        assert!(add_noise(&obs, -1.0, 9, NoiseMode::KeepRate).is_err());
    }

    #[test]
    fn mean_noise_angle_matches_rayleigh_mean() {
        // Tangential noise is 2-d Gaussian with per-component σ: mean angle σ√(π/2).
        let sigma = 1e-3;
        let dirs = sample_sphere_uniform(10_000, 8).unwrap();
        let obs = observe(&Tensor3::ZERO, &dirs).unwrap();
        let noisy = add_noise(&obs, sigma, 17, NoiseMode::RecomputeRate).unwrap();
        let mean = noisy
            .pairs
            .iter()
            .zip(&obs.pairs)
            .map(|(p, q)| p.s.cross(q.s).norm().atan2(p.s.dot(q.s)))
            .sum::<f64>()
            / dirs.len() as f64;
        let want = sigma * (std::f64::consts::PI / 2.0).sqrt();
        assert!((mean / want - 1.0).abs() < 0.2, "mean {mean} want {want}");
    }

    #[test]
    fn coplanarity_defect_cases() {
        let circle: Vec<Vec3> = (0..4)
            .map(|k| {
                let t = 0.4 + 1.3 * k as f64;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        assert!(coplanarity_defect(&circle) <= 1e-12);
        // Rows (s,1) of the tetrahedron are orthogonal columns of norms √(4/3) and 2.
        let d = coplanarity_defect(&tetrahedron());
        assert!((d - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(d > 0.3);
        assert_eq!(coplanarity_defect(&tetrahedron()[..3]), 0.0);
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let a = Tensor3::from_vec9(&[0.1, 0.2, 0.3, -0.4, 0.5, 0.6, 0.7, -0.8, -0.6]);
        let mut obs = observe(&a, &tetrahedron()).unwrap();
        obs.seed = 42;
        obs.scheme = Some(SamplingScheme::Explicit);
        let mut csv_buf = Vec::new();
        let mut json_buf = Vec::new();
        obs.write_csv(&mut csv_buf).unwrap();
        obs.write_sidecar(&mut json_buf).unwrap();
        let text = String::from_utf8(csv_buf.clone()).unwrap();
        assert!(text.starts_with("sx,sy,sz,sdx,sdy,sdz\n"));
        let back = ObservationSet::read(&csv_buf[..], &json_buf[..]).unwrap();
        assert_eq!(back, obs);
    }

    #[test]
    fn direction_file_parsing() {
        let data = "sx,sy,sz\n2,0,0\n0,0,-3\n";
        let dirs = read_directions(data.as_bytes()).unwrap();
        assert_eq!(dirs, vec![Vec3::X, -Vec3::Z]);
        assert!(read_directions("sx,sy,sz\n0,0,0\n".as_bytes()).is_err());
        assert!(read_directions("sx,sy,sz\n".as_bytes()).is_err());
    }
}
