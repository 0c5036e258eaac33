//! 3-vectors, 3×3 tensors, rotations and the SO(3) irreducible split
//! `V₁ ⊗ V₁ = V₀ ⊕ V₁ ⊕ V₂`.
//!
//! # Irrep basis
//!
//! The nine orthonormal (Frobenius) basis tensors, in coefficient order:
//!
//! | index | tensor                      | irrep |
//! |-------|-----------------------------|-------|
//! | 0     | `I/√3`                      | V₀    |
//! | 1     | `(E₃₂ − E₂₃)/√2`            | V₁    |
//! | 2     | `(E₁₃ − E₃₁)/√2`            | V₁    |
//! | 3     | `(E₂₁ − E₁₂)/√2`            | V₁    |
//! | 4     | `(E₁₁ − E₂₂)/√2`            | V₂    |
//! | 5     | `(2E₃₃ − E₁₁ − E₂₂)/√6`     | V₂    |
//! | 6     | `(E₁₂ + E₂₁)/√2`            | V₂    |
//! | 7     | `(E₁₃ + E₃₁)/√2`            | V₂    |
//! | 8     | `(E₂₃ + E₃₂)/√2`            | V₂    |
//!
//! The V₁ tensors are arranged so that the antisymmetric part `W` of a tensor
//! satisfies `W s = ω × s`. [`IrrepDecomp::v1`] stores the axial vector `ω`
//! itself, so its orthonormal coefficients are `√2 ω` and
//! `‖A‖²_F = v0² + 2‖ω‖² + ‖v2‖²`.
//!
//! Tensors use `A_ij = ∂u_i/∂x_j`; `A s` is the ordinary matrix-vector product.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Tolerance used by [`Vec3::is_unit`].
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero or non-finite vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOL
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn outer(self, o: Vec3) -> Tensor3 {
        let a = self.to_array();
        let b = o.to_array();
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = a[i] * b[j];
            }
        }
        Tensor3::from_rows(t)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A real 3×3 tensor, stored row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    pub a: [[f64; 3]; 3],
}

impl Tensor3 {
    pub const ZERO: Tensor3 = Tensor3 { a: [[0.0; 3]; 3] };
    pub const IDENTITY: Tensor3 = Tensor3 {
        a: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub const fn from_rows(a: [[f64; 3]; 3]) -> Self {
        Self { a }
    }

    pub fn diag(d: [f64; 3]) -> Self {
        let mut t = Self::ZERO;
        for (i, v) in d.into_iter().enumerate() {
            t.a[i][i] = v;
        }
        t
    }

    /// Row-major `vec(A)`: index `3i + j` holds `A_ij`.
    pub fn to_vec9(&self) -> [f64; 9] {
        let mut v = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                v[3 * i + j] = self.a[i][j];
            }
        }
        v
    }

    pub fn from_vec9(v: &[f64; 9]) -> Self {
        let mut t = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.a[i][j] = v[3 * i + j];
            }
        }
        t
    }

    /// The cross-product matrix `[ω]×`, so that `skew(ω) s = ω × s`.
    pub fn skew(w: Vec3) -> Self {
        Self::from_rows([[0.0, -w.z, w.y], [w.z, 0.0, -w.x], [-w.y, w.x, 0.0]])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.a[i][j] = self.a[j][i];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        self.a[0][0] + self.a[1][1] + self.a[2][2]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_dot(self).sqrt()
    }

    pub fn frobenius_dot(&self, o: &Tensor3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.a[i][j] * o.a[i][j];
            }
        }
        s
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let r = |i: usize| self.a[i][0] * v.x + self.a[i][1] * v.y + self.a[i][2] * v.z;
        Vec3::new(r(0), r(1), r(2))
    }

    pub fn matmul(&self, o: &Tensor3) -> Tensor3 {
        let mut t = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.a[i][j] = (0..3).map(|k| self.a[i][k] * o.a[k][j]).sum();
            }
        }
        t
    }

    pub fn scale(&self, k: f64) -> Tensor3 {
        let mut t = *self;
        t.a.iter_mut().flatten().for_each(|x| *x *= k);
        t
    }

    pub fn symmetric_part(&self) -> Tensor3 {
        (*self + self.transpose()).scale(0.5)
    }

    pub fn antisymmetric_part(&self) -> Tensor3 {
        (*self - self.transpose()).scale(0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().flatten().all(|x| x.is_finite())
    }

    /// `|tr A| ≤ 1e-9 ‖A‖_F`.
    pub fn is_traceless(&self) -> bool {
        self.trace().abs() <= 1e-9 * self.frobenius_norm()
    }

    pub fn decompose(&self) -> IrrepDecomp {
        IrrepDecomp::of(self)
    }
}

impl Add for Tensor3 {
    type Output = Tensor3;
    fn add(mut self, o: Tensor3) -> Tensor3 {
        for i in 0..3 {
            for j in 0..3 {
                self.a[i][j] += o.a[i][j];
            }
        }
        self
    }
}

impl Sub for Tensor3 {
    type Output = Tensor3;
    fn sub(self, o: Tensor3) -> Tensor3 {
        self + o.scale(-1.0)
    }
}

/// Orthonormal basis tensor `k` (0..9) of the irrep basis tabulated in the module docs.
pub fn irrep_basis(k: usize) -> Tensor3 {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let h = 1.0 / SQRT2;
    let mut a = [[0.0; 3]; 3];
    match k {
        0 => {
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = 1.0 / s3;
            }
        }
        1 => {
            a[2][1] = h;
            a[1][2] = -h;
        }
        2 => {
            a[0][2] = h;
            a[2][0] = -h;
        }
        3 => {
            a[1][0] = h;
            a[0][1] = -h;
        }
        4 => {
            a[0][0] = h;
            a[1][1] = -h;
        }
        5 => {
            a[2][2] = 2.0 / s6;
            a[0][0] = -1.0 / s6;
            a[1][1] = -1.0 / s6;
        }
        6 => {
            a[0][1] = h;
            a[1][0] = h;
        }
        7 => {
            a[0][2] = h;
            a[2][0] = h;
        }
        8 => {
            a[1][2] = h;
            a[2][1] = h;
        }
        _ => panic!("irrep basis index {k} out of range"),
    }
    Tensor3::from_rows(a)
}

/// Coefficient index ranges of V₀, V₁, V₂ in the 9-coefficient ordering.
pub const IRREP_RANGES: [std::ops::Range<usize>; 3] = [0..1, 1..4, 4..9];

/// The `(V₀, V₁, V₂)` components of a tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IrrepDecomp {
    /// `tr(A)/√3`.
    pub v0: f64,
    /// Axial vector `ω` of the antisymmetric part, `W s = ω × s`.
    pub v1: Vec3,
    /// Coefficients of the symmetric-traceless part on basis tensors 4..9.
    pub v2: [f64; 5],
}

impl IrrepDecomp {
    pub fn of(a: &Tensor3) -> Self {
        let w = a.antisymmetric_part();
        let omega = Vec3::new(w.a[2][1], w.a[0][2], w.a[1][0]);
        let mut e = a.symmetric_part();
        let t3 = a.trace() / 3.0;
        for i in 0..3 {
            e.a[i][i] -= t3;
        }
        let mut v2 = [0.0; 5];
        for (k, c) in v2.iter_mut().enumerate() {
            *c = e.frobenius_dot(&irrep_basis(k + 4));
        }
        Self {
            v0: a.trace() / 3f64.sqrt(),
            v1: omega,
            v2,
        }
    }

    pub fn recompose(&self) -> Tensor3 {
        let mut t = Tensor3::IDENTITY.scale(self.v0 / 3f64.sqrt()) + Tensor3::skew(self.v1);
        for (k, c) in self.v2.iter().enumerate() {
            t = t + irrep_basis(k + 4).scale(*c);
        }
        t
    }

    /// Coefficients on the orthonormal basis: `[v0, √2 ω, v2]`.
    pub fn to_coeffs(&self) -> [f64; 9] {
        let mut c = [0.0; 9];
        c[0] = self.v0;
        c[1] = SQRT2 * self.v1.x;
        c[2] = SQRT2 * self.v1.y;
        c[3] = SQRT2 * self.v1.z;
        c[4..].copy_from_slice(&self.v2);
        c
    }

    pub fn from_coeffs(c: &[f64; 9]) -> Self {
        let mut v2 = [0.0; 5];
        v2.copy_from_slice(&c[4..]);
        Self {
            v0: c[0],
            v1: Vec3::new(c[1], c[2], c[3]) * (1.0 / SQRT2),
            v2,
        }
    }

    /// Frobenius norms of the three parts as tensors.
    pub fn part_norms(&self) -> [f64; 3] {
        [
            self.v0.abs(),
            SQRT2 * self.v1.norm(),
            self.v2.iter().map(|x| x * x).sum::<f64>().sqrt(),
        ]
    }

    /// The isotropic part `(tr A/3) I`.
    pub fn v0_tensor(&self) -> Tensor3 {
        Tensor3::IDENTITY.scale(self.v0 / 3f64.sqrt())
    }

    /// The antisymmetric (rotational) part `W`.
    pub fn v1_tensor(&self) -> Tensor3 {
        Tensor3::skew(self.v1)
    }

    /// The symmetric-traceless (strain) part.
    pub fn v2_tensor(&self) -> Tensor3 {
        IrrepDecomp {
            v0: 0.0,
            v1: Vec3::ZERO,
            v2: self.v2,
        }
        .recompose()
    }
}

/// A proper rotation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation(Tensor3);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation(Tensor3::IDENTITY);

    /// Accepts `r` if `RᵀR = I` and `det R = 1` within `1e-12`.
    pub fn from_matrix(r: Tensor3) -> Result<Self> {
        let rtr = r.transpose().matmul(&r) - Tensor3::IDENTITY;
        let err = rtr.a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
        if err > 1e-12 || (det(&r) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "matrix is not a proper rotation (orthogonality error {err:e}, det {})",
                det(&r)
            )));
        }
        Ok(Self(r))
    }

    /// Rodrigues' formula for a right-handed rotation by `angle` about `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let k = axis.normalized().ok_or(Error::ZeroAxis)?;
        let kx = Tensor3::skew(k);
        let kx2 = kx.matmul(&kx);
        Ok(Self(
            Tensor3::IDENTITY + kx.scale(angle.sin()) + kx2.scale(1.0 - angle.cos()),
        ))
    }

    /// Haar-uniform rotation from a uniform unit quaternion (Shoemake).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let tau = std::f64::consts::TAU;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        let w = a * (tau * u2).sin();
        let x = a * (tau * u2).cos();
        let y = b * (tau * u3).sin();
        let z = b * (tau * u3).cos();
        Self(Tensor3::from_rows([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ]))
    }

    pub fn matrix(&self) -> &Tensor3 {
        &self.0
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0.mul_vec(v)
    }

    /// `R A Rᵀ`.
    pub fn conjugate(&self, a: &Tensor3) -> Tensor3 {
        self.0.matmul(a).matmul(&self.0.transpose())
    }

    pub fn compose(&self, o: &Rotation) -> Rotation {
        Rotation(self.0.matmul(&o.0))
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }
}

/// `R A Rᵀ`.
pub fn rotate_tensor(r: &Rotation, a: &Tensor3) -> Tensor3 {
    r.conjugate(a)
}

pub fn det(t: &Tensor3) -> f64 {
    let a = &t.a;
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}
