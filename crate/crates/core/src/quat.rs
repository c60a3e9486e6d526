//! Quaternion arithmetic and the geometry of the sphere of imaginary units.
//!
//! Every quaternion `q` can be written as `x + y I` with `x, y` real, `y >= 0`
//! and `I` an imaginary unit (`I^2 = -1`). The set `L_I = R + R I` is a copy of
//! the complex plane inside `H`, called the slice of `I`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute tolerance on the discriminating component for "is real" and
/// "is on the unit sphere" tests.
pub const UNIT_TOL: f64 = 1e-12;

/// A quaternion `w + x i + y j + z k`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Quaternion::new(w, 0.0, 0.0, 0.0)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Imaginary part as a 3-vector.
    pub fn vector(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn imag(self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        // hypot-style scaling is not needed at the magnitudes used here
        self.norm_sqr().sqrt()
    }

    pub fn imag_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Euclidean inner product in `R^4`.
    pub fn dot(self, other: Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn is_real(self, tol: f64) -> bool {
        self.imag_norm() <= tol
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `q^{-1} = conj(q) / |q|^2`.
    pub fn inverse(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2.sqrt() <= UNIT_TOL {
            return Err(Error::ZeroDivisor(n2.sqrt()));
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    /// `p^{-1} q p`, the conjugate of `self` by `p`. Preserves real part and modulus.
    pub fn conjugated_by(self, p: Quaternion) -> Result<Self> {
        Ok(p.inverse()? * self * p)
    }

    /// Integer power by repeated squaring.
    pub fn powi(self, n: u32) -> Self {
        let mut acc = Quaternion::ONE;
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn dist(self, other: Quaternion) -> f64 {
        (self - other).norm()
    }
}

impl fmt::Debug for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i + {}j + {}k)", self.w, self.x, self.y, self.z)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.w, self.x, self.y, self.z)
    }
}

impl From<f64> for Quaternion {
    fn from(w: f64) -> Self {
        Quaternion::real(w)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a1, b1, c1, d1) = (self.w, self.x, self.y, self.z);
        let (a2, b2, c2, d2) = (o.w, o.x, o.y, o.z);
        Quaternion::new(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )
    }
}

impl MulAssign for Quaternion {
    fn mul_assign(&mut self, o: Quaternion) {
        *self = *self * o;
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, s: f64) -> Quaternion {
        self.scale(1.0 / s)
    }
}

impl std::iter::Sum for Quaternion {
    fn sum<It: Iterator<Item = Quaternion>>(iter: It) -> Quaternion {
        iter.fold(Quaternion::ZERO, |a, b| a + b)
    }
}

impl Serialize for Quaternion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = <[f64; 4]>::deserialize(d)?;
        Ok(Quaternion::from_array(a))
    }
}

/// An element of the sphere `S = { q : q^2 = -1 }`: purely imaginary with unit modulus.
#[derive(Clone, Copy, PartialEq)]
pub struct ImaginaryUnit(Quaternion);

impl ImaginaryUnit {
    pub const I: ImaginaryUnit = ImaginaryUnit(Quaternion::I);
    pub const J: ImaginaryUnit = ImaginaryUnit(Quaternion::J);
    pub const K: ImaginaryUnit = ImaginaryUnit(Quaternion::K);

    /// Validates that `q` lies on `S` within [`UNIT_TOL`] and renormalizes it.
    pub fn new(q: Quaternion) -> Result<Self> {
        let m = q.imag_norm();
        if q.w.abs() > UNIT_TOL || (m - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotImaginaryUnit { real: q.w, modulus: q.norm() });
        }
        Ok(ImaginaryUnit(q.imag().scale(1.0 / m)))
    }

    /// Normalizes the imaginary part of `q`; fails when it vanishes.
    pub fn from_direction(q: Quaternion) -> Result<Self> {
        let m = q.imag_norm();
        if m <= UNIT_TOL {
            return Err(Error::NotImaginaryUnit { real: q.w, modulus: m });
        }
        Ok(ImaginaryUnit(q.imag().scale(1.0 / m)))
    }

    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        Self::from_direction(Quaternion::new(0.0, v[0], v[1], v[2]))
    }

    pub fn quat(self) -> Quaternion {
        self.0
    }

    pub fn vector(self) -> [f64; 3] {
        self.0.vector()
    }

    pub fn opposite(self) -> Self {
        ImaginaryUnit(-self.0)
    }

    pub fn dot(self, other: ImaginaryUnit) -> f64 {
        self.0.dot(other.0)
    }

    /// `x + y I`.
    pub fn point(self, x: f64, y: f64) -> Quaternion {
        Quaternion::new(x, y * self.0.x, y * self.0.y, y * self.0.z)
    }

    /// Some unit orthogonal to `self`, chosen deterministically.
    pub fn orthogonal(self) -> ImaginaryUnit {
        let v = self.vector();
        // cross with the basis vector least aligned with v
        let e = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
            [1.0, 0.0, 0.0]
        } else if v[1].abs() <= v[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let c = cross(v, e);
        ImaginaryUnit::from_vector(c).expect("cross product of independent vectors")
    }
}

impl fmt::Debug for ImaginaryUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Unit{:?}", self.0)
    }
}

impl Serialize for ImaginaryUnit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ImaginaryUnit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let q = Quaternion::deserialize(d)?;
        ImaginaryUnit::new(q).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn vnorm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `q = x + y unit` with `y >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceCoordinates {
    pub x: f64,
    pub y: f64,
    pub unit: ImaginaryUnit,
}

impl SliceCoordinates {
    pub fn reassemble(&self) -> Quaternion {
        self.unit.point(self.x, self.y)
    }
}

/// Decomposes `q` as `x + y I` with `y >= 0`. Real points get the unit `i`.
pub fn slice_decompose(q: Quaternion) -> SliceCoordinates {
    let y = q.imag_norm();
    if y <= UNIT_TOL {
        return SliceCoordinates { x: q.w, y: 0.0, unit: ImaginaryUnit::I };
    }
    let unit = ImaginaryUnit(q.imag().scale(1.0 / y));
    SliceCoordinates { x: q.w, y, unit }
}

/// `cos θ + I sin θ`.
pub fn exp_on_slice(unit: ImaginaryUnit, theta: f64) -> Quaternion {
    unit.point(theta.cos(), theta.sin())
}

/// `n` quasi-uniform points of `S` (seed 0).
pub fn sample_unit_sphere(n: usize) -> Vec<ImaginaryUnit> {
    sample_unit_sphere_seeded(n, 0)
}

/// `n` quasi-uniform points of `S`.
///
/// The first points are `i, -i, j, -j, k, -k` (as many as fit); the rest follow a
/// Fibonacci spiral. A nonzero seed applies a random rotation to the spiral part,
/// leaving the six axis points in place.
pub fn sample_unit_sphere_seeded(n: usize, seed: u64) -> Vec<ImaginaryUnit> {
    const AXES: [ImaginaryUnit; 6] = [
        ImaginaryUnit(Quaternion::I),
        ImaginaryUnit(Quaternion::new(0.0, -1.0, 0.0, 0.0)),
        ImaginaryUnit(Quaternion::J),
        ImaginaryUnit(Quaternion::new(0.0, 0.0, -1.0, 0.0)),
        ImaginaryUnit(Quaternion::K),
        ImaginaryUnit(Quaternion::new(0.0, 0.0, 0.0, -1.0)),
    ];
    let mut out: Vec<ImaginaryUnit> = AXES.iter().copied().take(n).collect();
    if n <= 6 {
        return out;
    }
    let m = n - 6;
    let rotation = if seed == 0 {
        Quaternion::ONE
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = Quaternion::new(
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        );
        r.scale(1.0 / r.norm())
    };
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for k in 0..m {
        let z = 1.0 - (2.0 * k as f64 + 1.0) / m as f64;
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden * k as f64;
        let v = Quaternion::new(0.0, rho * phi.cos(), rho * phi.sin(), z);
        let v = rotation * v * rotation.conj();
        out.push(ImaginaryUnit::from_direction(v).expect("unit vector"));
    }
    out
}
