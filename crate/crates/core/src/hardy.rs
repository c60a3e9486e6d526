//! Integral means, Hardy norms, the 3-sphere mean, boundary traces and their
//! Poisson/Cauchy reconstructions.
//!
//! All circle integrals use the composite trapezoid rule on `[-pi, pi)`, which is
//! spectrally accurate for smooth periodic integrands and exact for `|f|^2` of a
//! polynomial once the node count exceeds its degree.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quat::{exp_on_slice, sample_unit_sphere_seeded, vnorm, ImaginaryUnit, Quaternion};
use crate::series::RegularSeries;
use crate::slice::{sphere_affine, SphereAffineForm};

/// Relative tolerance of the adaptive trapezoid doubling.
const MEAN_TOL: f64 = 1e-14;
/// Upper bound on the adaptive node count.
const MAX_NODES: usize = 1 << 15;

/// Exponent of a Hardy space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p > 0.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidInput(format!("exponent must be in (0, inf], got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `q` with `1/p + 1/q = 1`, for `p >= 1`.
    pub fn conjugate(self) -> Result<Exponent> {
        match self {
            Exponent::Infinity => Ok(Exponent::Finite(1.0)),
            Exponent::Finite(1.0) => Ok(Exponent::Infinity),
            Exponent::Finite(p) if p > 1.0 => Ok(Exponent::Finite(p / (p - 1.0))),
            Exponent::Finite(p) => Err(Error::InvalidInput(format!("no conjugate exponent for p = {p} < 1"))),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            t => {
                let p: f64 = t.parse().map_err(|_| Error::InvalidInput(format!("bad exponent {s:?}")))?;
                Exponent::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Node counts and radii for all quadratures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Trapezoid nodes on the circle (a lower bound; the means refine adaptively).
    pub circle_nodes: usize,
    /// Increasing radii in `[0, 1)` at which the means are tabulated.
    pub r_grid: Vec<f64>,
    /// Units sampled for the supremum over `S`.
    pub unit_samples: usize,
    /// Seed for the sampled units; 0 gives the unrotated layout.
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { circle_nodes: 512, r_grid: default_r_grid(), unit_samples: 128, seed: 0 }
    }
}

/// `r_k = 1 - 10^{-3k/19}`, `k = 0..19`: 20 radii from 0 to 0.999, denser near 1.
pub fn default_r_grid() -> Vec<f64> {
    (0..20).map(|k| 1.0 - 10f64.powf(-3.0 * k as f64 / 19.0)).collect()
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r_grid.is_empty() {
            return Err(Error::InvalidInput("r_grid is empty".into()));
        }
        if self.r_grid.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::InvalidInput("r_grid values must lie in [0, 1)".into()));
        }
        if self.r_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("r_grid must be strictly increasing".into()));
        }
        if self.circle_nodes == 0 || self.unit_samples == 0 {
            return Err(Error::InvalidInput("node counts must be positive".into()));
        }
        Ok(())
    }

    fn nodes_for(&self, f: &RegularSeries) -> usize {
        self.circle_nodes.max(2 * f.degree() + 1)
    }
}

/// `theta_k = -pi + 2 pi k / n`. Node `n - k` is the mirror `-theta_k`.
pub fn circle_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect()
}

/// Mean of a `2 pi`-periodic function by trapezoid doubling from `n0` nodes.
/// Returns the mean and the node count used.
pub fn periodic_mean(g: impl Fn(f64) -> f64 + Sync, n0: usize) -> (f64, usize) {
    let mut n = n0.max(1);
    let mut sum: f64 = circle_angles(n).par_iter().map(|&t| g(t)).sum();
    let mut mean = sum / n as f64;
    while n < MAX_NODES {
        let h = PI / n as f64;
        let extra: f64 = circle_angles(n).par_iter().map(|&t| g(t + h)).sum();
        sum += extra;
        n *= 2;
        let next = sum / n as f64;
        let done = (next - mean).abs() <= MEAN_TOL * next.abs().max(f64::MIN_POSITIVE);
        mean = next;
        if done {
            break;
        }
    }
    (mean, n)
}

/// Maximum of a periodic function: the best of `n` nodes refined by golden-section search.
fn periodic_max(g: impl Fn(f64) -> f64 + Sync, n: usize) -> (f64, f64) {
    let angles = circle_angles(n);
    let vals: Vec<f64> = angles.par_iter().map(|&t| g(t)).collect();
    let h = 2.0 * PI / n as f64;
    // refine every discrete local maximum within a tenth of the best value
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best = (top, angles[vals.iter().position(|v| *v == top).unwrap()]);
    for k in 0..n {
        let (l, r) = (vals[(k + n - 1) % n], vals[(k + 1) % n]);
        if vals[k] >= l && vals[k] >= r && vals[k] >= top - 0.1 * top.abs() - 1e-300 {
            let (t, v) = golden_max(&g, angles[k] - h, angles[k] + h);
            if v > best.0 {
                best = (v, t);
            }
        }
    }
    best
}

fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    let t = 0.5 * (a + b);
    (t, g(t))
}

/// `M_p(f_I, r)`: the `L^p` mean of `theta -> f(r e^{I theta})`. `r = 1` uses the series itself.
pub fn circle_mean(f: &RegularSeries, unit: ImaginaryUnit, r: f64, p: Exponent, spec: &QuadratureSpec) -> f64 {
    let n0 = spec.nodes_for(f);
    let at = |t: f64| f.eval(exp_on_slice(unit, t).scale(r)).norm();
    match p {
        Exponent::Finite(p) => periodic_mean(|t| at(t).powf(p), n0).0.powf(1.0 / p),
        Exponent::Infinity => periodic_max(at, n0.max(64)).0,
    }
}

/// Result of estimating a slice norm `||f_I||_p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceNormEstimate {
    pub unit: ImaginaryUnit,
    pub p: Exponent,
    /// Boundary mean of the series.
    pub value: f64,
    /// Means at the radii of the quadrature grid.
    pub grid_means: Vec<f64>,
    /// The grid means never decrease by more than `1e-12` relative.
    pub monotone: bool,
    /// The means grow without a plateau or the omitted tail is not negligible.
    pub divergent: bool,
    pub truncation_error_bound: f64,
}

/// Divergence heuristic on the tabulated means of a truncated series.
fn looks_divergent(f: &RegularSeries, means: &[f64], r_max: f64) -> bool {
    if !f.is_truncated() {
        return false;
    }
    let m = means.last().copied().unwrap_or(0.0);
    let tail = f.truncation_error(r_max);
    if !(tail <= 1e-3 * m.max(f64::MIN_POSITIVE)) {
        return true;
    }
    if means.len() < 3 {
        return false;
    }
    let k = means.len();
    let (m1, m2, m3) = (means[k - 3], means[k - 2], means[k - 1]);
    let growing = m3 > (1.0 + 1e-3) * m1;
    // converging means approach their limit roughly geometrically along the grid
    let (d1, d2) = (m2 - m1, m3 - m2);
    growing && d1 > 0.0 && d2 >= 0.85 * d1
}

fn is_monotone(means: &[f64]) -> bool {
    means.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1e-300))
}

/// `||f_I||_p = lim_{r -> 1} M_p(f_I, r)`, with the means on the grid as diagnostics.
pub fn slice_norm_estimate(
    f: &RegularSeries,
    unit: ImaginaryUnit,
    p: Exponent,
    spec: &QuadratureSpec,
) -> SliceNormEstimate {
    let grid_means: Vec<f64> = spec.r_grid.iter().map(|&r| circle_mean(f, unit, r, p, spec)).collect();
    let value = circle_mean(f, unit, 1.0, p, spec);
    let r_max = spec.r_grid.last().copied().unwrap_or(0.0);
    SliceNormEstimate {
        unit,
        p,
        value,
        monotone: is_monotone(&grid_means),
        divergent: looks_divergent(f, &grid_means, r_max),
        grid_means,
        truncation_error_bound: f.truncation_error(1.0),
    }
}

pub fn slice_norm(f: &RegularSeries, unit: ImaginaryUnit, p: Exponent, spec: &QuadratureSpec) -> f64 {
    slice_norm_estimate(f, unit, p, spec).value
}

/// Estimate of `||f||_p = sup_I ||f_I||_p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardyNormEstimate {
    pub p: Exponent,
    pub value: f64,
    pub achieved_unit: ImaginaryUnit,
    pub r_used: f64,
    pub truncation_error_bound: f64,
    pub divergent: bool,
    pub monotone: bool,
    /// Means along the achieving slice at the grid radii.
    pub grid_means: Vec<f64>,
}

/// Per-node data of the boundary circles: `|f(e^{J theta})|^2 = a_k + <J, v_k>`.
struct AffineCircle {
    a: Vec<f64>,
    v: Vec<[f64; 3]>,
}

impl AffineCircle {
    fn new(f: &RegularSeries, r: f64, n: usize) -> Self {
        let angles = circle_angles(n);
        let forms: Vec<SphereAffineForm> =
            angles.par_iter().map(|&t| sphere_affine(f, r * t.cos(), r * t.sin())).collect();
        AffineCircle { a: forms.iter().map(|s| s.mean_square()).collect(), v: forms.iter().map(|s| s.tilt()).collect() }
    }

    fn power_mean(&self, unit: [f64; 3], half_p: f64) -> f64 {
        let n = self.a.len();
        let s: f64 = (0..n).map(|k| (self.a[k] + dot3(unit, self.v[k])).max(0.0).powf(half_p)).sum();
        s / n as f64
    }

    /// Gradient of `power_mean` with respect to the unit, projected to the tangent plane.
    fn tangent_gradient(&self, unit: [f64; 3], half_p: f64) -> [f64; 3] {
        let mut g = [0.0; 3];
        for k in 0..self.a.len() {
            let base = (self.a[k] + dot3(unit, self.v[k])).max(1e-300);
            let w = half_p * base.powf(half_p - 1.0);
            for (gi, vi) in g.iter_mut().zip(self.v[k]) {
                *gi += w * vi;
            }
        }
        let radial = dot3(g, unit);
        [g[0] - radial * unit[0], g[1] - radial * unit[1], g[2] - radial * unit[2]]
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Node count at which the boundary means on the coordinate slices have converged.
fn converged_nodes(f: &RegularSeries, p: f64, spec: &QuadratureSpec) -> usize {
    [ImaginaryUnit::I, ImaginaryUnit::J, ImaginaryUnit::K]
        .iter()
        .map(|&u| {
            let n0 = spec.nodes_for(f);
            periodic_mean(|t| f.eval(exp_on_slice(u, t)).norm().powf(p), n0).1
        })
        .max()
        .unwrap()
}

/// Maximizes `F(J) = mean_k (a_k + <J, v_k>)^{p/2}` over `S`.
fn sup_over_units(circle: &AffineCircle, p: f64, spec: &QuadratureSpec) -> (f64, ImaginaryUnit) {
    let half_p = 0.5 * p;
    let mut candidates = sample_unit_sphere_seeded(spec.unit_samples.max(6), spec.seed);
    if candidates.len() < 6 {
        candidates.extend(sample_unit_sphere_seeded(6, 0));
    }
    let mut scored: Vec<(f64, ImaginaryUnit)> =
        candidates.par_iter().map(|&u| (circle.power_mean(u.vector(), half_p), u)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0];
    for &(val, u) in scored.iter().take(4) {
        let (v, w) = ascend(circle, u, val, half_p);
        if v > best.0 {
            best = (v, w);
        }
    }
    (best.0.powf(1.0 / p), best.1)
}

/// Projected gradient ascent with backtracking.
fn ascend(circle: &AffineCircle, start: ImaginaryUnit, start_val: f64, half_p: f64) -> (f64, ImaginaryUnit) {
    let (mut u, mut val) = (start.vector(), start_val);
    let mut step = 1.0;
    for _ in 0..200 {
        let g = circle.tangent_gradient(u, half_p);
        let gn = vnorm(g);
        if gn <= 1e-15 * val.abs().max(1e-300) {
            break;
        }
        let mut improved = false;
        while step > 1e-12 {
            let t = [u[0] + step * g[0] / gn, u[1] + step * g[1] / gn, u[2] + step * g[2] / gn];
            let m = vnorm(t);
            let cand = [t[0] / m, t[1] / m, t[2] / m];
            let cv = circle.power_mean(cand, half_p);
            if cv > val {
                u = cand;
                val = cv;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (val, ImaginaryUnit::from_vector(u).unwrap_or(start))
}

/// Maximum of `|f|` over the closed ball, attained on the boundary sphere.
pub fn sup_norm(f: &RegularSeries, spec: &QuadratureSpec) -> (f64, ImaginaryUnit) {
    let g = |t: f64| sphere_affine(f, t.cos(), t.sin()).extremes().max;
    let (max, theta) = periodic_max(g, spec.nodes_for(f).max(256));
    let e = sphere_affine(f, theta.cos(), theta.sin()).extremes();
    // e^{J theta} with theta < 0 is e^{-J |theta|}
    let unit = if theta.sin() >= 0.0 { e.argmax } else { e.argmax.opposite() };
    (max, unit)
}

/// `||f||_p` for `p` in `(0, inf]`.
///
/// Finite `p`: the boundary means `F(J)` are computed for sampled units from the
/// affine structure on each sphere and the best ones are refined by gradient
/// ascent. For `p = 2` the supremum is available in closed form. `p = inf`: the
/// closed-form sphere maximum along the boundary.
pub fn hardy_norm(f: &RegularSeries, p: Exponent, spec: &QuadratureSpec) -> HardyNormEstimate {
    let (value, unit) = match p {
        Exponent::Infinity => sup_norm(f, spec),
        Exponent::Finite(pv) => {
            let n = converged_nodes(f, pv, spec);
            let circle = AffineCircle::new(f, 1.0, n);
            if pv == 2.0 {
                let mean_a = circle.a.iter().sum::<f64>() / n as f64;
                let mut mv = [0.0; 3];
                for v in &circle.v {
                    for (m, x) in mv.iter_mut().zip(v) {
                        *m += x / n as f64;
                    }
                }
                let unit = ImaginaryUnit::from_vector(mv).unwrap_or(ImaginaryUnit::I);
                ((mean_a + vnorm(mv)).max(0.0).sqrt(), unit)
            } else {
                sup_over_units(&circle, pv, spec)
            }
        }
    };
    let slice = slice_norm_estimate(f, unit, p, spec);
    HardyNormEstimate {
        p,
        value,
        achieved_unit: unit,
        r_used: 1.0,
        truncation_error_bound: f.truncation_error(1.0),
        divergent: slice.divergent,
        monotone: slice.monotone,
        grid_means: slice.grid_means,
    }
}

/// `N_p(f, r)`: the `L^p` mean of `|f|` over the 3-sphere of radius `r`.
///
/// With `q = r(cos phi + sin phi J)` the normalized measure is
/// `sin^2 phi dphi dsigma(J) / (2 pi^2)`. On each sphere `|f|^2 = a + <J, v>` and
/// the integral over `J` is done exactly (the integrand depends on `<J, v>` alone),
/// leaving a smooth even periodic integral in `phi`.
pub fn three_sphere_mean(f: &RegularSeries, r: f64, p: Exponent) -> f64 {
    let p = match p {
        Exponent::Infinity => {
            return if r >= 1.0 {
                sup_norm(f, &QuadratureSpec::default()).0
            } else {
                let g = |t: f64| sphere_affine(f, r * t.cos(), r * t.sin()).extremes().max;
                periodic_max(g, 256.max(2 * f.degree() + 1)).0
            };
        }
        Exponent::Finite(p) => p,
    };
    let e = 0.5 * p + 1.0;
    let g = |phi: f64| {
        let s = sphere_affine(f, r * phi.cos(), r * phi.sin());
        let a = s.mean_square();
        let v = vnorm(s.tilt());
        let sphere_integral = if v <= 1e-10 * a {
            4.0 * PI * a.powf(0.5 * p)
        } else {
            2.0 * PI * ((a + v).powf(e) - (a - v).max(0.0).powf(e)) / (e * v)
        };
        phi.sin().powi(2) * sphere_integral
    };
    // the integrand is even in phi, so the mean over [-pi, pi) is the integral over [0, pi] / pi
    let (mean, _) = periodic_mean(g, 64.max(2 * f.degree() + 2));
    (mean * PI / (2.0 * PI * PI)).powf(1.0 / p)
}

/// `N_p(f) = sup_r N_p(f, r)` over the quadrature grid and the boundary.
pub fn three_sphere_norm(f: &RegularSeries, p: Exponent, spec: &QuadratureSpec) -> f64 {
    spec.r_grid.iter().chain(std::iter::once(&1.0)).map(|&r| three_sphere_mean(f, r, p)).fold(0.0, f64::max)
}

/// Status of one node of a boundary trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Converged,
    /// The radial values do not extrapolate to the boundary value.
    NotConverged,
    /// The node was left out (a vanishing divisor in a boundary product).
    Skipped,
}

/// Samples of the radial limit `f~(e^{I theta})` on a symmetric grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryTrace {
    pub unit: ImaginaryUnit,
    pub thetas: Vec<f64>,
    pub values: Vec<Quaternion>,
    pub status: Vec<NodeStatus>,
}

impl BoundaryTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.status.iter().all(|s| *s == NodeStatus::Converged)
    }

    /// Index of the node at `-theta_k`.
    pub fn mirror(&self, k: usize) -> usize {
        (self.len() - k) % self.len()
    }

    /// `L^p` norm of the trace over the usable nodes.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        let used = self.values.iter().zip(&self.status).filter(|(_, s)| **s != NodeStatus::Skipped);
        match p {
            Exponent::Infinity => used.map(|(v, _)| v.norm()).fold(0.0, f64::max),
            Exponent::Finite(p) => {
                let (sum, n) = used.fold((0.0, 0usize), |(s, n), (v, _)| (s + v.norm().powf(p), n + 1));
                (sum / n.max(1) as f64).powf(1.0 / p)
            }
        }
    }

    /// One row per node: theta, w, x, y, z, |value|.
    pub fn rows(&self) -> Vec<[f64; 6]> {
        self.thetas.iter().zip(&self.values).map(|(t, v)| [*t, v.w, v.x, v.y, v.z, v.norm()]).collect()
    }
}

/// Radial limit of `f` on the slice `L_I` at `spec.circle_nodes` nodes.
///
/// The values are the boundary values of the series. Each node is checked by
/// extrapolating `f(r e^{I theta})` from the last three grid radii to `r = 1`,
/// and for truncated series also by comparing with the partial sum that omits
/// the last quarter of the terms. Nodes where either disagrees with the
/// boundary value by more than `1e-3` relative are marked as not converged.
pub fn boundary_trace(f: &RegularSeries, unit: ImaginaryUnit, spec: &QuadratureSpec) -> Result<BoundaryTrace> {
    spec.validate()?;
    let thetas = circle_angles(spec.circle_nodes);
    let k = spec.r_grid.len();
    let radii: Vec<f64> = spec.r_grid[k.saturating_sub(3)..].to_vec();
    let shorter = f.is_truncated().then(|| f.truncate_to(f.degree() - f.degree().div_ceil(4)));
    let pairs: Vec<(Quaternion, NodeStatus)> = thetas
        .par_iter()
        .map(|&t| {
            let e = exp_on_slice(unit, t);
            let direct = f.eval(e);
            let tol = 1e-3 * (1.0 + direct.norm());
            let samples: Vec<Quaternion> = radii.iter().map(|&r| f.eval(e.scale(r))).collect();
            let extrapolated = lagrange_at_one(&radii, &samples);
            let tail_ok = shorter.as_ref().is_none_or(|g| (g.eval(e) - direct).norm() <= tol);
            let ok = tail_ok && (extrapolated - direct).norm() <= tol;
            (direct, if ok { NodeStatus::Converged } else { NodeStatus::NotConverged })
        })
        .collect();
    let (values, status) = pairs.into_iter().unzip();
    Ok(BoundaryTrace { unit, thetas, values, status })
}

fn lagrange_at_one(r: &[f64], v: &[Quaternion]) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for i in 0..r.len() {
        let mut w = 1.0;
        for j in 0..r.len() {
            if i != j {
                w *= (1.0 - r[j]) / (r[i] - r[j]);
            }
        }
        acc += v[i] * w;
    }
    acc
}

/// Poisson integral of the trace at `r e^{I theta}`.
pub fn poisson_reconstruct(trace: &BoundaryTrace, r: f64, theta: f64) -> Quaternion {
    let (mut acc, mut n) = (Quaternion::ZERO, 0usize);
    for ((t, v), s) in trace.thetas.iter().zip(&trace.values).zip(&trace.status) {
        if *s == NodeStatus::Skipped {
            continue;
        }
        let kernel = (1.0 - r * r) / (1.0 - 2.0 * r * (theta - t).cos() + r * r);
        acc += *v * kernel;
        n += 1;
    }
    acc / n.max(1) as f64
}

/// Cauchy integral of the trace at `z` in the slice of the trace.
pub fn cauchy_reconstruct(trace: &BoundaryTrace, z: Quaternion) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for (t, v) in trace.thetas.iter().zip(&trace.values) {
        // e^{I t} / (e^{I t} - z) = (1 - z e^{-I t})^{-1}, an element of L_I
        let k = (Quaternion::ONE - z * exp_on_slice(trace.unit, -t)).inverse().unwrap_or(Quaternion::ZERO);
        acc += k * *v;
    }
    acc / trace.len() as f64
}

/// Below this `|f~|` a node of a boundary product is skipped.
pub const VANISHING_TRACE_TOL: f64 = 1e-12;

/// Trace of `f * g` from the traces of `f` and `g` alone:
/// `f~(e^{I t}) g~(f~^{-1} e^{I t} f~)`, where `g~` on the conjugated point is
/// recovered from its values at `e^{+-I t}`.
pub fn boundary_star_product(tf: &BoundaryTrace, tg: &BoundaryTrace) -> Result<BoundaryTrace> {
    if tf.unit != tg.unit || tf.thetas != tg.thetas {
        return Err(Error::InvalidInput("traces must share the unit and the nodes".into()));
    }
    let i = tf.unit.quat();
    let n = tf.len();
    let mut values = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    for k in 0..n {
        let fv = tf.values[k];
        if fv.norm() < VANISHING_TRACE_TOL {
            values.push(Quaternion::ZERO);
            status.push(NodeStatus::Skipped);
            continue;
        }
        let jt = i.conjugated_by(fv)?;
        let (plus, minus) = (tg.values[k], tg.values[tg.mirror(k)]);
        let ji = jt * i;
        let gv = (Quaternion::ONE - ji) * plus * 0.5 + (Quaternion::ONE + ji) * minus * 0.5;
        values.push(fv * gv);
        let ok = [tf.status[k], tg.status[k], tg.status[tg.mirror(k)]].iter().all(|s| *s == NodeStatus::Converged);
        status.push(if ok { NodeStatus::Converged } else { NodeStatus::NotConverged });
    }
    Ok(BoundaryTrace { unit: tf.unit, thetas: tf.thetas.clone(), values, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::tests::{random_quat, random_series};
    use crate::slice::split;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn p(v: f64) -> Exponent {
        Exponent::new(v).unwrap()
    }

    fn geometric(n: usize) -> RegularSeries {
        RegularSeries::from_real(&[1.0, -1.0]).star_inverse(n).unwrap()
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("2.5".parse::<Exponent>().unwrap(), Exponent::Finite(2.5));
        assert!("-1".parse::<Exponent>().is_err());
        assert!("x".parse::<Exponent>().is_err());
        assert_eq!(p(2.0).conjugate().unwrap(), p(2.0));
        let e: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(e, Exponent::Infinity);
        assert_eq!(serde_json::to_string(&p(4.0)).unwrap(), "4.0");
    }

    #[test]
    fn spec_validation() {
        assert!(spec().validate().is_ok());
        let g = default_r_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.0);
        assert!((g[19] - 0.999).abs() < 1e-15);
        let mut s = spec();
        s.r_grid.clear();
        assert!(s.validate().is_err());
        s.r_grid = vec![0.5, 0.4];
        assert!(s.validate().is_err());
        s.r_grid = vec![0.5, 1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn circle_mean_examples() {
        let q = RegularSeries::monomial(1, Quaternion::ONE);
        for (u, r, e) in [(ImaginaryUnit::I, 0.3, 1.0), (ImaginaryUnit::K, 0.8, 3.0), (ImaginaryUnit::J, 0.5, 0.5)] {
            assert!((circle_mean(&q, u, r, p(e), &spec()) - r).abs() < 1e-14);
        }
        let c = RegularSeries::constant(Quaternion::new(1.0, 2.0, -2.0, 0.0));
        assert!((circle_mean(&c, ImaginaryUnit::J, 0.4, p(1.5), &spec()) - 3.0).abs() < 1e-14);
        assert!((circle_mean(&c, ImaginaryUnit::J, 0.4, Exponent::Infinity, &spec()) - 3.0).abs() < 1e-14);
        let f = RegularSeries::new(vec![Quaternion::ONE, Quaternion::I]);
        for r in [0.0, 0.3, 0.9] {
            let m = circle_mean(&f, ImaginaryUnit::I, r, p(2.0), &spec());
            assert!((m * m - (1.0 + r * r)).abs() < 1e-14);
        }
    }

    #[test]
    fn slice_norm_examples() {
        for n in [0, 3, 8] {
            let f = RegularSeries::monomial(n, Quaternion::ONE);
            assert!((slice_norm(&f, ImaginaryUnit::I, p(2.0), &spec()) - 1.0).abs() < 1e-14);
        }
        let f = RegularSeries::new(vec![Quaternion::ONE, Quaternion::I]);
        assert!((slice_norm(&f, ImaginaryUnit::I, p(2.0), &spec()) - 2f64.sqrt()).abs() < 1e-14);

        let est = slice_norm_estimate(&geometric(64), ImaginaryUnit::I, p(2.0), &spec());
        assert!(est.divergent);
        assert!((est.value - 65f64.sqrt()).abs() < 1e-10);
        assert!(est.monotone);
    }

    #[test]
    fn convergent_truncated_series_are_not_flagged() {
        // Taylor head of 1 / (1 - q/2): the tail is negligible
        let f = RegularSeries::from_real(&[1.0, -0.5]).star_inverse(60).unwrap();
        let est = slice_norm_estimate(&f, ImaginaryUnit::I, p(2.0), &spec());
        assert!(!est.divergent);
        assert!((est.value - (1.0f64 / 0.75).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_h2_norm_is_the_coefficient_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let f = random_series(&mut rng, 6);
            let expect = f.coeffs().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let est = hardy_norm(&f, p(2.0), &spec());
            assert!((est.value - expect).abs() < 1e-12 * expect);
            assert!(!est.divergent && est.monotone);
        }
    }

    #[test]
    fn sup_over_units_beats_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for pv in [1.0, 3.0] {
            let f = random_series(&mut rng, 5);
            let est = hardy_norm(&f, p(pv), &spec());
            let achieved = slice_norm(&f, est.achieved_unit, p(pv), &spec());
            assert!((achieved - est.value).abs() < 1e-9 * est.value);
            for u in sample_unit_sphere_seeded(300, 5) {
                assert!(slice_norm(&f, u, p(pv), &spec()) <= est.value * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn real_coefficients_give_slice_independent_norms() {
        let f = RegularSeries::from_real(&[0.3, -1.0, 0.5, 0.2]);
        let a = slice_norm(&f, ImaginaryUnit::I, p(3.0), &spec());
        for u in sample_unit_sphere_seeded(10, 3) {
            assert!((slice_norm(&f, u, p(3.0), &spec()) - a).abs() < 1e-12);
        }
        assert!((hardy_norm(&f, p(3.0), &spec()).value - a).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_of_moebius_map() {
        // (1/2 - q) / (1 - q/2) is unimodular on the boundary
        let num = RegularSeries::from_real(&[0.5, -1.0]);
        let f = RegularSeries::from_real(&[1.0, -0.5]).star_inverse(80).unwrap().star_mul(&num);
        let est = hardy_norm(&f, Exponent::Infinity, &spec());
        assert!((est.value - 1.0).abs() < 1e-12);
        let g = RegularSeries::new(vec![Quaternion::new(0.2, 0.1, 0.0, 0.0), Quaternion::J, Quaternion::K]);
        let (m, u) = sup_norm(&g, &spec());
        let gr = &g;
        let brute = sample_unit_sphere_seeded(2000, 1)
            .iter()
            .flat_map(|w| circle_angles(400).into_iter().map(move |t| gr.eval(exp_on_slice(*w, t)).norm()))
            .fold(0.0, f64::max);
        assert!(m >= brute - 1e-12 && m < brute + 1e-3);
        let best = circle_mean(&g, u, 1.0, Exponent::Infinity, &spec());
        assert!((best - m).abs() < 1e-9);
    }

    /// Product rule over sampled units and a `phi` grid, with the `sin^2` weight.
    fn brute_three_sphere(f: &RegularSeries, r: f64, p: f64) -> f64 {
        let units = sample_unit_sphere_seeded(4000, 17);
        let m = 400;
        let mut acc = 0.0;
        for k in 0..m {
            let phi = PI * (k as f64 + 0.5) / m as f64;
            let w = phi.sin().powi(2);
            let s: f64 = units.iter().map(|u| f.eval(u.point(r * phi.cos(), r * phi.sin())).norm().powf(p)).sum();
            acc += w * s / units.len() as f64;
        }
        // sum of w over the grid approximates pi/2 * m / pi
        (acc / (0.5 * m as f64)).powf(1.0 / p)
    }

    #[test]
    fn three_sphere_mean_checks() {
        let c = RegularSeries::constant(Quaternion::new(0.0, 3.0, 4.0, 0.0));
        for pv in [0.5, 1.0, 2.0, 5.0] {
            assert!((three_sphere_mean(&c, 0.7, p(pv)) - 5.0).abs() < 1e-13);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for pv in [1.0, 2.0, 3.0] {
            let f = random_series(&mut rng, 4);
            let a = three_sphere_mean(&f, 0.9, p(pv));
            let b = brute_three_sphere(&f, 0.9, pv);
            assert!((a - b).abs() < 2e-3 * a, "{a} vs {b}");
        }
        // N_2(1 - q^2)^2 = 3 while ||1 - q^2||_2^2 = 2
        let f = RegularSeries::from_real(&[1.0, 0.0, -1.0]);
        assert!((three_sphere_mean(&f, 1.0, p(2.0)).powi(2) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_sphere_mean_of_truncated_geometric_series() {
        // on |q| = 1 the 3-sphere mean of sum_{n<=N} q^n stays at sqrt(2)
        for n in [64, 256] {
            let v = three_sphere_mean(&geometric(n), 1.0, p(2.0));
            assert!((v - 2f64.sqrt()).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn traces_of_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let f = random_series(&mut rng, 6);
        let u = ImaginaryUnit::from_vector([1.0, 1.0, 0.0]).unwrap();
        let t = boundary_trace(&f, u, &spec()).unwrap();
        assert!(t.all_converged());
        for (th, v) in t.thetas.iter().zip(&t.values) {
            assert_eq!(*v, f.eval(exp_on_slice(u, *th)));
        }
        for pv in [1.0, 2.0, 3.0] {
            let a = t.lp_norm(p(pv));
            let b = slice_norm(&f, u, p(pv), &spec());
            assert!((a - b).abs() < 1e-9 * b);
        }
        let mut s = spec();
        s.r_grid.clear();
        assert!(boundary_trace(&f, u, &s).is_err());

        let t = boundary_trace(&geometric(64), ImaginaryUnit::I, &spec()).unwrap();
        assert!(!t.all_converged());
        // the blow-up sits at theta = 0
        assert_eq!(t.status[t.len() / 2], NodeStatus::NotConverged);
    }

    #[test]
    fn trace_of_a_moebius_map_is_unimodular() {
        let num = RegularSeries::from_real(&[0.5, -1.0]);
        let f = RegularSeries::from_real(&[1.0, -0.5]).star_inverse(80).unwrap().star_mul(&num);
        let t = boundary_trace(&f, ImaginaryUnit::J, &spec()).unwrap();
        assert!(t.all_converged());
        assert!(t.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-8));
    }

    #[test]
    fn poisson_and_cauchy() {
        let c = Quaternion::new(0.5, -1.0, 2.0, 0.25);
        let t = boundary_trace(&RegularSeries::constant(c), ImaginaryUnit::K, &spec()).unwrap();
        assert!((poisson_reconstruct(&t, 0.6, 1.0) - c).norm() < 1e-14);

        let sq = RegularSeries::monomial(2, Quaternion::ONE);
        let t = boundary_trace(&sq, ImaginaryUnit::I, &spec()).unwrap();
        let z = exp_on_slice(ImaginaryUnit::I, PI / 3.0).scale(0.5);
        assert!((poisson_reconstruct(&t, 0.5, PI / 3.0) - sq.eval(z)).norm() < 1e-8);
        assert!((cauchy_reconstruct(&t, z) - sq.eval(z)).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let f = random_series(&mut rng, 5);
        let t = boundary_trace(&f, ImaginaryUnit::J, &spec()).unwrap();
        let mean = t.values.iter().copied().sum::<Quaternion>() / t.len() as f64;
        assert!((poisson_reconstruct(&t, 0.0, 0.7) - mean).norm() < 1e-15);
        assert!((mean - f.coeff(0)).norm() < 1e-14);
    }

    #[test]
    fn boundary_product_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let u = ImaginaryUnit::from_vector([0.0, 1.0, -1.0]).unwrap();
        let f = random_series(&mut rng, 4);
        let tf = boundary_trace(&f, u, &spec()).unwrap();
        let one = boundary_trace(&RegularSeries::one(), u, &spec()).unwrap();
        let prod = boundary_star_product(&tf, &one).unwrap();
        for (a, b) in prod.values.iter().zip(&tf.values) {
            assert!((*a - *b).norm() < 1e-14);
        }

        let real = RegularSeries::from_real(&[0.3, 1.0, -0.2]);
        let g = random_series(&mut rng, 3);
        let (tr, tg) = (boundary_trace(&real, u, &spec()).unwrap(), boundary_trace(&g, u, &spec()).unwrap());
        let prod = boundary_star_product(&tr, &tg).unwrap();
        for k in 0..prod.len() {
            assert!((prod.values[k] - tr.values[k] * tg.values[k]).norm() < 1e-13);
        }

        let prod = boundary_star_product(&tf, &tg).unwrap();
        let direct = boundary_trace(&f.star_mul(&g), u, &spec()).unwrap();
        for k in 0..prod.len() {
            assert!((prod.values[k] - direct.values[k]).norm() < 1e-12);
        }

        // a vanishing factor trace is skipped, not divided by
        let z = RegularSeries::linear(u.quat());
        let tz = boundary_trace(&z, u, &spec()).unwrap();
        let prod = boundary_star_product(&tz, &tg).unwrap();
        assert_eq!(prod.status[3 * prod.len() / 4], NodeStatus::Skipped);
    }

    #[test]
    fn splitting_components_are_dominated() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..5 {
            let f = random_series(&mut rng, 5);
            let (ui, uj) = (ImaginaryUnit::I, ImaginaryUnit::J);
            let s = split(&f, ui, uj).unwrap();
            for pv in [0.5, 1.0, 2.0, 4.0] {
                let nf = slice_norm(&f, ui, p(pv), &spec());
                assert!(slice_norm(&s.f_series(), ui, p(pv), &spec()) <= nf * (1.0 + 1e-12));
                assert!(slice_norm(&s.g_series(), ui, p(pv), &spec()) <= nf * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn conjugate_and_symmetrization_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for _ in 0..5 {
            let f = random_series(&mut rng, 4);
            let (ui, uj) = (ImaginaryUnit::I, ImaginaryUnit::J);
            let s = split(&f, ui, uj).unwrap();
            for pv in [1.0, 3.0] {
                let fc = slice_norm(&f.regular_conjugate(), ui, p(pv), &spec()).powf(pv);
                let nf = slice_norm(&s.f_series(), ui, p(pv), &spec()).powf(pv);
                let ng = slice_norm(&s.g_series(), ui, p(pv), &spec()).powf(pv);
                let c = if pv >= 2.0 { 2f64.powf(pv / 2.0 - 1.0) } else { 1.0 };
                assert!(fc <= c * (nf + ng) * (1.0 + 1e-12));
            }
            let inf = hardy_norm(&f, Exponent::Infinity, &spec()).value;
            let fs_inf = hardy_norm(&f.symmetrization(), Exponent::Infinity, &spec()).value;
            assert!(fs_inf <= inf * inf * (1.0 + 1e-10));
            let fc_inf = hardy_norm(&f.regular_conjugate(), Exponent::Infinity, &spec()).value;
            assert!((fc_inf - inf).abs() < 1e-10 * inf);
            // ||f^s||_{p/2}^{p/2} <= 2^p ||f||_p^p for p >= 1
            let pv = 2.0;
            let fs = hardy_norm(&f.symmetrization(), p(pv / 2.0), &spec()).value.powf(pv / 2.0);
            let fp = hardy_norm(&f, p(pv), &spec()).value.powf(pv);
            assert!(fs <= 2f64.powf(pv) * fp);
        }
    }

    #[test]
    fn means_increase_with_the_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let f = random_series(&mut rng, 6);
            let u = ImaginaryUnit::from_direction(random_quat(&mut rng)).unwrap();
            let pv = [0.5, 1.0, 2.0, 4.0][rng.gen_range(0..4)];
            let est = slice_norm_estimate(&f, u, p(pv), &spec());
            assert!(est.monotone, "{:?}", est.grid_means);
            assert!(est.value >= *est.grid_means.last().unwrap() - 1e-12);
        }
    }
}
