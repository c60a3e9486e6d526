//! Roots of real polynomials in a disk, by companion-matrix eigenvalues.
//!
//! The polynomial is reversed before forming the companion matrix so that
//! decaying coefficient sequences (heads of convergent power series) stay well
//! scaled: the matrix is normalized by the constant term instead of the tiny
//! leading coefficient, and roots in the disk become the large eigenvalues.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Roots closer than this are merged into one multiple root.
pub const CLUSTER_TOL: f64 = 1e-3;

/// A (possibly multiple) root: the polished center and the number of merged roots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
    /// Largest distance of a merged eigenvalue from the center.
    pub spread: f64,
}

/// Roots of `sum s_n z^n` with `|z| <= radius`, clustered by multiplicity.
///
/// Trailing coefficients are dropped while their combined size on the circle
/// of radius `radius + 10 CLUSTER_TOL` stays below `1e-14` of the largest term,
/// so roundoff in the tail of a series head cannot create roots in the disk.
/// Clusters whose center is within `CLUSTER_TOL` of the real axis are snapped to it.
pub fn real_poly_roots_in_disk(s: &[f64], radius: f64) -> Result<Vec<RootCluster>> {
    let scale = s.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let log_r = (radius + 10.0 * CLUSTER_TOL).ln();
    let log_w: Vec<f64> = s.iter().enumerate().map(|(k, c)| c.abs().ln() + k as f64 * log_r).collect();
    let peak = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut hi = s.len() - 1;
    let mut tail = 0.0;
    while hi > 0 {
        let next = tail + (log_w[hi] - peak).exp();
        if next > 1e-14 {
            break;
        }
        tail = next;
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && s[lo].abs() <= 1e-24 * scale {
        lo += 1;
    }
    let mut out = Vec::new();
    if lo > 0 {
        out.push(RootCluster { center: Complex64::new(0.0, 0.0), multiplicity: lo, spread: 0.0 });
    }
    let p = &s[lo..=hi];
    if p.len() < 2 {
        return Ok(out);
    }
    let margin = 10.0 * CLUSTER_TOL;
    let roots: Vec<Complex64> = all_roots(p)?.into_iter().filter(|z| z.norm() <= radius + margin).collect();
    for members in cluster(&roots, CLUSTER_TOL) {
        let m = members.len();
        let mean = members.iter().sum::<Complex64>() / m as f64;
        let spread = members.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
        let mut center = polish(p, mean, m);
        if center.im.abs() < CLUSTER_TOL {
            center.im = 0.0;
            center = polish(p, center, m);
        }
        if center.norm() <= radius {
            out.push(RootCluster { center, multiplicity: m, spread });
        }
    }
    Ok(out)
}

/// Degrees above this go straight to the Aberth iteration.
pub const MAX_COMPANION_DEGREE: usize = 300;

/// All roots of a polynomial with nonzero constant and leading terms: companion
/// eigenvalues when the degree is moderate, Aberth-Ehrlich iteration otherwise
/// or when the eigenvalue iteration stalls.
pub fn all_roots(p: &[f64]) -> Result<Vec<Complex64>> {
    if p.len() - 1 <= MAX_COMPANION_DEGREE {
        if let Ok(r) = companion_roots(p) {
            return Ok(r);
        }
    }
    aberth_roots(p)
}

/// Eigenvalues of the reversed companion matrix, inverted.
pub fn companion_roots(p: &[f64]) -> Result<Vec<Complex64>> {
    let n = p.len() - 1;
    // reversed monic polynomial z^n + sum_{k<n} (p_{n-k} / p_0) z^k, whose roots are 1/roots(p)
    let mut c = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        c[(0, k)] = -p[k + 1] / p[0];
    }
    for k in 1..n {
        c[(k, k - 1)] = 1.0;
    }
    balance(&mut c);
    let eig = match Schur::try_new(c.clone(), f64::EPSILON, 1000 * n) {
        Some(s) => s.complex_eigenvalues(),
        None => return Err(Error::RootFinding(n)),
    };
    Ok(eig.iter().filter(|l| l.norm() > 0.0).map(|l| Complex64::new(1.0, 0.0) / Complex64::new(l.re, l.im)).collect())
}

/// Simultaneous Newton corrections with mutual repulsion between the iterates.
pub fn aberth_roots(p: &[f64]) -> Result<Vec<Complex64>> {
    let n = p.len() - 1;
    let rho = (p[0].abs() / p[n].abs()).powf(1.0 / n as f64);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4)).collect();
    let mut done = vec![false; n];
    for _ in 0..2000 {
        for k in 0..n {
            if done[k] {
                continue;
            }
            let ratio = newton_ratio(p, z[k]);
            let repulsion: Complex64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if !w.is_finite() {
                done[k] = true;
                continue;
            }
            z[k] -= w;
            if w.norm() <= 4.0 * f64::EPSILON * z[k].norm() {
                done[k] = true;
            }
        }
        if done.iter().all(|d| *d) {
            return Ok(z);
        }
    }
    if z.iter().all(|r| r.is_finite()) {
        // multiple roots converge only linearly; the clusters are polished afterwards
        Ok(z)
    } else {
        Err(Error::RootFinding(n))
    }
}

/// `p(z) / p'(z)`, through the reversed polynomial outside the unit disk.
fn newton_ratio(p: &[f64], z: Complex64) -> Complex64 {
    let n = p.len() - 1;
    if z.norm() <= 1.0 {
        let (mut v, mut d) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in p.iter().rev() {
            d = d * z + v;
            v = v * z + c;
        }
        v / d
    } else {
        let y = z.inv();
        let (mut v, mut d) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in p.iter() {
            d = d * y + v;
            v = v * y + c;
        }
        z * v / (n as f64 * v - y * d)
    }
}

/// Parlett-Reinsch diagonal balancing with powers of two.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 || !c.is_finite() || !r.is_finite() {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c > g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Single-linkage clusters of points within `tol`.
fn cluster(points: &[Complex64], tol: f64) -> Vec<Vec<Complex64>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        l[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() < tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (i, &z) in points.iter().enumerate() {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|(k, _)| *k == r) {
            Some((_, g)) => g.push(z),
            None => groups.push((r, vec![z])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Value of the `m`-th derivative of `sum p_k z^k` and of the next one.
fn derivative_pair(p: &[f64], m: usize, z: Complex64) -> (Complex64, Complex64) {
    let n = p.len();
    let coef = |k: usize, d: usize| -> f64 { (k + 1 - d..=k).map(|t| t as f64).product::<f64>() * p[k] };
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for k in (m..n).rev() {
        v = v * z + coef(k, m);
    }
    for k in (m + 1..n).rev() {
        dv = dv * z + coef(k, m + 1);
    }
    (v, dv)
}

/// Newton's method on the `(m-1)`-th derivative, where an `m`-fold root is simple.
fn polish(p: &[f64], start: Complex64, m: usize) -> Complex64 {
    let d = m - 1;
    if d + 1 >= p.len() {
        return start;
    }
    let mut z = start;
    let (mut v, _) = derivative_pair(p, d, z);
    for _ in 0..50 {
        let (fv, dv) = derivative_pair(p, d, z);
        if dv.norm() == 0.0 {
            break;
        }
        let step = fv / dv;
        let cand = z - step;
        let (cv, _) = derivative_pair(p, d, cand);
        if !(cv.norm() < v.norm()) || (cand - start).norm() > CLUSTER_TOL {
            break;
        }
        z = cand;
        v = cv;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}
