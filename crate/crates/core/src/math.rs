//! Small numeric helpers shared across modules.

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.carry += (self.total - t) + x;
        } else {
            self.carry += (x - t) + self.total;
        }
        self.total = t;
    }

    pub fn value(&self) -> f64 {
        self.total + self.carry
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    let mut s = Sum::new();
    for &x in xs {
        s.add(x);
    }
    s.value()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style starting guess for the i-th largest root.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&xi| mid + half * xi).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

/// Quintic Hermite interpolation on one interval of length `h` at relative
/// position `s`, from value, slope and curvature at both ends. Returns the
/// interpolant and its first two derivatives.
pub fn quintic_hermite(h: f64, s: f64, left: (f64, f64, f64), right: (f64, f64, f64)) -> (f64, f64, f64) {
    let (f0, d0, a0) = left;
    let (f1, d1, a1) = right;
    let (s2, s3) = (s * s, s * s * s);
    let (s4, s5) = (s3 * s, s3 * s2);

    let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 0.5 * s3 - s4 + 0.5 * s5;
    let v = f0 + (f1 - f0) * h3 + h * (d0 * h1 + d1 * h4) + h * h * (a0 * h2 + a1 * h5);

    let dh3 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let dh1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let dh2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let dh4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let dh5 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d = (f1 - f0) * dh3 / h + (d0 * dh1 + d1 * dh4) + h * (a0 * dh2 + a1 * dh5);

    let ddh3 = 60.0 * s - 180.0 * s2 + 120.0 * s3;
    let ddh1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let ddh2 = 1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3;
    let ddh4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let ddh5 = 3.0 * s - 12.0 * s2 + 10.0 * s3;
    let dd = (f1 - f0) * ddh3 / (h * h) + (d0 * ddh1 + d1 * ddh4) / h + (a0 * ddh2 + a1 * ddh5);
    (v, d, dd)
}

/// Index `i` of the interval `[x_i, x_{i+1}]` containing `t` (clamped).
pub fn interval(x: &[f64], t: f64) -> usize {
    let n = x.len();
    match x.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.clamp(1, n - 1) - 1,
    }
}

/// Smallest eigenvalue of a symmetric 2x2 matrix.
pub fn min_eig_sym2(a: f64, b: f64, d: f64) -> f64 {
    let tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    tr - disc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(&xs), 2.0);
    }

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let p = |t: f64| (1.0 - 2.0 * t + 0.5 * t * t - t.powi(3) + 0.25 * t.powi(4) - 0.1 * t.powi(5), 
            -2.0 + t - 3.0 * t * t + t.powi(3) - 0.5 * t.powi(4),
            1.0 - 6.0 * t + 3.0 * t * t - 2.0 * t.powi(3));
        let (a, b) = (0.3, 1.1);
        for k in 0..=10 {
            let t = a + (b - a) * k as f64 / 10.0;
            let (v, d, dd) = quintic_hermite(b - a, (t - a) / (b - a), p(a), p(b));
            let e = p(t);
            assert!((v - e.0).abs() < 1e-13 && (d - e.1).abs() < 1e-12 && (dd - e.2).abs() < 1e-11);
        }
    }

    #[test]
    fn min_eig_of_diagonal() {
        assert_eq!(min_eig_sym2(2.0, 0.0, -2.0), -2.0);
        assert!((min_eig_sym2(1.0, 1.0, 1.0)).abs() < 1e-15);
    }
}
