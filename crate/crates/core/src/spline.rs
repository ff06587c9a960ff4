//! Natural cubic spline through tabulated samples.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SplineError {
    #[error("need at least two samples, got {0}")]
    TooFew(usize),
    #[error("nodes must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self, SplineError> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(SplineError::TooFew(n.min(y.len())));
        }
        for i in 0..n {
            if !x[i].is_finite() || !y[i].is_finite() {
                return Err(SplineError::NonFinite(i));
            }
            if i > 0 && x[i] <= x[i - 1] {
                return Err(SplineError::NotIncreasing(i));
            }
        }
        // Second derivatives m with m_0 = m_{n-1} = 0; Thomas algorithm.
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x: x.to_vec(), y: y.to_vec(), m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value and first derivative. Outside the nodes the end cubic is
    /// continued, which is linear because the end moments vanish.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data_and_nodes() {
        let x = [0.0, 0.5, 1.25, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t - 1.0).collect();
        let s = CubicSpline::natural(&x, &y).unwrap();
        for t in [0.1, 0.7, 1.9, 2.5, 3.4] {
            let (v, d) = s.eval(t);
            assert!((v - (2.0 * t - 1.0)).abs() < 1e-14);
            assert!((d - 2.0).abs() < 1e-13);
        }
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0, 0.0, 2.0];
        let s = CubicSpline::natural(&x, &y).unwrap();
        for i in 0..4 {
            assert!((s.eval(x[i]).0 - y[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn converges_on_smooth_data() {
        let n = 200;
        let x: Vec<f64> = (0..=n).map(|i| 3.0 * i as f64 / n as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let s = CubicSpline::natural(&x, &y).unwrap();
        // Away from the ends the natural condition does not matter.
        for k in 0..50 {
            let t = 0.5 + 2.0 * k as f64 / 50.0;
            assert!((s.eval(t).0 - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_nodes() {
        assert_eq!(CubicSpline::natural(&[0.0, 0.0], &[1.0, 1.0]), Err(SplineError::NotIncreasing(1)));
        assert_eq!(CubicSpline::natural(&[0.0], &[1.0]), Err(SplineError::TooFew(1)));
    }
}
