//! Piecewise cubic Hermite interpolation on uniform grids.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformHermite {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl UniformHermite {
    /// Requires at least two knots and matching slope count.
    pub fn new(x0: f64, dx: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(values.len() >= 2 && values.len() == slopes.len());
        assert!(dx > 0.0);
        Self { x0, dx, values, slopes }
    }

    /// Monotone (Fritsch–Carlson) slopes; end slopes are forced to zero when
    /// `flat_ends` is set.
    pub fn monotone(x0: f64, dx: f64, values: Vec<f64>, flat_ends: bool) -> Self {
        let slopes = monotone_slopes(&values, dx, flat_ends);
        Self::new(x0, dx, values, slopes)
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.dx * (self.values.len() - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn knots(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn knot(&self, k: usize) -> f64 {
        self.x0 + self.dx * k as f64
    }

    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.values.len() - 1;
        let s = ((x - self.x0) / self.dx).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        (k, s - k as f64)
    }

    /// Value, first and second derivative at `x` (clamped to the knot range).
    #[inline]
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let (k, u) = self.locate(x);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.dx, self.slopes[k + 1] * self.dx);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        let d = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / self.dx;
        let s00 = 12.0 * u - 6.0;
        let s10 = 6.0 * u - 4.0;
        let s01 = -12.0 * u + 6.0;
        let s11 = 6.0 * u - 2.0;
        let dd = (s00 * y0 + s10 * m0 + s01 * y1 + s11 * m1) / (self.dx * self.dx);
        (v, d, dd)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        self.eval3(x).1
    }
}

pub fn monotone_slopes(values: &[f64], dx: f64, flat_ends: bool) -> Vec<f64> {
    let n = values.len();
    let mut m = vec![0.0; n];
    if n < 2 {
        return m;
    }
    let delta: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        // harmonic mean keeps the interpolant monotone between knots
        m[k] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
    }
    if flat_ends {
        m[0] = 0.0;
        m[n - 1] = 0.0;
    } else {
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
    }
    m
}

/// Monotone piecewise cubic Hermite interpolant on strictly increasing,
/// possibly non-uniform knots. Outside the knot range it extends linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl Pchip {
    /// `None` unless there are at least two strictly increasing finite knots.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Option<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return None;
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let d: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])).collect();
        let mut ms = vec![0.0; n];
        for k in 1..n - 1 {
            let (a, b) = (d[k - 1], d[k]);
            if a * b > 0.0 {
                let (h0, h1) = (xs[k] - xs[k - 1], xs[k + 1] - xs[k]);
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                ms[k] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        ms[0] = d[0];
        ms[n - 1] = d[n - 2];
        Some(Self { xs, ys, ms })
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    /// Value and first derivative.
    pub fn eval2(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return (self.ys[0] + self.ms[0] * (x - self.xs[0]), self.ms[0]);
        }
        if x >= self.xs[n - 1] {
            return (self.ys[n - 1] + self.ms[n - 1] * (x - self.xs[n - 1]), self.ms[n - 1]);
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let u = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.ms[k] * h, self.ms[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1;
        let d = ((6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * y1 + (3.0 * u2 - 2.0 * u) * m1) / h;
        (v, d)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval2(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..11).map(|k| k as f64 * 0.3).collect();
        let it = UniformHermite::new(0.0, 0.3, xs.iter().map(|&x| f(x)).collect(), xs.iter().map(|&x| df(x)).collect());
        for k in 0..100 {
            let x = k as f64 * 0.03;
            let (v, d, dd) = it.eval3(x);
            assert!((v - f(x)).abs() < 1e-12);
            assert!((d - df(x)).abs() < 1e-11);
            assert!((dd - 6.0 * x).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let vals = vec![0.0, 0.1, 0.1, 0.5, 2.0, 2.1];
        let it = UniformHermite::monotone(0.0, 1.0, vals, true);
        let mut last = -1.0;
        for k in 0..=500 {
            let v = it.eval(k as f64 * 0.01);
            assert!(v >= last - 1e-14);
            last = v;
        }
        assert_eq!(it.deriv(0.0), 0.0);
        assert_eq!(it.deriv(5.0), 0.0);
    }

    #[test]
    fn clamps_outside_range() {
        let it = UniformHermite::monotone(1.0, 0.5, vec![1.0, 2.0, 3.0], false);
        assert_eq!(it.eval(-10.0), 1.0);
        assert_eq!(it.eval(10.0), 3.0);
    }

    #[test]
    fn pchip_nonuniform() {
        let xs = vec![0.0, 0.5, 2.0, 2.2, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let p = Pchip::new(xs, ys).unwrap();
        for k in 0..50 {
            let x = -0.5 + 0.1 * k as f64;
            let (v, d) = p.eval2(x);
            assert!((v - (3.0 * x - 1.0)).abs() < 1e-12);
            assert!((d - 3.0).abs() < 1e-12);
        }
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_none());
    }
}
