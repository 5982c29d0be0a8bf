//! Sampled curves carrying 2-jet data.

use thiserror::Error;

use crate::chart::{ChartError, MetricChart};
use crate::linalg::{metric_dot, Vec3};
use crate::tensor;

/// One curve sample: position, velocity ẋ and covariant acceleration ∇_ẋ ẋ,
/// all in chart coordinates.
#[derive(Clone, Copy, Debug)]
pub struct CurveState {
    pub x: Vec3,
    pub v: Vec3,
    pub a: Vec3,
}

impl CurveState {
    pub fn new(x: Vec3, v: Vec3, a: Vec3) -> Self {
        CurveState { x, v, a }
    }
}

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("curve needs at least {0} samples, got {1}")]
    TooShort(usize, usize),
    #[error("sample times must be strictly increasing (index {0})")]
    NonMonotone(usize),
    #[error("curve sample {0} lies outside the chart domain")]
    SampleOutsideDomain(usize),
    #[error("curve is not regular at sample {0} (|v| = {1:.3e})")]
    NotRegular(usize, f64),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// An ordered list of `(t, CurveState)` samples on a strictly increasing
/// grid.
#[derive(Clone, Debug)]
pub struct DiscreteCurve {
    ts: Vec<f64>,
    states: Vec<CurveState>,
}

impl DiscreteCurve {
    pub fn new(ts: Vec<f64>, states: Vec<CurveState>) -> Result<Self, CurveError> {
        if ts.len() < 2 || ts.len() != states.len() {
            return Err(CurveError::TooShort(2, ts.len().min(states.len())));
        }
        for i in 1..ts.len() {
            if ts[i] <= ts[i - 1] {
                return Err(CurveError::NonMonotone(i));
            }
        }
        Ok(DiscreteCurve { ts, states })
    }

    /// Sample a closed-form curve on a uniform grid.
    pub fn from_fn(
        t0: f64,
        t1: f64,
        n: usize,
        f: impl Fn(f64) -> CurveState,
    ) -> Result<Self, CurveError> {
        if n < 2 {
            return Err(CurveError::TooShort(2, n));
        }
        let ts: Vec<f64> = (0..n)
            .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
            .collect();
        let states = ts.iter().map(|&t| f(t)).collect();
        DiscreteCurve::new(ts, states)
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.ts
    }

    pub fn states(&self) -> &[CurveState] {
        &self.states
    }

    pub fn t(&self, i: usize) -> f64 {
        self.ts[i]
    }

    pub fn state(&self, i: usize) -> &CurveState {
        &self.states[i]
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.states.iter().map(|s| s.x).collect()
    }

    pub fn t_span(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    /// Check every sample against the chart: inside the domain and regular.
    pub fn validate(&self, chart: &MetricChart) -> Result<(), CurveError> {
        for (i, s) in self.states.iter().enumerate() {
            if !chart.contains(&s.x) {
                return Err(CurveError::SampleOutsideDomain(i));
            }
            let g = chart.metric(&s.x)?;
            let speed = metric_dot(&g, &s.v, &s.v).sqrt();
            if speed < 1e-12 {
                return Err(CurveError::NotRegular(i, speed));
            }
        }
        Ok(())
    }

    /// Cubic Lagrange interpolation of the state through the four samples
    /// nearest `t`. Extrapolates slightly at the ends of the grid.
    pub fn state_at(&self, t: f64) -> CurveState {
        let n = self.ts.len();
        if n < 4 {
            // Fall back to linear interpolation between the two samples.
            let (i0, i1) = (0, n - 1);
            let w = (t - self.ts[i0]) / (self.ts[i1] - self.ts[i0]);
            let (a, b) = (&self.states[i0], &self.states[i1]);
            return CurveState {
                x: a.x + w * (b.x - a.x),
                v: a.v + w * (b.v - a.v),
                a: a.a + w * (b.a - a.a),
            };
        }
        // First sample index with ts[i] >= t.
        let upper = self.ts.partition_point(|&s| s < t);
        let start = upper.saturating_sub(2).min(n - 4);
        let idx = [start, start + 1, start + 2, start + 3];

        let mut x = Vec3::zeros();
        let mut v = Vec3::zeros();
        let mut acc = Vec3::zeros();
        for (a_pos, &ia) in idx.iter().enumerate() {
            let mut w = 1.0;
            for (b_pos, &ib) in idx.iter().enumerate() {
                if a_pos != b_pos {
                    w *= (t - self.ts[ib]) / (self.ts[ia] - self.ts[ib]);
                }
            }
            x += w * self.states[ia].x;
            v += w * self.states[ia].v;
            acc += w * self.states[ia].a;
        }
        CurveState { x, v, a: acc }
    }

    /// Covariant jerk ∇_ẋ ∇_ẋ ẋ at an interior sample, using the centered
    /// four-point first-derivative stencil on the stored accelerations plus
    /// the Christoffel correction. Needs `2 <= i < len - 2`.
    pub fn fd_jerk(&self, chart: &MetricChart, i: usize) -> Result<Vec3, CurveError> {
        let n = self.ts.len();
        if i < 2 || i + 2 >= n {
            return Err(CurveError::TooShort(5, n));
        }
        let h = self.ts[i + 1] - self.ts[i];
        // The stencil assumes a uniform grid around i.
        let adot = (self.states[i - 2].a - 8.0 * self.states[i - 1].a
            + 8.0 * self.states[i + 1].a
            - self.states[i + 2].a)
            / (12.0 * h);
        let s = &self.states[i];
        let gamma = tensor::christoffel(chart, &s.x)?;
        let mut jerk = adot;
        for k in 0..3 {
            for p in 0..3 {
                for q in 0..3 {
                    jerk[k] += gamma[p][q][k] * s.v[p] * s.a[q];
                }
            }
        }
        Ok(jerk)
    }

    /// Metric arclength of the curve via composite Simpson with interpolated
    /// midpoint speeds.
    pub fn arclength(&self, chart: &MetricChart) -> Result<f64, CurveError> {
        Ok(self.cumulative_arclength(chart)?.pop().unwrap_or(0.0))
    }

    /// Cumulative metric arclength at every sample, starting at 0.
    pub fn cumulative_arclength(&self, chart: &MetricChart) -> Result<Vec<f64>, CurveError> {
        let speed = |s: &CurveState| -> Result<f64, CurveError> {
            let g = chart.metric(&s.x)?;
            Ok(metric_dot(&g, &s.v, &s.v).sqrt())
        };
        let mut out = Vec::with_capacity(self.ts.len());
        out.push(0.0);
        let mut acc = 0.0;
        for i in 1..self.ts.len() {
            let h = self.ts[i] - self.ts[i - 1];
            let sa = speed(&self.states[i - 1])?;
            let sm = speed(&self.state_at(0.5 * (self.ts[i] + self.ts[i - 1])))?;
            let sb = speed(&self.states[i])?;
            acc += h / 6.0 * (sa + 4.0 * sm + sb);
            out.push(acc);
        }
        Ok(out)
    }
}

/// Composite Simpson weights on a uniform grid; falls back to trapezoids on
/// the last interval when the sample count is even.
pub fn simpson(h: f64, values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 2);
    let odd_count = if n % 2 == 1 { n } else { n - 1 };
    let mut acc = 0.0;
    if odd_count >= 3 {
        acc += values[0] + values[odd_count - 1];
        for (offset, v) in values[1..odd_count - 1].iter().enumerate() {
            acc += if offset % 2 == 0 { 4.0 * v } else { 2.0 * v };
        }
        acc *= h / 3.0;
    }
    if odd_count < n {
        acc += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn helix(t: f64) -> CurveState {
        CurveState {
            x: Vec3::new(t.cos(), t.sin(), t),
            v: Vec3::new(-t.sin(), t.cos(), 1.0),
            a: Vec3::new(-t.cos(), -t.sin(), 0.0),
        }
    }

    #[test]
    fn interpolation_reproduces_smooth_curves() {
        let curve = DiscreteCurve::from_fn(0.0, 2.0, 201, helix).unwrap();
        for &t in &[0.005, 0.3141, 1.0, 1.995] {
            let s = curve.state_at(t);
            let exact = helix(t);
            assert!((s.x - exact.x).norm() < 1e-8);
            assert!((s.v - exact.v).norm() < 1e-8);
            assert!((s.a - exact.a).norm() < 1e-8);
        }
    }

    #[test]
    fn fd_jerk_matches_closed_form() {
        let curve = DiscreteCurve::from_fn(0.0, 2.0, 401, helix).unwrap();
        let chart = registry::euclidean();
        let i = 200;
        let t = curve.t(i);
        let jerk = curve.fd_jerk(&chart, i).unwrap();
        let exact = Vec3::new(t.sin(), -t.cos(), 0.0);
        assert!((jerk - exact).norm() < 1e-10);
    }

    #[test]
    fn arclength_of_unit_circle() {
        let curve = DiscreteCurve::from_fn(0.0, 2.0 * PI, 629, |t| CurveState {
            x: Vec3::new(t.cos(), t.sin(), 0.0),
            v: Vec3::new(-t.sin(), t.cos(), 0.0),
            a: Vec3::new(-t.cos(), -t.sin(), 0.0),
        })
        .unwrap();
        let chart = registry::euclidean();
        assert_relative_eq!(curve.arclength(&chart).unwrap(), 2.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn monotone_grid_is_enforced() {
        let s = helix(0.0);
        assert!(DiscreteCurve::new(vec![0.0, 0.0], vec![s, s]).is_err());
        assert!(DiscreteCurve::new(vec![0.0, -1.0], vec![s, s]).is_err());
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 101;
        let h = 1.0 / (n - 1) as f64;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * h;
                t * t * t - 2.0 * t + 1.0
            })
            .collect();
        assert_relative_eq!(simpson(h, &vals), 0.25, epsilon = 1e-12);
    }
}
