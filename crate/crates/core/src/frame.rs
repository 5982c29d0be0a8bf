//! Oriented orthonormal frames, the canonical and connection forms, the
//! frame-bundle Fefferman pairing and parallel transport in the normal
//! bundle.

use thiserror::Error;

use crate::chart::{ChartError, MetricChart};
use crate::curve::{CurveError, CurveState, DiscreteCurve};
use crate::linalg::{metric_dot, Mat3, Vec3};
use crate::tensor;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame columns are not orthonormal for the chart metric (residual {0:.3e})")]
    NotOrthonormal(f64),
    #[error("frame is not positively oriented (ε(b1,b2,b3) = {0:.6})")]
    NotOriented(f64),
    #[error("frame third vector does not match the curve tangent (residual {0:.3e})")]
    TangentMismatch(f64),
    #[error("initial normal vector is not unit-normal to the curve (residual {0:.3e})")]
    BadInitialNormal(f64),
    #[error("geodesic curvature vanishes (|v x a| = {0:.3e}); torsion undefined")]
    VanishingCurvature(f64),
    #[error("no coordinate direction yields a smooth normal field along this curve")]
    NoSmoothNormal,
    #[error("section frame count {0} does not match curve sample count {1}")]
    SectionLengthMismatch(usize, usize),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// An oriented orthonormal frame at a point: columns `b1, b2, b3` with
/// `g(b_i, b_j) = δ_ij` and `ε(b1, b2, b3) = +1`.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub x: Vec3,
    pub basis: Mat3,
}

impl Frame {
    pub fn new(chart: &MetricChart, x: Vec3, basis: Mat3) -> Result<Self, FrameError> {
        let g = chart.metric(&x)?;
        let gram = basis.transpose() * g * basis;
        let residual = (gram - Mat3::identity()).amax();
        if residual > 1e-8 {
            return Err(FrameError::NotOrthonormal(residual));
        }
        let eps = tensor::volume_eps(chart, &x)?;
        let mut vol = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    vol += eps[i][j][k] * basis[(i, 0)] * basis[(j, 1)] * basis[(k, 2)];
                }
            }
        }
        if vol < 0.0 {
            return Err(FrameError::NotOriented(vol));
        }
        Ok(Frame { x, basis })
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.basis.column(i).into_owned()
    }
}

/// Values of the canonical form φ and the connection form ω on a frame-path
/// velocity, as vectors in R³ (ω via the standard so(3) identification).
#[derive(Clone, Copy, Debug)]
pub struct FrameVelocity {
    pub phi: Vec3,
    pub omega: Vec3,
}

/// Evaluate (φ, ω) on the velocity `(ẋ, Ḃ)` of a path of frames.
/// `bdot` holds the coordinate time-derivatives of the basis columns.
pub fn frame_velocity(
    chart: &MetricChart,
    frame: &Frame,
    xdot: &Vec3,
    bdot: &Mat3,
) -> Result<FrameVelocity, FrameError> {
    let g = chart.metric(&frame.x)?;
    let gamma = tensor::christoffel(chart, &frame.x)?;
    let mut phi = Vec3::zeros();
    let mut m = Mat3::zeros();
    for j in 0..3 {
        let bj = frame.column(j);
        phi[j] = metric_dot(&g, &bj, xdot);
        let nabla_bj = bdot.column(j).into_owned() + tensor::gamma_apply(&gamma, xdot, &bj);
        for i in 0..3 {
            m[(i, j)] = metric_dot(&g, &frame.column(i), &nabla_bj);
        }
    }
    // m is antisymmetric up to path consistency error; read ω off the
    // antisymmetric part.
    let omega = Vec3::new(
        0.5 * (m[(1, 2)] - m[(2, 1)]),
        0.5 * (m[(2, 0)] - m[(0, 2)]),
        0.5 * (m[(0, 1)] - m[(1, 0)]),
    );
    Ok(FrameVelocity { phi, omega })
}

/// The Fefferman pairing on the frame bundle,
/// `G^F = 2 (φ¹·ω¹ + φ²·ω² + φ³·ω³)` as a symmetric product.
pub fn g_f(a: &FrameVelocity, b: &FrameVelocity) -> f64 {
    a.phi.dot(&b.omega) + b.phi.dot(&a.omega)
}

/// A point of the unit tangent sphere bundle.
#[derive(Clone, Copy, Debug)]
pub struct SphereBundlePoint {
    pub x: Vec3,
    pub eta: Vec3,
}

/// The 1-jet lift t ↦ (x(t), ẋ(t)/|ẋ(t)|).
pub fn canonical_lift(
    chart: &MetricChart,
    curve: &DiscreteCurve,
) -> Result<Vec<SphereBundlePoint>, FrameError> {
    let mut out = Vec::with_capacity(curve.len());
    for s in curve.states() {
        let g = chart.metric(&s.x)?;
        let speed = metric_dot(&g, &s.v, &s.v).sqrt();
        if speed < 1e-12 {
            return Err(FrameError::Curve(CurveError::NotRegular(out.len(), speed)));
        }
        out.push(SphereBundlePoint {
            x: s.x,
            eta: s.v / speed,
        });
    }
    Ok(out)
}

/// Unit tangent and its covariant derivative at a curve state.
pub(crate) fn unit_tangent_data(g: &Mat3, s: &CurveState) -> (Vec3, Vec3) {
    let v2 = metric_dot(g, &s.v, &s.v);
    let speed = v2.sqrt();
    let t = s.v / speed;
    let va = metric_dot(g, &s.v, &s.a);
    // ∇_ẋ (v/|v|) = a/|v| - g(v,a) v / |v|^3
    let dt = s.a / speed - va / (speed * v2) * s.v;
    (t, dt)
}

/// Parallel transport of a unit normal vector with respect to the normal
/// connection: `∇_ẋ ν` stays tangential. Returns ν at every curve sample.
pub fn normal_transport(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    nu0: &Vec3,
) -> Result<Vec<Vec3>, FrameError> {
    let s0 = curve.state(0);
    let g0 = chart.metric(&s0.x)?;
    let norm_res = (metric_dot(&g0, nu0, nu0) - 1.0).abs();
    let tan_res = metric_dot(&g0, nu0, &s0.v).abs();
    if norm_res > 1e-8 || tan_res > 1e-8 {
        return Err(FrameError::BadInitialNormal(norm_res.max(tan_res)));
    }

    // ν̇ = -Γ(ẋ, ν) - g(ν, ∇_ẋT) T
    let rhs = |t: f64, nu: &Vec3| -> Result<Vec3, FrameError> {
        let s = curve.state_at(t);
        let g = chart.metric(&s.x)?;
        let gamma = tensor::christoffel(chart, &s.x)?;
        let (tvec, dtvec) = unit_tangent_data(&g, &s);
        Ok(-tensor::gamma_apply(&gamma, &s.v, nu) - metric_dot(&g, nu, &dtvec) * tvec)
    };

    let ts = curve.times();
    let mut out = Vec::with_capacity(ts.len());
    let mut nu = *nu0;
    out.push(nu);
    for i in 0..ts.len() - 1 {
        let (t, h) = (ts[i], ts[i + 1] - ts[i]);
        let k1 = rhs(t, &nu)?;
        let k2 = rhs(t + 0.5 * h, &(nu + 0.5 * h * k1))?;
        let k3 = rhs(t + 0.5 * h, &(nu + 0.5 * h * k2))?;
        let k4 = rhs(t + h, &(nu + h * k3))?;
        nu += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        // Project back onto the unit normal bundle at the new sample.
        let s = curve.state(i + 1);
        let g = chart.metric(&s.x)?;
        let (tvec, _) = unit_tangent_data(&g, s);
        nu -= metric_dot(&g, &nu, &tvec) * tvec;
        nu /= metric_dot(&g, &nu, &nu).sqrt();
        out.push(nu);
    }
    Ok(out)
}

/// Frames along a curve whose third column is the unit tangent.
#[derive(Clone, Debug)]
pub struct SectionFrames {
    pub frames: Vec<Frame>,
}

impl SectionFrames {
    pub fn first(&self) -> &Frame {
        &self.frames[0]
    }

    pub fn last(&self) -> &Frame {
        self.frames.last().expect("nonempty section")
    }

    /// Rotate each frame about its tangent by the given angles (one per
    /// sample), producing another section.
    pub fn rotated(&self, angles: &[f64]) -> Result<SectionFrames, FrameError> {
        if angles.len() != self.frames.len() {
            return Err(FrameError::SectionLengthMismatch(
                angles.len(),
                self.frames.len(),
            ));
        }
        let frames = self
            .frames
            .iter()
            .zip(angles)
            .map(|(f, &th)| {
                let (b1, b2) = (f.column(0), f.column(1));
                let mut basis = f.basis;
                basis.set_column(0, &(th.cos() * b1 + th.sin() * b2));
                basis.set_column(1, &(-th.sin() * b1 + th.cos() * b2));
                Frame { x: f.x, basis }
            })
            .collect();
        Ok(SectionFrames { frames })
    }
}

/// Build a section along the curve by completing the unit tangent with a
/// normal-transported initial completion. The dependence of downstream
/// functionals on this choice is a constant angle offset.
pub fn section_from_transport(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    nu0: &Vec3,
) -> Result<SectionFrames, FrameError> {
    let nus = normal_transport(chart, curve, nu0)?;
    let mut frames = Vec::with_capacity(curve.len());
    for (s, nu) in curve.states().iter().zip(&nus) {
        let g = chart.metric(&s.x)?;
        let (tvec, _) = unit_tangent_data(&g, s);
        let nup = tensor::cross(chart, &s.x, &tvec, nu)?;
        let mut basis = Mat3::zeros();
        basis.set_column(0, nu);
        basis.set_column(1, &nup);
        basis.set_column(2, &tvec);
        frames.push(Frame::new(chart, s.x, basis)?);
    }
    Ok(SectionFrames { frames })
}

/// A deterministic unit normal completion at the first sample of a curve:
/// the coordinate direction least aligned with the tangent, Gram-Schmidt
/// projected.
pub fn default_normal_seed(chart: &MetricChart, curve: &DiscreteCurve) -> Result<Vec3, FrameError> {
    let s0 = curve.state(0);
    let g = chart.metric(&s0.x)?;
    let (tvec, _) = unit_tangent_data(&g, s0);
    let mut best = Vec3::zeros();
    let mut best_norm = -1.0;
    for k in 0..3 {
        let mut cand = Vec3::zeros();
        cand[k] = 1.0;
        let res = cand - metric_dot(&g, &cand, &tvec) * tvec;
        let n = metric_dot(&g, &res, &res);
        if n > best_norm {
            best_norm = n;
            best = res;
        }
    }
    Ok(best / best_norm.sqrt())
}

/// First derivative of gridded vector samples: centered four-point stencil in
/// the interior, one-sided cubic stencils at the edges. The grid must be
/// uniform.
pub(crate) fn grid_derivative(ts: &[f64], values: &[Vec3]) -> Vec<Vec3> {
    let n = values.len();
    assert!(n >= 4, "need at least 4 samples for grid derivatives");
    let h = ts[1] - ts[0];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i >= 2 && i + 2 < n {
            (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2])
                / (12.0 * h)
        } else if i == 0 {
            (-11.0 * values[0] + 18.0 * values[1] - 9.0 * values[2] + 2.0 * values[3]) / (6.0 * h)
        } else if i == 1 {
            (-2.0 * values[0] - 3.0 * values[1] + 6.0 * values[2] - values[3]) / (6.0 * h)
        } else if i == n - 2 {
            (values[n - 4] - 6.0 * values[n - 3] + 3.0 * values[n - 2] + 2.0 * values[n - 1])
                / (6.0 * h)
        } else {
            (11.0 * values[n - 1] - 18.0 * values[n - 2] + 9.0 * values[n - 3]
                - 2.0 * values[n - 4])
                / (6.0 * h)
        };
        out.push(d);
    }
    out
}
