//! The Fefferman space over the twistor CR manifold, realized on the bundle
//! of normalized complex null covectors.
//!
//! A point of the bundle is a base point `x` together with a complex vector
//! `ζ` satisfying `g(ζ,ζ) = 0`, `g(ζ,ζ̄) = 1` (complex-bilinear pairings).
//! Writing `η = i ζ×ζ̄`, the triple `(√2 Re ζ, √2 Im ζ, η)` is an oriented
//! orthonormal frame. Velocities along the bundle decompose into the adapted
//! components
//!
//! ```text
//! γ̇⁰ = g(η, ẋ)   γ̇¹ = g(ζ, ẋ)   γ̇² = i g(η, ∇_ẋζ)   γ̇³ = -i g(ζ̄, ∇_ẋζ)
//! ```
//!
//! in which the Fefferman metric has constant components; null geodesics keep
//! `γ̇⁰, γ̇¹` constant and evolve `(γ̇², γ̇³)` against Schouten contractions.
//! The module integrates those flows, lifts conformal geodesics to chains and
//! evaluates the curvature of the Fefferman metric pointwise.

pub mod curvature;

pub use curvature::{
    conformal_flatness_check, fefferman_curvature, FeffermanCurvatureReport, FlatnessReport,
};

use num_complex::Complex64;
use thiserror::Error;

use crate::chart::{ChartError, MetricChart};
use crate::conformal::CurveStatus;
use crate::curve::{CurveError, CurveState, DiscreteCurve};
use crate::frame;
use crate::linalg::{complexify, conj3, metric_cdot, metric_dot, re3, CVec3, Mat3, Vec3};
use crate::tensor::{self, PointGeometry};

/// Tolerance for accepting constraint data on input.
pub const INPUT_CONSTRAINT_TOL: f64 = 1e-9;
/// Per-step renormalization corrections past this size abort the flow.
pub const RENORM_MAX_CORRECTION: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum FeffermanError {
    #[error("null coframe constraints violated: |g(ζ,ζ)| = {0:.3e}, |g(ζ,ζ̄)-1| = {1:.3e}")]
    ConstraintViolation(f64, f64),
    #[error("nullity constraint violated: 4 Re(c1 conj(u2)) + 2 c0 u3 = {0:.3e}")]
    NullityViolation(f64),
    #[error("renormalization correction {0:.3e} exceeds {RENORM_MAX_CORRECTION:.1e} at t = {1}")]
    RenormalizationFailure(f64, f64),
    #[error("cannot orthonormalize a degenerate coframe candidate")]
    DegenerateFrame,
    #[error("invalid time span or step: {0}")]
    BadSpan(String),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Frame(#[from] frame::FrameError),
}

/// A normalized complex null covector over a base point.
#[derive(Clone, Copy, Debug)]
pub struct NullCoframePoint {
    pub x: Vec3,
    pub zeta: CVec3,
}

impl NullCoframePoint {
    /// Accept the data only if the constraints already hold to
    /// [`INPUT_CONSTRAINT_TOL`].
    pub fn new(chart: &MetricChart, x: Vec3, zeta: CVec3) -> Result<Self, FeffermanError> {
        let p = NullCoframePoint { x, zeta };
        let (null_res, norm_res) = p.constraint_residuals(chart)?;
        if null_res > INPUT_CONSTRAINT_TOL || norm_res > INPUT_CONSTRAINT_TOL {
            return Err(FeffermanError::ConstraintViolation(null_res, norm_res));
        }
        Ok(p)
    }

    /// Project arbitrary data onto the constraint set by symmetric (Löwdin)
    /// orthonormalization of `(√2 Re ζ, √2 Im ζ)`, which preserves the phase
    /// of ζ as far as possible.
    pub fn normalized(chart: &MetricChart, x: Vec3, zeta: CVec3) -> Result<Self, FeffermanError> {
        let g = chart.metric(&x)?;
        let zeta = lowdin_normalize(&g, &zeta)?;
        Ok(NullCoframePoint { x, zeta })
    }

    /// `(|g(ζ,ζ)|, |g(ζ,ζ̄) - 1|)` at the base point.
    pub fn constraint_residuals(&self, chart: &MetricChart) -> Result<(f64, f64), FeffermanError> {
        let g = chart.metric(&self.x)?;
        Ok(constraint_residuals_with(&g, &self.zeta))
    }

    /// The real unit vector η = i ζ×ζ̄ completing the frame.
    pub fn eta(&self, chart: &MetricChart) -> Result<Vec3, FeffermanError> {
        let zbar = conj3(&self.zeta);
        let eta_c = tensor::cross_c(chart, &self.x, &self.zeta, &zbar)? * Complex64::i();
        Ok(re3(&eta_c))
    }
}

fn constraint_residuals_with(g: &Mat3, zeta: &CVec3) -> (f64, f64) {
    let null_res = metric_cdot(g, zeta, zeta).norm();
    let norm_res = (metric_cdot(g, zeta, &conj3(zeta)).re - 1.0).abs();
    (null_res, norm_res)
}

/// Symmetric orthonormalization of the real frame pair behind ζ.
fn lowdin_normalize(g: &Mat3, zeta: &CVec3) -> Result<CVec3, FeffermanError> {
    let sqrt2 = 2.0f64.sqrt();
    let u = sqrt2 * re3(zeta);
    let w = sqrt2 * crate::linalg::im3(zeta);
    let s11 = metric_dot(g, &u, &u);
    let s12 = metric_dot(g, &u, &w);
    let s22 = metric_dot(g, &w, &w);

    // Inverse square root of the 2x2 Gram matrix by eigendecomposition.
    let tr = s11 + s22;
    let det = s11 * s22 - s12 * s12;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (l1, l2) = (0.5 * tr + disc, 0.5 * tr - disc);
    if l2 <= 1e-12 {
        return Err(FeffermanError::DegenerateFrame);
    }
    // Eigenvector for l1.
    let (c, s) = if s12.abs() > 1e-15 {
        let v = Vec3::new(s12, l1 - s11, 0.0);
        let n = (v.x * v.x + v.y * v.y).sqrt();
        (v.x / n, v.y / n)
    } else if s11 >= s22 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let (r1, r2) = (1.0 / l1.sqrt(), 1.0 / l2.sqrt());
    // S^{-1/2} = r1 * P1 + r2 * P2 with projectors onto the eigenvectors.
    let m11 = r1 * c * c + r2 * s * s;
    let m12 = (r1 - r2) * c * s;
    let m22 = r1 * s * s + r2 * c * c;

    let u_new = m11 * u + m12 * w;
    let w_new = m12 * u + m22 * w;
    let mut out = CVec3::from_element(Complex64::ZERO);
    for i in 0..3 {
        out[i] = Complex64::new(u_new[i], w_new[i]) / sqrt2;
    }
    Ok(out)
}

/// Construct a normalized ζ at `x` whose η equals the given unit direction,
/// with an arbitrary but deterministic phase. `eta_dir` need not be
/// normalized.
pub fn coframe_with_eta(
    chart: &MetricChart,
    x: Vec3,
    eta_dir: &Vec3,
) -> Result<NullCoframePoint, FeffermanError> {
    let g = chart.metric(&x)?;
    let norm = metric_dot(&g, eta_dir, eta_dir).sqrt();
    if norm < 1e-12 {
        return Err(FeffermanError::DegenerateFrame);
    }
    let eta = eta_dir / norm;
    // Complete η to an oriented orthonormal frame (u, w, η).
    let mut best = Vec3::zeros();
    let mut best_res = -1.0;
    for k in 0..3 {
        let mut cand = Vec3::zeros();
        cand[k] = 1.0;
        let residual = cand - metric_dot(&g, &cand, &eta) * eta;
        let n = metric_dot(&g, &residual, &residual);
        if n > best_res {
            best_res = n;
            best = residual;
        }
    }
    let u = best / metric_dot(&g, &best, &best).sqrt();
    let w = tensor::cross(chart, &x, &eta, &u)?;
    // (u, w, η) is orthonormal with u x w = η.
    let sqrt2 = 2.0f64.sqrt();
    let mut zeta = CVec3::from_element(Complex64::ZERO);
    for i in 0..3 {
        zeta[i] = Complex64::new(u[i], w[i]) / sqrt2;
    }
    NullCoframePoint::new(chart, x, zeta)
}

/// Adapted velocity components of a bundle curve.
#[derive(Clone, Copy, Debug)]
pub struct AdaptedVelocity {
    /// γ̇⁰ = g(η, ẋ)
    pub c0: f64,
    /// γ̇¹ = g(ζ, ẋ)
    pub c1: Complex64,
    /// γ̇² = i g(η, ∇_ẋζ)
    pub u2: Complex64,
    /// γ̇³ = -i g(ζ̄, ∇_ẋζ), real when the constraints hold
    pub u3: f64,
}

/// Decompose `(ẋ, ∇_ẋζ)` into adapted components at a coframe point.
pub fn adapted_components(
    chart: &MetricChart,
    point: &NullCoframePoint,
    xdot: &Vec3,
    dzeta: &CVec3,
) -> Result<AdaptedVelocity, FeffermanError> {
    let g = chart.metric(&point.x)?;
    let eta = point.eta(chart)?;
    let xdot_c = complexify(xdot);
    let eta_c = complexify(&eta);
    let c0 = metric_dot(&g, &eta, xdot);
    let c1 = metric_cdot(&g, &point.zeta, &xdot_c);
    let u2 = Complex64::i() * metric_cdot(&g, &eta_c, dzeta);
    let u3 = (-Complex64::i() * metric_cdot(&g, &conj3(&point.zeta), dzeta)).re;
    Ok(AdaptedVelocity { c0, c1, u2, u3 })
}

/// The Fefferman inner product of two adapted velocities,
/// `g^F = 2 (θ̃¹·θ̃^{2̄} + θ̃²·θ̃^{1̄} + θ·θ̃³)`.
pub fn fefferman_inner(a: &AdaptedVelocity, b: &AdaptedVelocity) -> f64 {
    2.0 * (a.c1 * b.u2.conj()).re + 2.0 * (b.c1 * a.u2.conj()).re + a.c0 * b.u3 + a.u3 * b.c0
}

/// State of a null geodesic of the Fefferman metric: the coframe point, the
/// evolving components (γ̇², γ̇³) and the conserved ones (γ̇⁰, γ̇¹).
#[derive(Clone, Copy, Debug)]
pub struct NullFrameState {
    pub point: NullCoframePoint,
    pub u2: Complex64,
    pub u3: f64,
    pub c0: f64,
    pub c1: Complex64,
}

impl NullFrameState {
    /// Validates both the coframe constraints and the nullity
    /// `4 Re(c1 conj(u2)) + 2 c0 u3 = 0`.
    pub fn new(
        chart: &MetricChart,
        point: NullCoframePoint,
        u2: Complex64,
        u3: f64,
        c0: f64,
        c1: Complex64,
    ) -> Result<Self, FeffermanError> {
        let state = NullFrameState {
            point,
            u2,
            u3,
            c0,
            c1,
        };
        let (null_res, norm_res) = point.constraint_residuals(chart)?;
        if null_res > INPUT_CONSTRAINT_TOL || norm_res > INPUT_CONSTRAINT_TOL {
            return Err(FeffermanError::ConstraintViolation(null_res, norm_res));
        }
        let nr = state.nullity_residual();
        if nr.abs() > INPUT_CONSTRAINT_TOL {
            return Err(FeffermanError::NullityViolation(nr));
        }
        Ok(state)
    }

    /// g^F(γ̇, γ̇) = 4 Re(c1 conj(u2)) + 2 c0 u3.
    pub fn nullity_residual(&self) -> f64 {
        4.0 * (self.c1 * self.u2.conj()).re + 2.0 * self.c0 * self.u3
    }

    pub fn adapted_velocity(&self) -> AdaptedVelocity {
        AdaptedVelocity {
            c0: self.c0,
            c1: self.c1,
            u2: self.u2,
            u3: self.u3,
        }
    }

    /// ẋ = γ̇⁰ η + γ̇^{1̄} ζ + γ̇¹ ζ̄ reconstructed as a real vector.
    pub fn velocity(&self, chart: &MetricChart) -> Result<Vec3, FeffermanError> {
        let eta = self.point.eta(chart)?;
        let mut v = self.c0 * eta;
        for i in 0..3 {
            v[i] += 2.0 * (self.c1.conj() * self.point.zeta[i]).re;
        }
        Ok(v)
    }

    /// ∇_ẋζ = i γ̇³ ζ - i γ̇² η, solved from the component definitions.
    pub fn zeta_covariant_derivative(&self, chart: &MetricChart) -> Result<CVec3, FeffermanError> {
        let eta_c = complexify(&self.point.eta(chart)?);
        Ok(self.point.zeta * Complex64::new(0.0, self.u3) - eta_c * (Complex64::i() * self.u2))
    }

    /// ∇_ẋẋ in closed form from the structure relations: η and ζ derivatives
    /// are linear in (u2, u3) so no differencing is needed.
    pub fn covariant_acceleration(&self, chart: &MetricChart) -> Result<Vec3, FeffermanError> {
        let zeta = self.point.zeta;
        let dzeta = self.zeta_covariant_derivative(chart)?;
        let dzbar = conj3(&dzeta);
        // ∇_ẋη = i (∇ζ × ζ̄ + ζ × ∇ζ̄) reduces to i (u2 ζ̄ - conj(u2) ζ).
        let deta = (conj3(&zeta) * self.u2 - zeta * self.u2.conj()) * Complex64::i();
        let acc_c = deta * Complex64::from(self.c0) + dzeta * self.c1.conj() + dzbar * self.c1;
        Ok(re3(&acc_c))
    }
}

/// Time derivative of the evolving part of a [`NullFrameState`].
#[derive(Clone, Copy, Debug)]
pub struct NullFlowDerivative {
    pub xdot: Vec3,
    /// Coordinate (not covariant) derivative of ζ.
    pub zetadot: CVec3,
    pub u2dot: Complex64,
    pub u3dot: f64,
}

/// Right-hand side of the null geodesic system in adapted components.
pub fn null_geodesic_rhs(
    chart: &MetricChart,
    state: &NullFrameState,
) -> Result<NullFlowDerivative, FeffermanError> {
    let geo = PointGeometry::at(chart, &state.point.x)?;
    null_geodesic_rhs_with(chart, &geo, state)
}

fn null_geodesic_rhs_with(
    chart: &MetricChart,
    geo: &PointGeometry,
    state: &NullFrameState,
) -> Result<NullFlowDerivative, FeffermanError> {
    let zeta = state.point.zeta;
    let zbar = conj3(&zeta);
    let eta_c = tensor::cross_c(chart, &state.point.x, &zeta, &zbar)? * Complex64::i();
    let eta = re3(&eta_c);

    let mut xdot = state.c0 * eta;
    for i in 0..3 {
        xdot[i] += 2.0 * (state.c1.conj() * zeta[i]).re;
    }

    let dzeta_cov = zeta * Complex64::new(0.0, state.u3) - eta_c * (Complex64::i() * state.u2);
    // Coordinate derivative: subtract the connection term Γ(ẋ, ζ).
    let mut zetadot = dzeta_cov;
    for k in 0..3 {
        let mut corr = Complex64::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                corr += geo.gamma[i][j][k] * xdot[i] * zeta[j];
            }
        }
        zetadot[k] -= corr;
    }

    // Schouten contractions on the adapted frame.
    let p = &geo.schouten;
    let p_zeta_eta = metric_cdot(p, &zeta, &eta_c);
    let p_zbar_eta = p_zeta_eta.conj();
    let p_zeta_zeta = metric_cdot(p, &zeta, &zeta);
    let p_zbar_zbar = p_zeta_zeta.conj();
    let p_zeta_zbar = metric_cdot(p, &zeta, &zbar);
    let p_eta_eta = metric_dot(p, &eta, &eta);

    let (c0, c1) = (Complex64::from(state.c0), state.c1);
    let minus_i = -Complex64::i();
    let u2dot = minus_i
        * (p_zeta_eta * c0 * c0
            + (p_zeta_zbar - p_eta_eta) * c0 * c1
            + p_zeta_zeta * c0 * c1.conj()
            - p_zbar_eta * c1 * c1
            - p_zeta_eta * c1.norm_sqr());
    let u3dot = (minus_i
        * (p_zbar_eta * c0 * c1 - p_zeta_eta * c0 * c1.conj() + p_zbar_zbar * c1 * c1
            - p_zeta_zeta * c1.conj() * c1.conj()))
    .re;

    Ok(NullFlowDerivative {
        xdot,
        zetadot,
        u2dot,
        u3dot,
    })
}

/// One integrated null geodesic: states on a uniform grid plus diagnostics.
#[derive(Clone, Debug)]
pub struct NullFlow {
    pub ts: Vec<f64>,
    pub states: Vec<NullFrameState>,
    pub status: CurveStatus,
    /// Largest per-step frame correction applied by the renormalization.
    pub max_renorm_correction: f64,
}

impl NullFlow {
    /// Worst constraint and nullity residuals over the flow.
    pub fn constraint_drift(&self, chart: &MetricChart) -> Result<(f64, f64, f64), FeffermanError> {
        let mut worst_null = 0.0f64;
        let mut worst_norm = 0.0f64;
        let mut worst_nullity = 0.0f64;
        for s in &self.states {
            let (a, b) = s.point.constraint_residuals(chart)?;
            worst_null = worst_null.max(a);
            worst_norm = worst_norm.max(b);
            worst_nullity = worst_nullity.max(s.nullity_residual().abs());
        }
        Ok((worst_null, worst_norm, worst_nullity))
    }

    /// Projection to the base: positions with reconstructed velocity and
    /// closed-form covariant acceleration.
    pub fn projection_curve(&self, chart: &MetricChart) -> Result<DiscreteCurve, FeffermanError> {
        let mut states = Vec::with_capacity(self.states.len());
        for s in &self.states {
            states.push(CurveState {
                x: s.point.x,
                v: s.velocity(chart)?,
                a: s.covariant_acceleration(chart)?,
            });
        }
        Ok(DiscreteCurve::new(self.ts.clone(), states)?)
    }
}

/// RK4 with per-step constraint renormalization. `c0`, `c1` are held exactly
/// constant; the remaining state is `(x, ζ, u2, u3)`.
pub fn integrate_null_geodesic(
    chart: &MetricChart,
    initial: &NullFrameState,
    t_span: (f64, f64),
    step: f64,
) -> Result<NullFlow, FeffermanError> {
    let (t0, t1) = t_span;
    if !(t1 > t0) || !(step > 0.0) {
        return Err(FeffermanError::BadSpan(format!(
            "span ({t0}, {t1}) with step {step}"
        )));
    }
    // Accept only clean initial data.
    let initial = NullFrameState::new(
        chart,
        initial.point,
        initial.u2,
        initial.u3,
        initial.c0,
        initial.c1,
    )?;

    let n_steps = ((t1 - t0) / step).round().max(1.0) as usize;
    let h = (t1 - t0) / n_steps as f64;

    let mut ts = vec![t0];
    let mut states = vec![initial];
    let mut state = initial;
    let mut status = CurveStatus::Completed;
    let mut max_corr = 0.0f64;

    'outer: for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        let step_result = (|| -> Result<NullFrameState, FeffermanError> {
            let k1 = rhs_at(chart, &state)?;
            let s2 = advance(&state, &k1, 0.5 * h);
            let k2 = rhs_at(chart, &s2)?;
            let s3 = advance(&state, &k2, 0.5 * h);
            let k3 = rhs_at(chart, &s3)?;
            let s4 = advance(&state, &k3, h);
            let k4 = rhs_at(chart, &s4)?;
            let combined = NullFlowDerivative {
                xdot: (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot) / 6.0,
                zetadot: (k1.zetadot
                    + k2.zetadot * Complex64::from(2.0)
                    + k3.zetadot * Complex64::from(2.0)
                    + k4.zetadot)
                    / Complex64::from(6.0),
                u2dot: (k1.u2dot + 2.0 * k2.u2dot + 2.0 * k3.u2dot + k4.u2dot) / 6.0,
                u3dot: (k1.u3dot + 2.0 * k2.u3dot + 2.0 * k3.u3dot + k4.u3dot) / 6.0,
            };
            Ok(advance(&state, &combined, h))
        })();

        match step_result {
            Ok(raw) => {
                if !chart.contains(&raw.point.x) {
                    status = CurveStatus::LeftDomain { at_t: t };
                    break 'outer;
                }
                // Renormalize ζ against the metric at the new base point.
                let g = chart.metric(&raw.point.x)?;
                let zeta_fixed = lowdin_normalize(&g, &raw.point.zeta)?;
                let corr = crate::linalg::cmax_abs(&(zeta_fixed - raw.point.zeta));
                if corr > RENORM_MAX_CORRECTION {
                    return Err(FeffermanError::RenormalizationFailure(corr, t + h));
                }
                max_corr = max_corr.max(corr);
                state = NullFrameState {
                    point: NullCoframePoint {
                        x: raw.point.x,
                        zeta: zeta_fixed,
                    },
                    ..raw
                };
                ts.push(t + h);
                states.push(state);
            }
            Err(FeffermanError::Chart(ChartError::OutsideDomain(..))) => {
                status = CurveStatus::LeftDomain { at_t: t };
                break 'outer;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(NullFlow {
        ts,
        states,
        status,
        max_renorm_correction: max_corr,
    })
}

fn rhs_at(chart: &MetricChart, state: &NullFrameState) -> Result<NullFlowDerivative, FeffermanError> {
    let geo = PointGeometry::at(chart, &state.point.x)?;
    null_geodesic_rhs_with(chart, &geo, state)
}

fn advance(s: &NullFrameState, d: &NullFlowDerivative, h: f64) -> NullFrameState {
    NullFrameState {
        point: NullCoframePoint {
            x: s.point.x + h * d.xdot,
            zeta: s.point.zeta + d.zetadot * Complex64::from(h),
        },
        u2: s.u2 + h * d.u2dot,
        u3: s.u3 + h * d.u3dot,
        c0: s.c0,
        c1: s.c1,
    }
}

/// The canonical lift of a regular curve: arclength reparametrization, η
/// along the tangent, ζ completed by normal transport. For conformal
/// geodesics the lift satisfies the null geodesic equations.
#[derive(Clone, Debug)]
pub struct ChainLift {
    /// Unit-speed reparametrized base curve on its arclength grid.
    pub curve: DiscreteCurve,
    pub states: Vec<NullFrameState>,
}

pub fn canonical_chain_lift(
    chart: &MetricChart,
    curve: &DiscreteCurve,
) -> Result<ChainLift, FeffermanError> {
    curve.validate(chart).map_err(FeffermanError::Curve)?;
    let rc = reparametrize_by_arclength(chart, curve)?;

    // Initial normal completion, transported along the curve.
    let s0 = rc.state(0);
    let g0 = chart.metric(&s0.x)?;
    let mut seed = Vec3::zeros();
    let mut best = -1.0;
    for k in 0..3 {
        let mut cand = Vec3::zeros();
        cand[k] = 1.0;
        let res = cand - metric_dot(&g0, &cand, &s0.v) * s0.v;
        let n = metric_dot(&g0, &res, &res);
        if n > best {
            best = n;
            seed = res;
        }
    }
    let nu0 = seed / metric_dot(&g0, &seed, &seed).sqrt();
    let nus = frame::normal_transport(chart, &rc, &nu0)?;

    let sqrt2 = 2.0f64.sqrt();
    let mut states = Vec::with_capacity(rc.len());
    for (i, nu) in nus.iter().enumerate() {
        let s = rc.state(i);
        let g = chart.metric(&s.x)?;
        let nup = tensor::cross(chart, &s.x, &s.v, nu)?;
        let mut zeta = CVec3::from_element(Complex64::ZERO);
        for k in 0..3 {
            zeta[k] = Complex64::new(nu[k], nup[k]) / sqrt2;
        }
        let point = NullCoframePoint { x: s.x, zeta };
        // ∇_T ν and ∇_T ν' are tangential for normal-parallel fields.
        let kappa = s.a;
        let dnu = -metric_dot(&g, nu, &kappa) * s.v;
        let dnup = -metric_dot(&g, &nup, &kappa) * s.v;
        let mut dzeta = CVec3::from_element(Complex64::ZERO);
        for k in 0..3 {
            dzeta[k] = Complex64::new(dnu[k], dnup[k]) / sqrt2;
        }
        let av = adapted_components(chart, &point, &s.v, &dzeta)?;
        states.push(NullFrameState {
            point,
            u2: av.u2,
            u3: av.u3,
            c0: av.c0,
            c1: av.c1,
        });
    }
    Ok(ChainLift { curve: rc, states })
}

/// Max residual of the null geodesic equations along a lift: finite
/// differences of (u2, u3) against the flow right-hand side, plus drift of
/// the conserved components.
pub fn chain_lift_residual(chart: &MetricChart, lift: &ChainLift) -> Result<f64, FeffermanError> {
    let n = lift.states.len();
    if n < 5 {
        return Err(FeffermanError::Curve(CurveError::TooShort(5, n)));
    }
    let ts = lift.curve.times();
    let mut worst = 0.0f64;
    for i in 2..n - 2 {
        let h = ts[i + 1] - ts[i];
        let u2dot_fd = (lift.states[i - 2].u2 - 8.0 * lift.states[i - 1].u2
            + 8.0 * lift.states[i + 1].u2
            - lift.states[i + 2].u2)
            / (12.0 * h);
        let u3dot_fd = (lift.states[i - 2].u3 - 8.0 * lift.states[i - 1].u3
            + 8.0 * lift.states[i + 1].u3
            - lift.states[i + 2].u3)
            / (12.0 * h);
        let rhs = null_geodesic_rhs(chart, &lift.states[i])?;
        worst = worst.max((u2dot_fd - rhs.u2dot).norm());
        worst = worst.max((u3dot_fd - rhs.u3dot).abs());
        worst = worst.max((lift.states[i].c0 - lift.states[0].c0).abs());
        worst = worst.max((lift.states[i].c1 - lift.states[0].c1).norm());
    }
    Ok(worst)
}

/// Resample a regular curve at uniform metric arclength, normalizing the
/// velocity to unit speed and the acceleration to ∇_T T.
pub fn reparametrize_by_arclength(
    chart: &MetricChart,
    curve: &DiscreteCurve,
) -> Result<DiscreteCurve, FeffermanError> {
    let cum = curve.cumulative_arclength(chart)?;
    let total = *cum.last().unwrap();
    let n = curve.len();
    let ts = curve.times();

    let speed_at = |t: f64| -> Result<f64, FeffermanError> {
        let s = curve.state_at(t);
        let g = chart.metric(&s.x)?;
        Ok(metric_dot(&g, &s.v, &s.v).sqrt())
    };

    let mut out_states = Vec::with_capacity(n);
    let mut out_s = Vec::with_capacity(n);
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        let t = if k == 0 {
            ts[0]
        } else if k == n - 1 {
            ts[n - 1]
        } else {
            // Bracket by the cumulative table, then Newton on the local
            // Hermite model of s(t).
            let seg = cum.partition_point(|&s| s < target).clamp(1, n - 1);
            let (ta, tb) = (ts[seg - 1], ts[seg]);
            let (sa, sb) = (cum[seg - 1], cum[seg]);
            let mut t = ta + (tb - ta) * (target - sa) / (sb - sa);
            for _ in 0..4 {
                // Simpson estimate of s(t) - target over [ta, t].
                let mid = 0.5 * (ta + t);
                let est = sa
                    + (t - ta) / 6.0 * (speed_at(ta)? + 4.0 * speed_at(mid)? + speed_at(t)?)
                    - target;
                let dsdt = speed_at(t)?.max(1e-12);
                t -= est / dsdt;
                t = t.clamp(ta, tb);
            }
            t
        };
        let s = curve.state_at(t);
        let g = chart.metric(&s.x)?;
        let v2 = metric_dot(&g, &s.v, &s.v);
        let speed = v2.sqrt();
        if speed < 1e-12 {
            return Err(FeffermanError::Curve(CurveError::NotRegular(k, speed)));
        }
        let tvec = s.v / speed;
        let va = metric_dot(&g, &s.v, &s.a);
        let acc = s.a / v2 - va / (v2 * v2) * s.v;
        out_states.push(CurveState {
            x: s.x,
            v: tvec,
            a: acc,
        });
        out_s.push(target);
    }
    Ok(DiscreteCurve::new(out_s, out_states)?)
}

#[cfg(test)]
mod tests;
