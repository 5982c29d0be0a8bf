//! The conformal geodesic ODE: right-hand side, fixed-step integration and
//! samplewise testing of the unparametrized equation.
//!
//! The third-order equation solved for the jerk reads
//!
//! ```text
//! ∇_ẋ∇_ẋẋ = (3 g(ẋ,a)/|ẋ|²) a - (3 |a|²/(2 |ẋ|²)) ẋ - 2 P(ẋ,ẋ) ẋ + |ẋ|² P(ẋ)
//! ```
//!
//! with `a = ∇_ẋẋ`. Its solutions carry a distinguished (projective)
//! parametrization; the unparametrized conformal geodesic equation drops the
//! components along ẋ and is encoded here by the cross-product residual of
//! [`unparam_residual`], which vanishes exactly on reparametrized solutions.

use thiserror::Error;

use crate::chart::{ChartError, MetricChart, ScalarField};
use crate::curve::{CurveError, CurveState, DiscreteCurve};
use crate::linalg::{metric_dot, Vec3};
use crate::tensor::{self, PointGeometry};

/// Speeds below this are treated as a degenerate (non-regular) curve state.
pub const VELOCITY_COLLAPSE: f64 = 1e-8;
/// Default integrator step.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("zero or collapsing velocity (|v| = {0:.3e})")]
    ZeroVelocity(f64),
    #[error("integration produced fewer than two samples before truncation")]
    NothingIntegrated,
    #[error("invalid time span or step: {0}")]
    BadSpan(String),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveStatus {
    Completed,
    LeftDomain { at_t: f64 },
    VelocityCollapse { at_t: f64 },
}

/// Integrated curve plus the termination status.
#[derive(Clone, Debug)]
pub struct CgSolution {
    pub curve: DiscreteCurve,
    pub status: CurveStatus,
}

/// Jerk ∇_ẋ∇_ẋẋ solved from the conformal geodesic equation.
pub fn cg_rhs(chart: &MetricChart, state: &CurveState) -> Result<Vec3, ConformalError> {
    let geo = PointGeometry::at(chart, &state.x)?;
    Ok(cg_rhs_with(&geo, state)?)
}

fn cg_rhs_with(geo: &PointGeometry, state: &CurveState) -> Result<Vec3, ConformalError> {
    let g = &geo.metric;
    let v2 = metric_dot(g, &state.v, &state.v);
    if v2.sqrt() < VELOCITY_COLLAPSE {
        return Err(ConformalError::ZeroVelocity(v2.sqrt()));
    }
    let va = metric_dot(g, &state.v, &state.a);
    let a2 = metric_dot(g, &state.a, &state.a);
    let pvv = metric_dot(&geo.schouten, &state.v, &state.v);
    let pv = geo.schouten_raised(&state.v);
    Ok((3.0 * va / v2) * state.a - (1.5 * a2 / v2) * state.v - 2.0 * pvv * state.v + v2 * pv)
}

/// Coordinate-space derivative of the first-order reduction (x, v, a):
/// coordinate velocity, coordinate acceleration and coordinate derivative of
/// the covariant acceleration.
fn reduction_rhs(
    chart: &MetricChart,
    state: &CurveState,
) -> Result<(Vec3, Vec3, Vec3), ConformalError> {
    let geo = PointGeometry::at(chart, &state.x)?;
    let jerk = cg_rhs_with(&geo, state)?;
    let vdot = state.a - tensor::gamma_apply(&geo.gamma, &state.v, &state.v);
    let adot = jerk - tensor::gamma_apply(&geo.gamma, &state.v, &state.a);
    Ok((state.v, vdot, adot))
}

/// Classical fixed-step RK4 for the conformal geodesic equation. The step is
/// adjusted to divide the span exactly; leaving the chart domain truncates
/// the curve with a status instead of failing.
pub fn integrate_cg(
    chart: &MetricChart,
    initial: &CurveState,
    t_span: (f64, f64),
    step: f64,
) -> Result<CgSolution, ConformalError> {
    let (t0, t1) = t_span;
    if !(t1 > t0) || !(step > 0.0) {
        return Err(ConformalError::BadSpan(format!(
            "span ({t0}, {t1}) with step {step}"
        )));
    }
    let n_steps = ((t1 - t0) / step).round().max(1.0) as usize;
    let h = (t1 - t0) / n_steps as f64;

    let mut ts = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut state = *initial;
    let mut status = CurveStatus::Completed;

    // Reject initial data the equation cannot start from.
    reduction_rhs(chart, &state)?;
    ts.push(t0);
    states.push(state);

    'outer: for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        let step_result = (|| -> Result<CurveState, ConformalError> {
            let k1 = reduction_rhs(chart, &state)?;
            let s2 = advance(&state, &k1, 0.5 * h);
            let k2 = reduction_rhs(chart, &s2)?;
            let s3 = advance(&state, &k2, 0.5 * h);
            let k3 = reduction_rhs(chart, &s3)?;
            let s4 = advance(&state, &k3, h);
            let k4 = reduction_rhs(chart, &s4)?;
            Ok(CurveState {
                x: state.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                v: state.v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
                a: state.a + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
            })
        })();
        match step_result {
            Ok(next) => {
                if !chart.contains(&next.x) {
                    status = CurveStatus::LeftDomain { at_t: t };
                    break 'outer;
                }
                state = next;
                ts.push(t + h);
                states.push(state);
            }
            Err(ConformalError::Chart(ChartError::OutsideDomain(..))) => {
                status = CurveStatus::LeftDomain { at_t: t };
                break 'outer;
            }
            Err(ConformalError::ZeroVelocity(s)) if i > 0 => {
                let _ = s;
                status = CurveStatus::VelocityCollapse { at_t: t };
                break 'outer;
            }
            Err(e) => return Err(e),
        }
    }

    if ts.len() < 2 {
        return Err(ConformalError::NothingIntegrated);
    }
    Ok(CgSolution {
        curve: DiscreteCurve::new(ts, states)?,
        status,
    })
}

fn advance(s: &CurveState, k: &(Vec3, Vec3, Vec3), h: f64) -> CurveState {
    CurveState {
        x: s.x + h * k.0,
        v: s.v + h * k.1,
        a: s.a + h * k.2,
    }
}

/// Cross-product residual of the unparametrized conformal geodesic equation:
/// `ẋ × (j - (3 g(ẋ,a)/|ẋ|²) a - |ẋ|² P(ẋ))`, zero exactly when the curve can
/// be reparametrized into a solution of the third-order equation.
pub fn unparam_residual(
    chart: &MetricChart,
    state: &CurveState,
    jerk: &Vec3,
) -> Result<Vec3, ConformalError> {
    let geo = PointGeometry::at(chart, &state.x)?;
    let v2 = metric_dot(&geo.metric, &state.v, &state.v);
    if v2.sqrt() < VELOCITY_COLLAPSE {
        return Err(ConformalError::ZeroVelocity(v2.sqrt()));
    }
    let va = metric_dot(&geo.metric, &state.v, &state.a);
    let pv = geo.schouten_raised(&state.v);
    let inner = jerk - (3.0 * va / v2) * state.a - v2 * pv;
    Ok(tensor::cross(chart, &state.x, &state.v, &inner)?)
}

/// Samplewise test of the unparametrized equation with finite-difference
/// jerks. Endpoint samples (two on each side) are excluded from the
/// statistic. Returns `(is_geodesic, max residual)` where the residual is the
/// metric norm of the cross-product residual.
pub fn is_conformal_geodesic(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    tol: f64,
) -> Result<(bool, f64), ConformalError> {
    let n = curve.len();
    if n < 5 {
        return Err(ConformalError::Curve(CurveError::TooShort(5, n)));
    }
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let jerk = curve.fd_jerk(chart, i)?;
        let s = curve.state(i);
        let res = unparam_residual(chart, s, &jerk)?;
        let g = chart.metric(&s.x)?;
        worst = worst.max(metric_dot(&g, &res, &res).sqrt());
    }
    Ok((worst < tol, worst))
}

/// Map a 2-jet on `chart` to the matched 2-jet on the conformally rescaled
/// chart `e^{2Υ} g`: same position and velocity, acceleration corrected by
/// the conformal change of the Levi-Civita connection,
/// `â = a + 2 Υ'(ẋ) ẋ - |ẋ|²_g grad_g Υ`.
pub fn matched_rescaled_state(
    chart: &MetricChart,
    upsilon: &ScalarField,
    state: &CurveState,
) -> Result<CurveState, ConformalError> {
    let g = chart.metric(&state.x)?;
    let ginv = chart.inverse_metric(&state.x)?;
    let du = upsilon.gradient(&state.x)?;
    let v2 = metric_dot(&g, &state.v, &state.v);
    let a_hat = state.a + 2.0 * du.dot(&state.v) * state.v - v2 * (ginv * du);
    Ok(CurveState {
        x: state.x,
        v: state.v,
        a: a_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::conformal_rescale;
    use crate::geom;
    use crate::registry;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn euclidean_rhs_examples() {
        let chart = registry::euclidean();
        let straight = CurveState::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::zeros());
        assert!(cg_rhs(&chart, &straight).unwrap().norm() < 1e-15);

        let bent = CurveState::new(
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        assert_relative_eq!(
            cg_rhs(&chart, &bent).unwrap(),
            Vec3::new(-1.5, 0.0, 0.0),
            epsilon = 1e-14
        );
    }

    #[test]
    fn sphere_rhs_at_zero_acceleration() {
        // With a = 0 and P = g/2 the remaining terms are
        // -2 P(v,v) v + |v|^2 P(v) = -|v|^2 v + |v|^2 v / 2 = -v/2 for unit v.
        let chart = registry::round_sphere(1.0);
        let x = Vec3::zeros();
        let g = chart.metric(&x).unwrap();
        let v = Vec3::new(1.0, 0.0, 0.0) / g[(0, 0)].sqrt();
        let state = CurveState::new(x, v, Vec3::zeros());
        assert_relative_eq!(cg_rhs(&chart, &state).unwrap(), -0.5 * v, epsilon = 1e-10);
    }

    #[test]
    fn zero_velocity_is_rejected() {
        let chart = registry::euclidean();
        let state = CurveState::new(Vec3::zeros(), Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0));
        assert!(matches!(
            cg_rhs(&chart, &state),
            Err(ConformalError::ZeroVelocity(_))
        ));
    }

    #[test]
    fn straight_lines_stay_straight() {
        let chart = registry::euclidean();
        let initial = CurveState::new(
            Vec3::new(-1.0, 0.2, 0.0),
            Vec3::new(0.7, 0.1, -0.2),
            Vec3::zeros(),
        );
        let sol = integrate_cg(&chart, &initial, (0.0, 2.0), 1e-3).unwrap();
        assert_eq!(sol.status, CurveStatus::Completed);
        for (i, s) in sol.curve.states().iter().enumerate() {
            let t = sol.curve.t(i);
            assert!((s.x - (initial.x + t * initial.v)).norm() < 1e-12);
            assert!(s.a.norm() < 1e-12);
        }
    }

    #[test]
    fn euclidean_conformal_geodesics_are_circles() {
        let chart = registry::euclidean();
        let kappa = 0.8;
        let initial = CurveState::new(
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, kappa, 0.0),
        );
        let sol = integrate_cg(&chart, &initial, (0.0, 2.0 * PI), 1e-3).unwrap();
        assert_eq!(sol.status, CurveStatus::Completed);
        let pts = sol.curve.positions();
        let (circle, worst) = geom::fit_circle(&pts).unwrap();
        assert!(worst < 1e-6, "circle fit residual {worst}");
        assert_relative_eq!(circle.radius, 1.0 / kappa, epsilon = 1e-6);
        // Center is along the initial acceleration.
        assert!((circle.center - Vec3::new(0.0, 1.0 / kappa, 0.0)).norm() < 1e-6);

        // Every integrated state satisfies the unparametrized equation.
        let (ok, res) = is_conformal_geodesic(&chart, &sol.curve, 1e-6).unwrap();
        assert!(ok, "wedge residual {res}");
    }

    #[test]
    fn integration_truncates_at_domain_boundary() {
        let chart = registry::euclidean();
        let initial = CurveState::new(
            Vec3::new(7.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::zeros(),
        );
        let sol = integrate_cg(&chart, &initial, (0.0, 5.0), 1e-2).unwrap();
        assert!(matches!(sol.status, CurveStatus::LeftDomain { .. }));
        let (_, t_end) = sol.curve.t_span();
        assert!(t_end < 1.1);
    }

    #[test]
    fn conformal_invariance_of_traces() {
        // Same unparametrized circle from matched 2-jets on the flat chart
        // and a rescaled chart.
        let base = registry::euclidean();
        let ups = registry::upsilon_linear(Vec3::new(0.2, -0.1, 0.15));
        let rescaled = conformal_rescale(&base, &ups).unwrap();

        let initial = CurveState::new(
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        let matched = matched_rescaled_state(&base, &ups, &initial).unwrap();

        let sol_a = integrate_cg(&base, &initial, (0.0, 2.0 * PI), 1e-3).unwrap();
        let sol_b = integrate_cg(&rescaled, &matched, (0.0, 2.0 * PI), 1e-3).unwrap();

        let mut pts_a = sol_a.curve.positions();
        let mut pts_b = sol_b.curve.positions();
        let common = geom::chord_length(&pts_a).min(geom::chord_length(&pts_b));
        pts_a = geom::truncate_by_length(&pts_a, common);
        pts_b = geom::truncate_by_length(&pts_b, common);
        let d = geom::hausdorff_polyline(&pts_a, &pts_b);
        assert!(d < 1e-4, "Hausdorff distance {d}");
    }

    #[test]
    fn helix_residual_matches_closed_form() {
        // For the unit helix the wedge residual is (cos t, sin t, 0) exactly.
        let chart = registry::euclidean();
        for t in [0.0f64, 0.7, 2.0] {
            let state = CurveState::new(
                Vec3::new(t.cos(), t.sin(), t),
                Vec3::new(-t.sin(), t.cos(), 1.0),
                Vec3::new(-t.cos(), -t.sin(), 0.0),
            );
            let jerk = Vec3::new(t.sin(), -t.cos(), 0.0);
            let res = unparam_residual(&chart, &state, &jerk).unwrap();
            assert_relative_eq!(res, Vec3::new(t.cos(), t.sin(), 0.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn constant_speed_reduction() {
        // When g(ẋ, a) = 0 the residual reduces to ẋ × (j - |ẋ|² P(ẋ)).
        let chart = registry::round_sphere(1.0);
        let x = Vec3::new(0.1, 0.2, -0.1);
        let g = chart.metric(&x).unwrap();
        let v = Vec3::new(1.0, 0.0, 0.3);
        // Make a metric-orthogonal to v.
        let mut a = Vec3::new(0.0, 1.0, -0.4);
        a -= metric_dot(&g, &a, &v) / metric_dot(&g, &v, &v) * v;
        let state = CurveState::new(x, v, a);
        let jerk = Vec3::new(0.2, -0.3, 0.5);

        let res = unparam_residual(&chart, &state, &jerk).unwrap();
        let geo = PointGeometry::at(&chart, &x).unwrap();
        let v2 = metric_dot(&g, &v, &v);
        let reduced = tensor::cross(&chart, &x, &v, &(jerk - v2 * geo.schouten_raised(&v))).unwrap();
        assert_relative_eq!(res, reduced, epsilon = 1e-12);
    }

    #[test]
    fn helix_is_not_a_conformal_geodesic() {
        let chart = registry::euclidean();
        let curve = DiscreteCurve::from_fn(0.0, 2.0, 501, |t| CurveState {
            x: Vec3::new(t.cos(), t.sin(), t),
            v: Vec3::new(-t.sin(), t.cos(), 1.0),
            a: Vec3::new(-t.cos(), -t.sin(), 0.0),
        })
        .unwrap();
        let (ok, res) = is_conformal_geodesic(&chart, &curve, 1e-6).unwrap();
        assert!(!ok);
        assert!(res > 0.5, "helix residual should be O(1), got {res}");
    }

    #[test]
    fn residual_vanishing_is_parametrization_stable() {
        // Integrating at twice the sampling density keeps the wedge residual
        // at the conformal geodesic level.
        let chart = registry::nil();
        let initial = CurveState::new(
            Vec3::zeros(),
            Vec3::new(0.6, 0.5, 0.3),
            Vec3::new(0.0, 0.1, -0.2),
        );
        for step in [1e-3, 5e-4] {
            let sol = integrate_cg(&chart, &initial, (0.0, 1.0), step).unwrap();
            let (ok, res) = is_conformal_geodesic(&chart, &sol.curve, 1e-6).unwrap();
            assert!(ok, "step {step} residual {res}");
        }
    }

    #[test]
    fn flat_parallel_initial_data_stays_geodesic() {
        // With a = 0 and P(ẋ) = 0 along the flow the acceleration stays zero
        // (flat chart realizes the distinguished representative).
        let chart = registry::euclidean();
        let initial = CurveState::new(Vec3::zeros(), Vec3::new(0.3, 0.4, 0.5), Vec3::zeros());
        let sol = integrate_cg(&chart, &initial, (0.0, 3.0), 1e-3).unwrap();
        for s in sol.curve.states() {
            assert!(s.a.norm() < 1e-12);
        }
    }
}
