//! Total torsion, the Kropina length, the torsion gradient density and the
//! finite-difference variational tests built on them.
//!
//! The total torsion of a curve with endpoint frames `A`, `B` is the angle of
//! the composition `h⁻¹ ∘ P`, where `h` identifies the normal planes through
//! the frames and `P` is parallel transport in the normal bundle. Two
//! independent evaluations are provided: the transported-frame monodromy
//! angle, and the integral `-∫ g(∇_ẋμ, T×μ) dt` of an explicitly constructed
//! smooth normal field `μ` plus the endpoint correction `∠(h(μ_a), μ_b)`.

use crate::chart::MetricChart;
use crate::curve::{simpson, CurveState, DiscreteCurve};
use crate::frame::{
    self, frame_velocity, Frame, FrameError, SectionFrames,
};
use crate::geom::{angle_difference, wrap_angle};
use crate::linalg::{metric_dot, Mat3, Vec3};
use crate::tensor::{self, PointGeometry};

/// Both evaluations of the total torsion, each in (-π, π].
#[derive(Clone, Copy, Debug)]
pub struct TotalTorsion {
    /// Monodromy-vs-transport angle; the canonical value.
    pub monodromy: f64,
    /// Independent integral evaluation.
    pub integral: f64,
}

impl TotalTorsion {
    pub fn value(&self) -> f64 {
        self.monodromy
    }

    /// |monodromy - integral| mod 2π.
    pub fn agreement(&self) -> f64 {
        angle_difference(self.monodromy, self.integral).abs()
    }
}

fn check_endpoint_frame(
    chart: &MetricChart,
    frame: &Frame,
    state: &CurveState,
) -> Result<(), FrameError> {
    let g = chart.metric(&state.x)?;
    let (tvec, _) = frame::unit_tangent_data(&g, state);
    let res = (frame.column(2) - tvec).norm().max((frame.x - state.x).norm());
    if res > 1e-6 {
        return Err(FrameError::TangentMismatch(res));
    }
    Ok(())
}

/// Total torsion of `curve` with respect to oriented orthonormal endpoint
/// frames whose third vectors follow the curve tangent.
pub fn total_torsion(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    frame_a: &Frame,
    frame_b: &Frame,
) -> Result<TotalTorsion, FrameError> {
    let n = curve.len();
    check_endpoint_frame(chart, frame_a, curve.state(0))?;
    check_endpoint_frame(chart, frame_b, curve.state(n - 1))?;

    // Monodromy route: transport the first frame vector and read it in B.
    let transported = frame::normal_transport(chart, curve, &frame_a.column(0))?;
    let nu_b = transported[n - 1];
    let g_b = chart.metric(&curve.state(n - 1).x)?;
    let monodromy = metric_dot(&g_b, &nu_b, &frame_b.column(1))
        .atan2(metric_dot(&g_b, &nu_b, &frame_b.column(0)));

    // Integral route: smooth explicit normal field from a fixed coordinate
    // direction, differentiated by stencils.
    let integral = integral_torsion(chart, curve, frame_a, frame_b)?;

    Ok(TotalTorsion {
        monodromy: wrap_angle(monodromy),
        integral,
    })
}

fn integral_torsion(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    frame_a: &Frame,
    frame_b: &Frame,
) -> Result<f64, FrameError> {
    let n = curve.len();

    // Choose the coordinate direction whose normal projection stays farthest
    // from degenerate along the whole curve.
    let mut best_dir = None;
    let mut best_min = 0.0f64;
    for k in 0..3 {
        let mut w = Vec3::zeros();
        w[k] = 1.0;
        let mut min_norm = f64::INFINITY;
        for s in curve.states() {
            let g = chart.metric(&s.x)?;
            let (tvec, _) = frame::unit_tangent_data(&g, s);
            let proj = w - metric_dot(&g, &w, &tvec) * tvec;
            min_norm = min_norm.min(metric_dot(&g, &proj, &proj).sqrt());
        }
        if min_norm > best_min {
            best_min = min_norm;
            best_dir = Some(w);
        }
    }
    let w = best_dir.filter(|_| best_min > 0.05).ok_or(FrameError::NoSmoothNormal)?;

    let mut mu = Vec::with_capacity(n);
    for s in curve.states() {
        let g = chart.metric(&s.x)?;
        let (tvec, _) = frame::unit_tangent_data(&g, s);
        let proj = w - metric_dot(&g, &w, &tvec) * tvec;
        mu.push(proj / metric_dot(&g, &proj, &proj).sqrt());
    }

    let mudot = frame::grid_derivative(curve.times(), &mu);
    let mut integrand = Vec::with_capacity(n);
    for (i, s) in curve.states().iter().enumerate() {
        let g = chart.metric(&s.x)?;
        let gamma = tensor::christoffel(chart, &s.x)?;
        let (tvec, _) = frame::unit_tangent_data(&g, s);
        let nabla_mu = mudot[i] + tensor::gamma_apply(&gamma, &s.v, &mu[i]);
        let t_cross_mu = tensor::cross(chart, &s.x, &tvec, &mu[i])?;
        integrand.push(metric_dot(&g, &nabla_mu, &t_cross_mu));
    }
    let h = curve.t(1) - curve.t(0);
    let rotation = -simpson(h, &integrand);

    // Endpoint correction: angle from h(μ_a) to μ_b in the oriented normal
    // plane at the far end.
    let g_a = chart.metric(&curve.state(0).x)?;
    let p = metric_dot(&g_a, &mu[0], &frame_a.column(0));
    let q = metric_dot(&g_a, &mu[0], &frame_a.column(1));
    let h_mu_a = p * frame_b.column(0) + q * frame_b.column(1);

    let s_b = curve.state(n - 1);
    let g_b = chart.metric(&s_b.x)?;
    let (t_b, _) = frame::unit_tangent_data(&g_b, s_b);
    let t_cross = tensor::cross(chart, &s_b.x, &t_b, &h_mu_a)?;
    let offset = metric_dot(&g_b, &t_cross, &mu[n - 1]).atan2(metric_dot(&g_b, &h_mu_a, &mu[n - 1]));

    Ok(wrap_angle(rotation + offset))
}

/// Torsion of a Frenet-regular curve state,
/// `τ = det(ẋ, ∇_ẋẋ, ∇_ẋ∇_ẋẋ) / |ẋ × ∇_ẋẋ|²` (metric volume and norms).
pub fn torsion_function(
    chart: &MetricChart,
    state: &CurveState,
    jerk: &Vec3,
) -> Result<f64, FrameError> {
    let g = chart.metric(&state.x)?;
    let va = tensor::cross(chart, &state.x, &state.v, &state.a)?;
    let denom = metric_dot(&g, &va, &va);
    if denom.sqrt() < 1e-10 {
        return Err(FrameError::VanishingCurvature(denom.sqrt()));
    }
    Ok(metric_dot(&g, &va, jerk) / denom)
}

/// Kropina length of an arbitrary frame path over the curve:
/// `∫ G^F(γ̇, γ̇) / G^F(K, γ̇) dt` with `G^F(K, γ̇) = φ³(γ̇)`.
pub fn kropina_length_of_frame_path(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    frames: &[Frame],
) -> Result<f64, FrameError> {
    let n = curve.len();
    if frames.len() != n {
        return Err(FrameError::SectionLengthMismatch(frames.len(), n));
    }
    let cols: [Vec<Vec3>; 3] = [
        frames.iter().map(|f| f.column(0)).collect(),
        frames.iter().map(|f| f.column(1)).collect(),
        frames.iter().map(|f| f.column(2)).collect(),
    ];
    let dcols: [Vec<Vec3>; 3] = [
        frame::grid_derivative(curve.times(), &cols[0]),
        frame::grid_derivative(curve.times(), &cols[1]),
        frame::grid_derivative(curve.times(), &cols[2]),
    ];
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let mut bdot = Mat3::zeros();
        for c in 0..3 {
            bdot.set_column(c, &dcols[c][i]);
        }
        let fv = frame_velocity(chart, &frames[i], &curve.state(i).v, &bdot)?;
        let denom = fv.phi.z;
        if denom.abs() < 1e-10 {
            return Err(FrameError::TangentMismatch(denom.abs()));
        }
        values.push(frame::g_f(&fv, &fv) / denom);
    }
    let h = curve.t(1) - curve.t(0);
    Ok(simpson(h, &values))
}

/// The Kropina functional of a curve for a tangent-aligned section:
/// `𝓛 = 2 ∫ ω³(s_* ẋ̃) dt`, evaluated as the Kropina length of the section
/// path. Equals twice the total torsion with the section endpoint frames,
/// mod 2π.
pub fn kropina_functional(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    section: &SectionFrames,
) -> Result<f64, FrameError> {
    check_endpoint_frame(chart, section.first(), curve.state(0))?;
    check_endpoint_frame(chart, section.last(), curve.state(curve.len() - 1))?;
    kropina_length_of_frame_path(chart, curve, &section.frames)
}

/// ∇_T ∇_T T re-expressed through the raw 2-jet plus the jerk.
fn arc_second_derivative(g: &Mat3, state: &CurveState, jerk: &Vec3) -> Vec3 {
    let u = metric_dot(g, &state.v, &state.v);
    let w = metric_dot(g, &state.v, &state.a);
    let wdot = metric_dot(g, &state.a, &state.a) + metric_dot(g, &state.v, jerk);
    (jerk / u - 3.0 * w / (u * u) * state.a
        + (4.0 * w * w / (u * u * u) - wdot / (u * u)) * state.v)
        / u.sqrt()
}

/// (*R)(T) T where *R is the Hodge dual of the curvature 2-form,
/// `(*R)_i{}^k{}_l = (1/2) ε_i^{pq} R_pq{}^k{}_l`.
fn star_r_apply(chart: &MetricChart, x: &Vec3, t: &Vec3) -> Result<Vec3, FrameError> {
    let riem = tensor::riemann(chart, x)?;
    let eps = tensor::volume_eps(chart, x)?;
    let ginv = chart.inverse_metric(x)?;

    // ε_m^{pq} = g^{pi} g^{qj} ε_mij
    let mut eps_up = [[[0.0; 3]; 3]; 3];
    for m in 0..3 {
        for p in 0..3 {
            for q in 0..3 {
                let mut acc = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        acc += ginv[(p, i)] * ginv[(q, j)] * eps[m][i][j];
                    }
                }
                eps_up[m][p][q] = acc;
            }
        }
    }

    // lower_al = (1/2) ε_m^{pq} R_pqal T^m T^l, then raise the middle index.
    let mut lower = Vec3::zeros();
    for a in 0..3 {
        let mut acc = 0.0;
        for m in 0..3 {
            for l in 0..3 {
                let mut inner = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        inner += eps_up[m][p][q] * riem[p][q][a][l];
                    }
                }
                acc += 0.5 * inner * t[m] * t[l];
            }
        }
        lower[a] = acc;
    }
    Ok(ginv * lower)
}

/// Gradient density of the total torsion functional,
/// `T × ∇_T∇_T T + (*R)(T) T`; conformal geodesics are its zero set.
pub fn torsion_gradient(
    chart: &MetricChart,
    state: &CurveState,
    jerk: &Vec3,
) -> Result<Vec3, FrameError> {
    let g = chart.metric(&state.x)?;
    let tvec = state.v / metric_dot(&g, &state.v, &state.v).sqrt();
    let d2 = arc_second_derivative(&g, state, jerk);
    let first = tensor::cross(chart, &state.x, &tvec, &d2)?;
    Ok(first + star_r_apply(chart, &state.x, &tvec)?)
}

/// The same density written through the Schouten tensor,
/// `T × (∇_T∇_T T - P(T))`.
pub fn torsion_gradient_schouten_form(
    chart: &MetricChart,
    state: &CurveState,
    jerk: &Vec3,
) -> Result<Vec3, FrameError> {
    let geo = PointGeometry::at(chart, &state.x)?;
    let tvec = state.v / metric_dot(&geo.metric, &state.v, &state.v).sqrt();
    let d2 = arc_second_derivative(&geo.metric, state, jerk);
    Ok(tensor::cross(
        chart,
        &state.x,
        &tvec,
        &(d2 - geo.schouten_raised(&tvec)),
    )?)
}

/// A coordinate-direction perturbation shaped by a C² bump vanishing to
/// first order at both endpoints, so endpoint 1-jets are fixed exactly.
#[derive(Clone, Copy, Debug)]
pub struct Perturbation {
    pub direction: Vec3,
    pub profile: usize,
}

impl Perturbation {
    /// `(V, V̇, V̈)` at parameter `t` for a curve over `span`.
    pub fn eval(&self, t: f64, span: (f64, f64)) -> (Vec3, Vec3, Vec3) {
        let len = span.1 - span.0;
        let s = (t - span.0) / len;
        let (p, dp, ddp) = bump_profile(self.profile, s);
        (
            p * self.direction,
            dp / len * self.direction,
            ddp / (len * len) * self.direction,
        )
    }
}

/// Bump profiles on [0,1]: sin²(πs) times {1, sin(πs), sin(2πs), cos(πs)}.
/// All vanish with their first derivative at both ends.
fn bump_profile(kind: usize, x: f64) -> (f64, f64, f64) {
    use std::f64::consts::PI;
    let s = (PI * x).sin();
    let c = (PI * x).cos();
    let s2 = (2.0 * PI * x).sin();
    let c2 = (2.0 * PI * x).cos();
    match kind {
        0 => (s * s, PI * s2, 2.0 * PI * PI * c2),
        1 => (s * s * s, 3.0 * PI * s * s * c, 3.0 * PI * PI * s * (2.0 * c * c - s * s)),
        2 => (
            s * s * s2,
            PI * (s2 * s2 + 2.0 * s * s * c2),
            PI * PI * (6.0 * s2 * c2 - 4.0 * s * s * s2),
        ),
        3 => (
            s * s * c,
            PI * s * (2.0 * c * c - s * s),
            PI * PI * c * (2.0 * c * c - 7.0 * s * s),
        ),
        _ => panic!("unknown bump profile {kind}"),
    }
}

/// Twelve perturbations: three coordinate directions times four bump shapes.
pub fn default_perturbation_basis() -> Vec<Perturbation> {
    let mut out = Vec::with_capacity(12);
    for dir in 0..3 {
        let mut direction = Vec3::zeros();
        direction[dir] = 1.0;
        for profile in 0..4 {
            out.push(Perturbation { direction, profile });
        }
    }
    out
}

/// Displace a curve by `eps * V`, rebuilding velocity and covariant
/// acceleration consistently with the chart at the displaced positions.
pub fn perturbed_curve(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    pert: &Perturbation,
    eps: f64,
) -> Result<DiscreteCurve, FrameError> {
    let span = curve.t_span();
    let mut states = Vec::with_capacity(curve.len());
    for (i, s) in curve.states().iter().enumerate() {
        let t = curve.t(i);
        let (v_bump, vd_bump, vdd_bump) = pert.eval(t, span);
        let gamma_old = tensor::christoffel(chart, &s.x)?;
        let coord_accel = s.a - tensor::gamma_apply(&gamma_old, &s.v, &s.v);

        let x_new = s.x + eps * v_bump;
        let v_new = s.v + eps * vd_bump;
        let coord_accel_new = coord_accel + eps * vdd_bump;
        let gamma_new = tensor::christoffel(chart, &x_new)?;
        let a_new = coord_accel_new + tensor::gamma_apply(&gamma_new, &v_new, &v_new);
        states.push(CurveState {
            x: x_new,
            v: v_new,
            a: a_new,
        });
    }
    Ok(DiscreteCurve::new(curve.times().to_vec(), states)?)
}

/// Options for [`variational_check`].
#[derive(Clone, Debug)]
pub struct VariationalOptions {
    pub epsilon: f64,
    pub basis: Vec<Perturbation>,
    /// so(3) axis (as a vector) of the vertical frame perturbation.
    pub vertical_axis: Vec3,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        VariationalOptions {
            epsilon: 1e-3,
            basis: default_perturbation_basis(),
            vertical_axis: Vec3::new(0.6, -0.48, 0.64),
        }
    }
}

/// Values and finite-difference derivatives of the torsion and Kropina
/// functionals over a perturbation basis.
#[derive(Clone, Debug)]
pub struct FunctionalReport {
    /// Kropina functional of the transported section.
    pub value_l: f64,
    /// Total torsion (monodromy value) with the section endpoint frames.
    pub value_t: f64,
    /// |𝓛 - 2𝓣| mod 2π.
    pub l_vs_2t: f64,
    /// |monodromy - integral| of the torsion evaluations, mod 2π.
    pub torsion_agreement: f64,
    /// d𝓣/dε per basis member (central differences).
    pub grad: Vec<f64>,
    /// ∫ g(gradient density, V) |ẋ| dt per basis member.
    pub gradient_integral: Vec<f64>,
    /// Kropina-length derivative under the vertical frame perturbation.
    pub vertical_kropina_derivative: f64,
    pub frame_a: Frame,
    pub frame_b: Frame,
}

impl FunctionalReport {
    pub fn max_abs_grad(&self) -> f64 {
        self.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()))
    }

    /// Worst relative mismatch between the finite-difference derivative and
    /// the gradient-density integral, measured against the larger scale.
    pub fn max_gradient_mismatch(&self, floor: f64) -> f64 {
        self.grad
            .iter()
            .zip(&self.gradient_integral)
            .map(|(fd, int)| (fd - int).abs() / fd.abs().max(int.abs()).max(floor))
            .fold(0.0f64, f64::max)
    }
}

/// Central finite differences of the total torsion over endpoint-fixing
/// perturbations, the matching gradient-density integrals, and the vertical
/// Kropina variation.
pub fn variational_check(
    chart: &MetricChart,
    curve: &DiscreteCurve,
    options: &VariationalOptions,
) -> Result<FunctionalReport, FrameError> {
    let n = curve.len();
    let seed = frame::default_normal_seed(chart, curve)?;
    let section = frame::section_from_transport(chart, curve, &seed)?;
    let frame_a = *section.first();
    let frame_b = *section.last();

    let tt = total_torsion(chart, curve, &frame_a, &frame_b)?;
    let value_l = kropina_functional(chart, curve, &section)?;

    // Gradient density along the unperturbed curve; jerks from grid stencils
    // of the stored accelerations.
    let accels: Vec<Vec3> = curve.states().iter().map(|s| s.a).collect();
    let adots = frame::grid_derivative(curve.times(), &accels);
    let mut density = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    for (i, s) in curve.states().iter().enumerate() {
        let gamma = tensor::christoffel(chart, &s.x)?;
        let jerk = adots[i] + tensor::gamma_apply(&gamma, &s.v, &s.a);
        density.push(torsion_gradient(chart, s, &jerk)?);
        let g = chart.metric(&s.x)?;
        speeds.push(metric_dot(&g, &s.v, &s.v).sqrt());
    }

    let h = curve.t(1) - curve.t(0);
    let span = curve.t_span();
    let mut grad = Vec::with_capacity(options.basis.len());
    let mut gradient_integral = Vec::with_capacity(options.basis.len());
    for pert in &options.basis {
        let plus = perturbed_curve(chart, curve, pert, options.epsilon)?;
        let minus = perturbed_curve(chart, curve, pert, -options.epsilon)?;
        let t_plus = total_torsion(chart, &plus, &frame_a, &frame_b)?.monodromy;
        let t_minus = total_torsion(chart, &minus, &frame_a, &frame_b)?.monodromy;
        grad.push(angle_difference(t_plus, t_minus) / (2.0 * options.epsilon));

        let mut integrand = Vec::with_capacity(n);
        for i in 0..n {
            let g = chart.metric(&curve.state(i).x)?;
            let (v_bump, _, _) = pert.eval(curve.t(i), span);
            integrand.push(metric_dot(&g, &density[i], &v_bump) * speeds[i]);
        }
        gradient_integral.push(simpson(h, &integrand));
    }

    // Vertical variation of the Kropina length: rotate the section frames by
    // a bump-shaped so(3) element vanishing at the endpoints.
    let vertical_kropina_derivative = {
        let rotate = |eps: f64| -> Result<Vec<Frame>, FrameError> {
            let mut frames = Vec::with_capacity(n);
            for (i, f) in section.frames.iter().enumerate() {
                let s = (curve.t(i) - span.0) / (span.1 - span.0);
                let (psi, _, _) = bump_profile(0, s);
                let rot =
                    nalgebra::Rotation3::from_scaled_axis(eps * psi * options.vertical_axis);
                frames.push(Frame {
                    x: f.x,
                    basis: f.basis * rot.into_inner(),
                });
            }
            Ok(frames)
        };
        let l_plus = kropina_length_of_frame_path(chart, curve, &rotate(options.epsilon)?)?;
        let l_minus = kropina_length_of_frame_path(chart, curve, &rotate(-options.epsilon)?)?;
        (l_plus - l_minus) / (2.0 * options.epsilon)
    };

    Ok(FunctionalReport {
        value_l,
        value_t: tt.monodromy,
        l_vs_2t: angle_difference(value_l, 2.0 * tt.monodromy).abs(),
        torsion_agreement: tt.agreement(),
        grad,
        gradient_integral,
        vertical_kropina_derivative,
        frame_a,
        frame_b,
    })
}

#[cfg(test)]
mod tests;
