//! Builtin metric charts and conformal factor shapes.
//!
//! Every chart comes with closed-form first and second metric partials so the
//! analytic derivative mode works out of the box; switch with
//! [`MetricChart::into_difference_mode`] when exercising the stencil path.

use crate::chart::{BoxDomain, ChartError, MetricChart, ScalarField};
use crate::linalg::{Mat3, Vec3};

/// Flat metric on (-8, 8)^3.
pub fn euclidean() -> MetricChart {
    MetricChart::new_analytic(
        "euclidean",
        BoxDomain::cube(8.0),
        |_| Mat3::identity(),
        |_| [Mat3::zeros(); 3],
        |_| [[Mat3::zeros(); 3]; 3],
    )
}

/// Constant sectional curvature +k in the conformal chart
/// g = 4 / (1 + k |x|^2)^2 δ.
pub fn round_sphere(k: f64) -> MetricChart {
    assert!(k > 0.0, "round_sphere needs k > 0");
    constant_curvature_chart(format!("round_sphere(k={k})"), k, BoxDomain::cube(2.0))
}

/// Constant sectional curvature -k in the conformal chart
/// g = 4 / (1 - k |x|^2)^2 δ, restricted to a box inside the unit ball.
pub fn hyperbolic(k: f64) -> MetricChart {
    assert!(k > 0.0, "hyperbolic needs k > 0");
    let half_width = 0.5 / (3.0 * k).sqrt().max(1.0);
    constant_curvature_chart(
        format!("hyperbolic(k={k})"),
        -k,
        BoxDomain::cube(half_width),
    )
}

fn constant_curvature_chart(name: String, k: f64, domain: BoxDomain) -> MetricChart {
    let lambda = move |x: &Vec3| {
        let q = 1.0 + k * x.norm_squared();
        4.0 / (q * q)
    };
    let dlambda = move |x: &Vec3| {
        let q = 1.0 + k * x.norm_squared();
        -16.0 * k / (q * q * q) * x
    };
    let d2lambda = move |x: &Vec3| {
        let q = 1.0 + k * x.norm_squared();
        let mut h = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let kron = if i == j { 1.0 } else { 0.0 };
                h[(i, j)] = -16.0 * k * (kron / (q * q * q) - 6.0 * k * x[i] * x[j] / (q * q * q * q));
            }
        }
        h
    };
    MetricChart::new_analytic(
        name,
        domain,
        move |x| lambda(x) * Mat3::identity(),
        move |x| {
            let d = dlambda(x);
            [
                d.x * Mat3::identity(),
                d.y * Mat3::identity(),
                d.z * Mat3::identity(),
            ]
        },
        move |x| {
            let h = d2lambda(x);
            let mut out = [[Mat3::zeros(); 3]; 3];
            for k in 0..3 {
                for l in 0..3 {
                    out[k][l] = h[(k, l)] * Mat3::identity();
                }
            }
            out
        },
    )
}

/// Nil (Heisenberg) geometry g = dx^2 + dy^2 + (dz - x dy)^2.
pub fn nil() -> MetricChart {
    MetricChart::new_analytic(
        "nil",
        BoxDomain::cube(4.0),
        |x| {
            Mat3::new(
                1.0,
                0.0,
                0.0,
                0.0,
                1.0 + x.x * x.x,
                -x.x,
                0.0,
                -x.x,
                1.0,
            )
        },
        |x| {
            let d1 = Mat3::new(0.0, 0.0, 0.0, 0.0, 2.0 * x.x, -1.0, 0.0, -1.0, 0.0);
            [d1, Mat3::zeros(), Mat3::zeros()]
        },
        |_| {
            let mut out = [[Mat3::zeros(); 3]; 3];
            out[0][0] = Mat3::new(0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0);
            out
        },
    )
}

/// Υ(x) = c · x.
pub fn upsilon_linear(c: Vec3) -> ScalarField {
    ScalarField::with_derivatives(move |x| c.dot(x), move |_| c, |_| Mat3::zeros())
}

/// Υ(x) = (a/2) |x|^2 + c · x.
pub fn upsilon_quadratic(a: f64, c: Vec3) -> ScalarField {
    ScalarField::with_derivatives(
        move |x| 0.5 * a * x.norm_squared() + c.dot(x),
        move |x| a * x + c,
        move |_| a * Mat3::identity(),
    )
}

/// Υ(x) = a sin(k · x).
pub fn upsilon_sinusoidal(a: f64, k: Vec3) -> ScalarField {
    ScalarField::with_derivatives(
        move |x| a * k.dot(x).sin(),
        move |x| a * k.dot(x).cos() * k,
        move |x| {
            let s = -a * k.dot(x).sin();
            let mut h = Mat3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    h[(i, j)] = s * k[i] * k[j];
                }
            }
            h
        },
    )
}

/// Names accepted by [`build`], in listing order.
pub fn all_names() -> &'static [&'static str] {
    &["euclidean", "round_sphere", "hyperbolic", "nil"]
}

/// One-line description per registry name, for CLI listings.
pub fn describe(name: &str) -> Option<&'static str> {
    match name {
        "euclidean" => Some("flat metric; no parameters"),
        "round_sphere" => Some("constant curvature +k conformal chart; params: [k] (default 1)"),
        "hyperbolic" => Some("constant curvature -k conformal chart; params: [k] (default 1)"),
        "nil" => Some("Heisenberg metric dx^2 + dy^2 + (dz - x dy)^2; no parameters"),
        _ => None,
    }
}

/// Build a chart by registry name. `params` is positional; charts without
/// parameters reject a non-empty list.
pub fn build(name: &str, params: &[f64]) -> Result<MetricChart, ChartError> {
    let no_params = |chart: MetricChart| {
        if params.is_empty() {
            Ok(chart)
        } else {
            Err(ChartError::InvalidInput(format!(
                "metric '{name}' takes no parameters, got {}",
                params.len()
            )))
        }
    };
    let curvature_param = || -> Result<f64, ChartError> {
        match params {
            [] => Ok(1.0),
            [k] if *k > 0.0 => Ok(*k),
            [k] => Err(ChartError::InvalidInput(format!(
                "metric '{name}' needs a positive curvature parameter, got {k}"
            ))),
            _ => Err(ChartError::InvalidInput(format!(
                "metric '{name}' takes at most one parameter, got {}",
                params.len()
            ))),
        }
    };
    match name {
        "euclidean" => no_params(euclidean()),
        "round_sphere" => Ok(round_sphere(curvature_param()?)),
        "hyperbolic" => Ok(hyperbolic(curvature_param()?)),
        "nil" => no_params(nil()),
        _ => Err(ChartError::InvalidInput(format!(
            "unknown metric '{name}'; known: {}",
            all_names().join(", ")
        ))),
    }
}

/// Build one of the named conformal factor shapes: `linear`, `quadratic`,
/// `sinusoidal`. Parameter layout: linear takes `[c1 c2 c3]`, quadratic
/// `[a c1 c2 c3]`, sinusoidal `[a k1 k2 k3]`.
pub fn build_upsilon(kind: &str, params: &[f64]) -> Result<ScalarField, ChartError> {
    match (kind, params) {
        ("linear", [c1, c2, c3]) => Ok(upsilon_linear(Vec3::new(*c1, *c2, *c3))),
        ("quadratic", [a, c1, c2, c3]) => Ok(upsilon_quadratic(*a, Vec3::new(*c1, *c2, *c3))),
        ("sinusoidal", [a, k1, k2, k3]) => Ok(upsilon_sinusoidal(*a, Vec3::new(*k1, *k2, *k3))),
        ("linear" | "quadratic" | "sinusoidal", _) => Err(ChartError::InvalidInput(format!(
            "wrong parameter count for upsilon '{kind}' (linear: 3, quadratic: 4, sinusoidal: 4)"
        ))),
        _ => Err(ChartError::InvalidInput(format!(
            "unknown upsilon '{kind}'; known: linear, quadratic, sinusoidal"
        ))),
    }
}
