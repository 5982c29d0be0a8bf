//! Metric charts: a coordinate box together with a positive definite metric
//! and a strategy for its first and second coordinate derivatives.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{Mat3, Vec3};

/// Default step for first-derivative central differences.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Step used when differencing the Schouten tensor for the Cotton tensor in
/// analytic mode (the Schouten evaluation itself is exact there).
pub const COTTON_STEP_ANALYTIC: f64 = 1e-4;
/// Outer step for the nested third-derivative chain in difference mode; the
/// inner Schouten evaluations are themselves differenced, so the outer stencil
/// needs a larger step for conditioning.
pub const COTTON_STEP_DIFFERENCE: f64 = 1e-3;

type MetricFn = Arc<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;
type MetricGradFn = Arc<dyn Fn(&Vec3) -> [Mat3; 3] + Send + Sync>;
type MetricHessFn = Arc<dyn Fn(&Vec3) -> [[Mat3; 3]; 3] + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
type ScalarGradFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
type ScalarHessFn = Arc<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("point ({0:.6}, {1:.6}, {2:.6}) lies outside the chart domain")]
    OutsideDomain(f64, f64, f64),
    #[error("metric is not positive definite at ({0:.6}, {1:.6}, {2:.6})")]
    NotPositiveDefinite(f64, f64, f64),
    #[error("analytic derivative mode requested but no derivative callables were supplied")]
    MissingMetricDerivatives,
    #[error("scalar field lacks the analytic derivatives required by this chart")]
    MissingScalarDerivatives,
    #[error("{0}")]
    InvalidInput(String),
}

/// How coordinate derivatives of the metric components are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    /// User-supplied closed-form first and second partials.
    Analytic,
    /// Central differences of the metric closure with the given step.
    CentralDifference { step: f64 },
}

impl DerivativeMode {
    pub fn difference() -> Self {
        DerivativeMode::CentralDifference {
            step: DEFAULT_FD_STEP,
        }
    }

    /// Step used when differencing the Schouten tensor for Cotton.
    pub fn cotton_step(&self) -> f64 {
        match self {
            DerivativeMode::Analytic => COTTON_STEP_ANALYTIC,
            DerivativeMode::CentralDifference { .. } => COTTON_STEP_DIFFERENCE,
        }
    }
}

/// Open coordinate box.
#[derive(Clone, Copy, Debug)]
pub struct BoxDomain {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BoxDomain {
    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        assert!(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z, "empty box domain");
        BoxDomain { lo, hi }
    }

    /// Cube (-r, r)^3.
    pub fn cube(r: f64) -> Self {
        BoxDomain::new(Vec3::from_element(-r), Vec3::from_element(r))
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|i| self.lo[i] < x[i] && x[i] < self.hi[i])
    }
}

/// A scalar function with optional analytic gradient and Hessian, used as the
/// conformal factor exponent in rescalings.
#[derive(Clone)]
pub struct ScalarField {
    f: ScalarFn,
    grad: Option<ScalarGradFn>,
    hess: Option<ScalarHessFn>,
}

impl ScalarField {
    pub fn new(f: impl Fn(&Vec3) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            f: Arc::new(f),
            grad: None,
            hess: None,
        }
    }

    pub fn with_derivatives(
        f: impl Fn(&Vec3) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
        hess: impl Fn(&Vec3) -> Mat3 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            f: Arc::new(f),
            grad: Some(Arc::new(grad)),
            hess: Some(Arc::new(hess)),
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::with_derivatives(move |_| c, |_| Vec3::zeros(), |_| Mat3::zeros())
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        (self.f)(x)
    }

    pub fn has_derivatives(&self) -> bool {
        self.grad.is_some() && self.hess.is_some()
    }

    pub fn gradient(&self, x: &Vec3) -> Result<Vec3, ChartError> {
        match &self.grad {
            Some(g) => Ok(g(x)),
            None => Err(ChartError::MissingScalarDerivatives),
        }
    }

    pub fn hessian(&self, x: &Vec3) -> Result<Mat3, ChartError> {
        match &self.hess {
            Some(h) => Ok(h(x)),
            None => Err(ChartError::MissingScalarDerivatives),
        }
    }
}

/// A coordinate domain with metric component functions and their
/// evaluation/differentiation strategy.
///
/// The metric is checked for symmetry-positivity by a Cholesky factorization
/// at every evaluation; a failed factorization is an immediate error rather
/// than a NaN propagating downstream. Values are immutable after construction
/// and all evaluations are pure, so charts can be shared freely across
/// threads.
#[derive(Clone)]
pub struct MetricChart {
    name: String,
    domain: BoxDomain,
    metric: MetricFn,
    metric_grad: Option<MetricGradFn>,
    metric_hess: Option<MetricHessFn>,
    mode: DerivativeMode,
    orientation: f64,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl MetricChart {
    pub fn new_analytic(
        name: impl Into<String>,
        domain: BoxDomain,
        metric: impl Fn(&Vec3) -> Mat3 + Send + Sync + 'static,
        grad: impl Fn(&Vec3) -> [Mat3; 3] + Send + Sync + 'static,
        hess: impl Fn(&Vec3) -> [[Mat3; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        MetricChart {
            name: name.into(),
            domain,
            metric: Arc::new(metric),
            metric_grad: Some(Arc::new(grad)),
            metric_hess: Some(Arc::new(hess)),
            mode: DerivativeMode::Analytic,
            orientation: 1.0,
        }
    }

    pub fn new_difference(
        name: impl Into<String>,
        domain: BoxDomain,
        metric: impl Fn(&Vec3) -> Mat3 + Send + Sync + 'static,
        step: f64,
    ) -> Self {
        assert!(step > 0.0, "difference step must be positive");
        MetricChart {
            name: name.into(),
            domain,
            metric: Arc::new(metric),
            metric_grad: None,
            metric_hess: None,
            mode: DerivativeMode::CentralDifference { step },
            orientation: 1.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    /// +1 or -1; flips the sign of the volume form and everything built on it.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn with_orientation(mut self, sign: f64) -> Self {
        assert!(sign == 1.0 || sign == -1.0, "orientation must be +1 or -1");
        self.orientation = sign;
        self
    }

    /// Switch the chart to central differences with the given step, keeping
    /// the same metric closure.
    pub fn into_difference_mode(mut self, step: f64) -> Self {
        assert!(step > 0.0, "difference step must be positive");
        self.mode = DerivativeMode::CentralDifference { step };
        self.metric_grad = None;
        self.metric_hess = None;
        self.name = format!("{}(fd)", self.name);
        self
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.domain.contains(x)
    }

    fn check_domain(&self, x: &Vec3) -> Result<(), ChartError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(ChartError::OutsideDomain(x.x, x.y, x.z))
        }
    }

    /// Raw metric evaluation with the eager positive-definiteness check but
    /// without the domain check; difference stencils may poke slightly past
    /// the box edge.
    fn metric_raw(&self, x: &Vec3) -> Result<Mat3, ChartError> {
        let g = (self.metric)(x);
        if nalgebra::Cholesky::new(g).is_none() {
            return Err(ChartError::NotPositiveDefinite(x.x, x.y, x.z));
        }
        Ok(g)
    }

    pub fn metric(&self, x: &Vec3) -> Result<Mat3, ChartError> {
        self.check_domain(x)?;
        self.metric_raw(x)
    }

    pub fn inverse_metric(&self, x: &Vec3) -> Result<Mat3, ChartError> {
        let g = self.metric(x)?;
        // Cholesky succeeded, so the inverse exists.
        Ok(g.try_inverse().expect("positive definite metric is invertible"))
    }

    /// First partials dg[k] = d_k g_ij.
    pub fn metric_partials(&self, x: &Vec3) -> Result<[Mat3; 3], ChartError> {
        self.check_domain(x)?;
        match self.mode {
            DerivativeMode::Analytic => {
                let grad = self
                    .metric_grad
                    .as_ref()
                    .ok_or(ChartError::MissingMetricDerivatives)?;
                Ok(grad(x))
            }
            DerivativeMode::CentralDifference { step } => {
                let mut out = [Mat3::zeros(); 3];
                for (k, slot) in out.iter_mut().enumerate() {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[k] += step;
                    xm[k] -= step;
                    *slot = (self.metric_raw(&xp)? - self.metric_raw(&xm)?) / (2.0 * step);
                }
                Ok(out)
            }
        }
    }

    /// Second partials d2g[k][l] = d_k d_l g_ij.
    pub fn metric_second_partials(&self, x: &Vec3) -> Result<[[Mat3; 3]; 3], ChartError> {
        self.check_domain(x)?;
        match self.mode {
            DerivativeMode::Analytic => {
                let hess = self
                    .metric_hess
                    .as_ref()
                    .ok_or(ChartError::MissingMetricDerivatives)?;
                Ok(hess(x))
            }
            DerivativeMode::CentralDifference { step } => {
                let g0 = self.metric_raw(x)?;
                let mut out = [[Mat3::zeros(); 3]; 3];
                for k in 0..3 {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[k] += step;
                    xm[k] -= step;
                    out[k][k] =
                        (self.metric_raw(&xp)? - 2.0 * g0 + self.metric_raw(&xm)?) / (step * step);
                }
                for k in 0..3 {
                    for l in (k + 1)..3 {
                        let mut xpp = *x;
                        let mut xpm = *x;
                        let mut xmp = *x;
                        let mut xmm = *x;
                        xpp[k] += step;
                        xpp[l] += step;
                        xpm[k] += step;
                        xpm[l] -= step;
                        xmp[k] -= step;
                        xmp[l] += step;
                        xmm[k] -= step;
                        xmm[l] -= step;
                        let mixed = (self.metric_raw(&xpp)? - self.metric_raw(&xpm)?
                            - self.metric_raw(&xmp)?
                            + self.metric_raw(&xmm)?)
                            / (4.0 * step * step);
                        out[k][l] = mixed;
                        out[l][k] = mixed;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Build the chart for e^{2 upsilon} g from the chart for g. The derivative
/// mode is preserved; in analytic mode the rescaled partials are assembled
/// from the product rule, which requires the scalar field to carry an
/// analytic gradient and Hessian.
pub fn conformal_rescale(
    chart: &MetricChart,
    upsilon: &ScalarField,
) -> Result<MetricChart, ChartError> {
    let name = format!("{}*conf", chart.name);
    let base = chart.metric.clone();
    let ups = upsilon.clone();
    let metric = move |x: &Vec3| (2.0 * ups.value(x)).exp() * base(x);

    match chart.mode {
        DerivativeMode::CentralDifference { step } => Ok(MetricChart {
            name,
            domain: chart.domain,
            metric: Arc::new(metric),
            metric_grad: None,
            metric_hess: None,
            mode: DerivativeMode::CentralDifference { step },
            orientation: chart.orientation,
        }),
        DerivativeMode::Analytic => {
            if !upsilon.has_derivatives() {
                return Err(ChartError::MissingScalarDerivatives);
            }
            let base_g = chart.metric.clone();
            let base_dg = chart
                .metric_grad
                .clone()
                .ok_or(ChartError::MissingMetricDerivatives)?;
            let base_d2g = chart
                .metric_hess
                .clone()
                .ok_or(ChartError::MissingMetricDerivatives)?;

            let ups_g = upsilon.clone();
            let grad = move |x: &Vec3| {
                let w = (2.0 * ups_g.value(x)).exp();
                let du = ups_g.gradient(x).expect("checked above");
                let g = base_g(x);
                let dg = base_dg(x);
                let mut out = [Mat3::zeros(); 3];
                for k in 0..3 {
                    out[k] = w * (2.0 * du[k] * g + dg[k]);
                }
                out
            };

            let base_g2 = chart.metric.clone();
            let base_dg2 = chart.metric_grad.clone().unwrap();
            let ups_h = upsilon.clone();
            let hess = move |x: &Vec3| {
                let w = (2.0 * ups_h.value(x)).exp();
                let du = ups_h.gradient(x).expect("checked above");
                let d2u = ups_h.hessian(x).expect("checked above");
                let g = base_g2(x);
                let dg = base_dg2(x);
                let d2g = base_d2g(x);
                let mut out = [[Mat3::zeros(); 3]; 3];
                for k in 0..3 {
                    for l in 0..3 {
                        // d_l d_k (e^{2u} g) expanded by the product rule.
                        out[k][l] = w
                            * (2.0 * du[l] * (2.0 * du[k] * g + dg[k])
                                + 2.0 * d2u[(k, l)] * g
                                + 2.0 * du[k] * dg[l]
                                + d2g[k][l]);
                    }
                }
                out
            };

            Ok(MetricChart {
                name,
                domain: chart.domain,
                metric: Arc::new(metric),
                metric_grad: Some(Arc::new(grad)),
                metric_hess: Some(Arc::new(hess)),
                mode: DerivativeMode::Analytic,
                orientation: chart.orientation,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;
    use approx::assert_relative_eq;

    #[test]
    fn domain_and_definiteness_are_enforced() {
        let chart = registry::euclidean();
        assert!(matches!(
            chart.metric(&Vec3::new(1e3, 0.0, 0.0)),
            Err(ChartError::OutsideDomain(..))
        ));

        let bad = MetricChart::new_difference(
            "indefinite",
            BoxDomain::cube(1.0),
            |_| Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0)),
            1e-4,
        );
        assert!(matches!(
            bad.metric(&Vec3::zeros()),
            Err(ChartError::NotPositiveDefinite(..))
        ));
    }

    #[test]
    fn rescale_by_zero_is_identity() {
        let chart = registry::nil();
        let rescaled = conformal_rescale(&chart, &ScalarField::constant(0.0)).unwrap();
        let x = Vec3::new(0.2, -0.1, 0.3);
        assert_relative_eq!(chart.metric(&x).unwrap(), rescaled.metric(&x).unwrap());
        let dg = chart.metric_partials(&x).unwrap();
        let dg_r = rescaled.metric_partials(&x).unwrap();
        for k in 0..3 {
            assert_relative_eq!(dg[k], dg_r[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn analytic_partials_match_central_differences() {
        // Every analytic registry chart must agree with differencing its own
        // metric closure to O(h^2).
        for name in registry::all_names() {
            let chart = registry::build(name, &[]).unwrap();
            let fd = chart.clone().into_difference_mode(1e-4);
            let x = Vec3::new(0.13, -0.21, 0.08);
            let (dg_a, dg_f) = (chart.metric_partials(&x).unwrap(), fd.metric_partials(&x).unwrap());
            for k in 0..3 {
                assert_relative_eq!(dg_a[k], dg_f[k], epsilon = 1e-6);
            }
            let (d2_a, d2_f) = (
                chart.metric_second_partials(&x).unwrap(),
                fd.metric_second_partials(&x).unwrap(),
            );
            for k in 0..3 {
                for l in 0..3 {
                    assert_relative_eq!(d2_a[k][l], d2_f[k][l], epsilon = 1e-5);
                }
            }
        }
    }
}
