//! Pointwise curvature and conformal tensors of a 3-metric.
//!
//! Index conventions, fixed once for the whole crate:
//! - the curvature operator is defined by `(∇_i∇_j - ∇_j∇_i) X^k = R_ij^k_l X^l`,
//!   and `riemann` returns the all-lower tensor `R_ijkl = g_km R_ij^m_l`;
//! - Ricci is the trace `R_ij = R_ki^k_j`, the Schouten tensor is
//!   `P_ij = R_ij - (R/4) g_ij`;
//! - the Cotton tensor is `C_ijk = ∇_k P_ij - ∇_j P_ik` (antisymmetric in the
//!   last two slots) and its Hodge dual is `(*C)_ij = (1/2) ε_j^{kl} C_ikl`;
//! - `ε_123 = +sqrt(det g)` in positively oriented coordinates, so
//!   `vol_g = (1/3!) ε_ijk θ^i ∧ θ^j ∧ θ^k`;
//! - all raising and lowering happens through the metric at the evaluation
//!   point.

use num_complex::Complex64;

use crate::chart::{ChartError, MetricChart};
use crate::linalg::{CVec3, Mat3, Vec3};

/// Rank-3 array of components, e.g. Γ_ij^k as `gamma[i][j][k]`.
pub type Rank3 = [[[f64; 3]; 3]; 3];
/// Rank-4 array of components, e.g. R_ijkl as `riemann[i][j][k][l]`.
pub type Rank4 = [[[[f64; 3]; 3]; 3]; 3];

/// Christoffel symbols Γ_ij^k of the Levi-Civita connection, `[i][j][k]`.
pub fn christoffel(chart: &MetricChart, x: &Vec3) -> Result<Rank3, ChartError> {
    let ginv = chart.inverse_metric(x)?;
    let dg = chart.metric_partials(x)?;
    Ok(christoffel_from_parts(&ginv, &dg))
}

fn christoffel_from_parts(ginv: &Mat3, dg: &[Mat3; 3]) -> Rank3 {
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let mut acc = 0.0;
                for l in 0..3 {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[i][j][k] = 0.5 * acc;
            }
        }
    }
    gamma
}

/// First partials ∂_i Γ_jl^k as `dgamma[i][j][l][k]`.
fn christoffel_partials(chart: &MetricChart, x: &Vec3) -> Result<Rank4, ChartError> {
    let g = chart.metric(x)?;
    let ginv = g.try_inverse().expect("positive definite");
    let dg = chart.metric_partials(x)?;
    let d2g = chart.metric_second_partials(x)?;

    // ∂_i g^{km} = -g^{ka} (∂_i g_ab) g^{bm}
    let mut dginv = [Mat3::zeros(); 3];
    for i in 0..3 {
        dginv[i] = -ginv * dg[i] * ginv;
    }

    let mut out = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                for k in 0..3 {
                    let mut acc = 0.0;
                    for m in 0..3 {
                        acc += dginv[i][(k, m)] * (dg[j][(l, m)] + dg[l][(j, m)] - dg[m][(j, l)]);
                        acc += ginv[(k, m)]
                            * (d2g[i][j][(l, m)] + d2g[i][l][(j, m)] - d2g[i][m][(j, l)]);
                    }
                    out[i][j][l][k] = 0.5 * acc;
                }
            }
        }
    }
    Ok(out)
}

/// All-lower curvature tensor R_ijkl.
pub fn riemann(chart: &MetricChart, x: &Vec3) -> Result<Rank4, ChartError> {
    let g = chart.metric(x)?;
    let gamma = christoffel(chart, x)?;
    let dgamma = christoffel_partials(chart, x)?;
    let mixed = riemann_mixed(&gamma, &dgamma);
    let mut lower = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut acc = 0.0;
                    for m in 0..3 {
                        acc += g[(k, m)] * mixed[i][j][m][l];
                    }
                    lower[i][j][k][l] = acc;
                }
            }
        }
    }
    Ok(lower)
}

/// R_ij^k_l as `[i][j][k][l]`.
fn riemann_mixed(gamma: &Rank3, dgamma: &Rank4) -> Rank4 {
    let mut r = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut acc = dgamma[i][j][l][k] - dgamma[j][i][l][k];
                    for m in 0..3 {
                        acc += gamma[i][m][k] * gamma[j][l][m] - gamma[j][m][k] * gamma[i][l][m];
                    }
                    r[i][j][k][l] = acc;
                }
            }
        }
    }
    r
}

/// Ricci tensor R_ij = R_ki^k_j.
pub fn ricci(chart: &MetricChart, x: &Vec3) -> Result<Mat3, ChartError> {
    let gamma = christoffel(chart, x)?;
    let dgamma = christoffel_partials(chart, x)?;
    let mixed = riemann_mixed(&gamma, &dgamma);
    let mut ric = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += mixed[k][i][k][j];
            }
            ric[(i, j)] = acc;
        }
    }
    Ok(ric)
}

/// Scalar curvature R = g^{ij} R_ij.
pub fn scalar(chart: &MetricChart, x: &Vec3) -> Result<f64, ChartError> {
    let ginv = chart.inverse_metric(x)?;
    let ric = ricci(chart, x)?;
    Ok((ginv * ric).trace())
}

/// Schouten tensor P_ij = R_ij - (R/4) g_ij.
pub fn schouten(chart: &MetricChart, x: &Vec3) -> Result<Mat3, ChartError> {
    let g = chart.metric(x)?;
    let ginv = g.try_inverse().expect("positive definite");
    let ric = ricci(chart, x)?;
    let r = (ginv * ric).trace();
    Ok(ric - 0.25 * r * g)
}

/// Cotton tensor C_ijk = ∇_k P_ij - ∇_j P_ik as `[i][j][k]`.
///
/// The Schouten partials are central differences of `schouten`, which needs
/// metric values only up to second derivatives per evaluation; the step is
/// mode-dependent (see [`crate::chart::DerivativeMode::cotton_step`]).
pub fn cotton(chart: &MetricChart, x: &Vec3) -> Result<Rank3, ChartError> {
    let gamma = christoffel(chart, x)?;
    let p = schouten(chart, x)?;
    let h = chart.mode().cotton_step();

    let mut dp = [Mat3::zeros(); 3];
    for (k, slot) in dp.iter_mut().enumerate() {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += h;
        xm[k] -= h;
        *slot = (schouten_off_grid(chart, &xp)? - schouten_off_grid(chart, &xm)?) / (2.0 * h);
    }

    // ∇_k P_ij = ∂_k P_ij - Γ_ki^m P_mj - Γ_kj^m P_im
    let mut nabla_p = [[[0.0; 3]; 3]; 3]; // [k][i][j]
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = dp[k][(i, j)];
                for m in 0..3 {
                    acc -= gamma[k][i][m] * p[(m, j)] + gamma[k][j][m] * p[(i, m)];
                }
                nabla_p[k][i][j] = acc;
            }
        }
    }

    let mut c = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j][k] = nabla_p[k][i][j] - nabla_p[j][i][k];
            }
        }
    }
    Ok(c)
}

/// Schouten evaluation for Cotton stencils, tolerant of points that step just
/// past the domain edge.
fn schouten_off_grid(chart: &MetricChart, x: &Vec3) -> Result<Mat3, ChartError> {
    match schouten(chart, x) {
        Err(ChartError::OutsideDomain(..)) => {
            Err(ChartError::InvalidInput(format!(
                "Cotton stencil at ({:.4}, {:.4}, {:.4}) leaves the chart domain; evaluate further inside",
                x.x, x.y, x.z
            )))
        }
        other => other,
    }
}

/// Hodge dual of the Cotton tensor, (*C)_ij = (1/2) ε_j^{kl} C_ikl.
pub fn star_cotton(chart: &MetricChart, x: &Vec3) -> Result<Mat3, ChartError> {
    let c = cotton(chart, x)?;
    let eps = volume_eps(chart, x)?;
    let ginv = chart.inverse_metric(x)?;
    Ok(star_cotton_from_parts(&c, &eps, &ginv))
}

fn star_cotton_from_parts(c: &Rank3, eps: &Rank3, ginv: &Mat3) -> Mat3 {
    // ε_j^{kl} = g^{ka} g^{lb} ε_jab
    let mut out = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    for a in 0..3 {
                        for b in 0..3 {
                            acc += ginv[(k, a)] * ginv[(l, b)] * eps[j][a][b] * c[i][k][l];
                        }
                    }
                }
            }
            out[(i, j)] = 0.5 * acc;
        }
    }
    out
}

/// Volume form components ε_ijk, fully antisymmetric with
/// ε_123 = orientation * sqrt(det g).
pub fn volume_eps(chart: &MetricChart, x: &Vec3) -> Result<Rank3, ChartError> {
    let g = chart.metric(x)?;
    let scale = chart.orientation() * g.determinant().sqrt();
    let mut eps = [[[0.0; 3]; 3]; 3];
    for (i, j, k, sign) in [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (0, 2, 1, -1.0),
        (2, 1, 0, -1.0),
        (1, 0, 2, -1.0),
    ] {
        eps[i][j][k] = sign * scale;
    }
    Ok(eps)
}

/// Cross product Z^i = ε^i_{jk} X^j Y^k with respect to the chart metric.
pub fn cross(chart: &MetricChart, x: &Vec3, a: &Vec3, b: &Vec3) -> Result<Vec3, ChartError> {
    let eps = volume_eps(chart, x)?;
    let ginv = chart.inverse_metric(x)?;
    let mut lower = Vec3::zeros();
    for m in 0..3 {
        let mut acc = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                acc += eps[m][j][k] * a[j] * b[k];
            }
        }
        lower[m] = acc;
    }
    Ok(ginv * lower)
}

/// Complex-bilinear extension of [`cross`], used for ζ × ζ̄.
pub fn cross_c(chart: &MetricChart, x: &Vec3, a: &CVec3, b: &CVec3) -> Result<CVec3, ChartError> {
    let eps = volume_eps(chart, x)?;
    let ginv = chart.inverse_metric(x)?;
    let mut lower = CVec3::from_element(Complex64::ZERO);
    for m in 0..3 {
        let mut acc = Complex64::ZERO;
        for j in 0..3 {
            for k in 0..3 {
                acc += eps[m][j][k] * a[j] * b[k];
            }
        }
        lower[m] = acc;
    }
    let mut out = CVec3::from_element(Complex64::ZERO);
    for i in 0..3 {
        let mut acc = Complex64::ZERO;
        for m in 0..3 {
            acc += ginv[(i, m)] * lower[m];
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Γ(u, v)^k = Γ_ij^k u^i v^j.
pub fn gamma_apply(gamma: &Rank3, u: &Vec3, v: &Vec3) -> Vec3 {
    let mut out = Vec3::zeros();
    for k in 0..3 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += gamma[i][j][k] * u[i] * v[j];
            }
        }
        out[k] = acc;
    }
    out
}

/// The per-point data every ODE right-hand side in this crate needs: metric,
/// its inverse, Christoffels and the Schouten tensor.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub metric: Mat3,
    pub inverse_metric: Mat3,
    pub gamma: Rank3,
    pub schouten: Mat3,
}

impl PointGeometry {
    pub fn at(chart: &MetricChart, x: &Vec3) -> Result<Self, ChartError> {
        let metric = chart.metric(x)?;
        let inverse_metric = metric.try_inverse().expect("positive definite");
        let dg = chart.metric_partials(x)?;
        let gamma = christoffel_from_parts(&inverse_metric, &dg);
        let dgamma = christoffel_partials(chart, x)?;
        let mixed = riemann_mixed(&gamma, &dgamma);
        let mut ric = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                ric[(i, j)] = (0..3).map(|k| mixed[k][i][k][j]).sum();
            }
        }
        let scal = (inverse_metric * ric).trace();
        Ok(PointGeometry {
            metric,
            inverse_metric,
            gamma,
            schouten: ric - 0.25 * scal * metric,
        })
    }

    pub fn schouten_raised(&self, v: &Vec3) -> Vec3 {
        self.inverse_metric * (self.schouten * v)
    }
}

/// All pointwise tensors of a chart at one point.
#[derive(Clone, Debug)]
pub struct TensorPack {
    pub point: Vec3,
    pub metric: Mat3,
    pub inverse_metric: Mat3,
    pub gamma: Rank3,
    pub riemann: Rank4,
    pub ricci: Mat3,
    pub scalar: f64,
    pub schouten: Mat3,
    pub cotton: Rank3,
    pub star_cotton: Mat3,
    pub eps: Rank3,
}

impl TensorPack {
    pub fn at(chart: &MetricChart, x: &Vec3) -> Result<Self, ChartError> {
        let metric = chart.metric(x)?;
        let inverse_metric = metric.try_inverse().expect("positive definite");
        let gamma = christoffel(chart, x)?;
        let dgamma = christoffel_partials(chart, x)?;
        let mixed = riemann_mixed(&gamma, &dgamma);

        let mut riem = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut acc = 0.0;
                        for m in 0..3 {
                            acc += metric[(k, m)] * mixed[i][j][m][l];
                        }
                        riem[i][j][k][l] = acc;
                    }
                }
            }
        }

        let mut ric = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                ric[(i, j)] = (0..3).map(|k| mixed[k][i][k][j]).sum();
            }
        }
        let scal = (inverse_metric * ric).trace();
        let schout = ric - 0.25 * scal * metric;
        let cot = cotton(chart, x)?;
        let eps = volume_eps(chart, x)?;
        let star = star_cotton_from_parts(&cot, &eps, &inverse_metric);

        Ok(TensorPack {
            point: *x,
            metric,
            inverse_metric,
            gamma,
            riemann: riem,
            ricci: ric,
            scalar: scal,
            schouten: schout,
            cotton: cot,
            star_cotton: star,
            eps,
        })
    }

    /// P(v)^i = P^i_j v^j.
    pub fn schouten_raised(&self, v: &Vec3) -> Vec3 {
        self.inverse_metric * (self.schouten * v)
    }

    /// Residual of the 3-dimensional decomposition
    /// R_ijkl = P_ik g_jl - P_jk g_il + P_jl g_ik - P_il g_jk.
    pub fn decomposition_residual(&self) -> f64 {
        let (g, p) = (&self.metric, &self.schouten);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expect = p[(i, k)] * g[(j, l)] - p[(j, k)] * g[(i, l)]
                            + p[(j, l)] * g[(i, k)]
                            - p[(i, l)] * g[(j, k)];
                        worst = worst.max((self.riemann[i][j][k][l] - expect).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest absolute component of g^{ij} C_ijk.
    pub fn cotton_trace_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += self.inverse_metric[(i, j)] * self.cotton[i][j][k];
                }
            }
            worst = worst.max(acc.abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{conformal_rescale, BoxDomain};
    use crate::linalg::metric_dot;
    use crate::registry;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn max_abs3(t: &Rank3) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    m = m.max(t[i][j][k].abs());
                }
            }
        }
        m
    }

    fn max_abs4(t: &Rank4) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        m = m.max(t[i][j][k][l].abs());
                    }
                }
            }
        }
        m
    }

    #[test]
    fn euclidean_is_flat() {
        let chart = registry::euclidean();
        let x = Vec3::new(0.4, -1.2, 2.0);
        assert!(max_abs3(&christoffel(&chart, &x).unwrap()) < 1e-14);
        assert!(max_abs4(&riemann(&chart, &x).unwrap()) < 1e-14);
        assert!(max_abs3(&cotton(&chart, &x).unwrap()) < 1e-14);
        assert!(scalar(&chart, &x).unwrap().abs() < 1e-14);
    }

    #[test]
    fn exponential_rescaling_matches_closed_form() {
        // g = e^{2 x1} δ has Γ_ij^k = δ_i^k Υ_j + δ_j^k Υ_i - g_ij Υ^k with
        // Υ = x1, which works out to constants.
        let base = registry::euclidean();
        let ups = crate::chart::ScalarField::with_derivatives(
            |x: &Vec3| x.x,
            |_| Vec3::new(1.0, 0.0, 0.0),
            |_| Mat3::zeros(),
        );
        for chart in [
            conformal_rescale(&base, &ups).unwrap(),
            conformal_rescale(&base.clone().into_difference_mode(1e-4), &ups).unwrap(),
        ] {
            let tol = match chart.mode() {
                crate::chart::DerivativeMode::Analytic => 1e-12,
                _ => 1e-7,
            };
            let x = Vec3::new(0.3, -0.2, 0.5);
            let gamma = christoffel(&chart, &x).unwrap();
            let mut expect = [[[0.0; 3]; 3]; 3];
            expect[0][0][0] = 1.0;
            expect[1][1][0] = -1.0;
            expect[2][2][0] = -1.0;
            expect[0][1][1] = 1.0;
            expect[1][0][1] = 1.0;
            expect[0][2][2] = 1.0;
            expect[2][0][2] = 1.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        assert!(
                            (gamma[i][j][k] - expect[i][j][k]).abs() < tol,
                            "Γ_{}{}^{} = {} (mode {:?})",
                            i,
                            j,
                            k,
                            gamma[i][j][k],
                            chart.mode()
                        );
                    }
                }
            }
        }
    }

    /// Independent stencil oracle: Christoffels straight from differenced
    /// metric components, bypassing the chart derivative machinery.
    fn christoffel_oracle(g: impl Fn(&Vec3) -> Mat3, x: &Vec3, h: f64) -> Rank3 {
        let mut dg = [Mat3::zeros(); 3];
        for k in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[k] += h;
            xm[k] -= h;
            dg[k] = (g(&xp) - g(&xm)) / (2.0 * h);
        }
        let ginv = g(x).try_inverse().unwrap();
        christoffel_from_parts(&ginv, &dg)
    }

    #[test]
    fn nil_christoffel_matches_stencil_oracle() {
        let chart = registry::nil();
        let x = Vec3::zeros();
        let gamma = christoffel(&chart, &x).unwrap();
        let oracle = christoffel_oracle(
            |p| {
                Mat3::new(
                    1.0,
                    0.0,
                    0.0,
                    0.0,
                    1.0 + p.x * p.x,
                    -p.x,
                    0.0,
                    -p.x,
                    1.0,
                )
            },
            &x,
            1e-5,
        );
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((gamma[i][j][k] - oracle[i][j][k]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn round_sphere_has_constant_curvature_one() {
        let chart = registry::round_sphere(1.0);
        for x in [Vec3::zeros(), Vec3::new(0.3, 0.1, -0.4)] {
            let g = chart.metric(&x).unwrap();
            let ric = ricci(&chart, &x).unwrap();
            assert_relative_eq!(ric, 2.0 * g, epsilon = 1e-9);
            assert_relative_eq!(scalar(&chart, &x).unwrap(), 6.0, epsilon = 1e-9);
            assert_relative_eq!(schouten(&chart, &x).unwrap(), 0.5 * g, epsilon = 1e-9);

            // Constant-curvature closed form R_ijkl = k (g_ik g_jl - g_il g_jk).
            let riem = riemann(&chart, &x).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            let expect = g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)];
                            assert!((riem[i][j][k][l] - expect).abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hyperbolic_has_constant_curvature_minus_one() {
        let chart = registry::hyperbolic(1.0);
        let x = Vec3::new(0.1, -0.2, 0.15);
        let g = chart.metric(&x).unwrap();
        assert_relative_eq!(ricci(&chart, &x).unwrap(), -2.0 * g, epsilon = 1e-9);
        assert_relative_eq!(scalar(&chart, &x).unwrap(), -6.0, epsilon = 1e-9);
    }

    #[test]
    fn nil_ricci_eigenvalues() {
        // Heisenberg geometry: Ricci eigenvalues (-1/2, -1/2, +1/2) in any
        // orthonormal frame, i.e. eigenvalues of g^{-1} Ric.
        let chart = registry::nil();
        let x = Vec3::new(0.2, -0.3, 0.1);
        let ric = ricci(&chart, &x).unwrap();
        let ginv = chart.inverse_metric(&x).unwrap();
        let mut eig: Vec<f64> = (ginv * ric).complex_eigenvalues().iter().map(|c| c.re).collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(eig[0], -0.5, epsilon = 1e-9);
        assert_relative_eq!(eig[1], -0.5, epsilon = 1e-9);
        assert_relative_eq!(eig[2], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        for chart in [registry::nil(), registry::round_sphere(1.0)] {
            let x = Vec3::new(0.15, 0.2, -0.1);
            let r = riemann(&chart, &x).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            worst = worst.max((r[i][j][k][l] + r[j][i][k][l]).abs());
                            worst = worst.max((r[i][j][k][l] + r[i][j][l][k]).abs());
                            worst = worst.max((r[i][j][k][l] - r[k][l][i][j]).abs());
                            let bianchi = r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l];
                            worst = worst.max(bianchi.abs());
                        }
                    }
                }
            }
            assert!(worst < 1e-9, "worst symmetry residual {worst}");
        }
    }

    #[test]
    fn cotton_vanishes_for_conformally_flat_and_not_for_nil() {
        let ups = registry::upsilon_sinusoidal(0.3, Vec3::new(1.0, 0.7, -0.4));
        let chart = conformal_rescale(&registry::euclidean(), &ups).unwrap();
        let x = Vec3::new(0.3, 0.2, -0.4);
        assert!(max_abs3(&cotton(&chart, &x).unwrap()) < 1e-7);

        let nil = registry::nil();
        assert!(max_abs3(&cotton(&nil, &x).unwrap()) > 0.1);
    }

    #[test]
    fn cotton_structure_identities() {
        let chart = registry::nil();
        let x = Vec3::new(0.2, -0.1, 0.3);
        let pack = TensorPack::at(&chart, &x).unwrap();

        // Antisymmetry in the last two indices and trace-freeness.
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((pack.cotton[i][j][k] + pack.cotton[i][k][j]).abs() < 1e-8);
                }
            }
        }
        assert!(pack.cotton_trace_residual() < 1e-8);

        // (*C) symmetric.
        assert_relative_eq!(pack.star_cotton, pack.star_cotton.transpose(), epsilon = 1e-8);

        // C(X, Y, Z) = (*C)(X, Y x Z) on a spread of vectors.
        let vecs = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.3, -1.2, 0.4),
            Vec3::new(-0.2, 0.5, 1.0),
        ];
        for a in &vecs {
            for b in &vecs {
                for c in &vecs {
                    let mut lhs = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            for k in 0..3 {
                                lhs += pack.cotton[i][j][k] * a[i] * b[j] * c[k];
                            }
                        }
                    }
                    // (*C)(X, Y x Z) = (*C)_ij X^i (Y x Z)^j; the indices pair
                    // directly, no extra metric factor.
                    let bc = cross(&chart, &x, b, c).unwrap();
                    let rhs = (pack.star_cotton * bc).dot(a);
                    assert!((lhs - rhs).abs() < 1e-8, "C(X,Y,Z) vs (*C)(X, YxZ)");
                }
            }
        }
    }

    #[test]
    fn cotton_is_conformally_invariant_star_cotton_is_weighted() {
        let base = registry::nil();
        let ups = registry::upsilon_quadratic(0.2, Vec3::new(0.3, -0.5, 0.1));
        let rescaled = conformal_rescale(&base, &ups).unwrap();
        let x = Vec3::new(0.25, 0.1, -0.2);

        let c0 = cotton(&base, &x).unwrap();
        let c1 = cotton(&rescaled, &x).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((c0[i][j][k] - c1[i][j][k]).abs());
                }
            }
        }
        assert!(worst < 1e-6, "Cotton conformal invariance residual {worst}");

        // (*C) carries conformal weight -1: e^{Υ} (*Ĉ) = (*C).
        let s0 = star_cotton(&base, &x).unwrap();
        let s1 = star_cotton(&rescaled, &x).unwrap();
        let w = ups.value(&x).exp();
        assert_relative_eq!(w * s1, s0, epsilon = 1e-6);
    }

    #[test]
    fn cross_product_and_volume_form() {
        let chart = registry::euclidean();
        let x = Vec3::zeros();
        let e1 = Vec3::new(1.0, 0.0, 0.0);
        let e2 = Vec3::new(0.0, 1.0, 0.0);
        let e3 = Vec3::new(0.0, 0.0, 1.0);
        assert_relative_eq!(cross(&chart, &x, &e1, &e2).unwrap(), e3, epsilon = 1e-15);
        assert_relative_eq!(cross(&chart, &x, &e2, &e3).unwrap(), e1, epsilon = 1e-15);
        assert_relative_eq!(cross(&chart, &x, &e3, &e1).unwrap(), e2, epsilon = 1e-15);

        // i ζ x ζ̄ for ζ = (1, i, 0)/sqrt(2) is the third axis.
        let s = 1.0 / 2.0f64.sqrt();
        let zeta = CVec3::new(
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::ZERO,
        );
        let zbar = crate::linalg::conj3(&zeta);
        let eta = cross_c(&chart, &x, &zeta, &zbar).unwrap() * Complex64::i();
        assert!((crate::linalg::re3(&eta) - e3).norm() < 1e-14);
        assert!(crate::linalg::im3(&eta).norm() < 1e-14);
    }

    #[test]
    fn cross_is_metric_orthogonal_on_curved_charts() {
        let chart = registry::round_sphere(1.0);
        let x = Vec3::new(0.2, -0.3, 0.1);
        let g = chart.metric(&x).unwrap();
        let a = Vec3::new(0.5, 1.0, -0.7);
        let b = Vec3::new(-1.1, 0.4, 0.3);
        let c = cross(&chart, &x, &a, &b).unwrap();
        assert!(metric_dot(&g, &c, &a).abs() < 1e-12);
        assert!(metric_dot(&g, &c, &b).abs() < 1e-12);
        // Bilinearity plus antisymmetry.
        let c2 = cross(&chart, &x, &b, &a).unwrap();
        assert_relative_eq!(c, -c2, epsilon = 1e-12);
    }

    #[test]
    fn orientation_flip_negates_odd_tensors_only() {
        let chart = registry::nil();
        let flipped = registry::nil().with_orientation(-1.0);
        let x = Vec3::new(0.2, 0.1, -0.3);
        let (p0, p1) = (
            TensorPack::at(&chart, &x).unwrap(),
            TensorPack::at(&flipped, &x).unwrap(),
        );
        assert_relative_eq!(p0.ricci, p1.ricci, epsilon = 1e-12);
        assert_relative_eq!(p0.schouten, p1.schouten, epsilon = 1e-12);
        assert!(max_abs4(&p0.riemann) - max_abs4(&p1.riemann) < 1e-12);
        assert_relative_eq!(p0.star_cotton, -p1.star_cotton, epsilon = 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((p0.eps[i][j][k] + p1.eps[i][j][k]).abs() < 1e-12);
                    assert!((p0.gamma[i][j][k] - p1.gamma[i][j][k]).abs() < 1e-12);
                }
            }
        }
        let a = Vec3::new(1.0, 0.2, -0.5);
        let b = Vec3::new(0.3, -1.0, 0.8);
        assert_relative_eq!(
            cross(&chart, &x, &a, &b).unwrap(),
            -cross(&flipped, &x, &a, &b).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn metric_compatibility_residual() {
        // ∂_k g_ij - Γ_ki^l g_lj - Γ_kj^l g_il = 0
        for chart in [
            registry::nil(),
            registry::round_sphere(1.0),
            registry::nil().into_difference_mode(1e-4),
        ] {
            let x = Vec3::new(0.1, 0.25, -0.2);
            let g = chart.metric(&x).unwrap();
            let dg = chart.metric_partials(&x).unwrap();
            let gamma = christoffel(&chart, &x).unwrap();
            let tol = match chart.mode() {
                crate::chart::DerivativeMode::Analytic => 1e-12,
                crate::chart::DerivativeMode::CentralDifference { step } => 10.0 * step * step,
            };
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut res = dg[k][(i, j)];
                        for l in 0..3 {
                            res -= gamma[k][i][l] * g[(l, j)] + gamma[k][j][l] * g[(i, l)];
                        }
                        assert!(res.abs() < tol, "compatibility residual {res} in {:?}", chart);
                    }
                }
            }
        }
    }

    #[test]
    fn domain_errors_propagate() {
        let chart = registry::euclidean();
        let far = Vec3::new(50.0, 0.0, 0.0);
        assert!(matches!(
            christoffel(&chart, &far),
            Err(ChartError::OutsideDomain(..))
        ));
        let domain_edge = MetricChart::new_difference(
            "tight",
            BoxDomain::cube(1e-3),
            |_| Mat3::identity(),
            1e-4,
        );
        // Stencils may step outside a tight box; the metric itself is fine.
        assert!(christoffel(&domain_edge, &Vec3::zeros()).is_ok());
    }
}
