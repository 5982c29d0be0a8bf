//! Pointwise curvature of the Fefferman metric in the adapted coframe.
//!
//! Components are indexed by the coframe order `(0, 1, 2, 1̄, 2̄, 3)`. The
//! metric pairs index `a` with `5 - a`, conjugation swaps `1 ↔ 1̄` and
//! `2 ↔ 2̄`. The nonzero curvature components are quadratic-free expressions
//! in the Schouten tensor and the Hodge dual of the Cotton tensor evaluated
//! on `(ζ, ζ̄, η)`; everything else follows from the pair symmetries and
//! reality.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;

use crate::chart::MetricChart;
use crate::linalg::{complexify, conj3, metric_cdot, metric_dot, CVec3, Vec3};
use crate::tensor;

use super::{FeffermanError, NullCoframePoint};

pub const DIM: usize = 6;
const I0: usize = 0;
const I1: usize = 1;
const I2: usize = 2;
const I1B: usize = 3;
const I2B: usize = 4;
const I3: usize = 5;

/// Conjugate index.
fn conj_idx(a: usize) -> usize {
    [I0, I1B, I2B, I1, I2, I3][a]
}

/// Metric partner: the only b with g^F_{ab} = 1.
fn pair_idx(a: usize) -> usize {
    5 - a
}

/// Schouten and star-Cotton contractions on the adapted frame at a coframe
/// point.
struct FrameContractions {
    p_eta_eta: f64,
    p_zeta_eta: Complex64,
    p_zeta_zeta: Complex64,
    p_zeta_zbar: f64,
    sc_eta_eta: f64,
    sc_zeta_eta: Complex64,
    sc_zeta_zeta: Complex64,
    sc_zeta_zbar: f64,
}

fn frame_contractions(
    chart: &MetricChart,
    point: &NullCoframePoint,
) -> Result<FrameContractions, FeffermanError> {
    let p = tensor::schouten(chart, &point.x)?;
    let sc = tensor::star_cotton(chart, &point.x)?;
    let zeta = point.zeta;
    let zbar = conj3(&zeta);
    let eta = point.eta(chart)?;
    let eta_c = complexify(&eta);
    Ok(FrameContractions {
        p_eta_eta: metric_dot(&p, &eta, &eta),
        p_zeta_eta: metric_cdot(&p, &zeta, &eta_c),
        p_zeta_zeta: metric_cdot(&p, &zeta, &zeta),
        p_zeta_zbar: metric_cdot(&p, &zeta, &zbar).re,
        sc_eta_eta: metric_dot(&sc, &eta, &eta),
        sc_zeta_eta: metric_cdot(&sc, &zeta, &eta_c),
        sc_zeta_zeta: metric_cdot(&sc, &zeta, &zeta),
        sc_zeta_zbar: metric_cdot(&sc, &zeta, &zbar).re,
    })
}

/// Ricci, scalar and Weyl data of the Fefferman metric at a coframe point.
#[derive(Clone, Debug)]
pub struct FeffermanCurvatureReport {
    /// R^F_00 = 2 P(η,η)
    pub ricci_00: f64,
    /// R^F_01 = 2 P(ζ̄,η)
    pub ricci_01: Complex64,
    /// R^F_{2 2̄} = 1
    pub ricci_22bar: f64,
    /// R^F_11 = 2 P(ζ̄,ζ̄)
    pub ricci_11: Complex64,
    /// R^F_{1 1̄} = 2 P(ζ,ζ̄)
    pub ricci_11bar: f64,
    /// R^F_33 = 1
    pub ricci_33: f64,
    /// Scalar curvature, contracted from the component table; vanishes.
    pub scalar: f64,
    /// W^F_{0 1 0 1̄} = -(*C)(ζ,ζ̄)
    pub weyl_0101bar: f64,
    /// W^F_{0 1̄ 0 1̄} = (*C)(ζ,ζ)
    pub weyl_01bar01bar: Complex64,
    /// W^F_{0 1̄ 1 1̄} = -(*C)(ζ,η)
    pub weyl_01bar11bar: Complex64,
    /// W^F_{1 1̄ 1 1̄} = (*C)(η,η)
    pub weyl_11bar11bar: f64,
}

impl FeffermanCurvatureReport {
    pub fn max_weyl_abs(&self) -> f64 {
        self.weyl_0101bar
            .abs()
            .max(self.weyl_01bar01bar.norm())
            .max(self.weyl_01bar11bar.norm())
            .max(self.weyl_11bar11bar.abs())
    }
}

/// Evaluate the curvature tables at a coframe point.
pub fn fefferman_curvature(
    chart: &MetricChart,
    point: &NullCoframePoint,
) -> Result<FeffermanCurvatureReport, FeffermanError> {
    let fc = frame_contractions(chart, point)?;
    let table = table_from_contractions(&fc);
    Ok(FeffermanCurvatureReport {
        ricci_00: 2.0 * fc.p_eta_eta,
        ricci_01: 2.0 * fc.p_zeta_eta.conj(),
        ricci_22bar: 1.0,
        ricci_11: 2.0 * fc.p_zeta_zeta.conj(),
        ricci_11bar: 2.0 * fc.p_zeta_zbar,
        ricci_33: 1.0,
        scalar: table.scalar(),
        weyl_0101bar: -fc.sc_zeta_zbar,
        weyl_01bar01bar: fc.sc_zeta_zeta,
        weyl_01bar11bar: -fc.sc_zeta_eta,
        weyl_11bar11bar: fc.sc_eta_eta,
    })
}

/// Full component table R^F_{abcd} in the adapted coframe, generated from
/// the listed nonzero components by the curvature symmetries and reality.
#[derive(Clone)]
pub struct CurvatureTable {
    values: Vec<Complex64>,
}

impl CurvatureTable {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        self.values[((a * DIM + b) * DIM + c) * DIM + d]
    }

    /// Ricci contraction R^F_{ab} = g^{F cd} R^F_{c a d b}.
    pub fn ricci(&self, a: usize, b: usize) -> Complex64 {
        (0..DIM).map(|c| self.get(c, a, pair_idx(c), b)).sum()
    }

    /// Scalar contraction g^{F ab} R^F_{ab}.
    pub fn scalar(&self) -> f64 {
        let s: Complex64 = (0..DIM).map(|a| self.ricci(a, pair_idx(a))).sum();
        s.re
    }

    /// Weyl tensor from the table and its own Ricci contraction:
    /// W = R - 1/4 (Ric ∧ g) with P^F = Ric/4 in six dimensions with R^F = 0.
    pub fn weyl(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        let gf = |p: usize, q: usize| -> f64 {
            if q == pair_idx(p) {
                1.0
            } else {
                0.0
            }
        };
        self.get(a, b, c, d)
            - 0.25
                * (self.ricci(a, c) * gf(b, d) - self.ricci(b, c) * gf(a, d)
                    + self.ricci(b, d) * gf(a, c)
                    - self.ricci(a, d) * gf(b, c))
    }
}

/// Build the full table at a coframe point.
pub fn curvature_table(
    chart: &MetricChart,
    point: &NullCoframePoint,
) -> Result<CurvatureTable, FeffermanError> {
    let fc = frame_contractions(chart, point)?;
    Ok(table_from_contractions(&fc))
}

fn table_from_contractions(fc: &FrameContractions) -> CurvatureTable {
    let re = Complex64::from;
    let p_zbar_eta = fc.p_zeta_eta.conj();
    let p_zbar_zbar = fc.p_zeta_zeta.conj();
    let seeds: Vec<([usize; 4], Complex64)> = vec![
        ([I0, I1, I0, I2B], re(0.5 * fc.p_eta_eta)),
        ([I0, I2B, I1, I1B], -0.5 * fc.p_zeta_eta),
        ([I0, I2B, I2, I3], re(-0.25)),
        ([I0, I1, I0, I1B], re(-fc.sc_zeta_zbar)),
        ([I0, I1B, I0, I1B], fc.sc_zeta_zeta),
        ([I0, I1B, I0, I3], -0.5 * fc.p_zeta_eta),
        ([I0, I1B, I1, I2], 0.5 * p_zbar_eta),
        ([I0, I1B, I2, I1B], -0.5 * fc.p_zeta_eta),
        ([I0, I1B, I1, I1B], -fc.sc_zeta_eta),
        ([I0, I1B, I1, I3], re(-0.5 * fc.p_zeta_zbar)),
        ([I0, I1B, I1B, I3], -0.5 * fc.p_zeta_zeta),
        ([I1, I2, I1, I1B], 0.5 * p_zbar_zbar),
        ([I2, I1B, I2, I2B], re(-0.25)),
        ([I1, I1B, I2, I1B], re(-0.5 * fc.p_zeta_zbar)),
        ([I2, I3, I1B, I3], re(0.25)),
        ([I1, I1B, I1, I1B], re(fc.sc_eta_eta)),
    ];

    let mut known: HashMap<[usize; 4], Complex64> = HashMap::new();
    let mut queue: Vec<([usize; 4], Complex64)> = seeds;
    while let Some((idx, val)) = queue.pop() {
        if let Some(prev) = known.get(&idx) {
            debug_assert!(
                (prev - val).norm() < 1e-9 * (1.0 + val.norm()),
                "inconsistent curvature table entry {idx:?}: {prev} vs {val}"
            );
            continue;
        }
        known.insert(idx, val);
        let [a, b, c, d] = idx;
        queue.push(([b, a, c, d], -val));
        queue.push(([a, b, d, c], -val));
        queue.push(([c, d, a, b], val));
        queue.push((
            [conj_idx(a), conj_idx(b), conj_idx(c), conj_idx(d)],
            val.conj(),
        ));
    }

    let mut values = vec![Complex64::ZERO; DIM * DIM * DIM * DIM];
    for (idx, val) in known {
        let [a, b, c, d] = idx;
        values[((a * DIM + b) * DIM + c) * DIM + d] = val;
    }
    CurvatureTable { values }
}

/// Flatness verdict over random samples.
#[derive(Clone, Debug)]
pub struct FlatnessReport {
    pub conformally_flat: bool,
    pub max_star_cotton: f64,
    pub max_weyl: f64,
    /// Whether the star-Cotton verdict and the Weyl-component verdict agree.
    pub cross_check_consistent: bool,
    pub samples: usize,
}

/// Draw a normalized coframe point at `x` with a random frame.
pub fn random_coframe(
    chart: &MetricChart,
    x: Vec3,
    rng: &mut impl Rng,
) -> Result<NullCoframePoint, FeffermanError> {
    let g = chart.metric(&x)?;
    for _ in 0..32 {
        let u_raw = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let w_raw = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let nu = metric_dot(&g, &u_raw, &u_raw);
        if nu < 1e-4 {
            continue;
        }
        let u = u_raw / nu.sqrt();
        let mut w = w_raw - metric_dot(&g, &w_raw, &u) * u;
        let nw = metric_dot(&g, &w, &w);
        if nw < 1e-4 {
            continue;
        }
        w /= nw.sqrt();
        let sqrt2 = 2.0f64.sqrt();
        let mut zeta = CVec3::from_element(Complex64::ZERO);
        for i in 0..3 {
            zeta[i] = Complex64::new(u[i], w[i]) / sqrt2;
        }
        return NullCoframePoint::new(chart, x, zeta);
    }
    Err(FeffermanError::DegenerateFrame)
}

/// Random interior point of the chart domain, away from the walls so that
/// difference stencils stay inside.
pub fn random_interior_point(chart: &MetricChart, rng: &mut impl Rng) -> Vec3 {
    let d = chart.domain();
    let mut x = Vec3::zeros();
    for i in 0..3 {
        let u: f64 = rng.random_range(0.2..0.8);
        x[i] = d.lo[i] + u * (d.hi[i] - d.lo[i]);
    }
    x
}

/// Sample `n_points` interior points; at each, measure the largest
/// star-Cotton component and the largest Fefferman Weyl component over a
/// random coframe. Conformal flatness means both stay below `tol`.
pub fn conformal_flatness_check(
    chart: &MetricChart,
    rng: &mut impl Rng,
    n_points: usize,
    tol: f64,
) -> Result<FlatnessReport, FeffermanError> {
    let mut max_sc = 0.0f64;
    let mut max_weyl = 0.0f64;
    for _ in 0..n_points {
        let x = random_interior_point(chart, rng);
        let sc = tensor::star_cotton(chart, &x)?;
        max_sc = max_sc.max(sc.amax());
        let point = random_coframe(chart, x, rng)?;
        let report = fefferman_curvature(chart, &point)?;
        max_weyl = max_weyl.max(report.max_weyl_abs());
    }
    let star_flat = max_sc < tol;
    let weyl_flat = max_weyl < tol;
    Ok(FlatnessReport {
        conformally_flat: star_flat,
        max_star_cotton: max_sc,
        max_weyl,
        cross_check_consistent: star_flat == weyl_flat,
        samples: n_points,
    })
}
