//! Coordinate-space geometry helpers: circle/line fitting for integrator
//! oracles, polyline Hausdorff distances for point-set comparisons, and angle
//! arithmetic mod 2π.

use crate::linalg::{Mat3, Vec3};

/// A circle in coordinate space.
#[derive(Clone, Copy, Debug)]
pub struct Circle {
    pub center: Vec3,
    pub normal: Vec3,
    pub radius: f64,
}

impl Circle {
    /// Distance from a point to the circle (not the disk).
    pub fn distance(&self, p: &Vec3) -> f64 {
        let u = p - self.center;
        let z = u.dot(&self.normal);
        let rho = (u - z * self.normal).norm();
        (z * z + (rho - self.radius) * (rho - self.radius)).sqrt()
    }
}

/// Best-fit plane through the points: (centroid, unit normal). The normal is
/// the eigenvector of the scatter matrix with the smallest eigenvalue.
fn fit_plane(points: &[Vec3]) -> (Vec3, Vec3) {
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vec3>() / n;
    let mut scatter = Mat3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut best = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (centroid, eig.eigenvectors.column(best).into_owned())
}

/// Algebraic least-squares circle fit: plane fit followed by a Kåsa fit of
/// the projected points. Returns the circle and the max point-to-circle
/// distance over the input.
pub fn fit_circle(points: &[Vec3]) -> Option<(Circle, f64)> {
    if points.len() < 4 {
        return None;
    }
    let (centroid, normal) = fit_plane(points);
    // In-plane coordinates.
    let e1 = pick_orthogonal(&normal);
    let e2 = normal.cross(&e1);

    // Kåsa: minimize |(u,v) - c|^2 - r^2 linearly: 2 c1 u + 2 c2 v + d = u^2 + v^2.
    let mut ata = Mat3::zeros();
    let mut atb = Vec3::zeros();
    for p in points {
        let d = p - centroid;
        let (u, v) = (d.dot(&e1), d.dot(&e2));
        let row = Vec3::new(2.0 * u, 2.0 * v, 1.0);
        let rhs = u * u + v * v;
        ata += row * row.transpose();
        atb += rhs * row;
    }
    let sol = ata.lu().solve(&atb)?;
    let r2 = sol.z + sol.x * sol.x + sol.y * sol.y;
    if !(r2 > 0.0) {
        return None;
    }
    let circle = Circle {
        center: centroid + sol.x * e1 + sol.y * e2,
        normal,
        radius: r2.sqrt(),
    };
    let worst = points
        .iter()
        .map(|p| circle.distance(p))
        .fold(0.0f64, f64::max);
    Some((circle, worst))
}

/// Max distance from the points to their least-squares line.
pub fn line_fit_residual(points: &[Vec3]) -> f64 {
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vec3>() / n;
    let mut scatter = Mat3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut best = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let dir = eig.eigenvectors.column(best).into_owned();
    points
        .iter()
        .map(|p| {
            let d = p - centroid;
            (d - d.dot(&dir) * dir).norm()
        })
        .fold(0.0f64, f64::max)
}

/// Max deviation of the samples from the best circle or line, whichever fits
/// better. Conformal geodesic traces of the flat metric must drive this to
/// integrator accuracy.
pub fn circle_or_line_residual(points: &[Vec3]) -> f64 {
    let line = line_fit_residual(points);
    match fit_circle(points) {
        Some((_, circle)) => circle.min(line),
        None => line,
    }
}

fn pick_orthogonal(n: &Vec3) -> Vec3 {
    let cand = if n.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    (cand - cand.dot(n) * n).normalize()
}

fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

fn directed_polyline_distance(from: &[Vec3], to: &[Vec3]) -> f64 {
    from.iter()
        .map(|p| {
            to.windows(2)
                .map(|seg| point_segment_distance(p, &seg[0], &seg[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max)
}

/// Symmetric Hausdorff distance between two polylines (the continuous curves,
/// not the discrete vertex sets, so sampling density does not dominate).
pub fn hausdorff_polyline(a: &[Vec3], b: &[Vec3]) -> f64 {
    directed_polyline_distance(a, b).max(directed_polyline_distance(b, a))
}

/// Truncate a polyline to the given chord length, interpolating the last
/// vertex.
pub fn truncate_by_length(points: &[Vec3], length: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(points.len());
    if points.is_empty() {
        return out;
    }
    out.push(points[0]);
    let mut acc = 0.0;
    for w in points.windows(2) {
        let seg = (w[1] - w[0]).norm();
        if acc + seg >= length {
            let t = if seg > 0.0 { (length - acc) / seg } else { 0.0 };
            out.push(w[0] + t * (w[1] - w[0]));
            return out;
        }
        acc += seg;
        out.push(w[1]);
    }
    out
}

pub fn chord_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Principal value of an angle in (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Difference of two angles as a principal value.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_circle_fits_to_rounding() {
        let pts: Vec<Vec3> = (0..200)
            .map(|i| {
                let t = 0.03 * i as f64;
                Vec3::new(1.0 + 2.0 * t.cos(), -0.5 + 2.0 * t.sin(), 3.0)
            })
            .collect();
        let (circle, worst) = fit_circle(&pts).unwrap();
        assert!(worst < 1e-12);
        assert!((circle.radius - 2.0).abs() < 1e-12);
        assert!((circle.center - Vec3::new(1.0, -0.5, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn tilted_arc_fits() {
        // Quarter arc on a tilted plane.
        let n = Vec3::new(1.0, 1.0, 1.0).normalize();
        let e1 = pick_orthogonal(&n);
        let e2 = n.cross(&e1);
        let pts: Vec<Vec3> = (0..100)
            .map(|i| {
                let t = 0.5 * PI * i as f64 / 99.0;
                Vec3::new(0.3, 0.0, -0.2) + 1.7 * (t.cos() * e1 + t.sin() * e2)
            })
            .collect();
        let (_, worst) = fit_circle(&pts).unwrap();
        assert!(worst < 1e-10, "worst {worst}");
    }

    #[test]
    fn line_points_prefer_line() {
        let pts: Vec<Vec3> = (0..50)
            .map(|i| Vec3::new(0.1 * i as f64, 0.2 * i as f64, -0.05 * i as f64))
            .collect();
        assert!(circle_or_line_residual(&pts) < 1e-12);
    }

    #[test]
    fn hausdorff_of_resampled_curve_is_small() {
        let fine: Vec<Vec3> = (0..2000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 1999.0;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let coarse: Vec<Vec3> = (0..500)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 499.0;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        // Chord sagitta of the coarse polyline bounds the distance.
        assert!(hausdorff_polyline(&fine, &coarse) < 4e-5);
    }

    #[test]
    fn truncation_matches_requested_length() {
        let pts: Vec<Vec3> = (0..11).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let cut = truncate_by_length(&pts, 4.5);
        assert_eq!(cut.len(), 6);
        assert!((cut.last().unwrap().x - 4.5).abs() < 1e-14);
        assert!((chord_length(&cut) - 4.5).abs() < 1e-14);
    }

    #[test]
    fn angles_wrap_to_principal_values() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-3.0 * PI) - PI).abs() < 1e-12);
        assert!((angle_difference(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
    }
}
