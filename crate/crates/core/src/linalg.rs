//! Small real/complex 3-vector helpers shared by all modules.
//!
//! Complex vectors are stored component-wise as real-imaginary pairs
//! (`num_complex::Complex<f64>`). All metric pairings go through the two
//! contraction routines below; `metric_cdot` is complex *bilinear* (no
//! conjugation), so hermitian pairings are spelled explicitly as
//! `metric_cdot(g, a, &conj3(b))` at the call site.

use num_complex::Complex64;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type CVec3 = nalgebra::Vector3<Complex64>;

/// g_ij x^i y^j for real vectors.
pub fn metric_dot(g: &Mat3, x: &Vec3, y: &Vec3) -> f64 {
    (g * y).dot(x)
}

/// g_ij x^i y^j extended complex-bilinearly. No conjugation is applied.
pub fn metric_cdot(g: &Mat3, x: &CVec3, y: &CVec3) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            acc += g[(i, j)] * x[i] * y[j];
        }
    }
    acc
}

pub fn complexify(v: &Vec3) -> CVec3 {
    CVec3::new(v.x.into(), v.y.into(), v.z.into())
}

pub fn conj3(v: &CVec3) -> CVec3 {
    v.map(|c| c.conj())
}

pub fn re3(v: &CVec3) -> Vec3 {
    Vec3::new(v.x.re, v.y.re, v.z.re)
}

pub fn im3(v: &CVec3) -> Vec3 {
    Vec3::new(v.x.im, v.y.im, v.z.im)
}

/// Largest absolute value among real and imaginary parts.
pub fn cmax_abs(v: &CVec3) -> f64 {
    re3(v).amax().max(im3(v).amax())
}
