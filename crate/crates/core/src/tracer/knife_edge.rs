//! Scalar knife-edge diffraction coefficient.
//!
//! The coefficient is the classical Fresnel-integral field ratio
//!
//! ```text
//! F(ν) = (1 + j)/2 · ∫_ν^∞ exp(−jπt²/2) dt
//! ```
//!
//! with `|F(0)| = 1/2` (6.02 dB loss at grazing), `F → 1` for full
//! clearance (ν → −∞) and monotonically decreasing amplitude as the
//! obstruction deepens (ν → +∞).

use num_complex::Complex64;

/// Fresnel cosine and sine integrals `C(x)`, `S(x)` (argument convention
/// `∫ cos(πt²/2) dt`). Power series up to |x| = 3, auxiliary asymptotic
/// expansion beyond; both odd in x. Absolute accuracy ~1e-6 or better.
pub fn fresnel_cs(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (c, s) = if ax <= 3.0 {
        fresnel_series(ax)
    } else {
        fresnel_asymptotic(ax)
    };
    if x < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

fn fresnel_series(x: f64) -> (f64, f64) {
    // C(x) = Σ (−1)^k (π/2)^{2k} x^{4k+1} / ((2k)!(4k+1))
    // S(x) = Σ (−1)^k (π/2)^{2k+1} x^{4k+3} / ((2k+1)!(4k+3))
    let half_pi = std::f64::consts::FRAC_PI_2;
    let x2 = x * x;
    let w = half_pi * x2; // π x² / 2
    let mut c_term = x; // k = 0 term without the 1/(4k+1) factor
    let mut s_term = x * w;
    let mut c_sum = c_term; // /(4·0+1) = 1
    let mut s_sum = s_term / 3.0;
    let mut k = 0usize;
    loop {
        k += 1;
        // term_{k} = term_{k−1} · (−w²) / ((2k−1)(2k)) for C
        c_term *= -(w * w) / ((2 * k - 1) as f64 * (2 * k) as f64);
        s_term *= -(w * w) / ((2 * k) as f64 * (2 * k + 1) as f64);
        let dc = c_term / (4 * k + 1) as f64;
        let ds = s_term / (4 * k + 3) as f64;
        c_sum += dc;
        s_sum += ds;
        if dc.abs() < 1e-17 && ds.abs() < 1e-17 {
            break;
        }
        if k > 60 {
            break;
        }
    }
    (c_sum, s_sum)
}

fn fresnel_asymptotic(x: f64) -> (f64, f64) {
    // auxiliary functions f, g with optimally truncated asymptotic series
    let pix2 = std::f64::consts::PI * x * x;
    let inv = 1.0 / pix2;
    // f ~ (1/πx)·Σ (−1)^m (4m−1)!! · inv^{2m}
    // g ~ (1/πx)·Σ (−1)^m (4m+1)!! · inv^{2m+1}
    let mut f_sum = 0.0;
    let mut g_sum = 0.0;
    let mut term_f = 1.0;
    let mut term_g = inv;
    let mut sign = 1.0;
    let mut m = 0usize;
    loop {
        f_sum += sign * term_f;
        g_sum += sign * term_g;
        // next numerators: (4m−1)!! → (4m+3)!! multiplies (4m+1)(4m+3)
        let next_f = term_f * (4 * m + 1) as f64 * (4 * m + 3) as f64 * inv * inv;
        let next_g = term_g * (4 * m + 3) as f64 * (4 * m + 5) as f64 * inv * inv;
        // stop at the smallest term (asymptotic optimal truncation)
        if next_f >= term_f || m >= 8 {
            break;
        }
        term_f = next_f;
        term_g = next_g;
        sign = -sign;
        m += 1;
    }
    let scale = 1.0 / (std::f64::consts::PI * x);
    let f = f_sum * scale;
    let g = g_sum * scale;
    let arg = std::f64::consts::FRAC_PI_2 * x * x;
    let (sin_a, cos_a) = arg.sin_cos();
    let c = 0.5 + f * sin_a - g * cos_a;
    let s = 0.5 - f * cos_a - g * sin_a;
    (c, s)
}

/// Complex knife-edge coefficient `F(ν)` for Fresnel parameter `ν`.
pub fn knife_edge_coefficient(nu: f64) -> Complex64 {
    let (c, s) = fresnel_cs(nu);
    let re = 0.5 - c;
    let im = 0.5 - s;
    // (1+j)/2 · (re − j·im) = [(re+im) + j(re−im)]/2
    Complex64::new(0.5 * (re + im), 0.5 * (re - im))
}

/// Diffraction loss in dB (positive) for Fresnel parameter `ν`.
pub fn knife_edge_loss_db(nu: f64) -> f64 {
    -20.0 * knife_edge_coefficient(nu).norm().log10()
}

/// Fresnel parameter for an edge point at perpendicular clearance `h`
/// (positive when the edge obstructs the direct line) with leg lengths
/// `d1`, `d2` at wavelength `lambda`.
pub fn fresnel_parameter(h: f64, d1: f64, d2: f64, lambda: f64) -> f64 {
    debug_assert!(d1 > 0.0 && d2 > 0.0 && lambda > 0.0);
    h * (2.0 * (d1 + d2) / (lambda * d1 * d2)).sqrt()
}

/// Fresnel parameter for a concrete bend `a → edge_point → b`: the
/// clearance is the distance from the edge point to the direct line, with
/// positive sign when the direct path is `shadowed` by the obstruction.
pub fn geometric_fresnel_parameter(
    a: crate::geom::Vec3,
    edge_point: crate::geom::Vec3,
    b: crate::geom::Vec3,
    shadowed: bool,
    carrier_hz: f64,
) -> f64 {
    let d1 = a.distance(edge_point);
    let d2 = edge_point.distance(b);
    let h = crate::geom::point_line_distance(edge_point, a, b);
    let sign = if shadowed { 1.0 } else { -1.0 };
    sign * fresnel_parameter(h, d1, d2, crate::units::wavelength(carrier_hz))
}

/// Knife-edge coefficient of a concrete bend geometry at the carrier.
pub fn knife_edge_diffraction(
    a: crate::geom::Vec3,
    edge_point: crate::geom::Vec3,
    b: crate::geom::Vec3,
    shadowed: bool,
    carrier_hz: f64,
) -> Complex64 {
    knife_edge_coefficient(geometric_fresnel_parameter(
        a, edge_point, b, shadowed, carrier_hz,
    ))
}
