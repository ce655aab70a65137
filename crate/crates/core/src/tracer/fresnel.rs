//! Fresnel reflection coefficients at a planar material interface.
//!
//! Sign convention: at normal incidence both polarizations reduce to
//! `(1 − √ε)/(1 + √ε)`, so a denser medium reflects with a phase flip for
//! both. With this convention a perfect conductor gives Γ∥ = Γ⊥ = −1 and
//! the parallel coefficient vanishes at the Brewster angle.

use num_complex::Complex64;

use crate::scene::Material;
use crate::units::VACUUM_PERMITTIVITY;

/// Reflection coefficients `(Γ_parallel, Γ_perpendicular)` for a wave
/// hitting the material at `incidence` radians from the surface normal.
/// Conductivity enters through the complex permittivity at `carrier_hz`.
pub fn fresnel_coefficients(
    material: &Material,
    incidence: f64,
    carrier_hz: f64,
) -> (Complex64, Complex64) {
    debug_assert!((0.0..std::f64::consts::FRAC_PI_2).contains(&incidence));
    if material.is_perfect_conductor {
        return (Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.0));
    }
    let omega = std::f64::consts::TAU * carrier_hz;
    let eta = Complex64::new(
        material.relative_permittivity,
        -material.conductivity / (omega * VACUUM_PERMITTIVITY),
    );
    let cos_i = incidence.cos();
    let sin2 = incidence.sin().powi(2);
    let root = (eta - sin2).sqrt();
    let perp = (cos_i - root) / (cos_i + root);
    let par = -(eta * cos_i - root) / (eta * cos_i + root);
    (par, perp)
}
