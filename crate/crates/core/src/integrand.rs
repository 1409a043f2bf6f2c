//! Integrand kernels for the two contour integrals making up ρ, plus the
//! framing shift that keeps samples off the singular coincidence sets.
//!
//! All tangents are raw segment velocities (not unit vectors); both kernels
//! are multilinear in them, which is what lets the sampler skip the
//! arc-length Jacobian.

use crate::error::{Error, Result};
use crate::geom::V3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How the framing shift ε is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EpsilonSpec {
    /// ε = factor · (minimum segment length).
    Relative(f64),
    /// ε given directly in length units.
    Absolute(f64),
    /// Framing disabled (ε = 0); only safe for curves sampled away from
    /// exact coincidences.
    Off,
}

impl Default for EpsilonSpec {
    fn default() -> Self {
        EpsilonSpec::Relative(1e-4)
    }
}

impl EpsilonSpec {
    /// Resolves to a concrete ε, enforcing ε < 0.1 · min segment length.
    pub fn resolve(&self, min_seg: f64) -> Result<f64> {
        let eps = match *self {
            EpsilonSpec::Relative(f) => f * min_seg,
            EpsilonSpec::Absolute(e) => e,
            EpsilonSpec::Off => 0.0,
        };
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::Domain(format!("framing shift ε = {eps} must be ≥ 0")));
        }
        if eps != 0.0 && eps >= 0.1 * min_seg {
            return Err(Error::Domain(format!(
                "framing shift ε = {eps:.3e} too large vs minimum segment length {min_seg:.3e} (need ε < 0.1·min)"
            )));
        }
        Ok(eps)
    }
}

/// The constant unit normal along which trajectory copies are displaced.
pub fn frame_normal() -> V3 {
    V3::new(1.0, 1.0, 1.0) / 3f64.sqrt()
}

/// Resolved framing: trajectory copy j (1-based) is displaced by j·ε along
/// the fixed normal, so distinct copies never coincide even on shared
/// curve points.
#[derive(Clone, Copy, Debug)]
pub struct Framing {
    pub epsilon: f64,
    step: V3,
}

impl Framing {
    pub fn new(epsilon: f64) -> Self {
        Framing { epsilon, step: frame_normal() * epsilon }
    }

    pub fn resolve(spec: EpsilonSpec, min_seg: f64) -> Result<Self> {
        Ok(Framing::new(spec.resolve(min_seg)?))
    }

    /// Shift for trajectory copy `copy` (1-based).
    #[inline]
    pub fn shift(&self, copy: usize, p: V3) -> V3 {
        p + self.step * copy as f64
    }
}

/// Displaces the j-th position (0-based slot, 1-based multiplier) by j·ε
/// along the frame normal. Tangents are left untouched.
pub fn apply_framing(points: &mut [V3], epsilon: f64) {
    let step = frame_normal() * epsilon;
    for (j, p) in points.iter_mut().enumerate() {
        *p += step * (j + 1) as f64;
    }
}

/// Triple-point kernel. Chords a = y − x, b = z − x, c = y − z enter through
/// C1 = 2π/(abc), C2 = 1/(ab + a·b), C3 = a + b − c; the result is the full
/// bracketed combination scaled by −1/32π³. Singular configurations produce
/// non-finite values that the samplers flag and exclude.
pub fn f1(x: &V3, y: &V3, z: &V3, tx: &V3, ty: &V3, tz: &V3) -> f64 {
    let av = y - x;
    let bv = z - x;
    let cv = y - z;
    let a = av.norm();
    let b = bv.norm();
    let c = cv.norm();
    let c1 = 2.0 * PI / (a * b * c);
    let c2 = 1.0 / (a * b + av.dot(&bv));
    let c3 = a + b - c;

    let axb = av.cross(&bv);
    let zxx = tz.cross(tx);
    let yxx = ty.cross(tx);
    let y_axb = ty.dot(&axb);
    let z_axb = tz.dot(&axb);

    let g1 = ty.dot(tz) * tx.dot(&cv) + tx.dot(tz) * ty.dot(&bv) - tx.dot(ty) * tz.dot(&av);
    let g2 = y_axb * (av + bv * (a / b)).dot(&zxx) + z_axb * (bv + av * (b / a)).dot(&yxx);
    let g3 = y_axb * (bv * ((c - a) / (b * b)) + cv * ((a + b) / (c * c))).dot(&zxx)
        + z_axb * (av * ((c - b) / (a * a)) - cv * ((a + b) / (c * c))).dot(&yxx);

    let bracket = c1 * c2 * c3 * g1 - c1 * c2 * c2 * c3 * g2 + c1 * c2 * g3;
    -bracket / (32.0 * PI * PI * PI)
}

/// Quadruple-point kernel: the product of the two linking-style factors
/// (ẋ·(ż×b)/b³)(ẏ·(ẇ×c)/c³) with b = z − x, c = y − w, scaled by −1/8π².
/// The overall orientation is fixed so that the trefoil lands at ρ ≈ +23/12.
#[allow(clippy::too_many_arguments)]
pub fn f2(x: &V3, y: &V3, z: &V3, w: &V3, tx: &V3, ty: &V3, tz: &V3, tw: &V3) -> f64 {
    let bv = z - x;
    let cv = y - w;
    let b = bv.norm();
    let c = cv.norm();
    let p = tx.dot(&tz.cross(&bv)) / (b * b * b);
    let q = ty.dot(&tw.cross(&cv)) / (c * c * c);
    -p * q / (8.0 * PI * PI)
}
