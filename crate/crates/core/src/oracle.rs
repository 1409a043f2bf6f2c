//! Deterministic quadrature reference for the two contour integrals.
//!
//! Composite midpoint rule on a grid of M = q·N points per curve period:
//! midpoints never hit joints or arc-zone boundaries, where tangent formulas
//! switch. The triple sum runs in O(M³); the quadruple sum factorizes into
//! prefix/suffix sums of a pairwise kernel matrix, dropping it to O(M²).

use crate::error::{Error, Result};
use crate::integrand::{f1, frame_normal, EpsilonSpec, Framing};
use crate::knot::Curve;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadratureSpec {
    /// Grid points per unit S-interval.
    pub q: usize,
    /// Refusal cap on the total grid size M = q·N.
    pub cap: usize,
    pub epsilon: EpsilonSpec,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { q: 4, cap: 512, epsilon: EpsilonSpec::default() }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleResult {
    pub rho1: f64,
    pub rho2: f64,
    pub rho: f64,
    /// Grid size actually used.
    pub m: usize,
}

struct Grid {
    pos: Vec<crate::geom::V3>,
    tan: Vec<crate::geom::V3>,
    h: f64,
    eps: f64,
}

fn build_grid<C: Curve>(curve: &C, spec: &QuadratureSpec) -> Result<Grid> {
    if spec.q < 1 {
        return Err(Error::Domain("quadrature density q must be >= 1".into()));
    }
    let upper = curve.upper();
    let m = (spec.q as f64 * upper).round() as usize;
    if m < 3 {
        return Err(Error::Domain(format!("grid of {m} points is too coarse")));
    }
    if m > spec.cap {
        return Err(Error::Domain(format!(
            "grid size q·N = {m} exceeds the oracle cap {} (raise --cap if intended)",
            spec.cap
        )));
    }
    let eps = spec.epsilon.resolve(curve.min_segment_length())?;
    let h = upper / m as f64;
    let (pos, tan) = (0..m).map(|i| curve.eval((i as f64 + 0.5) * h)).unzip();
    Ok(Grid { pos, tan, h, eps })
}

/// Triple ordered integral by midpoint quadrature, O(M³).
pub fn oracle_rho1<C: Curve>(curve: &C, spec: &QuadratureSpec) -> Result<f64> {
    let g = build_grid(curve, spec)?;
    let framing = Framing::new(g.eps);
    let px: Vec<_> = g.pos.iter().map(|&p| framing.shift(1, p)).collect();
    let py: Vec<_> = g.pos.iter().map(|&p| framing.shift(2, p)).collect();
    let pz: Vec<_> = g.pos.iter().map(|&p| framing.shift(3, p)).collect();
    // Parallel over the outer index; ordered collect keeps the reduction
    // deterministic for any worker count.
    #[allow(clippy::needless_range_loop)]
    let partials: Vec<f64> = (2..px.len())
        .into_par_iter()
        .map(|i| {
            let mut tot = 0.0;
            for j in 1..i {
                for k in 0..j {
                    tot += f1(&px[i], &py[j], &pz[k], &g.tan[i], &g.tan[j], &g.tan[k]);
                }
            }
            tot
        })
        .collect();
    Ok(partials.iter().sum::<f64>() * g.h * g.h * g.h)
}

/// Quadruple ordered integral by midpoint quadrature, factorized to O(M²).
///
/// Both kernel factors reduce to the pairwise matrix
/// G[i][j] = (t_i × t_j)·(p_i − p_j − 2εn̂)/|p_i − p_j − 2εn̂|³ (the framed
/// offset between copies two apart). The ordered sum over s > t > u > v of
/// (−G[s][u])·G[t][v] factorizes through suffix sums over s and prefix sums
/// over v.
pub fn oracle_rho2<C: Curve>(curve: &C, spec: &QuadratureSpec) -> Result<f64> {
    let g = build_grid(curve, spec)?;
    let m = g.pos.len();
    let off = frame_normal() * (2.0 * g.eps);
    let mut gm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let d = g.pos[i] - g.pos[j] - off;
            let r = d.norm();
            gm[i * m + j] = g.tan[i].cross(&g.tan[j]).dot(&d) / (r * r * r);
        }
    }
    // sa[t][u] = Σ_{s>t} −G[s][u]; accumulate rows bottom-up.
    let mut sa = vec![0.0; m * m];
    for t in (0..m.saturating_sub(1)).rev() {
        for u in 0..m {
            sa[t * m + u] = sa[(t + 1) * m + u] - gm[(t + 1) * m + u];
        }
    }
    // sb[t][u] = Σ_{v<u} G[t][v]; accumulate columns left-to-right.
    let mut sb = vec![0.0; m * m];
    for t in 0..m {
        for u in 1..m {
            sb[t * m + u] = sb[t * m + u - 1] + gm[t * m + u - 1];
        }
    }
    let mut tot = 0.0;
    for t in 0..m {
        for u in 0..t {
            tot += sa[t * m + u] * sb[t * m + u];
        }
    }
    let h4 = g.h * g.h * g.h * g.h;
    Ok(-tot * h4 / (8.0 * PI * PI))
}

/// Both integrals and their sum.
pub fn oracle_rho<C: Curve>(curve: &C, spec: &QuadratureSpec) -> Result<OracleResult> {
    let rho1 = oracle_rho1(curve, spec)?;
    let rho2 = oracle_rho2(curve, spec)?;
    let upper = curve.upper();
    let m = (spec.q as f64 * upper).round() as usize;
    Ok(OracleResult { rho1, rho2, rho: rho1 + rho2, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::f2;
    use crate::knot::{generate, shipped, GenKind};
    use approx::assert_relative_eq;

    #[test]
    fn circle_64gon_lands_near_the_unknot_value() {
        let k = generate(&GenKind::Circle { m: 64 }).unwrap();
        // q = 1 would put every midpoint exactly on an arc weld of the fully
        // arced polygon, a degenerate sample set; q = 2 resolves the arcs.
        let sk = crate::smooth::SmoothedKnot::new(k).unwrap();
        let spec = QuadratureSpec { q: 2, cap: 128, ..Default::default() };
        let r = oracle_rho(&sk, &spec).unwrap();
        assert!((r.rho + 1.0 / 12.0).abs() < 0.02, "rho = {}", r.rho);
    }

    #[test]
    fn factorized_quadruple_sum_matches_brute_force() {
        let k = shipped("0_1_square_4").unwrap();
        let spec = QuadratureSpec { q: 3, cap: 64, ..Default::default() };
        let fast = oracle_rho2(&k, &spec).unwrap();

        // O(M⁴) direct evaluation of the same grid.
        let g = build_grid(&k, &spec).unwrap();
        let framing = Framing::new(g.eps);
        let m = g.pos.len();
        let px: Vec<_> = g.pos.iter().map(|&p| framing.shift(1, p)).collect();
        let py: Vec<_> = g.pos.iter().map(|&p| framing.shift(2, p)).collect();
        let pz: Vec<_> = g.pos.iter().map(|&p| framing.shift(3, p)).collect();
        let pw: Vec<_> = g.pos.iter().map(|&p| framing.shift(4, p)).collect();
        let mut tot = 0.0;
        for s in 3..m {
            for t in 2..s {
                for u in 1..t {
                    for v in 0..u {
                        tot += f2(
                            &px[s], &py[t], &pz[u], &pw[v],
                            &g.tan[s], &g.tan[t], &g.tan[u], &g.tan[v],
                        );
                    }
                }
            }
        }
        let brute = tot * g.h.powi(4);
        assert_relative_eq!(fast, brute, max_relative = 1e-11);
    }

    #[test]
    fn refusal_cap() {
        let k = generate(&GenKind::Circle { m: 64 }).unwrap();
        let spec = QuadratureSpec { q: 16, cap: 512, ..Default::default() };
        assert!(oracle_rho1(&k, &spec).is_err());
    }

    #[test]
    fn quadrature_is_deterministic() {
        let k = shipped("3_1_eight_seg").unwrap();
        let spec = QuadratureSpec { q: 2, cap: 64, ..Default::default() };
        let a = oracle_rho(&k, &spec).unwrap();
        let b = oracle_rho(&k, &spec).unwrap();
        assert_eq!(a.rho.to_bits(), b.rho.to_bits());
    }
}
