//! Corner smoothing: every sharp corner is replaced by a trigonometric arc
//! confined to a ball around the vertex, making the curve G¹ while staying
//! isotopic to the original polygon.
//!
//! Each corner i gets extents d_i (into the incoming segment) and d_i′ (into
//! the outgoing one). The two arc branches X_i⁺ and X_i⁻ share the weld point
//! θ = π/4; their coefficients collapse to the simple quarter-circle-like
//! form when d_i/l_i = d_i′/l_{i+1}. Extents are planned sequentially so the
//! balls of distinct corners meet in at most one boundary point, which keeps
//! the arcs inside a tube around the polygon and preserves the knot class.

use crate::error::{Error, Result};
use crate::geom::{closest_on_segment, V3};
use crate::knot::{Curve, DiscreteKnot};
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

/// Cosine tolerance: a joint with cos ∠(l_i, l_{i+1}) > 1 − 1e−9 is treated
/// as straight and skipped.
pub const PARALLEL_TOL: f64 = 1e-9;
/// Halving-loop cap for corners whose clearance to earlier balls is zero.
const MAX_HALVINGS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CornerStatus {
    Smoothed,
    ParallelSkip,
}

/// Planned arc extents for one corner. `d_in` reaches into the incoming
/// segment, `d_out` into the outgoing one; the guarding ball has radius
/// `d_in` (the planner always sets `d_in == d_out`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlannedCorner {
    pub status: CornerStatus,
    pub d_in: f64,
    pub d_out: f64,
}

impl PlannedCorner {
    pub fn is_smoothed(&self) -> bool {
        self.status == CornerStatus::Smoothed
    }

    pub fn radius(&self) -> f64 {
        self.d_in
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CornerPlan {
    pub corners: Vec<PlannedCorner>,
}

#[derive(Clone, Copy, Debug)]
pub struct NearestPointResult {
    pub point: V3,
    pub distance: f64,
    pub segment_index: usize,
    /// Foot parameter on the winning segment, clamped to [0, 1].
    pub sigma_min: f64,
}

/// Global minimum of vertex-to-segment distance over all non-excluded
/// segments. `excluded` must contain at least the two segments adjacent to
/// the vertex (their distance is trivially zero).
pub fn nearest_point_to_vertex(
    knot: &DiscreteKnot,
    vertex: usize,
    excluded: &[usize],
) -> Result<NearestPointResult> {
    let n = knot.n();
    let q = knot.vertex(vertex);
    let mut best: Option<NearestPointResult> = None;
    for k in 0..n {
        if excluded.contains(&k) {
            continue;
        }
        let a = knot.vertex(k);
        let b = knot.vertex(k + 1);
        let (point, sigma, _) = closest_on_segment(&q, &a, &b);
        let distance = (q - point).norm();
        if best.is_none_or(|b| distance < b.distance) {
            best = Some(NearestPointResult { point, distance, segment_index: k, sigma_min: sigma });
        }
    }
    best.ok_or_else(|| Error::Domain("all segments excluded from nearest-point search".into()))
}

/// Plans arc extents for every corner, processing them in vertex order.
///
/// For each non-straight corner the free clearance d* is the minimum of the
/// distance to the rest of the curve (with nearest points inside an
/// already-replaced zone measured as clearance to the owning ball) and the
/// clearance |x_k − x_i| − d_k to every ball planned so far. A corner whose
/// clearance is zero (its vertex lies on the boundary of an earlier ball)
/// halves the blocking ball and retries. The final extent is capped by half
/// of each adjacent segment.
pub fn plan_corners(knot: &DiscreteKnot) -> Result<CornerPlan> {
    let n = knot.n();
    let zero_tol = 1e-12 * knot.total_length();
    let statuses: Vec<CornerStatus> = (0..n)
        .map(|c| {
            let inc = knot.segment(c + n - 1);
            let out = knot.segment(c);
            let cos = inc.dot(&out) / (inc.norm() * out.norm());
            if cos > 1.0 - PARALLEL_TOL {
                CornerStatus::ParallelSkip
            } else {
                CornerStatus::Smoothed
            }
        })
        .collect();

    let mut d: Vec<(f64, f64)> = vec![(0.0, 0.0); n];
    let mut planned: Vec<usize> = Vec::new();
    for c in 0..n {
        if statuses[c] == CornerStatus::ParallelSkip {
            continue;
        }
        let seg_in = (c + n - 1) % n;
        let seg_out = c;
        let l_in = knot.segment_length(seg_in);
        let l_out = knot.segment_length(seg_out);
        let near = nearest_point_to_vertex(knot, c, &[seg_in, seg_out])?;

        let clearance = |d: &[(f64, f64)]| -> f64 {
            // Distance to the fixed curve; replaced zones count as their ball.
            let k = near.segment_index;
            let lk = knot.segment_length(k);
            let owner_start = k; // its arc covers frac ∈ [0, d_out/l_k)
            let owner_end = (k + 1) % n; // its arc covers frac ≥ 1 − d_in/l_k
            let mut base = near.distance;
            if planned.contains(&owner_start) && near.sigma_min < d[owner_start].1 / lk {
                base = (knot.vertex(owner_start) - knot.vertex(c)).norm() - d[owner_start].0;
            } else if planned.contains(&owner_end)
                && near.sigma_min >= (lk - d[owner_end].0) / lk
            {
                base = (knot.vertex(owner_end) - knot.vertex(c)).norm() - d[owner_end].0;
            }
            planned
                .iter()
                .map(|&m| (knot.vertex(m) - knot.vertex(c)).norm() - d[m].0)
                .fold(base, f64::min)
        };

        let mut dstar = clearance(&d);
        let mut halvings = 0;
        while dstar <= zero_tol {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::Input(format!(
                    "corner {c}: clearance still zero after {MAX_HALVINGS} ball halvings"
                )));
            }
            let blocking: Vec<usize> = planned
                .iter()
                .copied()
                .filter(|&m| (knot.vertex(m) - knot.vertex(c)).norm() - d[m].0 <= zero_tol)
                .collect();
            if blocking.is_empty() {
                return Err(Error::Input(format!(
                    "corner {c}: the curve itself leaves no room for a smoothing arc"
                )));
            }
            for m in blocking {
                d[m].0 /= 2.0;
                d[m].1 /= 2.0;
            }
            dstar = clearance(&d);
        }

        let di = dstar.min(l_in / 2.0).min(l_out / 2.0);
        if !(di > 0.0) {
            return Err(Error::Input(format!("corner {c}: degenerate arc extent {di}")));
        }
        d[c] = (di, di);
        planned.push(c);
    }

    let corners = (0..n)
        .map(|c| PlannedCorner { status: statuses[c], d_in: d[c].0, d_out: d[c].1 })
        .collect();
    Ok(CornerPlan { corners })
}

/// Precomputed coefficients of the two arc branches at one corner:
/// X(θ) = a·sinθ + b·cosθ + c, Ẋ = (a·cosθ − b·sinθ)·dθ/dS.
#[derive(Clone, Copy, Debug)]
struct ArcData {
    ap: V3,
    bp: V3,
    cp: V3,
    /// Fraction on the incoming segment where the ⁺ branch starts (θ = 0).
    f0p: f64,
    /// dθ/dS on the ⁺ branch; also maps frac − f0p to θ.
    kp: f64,
    am: V3,
    bm: V3,
    cm: V3,
    /// dθ/dS on the ⁻ branch; θ = π/4 + frac·km.
    km: f64,
}

impl ArcData {
    fn new(x_c: V3, seg_in: V3, l_in: f64, seg_out: V3, l_out: f64, d_in: f64, d_out: f64) -> Self {
        let lplus = -seg_in * (d_in / l_in);
        let lminus = seg_out * (d_out / l_out);
        let q = (d_in / l_in) * (l_out / d_out);
        let dplus = 1.0 - FRAC_1_SQRT_2 + q * FRAC_1_SQRT_2;
        let dminus = 1.0 - FRAC_1_SQRT_2 + FRAC_1_SQRT_2 / q;
        ArcData {
            ap: -lplus * (q / dplus),
            bp: -lminus / dminus,
            cp: lminus / dminus + lplus + x_c,
            f0p: (l_in - d_in) / l_in,
            kp: (l_in / d_in) * FRAC_PI_4,
            am: -lplus / dplus,
            bm: -lminus / (q * dminus),
            cm: lplus / dplus + lminus + x_c,
            km: (l_out / d_out) * FRAC_PI_4,
        }
    }

    /// Branch on the incoming segment; frac ∈ [f0p, 1] maps to θ ∈ [0, π/4].
    fn eval_plus(&self, frac: f64) -> (V3, V3) {
        let theta = (frac - self.f0p) * self.kp;
        let (s, c) = theta.sin_cos();
        (self.ap * s + self.bp * c + self.cp, (self.ap * c - self.bp * s) * self.kp)
    }

    /// Branch on the outgoing segment; frac ∈ [0, d′/l] maps to θ ∈ [π/4, π/2].
    fn eval_minus(&self, frac: f64) -> (V3, V3) {
        let theta = FRAC_PI_4 + frac * self.km;
        let (s, c) = theta.sin_cos();
        (self.am * s + self.bm * c + self.cm, (self.am * c - self.bm * s) * self.km)
    }
}

/// A planned knot, evaluable as a G¹ curve over S ∈ [0, N].
#[derive(Clone, Debug)]
pub struct SmoothedKnot {
    base: DiscreteKnot,
    plan: CornerPlan,
    arcs: Vec<Option<ArcData>>,
    /// Per segment j: frac below which S belongs to the ⁻ arc of corner j.
    flo: Vec<f64>,
    /// Per segment j: frac at or above which S belongs to the ⁺ arc of corner j+1.
    fhi: Vec<f64>,
}

impl SmoothedKnot {
    pub fn new(base: DiscreteKnot) -> Result<Self> {
        let plan = plan_corners(&base)?;
        let n = base.n();
        let arcs: Vec<Option<ArcData>> = (0..n)
            .map(|c| {
                let pc = plan.corners[c];
                pc.is_smoothed().then(|| {
                    let seg_in = (c + n - 1) % n;
                    ArcData::new(
                        base.vertex(c),
                        base.segment(seg_in),
                        base.segment_length(seg_in),
                        base.segment(c),
                        base.segment_length(c),
                        pc.d_in,
                        pc.d_out,
                    )
                })
            })
            .collect();
        let flo = (0..n)
            .map(|j| {
                let pc = plan.corners[j];
                if pc.is_smoothed() { pc.d_out / base.segment_length(j) } else { 0.0 }
            })
            .collect();
        let fhi = (0..n)
            .map(|j| {
                let pc = plan.corners[(j + 1) % n];
                if pc.is_smoothed() {
                    (base.segment_length(j) - pc.d_in) / base.segment_length(j)
                } else {
                    1.0
                }
            })
            .collect();
        Ok(SmoothedKnot { base, plan, arcs, flo, fhi })
    }

    pub fn base(&self) -> &DiscreteKnot {
        &self.base
    }

    pub fn plan(&self) -> &CornerPlan {
        &self.plan
    }

    fn split(&self, s: f64) -> (usize, f64) {
        let n = self.base.n();
        let k = s.floor() as usize;
        if k >= n { (0, 0.0) } else { (k, s - k as f64) }
    }

    /// Position on the arc of `corner`; S must lie inside its replaced zones.
    pub fn arc_point(&self, corner: usize, s: f64) -> Result<V3> {
        Ok(self.arc_eval(corner, s)?.0)
    }

    /// Raw (un-normalized) velocity on the arc of `corner`.
    pub fn arc_tangent(&self, corner: usize, s: f64) -> Result<V3> {
        Ok(self.arc_eval(corner, s)?.1)
    }

    fn arc_eval(&self, corner: usize, s: f64) -> Result<(V3, V3)> {
        let n = self.base.n();
        if corner >= n {
            return Err(Error::Domain(format!("corner {corner} out of range")));
        }
        let arc = self.arcs[corner].ok_or_else(|| {
            Error::Domain(format!("corner {corner} is not smoothed (parallel skip)"))
        })?;
        self.base.param(s)?;
        let (j, f) = self.split(s);
        let seg_in = (corner + n - 1) % n;
        let pc = self.plan.corners[corner];
        // Splitting S into segment + fraction loses up to an ulp of N, so queries
        // landing exactly on a zone boundary need a little slack.
        const EDGE: f64 = 1e-12;
        if j == seg_in && f + EDGE >= (self.base.segment_length(seg_in) - pc.d_in) / self.base.segment_length(seg_in) {
            Ok(arc.eval_plus(f))
        } else if j == corner && f <= pc.d_out / self.base.segment_length(corner) + EDGE {
            Ok(arc.eval_minus(f))
        } else {
            Err(Error::Domain(format!(
                "S = {s} lies outside the replaced zones of corner {corner}"
            )))
        }
    }

    /// Position and unit tangent at S.
    pub fn sample_smoothed(&self, s: f64) -> Result<(V3, V3)> {
        self.base.param(s)?;
        let (pos, vel) = self.eval(s);
        Ok((pos, vel.normalize()))
    }
}

impl Curve for SmoothedKnot {
    fn upper(&self) -> f64 {
        self.base.n() as f64
    }

    fn min_segment_length(&self) -> f64 {
        self.base.min_segment_length()
    }

    fn eval(&self, s: f64) -> (V3, V3) {
        debug_assert!((0.0..=self.upper()).contains(&s));
        let (j, f) = self.split(s);
        if f < self.flo[j] {
            self.arcs[j].as_ref().unwrap().eval_minus(f)
        } else if f >= self.fhi[j] {
            let n = self.base.n();
            self.arcs[(j + 1) % n].as_ref().unwrap().eval_plus(f)
        } else {
            (self.base.vertex(j) + self.base.segment(j) * f, self.base.segment(j))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knot::{generate, shipped, GenKind};
    use approx::assert_relative_eq;

    fn smoothed(name: &str) -> SmoothedKnot {
        SmoothedKnot::new(shipped(name).unwrap()).unwrap()
    }

    #[test]
    fn nearest_point_on_scaled_square_matches_dense_scan() {
        let k = generate(&GenKind::Square).unwrap().rescale(4.0).unwrap();
        let near = nearest_point_to_vertex(&k, 1, &[0, 1]).unwrap();
        // Exhaustive fine scan over the candidate segments.
        let mut best = f64::INFINITY;
        for seg in [2usize, 3] {
            for t in 0..=100_000 {
                let p = k.vertex(seg) + k.segment(seg) * (t as f64 / 100_000.0);
                best = best.min((p - k.vertex(1)).norm());
            }
        }
        assert!((near.distance - best).abs() < 1e-9);
        assert_eq!(near.segment_index, 2);
    }

    #[test]
    fn nearest_point_rejects_total_exclusion() {
        let k = generate(&GenKind::Square).unwrap();
        assert!(nearest_point_to_vertex(&k, 0, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn square_plan_is_all_half() {
        let plan = plan_corners(&generate(&GenKind::Square).unwrap()).unwrap();
        for pc in &plan.corners {
            assert_eq!(pc.status, CornerStatus::Smoothed);
            assert_relative_eq!(pc.d_in, 0.5);
            assert_relative_eq!(pc.d_out, 0.5);
        }
    }

    #[test]
    fn collinear_joints_are_skipped() {
        let verts = vec![
            V3::new(0.0, 0.0, 0.0),
            V3::new(1.0, 0.0, 0.0),
            V3::new(2.0, 0.0, 0.0),
            V3::new(2.0, 1.0, 0.0),
            V3::new(1.0, 1.0, 0.0),
            V3::new(0.0, 1.0, 0.0),
        ];
        let k = DiscreteKnot::new(verts, None).unwrap();
        let plan = plan_corners(&k).unwrap();
        let statuses: Vec<CornerStatus> = plan.corners.iter().map(|c| c.status).collect();
        assert_eq!(statuses[1], CornerStatus::ParallelSkip);
        assert_eq!(statuses[4], CornerStatus::ParallelSkip);
        assert_eq!(statuses[0], CornerStatus::Smoothed);

        // In a skipped zone the smoothed curve is the polygon itself.
        let sk = SmoothedKnot::new(k.clone()).unwrap();
        for s in [0.9, 1.0, 1.2] {
            let (p, t) = sk.sample_smoothed(s).unwrap();
            assert_relative_eq!(p, k.point_at(s).unwrap(), epsilon = 1e-12);
            assert_relative_eq!(t, V3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn lattice_trefoil_plan_is_half_on_smoothed_corners() {
        let sk = smoothed("3_1_lattice_24");
        for pc in &sk.plan().corners {
            if pc.is_smoothed() {
                assert_relative_eq!(pc.d_in, 0.5);
            }
        }
    }

    #[test]
    fn square_quarter_arc_values() {
        let sk = smoothed("0_1_square_4");
        // S = 0.75 sits on the arc around vertex 1 at θ = π/8.
        let (p, t) = sk.sample_smoothed(0.75).unwrap();
        let (sin8, cos8) = (std::f64::consts::FRAC_PI_8).sin_cos();
        assert_relative_eq!(p, V3::new(0.5 + 0.5 * sin8, 0.5 - 0.5 * cos8, 0.0), epsilon = 1e-15);
        assert_relative_eq!(t, V3::new(cos8, sin8, 0.0), epsilon = 1e-15);
        // S = 0.5 is the zone boundary, owned by the arc; θ = 0 start point.
        let (p0, _) = sk.sample_smoothed(0.5).unwrap();
        assert_relative_eq!(p0, V3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn weld_and_boundary_continuity() {
        for name in ["0_1_square_4", "3_1_eight_seg", "3_1_lattice_24"] {
            let sk = smoothed(name);
            let n = sk.base().n();
            for c in 0..n {
                if !sk.plan().corners[c].is_smoothed() {
                    continue;
                }
                let seg_in = (c + n - 1) % n;
                let l_in = sk.base().segment_length(seg_in);
                let l_out = sk.base().segment_length(c);
                let pc = sk.plan().corners[c];

                // Weld: the ⁺ branch at frac = 1 meets the ⁻ branch at frac = 0.
                let s_weld_plus = seg_in as f64 + 1.0;
                let s_weld_minus = c as f64;
                let pp = sk.arc_point(c, s_weld_plus).unwrap();
                let pm = sk.arc_point(c, s_weld_minus).unwrap();
                assert_relative_eq!(pp, pm, epsilon = 1e-12);
                let tp = sk.arc_tangent(c, s_weld_plus).unwrap().normalize();
                let tm = sk.arc_tangent(c, s_weld_minus).unwrap().normalize();
                assert_relative_eq!(tp, tm, epsilon = 1e-9);

                // Zone entry: arc start matches the straight part in position
                // and unit tangent.
                let s_entry = seg_in as f64 + (l_in - pc.d_in) / l_in;
                let pe = sk.arc_point(c, s_entry).unwrap();
                assert_relative_eq!(
                    pe,
                    sk.base().point_at(s_entry).unwrap(),
                    epsilon = 1e-12
                );
                let te = sk.arc_tangent(c, s_entry).unwrap().normalize();
                let ts = sk.base().segment(seg_in).normalize();
                assert_relative_eq!(te, ts, epsilon = 1e-9);

                // Zone exit on the outgoing side.
                let s_exit = c as f64 + pc.d_out / l_out;
                let px = sk.arc_point(c, s_exit).unwrap();
                assert_relative_eq!(
                    px,
                    sk.base().point_at(s_exit).unwrap(),
                    epsilon = 1e-12
                );
                let tx = sk.arc_tangent(c, s_exit).unwrap().normalize();
                assert_relative_eq!(tx, sk.base().segment(c).normalize(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn arc_points_stay_inside_their_ball() {
        for name in ["3_1_eight_seg", "3_1_lattice_24"] {
            let sk = smoothed(name);
            let n = sk.base().n();
            for c in 0..n {
                let pc = sk.plan().corners[c];
                if !pc.is_smoothed() {
                    continue;
                }
                let seg_in = (c + n - 1) % n;
                let l_in = sk.base().segment_length(seg_in);
                let l_out = sk.base().segment_length(c);
                let x_c = sk.base().vertex(c);
                for t in 0..=200 {
                    let f = t as f64 / 200.0;
                    let s_plus = seg_in as f64 + (l_in - pc.d_in) / l_in * (1.0 - f) + f;
                    let d = (sk.arc_point(c, s_plus.min(seg_in as f64 + 1.0)).unwrap() - x_c).norm();
                    assert!(d <= pc.d_in * (1.0 + 1e-12), "{name} corner {c}: {d} > {}", pc.d_in);
                    let s_minus = c as f64 + (pc.d_out / l_out) * f;
                    let d = (sk.arc_point(c, s_minus).unwrap() - x_c).norm();
                    assert!(d <= pc.d_out * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn balls_are_pairwise_disjoint() {
        for name in ["3_1_eight_seg", "3_1_lattice_24", "5_1_lattice_34"] {
            let sk = smoothed(name);
            let n = sk.base().n();
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (sk.plan().corners[i], sk.plan().corners[j]);
                    if a.is_smoothed() && b.is_smoothed() {
                        let dist = (sk.base().vertex(i) - sk.base().vertex(j)).norm();
                        assert!(
                            dist >= a.radius() + b.radius() - 1e-12,
                            "{name}: balls {i},{j} overlap"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn arc_zone_domain_errors() {
        let sk = smoothed("0_1_square_4");
        // S = 1.2 is in the ⁻ zone of corner 1, not corner 2.
        assert!(sk.arc_point(1, 1.2).is_ok());
        assert!(sk.arc_point(2, 1.2).is_err());
        assert!(sk.arc_point(9, 0.5).is_err());
        assert!(sk.arc_point(1, -0.5).is_err());
    }

    #[test]
    fn planning_is_deterministic() {
        let k = shipped("3_1_eight_seg").unwrap();
        let a = plan_corners(&k).unwrap();
        let b = plan_corners(&k).unwrap();
        assert_eq!(a, b);
    }
}
