//! Segment-count reduction that preserves topology.
//!
//! One general rule (merging collinear runs, a geometric no-op) and three
//! cubic-lattice rewrites: a three-segment U-turn whose ends are one lattice
//! unit apart collapses to that unit segment, and two or three contiguous
//! unit segments collapse to their connecting chord. Chords leave the
//! lattice, so later passes see a mixed knot; lattice rules keep firing on
//! whatever unit segments remain.
//!
//! Every lattice rewrite sweeps the old path onto the new chord across one
//! or two triangles. If any other segment comes within SWEEP_TOL of that
//! surface the rewrite is skipped: a strand inside the swept region would be
//! dragged through the curve. The two segments adjacent to the rewritten
//! stretch touch the triangles at the shared vertices by construction, so
//! they are trimmed back slightly before the clearance test.

use crate::error::Result;
use crate::geom::{segment_triangle_distance, V3};
use crate::knot::DiscreteKnot;
use serde::Serialize;

/// Blocking distance for the swept-region clearance test, relative to the
/// lattice unit.
const SWEEP_REL_TOL: f64 = 1e-9;
/// Fraction trimmed off an adjacent segment at the vertex it shares with the
/// rewritten stretch.
const ADJ_TRIM: f64 = 1e-6;
/// A rewrite may not create a fold-back corner.
const FOLDBACK_COS: f64 = -(1.0 - 1e-9);
/// Relative tolerance for recognizing axis-aligned unit segments.
const LATTICE_TOL: f64 = 1e-9;
/// Lattice rewrites never take the knot below this size.
const MIN_N_AFTER: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub n_before: usize,
    pub n_after: usize,
    pub tadpoles: usize,
    pub two_segment: usize,
    pub three_segment: usize,
    pub merged_parallel: usize,
    /// Full rule sweeps run, including the final one that fired nothing.
    pub passes: usize,
}

impl ReductionReport {
    pub fn rewrites(&self) -> usize {
        self.tadpoles + self.two_segment + self.three_segment + self.merged_parallel
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Tadpole,
    TwoSegment,
    ThreeSegment,
}

impl Rule {
    /// Number of contiguous segments consumed by the pattern.
    fn span(self) -> usize {
        match self {
            Rule::Tadpole | Rule::ThreeSegment => 3,
            Rule::TwoSegment => 2,
        }
    }
}

fn seg(v: &[V3], i: usize) -> V3 {
    v[(i + 1) % v.len()] - v[i]
}

fn is_axis_aligned(s: &V3) -> bool {
    let l = s.norm();
    let tol = LATTICE_TOL * l;
    let small = [s.x, s.y, s.z].iter().filter(|c| c.abs() <= tol).count();
    l > 0.0 && small == 2
}

/// Lattice unit inferred from the current geometry: the shortest
/// axis-aligned segment. Mid-reduction knots are a mix of surviving unit
/// segments, merged straights (multiples of the unit) and off-lattice
/// chords, so the shortest axis-aligned length is the original unit for as
/// long as any unit segment survives.
fn lattice_unit(v: &[V3]) -> Option<f64> {
    (0..v.len())
        .map(|i| seg(v, i))
        .filter(is_axis_aligned)
        .map(|s| s.norm())
        .min_by(|a, b| a.total_cmp(b))
}

fn is_unit_lattice_seg(s: &V3, u: f64) -> bool {
    is_axis_aligned(s) && (s.norm() - u).abs() <= LATTICE_TOL * u
}

/// True when no other segment intrudes on the swept triangles. Segments
/// inside the pattern are ignored; the two adjacent ones are trimmed at the
/// shared vertex.
fn sweep_clear(v: &[V3], start: usize, span: usize, tris: &[[V3; 3]], tol: f64) -> bool {
    let n = v.len();
    let in_pattern = |s: usize| (0..span).any(|k| s == (start + k) % n);
    let prev = (start + n - 1) % n;
    let next = (start + span) % n;
    for s in 0..n {
        if in_pattern(s) {
            continue;
        }
        let mut a = v[s];
        let mut b = v[(s + 1) % n];
        if s == prev {
            b += (a - b) * ADJ_TRIM;
        }
        if s == next {
            a += (b - a) * ADJ_TRIM;
        }
        for t in tris {
            if segment_triangle_distance(&a, &b, &t[0], &t[1], &t[2]) < tol {
                return false;
            }
        }
    }
    true
}

/// Replacing segments start..start+span by the chord must not fold the knot
/// back on itself at either junction.
fn junctions_ok(v: &[V3], start: usize, span: usize, chord: &V3) -> bool {
    let n = v.len();
    let cl = chord.norm();
    if cl <= 0.0 {
        return false;
    }
    let p = v[start] - v[(start + n - 1) % n];
    let q = v[(start + span + 1) % n] - v[(start + span) % n];
    chord.dot(&p) > FOLDBACK_COS * cl * p.norm() && chord.dot(&q) > FOLDBACK_COS * cl * q.norm()
}

/// Attempt one rewrite at position `start`; on success the pattern's
/// interior vertices are removed from `v`.
fn try_rule(v: &mut Vec<V3>, start: usize, rule: Rule, u: f64) -> bool {
    let n = v.len();
    let span = rule.span();
    if n < span + MIN_N_AFTER - 1 {
        return false;
    }
    let segs: Vec<V3> = (0..span).map(|k| seg(v, (start + k) % n)).collect();
    if !segs.iter().all(|s| is_unit_lattice_seg(s, u)) {
        return false;
    }
    let chord: V3 = segs.iter().sum();
    let cl2 = chord.norm_squared() / (u * u);
    let x: Vec<V3> = (0..=span).map(|k| v[(start + k) % n]).collect();
    let tris: Vec<[V3; 3]> = match rule {
        Rule::Tadpole => {
            // U-turn: ends one lattice unit apart.
            if (cl2 - 1.0).abs() > 1e-6 {
                return false;
            }
            vec![[x[0], x[1], x[2]], [x[0], x[2], x[3]]]
        }
        Rule::TwoSegment => {
            // Perpendicular corner; the chord is the face diagonal.
            if segs[0].dot(&segs[1]).abs() > LATTICE_TOL * u * u {
                return false;
            }
            vec![[x[0], x[1], x[2]]]
        }
        Rule::ThreeSegment => {
            // Staircase (|chord|² = 3u²) or zigzag (5u²); the U-turn case
            // belongs to the tadpole rule.
            if (cl2 - 3.0).abs() > 1e-6 && (cl2 - 5.0).abs() > 1e-6 {
                return false;
            }
            if segs[0].dot(&segs[1]).abs() > LATTICE_TOL * u * u
                || segs[1].dot(&segs[2]).abs() > LATTICE_TOL * u * u
            {
                return false;
            }
            vec![[x[0], x[1], x[2]], [x[0], x[2], x[3]]]
        }
    };
    if !junctions_ok(v, start, span, &chord) {
        return false;
    }
    if !sweep_clear(v, start, span, &tris, SWEEP_REL_TOL * u) {
        return false;
    }
    let remove: Vec<usize> = (1..span).map(|k| (start + k) % n).collect();
    *v = (0..n).filter(|j| !remove.contains(j)).map(|j| v[j]).collect();
    true
}

/// Apply one rule everywhere until a full scan fires nothing. Returns the
/// number of rewrites.
fn saturate(v: &mut Vec<V3>, rule: Rule) -> usize {
    let mut fired = 0;
    loop {
        let Some(u) = lattice_unit(v) else { return fired };
        let mut any = false;
        let mut i = 0;
        while i < v.len() {
            if try_rule(v, i, rule, u) {
                fired += 1;
                any = true;
                // Stay: the junction that replaced the pattern may match again.
            } else {
                i += 1;
            }
        }
        if !any {
            return fired;
        }
    }
}

/// Remove every vertex whose two incident segments are collinear and
/// equally directed. Returns removed-vertex count.
fn merge_pass(v: &mut Vec<V3>) -> usize {
    let n = v.len();
    let keep: Vec<V3> = (0..n)
        .filter(|&i| {
            let a = seg(v, (i + n - 1) % n);
            let b = seg(v, i);
            let cross = a.cross(&b).norm();
            !(a.dot(&b) > 0.0 && cross <= LATTICE_TOL * a.norm() * b.norm())
        })
        .map(|i| v[i])
        .collect();
    let removed = n - keep.len();
    if removed > 0 {
        *v = keep;
    }
    removed
}

/// Collapse maximal runs of collinear same-direction segments; the curve is
/// pointwise unchanged.
pub fn merge_parallel(knot: &DiscreteKnot) -> Result<DiscreteKnot> {
    let mut v = knot.vertices().to_vec();
    merge_pass(&mut v);
    knot.with_vertices(v)
}

/// Collapse three-segment U-turns with unit-spaced ends, repeatedly.
pub fn reduce_tadpole(knot: &DiscreteKnot) -> Result<DiscreteKnot> {
    let mut v = knot.vertices().to_vec();
    saturate(&mut v, Rule::Tadpole);
    knot.with_vertices(v)
}

/// Full fixed-point reduction: U-turns, two-segment chords, three-segment
/// chords, then collinear merging, repeated until a whole pass fires
/// nothing.
pub fn reduce_lattice(knot: &DiscreteKnot) -> Result<(DiscreteKnot, ReductionReport)> {
    let mut v = knot.vertices().to_vec();
    let mut rep = ReductionReport {
        n_before: knot.n(),
        n_after: knot.n(),
        ..ReductionReport::default()
    };
    loop {
        rep.passes += 1;
        let before = rep.rewrites();
        rep.tadpoles += saturate(&mut v, Rule::Tadpole);
        rep.two_segment += saturate(&mut v, Rule::TwoSegment);
        rep.three_segment += saturate(&mut v, Rule::ThreeSegment);
        rep.merged_parallel += merge_pass(&mut v);
        if rep.rewrites() == before {
            break;
        }
    }
    let reduced = knot.with_vertices(v)?;
    rep.n_after = reduced.n();
    Ok((reduced, rep))
}
