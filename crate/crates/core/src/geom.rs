//! Small 3D geometry kernel: point/segment/triangle distances used by the
//! corner planner, input validation, and the rewrite safety checks.

pub type V3 = nalgebra::Vector3<f64>;

/// Closest point on segment [a, b] to the query point q.
///
/// `sigma_raw` is the unclamped foot parameter −((b−a)·(a−q))/|b−a|²; the
/// returned point uses the value clamped to [0, 1].
pub fn closest_on_segment(q: &V3, a: &V3, b: &V3) -> (V3, f64, f64) {
    let d = b - a;
    let dd = d.dot(&d);
    // Degenerate segments collapse to the endpoint.
    let sigma_raw = if dd > 0.0 { (q - a).dot(&d) / dd } else { 0.0 };
    let sigma = sigma_raw.clamp(0.0, 1.0);
    (a + d * sigma, sigma, sigma_raw)
}

pub fn point_segment_distance(q: &V3, a: &V3, b: &V3) -> f64 {
    let (p, _, _) = closest_on_segment(q, a, b);
    (q - p).norm()
}

/// Minimal distance between segments [p1, q1] and [p2, q2].
pub fn segment_segment_distance(p1: &V3, q1: &V3, p2: &V3, q2: &V3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    let (mut s, mut t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            s = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

/// Distance from a point to a (non-degenerate) triangle.
pub fn point_triangle_distance(q: &V3, a: &V3, b: &V3, c: &V3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let nn = n.dot(&n);
    if nn <= f64::EPSILON {
        // Degenerate triangle: fall back to its edges.
        return point_segment_distance(q, a, b)
            .min(point_segment_distance(q, b, c))
            .min(point_segment_distance(q, c, a));
    }
    let ap = q - a;
    // Barycentric test of the in-plane projection.
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    let d00 = ab.dot(&ab);
    let d01 = ab.dot(&ac);
    let d11 = ac.dot(&ac);
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d1 - d01 * d2) / denom;
    let w = (d00 * d2 - d01 * d1) / denom;
    if v >= 0.0 && w >= 0.0 && v + w <= 1.0 {
        return (ap.dot(&n)).abs() / nn.sqrt();
    }
    point_segment_distance(q, a, b)
        .min(point_segment_distance(q, b, c))
        .min(point_segment_distance(q, c, a))
}

/// Distance between segment [p, q] and triangle (a, b, c). Zero when the
/// segment pierces the triangle's interior.
pub fn segment_triangle_distance(p: &V3, q: &V3, a: &V3, b: &V3, c: &V3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let dir = q - p;
    let denom = n.dot(&dir);
    if denom.abs() > f64::EPSILON {
        // Transversal plane crossing: check whether the hit lies inside.
        let t = n.dot(&(a - p)) / denom;
        if (0.0..=1.0).contains(&t) {
            let hit = p + dir * t;
            let ap = hit - a;
            let d00 = ab.dot(&ab);
            let d01 = ab.dot(&ac);
            let d11 = ac.dot(&ac);
            let d1 = ab.dot(&ap);
            let d2 = ac.dot(&ap);
            let bd = d00 * d11 - d01 * d01;
            let v = (d11 * d1 - d01 * d2) / bd;
            let w = (d00 * d2 - d01 * d1) / bd;
            if v >= 0.0 && w >= 0.0 && v + w <= 1.0 {
                return 0.0;
            }
        }
    }
    // No interior crossing: the minimum is attained on the boundary.
    let mut best = point_triangle_distance(p, a, b, c).min(point_triangle_distance(q, a, b, c));
    for (e0, e1) in [(a, b), (b, c), (c, a)] {
        best = best.min(segment_segment_distance(p, q, e0, e1));
    }
    best
}
