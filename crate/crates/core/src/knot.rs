//! Discrete closed polygonal knots: parametrization, validation, file formats
//! and built-in generators.
//!
//! A knot is an ordered list of N vertices with implied closure. The curve
//! parameter S runs over [0, N]; S ∈ [k, k+1] covers the segment from vertex
//! k to vertex k+1 (mod N), so integer S sits on a vertex and the basepoint
//! vertex 0 is reached at both S = 0 and S = N.

use crate::error::{Error, Result};
use crate::geom::{segment_segment_distance, V3};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Relative tolerance (times total length) below which two non-adjacent
/// segments are reported as intersecting.
const SELF_INTERSECT_REL_TOL: f64 = 1e-12;
/// Cosine threshold past which consecutive segments are treated as folding
/// back onto each other (an overlapping or near-cusp corner that no arc can
/// round). Matches the parallel-detection tolerance used by smoothing.
const ANTIPARALLEL_COS: f64 = -(1.0 - 1e-9);
/// Relative tolerance for lattice detection (axis alignment, equal lengths).
const LATTICE_REL_TOL: f64 = 1e-9;

/// A parameter value on the curve together with its derived segment index
/// (0-based) and fractional position along that segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamPoint {
    pub s: f64,
    pub segment: usize,
    pub frac: f64,
}

impl ParamPoint {
    pub fn new(s: f64, n: usize) -> Result<Self> {
        if !s.is_finite() || s < 0.0 || s > n as f64 {
            return Err(Error::Domain(format!(
                "curve parameter S = {s} outside [0, {n}]"
            )));
        }
        let k = s.floor() as usize;
        let (segment, frac) = if k >= n { (0, 0.0) } else { (k, s - k as f64) };
        Ok(ParamPoint { s, segment, frac })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnotMetadata {
    pub name: Option<String>,
    /// Λ_N, the sum of all segment lengths.
    pub total_length: f64,
    /// True when every segment is axis-aligned and all lengths agree.
    pub is_cubic_lattice: bool,
}

/// An immutable validated closed polygonal curve.
#[derive(Clone, Debug)]
pub struct DiscreteKnot {
    vertices: Vec<V3>,
    segs: Vec<V3>,
    lens: Vec<f64>,
    metadata: KnotMetadata,
}

impl DiscreteKnot {
    /// Validates and builds a knot. Rejects N < 3, non-finite coordinates,
    /// zero-length segments, folded-back (antiparallel) corners and any pair
    /// of non-adjacent segments closer than `1e-12 · Λ_N`.
    pub fn new(vertices: Vec<V3>, name: Option<String>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Input(format!(
                "a closed knot needs at least 3 vertices, got {n}"
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::Input(format!("non-finite coordinate at vertex {i}")));
            }
        }
        let segs: Vec<V3> = (0..n).map(|k| vertices[(k + 1) % n] - vertices[k]).collect();
        let lens: Vec<f64> = segs.iter().map(|s| s.norm()).collect();
        let max_len = lens.iter().cloned().fold(0.0, f64::max);
        if let Some(k) = lens.iter().position(|&l| l <= SELF_INTERSECT_REL_TOL * max_len) {
            return Err(Error::Input(format!("zero-length segment at index {k}")));
        }
        for k in 0..n {
            let j = (k + 1) % n;
            let cos = segs[k].dot(&segs[j]) / (lens[k] * lens[j]);
            if cos <= ANTIPARALLEL_COS {
                return Err(Error::Input(format!(
                    "segments {k} and {j} fold back onto each other at vertex {j}"
                )));
            }
        }
        let total_length: f64 = lens.iter().sum();
        let tol = SELF_INTERSECT_REL_TOL * total_length;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue; // wraparound neighbours share vertex 0
                }
                let d = segment_segment_distance(
                    &vertices[i],
                    &vertices[(i + 1) % n],
                    &vertices[j],
                    &vertices[(j + 1) % n],
                );
                if d <= tol {
                    return Err(Error::Input(format!(
                        "segments {i} and {j} intersect (distance {d:.3e})"
                    )));
                }
            }
        }
        let is_cubic_lattice = detect_lattice(&segs, &lens);
        Ok(DiscreteKnot {
            vertices,
            segs,
            lens,
            metadata: KnotMetadata { name, total_length, is_cubic_lattice },
        })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[V3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> V3 {
        self.vertices[i % self.vertices.len()]
    }

    /// Segment vector from vertex k to vertex k+1 (mod N).
    pub fn segment(&self, k: usize) -> V3 {
        self.segs[k % self.segs.len()]
    }

    pub fn segment_length(&self, k: usize) -> f64 {
        self.lens[k % self.lens.len()]
    }

    pub fn min_segment_length(&self) -> f64 {
        self.lens.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn metadata(&self) -> &KnotMetadata {
        &self.metadata
    }

    pub fn name(&self) -> &str {
        self.metadata.name.as_deref().unwrap_or("unnamed")
    }

    pub fn total_length(&self) -> f64 {
        self.metadata.total_length
    }

    pub fn is_cubic_lattice(&self) -> bool {
        self.metadata.is_cubic_lattice
    }

    pub fn param(&self, s: f64) -> Result<ParamPoint> {
        ParamPoint::new(s, self.n())
    }

    pub fn point_at(&self, s: f64) -> Result<V3> {
        let p = self.param(s)?;
        Ok(self.vertices[p.segment] + self.segs[p.segment] * p.frac)
    }

    /// Raw tangent: the segment vector containing S, the following segment at
    /// joints. Its length is the local speed |dX/dS| = l_i.
    pub fn tangent_at(&self, s: f64) -> Result<V3> {
        let p = self.param(s)?;
        Ok(self.segs[p.segment])
    }

    /// Uniform scaling by η about the vertex centroid.
    pub fn rescale(&self, eta: f64) -> Result<DiscreteKnot> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("scale factor must be positive, got {eta}")));
        }
        let c = self.centroid();
        let vertices = self.vertices.iter().map(|v| c + (v - c) * eta).collect();
        DiscreteKnot::new(vertices, self.metadata.name.clone())
    }

    pub fn centroid(&self) -> V3 {
        self.vertices.iter().sum::<V3>() / self.vertices.len() as f64
    }

    /// Same name, different vertices (revalidated).
    pub fn with_vertices(&self, vertices: Vec<V3>) -> Result<DiscreteKnot> {
        DiscreteKnot::new(vertices, self.metadata.name.clone())
    }
}

fn detect_lattice(segs: &[V3], lens: &[f64]) -> bool {
    let l0 = lens[0];
    segs.iter().zip(lens).all(|(s, &l)| {
        ((l - l0) / l0).abs() <= LATTICE_REL_TOL
            && s.iter().filter(|c| c.abs() > LATTICE_REL_TOL * l).count() == 1
    })
}

/// Closed curves the integrators can sample: position and raw velocity over
/// S ∈ [0, upper]. The velocity is not normalized; it carries the
/// parametrization measure so contour integrals need no extra Jacobian.
pub trait Curve: Sync {
    fn upper(&self) -> f64;
    fn min_segment_length(&self) -> f64;
    fn eval(&self, s: f64) -> (V3, V3);
}

impl Curve for DiscreteKnot {
    fn upper(&self) -> f64 {
        self.n() as f64
    }

    fn min_segment_length(&self) -> f64 {
        DiscreteKnot::min_segment_length(self)
    }

    fn eval(&self, s: f64) -> (V3, V3) {
        debug_assert!((0.0..=self.upper()).contains(&s));
        let n = self.vertices.len();
        let k = s.floor() as usize;
        let (k, frac) = if k >= n { (0, 0.0) } else { (k, s - k as f64) };
        (self.vertices[k] + self.segs[k] * frac, self.segs[k])
    }
}

// ---------------------------------------------------------------------------
// File formats

#[derive(Serialize, Deserialize)]
struct KnotJson {
    #[serde(default)]
    name: Option<String>,
    vertices: Vec<[f64; 3]>,
    #[serde(default)]
    lattice: Option<bool>,
}

/// Parses the plain-text format: one `x y z` triple per line, `#` comments.
pub fn parse_knot_text(text: &str, name: Option<String>) -> Result<DiscreteKnot> {
    let mut vertices = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Input(format!(
                "line {}: expected `x y z`, got `{}`",
                ln + 1,
                line
            )));
        }
        let mut c = [0.0; 3];
        for (ci, tok) in c.iter_mut().zip(&toks) {
            *ci = tok
                .parse()
                .map_err(|_| Error::Input(format!("line {}: bad number `{tok}`", ln + 1)))?;
        }
        vertices.push(V3::new(c[0], c[1], c[2]));
    }
    DiscreteKnot::new(vertices, name)
}

pub fn parse_knot_json(text: &str) -> Result<DiscreteKnot> {
    let kj: KnotJson = serde_json::from_str(text)?;
    let vertices = kj.vertices.iter().map(|c| V3::new(c[0], c[1], c[2])).collect();
    DiscreteKnot::new(vertices, kj.name)
}

/// Loads `.json` as the JSON format, anything else as text. The file stem
/// becomes the name when the source does not carry one.
pub fn load_knot(path: &Path) -> Result<DiscreteKnot> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_knot_json(&text)
    } else {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        parse_knot_text(&text, stem)
    }
}

pub fn knot_to_text(knot: &DiscreteKnot) -> String {
    let mut out = format!("# {}  N={}\n", knot.name(), knot.n());
    for v in knot.vertices() {
        out.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    out
}

pub fn knot_to_json(knot: &DiscreteKnot) -> Result<String> {
    let kj = KnotJson {
        name: knot.metadata().name.clone(),
        vertices: knot.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
        lattice: Some(knot.is_cubic_lattice()),
    };
    Ok(serde_json::to_string_pretty(&kj)?)
}

pub fn save_knot(knot: &DiscreteKnot, path: &Path) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        knot_to_json(knot)?
    } else {
        knot_to_text(knot)
    };
    std::fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Clone, Debug)]
pub enum GenKind {
    /// Regular M-gon of radius 1 in the z = 0 plane.
    Circle { m: usize },
    /// Unit square unknot on the lattice.
    Square,
    /// (p, q) torus knot on the torus R = 2, r = 1, discretized with M vertices.
    Torus { p: u32, q: u32, m: usize },
}

pub fn generate(kind: &GenKind) -> Result<DiscreteKnot> {
    match *kind {
        GenKind::Circle { m } => {
            if m < 3 {
                return Err(Error::Domain(format!("circle needs M >= 3, got {m}")));
            }
            let verts = (0..m)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    V3::new(t.cos(), t.sin(), 0.0)
                })
                .collect();
            DiscreteKnot::new(verts, Some(format!("circle_{m}")))
        }
        GenKind::Square => DiscreteKnot::new(
            vec![
                V3::new(0.0, 0.0, 0.0),
                V3::new(1.0, 0.0, 0.0),
                V3::new(1.0, 1.0, 0.0),
                V3::new(0.0, 1.0, 0.0),
            ],
            Some("square_4".into()),
        ),
        GenKind::Torus { p, q, m } => {
            if p == 0 || q == 0 {
                return Err(Error::Domain("torus winding numbers must be positive".into()));
            }
            if gcd(p, q) != 1 {
                return Err(Error::Domain(format!(
                    "torus windings p = {p}, q = {q} must be coprime (otherwise the curve is a link)"
                )));
            }
            if m < 3 {
                return Err(Error::Domain(format!("torus knot needs M >= 3, got {m}")));
            }
            let (rr, r) = (2.0, 1.0);
            let verts = (0..m)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    let w = rr + r * (q as f64 * t).cos();
                    V3::new(
                        w * (p as f64 * t).cos(),
                        w * (p as f64 * t).sin(),
                        r * (q as f64 * t).sin(),
                    )
                })
                .collect();
            DiscreteKnot::new(verts, Some(format!("torus_{p}_{q}_{m}")))
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

const SHIPPED: &[(&str, &str)] = &[
    ("0_1_square_4", include_str!("../../../knots/0_1_square_4.knot")),
    ("3_1_lattice_24", include_str!("../../../knots/3_1_lattice_24.knot")),
    ("4_1_lattice_30", include_str!("../../../knots/4_1_lattice_30.knot")),
    ("5_1_lattice_34", include_str!("../../../knots/5_1_lattice_34.knot")),
    ("3_1_grid_34", include_str!("../../../knots/3_1_grid_34.knot")),
    ("0_1_passage_34", include_str!("../../../knots/0_1_passage_34.knot")),
    ("3_1_flip_34", include_str!("../../../knots/3_1_flip_34.knot")),
    ("3_1_eight_seg", include_str!("../../../knots/3_1_eight_seg.knot")),
];

pub fn shipped_names() -> Vec<&'static str> {
    SHIPPED.iter().map(|(n, _)| *n).collect()
}

/// Returns one of the knots bundled with the crate by name.
pub fn shipped(name: &str) -> Result<DiscreteKnot> {
    let (_, text) = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            Error::Input(format!(
                "unknown shipped knot `{name}` (available: {})",
                shipped_names().join(", ")
            ))
        })?;
    parse_knot_text(text, Some(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square() -> DiscreteKnot {
        generate(&GenKind::Square).unwrap()
    }

    #[test]
    fn square_interpolation() {
        let k = square();
        assert_relative_eq!(k.point_at(1.5).unwrap(), V3::new(1.0, 0.5, 0.0));
        assert_relative_eq!(k.point_at(3.0).unwrap(), V3::new(0.0, 1.0, 0.0));
        assert_relative_eq!(k.point_at(0.0).unwrap(), k.point_at(4.0).unwrap());
    }

    #[test]
    fn tangents_follow_segments() {
        let k = square();
        assert_relative_eq!(k.tangent_at(0.5).unwrap(), V3::new(1.0, 0.0, 0.0));
        // At a joint the tangent belongs to the outgoing segment.
        assert_relative_eq!(k.tangent_at(2.0).unwrap(), V3::new(-1.0, 0.0, 0.0));
        assert_relative_eq!(k.tangent_at(4.0).unwrap(), V3::new(1.0, 0.0, 0.0));
        for s in [0.25, 1.7, 2.2, 3.9] {
            assert_relative_eq!(k.tangent_at(s).unwrap().norm(), 1.0);
        }
    }

    #[test]
    fn continuity_across_joints() {
        let k = shipped("3_1_eight_seg").unwrap();
        for i in 1..k.n() {
            let eps = 1e-9;
            let a = k.point_at(i as f64 - eps).unwrap();
            let b = k.point_at(i as f64 + eps).unwrap();
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn tangent_sums_recover_total_length() {
        let k = shipped("3_1_lattice_24").unwrap();
        let total: f64 = (0..k.n()).map(|i| k.tangent_at(i as f64 + 0.5).unwrap().norm()).sum();
        assert_relative_eq!(total, k.total_length(), epsilon = 1e-12);
    }

    #[test]
    fn domain_errors() {
        let k = square();
        assert!(k.point_at(-0.1).is_err());
        assert!(k.point_at(4.1).is_err());
        assert!(k.point_at(f64::NAN).is_err());
    }

    #[test]
    fn rescale_basics() {
        let k = square();
        let same = k.rescale(1.0).unwrap();
        for (a, b) in k.vertices().iter().zip(same.vertices()) {
            assert_relative_eq!(a, b);
        }
        let half = k.rescale(0.5).unwrap();
        assert_relative_eq!(half.segment_length(0), 0.5);
        assert!(k.rescale(0.0).is_err());
        assert!(k.rescale(-2.0).is_err());
    }

    #[test]
    fn rescale_commutes_with_point_at() {
        let k = shipped("3_1_eight_seg").unwrap();
        let eta = 0.37;
        let r = k.rescale(eta).unwrap();
        let c = k.centroid();
        for s in [0.0, 0.8, 2.5, 4.25, 7.999] {
            let expect = c + (k.point_at(s).unwrap() - c) * eta;
            assert_relative_eq!(r.point_at(s).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let too_few = DiscreteKnot::new(vec![V3::zeros(), V3::new(1.0, 0.0, 0.0)], None);
        assert!(too_few.is_err());

        let dup = DiscreteKnot::new(
            vec![V3::zeros(), V3::zeros(), V3::new(1.0, 0.0, 0.0), V3::new(0.0, 1.0, 0.0)],
            None,
        );
        assert!(matches!(&dup, Err(Error::Input(m)) if m.contains("zero-length segment at index 0")));

        // Bowtie: segments 0 and 2 cross at (0.5, 0.5, 0).
        let bowtie = DiscreteKnot::new(
            vec![
                V3::new(0.0, 0.0, 0.0),
                V3::new(1.0, 1.0, 0.0),
                V3::new(1.0, 0.0, 0.0),
                V3::new(0.0, 1.0, 0.0),
            ],
            None,
        );
        assert!(matches!(&bowtie, Err(Error::Input(m)) if m.contains("intersect")));

        // Doubling back along the x axis.
        let fold = DiscreteKnot::new(
            vec![
                V3::new(0.0, 0.0, 0.0),
                V3::new(2.0, 0.0, 0.0),
                V3::new(1.0, 0.0, 0.0),
                V3::new(0.5, 1.0, 0.0),
            ],
            None,
        );
        assert!(matches!(&fold, Err(Error::Input(m)) if m.contains("fold back")));
    }

    #[test]
    fn text_round_trip() {
        let k = shipped("3_1_eight_seg").unwrap();
        let text = knot_to_text(&k);
        let back = parse_knot_text(&text, None).unwrap();
        assert_eq!(back.n(), k.n());
        for (a, b) in k.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b); // default float formatting round-trips exactly
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let k = shipped("3_1_eight_seg").unwrap();
        let text = knot_to_json(&k).unwrap();
        let back = parse_knot_json(&text).unwrap();
        for (a, b) in k.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b);
        }
        assert_eq!(back.name(), "3_1_eight_seg");
    }

    #[test]
    fn text_parser_diagnostics() {
        assert!(matches!(
            parse_knot_text("0 0 0\n1 0\n", None),
            Err(Error::Input(m)) if m.contains("line 2")
        ));
        assert!(matches!(
            parse_knot_text("0 0 0\n1 zero 0\n1 1 0\n", None),
            Err(Error::Input(m)) if m.contains("bad number")
        ));
        // Comments and blank lines are ignored.
        let k = parse_knot_text(
            "# unit square\n0 0 0\n1 0 0  # corner\n\n1 1 0\n0 1 0\n",
            Some("sq".into()),
        )
        .unwrap();
        assert_eq!(k.n(), 4);
        assert!(k.is_cubic_lattice());
    }

    #[test]
    fn shipped_trefoil_is_lattice() {
        let k = shipped("3_1_lattice_24").unwrap();
        assert_eq!(k.n(), 24);
        assert!(k.is_cubic_lattice());
        assert_relative_eq!(k.total_length(), 24.0);
    }

    #[test]
    fn shipped_catalog_loads() {
        for name in shipped_names() {
            let k = shipped(name).unwrap();
            assert!(k.n() >= 4, "{name}");
        }
        assert!(shipped("9_99_mystery").is_err());
    }

    #[test]
    fn generators() {
        let c = generate(&GenKind::Circle { m: 64 }).unwrap();
        assert_eq!(c.n(), 64);
        for v in c.vertices() {
            assert_relative_eq!(v.xy().norm(), 1.0, epsilon = 1e-12);
            assert_eq!(v.z, 0.0);
        }
        assert!(!c.is_cubic_lattice());

        let sq = generate(&GenKind::Square).unwrap();
        assert!(sq.is_cubic_lattice());
        assert_eq!(sq.n(), 4);

        let t = generate(&GenKind::Torus { p: 2, q: 3, m: 60 }).unwrap();
        assert_eq!(t.n(), 60);
        assert!(generate(&GenKind::Torus { p: 2, q: 4, m: 60 }).is_err());
        assert!(generate(&GenKind::Circle { m: 2 }).is_err());
    }

    #[test]
    fn lattice_detection_respects_scaling() {
        let k = shipped("3_1_lattice_24").unwrap().rescale(0.25).unwrap();
        assert!(k.is_cubic_lattice());
        let c = generate(&GenKind::Circle { m: 12 }).unwrap();
        assert!(!c.is_cubic_lattice());
    }
}
