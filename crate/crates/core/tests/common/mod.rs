//! Shared corpus of randomized test knots.
#![allow(dead_code)] // each test target uses its own subset

//!
//! Lattice knots are grown from the shipped embeddings by self-avoidance
//! preserving elementary moves, so every corpus member keeps its seed's knot
//! type. Off-lattice knots are trigonometric loops and jittered torus knots,
//! revalidated after each draw.

use knotrho::knot::{generate, shipped, GenKind};
use knotrho::{Curve, DiscreteKnot, SmoothedKnot, V3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

type P = [i64; 3];

fn add(a: P, b: P) -> P {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn neg(a: P) -> P {
    [-a[0], -a[1], -a[2]]
}

/// Unit-step lattice polygon under elementary deformation moves. Vertices
/// stay pairwise distinct, which for integer unit steps is exactly
/// self-avoidance, and fold-backs are rejected at move time.
struct Walk {
    v: Vec<P>,
    occ: HashSet<P>,
}

impl Walk {
    fn from_knot(k: &DiscreteKnot) -> Walk {
        let v: Vec<P> = k
            .vertices()
            .iter()
            .map(|p| [p.x.round() as i64, p.y.round() as i64, p.z.round() as i64])
            .collect();
        let occ: HashSet<P> = v.iter().copied().collect();
        assert_eq!(occ.len(), v.len(), "seed walk revisits a vertex");
        Walk { v, occ }
    }

    fn n(&self) -> usize {
        self.v.len()
    }

    fn at(&self, i: isize) -> P {
        let n = self.v.len() as isize;
        self.v[i.rem_euclid(n) as usize]
    }

    /// Pushes edge i outward into a 3-edge detour (length +2).
    fn try_grow(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let n = self.n();
        let i = rng.gen_range(0..n);
        let u = self.at(i as isize);
        let w = self.at(i as isize + 1);
        let c = sub(w, u);
        let mut perp: Vec<P> = Vec::new();
        for d in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            if d != c && neg(d) != c {
                perp.push(d);
                perp.push(neg(d));
            }
        }
        perp.shuffle(rng);
        let prev = sub(u, self.at(i as isize - 1));
        let next = sub(self.at(i as isize + 2), w);
        for d in perp {
            let a = add(u, d);
            let b = add(w, d);
            if self.occ.contains(&a) || self.occ.contains(&b) {
                continue;
            }
            // Keep corners at u and w from doubling back.
            if d == neg(prev) || d == next {
                continue;
            }
            self.v.insert(i + 1, b);
            self.v.insert(i + 1, a);
            self.occ.insert(a);
            self.occ.insert(b);
            return true;
        }
        false
    }

    /// Flips one corner across its square (length preserved).
    fn try_flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let n = self.n();
        let j = rng.gen_range(0..n);
        let a = self.at(j as isize - 1);
        let b = self.at(j as isize);
        let c = self.at(j as isize + 1);
        let e1 = sub(b, a);
        let e2 = sub(c, b);
        if e1 == e2 {
            return false; // straight-through vertex, nothing to flip
        }
        let b2 = add(a, e2);
        if self.occ.contains(&b2) {
            return false;
        }
        let into_a = sub(a, self.at(j as isize - 2));
        let out_c = sub(self.at(j as isize + 2), c);
        if e2 == neg(into_a) || out_c == neg(e1) {
            return false;
        }
        self.occ.remove(&b);
        self.occ.insert(b2);
        self.v[j] = b2;
        true
    }

    fn into_knot(self, name: &str) -> DiscreteKnot {
        let verts = self
            .v
            .into_iter()
            .map(|p| V3::new(p[0] as f64, p[1] as f64, p[2] as f64))
            .collect();
        DiscreteKnot::new(verts, Some(name.to_string())).expect("move set broke validity")
    }
}

/// Grows `seed` by `grows` accepted detours with `mixes` interleaved corner
/// flips. The result has the same knot type as the seed.
pub fn scrambled_lattice(seed_name: &str, grows: usize, mixes: usize, rng_seed: u64) -> DiscreteKnot {
    let seed = shipped(seed_name).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut w = Walk::from_knot(&seed);
    let mut grown = 0;
    let mut guard = 0;
    while grown < grows {
        if w.try_grow(&mut rng) {
            grown += 1;
        }
        guard += 1;
        assert!(guard < 100 * grows.max(1) + 1000, "growth stalled on {seed_name}");
    }
    for _ in 0..mixes {
        w.try_flip(&mut rng);
    }
    w.into_knot(&format!("{seed_name}_x{grows}s{rng_seed}"))
}

/// Random closed harmonic loop, retried until the embedding is valid.
pub fn trig_loop(m: usize, rng_seed: u64) -> DiscreteKnot {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x7412_9056);
    for attempt in 0..50u32 {
        let r1 = rng.gen_range(0.10..0.30);
        let r2 = rng.gen_range(0.10..0.30);
        let rz = rng.gen_range(0.25..0.55);
        let h1 = *[2usize, 3].choose(&mut rng).unwrap() as f64;
        let h2 = *[2usize, 3].choose(&mut rng).unwrap() as f64;
        let h3 = *[2usize, 3].choose(&mut rng).unwrap() as f64;
        let (p1, p2, p3) = (
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let verts: Vec<V3> = (0..m)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / m as f64;
                V3::new(
                    t.cos() + r1 * (h1 * t + p1).cos(),
                    t.sin() + r2 * (h2 * t + p2).sin(),
                    rz * (h3 * t + p3).sin(),
                )
            })
            .collect();
        if let Ok(k) = DiscreteKnot::new(verts, Some(format!("loop_{m}s{rng_seed}a{attempt}"))) {
            return k;
        }
    }
    panic!("no valid harmonic loop after 50 attempts (m = {m}, seed = {rng_seed})");
}

/// Torus knot with uniform vertex jitter, retried until valid.
pub fn jittered_torus(p: u32, q: u32, m: usize, rng_seed: u64) -> DiscreteKnot {
    let base = generate(&GenKind::Torus { p, q, m }).unwrap();
    let amp = 0.4 * base.min_segment_length();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x00c0_ffee);
    for attempt in 0..50u32 {
        let verts: Vec<V3> = base
            .vertices()
            .iter()
            .map(|v| {
                V3::new(
                    v.x + amp * rng.gen_range(-1.0..1.0),
                    v.y + amp * rng.gen_range(-1.0..1.0),
                    v.z + amp * rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        if let Ok(k) =
            DiscreteKnot::new(verts, Some(format!("torus_{p}_{q}_{m}j{rng_seed}a{attempt}")))
        {
            return k;
        }
    }
    panic!("no valid jittered torus after 50 attempts");
}

/// The mixed corpus used by the smoothing and reduction suites: 12 scrambled
/// lattice knots over four knot types plus 10 off-lattice loops.
pub fn corpus() -> Vec<DiscreteKnot> {
    let seeds = ["0_1_square_4", "3_1_lattice_24", "4_1_lattice_30", "5_1_lattice_34"];
    let mut all = Vec::new();
    for k in 0..12 {
        let grows = 4 + 3 * (k % 5);
        all.push(scrambled_lattice(seeds[k % 4], grows, 60, 1000 + k as u64));
    }
    for k in 0..5 {
        all.push(trig_loop(24 + 6 * k, 2000 + k as u64));
    }
    for (k, (p, q)) in [(2u32, 3u32), (2, 5), (3, 4), (2, 7), (3, 5)].iter().enumerate() {
        all.push(jittered_torus(*p, *q, 30 + 4 * k, 3000 + k as u64));
    }
    all
}

/// Full geometric audit of one smoothing: G¹ joins, arc containment, ball
/// disjointness and exclusion of all foreign curve points from every ball.
/// Panics with context on any violation.
pub fn check_smoothing_suite(base: &DiscreteKnot) {
    let name = base.name().to_string();
    let sk = SmoothedKnot::new(base.clone()).expect("smoothing failed");
    let n = base.n();
    let plan = sk.plan().clone();

    let g1_gap = |a: V3, b: V3| (a.normalize() - b.normalize()).norm();
    for c in 0..n {
        let pc = plan.corners[c];
        if !pc.is_smoothed() {
            continue;
        }
        let seg_in = (c + n - 1) % n;
        let (l_in, l_out) = (base.segment_length(seg_in), base.segment_length(c));

        // Tangent continuity at the weld and at both zone boundaries.
        let weld_plus = sk.arc_tangent(c, seg_in as f64 + 1.0).unwrap();
        let weld_minus = sk.arc_tangent(c, c as f64).unwrap();
        assert!(
            g1_gap(weld_plus, weld_minus) < 1e-9,
            "{name} corner {c}: weld tangent jump"
        );
        let s_entry = seg_in as f64 + (l_in - pc.d_in) / l_in;
        let entry = sk.arc_tangent(c, s_entry).unwrap();
        assert!(
            g1_gap(entry, base.segment(seg_in)) < 1e-9,
            "{name} corner {c}: entry tangent jump"
        );
        let s_exit = c as f64 + pc.d_out / l_out;
        let exit = sk.arc_tangent(c, s_exit).unwrap();
        assert!(
            g1_gap(exit, base.segment(c)) < 1e-9,
            "{name} corner {c}: exit tangent jump"
        );

        // Both arc branches stay inside the guarding ball.
        let center = base.vertex(c);
        let r = pc.radius();
        for t in 0..=64 {
            let f = t as f64 / 64.0;
            let sp = s_entry * (1.0 - f) + (seg_in as f64 + 1.0) * f;
            let d = (sk.arc_point(c, sp).unwrap() - center).norm();
            assert!(d <= r * (1.0 + 1e-12), "{name} corner {c}: arc leaves ball ({d} > {r})");
            let sm = c as f64 + (pc.d_out / l_out) * f;
            let d = (sk.arc_point(c, sm).unwrap() - center).norm();
            assert!(d <= r * (1.0 + 1e-12), "{name} corner {c}: arc leaves ball ({d} > {r})");
        }
    }

    // Guarding balls of distinct corners meet in at most one point.
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (plan.corners[i], plan.corners[j]);
            if a.is_smoothed() && b.is_smoothed() {
                let dist = (base.vertex(i) - base.vertex(j)).norm();
                assert!(
                    dist >= a.radius() + b.radius() - 1e-12,
                    "{name}: balls {i} and {j} overlap"
                );
            }
        }
    }

    // Dense sweep: no sample owned by another zone may enter a foreign ball.
    let per_seg = 16;
    let samples: Vec<(usize, f64, V3)> = (0..n * per_seg)
        .map(|k| {
            let s = k as f64 / per_seg as f64;
            let (j, f) = (k / per_seg, (k % per_seg) as f64 / per_seg as f64);
            (j, f, sk.eval(s).0)
        })
        .collect();
    let owner = |j: usize, f: f64| -> Option<usize> {
        let pc_j = plan.corners[j];
        if pc_j.is_smoothed() && f < pc_j.d_out / base.segment_length(j) {
            return Some(j);
        }
        let next = (j + 1) % n;
        let pc_n = plan.corners[next];
        if pc_n.is_smoothed() && f >= (base.segment_length(j) - pc_n.d_in) / base.segment_length(j)
        {
            return Some(next);
        }
        None
    };
    for c in 0..n {
        let pc = plan.corners[c];
        if !pc.is_smoothed() {
            continue;
        }
        let center = base.vertex(c);
        let r = pc.radius();
        for &(j, f, p) in &samples {
            if owner(j, f) == Some(c) {
                continue;
            }
            let d = (p - center).norm();
            assert!(
                d >= r * (1.0 - 1e-9) - 1e-12,
                "{name}: foreign point S = {} intrudes into ball {c} ({d} < {r})",
                j as f64 + f
            );
        }
    }
}

/// Large random lattice unknot for the bulk-reduction check.
pub fn grown_unknot(target_n: usize, rng_seed: u64) -> DiscreteKnot {
    let seed = shipped("0_1_square_4").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut w = Walk::from_knot(&seed);
    let mut guard = 0usize;
    while w.n() < target_n {
        if w.try_grow(&mut rng) {
            // Mixing flips between growth steps keep the polygon crumpled
            // instead of a tree of pristine detours.
            for _ in 0..3 {
                w.try_flip(&mut rng);
            }
        }
        guard += 1;
        assert!(guard < 200 * target_n, "growth stalled at N = {}", w.n());
    }
    for _ in 0..6 * target_n {
        w.try_flip(&mut rng);
    }
    w.into_knot(&format!("unknot_{target_n}s{rng_seed}"))
}
