//! Monte Carlo estimation of the two ordered contour integrals.
//!
//! Samples are drawn on the ordered simplices ξ₁ ≥ ξ₂ ≥ … by sequential
//! conditional sampling, weighted by the inverse sampling density, so the
//! weighted mean is an unbiased estimate of the ordered integral (volume
//! N³/6 for the triple, N⁴/24 for the quadruple). Work is chunked into
//! fixed-size logical batches, each with its own counter-derived RNG stream;
//! batch accumulators are merged in batch order, making every estimate
//! bit-reproducible for a given seed regardless of thread count.

use crate::error::{Error, Result};
use crate::integrand::{f1, f2, EpsilonSpec, Framing};
use crate::knot::Curve;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Logical batch size: the unit of parallel work and RNG stream assignment.
pub const BATCH: u64 = 65_536;

pub(crate) const DOMAIN_RHO1: u64 = 1;
pub(crate) const DOMAIN_RHO2: u64 = 2;
pub(crate) const DOMAIN_DELTA3: u64 = 3;
pub(crate) const DOMAIN_DELTA4: u64 = 4;

/// RNG for one logical batch: the stream id encodes (domain, batch index),
/// so different integrals and batches never share a sequence.
pub(crate) fn batch_rng(seed: u64, domain: u64, batch_idx: u64) -> ChaCha8Rng {
    debug_assert!(batch_idx < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) | batch_idx);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplerConfig {
    /// Total sample budget (for `rho`, split between the two integrals).
    pub n: u64,
    pub seed: u64,
    /// Adaptive-stopping target for the combined standard error.
    pub threshold_sigma: f64,
    pub epsilon: EpsilonSpec,
    /// Worker threads; None uses the ambient rayon pool.
    pub workers: Option<usize>,
    /// Fraction of n given to ρ₁; None splits by simplex volumes (4 : N).
    pub rho1_fraction: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n: 1_000_000,
            seed: 1,
            threshold_sigma: 1.0 / 6.11,
            epsilon: EpsilonSpec::default(),
            workers: None,
            rho1_fraction: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Domain("sample count must be at least 1".into()));
        }
        if !(self.threshold_sigma > 0.0) {
            return Err(Error::Domain(format!(
                "threshold_sigma must be positive, got {}",
                self.threshold_sigma
            )));
        }
        if let Some(f) = self.rho1_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Domain(format!("rho1_fraction must be in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_used: u64,
    pub n_flagged: u64,
    pub seed: u64,
}

/// Combined estimate of ρ = ρ₁ + ρ₂.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RhoEstimate {
    pub rho1: MCEstimate,
    pub rho2: MCEstimate,
    /// Whether the combined stderr is at or below the configured threshold.
    pub hit_threshold: bool,
}

impl RhoEstimate {
    pub fn mean(&self) -> f64 {
        self.rho1.mean + self.rho2.mean
    }

    pub fn stderr(&self) -> f64 {
        self.rho1.stderr.hypot(self.rho2.stderr)
    }

    pub fn a2(&self) -> f64 {
        crate::invariant::conway_a2(self.mean())
    }

    pub fn n_total(&self) -> u64 {
        self.rho1.n_used + self.rho1.n_flagged + self.rho2.n_used + self.rho2.n_flagged
    }
}

/// Streaming mean/variance accumulator with exact pairwise merging.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accum {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub flagged: u64,
}

impl Accum {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Accum) {
        self.flagged += o.flagged;
        if o.count == 0 {
            return;
        }
        let total = self.count + o.count;
        let d = o.mean - self.mean;
        self.mean += d * (o.count as f64 / total as f64);
        self.m2 += o.m2 + d * d * (self.count as f64 * o.count as f64 / total as f64);
        self.count = total;
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
    }

    fn estimate(&self, seed: u64) -> Result<MCEstimate> {
        if self.count == 0 {
            return Err(Error::Numerical("no finite samples survived".into()));
        }
        Ok(MCEstimate {
            mean: self.mean,
            stderr: if self.count < 2 { f64::INFINITY } else { self.stderr() },
            n_used: self.count,
            n_flagged: self.flagged,
            seed,
        })
    }
}

/// Draws (ξ₁, …, ξ_m) with ξ₁ ~ U[0, N] and ξ_σ ~ U[0, ξ_{σ−1}], returning
/// the inverse-density weight N·ξ₁⋯ξ_{m−1}. The coordinates come out in
/// descending order.
#[inline]
pub fn simplex_sample<R: Rng>(m: usize, upper: f64, rng: &mut R) -> ([f64; 4], f64) {
    debug_assert!((2..=4).contains(&m));
    let mut xi = [0.0; 4];
    let mut weight = upper;
    let mut prev = upper;
    for (i, slot) in xi.iter_mut().take(m).enumerate() {
        let x = rng.gen::<f64>() * prev;
        *slot = x;
        prev = x;
        if i + 1 < m {
            weight *= x;
        }
    }
    (xi, weight)
}

fn sample_batch<C: Curve>(
    curve: &C,
    framing: &Framing,
    order: usize,
    count: u64,
    mut rng: ChaCha8Rng,
) -> Accum {
    let upper = curve.upper();
    let mut acc = Accum::default();
    for _ in 0..count {
        let (xi, w) = simplex_sample(order, upper, &mut rng);
        let (x, tx) = curve.eval(xi[0]);
        let (y, ty) = curve.eval(xi[1]);
        let (z, tz) = curve.eval(xi[2]);
        let v = if order == 3 {
            f1(
                &framing.shift(1, x),
                &framing.shift(2, y),
                &framing.shift(3, z),
                &tx,
                &ty,
                &tz,
            )
        } else {
            let (wp, tw) = curve.eval(xi[3]);
            f2(
                &framing.shift(1, x),
                &framing.shift(2, y),
                &framing.shift(3, z),
                &framing.shift(4, wp),
                &tx,
                &ty,
                &tz,
                &tw,
            )
        } * w;
        if v.is_finite() {
            acc.push(v);
        } else {
            acc.flagged += 1;
        }
    }
    acc
}

/// Incremental batch-aligned accumulation state for one integral.
#[derive(Clone, Copy, Debug, Default)]
struct Partial {
    acc: Accum,
    batches_done: u64,
    samples_done: u64,
}

impl Partial {
    /// Extends the sample count to `new_total`. All intermediate totals must
    /// be whole multiples of BATCH (only the final extension may be ragged),
    /// which keeps every batch's RNG stream self-contained.
    fn extend_to<C: Curve>(
        &mut self,
        curve: &C,
        framing: &Framing,
        order: usize,
        domain: u64,
        seed: u64,
        new_total: u64,
    ) {
        debug_assert!(self.samples_done.is_multiple_of(BATCH));
        debug_assert!(new_total >= self.samples_done);
        if new_total == self.samples_done {
            return;
        }
        let first = self.batches_done;
        let last = new_total.div_ceil(BATCH);
        let accs: Vec<Accum> = (first..last)
            .into_par_iter()
            .map(|b| {
                let count = BATCH.min(new_total - b * BATCH);
                sample_batch(curve, framing, order, count, batch_rng(seed, domain, b))
            })
            .collect();
        for a in &accs {
            self.acc.merge(a);
        }
        self.batches_done = last;
        self.samples_done = new_total;
    }
}

pub(crate) fn check_flagged(acc: &Accum) -> Result<()> {
    let total = acc.count + acc.flagged;
    if total > 0 && acc.flagged as f64 / total as f64 > 1e-4 {
        return Err(Error::Numerical(format!(
            "{} of {} samples hit singular configurations despite framing",
            acc.flagged, total
        )));
    }
    Ok(())
}

pub(crate) fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Input(format!("cannot build {w}-thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn integrate<C: Curve>(
    curve: &C,
    cfg: &SamplerConfig,
    order: usize,
    domain: u64,
    n: u64,
) -> Result<MCEstimate> {
    let framing = Framing::resolve(cfg.epsilon, curve.min_segment_length())?;
    let mut p = Partial::default();
    with_pool(cfg.workers, || {
        p.extend_to(curve, &framing, order, domain, cfg.seed, n);
    })?;
    check_flagged(&p.acc)?;
    p.acc.estimate(cfg.seed)
}

/// Estimates the triple ordered integral of the F1 kernel with cfg.n samples.
pub fn integrate_rho1<C: Curve>(curve: &C, cfg: &SamplerConfig) -> Result<MCEstimate> {
    cfg.validate()?;
    integrate(curve, cfg, 3, DOMAIN_RHO1, cfg.n)
}

/// Estimates the quadruple ordered integral of the F2 kernel with cfg.n samples.
pub fn integrate_rho2<C: Curve>(curve: &C, cfg: &SamplerConfig) -> Result<MCEstimate> {
    cfg.validate()?;
    integrate(curve, cfg, 4, DOMAIN_RHO2, cfg.n)
}

/// Budget split between ρ₁ and ρ₂: proportional to the simplex volumes
/// N³/6 : N⁴/24 = 4 : N unless overridden.
pub(crate) fn split_budget(n: u64, upper: f64, frac: Option<f64>) -> (u64, u64) {
    let frac = frac.unwrap_or(4.0 / (4.0 + upper));
    let n1 = ((n as f64 * frac).round() as u64).clamp(1, n.saturating_sub(1).max(1));
    (n1, n - n1)
}

/// Full ρ = ρ₁ + ρ₂ estimate, splitting cfg.n between the two integrals.
pub fn rho<C: Curve>(curve: &C, cfg: &SamplerConfig) -> Result<RhoEstimate> {
    cfg.validate()?;
    if cfg.n < 2 {
        return Err(Error::Domain("combined estimate needs n >= 2".into()));
    }
    let (n1, n2) = split_budget(cfg.n, curve.upper(), cfg.rho1_fraction);
    let rho1 = integrate(curve, cfg, 3, DOMAIN_RHO1, n1)?;
    let rho2 = integrate(curve, cfg, 4, DOMAIN_RHO2, n2)?;
    let est = RhoEstimate { rho1, rho2, hit_threshold: false };
    let hit = est.stderr() <= cfg.threshold_sigma;
    Ok(RhoEstimate { hit_threshold: hit, ..est })
}

/// Adaptive version of `rho`: doubles the sample count until the combined
/// stderr reaches cfg.threshold_sigma or the budget cfg.n is exhausted.
/// `hit_threshold` on the result reports which happened.
pub fn run_until<C: Curve>(curve: &C, cfg: &SamplerConfig) -> Result<RhoEstimate> {
    cfg.validate()?;
    if cfg.n < 2 {
        return Err(Error::Domain("combined estimate needs n >= 2".into()));
    }
    let framing = Framing::resolve(cfg.epsilon, curve.min_segment_length())?;
    let (n1_total, n2_total) = split_budget(cfg.n, curve.upper(), cfg.rho1_fraction);
    let (mut p1, mut p2) = (Partial::default(), Partial::default());
    with_pool(cfg.workers, || {
        // A non-finite threshold means "no precision target": consume the
        // whole budget in one pass instead of ramping up.
        let (mut t1, mut t2) = if cfg.threshold_sigma.is_finite() {
            (BATCH.min(n1_total), BATCH.min(n2_total))
        } else {
            (n1_total, n2_total)
        };
        loop {
            p1.extend_to(curve, &framing, 3, DOMAIN_RHO1, cfg.seed, t1);
            p2.extend_to(curve, &framing, 4, DOMAIN_RHO2, cfg.seed, t2);
            let se = p1.acc.stderr().hypot(p2.acc.stderr());
            if se <= cfg.threshold_sigma
                || (p1.samples_done >= n1_total && p2.samples_done >= n2_total)
            {
                break;
            }
            t1 = (t1 * 2).min(n1_total);
            t2 = (t2 * 2).min(n2_total);
        }
    })?;
    check_flagged(&p1.acc)?;
    check_flagged(&p2.acc)?;
    let est = RhoEstimate {
        rho1: p1.acc.estimate(cfg.seed)?,
        rho2: p2.acc.estimate(cfg.seed)?,
        hit_threshold: false,
    };
    let hit = est.stderr() <= cfg.threshold_sigma;
    Ok(RhoEstimate { hit_threshold: hit, ..est })
}
