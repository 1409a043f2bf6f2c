//! Computation of the degree-2 Vassiliev invariant ρ(C) (the Casson knot
//! invariant, up to normalization) for closed polygonal curves in R³.
//!
//! ρ(C) = ρ₁(C) + ρ₂(C) is a sum of a triple and a quadruple path-ordered
//! contour integral along the curve. For a polygon with N segments the curve
//! is parametrized by S ∈ [0, N], one unit interval per segment. Sharp
//! corners introduce a systematic error in the integrals, so the polygon is
//! first replaced by a G¹ curve: every corner is substituted by a smooth arc
//! confined to a sphere that contains no other part of the knot, which
//! preserves the knot type. The integrals are then estimated by Monte Carlo
//! over the ordered simplex domains, with a small "framing" displacement of
//! the integration copies regularizing the coincident-point singularities.
//!
//! The second Conway coefficient follows as a₂ = (ρ + 1/12)/2, which is the
//! quantity that actually distinguishes knot classes (unknot 0, trefoil 1,
//! figure-eight −1, ...).

// `!(x > 0.0)` is the NaN-rejecting form of a positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delta;
pub mod error;
pub mod geom;
pub mod integrand;
pub mod invariant;
pub mod knot;
pub mod mc;
pub mod oracle;
pub mod reduce;
pub mod smooth;

pub use error::{Error, Result};
pub use geom::V3;
pub use integrand::{EpsilonSpec, Framing};
pub use knot::{Curve, DiscreteKnot, GenKind, KnotMetadata, ParamPoint};
pub use mc::{MCEstimate, RhoEstimate, SamplerConfig};
pub use smooth::{CornerPlan, CornerStatus, SmoothedKnot};
