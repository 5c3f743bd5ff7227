//! Trapping certificates: exact piecewise images of convex polygons
//! under iterates of the map, and finite-step forward-containment
//! verification.
//!
//! A convex source polygon is split at each step along the current
//! pullback of the singularity line x = 0, each fragment is pushed
//! forward by its one-step affine branch, and areas are tracked exactly:
//! the piece areas of an n-step image always sum to |b|^n times the
//! source area.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_points::f2_point;
use crate::geometry::{
    clip_polygon, contains_polygon, polygon_area, pt, ClipResult, ConvexPolygon, HalfPlane, Point2,
};
use crate::map::{compose_branch, lozi_iterate, LoziParams, Sign, SignItinerary};
use crate::rational::{rat, Rational};

/// Default cap on singularity-free fragments per image computation.
pub const DEFAULT_FRAGMENT_BUDGET: usize = 64;

/// The exact n-step image of a convex polygon as singularity-free
/// convex pieces, labeled by branch itinerary.
#[derive(Clone, Debug, Serialize)]
pub struct PiecewiseImage {
    pub pieces: Vec<(SignItinerary, ConvexPolygon)>,
}

impl PiecewiseImage {
    pub fn total_area(&self) -> Rational {
        let mut acc = Rational::zero();
        for (_, poly) in &self.pieces {
            acc = acc + polygon_area(poly);
        }
        acc
    }
}

/// [`image_piecewise`] with an explicit fragment budget.
pub fn image_piecewise_with_budget(
    p: &LoziParams,
    n: usize,
    src: &ConvexPolygon,
    budget: usize,
) -> Result<PiecewiseImage> {
    if n >= 1 && p.b.is_zero() {
        return Err(Error::NonInvertibleBranch);
    }
    let mut frags: Vec<(SignItinerary, ConvexPolygon)> =
        vec![(SignItinerary(Vec::new()), src.clone())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(frags.len());
        for (prefix, poly) in &frags {
            for sign in [Sign::NonNeg, Sign::Neg] {
                // Closed clip to the sign's half-plane; fragments of zero
                // area are boundary slivers and are dropped.
                let half = match sign {
                    Sign::NonNeg => {
                        HalfPlane::closed(Rational::one(), Rational::zero(), Rational::zero())
                    }
                    Sign::Neg => {
                        HalfPlane::closed(-Rational::one(), Rational::zero(), Rational::zero())
                    }
                }
                .expect("unit normal");
                let clipped = match clip_polygon(poly, &half) {
                    ClipResult::Polygon(c) => c,
                    _ => continue,
                };
                // On the closed half-plane the one-step branch equals the
                // map, so mapping vertices is exact.
                let sigma = Rational::from_int(sign.sigma() as i64);
                let mapped: Vec<Point2> = clipped
                    .vertices()
                    .iter()
                    .map(|v| {
                        pt(
                            Rational::one() - &p.a * &sigma * &v.x + &p.b * &v.y,
                            v.x.clone(),
                        )
                    })
                    .collect();
                let image = ConvexPolygon::new(mapped)
                    .expect("invertible affine image of a convex polygon");
                let mut itinerary = prefix.clone();
                itinerary.0.push(sign);
                next.push((itinerary, image));
            }
        }
        if next.len() > budget {
            return Err(Error::FragmentBudgetExceeded { budget });
        }
        frags = next;
    }
    Ok(PiecewiseImage { pieces: frags })
}

/// Exact n-step image of `src`, split along the singularity pullbacks,
/// with the default fragment budget.
pub fn image_piecewise(p: &LoziParams, n: usize, src: &ConvexPolygon) -> Result<PiecewiseImage> {
    image_piecewise_with_budget(p, n, src, DEFAULT_FRAGMENT_BUDGET)
}

/// One piece of one verification step.
#[derive(Clone, Debug, Serialize)]
pub struct TrappingPiece {
    pub itinerary: SignItinerary,
    pub polygon: ConvexPolygon,
    pub area: Rational,
    pub contained: bool,
}

/// One macro step (one n-fold image) of the verification.
#[derive(Clone, Debug, Serialize)]
pub struct TrappingStep {
    /// 1-based: step m holds the pieces of the (n*m)-fold image.
    pub step: usize,
    pub pieces: Vec<TrappingPiece>,
    pub total_area: Rational,
    pub expected_area: Rational,
    pub all_contained: bool,
}

/// Certificate that the region traps its n-fold images for k steps.
#[derive(Clone, Debug, Serialize)]
pub struct TrappingCertificate {
    pub passed: bool,
    pub n: usize,
    pub steps_requested: usize,
    pub steps: Vec<TrappingStep>,
    /// (step, piece index) of the first escaping piece.
    pub first_offender: Option<(usize, usize)>,
}

/// Verify that each of the first k n-fold images of `region` lies in the
/// closed region, piece by piece, with exact area bookkeeping at every
/// step. Verification stops at the first offending piece; an escape is
/// reported in the certificate, not as an error.
pub fn verify_trapping(
    p: &LoziParams,
    n: usize,
    region: &ConvexPolygon,
    steps: usize,
) -> Result<TrappingCertificate> {
    if steps < 1 {
        return Err(Error::InvalidParameter(
            "step count must be at least 1".into(),
        ));
    }
    let contraction = p.b.abs().powi(n as u32);
    let mut expected_area = polygon_area(region);
    let mut current: Vec<(SignItinerary, ConvexPolygon)> =
        vec![(SignItinerary(Vec::new()), region.clone())];
    let mut report_steps = Vec::new();
    let mut first_offender = None;

    'steps: for step in 1..=steps {
        let mut next: Vec<(SignItinerary, ConvexPolygon)> = Vec::new();
        for (_, poly) in &current {
            let image = image_piecewise(p, n, poly)?;
            next.extend(image.pieces);
        }
        if next.len() > DEFAULT_FRAGMENT_BUDGET {
            return Err(Error::FragmentBudgetExceeded {
                budget: DEFAULT_FRAGMENT_BUDGET,
            });
        }
        expected_area = &expected_area * &contraction;
        let mut pieces = Vec::with_capacity(next.len());
        let mut total_area = Rational::zero();
        let mut all_contained = true;
        for (idx, (itinerary, polygon)) in next.iter().enumerate() {
            let area = polygon_area(polygon);
            total_area = total_area + &area;
            let contained = contains_polygon(region, polygon);
            if !contained {
                all_contained = false;
                if first_offender.is_none() {
                    first_offender = Some((step, idx));
                }
            }
            pieces.push(TrappingPiece {
                itinerary: itinerary.clone(),
                polygon: polygon.clone(),
                area,
                contained,
            });
        }
        if total_area != expected_area {
            return Err(Error::Internal(format!(
                "area bookkeeping broken at step {step}: {total_area:?} != {expected_area:?}"
            )));
        }
        report_steps.push(TrappingStep {
            step,
            pieces,
            total_area,
            expected_area: expected_area.clone(),
            all_contained,
        });
        if !all_contained {
            break 'steps;
        }
        current = next;
    }

    Ok(TrappingCertificate {
        passed: first_offender.is_none(),
        n,
        steps_requested: steps,
        steps: report_steps,
        first_offender,
    })
}

/// Exact slope of the contracting direction of the 4-step branch that
/// fixes the segment, at parameters with b = a - 1. The branch matrix
/// has eigenvalues {1, b^4} there; the b^4-eigenvector gives the slope.
pub fn stable_slope(p: &LoziParams) -> Result<Rational> {
    let it: SignItinerary = "-+-+".parse().expect("valid itinerary");
    let m = compose_branch(p, &it).map.linear;
    if m.m[0][1].is_zero() {
        return Err(Error::StableDirectionUndefined);
    }
    let b4 = p.b.powi(4);
    Ok((&b4 - &m.m[0][0]) / &m.m[0][1])
}

/// The hexagonal trapping region around the 4-step fixed segment, for
/// parameters on the line b = a - 1.
///
/// Vertices, in order: R1 = F1 + (0, 1/5); F1; R2 = F1 + (1/10, s/10);
/// R3 = F2 + (0, -1/4); F2; R4 = F2 + (-1/5, -s/5), where F2 is the
/// segment endpoint on x = 0, F1 its 2-fold image, and s the exact
/// stable slope, so sides F1R2 and F2R4 are parallel with slope s.
pub fn trapping_region_for(p: &LoziParams) -> Result<ConvexPolygon> {
    if p.b != &p.a - Rational::one() {
        return Err(Error::InvalidParameter(
            "trapping construction requires parameters with b = a - 1".into(),
        ));
    }
    let f2 = f2_point(p)?;
    let f1 = lozi_iterate(p, &f2, 2);
    let s = stable_slope(p)?;
    let offset = |base: &Point2, dx: Rational, dy: Rational| pt(&base.x + dx, &base.y + dy);
    let r1 = offset(&f1, Rational::zero(), rat(1, 5));
    let r2 = offset(&f1, rat(1, 10), &s / Rational::from_int(10));
    let r3 = offset(&f2, Rational::zero(), rat(-1, 4));
    let r4 = offset(&f2, rat(-1, 5), &s / Rational::from_int(-5));
    ConvexPolygon::new(vec![r1, f1, r2, r3, f2, r4])
}

/// Float diagnostic for a trapping run: per macro step, the largest
/// distance from any piece vertex to the fixed segment. Reported for
/// inspection only; the certificate does not depend on it.
pub fn contraction_diagnostic(p: &LoziParams, cert: &TrappingCertificate) -> Result<Vec<f64>> {
    let (f1, f2) = crate::simulation::fixed_segment_f64(p)?;
    Ok(cert
        .steps
        .iter()
        .map(|step| {
            step.pieces
                .iter()
                .flat_map(|piece| piece.polygon.vertices())
                .map(|v| crate::simulation::dist_point_segment(v.to_f64(), f1, f2))
                .fold(0.0f64, f64::max)
        })
        .collect())
}
