//! Exact enumeration of the fixed points of the n-fold map.
//!
//! Every length-n sign itinerary yields one affine branch `q -> M q + c`;
//! its fixed points solve `(I - M) q = c`. Depending on the exact rank of
//! `I - M` the solution set is a point, a line, everything, or empty, and
//! is then intersected with the branch domain. Accepted items are
//! re-verified against the true map with no branch shortcut, so the
//! returned set is a certificate, not a numeric approximation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{point_on_segment, pt, Point2};
use crate::map::{
    compose_branch, lozi_iterate, AffineBranch, LoziParams, Mat2, Sign, SignItinerary,
    StepConstraint,
};
use crate::rational::Rational;

/// Hard cap on the iterate order for exhaustive branch enumeration.
pub const BRANCH_CAP: usize = 12;

/// Solution set of one branch's fixed-point system, after intersecting
/// with the branch domain.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BranchSolution {
    IsolatedPoint { point: Point2 },
    Segment { endpoints: (Point2, Point2) },
    WholeDomain,
    Empty,
}

/// What happened on one branch: the domain number, the unique candidate
/// when the linear system was nonsingular (kept even when rejected), and
/// the constraint steps the candidate violated.
#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    pub domain: usize,
    pub itinerary: SignItinerary,
    pub solution: BranchSolution,
    pub candidate: Option<Point2>,
    pub violated_steps: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointItem {
    pub point: Point2,
    pub provenance: Vec<SignItinerary>,
}

/// A maximal closed segment of fixed points; endpoints in lexicographic
/// order.
#[derive(Clone, Debug, Serialize)]
pub struct FixedSegmentItem {
    pub endpoints: (Point2, Point2),
    pub provenance: Vec<SignItinerary>,
}

/// All fixed points of the n-fold map: isolated points, maximal
/// segments, and the per-branch reports they were assembled from.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointSet {
    pub n: usize,
    pub points: Vec<FixedPointItem>,
    pub segments: Vec<FixedSegmentItem>,
    pub reports: Vec<BranchReport>,
}

/// Domain number of an itinerary: domains come in pairs (2k-1, 2k)
/// distinguished by the final-step sign, with the earlier signs forming
/// a binary counter across the pairs.
pub fn domain_index(it: &SignItinerary) -> usize {
    let n = it.len();
    let mut idx = 1usize;
    for (k, &s) in it.signs().iter().enumerate() {
        if s == Sign::Neg {
            idx += if k + 1 == n { 1 } else { 1usize << (k + 1) };
        }
    }
    idx
}

/// Inverse of [`domain_index`] for fixed n.
pub fn itinerary_for_domain(idx: usize, n: usize) -> SignItinerary {
    assert!(
        n >= 1 && idx >= 1 && idx <= 1 << n,
        "domain index out of range"
    );
    let v = idx - 1;
    let signs = (0..n)
        .map(|k| {
            let bit = if k + 1 == n {
                v & 1
            } else {
                (v >> (k + 1)) & 1
            };
            if bit == 1 {
                Sign::Neg
            } else {
                Sign::NonNeg
            }
        })
        .collect();
    SignItinerary(signs)
}

/// Solve the branch's fixed-point system `(I - M) q = c` exactly and
/// intersect the solution set with the branch domain.
///
/// A nonsingular system gives one candidate, membership-tested against
/// the half-open domain. A rank-1 consistent system gives a fixed line,
/// intersected with the domain closure (a closed segment of genuine
/// fixed points: on the closure of each half-plane the branch agrees
/// with the true map).
pub fn solve_branch_fixed(br: &AffineBranch) -> Result<BranchSolution> {
    if br
        .constraints
        .iter()
        .any(|c| matches!(c, StepConstraint::Never))
    {
        return Ok(BranchSolution::Empty);
    }
    let m = &br.map.linear.m;
    let c = &br.map.translation;
    let im = Mat2 {
        m: [
            [Rational::one() - &m[0][0], -&m[0][1]],
            [-&m[1][0], Rational::one() - &m[1][1]],
        ],
    };
    if !im.det().is_zero() {
        let q = im.inverse()?.apply(c);
        return Ok(if br.contains(&q) {
            BranchSolution::IsolatedPoint { point: q }
        } else {
            BranchSolution::Empty
        });
    }

    let rows = [
        (im.m[0][0].clone(), im.m[0][1].clone(), c.x.clone()),
        (im.m[1][0].clone(), im.m[1][1].clone(), c.y.clone()),
    ];
    let nonzero: Vec<&(Rational, Rational, Rational)> = rows
        .iter()
        .filter(|(a, b, _)| !a.is_zero() || !b.is_zero())
        .collect();
    if nonzero.is_empty() {
        // M = I: either every domain point is fixed or none is.
        return Ok(if c.x.is_zero() && c.y.is_zero() {
            BranchSolution::WholeDomain
        } else {
            BranchSolution::Empty
        });
    }
    let (a0, b0, c0) = nonzero[0];
    // Rank 1: the other row must be proportional including the right-hand
    // side, else the system is inconsistent.
    for (a1, b1, c1) in &rows {
        let consistent = (a0 * c1 - a1 * c0).is_zero() && (b0 * c1 - b1 * c0).is_zero();
        if !consistent {
            return Ok(BranchSolution::Empty);
        }
    }

    // The fixed line a0 x + b0 y = c0, parametrized p(t) = p0 + t d.
    let (p0, d) = if b0.is_zero() {
        (
            pt(c0 / a0, Rational::zero()),
            pt(Rational::zero(), Rational::one()),
        )
    } else {
        (pt(Rational::zero(), c0 / b0), pt(b0.clone(), -a0))
    };
    clip_line_to_domain(br, &p0, &d)
}

/// Intersect the line `p0 + t d` with the closure of the branch domain.
fn clip_line_to_domain(br: &AffineBranch, p0: &Point2, d: &Point2) -> Result<BranchSolution> {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for sc in &br.constraints {
        let h = match sc {
            StepConstraint::Plane(h) => h,
            StepConstraint::Always => continue,
            StepConstraint::Never => return Ok(BranchSolution::Empty),
        };
        let normal = pt(h.normal.0.clone(), h.normal.1.clone());
        let slope = normal.dot(d);
        let gap = &h.offset - normal.dot(p0);
        if slope.is_zero() {
            if gap.is_positive() {
                return Ok(BranchSolution::Empty);
            }
            continue;
        }
        let bound = &gap / &slope;
        if slope.is_positive() {
            if lo.as_ref().is_none_or(|cur| bound > *cur) {
                lo = Some(bound);
            }
        } else if hi.as_ref().is_none_or(|cur| bound < *cur) {
            hi = Some(bound);
        }
    }
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        // A fixed half-line or full line cannot be reported as a segment.
        _ => return Err(Error::UnboundedFixedLine),
    };
    if lo > hi {
        return Ok(BranchSolution::Empty);
    }
    let at = |t: &Rational| p0.add(&d.scale(t));
    if lo == hi {
        return Ok(BranchSolution::IsolatedPoint { point: at(&lo) });
    }
    let (e0, e1) = (at(&lo), at(&hi));
    Ok(BranchSolution::Segment {
        endpoints: order_endpoints(e0, e1),
    })
}

fn order_endpoints(a: Point2, b: Point2) -> (Point2, Point2) {
    if (&a.x, &a.y) <= (&b.x, &b.y) {
        (a, b)
    } else {
        (b, a)
    }
}

/// The distinguished point `(0, (1 - b^2) / (a (1 + b^2)))` on x = 0.
///
/// On the parameter line b = a - 1 it is the endpoint on x = 0 of the
/// 4-step fixed segment (hence 4-periodic) and anchors the covering
/// boxes.
pub fn f2_point(p: &LoziParams) -> Result<Point2> {
    if p.a.is_zero() {
        return Err(Error::InvalidParameter("a must be nonzero".into()));
    }
    let b2 = &p.b * &p.b;
    let y = (Rational::one() - &b2) / (&p.a * (Rational::one() + &b2));
    Ok(pt(Rational::zero(), y))
}

/// Enumerate all fixed points of the n-fold map across all 2^n branches,
/// returning the canonicalized union plus per-branch reports.
pub fn enumerate_fixed_points(p: &LoziParams, n: usize) -> Result<FixedPointSet> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "iterate order must be at least 1".into(),
        ));
    }
    if n > BRANCH_CAP {
        return Err(Error::BranchBudgetExceeded { n, cap: BRANCH_CAP });
    }

    let mut reports = Vec::with_capacity(1 << n);
    let mut raw_points: Vec<(Point2, SignItinerary)> = Vec::new();
    let mut raw_segments: Vec<((Point2, Point2), SignItinerary)> = Vec::new();

    for idx in 1..=(1usize << n) {
        let it = itinerary_for_domain(idx, n);
        let br = compose_branch(p, &it);
        let solution = solve_branch_fixed(&br)?;
        let (candidate, violated) = nonsingular_candidate(&br);
        match &solution {
            BranchSolution::IsolatedPoint { point } => {
                verify_fixed(p, point, n)?;
                raw_points.push((point.clone(), it.clone()));
            }
            BranchSolution::Segment { endpoints } => {
                verify_fixed(p, &endpoints.0, n)?;
                verify_fixed(p, &endpoints.1, n)?;
                raw_segments.push((endpoints.clone(), it.clone()));
            }
            BranchSolution::WholeDomain => {
                return Err(Error::Internal(
                    "branch fixes a two-dimensional set; not representable".into(),
                ));
            }
            BranchSolution::Empty => {}
        }
        let violated_steps = if matches!(solution, BranchSolution::Empty) {
            violated
        } else {
            Vec::new()
        };
        reports.push(BranchReport {
            domain: idx,
            itinerary: it,
            solution,
            candidate,
            violated_steps,
        });
    }

    let segments = merge_segments(raw_segments);
    let mut points: BTreeMap<Point2, Vec<SignItinerary>> = BTreeMap::new();
    for (q, it) in raw_points {
        points.entry(q).or_default().push(it);
    }

    // Absorb isolated points that lie on a merged segment; under the
    // half-open domain convention they are closure points of the
    // neighbouring segment branch.
    let mut segments = segments;
    let mut final_points = Vec::new();
    'points: for (q, provenance) in points {
        for seg in &mut segments {
            if point_on_segment(&q, &seg.endpoints.0, &seg.endpoints.1) {
                seg.provenance.extend(provenance);
                sort_provenance(&mut seg.provenance);
                continue 'points;
            }
        }
        let mut provenance = provenance;
        sort_provenance(&mut provenance);
        final_points.push(FixedPointItem {
            point: q,
            provenance,
        });
    }

    Ok(FixedPointSet {
        n,
        points: final_points,
        segments,
        reports,
    })
}

/// The unique solve candidate of a nonsingular branch, with the steps it
/// violates, regardless of acceptance. Used for rejection reporting.
fn nonsingular_candidate(br: &AffineBranch) -> (Option<Point2>, Vec<usize>) {
    let m = &br.map.linear.m;
    let c = &br.map.translation;
    let im = Mat2 {
        m: [
            [Rational::one() - &m[0][0], -&m[0][1]],
            [-&m[1][0], Rational::one() - &m[1][1]],
        ],
    };
    if im.det().is_zero() {
        return (None, Vec::new());
    }
    let q = im.inverse().expect("nonzero determinant").apply(c);
    let violated = br.violated_steps(&q);
    (Some(q), violated)
}

fn verify_fixed(p: &LoziParams, q: &Point2, n: usize) -> Result<()> {
    if lozi_iterate(p, q, n) == *q {
        Ok(())
    } else {
        Err(Error::Internal(format!(
            "reported fixed point {q:?} fails exact re-verification"
        )))
    }
}

fn sort_provenance(list: &mut Vec<SignItinerary>) {
    list.sort_by_key(domain_index);
    list.dedup();
}

/// Key identifying the support line of a segment.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum LineKey {
    Vertical {
        x: Rational,
    },
    Sloped {
        slope: Rational,
        intercept: Rational,
    },
}

fn line_key(a: &Point2, b: &Point2) -> LineKey {
    if a.x == b.x {
        LineKey::Vertical { x: a.x.clone() }
    } else {
        let slope = (&b.y - &a.y) / (&b.x - &a.x);
        let intercept = &a.y - &slope * &a.x;
        LineKey::Sloped { slope, intercept }
    }
}

/// Merge collinear overlapping or touching segments into maximal ones.
fn merge_segments(raw: Vec<((Point2, Point2), SignItinerary)>) -> Vec<FixedSegmentItem> {
    // Group by support line; parametrize by y on vertical lines and by x
    // otherwise, so each segment is an interval.
    let mut groups: BTreeMap<LineKey, Vec<(Rational, Rational, SignItinerary)>> = BTreeMap::new();
    for ((a, b), it) in raw {
        let key = line_key(&a, &b);
        let (s, e) = match &key {
            LineKey::Vertical { .. } => (a.y.clone(), b.y.clone()),
            LineKey::Sloped { .. } => (a.x.clone(), b.x.clone()),
        };
        let (s, e) = if s <= e { (s, e) } else { (e, s) };
        groups.entry(key).or_default().push((s, e, it));
    }

    let mut out = Vec::new();
    for (key, mut intervals) in groups {
        intervals.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        let mut iter = intervals.into_iter();
        let (mut s, mut e, it) = iter.next().expect("group is nonempty");
        let mut provenance = vec![it];
        let flush = |s: &Rational,
                     e: &Rational,
                     provenance: &mut Vec<SignItinerary>,
                     out: &mut Vec<FixedSegmentItem>| {
            let at = |t: &Rational| match &key {
                LineKey::Vertical { x } => pt(x.clone(), t.clone()),
                LineKey::Sloped { slope, intercept } => pt(t.clone(), slope * t + intercept),
            };
            let mut provenance = std::mem::take(provenance);
            sort_provenance(&mut provenance);
            out.push(FixedSegmentItem {
                endpoints: order_endpoints(at(s), at(e)),
                provenance,
            });
        };
        for (s2, e2, it2) in iter {
            if s2 <= e {
                if e2 > e {
                    e = e2;
                }
                provenance.push(it2);
            } else {
                flush(&s, &e, &mut provenance, &mut out);
                s = s2;
                e = e2;
                provenance = vec![it2];
            }
        }
        flush(&s, &e, &mut provenance, &mut out);
    }
    out.sort_by(|a, b| {
        let ka = (
            &a.endpoints.0.x,
            &a.endpoints.0.y,
            &a.endpoints.1.x,
            &a.endpoints.1.y,
        );
        let kb = (
            &b.endpoints.0.x,
            &b.endpoints.0.y,
            &b.endpoints.1.x,
            &b.endpoints.1.y,
        );
        ka.cmp(&kb)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::lozi_apply;
    use crate::rational::rat;

    fn params() -> LoziParams {
        LoziParams::new(rat(7, 5), rat(2, 5))
    }

    fn branch(domain: usize) -> AffineBranch {
        compose_branch(&params(), &itinerary_for_domain(domain, 4))
    }

    #[test]
    fn domain_numbering_is_a_bijection() {
        for n in 1..=5 {
            for idx in 1..=(1usize << n) {
                let it = itinerary_for_domain(idx, n);
                assert_eq!(domain_index(&it), idx);
            }
        }
        // Pairs (2k-1, 2k) differ exactly in the final sign.
        for k in 1..=8 {
            let odd = itinerary_for_domain(2 * k - 1, 4);
            let even = itinerary_for_domain(2 * k, 4);
            assert_eq!(odd.signs()[..3], even.signs()[..3]);
            assert_ne!(odd.signs()[3], even.signs()[3]);
        }
    }

    #[test]
    fn domain_one_has_the_positive_fixed_point() {
        assert_eq!(
            solve_branch_fixed(&branch(1)).unwrap(),
            BranchSolution::IsolatedPoint {
                point: pt(rat(1, 2), rat(1, 2))
            }
        );
    }

    #[test]
    fn domain_six_is_a_segment_on_its_fixed_line() {
        // The domain-6 system is rank-1 with fixed line y = x - 35/29.
        let sol = solve_branch_fixed(&branch(6)).unwrap();
        match sol {
            BranchSolution::Segment { endpoints: (a, b) } => {
                assert_eq!(a, pt(rat(15, 29), rat(-20, 29)));
                assert_eq!(b, pt(rat(35, 29), rat(0, 1)));
                for q in [&a, &b] {
                    assert_eq!(&q.y, &(&q.x - rat(35, 29)));
                }
            }
            other => panic!("expected segment, got {other:?}"),
        }
    }

    #[test]
    fn domain_twelve_rejects_its_candidate() {
        let br = branch(12);
        assert_eq!(solve_branch_fixed(&br).unwrap(), BranchSolution::Empty);
        let (candidate, violated) = nonsingular_candidate(&br);
        // The candidate solves the linear system but has x >= 0 while the
        // branch requires x < 0 at step 0 (and fails step 3 as well).
        assert_eq!(candidate, Some(pt(rat(15, 29), rat(0, 1))));
        assert_eq!(violated, vec![0, 3]);
    }

    #[test]
    fn one_step_fixed_points() {
        let set = enumerate_fixed_points(&params(), 1).unwrap();
        let pts: Vec<&Point2> = set.points.iter().map(|i| &i.point).collect();
        assert_eq!(
            pts,
            vec![&pt(rat(-5, 4), rat(-5, 4)), &pt(rat(1, 2), rat(1, 2))]
        );
        assert!(set.segments.is_empty());
    }

    #[test]
    fn four_step_fixed_point_set_is_two_points_and_two_segments() {
        let set = enumerate_fixed_points(&params(), 4).unwrap();
        let pts: Vec<&Point2> = set.points.iter().map(|i| &i.point).collect();
        assert_eq!(
            pts,
            vec![&pt(rat(-5, 4), rat(-5, 4)), &pt(rat(1, 2), rat(1, 2))]
        );
        assert_eq!(set.segments.len(), 2);
        assert_eq!(
            set.segments[0].endpoints,
            (pt(rat(-20, 29), rat(35, 29)), pt(rat(0, 1), rat(15, 29)))
        );
        assert_eq!(
            set.segments[1].endpoints,
            (pt(rat(15, 29), rat(-20, 29)), pt(rat(35, 29), rat(0, 1)))
        );
        // Each segment absorbed the isolated closure points of two other
        // domains, so carries three provenance itineraries.
        assert_eq!(set.segments[0].provenance.len(), 3);
        assert_eq!(set.segments[1].provenance.len(), 3);
    }

    #[test]
    fn segment_image_is_the_other_segment() {
        let p = params();
        let set = enumerate_fixed_points(&p, 4).unwrap();
        let (l1a, l1b) = set.segments[0].endpoints.clone();
        let image = order_endpoints(lozi_apply(&p, &l1a), lozi_apply(&p, &l1b));
        assert_eq!(image, set.segments[1].endpoints);
    }

    #[test]
    fn segment_interiors_are_fixed() {
        let p = params();
        let set = enumerate_fixed_points(&p, 4).unwrap();
        for seg in &set.segments {
            let (a, b) = &seg.endpoints;
            for k in 1..=10i64 {
                let t = rat(k, 11);
                let q = a.add(&b.sub(a).scale(&t));
                assert_eq!(lozi_iterate(&p, &q, 4), q);
            }
        }
    }

    #[test]
    fn off_segment_parameters_leave_only_isolated_points() {
        let p = LoziParams::new(rat(7, 5) + rat(1, 1000), rat(2, 5));
        let set = enumerate_fixed_points(&p, 4).unwrap();
        assert!(set.segments.is_empty());
        assert!(!set.points.is_empty());
    }

    #[test]
    fn coarse_grid_completeness() {
        let p = params();
        let set = enumerate_fixed_points(&p, 4).unwrap();
        for i in -8..=8i64 {
            for j in -8..=8i64 {
                let q = pt(rat(i, 4), rat(j, 4));
                if lozi_iterate(&p, &q, 4) != q {
                    continue;
                }
                let in_points = set.points.iter().any(|item| item.point == q);
                let in_segments = set
                    .segments
                    .iter()
                    .any(|s| point_on_segment(&q, &s.endpoints.0, &s.endpoints.1));
                assert!(in_points || in_segments, "missing fixed point {q:?}");
            }
        }
    }

    #[test]
    fn no_point_reported_twice_before_merging() {
        let p = params();
        let mut accepted = Vec::new();
        for idx in 1..=16 {
            let br = compose_branch(&p, &itinerary_for_domain(idx, 4));
            if let BranchSolution::IsolatedPoint { point } = solve_branch_fixed(&br).unwrap() {
                assert!(
                    !accepted.contains(&point),
                    "{point:?} reported by two branches"
                );
                accepted.push(point);
            }
        }
    }

    #[test]
    fn branch_budget() {
        let err = enumerate_fixed_points(&params(), 13).unwrap_err();
        assert!(err.to_string().contains("branch budget exceeded"));
    }

    #[test]
    fn f2_point_examples() {
        assert_eq!(f2_point(&params()).unwrap(), pt(rat(0, 1), rat(15, 29)));
        // Direct formula evaluation at a = 141/100, b = 41/100.
        assert_eq!(
            f2_point(&LoziParams::new(rat(141, 100), rat(41, 100))).unwrap(),
            pt(rat(0, 1), rat(5900, 11681))
        );
        assert_eq!(
            f2_point(&LoziParams::new(rat(7, 5), rat(1, 1))).unwrap(),
            pt(rat(0, 1), rat(0, 1))
        );
        assert!(f2_point(&LoziParams::new(rat(0, 1), rat(2, 5))).is_err());
    }

    #[test]
    fn f2_is_four_step_fixed_along_the_segment() {
        for t in [rat(0, 1), rat(1, 1000), rat(-1, 1000)] {
            let p = LoziParams::segment(&t);
            let f2 = f2_point(&p).unwrap();
            assert_eq!(lozi_iterate(&p, &f2, 4), f2);
        }
        assert_eq!(
            f2_point(&LoziParams::segment(&rat(1, 1000))).unwrap(),
            pt(rat(0, 1), rat(599_000, 1_160_801))
        );
    }
}
