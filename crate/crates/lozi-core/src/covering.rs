//! Covering certificates: does the n-fold image of one marked box
//! stretch horizontally across another?
//!
//! The test implemented here is a sufficient condition, exact and
//! finitely checkable, for the fiber-wise covering property:
//!
//! * S0 the source box stays clear of the singularity locus step by
//!   step, so one affine branch represents the whole iterate on it;
//! * S1 the target's vertical-edge support lines bound a closed strip
//!   containing the target;
//! * S2 the images of the source's vertical edges land strictly outside
//!   the strip, on opposite sides;
//! * S3 the image clipped to the strip lies inside the closed target.
//!
//! Covered verdicts are certificates; Indeterminate marks method
//! limitations (never treated as a covering), so reported entropy
//! bounds only ever understate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    clip_polygon, contains_polygon, orient, pt, ClipResult, ConvexPolygon, HalfPlane, Point2,
};
use crate::map::{compose_branch, lozi_apply, LoziParams, Sign, SignItinerary};
use crate::rational::Rational;

/// A convex quadrilateral with two marked opposite "vertical" edges
/// (v0v1 and v2v3 after normalization; v1v2 and v3v0 are "horizontal").
/// Stored positively oriented.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MarkedQuadrilateral {
    vertices: [Point2; 4],
}

impl MarkedQuadrilateral {
    /// Validate and normalize. Accepts either orientation; reversing to
    /// counter-clockwise preserves which edges are vertical.
    pub fn new(vertices: [Point2; 4]) -> Result<Self> {
        let poly = ConvexPolygon::new(vertices.to_vec())
            .map_err(|e| Error::InvalidQuadrilateral(e.to_string()))?;
        if poly.len() != 4 {
            return Err(Error::InvalidQuadrilateral(
                "vertices must be in strictly convex position".into(),
            ));
        }
        let mut vs = vertices;
        let double_area = orient(&vs[0], &vs[1], &vs[2]) + orient(&vs[0], &vs[2], &vs[3]);
        if double_area.is_negative() {
            // (v3, v2, v1, v0) keeps {v0v1, v2v3} as the marked pair.
            vs.reverse();
        }
        let q = Self { vertices: vs };
        // Strict convexity already precludes this (the support line of an
        // edge meets the polygon only in that edge), but the strip
        // construction depends on it, so it is guarded explicitly.
        if let Some(x) = q.support_line_crossing() {
            if q.polygon().contains_point(&x) {
                return Err(Error::InvalidQuadrilateral(
                    "vertical-edge support lines cross inside the quadrilateral".into(),
                ));
            }
        }
        Ok(q)
    }

    pub fn vertices(&self) -> &[Point2; 4] {
        &self.vertices
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon::new(self.vertices.to_vec()).expect("validated at construction")
    }

    pub fn vertical_edges(&self) -> [(&Point2, &Point2); 2] {
        [
            (&self.vertices[0], &self.vertices[1]),
            (&self.vertices[2], &self.vertices[3]),
        ]
    }

    /// The horizontal fiber at parameter rho in [0, 1]: one endpoint on
    /// each vertical edge, matched so rho = 0 gives the v3v0 edge's
    /// horizontal side and rho = 1 the v1v2 side.
    pub fn fiber(&self, rho: &Rational) -> (Point2, Point2) {
        let lerp = |u: &Point2, v: &Point2| u.add(&v.sub(u).scale(rho));
        (
            lerp(&self.vertices[0], &self.vertices[1]),
            lerp(&self.vertices[3], &self.vertices[2]),
        )
    }

    /// Rotate the marked roles: the vertical pair {v0v1, v2v3} swaps
    /// places while orientation is kept. The covering verdict must be
    /// invariant under this relabeling.
    pub fn swap_vertical_edges(&self) -> Self {
        let v = &self.vertices;
        Self {
            vertices: [v[2].clone(), v[3].clone(), v[0].clone(), v[1].clone()],
        }
    }

    /// Intersection point of the two vertical-edge support lines, unless
    /// they are parallel.
    fn support_line_crossing(&self) -> Option<Point2> {
        let [(a0, a1), (b0, b1)] = self.vertical_edges();
        let d0 = a1.sub(a0);
        let d1 = b1.sub(b0);
        let denom = d0.cross(&d1);
        if denom.is_zero() {
            return None;
        }
        let t = b0.sub(a0).cross(&d1) / denom;
        Some(a0.add(&d0.scale(&t)))
    }
}

impl Serialize for MarkedQuadrilateral {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            vertices: &'a [Point2; 4],
            vertical_edges: [[usize; 2]; 2],
        }
        Repr {
            vertices: &self.vertices,
            vertical_edges: [[0, 1], [2, 3]],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MarkedQuadrilateral {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            vertices: Vec<Point2>,
            #[serde(default)]
            vertical_edges: Option<[[usize; 2]; 2]>,
        }
        let repr = Repr::deserialize(d)?;
        if repr.vertices.len() != 4 {
            return Err(serde::de::Error::custom("expected exactly 4 vertices"));
        }
        let mut vs: [Point2; 4] = [
            repr.vertices[0].clone(),
            repr.vertices[1].clone(),
            repr.vertices[2].clone(),
            repr.vertices[3].clone(),
        ];
        if let Some(pairs) = repr.vertical_edges {
            // Accept any rotation of the cyclic order that makes the
            // stated pairs the marked edges.
            let normalized = |p: [usize; 2]| if p[0] <= p[1] { p } else { [p[1], p[0]] };
            let (p0, p1) = (normalized(pairs[0]), normalized(pairs[1]));
            let rotation = match (p0, p1) {
                ([0, 1], [2, 3]) | ([2, 3], [0, 1]) => 0,
                ([1, 2], [0, 3]) | ([0, 3], [1, 2]) => 1,
                _ => {
                    return Err(serde::de::Error::custom(
                        "vertical edges must be an opposite pair of consecutive-vertex edges",
                    ))
                }
            };
            vs.rotate_left(rotation);
        }
        MarkedQuadrilateral::new(vs).map_err(serde::de::Error::custom)
    }
}

/// Which of the target's two vertical edges an image edge escaped past.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitSide {
    FirstEdge,
    SecondEdge,
}

/// The first condition that failed, for refuted or indeterminate pairs.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum FailedCondition {
    /// S0: a stepwise image straddles x = 0 (step index recorded).
    OneSidedOrbit { step: usize },
    /// S1: the vertical-edge support lines do not bound the target.
    StripFormation,
    /// S2: an image vertical edge fails to exit the strip strictly.
    EdgeEscape,
    /// S3: the strip crossing is not contained in the target.
    Containment,
}

/// Verdict of the covering test with its witness data.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CoverVerdict {
    Covered {
        itinerary: SignItinerary,
        image: ConvexPolygon,
        crossing: ConvexPolygon,
        exit_sides: (ExitSide, ExitSide),
    },
    NotCovered {
        failed: FailedCondition,
    },
    Indeterminate {
        failed: FailedCondition,
    },
}

impl CoverVerdict {
    pub fn is_covered(&self) -> bool {
        matches!(self, CoverVerdict::Covered { .. })
    }
}

/// Per-step vertex sign census from the clearance scan.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct StepSigns {
    pub step: usize,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub one_sided: bool,
}

/// Result of scanning a polygon's first n steps for singularity contact.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ClearanceRecord {
    pub clear: bool,
    /// The induced branch itinerary when clear.
    pub itinerary: Option<SignItinerary>,
    pub steps: Vec<StepSigns>,
}

/// Check that every stepwise image of `q` under the first n steps stays
/// on one side of x = 0, with at most one vertex touching the line.
///
/// One touching vertex is allowed because the polygon interior is then
/// still strictly one-sided, and the one-sided branch agrees with the
/// true map on the closed half-plane; two touching vertices would put a
/// whole boundary segment on the singularity line.
pub fn singularity_clearance(p: &LoziParams, n: usize, q: &ConvexPolygon) -> ClearanceRecord {
    let mut vertices: Vec<Point2> = q.vertices().to_vec();
    let mut steps = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for step in 0..n {
        let positive = vertices.iter().filter(|v| v.x.is_positive()).count();
        let negative = vertices.iter().filter(|v| v.x.is_negative()).count();
        let zero = vertices.len() - positive - negative;
        let one_sided = zero <= 1 && (positive == 0 || negative == 0);
        steps.push(StepSigns {
            step,
            positive,
            negative,
            zero,
            one_sided,
        });
        if !one_sided {
            return ClearanceRecord {
                clear: false,
                itinerary: None,
                steps,
            };
        }
        signs.push(if negative > 0 {
            Sign::Neg
        } else {
            Sign::NonNeg
        });
        // All vertices lie in one closed half-plane, so the exact
        // pointwise map and the branch map coincide on every vertex.
        for v in &mut vertices {
            *v = lozi_apply(p, v);
        }
    }
    ClearanceRecord {
        clear: true,
        itinerary: Some(SignItinerary(signs)),
        steps,
    }
}

/// The closed strip between the support lines of the target's vertical
/// edges, as two inward half-planes, plus a containment check of the
/// target itself. `None` when the strip is ill-formed.
fn target_strip(nj: &MarkedQuadrilateral) -> Option<(HalfPlane, HalfPlane)> {
    let v = nj.vertices();
    let inward = |u: &Point2, w: &Point2, opposite_mid: &Point2| -> Option<HalfPlane> {
        let d = w.sub(u);
        let normal = pt(-d.y.clone(), d.x.clone());
        let offset = normal.dot(u);
        let h = HalfPlane {
            normal: (normal.x, normal.y),
            offset,
            closed: true,
        };
        let side = h.boundary_value(opposite_mid);
        if side.is_positive() {
            Some(h)
        } else if side.is_negative() {
            Some(HalfPlane {
                normal: (-h.normal.0, -h.normal.1),
                offset: -h.offset,
                closed: true,
            })
        } else {
            None
        }
    };
    let half = Rational::new(1, 2).expect("nonzero denominator");
    let mid01 = v[0].add(&v[1]).scale(&half);
    let mid23 = v[2].add(&v[3]).scale(&half);
    let h0 = inward(&v[0], &v[1], &mid23)?;
    let h1 = inward(&v[2], &v[3], &mid01)?;
    if v.iter().all(|q| h0.satisfied_by(q) && h1.satisfied_by(q)) {
        Some((h0, h1))
    } else {
        None
    }
}

fn strictly_outside(h: &HalfPlane, q: &Point2) -> bool {
    h.boundary_value(q).is_negative()
}

/// Exact covering test for the n-fold map; see the module docs for the
/// S0-S3 conditions. Requires an invertible iterate (`b != 0` for
/// n >= 1).
pub fn check_cover(
    p: &LoziParams,
    n: usize,
    ni: &MarkedQuadrilateral,
    nj: &MarkedQuadrilateral,
) -> Result<CoverVerdict> {
    if n >= 1 && p.b.is_zero() {
        return Err(Error::NonInvertibleBranch);
    }

    // S0: one affine branch represents the whole iterate on Ni.
    let clearance = singularity_clearance(p, n, &ni.polygon());
    let itinerary = match clearance.itinerary {
        Some(it) => it,
        None => {
            let step = clearance.steps.last().map(|s| s.step).unwrap_or(0);
            return Ok(CoverVerdict::Indeterminate {
                failed: FailedCondition::OneSidedOrbit { step },
            });
        }
    };
    let branch = compose_branch(p, &itinerary);
    if branch.map.linear.det().is_zero() {
        return Err(Error::NonInvertibleBranch);
    }

    // S1: the target sits inside the closed strip of its vertical edges.
    let (h0, h1) = match target_strip(nj) {
        Some(strip) => strip,
        None => {
            return Ok(CoverVerdict::Indeterminate {
                failed: FailedCondition::StripFormation,
            })
        }
    };

    // S2: the source's vertical-edge images exit the strip strictly, on
    // opposite sides. An edge image is a segment; both endpoints strictly
    // past one support line put the whole segment there.
    let w: Vec<Point2> = ni.vertices().iter().map(|v| branch.map.apply(v)).collect();
    let edge0 = (&w[0], &w[1]);
    let edge1 = (&w[2], &w[3]);
    let beyond =
        |h: &HalfPlane, e: (&Point2, &Point2)| strictly_outside(h, e.0) && strictly_outside(h, e.1);
    let exit_sides = if beyond(&h0, edge0) && beyond(&h1, edge1) {
        (ExitSide::FirstEdge, ExitSide::SecondEdge)
    } else if beyond(&h1, edge0) && beyond(&h0, edge1) {
        (ExitSide::SecondEdge, ExitSide::FirstEdge)
    } else {
        return Ok(CoverVerdict::NotCovered {
            failed: FailedCondition::EdgeEscape,
        });
    };

    // S3: the image's strip crossing lies inside the closed target.
    let image = ConvexPolygon::new(w).map_err(|_| Error::NonInvertibleBranch)?;
    let crossing = match clip_polygon(&image, &h0) {
        ClipResult::Polygon(poly) => match clip_polygon(&poly, &h1) {
            ClipResult::Polygon(poly) => poly,
            _ => {
                return Ok(CoverVerdict::NotCovered {
                    failed: FailedCondition::Containment,
                })
            }
        },
        _ => {
            return Ok(CoverVerdict::NotCovered {
                failed: FailedCondition::Containment,
            })
        }
    };
    if !contains_polygon(&nj.polygon(), &crossing) {
        return Ok(CoverVerdict::NotCovered {
            failed: FailedCondition::Containment,
        });
    }

    Ok(CoverVerdict::Covered {
        itinerary,
        image,
        crossing,
        exit_sides,
    })
}

/// Independent fiber-wise re-check of a Covered verdict: for each of
/// `samples` evenly spaced fibers, the image segment must cross both
/// vertical support lines of the target and its between-portion must lie
/// in the closed target. All arithmetic exact.
pub fn fiber_spot_check(
    p: &LoziParams,
    n: usize,
    ni: &MarkedQuadrilateral,
    nj: &MarkedQuadrilateral,
    samples: usize,
) -> Result<()> {
    let clearance = singularity_clearance(p, n, &ni.polygon());
    let itinerary = clearance
        .itinerary
        .ok_or_else(|| Error::Internal("fiber check on a non-clear source box".into()))?;
    let branch = compose_branch(p, &itinerary);
    let (h0, h1) = target_strip(nj)
        .ok_or_else(|| Error::Internal("fiber check with an ill-formed strip".into()))?;
    let nj_poly = nj.polygon();

    for k in 0..samples {
        let rho = Rational::new(k as i64, (samples - 1).max(1) as i64)?;
        let (q0, q1) = ni.fiber(&rho);
        let (w0, w1) = (branch.map.apply(&q0), branch.map.apply(&q1));
        let crossing_point = |h: &HalfPlane| -> Result<Point2> {
            let a = h.boundary_value(&w0);
            let b = h.boundary_value(&w1);
            if (a.is_negative() && b.is_negative()) || (!a.is_negative() && !b.is_negative()) {
                return Err(Error::Internal(format!(
                    "fiber {rho:?} does not cross a vertical support line"
                )));
            }
            let t = &a / (&a - &b);
            Ok(w0.add(&w1.sub(&w0).scale(&t)))
        };
        let c0 = crossing_point(&h0)?;
        let c1 = crossing_point(&h1)?;
        // Both crossings inside the convex target bound the whole
        // between-portion inside it.
        for c in [&c0, &c1] {
            if !nj_poly.contains_point(c) {
                return Err(Error::Internal(format!(
                    "fiber {rho:?} crossing point {c:?} escapes the target"
                )));
            }
        }
    }
    Ok(())
}

/// 0/1 transition matrix assembled from covering verdicts.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub entries: Vec<Vec<u8>>,
}

impl TransitionMatrix {
    pub fn new(entries: Vec<Vec<u8>>) -> Result<Self> {
        let p = entries.len();
        for row in &entries {
            if row.len() != p {
                return Err(Error::InvalidParameter(
                    "transition matrix must be square".into(),
                ));
            }
            if row.iter().any(|&e| e > 1) {
                return Err(Error::InvalidParameter(
                    "transition entries must be 0 or 1".into(),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }
}

/// Entry (i, j) is 1 exactly when the verdict for the pair is Covered;
/// Indeterminate counts as 0, keeping the bound sound.
pub fn build_matrix(verdicts: &[Vec<CoverVerdict>]) -> Result<TransitionMatrix> {
    let p = verdicts.len();
    let mut entries = Vec::with_capacity(p);
    for row in verdicts {
        if row.len() != p {
            return Err(Error::InvalidParameter(
                "verdict grid must be square".into(),
            ));
        }
        entries.push(row.iter().map(|v| u8::from(v.is_covered())).collect());
    }
    TransitionMatrix::new(entries)
}

/// Certified entropy lower bound from a transition matrix.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyBound {
    pub n: usize,
    /// Exact rational lower bound on the spectral radius.
    pub lambda_lower_exact: Rational,
    /// Float enclosure of the spectral radius: `lambda_lower` is rounded
    /// down, `lambda_upper` rounded up.
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    /// log(lambda_lower)/n, rounded down and clamped at 0.
    pub bound: f64,
    /// For sizes up to 4: whether the characteristic polynomial confirms
    /// the exact lower bound does not exceed the dominant root.
    pub char_poly_consistent: Option<bool>,
}

fn f64_below(r: &Rational) -> f64 {
    let f = r.to_f64();
    match Rational::from_f64_exact(f) {
        Some(fr) if fr > *r => f.next_down(),
        _ => f,
    }
}

fn f64_above(r: &Rational) -> f64 {
    let f = r.to_f64();
    match Rational::from_f64_exact(f) {
        Some(fr) if fr < *r => f.next_up(),
        _ => f,
    }
}

fn mat_vec(m: &TransitionMatrix, v: &[Rational]) -> Vec<Rational> {
    m.entries
        .iter()
        .map(|row| {
            let mut acc = Rational::zero();
            for (e, x) in row.iter().zip(v) {
                if *e == 1 {
                    acc = acc + x;
                }
            }
            acc
        })
        .collect()
}

/// Characteristic polynomial coefficients [1, c1, ..., cp] of the matrix
/// (monic, descending powers), exact.
fn char_poly(m: &TransitionMatrix) -> Vec<Rational> {
    let p = m.size();
    let a: Vec<Vec<Rational>> = m
        .entries
        .iter()
        .map(|row| row.iter().map(|&e| Rational::from_int(e as i64)).collect())
        .collect();
    let mul = |x: &Vec<Vec<Rational>>, y: &Vec<Vec<Rational>>| -> Vec<Vec<Rational>> {
        (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        let mut acc = Rational::zero();
                        for k in 0..p {
                            acc = acc + &x[i][k] * &y[k][j];
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    };
    let trace = |x: &Vec<Vec<Rational>>| {
        let mut acc = Rational::zero();
        for (i, row) in x.iter().enumerate() {
            acc = acc + &row[i];
        }
        acc
    };
    // Faddeev-LeVerrier recursion.
    let mut coeffs = vec![Rational::one()];
    let mut mk = a.clone();
    for k in 1..=p {
        let ck = -(trace(&mk) / Rational::from_int(k as i64));
        coeffs.push(ck.clone());
        if k < p {
            let mut shifted = mk;
            for (i, row) in shifted.iter_mut().enumerate() {
                row[i] = &row[i] + &ck;
            }
            mk = mul(&a, &shifted);
        }
    }
    coeffs
}

fn eval_poly(coeffs: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for c in coeffs {
        acc = acc * x + c;
    }
    acc
}

/// Lower-bound the spectral radius by 200 exact power iterations and the
/// minimum componentwise ratio (valid for any nonnegative matrix), then
/// convert with downward rounding: `bound = log(lambda_lower)/n`.
pub fn entropy_lower_bound(m: &TransitionMatrix, n: usize) -> Result<EntropyBound> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "iterate order must be at least 1".into(),
        ));
    }
    let p = m.size();
    if p == 0 {
        return Err(Error::InvalidParameter("transition matrix is empty".into()));
    }

    let mut v = vec![Rational::one(); p];
    for _ in 0..200 {
        let next = mat_vec(m, &v);
        if next.iter().all(Rational::is_zero) {
            v = next;
            break;
        }
        v = next;
    }
    let av = mat_vec(m, &v);
    let mut lambda_lower_exact = Rational::zero();
    let mut first = true;
    for (num, den) in av.iter().zip(&v) {
        if den.is_zero() {
            continue;
        }
        let ratio = num / den;
        if first || ratio < lambda_lower_exact {
            lambda_lower_exact = ratio;
            first = false;
        }
    }
    // `first` still set means v vanished entirely: nilpotent matrix,
    // spectral radius 0, and the zero lower bound is exact.

    // Upper estimate: max ratio when v is strictly positive, else the
    // max row sum; both dominate the spectral radius.
    let mut lambda_upper_exact = Rational::zero();
    if !first && v.iter().all(Rational::is_positive) {
        for (num, den) in av.iter().zip(&v) {
            let ratio = num / den;
            if ratio > lambda_upper_exact {
                lambda_upper_exact = ratio;
            }
        }
    } else {
        for row in &m.entries {
            let sum = Rational::from_int(row.iter().map(|&e| e as i64).sum());
            if sum > lambda_upper_exact {
                lambda_upper_exact = sum;
            }
        }
    }

    let char_poly_consistent = (p <= 4).then(|| {
        let q = char_poly(m);
        !eval_poly(&q, &lambda_lower_exact).is_positive()
    });

    let lambda_lower = f64_below(&lambda_lower_exact);
    let lambda_upper = f64_above(&lambda_upper_exact);
    let bound = if lambda_lower_exact <= Rational::one() {
        0.0
    } else {
        // Two ulps absorb the libm ln error, one more the division.
        let ln = lambda_lower.ln().next_down().next_down();
        (ln / n as f64).next_down().max(0.0)
    };

    Ok(EntropyBound {
        n,
        lambda_lower_exact,
        lambda_lower,
        lambda_upper,
        bound,
        char_poly_consistent,
    })
}

/// The two covering boxes anchored at height `f2_height` on x = 0, with
/// all coordinates proportional to eps1; vertical edges are (v0, v1) and
/// (v2, v3) of each returned quadrilateral.
pub fn covering_boxes(
    eps1: &Rational,
    f2_height: &Rational,
) -> Result<(MarkedQuadrilateral, MarkedQuadrilateral)> {
    if !eps1.is_positive() {
        return Err(Error::InvalidParameter("eps1 must be positive".into()));
    }
    let f = f2_height;
    let e = eps1;
    let at = |cx: (i64, i64), cy: (i64, i64)| -> Point2 {
        pt(
            Rational::new(cx.0, cx.1).expect("nonzero denominator") * e,
            f + Rational::new(cy.0, cy.1).expect("nonzero denominator") * e,
        )
    };
    let n1 = MarkedQuadrilateral::new([
        at((0, 1), (-1, 1)),
        at((1, 1), (7, 2)),
        at((5, 2), (5, 2)),
        at((3, 2), (-2, 1)),
    ])?;
    let n2 = MarkedQuadrilateral::new([
        at((-3, 1), (7, 2)),
        at((-2, 1), (5, 6)),
        at((0, 1), (-1, 2)),
        at((-1, 1), (13, 6)),
    ])?;
    Ok((n1, n2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_points::f2_point;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn params_eps1(eps1: Rational) -> LoziParams {
        LoziParams::new(rat(7, 5) + eps1, rat(2, 5))
    }

    fn boxes(eps1: i64, den: i64) -> (MarkedQuadrilateral, MarkedQuadrilateral) {
        covering_boxes(&rat(eps1, den), &rat(15, 29)).unwrap()
    }

    #[test]
    fn box_vertices_and_slopes() {
        let (n1, n2) = boxes(1, 1000);
        let e = rat(1, 1000);
        let f = rat(15, 29);
        // Input order was clockwise; the constructor reversed it.
        let expect_n1 = [
            pt(rat(3, 2) * &e, &f - rat(2, 1) * &e),
            pt(rat(5, 2) * &e, &f + rat(5, 2) * &e),
            pt(e.clone(), &f + rat(7, 2) * &e),
            pt(rat(0, 1), &f - &e),
        ];
        assert_eq!(n1.vertices(), &expect_n1);
        let slope = |u: &Point2, v: &Point2| (&v.y - &u.y) / (&v.x - &u.x);
        let [e0, e1] = n1.vertical_edges();
        assert_eq!(slope(e0.0, e0.1), rat(9, 2));
        assert_eq!(slope(e1.0, e1.1), rat(9, 2));
        let [e0, e1] = n2.vertical_edges();
        assert_eq!(slope(e0.0, e0.1), rat(-8, 3));
        assert_eq!(slope(e1.0, e1.1), rat(-8, 3));
        assert!(covering_boxes(&rat(0, 1), &f).is_err());
        assert!(covering_boxes(&rat(-1, 1000), &f).is_err());
    }

    #[test]
    fn first_box_is_clear_with_the_expected_itinerary() {
        let p = params_eps1(rat(1, 1000));
        let (n1, _) = boxes(1, 1000);
        let record = singularity_clearance(&p, 4, &n1.polygon());
        assert!(record.clear);
        assert_eq!(record.itinerary.unwrap().to_string(), "++-+");
        // One vertex sits exactly on x = 0 at the first step.
        assert_eq!(record.steps[0].zero, 1);
    }

    #[test]
    fn origin_square_is_not_clear() {
        let square = ConvexPolygon::new(vec![
            pt(rat(-1, 1), rat(-1, 1)),
            pt(rat(1, 1), rat(-1, 1)),
            pt(rat(1, 1), rat(1, 1)),
            pt(rat(-1, 1), rat(1, 1)),
        ])
        .unwrap();
        let record = singularity_clearance(&params_eps1(rat(0, 1)), 1, &square);
        assert!(!record.clear);
        assert_eq!(record.itinerary, None);
        assert_eq!(record.steps.len(), 1);
    }

    #[test]
    fn directed_pair_verdicts_at_eps1_one_thousandth() {
        let p = params_eps1(rat(1, 1000));
        let (n1, n2) = boxes(1, 1000);
        assert!(check_cover(&p, 4, &n1, &n1).unwrap().is_covered());
        assert!(check_cover(&p, 4, &n1, &n2).unwrap().is_covered());
        assert!(check_cover(&p, 4, &n2, &n1).unwrap().is_covered());
        let v22 = check_cover(&p, 4, &n2, &n2).unwrap();
        assert_eq!(
            v22,
            CoverVerdict::NotCovered {
                failed: FailedCondition::EdgeEscape
            }
        );
    }

    #[test]
    fn zero_iterate_never_covers_itself() {
        // The 0-fold map is the identity: vertical-edge images lie on the
        // strip boundary instead of strictly outside.
        let (n1, _) = boxes(1, 1000);
        let verdict = check_cover(&params_eps1(rat(0, 1)), 0, &n1, &n1).unwrap();
        assert_eq!(
            verdict,
            CoverVerdict::NotCovered {
                failed: FailedCondition::EdgeEscape
            }
        );
    }

    #[test]
    fn verdicts_are_invariant_under_edge_relabeling() {
        let p = params_eps1(rat(1, 1000));
        let (n1, n2) = boxes(1, 1000);
        for (a, b) in [(&n1, &n1), (&n1, &n2), (&n2, &n1), (&n2, &n2)] {
            let base = check_cover(&p, 4, a, b).unwrap();
            let swapped =
                check_cover(&p, 4, &a.swap_vertical_edges(), &b.swap_vertical_edges()).unwrap();
            assert_eq!(base.is_covered(), swapped.is_covered());
        }
    }

    #[test]
    fn fiber_checks_pass_on_covered_pairs() {
        let p = params_eps1(rat(1, 1000));
        let (n1, n2) = boxes(1, 1000);
        fiber_spot_check(&p, 4, &n1, &n1, 51).unwrap();
        fiber_spot_check(&p, 4, &n1, &n2, 51).unwrap();
        fiber_spot_check(&p, 4, &n2, &n1, 51).unwrap();
    }

    #[test]
    fn tilde_boxes_cover_as_well() {
        for eps2 in [rat(1, 1000), rat(-1, 1000)] {
            let segment = LoziParams::segment(&eps2);
            let f2 = f2_point(&segment).unwrap();
            let p = LoziParams::new(&segment.a + rat(1, 1000), segment.b.clone());
            let (n1, n2) = covering_boxes(&rat(1, 1000), &f2.y).unwrap();
            assert!(check_cover(&p, 4, &n1, &n1).unwrap().is_covered());
            assert!(check_cover(&p, 4, &n1, &n2).unwrap().is_covered());
            assert!(check_cover(&p, 4, &n2, &n1).unwrap().is_covered());
            assert!(!check_cover(&p, 4, &n2, &n2).unwrap().is_covered());
        }
    }

    #[test]
    fn matrix_from_verdicts() {
        let p = params_eps1(rat(1, 1000));
        let (n1, n2) = boxes(1, 1000);
        let all = [&n1, &n2];
        let verdicts: Vec<Vec<CoverVerdict>> = all
            .iter()
            .map(|a| {
                all.iter()
                    .map(|b| check_cover(&p, 4, a, b).unwrap())
                    .collect()
            })
            .collect();
        let m = build_matrix(&verdicts).unwrap();
        assert_eq!(m.entries, vec![vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn entropy_bound_of_the_golden_matrix() {
        let m = TransitionMatrix::new(vec![vec![1, 1], vec![1, 0]]).unwrap();
        let eb = entropy_lower_bound(&m, 4).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(eb.lambda_lower <= phi);
        assert!((eb.lambda_lower - phi).abs() <= 1e-9);
        assert!(eb.lambda_upper >= phi);
        assert!(eb.bound > 0.1203 && eb.bound < 0.12031);
        assert_eq!(eb.char_poly_consistent, Some(true));
    }

    #[test]
    fn entropy_bound_edge_cases() {
        let one = TransitionMatrix::new(vec![vec![1]]).unwrap();
        assert_eq!(entropy_lower_bound(&one, 1).unwrap().bound, 0.0);

        let full = TransitionMatrix::new(vec![vec![1, 1], vec![1, 1]]).unwrap();
        let eb = entropy_lower_bound(&full, 1).unwrap();
        assert!((eb.bound - 2f64.ln()).abs() < 1e-12);
        assert!(eb.bound <= 2f64.ln());

        let zero = TransitionMatrix::new(vec![vec![0, 0], vec![0, 0]]).unwrap();
        let eb = entropy_lower_bound(&zero, 1).unwrap();
        assert_eq!(eb.bound, 0.0);
        assert_eq!(eb.lambda_lower_exact, rat(0, 1));

        // Nilpotent: the iteration collapses to zero early.
        let nil = TransitionMatrix::new(vec![vec![0, 1], vec![0, 0]]).unwrap();
        assert_eq!(entropy_lower_bound(&nil, 1).unwrap().bound, 0.0);

        assert!(entropy_lower_bound(&one, 0).is_err());
        assert!(TransitionMatrix::new(vec![vec![0, 2], vec![0, 0]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn demoting_coverings_never_raises_the_bound() {
        let base = TransitionMatrix::new(vec![vec![1, 1], vec![1, 0]]).unwrap();
        let full_bound = entropy_lower_bound(&base, 4).unwrap().bound;
        for (i, j) in [(0, 0), (0, 1), (1, 0)] {
            let mut demoted = base.clone();
            demoted.entries[i][j] = 0;
            let b = entropy_lower_bound(&demoted, 4).unwrap().bound;
            assert!(b <= full_bound, "demoting ({i},{j}) raised the bound");
        }
    }

    #[test]
    fn quadrilateral_validation() {
        // Non-convex input is rejected.
        assert!(MarkedQuadrilateral::new([
            pt(rat(0, 1), rat(0, 1)),
            pt(rat(2, 1), rat(0, 1)),
            pt(rat(1, 2), rat(1, 2)),
            pt(rat(0, 1), rat(2, 1)),
        ])
        .is_err());
        // Repeated and collinear vertices are rejected.
        assert!(MarkedQuadrilateral::new([
            pt(rat(0, 1), rat(0, 1)),
            pt(rat(0, 1), rat(0, 1)),
            pt(rat(1, 1), rat(0, 1)),
            pt(rat(1, 1), rat(1, 1)),
        ])
        .is_err());
        assert!(MarkedQuadrilateral::new([
            pt(rat(0, 1), rat(0, 1)),
            pt(rat(1, 1), rat(0, 1)),
            pt(rat(2, 1), rat(0, 1)),
            pt(rat(0, 1), rat(1, 1)),
        ])
        .is_err());
    }

    #[test]
    fn quadrilateral_serde_roundtrip() {
        let (n1, _) = boxes(1, 1000);
        let json = serde_json::to_string(&n1).unwrap();
        let back: MarkedQuadrilateral = serde_json::from_str(&json).unwrap();
        assert_eq!(back, n1);
        // A rotated vertical-edge labeling reconstructs a shifted order.
        let rotated = serde_json::json!({
            "vertices": serde_json::to_value(n1.vertices().to_vec()).unwrap(),
            "vertical_edges": [[1, 2], [3, 0]],
        });
        let alt: MarkedQuadrilateral = serde_json::from_value(rotated).unwrap();
        assert_eq!(alt.vertices()[0], n1.vertices()[1]);
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-40i64..40, 1i64..8).prop_map(|(n, d)| rat(n, d))
    }

    proptest! {
        #[test]
        fn strip_contains_every_valid_quadrilateral(
            coords in proptest::array::uniform8(arb_rational())
        ) {
            let vs = [
                pt(coords[0].clone(), coords[1].clone()),
                pt(coords[2].clone(), coords[3].clone()),
                pt(coords[4].clone(), coords[5].clone()),
                pt(coords[6].clone(), coords[7].clone()),
            ];
            if let Ok(q) = MarkedQuadrilateral::new(vs) {
                let strip = target_strip(&q);
                prop_assert!(strip.is_some());
                let (h0, h1) = strip.unwrap();
                for v in q.vertices() {
                    prop_assert!(h0.satisfied_by(v) && h1.satisfied_by(v));
                }
            }
        }
    }
}
