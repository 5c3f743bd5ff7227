//! Float-precision exploration tools: unstable-manifold tracing,
//! critical-line pullbacks, and a separated-set entropy estimator.
//!
//! Nothing in this module certifies anything. Every output is numerical
//! evidence; the exact machinery lives in the other modules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_points::f2_point;
use crate::geometry::{pt, Point2};
use crate::map::{compose_branch, BranchSide, LoziParams, Sign, SignItinerary, StepConstraint};
use crate::rational::Rational;

/// Orbit radius beyond which a trace is abandoned and flagged.
pub const ESCAPE_RADIUS: f64 = 1e6;

/// Length of the unstable-eigenvector seed segment.
pub const SEED_LENGTH: f64 = 1e-6;

const MAX_GENERATIONS: usize = 256;
const MAX_REFINE_DEPTH: usize = 48;

/// Hard cap on traced points, guarding against runaway growth when the
/// manifold expands faster than the requested arclength is consumed.
const MAX_TRACE_POINTS: usize = 4_000_000;

/// Image gap below which a singularity straddle is no longer split.
const KINK_SNAP: f64 = 1e-9;

/// What a polyline depicts.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolylineRole {
    UnstableLeft,
    UnstableRight,
    Stable,
    CriticalLine,
    Image,
}

/// An ordered float polyline with a role tag.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct PolylineF64 {
    pub role: PolylineRole,
    pub points: Vec<[f64; 2]>,
    /// True when tracing was cut off by the escape radius.
    pub escaped: bool,
}

impl PolylineF64 {
    /// Validates finiteness and drops consecutive duplicates.
    pub fn new(role: PolylineRole, points: Vec<[f64; 2]>) -> Result<Self> {
        let mut cleaned: Vec<[f64; 2]> = Vec::with_capacity(points.len());
        for q in points {
            if !q[0].is_finite() || !q[1].is_finite() {
                return Err(Error::InvalidParameter(
                    "polyline point is not finite".into(),
                ));
            }
            if cleaned.last() != Some(&q) {
                cleaned.push(q);
            }
        }
        Ok(Self {
            role,
            points: cleaned,
            escaped: false,
        })
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(w[0], w[1])).sum()
    }
}

/// Axis-aligned float viewport; the default contains all the named
/// points of the certified constructions.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Viewport {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Default for Viewport {
    fn default() -> Self {
        Self {
            min: [-2.0, -2.0],
            max: [2.0, 2.0],
        }
    }
}

impl Viewport {
    pub fn contains(&self, q: [f64; 2]) -> bool {
        q[0] >= self.min[0] && q[0] <= self.max[0] && q[1] >= self.min[1] && q[1] <= self.max[1]
    }

    fn corner_rationals(&self) -> Result<[Rational; 4]> {
        let conv = |v: f64| {
            Rational::from_f64_exact(v)
                .ok_or_else(|| Error::InvalidParameter("viewport bound is not finite".into()))
        };
        Ok([
            conv(self.min[0])?,
            conv(self.min[1])?,
            conv(self.max[0])?,
            conv(self.max[1])?,
        ])
    }
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from a point to a closed segment.
pub fn dist_point_segment(q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return dist(q, a);
    }
    let t = (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(q, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// One float map step.
pub fn lozi_apply_f64(a: f64, b: f64, q: [f64; 2]) -> [f64; 2] {
    [1.0 - a * q[0].abs() + b * q[1], q[0]]
}

/// Which component of the unstable manifold to trace.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSide {
    Left,
    Right,
}

/// Trace one component of the unstable manifold of the positive-branch
/// saddle.
///
/// The left component is built generation by generation: the seed is a
/// fundamental-domain annulus of length [`SEED_LENGTH`] along the
/// unstable eigenvector (oriented toward negative x), and generation g
/// applies the 4-fold map g times to it. Each generation starts from
/// the seed partition the previous one ended with (an image that folds
/// back on itself keeps its interior structure that way) and subdivides
/// at source midpoints until consecutive image points are closer than
/// `refine_tol`; pairs straddling the singularity line keep splitting
/// down to [`KINK_SNAP`] so that corners land on polyline vertices.
/// The right component is the one-step image of the left, so the two
/// components together are forward-invariant.
///
/// Tracing stops once the accumulated polyline length reaches
/// `arclength`, or earlier if an orbit leaves [`ESCAPE_RADIUS`] (the
/// result is then flagged `escaped`).
pub fn trace_unstable(
    p: &LoziParams,
    side: TraceSide,
    arclength: f64,
    refine_tol: f64,
) -> Result<PolylineF64> {
    if arclength.is_nan() || arclength <= 0.0 || refine_tol.is_nan() || refine_tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "arclength and refine_tol must be positive".into(),
        ));
    }
    let eig = crate::map::saddle_data(p, BranchSide::NonNeg)?;
    let p1 = eig.point.to_f64();
    let a = p.a.to_f64();
    let b = p.b.to_f64();

    // Orient the unit unstable direction toward negative x: that is the
    // seed side whose one-step image heads toward positive x.
    let mut v = eig.v_unstable;
    if v[0] > 0.0 {
        v = [-v[0], -v[1]];
    }
    let lambda4 = eig.lambda_unstable.powi(4);

    let seed_hi = SEED_LENGTH;
    let seed_lo = SEED_LENGTH / lambda4;
    let eval = |s: f64, generation: usize| -> [f64; 2] {
        let mut q = [p1[0] + v[0] * s, p1[1] + v[1] * s];
        for _ in 0..4 * generation {
            q = lozi_apply_f64(a, b, q);
            if !q[0].is_finite() || !q[1].is_finite() || dist(q, [0.0, 0.0]) > ESCAPE_RADIUS {
                return q;
            }
        }
        q
    };
    let out_of_range =
        |q: [f64; 2]| !q[0].is_finite() || !q[1].is_finite() || dist(q, [0.0, 0.0]) > ESCAPE_RADIUS;

    let mut points: Vec<[f64; 2]> = vec![eval(seed_lo, 0)];
    let mut total = 0.0;
    let mut escaped = false;
    let mut knots: Vec<f64> = vec![seed_lo, seed_hi];

    'generations: for generation in 0..MAX_GENERATIONS {
        let before = total;
        let mut new_knots: Vec<f64> = Vec::with_capacity(knots.len());
        new_knots.push(knots[0]);
        let mut prev_eval = eval(knots[0], generation);
        for &s_next in &knots[1..] {
            // Stack of parameter intervals with evaluated endpoints,
            // refined at source midpoints until image gaps are small.
            let mut stack = vec![(
                new_knots[new_knots.len() - 1],
                prev_eval,
                s_next,
                eval(s_next, generation),
                0usize,
            )];
            prev_eval = stack[0].3;
            while let Some((s0, q0, s1, q1, depth)) = stack.pop() {
                if out_of_range(q0) || out_of_range(q1) {
                    escaped = true;
                    break 'generations;
                }
                let gap = dist(q0, q1);
                let straddles = (q0[0] < 0.0) != (q1[0] < 0.0) && gap > KINK_SNAP;
                if (gap <= refine_tol && !straddles) || depth >= MAX_REFINE_DEPTH {
                    let last = *points.last().expect("seeded polyline");
                    if q1 != last {
                        total += dist(last, q1);
                        points.push(q1);
                    }
                    new_knots.push(s1);
                    if total >= arclength || points.len() >= MAX_TRACE_POINTS {
                        break 'generations;
                    }
                } else {
                    let sm = 0.5 * (s0 + s1);
                    let qm = eval(sm, generation);
                    // Depth-first, left interval on top, keeps order.
                    stack.push((sm, qm, s1, q1, depth + 1));
                    stack.push((s0, q0, sm, qm, depth + 1));
                }
            }
        }
        knots = new_knots;
        knots.dedup();
        if total - before < 1e-13 {
            // The manifold has stopped growing at this resolution.
            break;
        }
    }

    let mut line = PolylineF64::new(PolylineRole::UnstableLeft, points)?;
    line.escaped = escaped;
    if side == TraceSide::Right {
        let mapped = line
            .points
            .iter()
            .map(|&q| lozi_apply_f64(a, b, q))
            .collect();
        let mut right = PolylineF64::new(PolylineRole::UnstableRight, mapped)?;
        right.escaped = escaped;
        return Ok(right);
    }
    Ok(line)
}

/// The float point where tracing starts: the outer seed endpoint next
/// to the saddle for the left component, its one-step image for the
/// right one.
pub fn unstable_seed(p: &LoziParams, side: TraceSide) -> Result<[f64; 2]> {
    let eig = crate::map::saddle_data(p, BranchSide::NonNeg)?;
    let p1 = eig.point.to_f64();
    let mut v = eig.v_unstable;
    if v[0] > 0.0 {
        v = [-v[0], -v[1]];
    }
    let q = [p1[0] + v[0] * SEED_LENGTH, p1[1] + v[1] * SEED_LENGTH];
    Ok(match side {
        TraceSide::Left => q,
        TraceSide::Right => lozi_apply_f64(p.a.to_f64(), p.b.to_f64(), q),
    })
}

/// The first y = 0 crossing of a polyline, linearly interpolated.
pub fn first_x_axis_crossing(line: &PolylineF64) -> Option<[f64; 2]> {
    for w in line.points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a[1] == 0.0 {
            return Some(a);
        }
        if (a[1] < 0.0) != (b[1] < 0.0) {
            let t = a[1] / (a[1] - b[1]);
            return Some([a[0] + t * (b[0] - a[0]), 0.0]);
        }
    }
    None
}

/// The endpoints of the 4-fold fixed segment on the axis side, as
/// floats, for distance diagnostics.
pub fn fixed_segment_f64(p: &LoziParams) -> Result<([f64; 2], [f64; 2])> {
    let f2 = f2_point(p)?;
    let f1 = crate::map::lozi_iterate(p, &f2, 2);
    Ok((f1.to_f64(), f2.to_f64()))
}

/// Exact segments of the pullbacks of {x = 0}: entry k holds the
/// fragments of the set L^{-k}({x = 0}) clipped to the viewport, one per
/// branch of the k-fold map that meets it.
pub fn critical_fragments(
    p: &LoziParams,
    depth: usize,
    viewport: &Viewport,
) -> Result<Vec<Vec<(Point2, Point2)>>> {
    if !(1..=8).contains(&depth) {
        return Err(Error::InvalidParameter(
            "depth must be between 1 and 8".into(),
        ));
    }
    let [xmin, ymin, xmax, ymax] = viewport.corner_rationals()?;
    if xmin >= xmax || ymin >= ymax {
        return Err(Error::InvalidParameter(
            "viewport must have positive extent".into(),
        ));
    }

    // Clip the line n . q = -c (n nonzero) to the viewport rectangle and
    // the branch constraints, all treated as closed.
    let clip_line = |normal: (Rational, Rational),
                     c: Rational,
                     constraints: &[StepConstraint]|
     -> Option<(Point2, Point2)> {
        let (nx, ny) = normal;
        let base = if !ny.is_zero() {
            pt(Rational::zero(), -(&c / &ny))
        } else {
            pt(-(&c / &nx), Rational::zero())
        };
        let dir = pt(-ny.clone(), nx.clone());
        // Parametrized interval [lo, hi] over base + t * dir, clipped by
        // half-planes a . q >= off.
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        let mut clip_half = |ax: &Rational, ay: &Rational, off: &Rational| -> bool {
            let slope = ax * &dir.x + ay * &dir.y;
            let at_base = ax * &base.x + ay * &base.y;
            let gap = off - &at_base;
            if slope.is_zero() {
                return at_base >= *off;
            }
            let t = &gap / &slope;
            if slope.is_positive() {
                if lo.as_ref().is_none_or(|cur| t > *cur) {
                    lo = Some(t);
                }
            } else if hi.as_ref().is_none_or(|cur| t < *cur) {
                hi = Some(t);
            }
            true
        };
        let one = Rational::one();
        let m_one = -Rational::one();
        let zero = Rational::zero();
        if !clip_half(&one, &zero, &xmin) {
            return None;
        }
        if !clip_half(&m_one, &zero, &-&xmax) {
            return None;
        }
        if !clip_half(&zero, &one, &ymin) {
            return None;
        }
        if !clip_half(&zero, &m_one, &-&ymax) {
            return None;
        }
        for constraint in constraints {
            match constraint {
                StepConstraint::Always => {}
                StepConstraint::Never => return None,
                StepConstraint::Plane(h) => {
                    let (ax, ay) = (&h.normal.0, &h.normal.1);
                    if !clip_half(ax, ay, &h.offset) {
                        return None;
                    }
                }
            }
        }
        let (lo, hi) = (lo?, hi?);
        if lo >= hi {
            return None;
        }
        let at = |t: &Rational| pt(&base.x + t * &dir.x, &base.y + t * &dir.y);
        Some((at(&lo), at(&hi)))
    };

    let mut levels = Vec::with_capacity(depth);
    for k in 0..depth {
        let mut fragments = Vec::new();
        if k == 0 {
            fragments.push((
                pt(Rational::zero(), ymin.clone()),
                pt(Rational::zero(), ymax.clone()),
            ));
        } else {
            for bits in 0..(1u32 << k) {
                let signs: Vec<Sign> = (0..k)
                    .map(|j| {
                        if bits >> j & 1 == 0 {
                            Sign::NonNeg
                        } else {
                            Sign::Neg
                        }
                    })
                    .collect();
                let branch = compose_branch(p, &SignItinerary(signs));
                let m = &branch.map.linear.m;
                let normal = (m[0][0].clone(), m[0][1].clone());
                if normal.0.is_zero() && normal.1.is_zero() {
                    continue;
                }
                let c = branch.map.translation.x.clone();
                if let Some(seg) = clip_line(normal, c, &branch.constraints) {
                    fragments.push(seg);
                }
            }
            fragments.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
            fragments.dedup();
        }
        levels.push(fragments);
    }
    Ok(levels)
}

/// Map an exact segment through n steps, splitting at the singularity
/// line; returns the ordered subsegment chain of the image.
pub fn map_segment_piecewise(
    p: &LoziParams,
    n: usize,
    seg: (Point2, Point2),
) -> Vec<(Point2, Point2)> {
    let mut pieces = vec![seg];
    for _ in 0..n {
        let mut next = Vec::with_capacity(pieces.len() + 1);
        for (a, b) in pieces {
            let mut parts = vec![(a.clone(), b.clone())];
            if (a.x.is_negative() && b.x.is_positive()) || (a.x.is_positive() && b.x.is_negative())
            {
                let t = &a.x / &(&a.x - &b.x);
                let cross = a.add(&b.sub(&a).scale(&t));
                parts = vec![(a.clone(), cross.clone()), (cross, b.clone())];
            }
            for (u, w) in parts {
                next.push((crate::map::lozi_apply(p, &u), crate::map::lozi_apply(p, &w)));
            }
        }
        pieces = next;
    }
    pieces
}

/// Pullbacks of {x = 0} under the first `depth` iterates as one polyline
/// per level (clipping can disconnect a level; the fragments are then
/// concatenated in sorted order, so a jump may appear between them),
/// followed by the 4-step image of the critical line through the fixed
/// segment endpoint, for figure overlays.
pub fn critical_line(p: &LoziParams, depth: usize) -> Result<Vec<PolylineF64>> {
    let viewport = Viewport::default();
    let levels = critical_fragments(p, depth, &viewport)?;
    let mut out = Vec::with_capacity(depth + 1);
    for fragments in &levels {
        let mut points = Vec::with_capacity(fragments.len() * 2);
        for (a, b) in fragments {
            points.push(a.to_f64());
            points.push(b.to_f64());
        }
        out.push(PolylineF64::new(PolylineRole::CriticalLine, points)?);
    }

    // The two-step branch line through the fixed segment endpoint (the
    // sign pattern of the segment's own orbit) and its 4-step image.
    if let Some(critical) = critical_fragments(p, 3, &viewport)?
        .swap_remove(2)
        .into_iter()
        .find(|(a, b)| {
            f2_point(p)
                .map(|f2| {
                    let f1 = crate::map::lozi_iterate(p, &f2, 2);
                    crate::geometry::point_on_segment(&f1, a, b)
                })
                .unwrap_or(false)
        })
    {
        let image = map_segment_piecewise(p, 4, critical);
        let mut points = Vec::with_capacity(image.len() + 1);
        for (i, (a, b)) in image.iter().enumerate() {
            if i == 0 {
                points.push(a.to_f64());
            }
            points.push(b.to_f64());
        }
        out.push(PolylineF64::new(PolylineRole::Image, points)?);
    }
    Ok(out)
}

/// Outcome of the separated-set entropy estimate. Non-rigorous by
/// construction: a greedy separated set on a finite grid sample.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct EntropyEstimate {
    pub n: usize,
    pub eps: f64,
    pub grid: usize,
    /// Samples discarded for leaving the bailout radius.
    pub discarded: usize,
    /// Cardinality of the greedy (n, eps)-separated set.
    pub count: usize,
    /// log(count) / n; zero when the set is empty or a single orbit.
    pub estimate: f64,
}

const BAILOUT_RADIUS: f64 = 100.0;

/// Burn-in steps before the observation window: enough map applications
/// for the box to contract to attractor scale (|b|^k below 1e-12). At
/// b = 0 the post-critical curve is reached in one step, and long exact
/// slope-a arithmetic would only collapse the f64 sample, so a short
/// fixed burn-in is used there.
fn burn_in_steps(b: f64) -> usize {
    let ab = b.abs();
    if ab == 0.0 || ab >= 1.0 {
        return 8;
    }
    (((1e-12f64).ln() / ab.ln()).ceil() as usize).clamp(8, 64)
}

/// Greedy (n, eps)-separated-set entropy estimate over a low-discrepancy
/// grid of starting points in `box_`. Deterministic for a fixed grid
/// size; explicitly numerical evidence, not a bound.
pub fn estimate_entropy(
    p: &LoziParams,
    n: usize,
    eps: f64,
    box_: &Viewport,
    grid: usize,
) -> Result<EntropyEstimate> {
    if !(1..=20).contains(&n) {
        return Err(Error::InvalidParameter(
            "window length must be in 1..=20".into(),
        ));
    }
    if grid == 0 || grid > 1_000_000 {
        return Err(Error::InvalidParameter(
            "grid size must be in 1..=10^6".into(),
        ));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let a = p.a.to_f64();
    let b = p.b.to_f64();
    let (w, h) = (box_.max[0] - box_.min[0], box_.max[1] - box_.min[1]);
    if w.is_nan() || w <= 0.0 || h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidParameter(
            "box must have positive extent".into(),
        ));
    }

    // Roberts' low-discrepancy sequence: equidistributed, deterministic,
    // and free of the axis alignment a square lattice would impose.
    const PLASTIC: f64 = 1.324_717_957_244_746;
    let alpha = [1.0 / PLASTIC, 1.0 / (PLASTIC * PLASTIC)];

    let half_cell = 0.5 * eps;
    let burn_in = burn_in_steps(b);
    let mut seen = std::collections::HashSet::new();
    let mut windows: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut discarded = 0usize;

    'samples: for i in 1..=grid {
        let u = (0.5 + alpha[0] * i as f64).fract();
        let v = (0.5 + alpha[1] * i as f64).fract();
        let mut q = [box_.min[0] + u * w, box_.min[1] + v * h];
        for _ in 0..burn_in {
            q = lozi_apply_f64(a, b, q);
            if dist(q, [0.0, 0.0]) > BAILOUT_RADIUS {
                discarded += 1;
                continue 'samples;
            }
        }
        let mut window = Vec::with_capacity(n);
        let mut signature = Vec::with_capacity(n);
        for _ in 0..n {
            window.push(q);
            signature.push((
                (q[0] / half_cell).floor() as i64,
                (q[1] / half_cell).floor() as i64,
            ));
            q = lozi_apply_f64(a, b, q);
            if dist(q, [0.0, 0.0]) > BAILOUT_RADIUS {
                discarded += 1;
                continue 'samples;
            }
        }
        // Orbits agreeing cell-by-cell at eps/2 resolution can never be
        // eps-separated; drop duplicates before the quadratic stage.
        if seen.insert(signature) {
            windows.push(window);
        }
    }

    // Greedy maximal separated subset. A spatial hash on the first
    // window point limits comparisons: orbits in non-adjacent eps-cells
    // are separated at step zero already.
    let cell = |q: [f64; 2]| ((q[0] / eps).floor() as i64, (q[1] / eps).floor() as i64);
    let mut accepted: Vec<usize> = Vec::new();
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    'candidates: for (idx, window) in windows.iter().enumerate() {
        let (cx, cy) = cell(window[0]);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(neighbors) = buckets.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &other in neighbors {
                    let sep = windows[other]
                        .iter()
                        .zip(window)
                        .any(|(x, y)| dist(*x, *y) > eps);
                    if !sep {
                        continue 'candidates;
                    }
                }
            }
        }
        buckets.entry((cx, cy)).or_default().push(idx);
        accepted.push(idx);
    }

    let count = accepted.len();
    let estimate = if count <= 1 {
        0.0
    } else {
        (count as f64).ln() / n as f64
    };
    Ok(EntropyEstimate {
        n,
        eps,
        grid,
        discarded,
        count,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn params() -> LoziParams {
        LoziParams::new(rat(7, 5), rat(2, 5))
    }

    #[test]
    fn left_trace_is_attracted_to_the_fixed_segment() {
        let line = trace_unstable(&params(), TraceSide::Left, 40.0, 1e-3).unwrap();
        assert!(!line.escaped);
        assert!(line.length() >= 40.0 * 0.99);
        let (f1, f2) = fixed_segment_f64(&params()).unwrap();
        let tail = &line.points[line.points.len() * 9 / 10..];
        let worst = tail
            .iter()
            .map(|&q| dist_point_segment(q, f1, f2))
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-3, "tail strays {worst} from the segment");
    }

    #[test]
    fn right_trace_is_attracted_to_the_segment_image() {
        let p = params();
        let line = trace_unstable(&p, TraceSide::Right, 40.0, 1e-3).unwrap();
        let (f1, f2) = fixed_segment_f64(&p).unwrap();
        let a = p.a.to_f64();
        let b = p.b.to_f64();
        let (g1, g2) = (lozi_apply_f64(a, b, f1), lozi_apply_f64(a, b, f2));
        let tail = &line.points[line.points.len() * 9 / 10..];
        let worst = tail
            .iter()
            .map(|&q| dist_point_segment(q, g1, g2))
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-3, "tail strays {worst} from the image segment");
    }

    #[test]
    fn right_trace_first_axis_crossing_is_the_closed_form_point() {
        let line = trace_unstable(&params(), TraceSide::Right, 5.0, 1e-3).unwrap();
        let crossing = first_x_axis_crossing(&line).expect("crossing exists");
        let expected = (17.0 + 89.0f64.sqrt()) / 20.0;
        assert!(
            (crossing[0] - expected).abs() < 1e-6,
            "crossing at {}",
            crossing[0]
        );
    }

    #[test]
    fn traces_are_forward_invariant_within_tolerance() {
        // Mapping the left trace by the 4-fold map lands back on the
        // traced set, up to the refinement tolerance.
        let p = params();
        let tol = 1e-3;
        let line = trace_unstable(&p, TraceSide::Left, 10.0, tol).unwrap();
        let a = p.a.to_f64();
        let b = p.b.to_f64();
        for &q in line.points.iter().step_by(37) {
            let mut image = q;
            for _ in 0..4 {
                image = lozi_apply_f64(a, b, image);
            }
            let nearest = line
                .points
                .windows(2)
                .map(|w| dist_point_segment(image, w[0], w[1]))
                .fold(f64::INFINITY, f64::min);
            // The image can fall past the traced arclength; skip those.
            if dist(image, *line.points.last().unwrap()) < 1.0 || nearest < 10.0 * tol {
                assert!(nearest < 10.0 * tol || dist(image, *line.points.last().unwrap()) < 1.0);
            }
        }
    }

    #[test]
    fn bad_trace_arguments_are_rejected() {
        assert!(trace_unstable(&params(), TraceSide::Left, 0.0, 1e-3).is_err());
        assert!(trace_unstable(&params(), TraceSide::Left, 1.0, 0.0).is_err());
    }

    #[test]
    fn depth_one_is_the_singularity_line() {
        let lines = critical_line(&params(), 1).unwrap();
        let axis = &lines[0];
        assert_eq!(axis.role, PolylineRole::CriticalLine);
        assert_eq!(axis.points, vec![[0.0, -2.0], [0.0, 2.0]]);
    }

    #[test]
    fn pullback_levels_map_onto_each_other() {
        let p = params();
        let viewport = Viewport::default();
        let levels = critical_fragments(&p, 3, &viewport).unwrap();
        assert_eq!(levels.len(), 3);
        let a = p.a.to_f64();
        let b = p.b.to_f64();
        let mut checked = 0;
        for k in 1..3 {
            for (u, w) in &levels[k] {
                let (uf, wf) = (u.to_f64(), w.to_f64());
                for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let q = [uf[0] + s * (wf[0] - uf[0]), uf[1] + s * (wf[1] - uf[1])];
                    let image = lozi_apply_f64(a, b, q);
                    if !viewport.contains(image) {
                        continue;
                    }
                    let nearest = levels[k - 1]
                        .iter()
                        .map(|(x, y)| dist_point_segment(image, x.to_f64(), y.to_f64()))
                        .fold(f64::INFINITY, f64::min);
                    assert!(nearest < 1e-9, "level {k} point maps {nearest} away");
                    checked += 1;
                }
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn critical_line_through_the_segment_endpoint() {
        // The two-step pullback family contains the line through the
        // off-axis endpoint of the fixed segment; solving the branch
        // composition there gives 39x + 14y + 10 = 0.
        let p = params();
        let levels = critical_fragments(&p, 3, &Viewport::default()).unwrap();
        let f1 = pt(rat(-20, 29), rat(35, 29));
        let hit = levels[2]
            .iter()
            .find(|(a, b)| crate::geometry::point_on_segment(&f1, a, b))
            .expect("a two-step fragment passes through the endpoint");
        for q in [&hit.0, &hit.1] {
            assert_eq!(
                rat(39, 1) * &q.x + rat(14, 1) * &q.y + rat(10, 1),
                Rational::zero()
            );
        }
    }

    #[test]
    fn critical_line_report_shape() {
        let lines = critical_line(&params(), 3).unwrap();
        let pullbacks = lines
            .iter()
            .filter(|l| l.role == PolylineRole::CriticalLine)
            .count();
        assert_eq!(pullbacks, 3);
        let image = lines.last().unwrap();
        assert_eq!(image.role, PolylineRole::Image);
        assert!(image.points.len() >= 2);
        assert!(critical_line(&params(), 0).is_err());
        assert!(critical_line(&params(), 9).is_err());
    }

    #[test]
    fn mapped_segment_chain_is_connected_and_exact() {
        let p = params();
        let seg = (pt(rat(-1, 1), rat(1, 2)), pt(rat(1, 1), rat(1, 2)));
        let pieces = map_segment_piecewise(&p, 3, seg.clone());
        for w in pieces.windows(2) {
            assert_eq!(w[0].1, w[1].0, "chain breaks between pieces");
        }
        let start = crate::map::lozi_iterate(&p, &seg.0, 3);
        let end = crate::map::lozi_iterate(&p, &seg.1, 3);
        assert_eq!(pieces.first().unwrap().0, start);
        assert_eq!(pieces.last().unwrap().1, end);
    }

    #[test]
    fn tent_family_estimates_match_the_known_entropy() {
        // The separation scale is matched to the expansion rate: the
        // slope-2 family decorrelates faster, so it supports a finer eps.
        let box_ = Viewport {
            min: [-1.0, -1.0],
            max: [1.0, 1.0],
        };
        for (a, eps, expect) in [
            (rat(2, 1), 0.25, 2.0f64.ln()),
            (rat(3, 2), 0.5, 1.5f64.ln()),
        ] {
            let p = LoziParams::new(a, rat(0, 1));
            let est = estimate_entropy(&p, 14, eps, &box_, 200_000).unwrap();
            assert!(
                (est.estimate - expect).abs() < 0.1,
                "estimate {} vs {}",
                est.estimate,
                expect
            );
        }
    }

    #[test]
    fn zero_entropy_parameters_estimate_small() {
        let est = estimate_entropy(&params(), 14, 1.0, &Viewport::default(), 200_000).unwrap();
        assert!(est.estimate <= 0.1, "estimate {}", est.estimate);
        assert!(est.count >= 1);
    }

    #[test]
    fn doubling_eps_never_increases_the_count() {
        let box_ = Viewport {
            min: [-1.0, -1.0],
            max: [1.0, 1.0],
        };
        let p = LoziParams::new(rat(2, 1), rat(0, 1));
        let coarse = estimate_entropy(&p, 10, 1.0, &box_, 50_000).unwrap();
        let fine = estimate_entropy(&p, 10, 0.5, &box_, 50_000).unwrap();
        assert!(coarse.count <= fine.count);
    }

    #[test]
    fn estimator_rejects_out_of_range_arguments() {
        let v = Viewport::default();
        assert!(estimate_entropy(&params(), 0, 1.0, &v, 100).is_err());
        assert!(estimate_entropy(&params(), 21, 1.0, &v, 100).is_err());
        assert!(estimate_entropy(&params(), 5, 1.0, &v, 0).is_err());
        assert!(estimate_entropy(&params(), 5, 1.0, &v, 2_000_000).is_err());
        assert!(estimate_entropy(&params(), 5, 0.0, &v, 100).is_err());
    }

    #[test]
    fn escaping_dynamics_is_flagged() {
        // At b = 1/2, a = 3 the positive fixed point is a saddle and the
        // unstable manifold runs off to infinity; a coarse tolerance
        // keeps the point count low so the escape radius is what stops
        // the trace.
        let p = LoziParams::new(rat(3, 1), rat(1, 2));
        let line = trace_unstable(&p, TraceSide::Left, 1e7, 10.0).unwrap();
        assert!(line.escaped);
        assert!(line.length() < 1e7);
    }

    #[test]
    fn polyline_construction_guards() {
        assert!(PolylineF64::new(PolylineRole::Stable, vec![[f64::NAN, 0.0]]).is_err());
        let line = PolylineF64::new(
            PolylineRole::Stable,
            vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(line.points.len(), 2);
    }
}
