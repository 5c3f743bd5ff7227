//! Exact rational planar geometry: points, half-planes, convex polygons,
//! clipping, areas, and containment.
//!
//! Everything here is computed over [`Rational`] with no tolerances. A
//! polygon is always stored canonicalized (counter-clockwise, collinear
//! interior vertices merged, lexicographically minimal starting vertex)
//! so that set-level comparisons reduce to syntactic equality.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point2 {
    pub x: Rational,
    pub y: Rational,
}

pub fn pt(x: Rational, y: Rational) -> Point2 {
    Point2 { x, y }
}

impl Point2 {
    pub fn add(&self, other: &Point2) -> Point2 {
        pt(&self.x + &other.x, &self.y + &other.y)
    }

    pub fn sub(&self, other: &Point2) -> Point2 {
        pt(&self.x - &other.x, &self.y - &other.y)
    }

    pub fn scale(&self, t: &Rational) -> Point2 {
        pt(t * &self.x, t * &self.y)
    }

    pub fn dot(&self, other: &Point2) -> Rational {
        &self.x * &other.x + &self.y * &other.y
    }

    /// z-component of the cross product of `self` and `other` as vectors.
    pub fn cross(&self, other: &Point2) -> Rational {
        &self.x * &other.y - &self.y * &other.x
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }
}

impl fmt::Debug for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Serialize for Point2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.x, &self.y).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let (x, y) = <(Rational, Rational)>::deserialize(deserializer)?;
        Ok(pt(x, y))
    }
}

/// Orientation of the triangle `(o, a, b)`: positive means `b` lies to
/// the left of the directed line `o -> a`.
pub fn orient(o: &Point2, a: &Point2, b: &Point2) -> Rational {
    a.sub(o).cross(&b.sub(o))
}

/// Closed or open half-plane `{ p : normal . p >= offset }`
/// (`> offset` when `closed` is false).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: (Rational, Rational),
    pub offset: Rational,
    pub closed: bool,
}

impl HalfPlane {
    pub fn new(nx: Rational, ny: Rational, offset: Rational, closed: bool) -> Result<Self> {
        if nx.is_zero() && ny.is_zero() {
            return Err(Error::InvalidParameter("half-plane normal is zero".into()));
        }
        Ok(Self {
            normal: (nx, ny),
            offset,
            closed,
        })
    }

    pub fn closed(nx: Rational, ny: Rational, offset: Rational) -> Result<Self> {
        Self::new(nx, ny, offset, true)
    }

    pub fn open(nx: Rational, ny: Rational, offset: Rational) -> Result<Self> {
        Self::new(nx, ny, offset, false)
    }

    /// `normal . p - offset`; the point is on the boundary when zero.
    pub fn boundary_value(&self, p: &Point2) -> Rational {
        &self.normal.0 * &p.x + &self.normal.1 * &p.y - &self.offset
    }

    pub fn satisfied_by(&self, p: &Point2) -> bool {
        let v = self.boundary_value(p);
        if self.closed {
            !v.is_negative()
        } else {
            v.is_positive()
        }
    }

    /// The same half-plane with non-strict boundary.
    pub fn closure(&self) -> HalfPlane {
        HalfPlane {
            closed: true,
            ..self.clone()
        }
    }
}

/// Result of clipping: exact intersections may degenerate to a segment
/// or a single point when the boundary merely touches the polygon.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClipResult {
    Polygon(ConvexPolygon),
    Segment(Point2, Point2),
    Point(Point2),
    Empty,
}

impl ClipResult {
    pub fn polygon(self) -> Option<ConvexPolygon> {
        match self {
            ClipResult::Polygon(p) => Some(p),
            _ => None,
        }
    }

    pub fn area(&self) -> Rational {
        match self {
            ClipResult::Polygon(p) => polygon_area(p),
            _ => Rational::zero(),
        }
    }
}

/// Strictly convex polygon with counter-clockwise vertex order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Canonicalizing constructor. Accepts either orientation, removes
    /// repeated and collinear vertices, and rejects anything that is not
    /// a strictly convex polygon of positive area.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let mut vs: Vec<Point2> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if vs.last() != Some(&v) {
                vs.push(v);
            }
        }
        while vs.len() > 1 && vs.first() == vs.last() {
            vs.pop();
        }
        if vs.len() < 3 {
            return Err(Error::InvalidPolygon(
                "fewer than 3 distinct vertices".into(),
            ));
        }
        if shoelace_double(&vs).is_negative() {
            vs.reverse();
        }
        // Merge collinear runs: drop any vertex that is not a strict
        // left turn between its neighbors. Clipping routinely produces
        // such vertices on the cut line.
        loop {
            let n = vs.len();
            let mut kept: Vec<Point2> = Vec::with_capacity(n);
            for i in 0..n {
                let prev = &vs[(i + n - 1) % n];
                let next = &vs[(i + 1) % n];
                if !orient(prev, &vs[i], next).is_zero() {
                    kept.push(vs[i].clone());
                }
            }
            let changed = kept.len() != vs.len();
            vs = kept;
            if vs.len() < 3 {
                return Err(Error::InvalidPolygon("degenerate (zero area)".into()));
            }
            if !changed {
                break;
            }
        }
        let n = vs.len();
        for i in 0..n {
            let o = orient(&vs[i], &vs[(i + 1) % n], &vs[(i + 2) % n]);
            if !o.is_positive() {
                return Err(Error::InvalidPolygon("not convex".into()));
            }
        }
        let start = (0..n)
            .min_by(|&i, &j| (&vs[i].x, &vs[i].y).cmp(&(&vs[j].x, &vs[j].y)))
            .unwrap();
        vs.rotate_left(start);
        Ok(Self { vertices: vs })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Inward closed half-planes of every edge, in vertex order.
    pub fn edge_half_planes(&self) -> Vec<HalfPlane> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let u = &self.vertices[i];
                let v = &self.vertices[(i + 1) % n];
                let d = v.sub(u);
                let normal = pt(-d.y.clone(), d.x.clone());
                let offset = normal.dot(u);
                HalfPlane {
                    normal: (normal.x, normal.y),
                    offset,
                    closed: true,
                }
            })
            .collect()
    }

    /// Closed membership test.
    pub fn contains_point(&self, p: &Point2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let u = &self.vertices[i];
            let v = &self.vertices[(i + 1) % n];
            !orient(u, v, p).is_negative()
        })
    }

    /// Strict interior membership test.
    pub fn contains_point_strictly(&self, p: &Point2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let u = &self.vertices[i];
            let v = &self.vertices[(i + 1) % n];
            orient(u, v, p).is_positive()
        })
    }
}

impl fmt::Debug for ConvexPolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.vertices.iter()).finish()
    }
}

impl Serialize for ConvexPolygon {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConvexPolygon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let vs = Vec::<Point2>::deserialize(deserializer)?;
        ConvexPolygon::new(vs).map_err(de::Error::custom)
    }
}

fn shoelace_double(vs: &[Point2]) -> Rational {
    let n = vs.len();
    let mut acc = Rational::zero();
    for i in 0..n {
        acc = acc + vs[i].cross(&vs[(i + 1) % n]);
    }
    acc
}

/// Exact positive area via the shoelace sum.
pub fn polygon_area(p: &ConvexPolygon) -> Rational {
    shoelace_double(p.vertices()) / Rational::from_int(2)
}

/// Exact intersection of a convex polygon with a half-plane.
///
/// The half-plane is treated as its closure: clip results feed area
/// comparisons, which cannot see measure-zero boundaries. Openness only
/// matters for membership tests, which use [`HalfPlane::satisfied_by`].
pub fn clip_polygon(p: &ConvexPolygon, h: &HalfPlane) -> ClipResult {
    let vs = p.vertices();
    let n = vs.len();
    let vals: Vec<Rational> = vs.iter().map(|v| h.boundary_value(v)).collect();
    let any_pos = vals.iter().any(|v| v.is_positive());
    let any_neg = vals.iter().any(|v| v.is_negative());

    if !any_neg {
        return ClipResult::Polygon(p.clone());
    }
    if !any_pos {
        // Entirely on the excluded side; only boundary contact can remain.
        let on: Vec<&Point2> = (0..n)
            .filter(|&i| vals[i].is_zero())
            .map(|i| &vs[i])
            .collect();
        return match on.len() {
            0 => ClipResult::Empty,
            1 => ClipResult::Point(on[0].clone()),
            _ => ClipResult::Segment(on[0].clone(), on[1].clone()),
        };
    }

    let mut out: Vec<Point2> = Vec::with_capacity(n + 2);
    for i in 0..n {
        let j = (i + 1) % n;
        let (u, v) = (&vs[i], &vs[j]);
        let (a, b) = (&vals[i], &vals[j]);
        if !a.is_negative() {
            out.push(u.clone());
        }
        if (a.is_positive() && b.is_negative()) || (a.is_negative() && b.is_positive()) {
            // Exact crossing point of edge u->v with the boundary line.
            let t = a / &(a - b);
            out.push(u.add(&v.sub(u).scale(&t)));
        }
    }
    ClipResult::Polygon(
        ConvexPolygon::new(out).expect("clipping a convex polygon yields a convex polygon"),
    )
}

/// Exact intersection of two convex polygons.
pub fn intersect_polygons(p: &ConvexPolygon, q: &ConvexPolygon) -> ClipResult {
    let mut cur = p.clone();
    for h in q.edge_half_planes() {
        match clip_polygon(&cur, &h) {
            ClipResult::Polygon(next) => cur = next,
            degenerate => return degenerate,
        }
    }
    ClipResult::Polygon(cur)
}

/// Closed containment via the area criterion:
/// `inner` lies in the closure of `outer` iff
/// `area(inner intersect outer) = area(inner)`.
///
/// Boundary contact therefore counts as contained, which is exactly what
/// trapping certificates with pointwise-fixed boundary segments need.
pub fn contains_polygon(outer: &ConvexPolygon, inner: &ConvexPolygon) -> bool {
    intersect_polygons(inner, outer).area() == polygon_area(inner)
}

/// Exact convex hull (monotone chain). Returns an error when the input
/// has no interior (fewer than three distinct points, or all collinear).
pub fn convex_hull(points: &[Point2]) -> Result<ConvexPolygon> {
    let mut ps: Vec<Point2> = points.to_vec();
    ps.sort_by(|a, b| (&a.x, &a.y).cmp(&(&b.x, &b.y)));
    ps.dedup();
    if ps.len() < 3 {
        return Err(Error::InvalidPolygon(
            "fewer than 3 distinct vertices".into(),
        ));
    }
    let mut lower: Vec<Point2> = Vec::new();
    for p in &ps {
        while lower.len() >= 2
            && !orient(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive()
        {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point2> = Vec::new();
    for p in ps.iter().rev() {
        while upper.len() >= 2
            && !orient(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive()
        {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    ConvexPolygon::new(lower)
}

/// True iff `p` lies on the closed segment `[a, b]`.
pub fn point_on_segment(p: &Point2, a: &Point2, b: &Point2) -> bool {
    if !orient(a, b, p).is_zero() {
        return false;
    }
    let d = b.sub(a);
    let t = d.dot(&p.sub(a));
    !t.is_negative() && t <= d.dot(&d)
}
