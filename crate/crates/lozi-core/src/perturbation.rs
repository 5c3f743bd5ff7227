//! First-order expansions of the covering-box vertices under the 4-fold
//! map with a symbolic perturbation of the `a` parameter.
//!
//! The vertices of the two covering boxes scale with a small eps > 0;
//! pushing them through four steps in truncated eps-arithmetic (see
//! [`crate::epspoly`]) yields, for each vertex, an exact constant term
//! (the unperturbed limit, always the period-4 point on the axis) and
//! exact linear coefficients. A second, concrete parameter `eps2` slides
//! the whole construction along the zero-entropy parameter line: the map
//! is evaluated at a = 7/5 + eps2 + eps, b = 2/5 + eps2.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::covering::{
    build_matrix, check_cover, covering_boxes, entropy_lower_bound, CoverVerdict, EntropyBound,
    MarkedQuadrilateral, TransitionMatrix,
};
use crate::epspoly::{lozi_step_eps, EpsPoint, EpsPoly, DEFAULT_EPS_CAP};
use crate::error::{Error, Result};
use crate::fixed_points::f2_point;
use crate::geometry::{pt, Point2};
use crate::map::{lozi_iterate, LoziParams};
use crate::rational::{rat, Rational};

/// The eight labeled vertices of the two covering boxes: A-D belong to
/// the first box, E-H to the second.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum VertexId {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl VertexId {
    pub const ALL: [VertexId; 8] = [
        VertexId::A,
        VertexId::B,
        VertexId::C,
        VertexId::D,
        VertexId::E,
        VertexId::F,
        VertexId::G,
        VertexId::H,
    ];

    /// 0 for the first covering box, 1 for the second.
    pub fn box_index(self) -> usize {
        match self {
            VertexId::A | VertexId::B | VertexId::C | VertexId::D => 0,
            _ => 1,
        }
    }

    pub fn label(self) -> char {
        match self {
            VertexId::A => 'A',
            VertexId::B => 'B',
            VertexId::C => 'C',
            VertexId::D => 'D',
            VertexId::E => 'E',
            VertexId::F => 'F',
            VertexId::G => 'G',
            VertexId::H => 'H',
        }
    }

    /// Per-unit-eps vertex offsets (dx, dy) from the axis point (0, f).
    fn offsets(self) -> (Rational, Rational) {
        match self {
            VertexId::A => (rat(0, 1), rat(-1, 1)),
            VertexId::B => (rat(1, 1), rat(7, 2)),
            VertexId::C => (rat(5, 2), rat(5, 2)),
            VertexId::D => (rat(3, 2), rat(-2, 1)),
            VertexId::E => (rat(-3, 1), rat(7, 2)),
            VertexId::F => (rat(-2, 1), rat(5, 6)),
            VertexId::G => (rat(0, 1), rat(-1, 2)),
            VertexId::H => (rat(-1, 1), rat(13, 6)),
        }
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Bound on |eps2| inside which the family argument is made; larger
/// values still compute but are flagged.
fn outside_guard(eps2: &Rational) -> bool {
    eps2.abs() >= rat(1, 10)
}

/// The symbolic box vertex at parameter-line offset eps2: coordinates
/// are degree-1 polynomials in the box scale eps.
pub fn tilde_vertex(eps2: &Rational, vertex: VertexId) -> Result<EpsPoint> {
    let seg = LoziParams::segment(eps2);
    let f = f2_point(&seg)?;
    let (dx, dy) = vertex.offsets();
    let e = EpsPoly::eps(DEFAULT_EPS_CAP);
    Ok(EpsPoint::new(
        e.scale(&dx),
        EpsPoly::constant(f.y, DEFAULT_EPS_CAP).add(&e.scale(&dy)),
    ))
}

/// Constant and linear coefficients of a vertex's fourth image, plus the
/// absolute-value sign log of the four steps.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct CoefficientPair {
    pub vertex: VertexId,
    /// The eps = 0 limit of the fourth image; a fixed point of the
    /// unperturbed 4-fold map.
    pub constant: Point2,
    pub x_lin: Rational,
    pub y_lin: Rational,
    /// Sign taken for |x| at each of the four steps (+1, -1, or 0 for an
    /// identically-zero x coordinate).
    pub sign_log: Vec<i32>,
    /// True when |eps2| >= 1/10, outside the argued regime.
    pub outside_guard: bool,
}

/// Push one labeled tilde vertex through four steps of the map at
/// a = 7/5 + eps2 + eps, b = 2/5 + eps2, and read off the exact constant
/// and linear coefficients.
pub fn vertex_expansion(eps2: &Rational, vertex: VertexId) -> Result<CoefficientPair> {
    let seg = LoziParams::segment(eps2);
    let cap = DEFAULT_EPS_CAP;
    let a = EpsPoly::constant(seg.a.clone(), cap).add(&EpsPoly::eps(cap));
    let b = EpsPoly::constant(seg.b.clone(), cap);
    let mut point = tilde_vertex(eps2, vertex)?;
    let mut sign_log = Vec::with_capacity(4);
    for step in 0..4 {
        let (next, abs) = lozi_step_eps(&a, &b, &point).map_err(|e| match e {
            Error::IndeterminateSign { .. } => Error::IndeterminateSign { step: Some(step) },
            other => other,
        })?;
        sign_log.push(abs.sign);
        point = next;
    }
    let (cx, cy) = point.at_zero();
    Ok(CoefficientPair {
        vertex,
        constant: pt(cx, cy),
        x_lin: point.x.linear_term(),
        y_lin: point.y.linear_term(),
        sign_log,
        outside_guard: outside_guard(eps2),
    })
}

/// Exact rational fourth image of the concrete vertex at a given box
/// scale, for remainder checks against the first-order expansion.
pub fn exact_vertex_image(eps1: &Rational, eps2: &Rational, vertex: VertexId) -> Result<Point2> {
    if !eps1.is_positive() {
        return Err(Error::InvalidParameter("eps1 must be positive".into()));
    }
    let seg = LoziParams::segment(eps2);
    let f = f2_point(&seg)?;
    let (dx, dy) = vertex.offsets();
    let v = pt(dx * eps1, &f.y + dy * eps1);
    let params = LoziParams::new(&seg.a + eps1, seg.b.clone());
    Ok(lozi_iterate(&params, &v, 4))
}

/// All eight expansions at one eps2, with the worst linear-coefficient
/// deviation from the eps2 = 0 table.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct DriftTable {
    pub eps2: Rational,
    pub rows: Vec<CoefficientPair>,
    /// max over vertices and coordinates of |linear(eps2) - linear(0)|.
    pub max_drift: Rational,
    pub outside_guard: bool,
}

pub fn coefficient_drift(eps2: &Rational) -> Result<DriftTable> {
    let mut rows = Vec::with_capacity(8);
    let mut max_drift = Rational::zero();
    for vertex in VertexId::ALL {
        let row = vertex_expansion(eps2, vertex)?;
        let base = vertex_expansion(&Rational::zero(), vertex)?;
        for d in [
            (&row.x_lin - &base.x_lin).abs(),
            (&row.y_lin - &base.y_lin).abs(),
        ] {
            if d > max_drift {
                max_drift = d;
            }
        }
        rows.push(row);
    }
    Ok(DriftTable {
        eps2: eps2.clone(),
        rows,
        max_drift,
        outside_guard: outside_guard(eps2),
    })
}

/// One directed covering check between boxes, by index.
#[derive(Clone, Debug, Serialize)]
pub struct PairCheck {
    pub from: usize,
    pub to: usize,
    pub verdict: CoverVerdict,
}

/// Covering verdicts, transition matrix, and entropy bound for the
/// two-box family at concrete (eps1, eps2).
#[derive(Clone, Debug, Serialize)]
pub struct FamilyCheck {
    pub eps1: Rational,
    pub eps2: Rational,
    /// The checked parameters: the parameter-line point shifted by eps1
    /// in `a` only.
    pub params: LoziParams,
    pub boxes: [MarkedQuadrilateral; 2],
    pub checks: Vec<PairCheck>,
    pub matrix: TransitionMatrix,
    pub bound: EntropyBound,
    pub outside_guard: bool,
}

/// Build the concrete boxes at (eps1, eps2), run all four directed
/// covering checks under the shifted 4-fold map, and bound the entropy
/// from the verdict matrix. Indeterminate or failed verdicts become
/// matrix zeros, not errors.
pub fn covering_family_check(eps1: &Rational, eps2: &Rational) -> Result<FamilyCheck> {
    let seg = LoziParams::segment(eps2);
    let f = f2_point(&seg)?;
    let (n1, n2) = covering_boxes(eps1, &f.y)?;
    let params = LoziParams::new(&seg.a + eps1, seg.b.clone());
    let boxes = [n1, n2];
    let mut checks = Vec::with_capacity(4);
    let mut grid = Vec::with_capacity(2);
    for (i, from) in boxes.iter().enumerate() {
        let mut row = Vec::with_capacity(2);
        for (j, to) in boxes.iter().enumerate() {
            let verdict = check_cover(&params, 4, from, to)?;
            checks.push(PairCheck {
                from: i,
                to: j,
                verdict: verdict.clone(),
            });
            row.push(verdict);
        }
        grid.push(row);
    }
    let matrix = build_matrix(&grid)?;
    let bound = entropy_lower_bound(&matrix, 4)?;
    Ok(FamilyCheck {
        eps1: eps1.clone(),
        eps2: eps2.clone(),
        params,
        boxes,
        checks,
        matrix,
        bound,
        outside_guard: outside_guard(eps2),
    })
}

/// The coefficient truncated toward zero at two decimals, in hundredths
/// (e.g. 30476/18125 -> 168, -6363/3625 -> -175). This is the rounding
/// convention of the displayed approximate column.
pub fn hundredths_toward_zero(r: &Rational) -> i64 {
    let scaled = Rational::from_int(100) * r;
    (scaled.numer() / scaled.denom())
        .to_i64()
        .expect("hundredths fit in i64")
}
