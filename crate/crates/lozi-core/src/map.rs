//! The Lozi family `L(x, y) = (1 - a|x| + b y, x)`, its affine branches,
//! and saddle eigendata.
//!
//! A length-n sign itinerary selects one affine branch of the n-fold
//! composition: each step replaces `|x|` by `sigma * x` and contributes a
//! half-plane constraint, pulled back to the initial coordinates, that
//! certifies the substitution. On the constraint set the branch map and
//! the true n-fold map agree exactly.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{pt, HalfPlane, Point2};
use crate::rational::Rational;

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LoziParams {
    pub a: Rational,
    pub b: Rational,
}

impl LoziParams {
    pub fn new(a: Rational, b: Rational) -> Self {
        Self { a, b }
    }

    /// Parameters `(7/5 + t, 2/5 + t)` on the line `b = a - 1`.
    pub fn segment(t: &Rational) -> Self {
        Self::new(
            Rational::new(7, 5).unwrap() + t,
            Rational::new(2, 5).unwrap() + t,
        )
    }
}

/// Exact image `(1 - a|x| + b y, x)`.
pub fn lozi_apply(p: &LoziParams, q: &Point2) -> Point2 {
    pt(
        Rational::one() - &p.a * q.x.abs() + &p.b * &q.y,
        q.x.clone(),
    )
}

/// n-fold exact application of the map.
pub fn lozi_iterate(p: &LoziParams, q: &Point2, n: usize) -> Point2 {
    let mut cur = q.clone();
    for _ in 0..n {
        cur = lozi_apply(p, &cur);
    }
    cur
}

/// Exact preimage; requires `b != 0`.
pub fn lozi_inverse(p: &LoziParams, q: &Point2) -> Result<Point2> {
    if p.b.is_zero() {
        return Err(Error::NotInvertible);
    }
    let x = q.y.clone();
    let y = (&q.x - Rational::one() + &p.a * x.abs()) / &p.b;
    Ok(pt(x, y))
}

/// Sign of the x-coordinate at one step of an orbit. `NonNeg` is the
/// closed alternative (`x >= 0`), `Neg` the open one (`x < 0`), so the
/// sixteen length-4 domains tile the plane without overlap.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Sign {
    NonNeg,
    Neg,
}

impl Sign {
    pub fn sigma(self) -> i32 {
        match self {
            Sign::NonNeg => 1,
            Sign::Neg => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::NonNeg => '+',
            Sign::Neg => '-',
        }
    }

    /// Sign class of an x-coordinate under this convention.
    pub fn of(x: &Rational) -> Sign {
        if x.is_negative() {
            Sign::Neg
        } else {
            Sign::NonNeg
        }
    }
}

/// A finite word over {NonNeg, Neg}, one letter per map application.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignItinerary(pub Vec<Sign>);

impl SignItinerary {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    /// The signs actually taken by the orbit of `q` over `n` steps.
    pub fn of_orbit(p: &LoziParams, q: &Point2, n: usize) -> Self {
        let mut cur = q.clone();
        let mut signs = Vec::with_capacity(n);
        for _ in 0..n {
            signs.push(Sign::of(&cur.x));
            cur = lozi_apply(p, &cur);
        }
        SignItinerary(signs)
    }
}

impl fmt::Display for SignItinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignItinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for SignItinerary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Sign::NonNeg),
                '-' => Ok(Sign::Neg),
                other => Err(Error::Usage(format!(
                    "invalid itinerary symbol {other:?}; expected '+' or '-'"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SignItinerary)
    }
}

impl Serialize for SignItinerary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SignItinerary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(de::Error::custom)
    }
}

/// Exact 2x2 matrix, row-major.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[Rational; 2]; 2],
}

impl Mat2 {
    pub fn identity() -> Self {
        Self {
            m: [
                [Rational::one(), Rational::zero()],
                [Rational::zero(), Rational::one()],
            ],
        }
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let mut out = Mat2::identity();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = &self.m[i][0] * &rhs.m[0][j] + &self.m[i][1] * &rhs.m[1][j];
            }
        }
        out
    }

    pub fn apply(&self, p: &Point2) -> Point2 {
        pt(
            &self.m[0][0] * &p.x + &self.m[0][1] * &p.y,
            &self.m[1][0] * &p.x + &self.m[1][1] * &p.y,
        )
    }

    pub fn det(&self) -> Rational {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        if d.is_zero() {
            return Err(Error::NotInvertible);
        }
        Ok(Mat2 {
            m: [
                [&self.m[1][1] / &d, -&self.m[0][1] / &d],
                [-&self.m[1][0] / &d, &self.m[0][0] / &d],
            ],
        })
    }
}

/// Exact affine map `p -> M p + c`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Affine {
    pub linear: Mat2,
    pub translation: Point2,
}

impl Affine {
    pub fn identity() -> Self {
        Self {
            linear: Mat2::identity(),
            translation: pt(Rational::zero(), Rational::zero()),
        }
    }

    pub fn apply(&self, p: &Point2) -> Point2 {
        self.linear.apply(p).add(&self.translation)
    }

    /// `self` after `first`: `p -> self(first(p))`.
    pub fn after(&self, first: &Affine) -> Affine {
        Affine {
            linear: self.linear.mul(&first.linear),
            translation: self.linear.apply(&first.translation).add(&self.translation),
        }
    }

    pub fn inverse(&self) -> Result<Affine> {
        let inv = self.linear.inverse()?;
        let t = inv.apply(&self.translation);
        Ok(Affine {
            linear: inv,
            translation: pt(-t.x, -t.y),
        })
    }
}

/// One step's pulled-back sign constraint. The degenerate variants only
/// arise when the pulled-back x-row vanishes (possible at a = b = 0),
/// where the coordinate entering the step is a constant.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepConstraint {
    Plane(HalfPlane),
    Always,
    Never,
}

impl StepConstraint {
    pub fn satisfied_by(&self, p: &Point2) -> bool {
        match self {
            StepConstraint::Plane(h) => h.satisfied_by(p),
            StepConstraint::Always => true,
            StepConstraint::Never => false,
        }
    }
}

/// One affine branch of the n-fold map together with the half-plane
/// constraints certifying it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineBranch {
    pub itinerary: SignItinerary,
    pub map: Affine,
    pub constraints: Vec<StepConstraint>,
}

impl AffineBranch {
    pub fn n(&self) -> usize {
        self.itinerary.len()
    }

    pub fn contains(&self, p: &Point2) -> bool {
        self.constraints.iter().all(|c| c.satisfied_by(p))
    }

    /// Indices of the steps whose constraint `p` violates.
    pub fn violated_steps(&self, p: &Point2) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.satisfied_by(p))
            .map(|(k, _)| k)
            .collect()
    }
}

/// Build the affine branch selected by `it`, with each step's sign
/// constraint pulled back to initial coordinates.
///
/// Step k with sign sigma applies `p -> S p + (1, 0)` where
/// `S = [[-sigma a, b], [1, 0]]`; the constraint is the x-row of the
/// partial composition entering that step (closed for NonNeg, open for
/// Neg). For any point satisfying all constraints the branch image
/// equals the n-fold `lozi_apply` image exactly.
pub fn compose_branch(p: &LoziParams, it: &SignItinerary) -> AffineBranch {
    let mut acc = Affine::identity();
    let mut constraints = Vec::with_capacity(it.len());
    for &s in it.signs() {
        let m00 = acc.linear.m[0][0].clone();
        let m01 = acc.linear.m[0][1].clone();
        let c0 = acc.translation.x.clone();
        let constraint = if m00.is_zero() && m01.is_zero() {
            // x entering this step is the constant c0.
            let holds = match s {
                Sign::NonNeg => !c0.is_negative(),
                Sign::Neg => c0.is_negative(),
            };
            if holds {
                StepConstraint::Always
            } else {
                StepConstraint::Never
            }
        } else {
            let h = match s {
                Sign::NonNeg => HalfPlane::closed(m00, m01, -c0).unwrap(),
                Sign::Neg => HalfPlane::open(-m00, -m01, c0).unwrap(),
            };
            StepConstraint::Plane(h)
        };
        constraints.push(constraint);

        let sigma = Rational::from_int(s.sigma() as i64);
        let step = Affine {
            linear: Mat2 {
                m: [
                    [-(&sigma * &p.a), p.b.clone()],
                    [Rational::one(), Rational::zero()],
                ],
            },
            translation: pt(Rational::one(), Rational::zero()),
        };
        acc = step.after(&acc);
    }
    AffineBranch {
        itinerary: it.clone(),
        map: acc,
        constraints,
    }
}

/// True iff `q` satisfies every step constraint of the branch
/// (NonNeg as `>= 0`, Neg as `< 0`).
pub fn branch_contains(br: &AffineBranch, q: &Point2) -> bool {
    br.contains(q)
}

/// Which one-step fixed point to take eigendata at.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum BranchSide {
    NonNeg,
    Neg,
}

/// Saddle fixed point with float eigendata. The fixed point itself is
/// exact; eigenvalues and eigenvectors are floats (the square root is
/// irrational) and feed only non-certified tracing.
#[derive(Clone, Debug, Serialize)]
pub struct EigenData {
    pub point: Point2,
    pub lambda_stable: f64,
    pub lambda_unstable: f64,
    /// Eigenvectors in the form (lambda, 1), normalized to unit length.
    pub v_stable: [f64; 2],
    pub v_unstable: [f64; 2],
}

/// Eigendata of the one-step fixed point on the requested side of x = 0.
///
/// The fixed point is `x = y = 1/(1 + sigma a - b)`; it must actually lie
/// on the requested side, and its eigenvalues must straddle the unit
/// circle, else an error is returned.
pub fn saddle_data(p: &LoziParams, side: BranchSide) -> Result<EigenData> {
    let sigma: i64 = match side {
        BranchSide::NonNeg => 1,
        BranchSide::Neg => -1,
    };
    let denom = Rational::one() + Rational::from_int(sigma) * &p.a - &p.b;
    if denom.is_zero() {
        return Err(Error::NoSaddleOnSide);
    }
    let x = denom.recip()?;
    let on_side = match side {
        BranchSide::NonNeg => !x.is_negative(),
        BranchSide::Neg => x.is_negative(),
    };
    if !on_side {
        return Err(Error::NoSaddleOnSide);
    }
    let point = pt(x.clone(), x);

    let a = p.a.to_f64();
    let b = p.b.to_f64();
    let s = sigma as f64;
    // Jacobian [[-sigma a, b], [1, 0]]; lambda^2 + sigma a lambda - b = 0.
    let disc = a * a + 4.0 * b;
    if disc <= 0.0 {
        return Err(Error::NotASaddle);
    }
    let root = disc.sqrt();
    let l1 = (-s * a + root) / 2.0;
    let l2 = (-s * a - root) / 2.0;
    let (stable, unstable) = if l1.abs() < l2.abs() {
        (l1, l2)
    } else {
        (l2, l1)
    };
    if !(stable.abs() < 1.0 && unstable.abs() > 1.0) {
        return Err(Error::NotASaddle);
    }
    let unit = |l: f64| {
        let norm = (l * l + 1.0).sqrt();
        [l / norm, 1.0 / norm]
    };
    Ok(EigenData {
        point,
        lambda_stable: stable,
        lambda_unstable: unstable,
        v_stable: unit(stable),
        v_unstable: unit(unstable),
    })
}
