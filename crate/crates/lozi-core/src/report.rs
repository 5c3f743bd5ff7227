//! The JSON report envelope shared by the command-line tool and the C
//! ABI.
//!
//! Every command produces one `Report`: the command name, the exact
//! parameters it ran with, a rigor tag, a one-line human summary, and a
//! typed payload. Serialization is deterministic: struct field order is
//! fixed, rationals print as `num/den` strings, and nothing in the
//! envelope depends on time or environment. Floating-point numbers
//! appear only inside payload types that are numerical by construction
//! (polylines, estimates, float enclosures) and in fields explicitly
//! named `*_evidence`.

use serde::Serialize;

use crate::covering::{EntropyBound, MarkedQuadrilateral, TransitionMatrix};
use crate::error::{Error, Result};
use crate::fixed_points::FixedPointSet;
use crate::geometry::ConvexPolygon;
use crate::map::LoziParams;
use crate::perturbation::{hundredths_toward_zero, DriftTable, FamilyCheck, PairCheck, VertexId};
use crate::simulation::{EntropyEstimate, PolylineF64};
use crate::trapping::TrappingCertificate;

/// Whether the payload is an exact-arithmetic certificate or a
/// floating-point observation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Rigor {
    #[serde(rename = "certified")]
    Certified,
    #[serde(rename = "numerical evidence")]
    NumericalEvidence,
}

/// The report envelope.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub params: LoziParams,
    pub rigor: Rigor,
    pub summary: String,
    /// Tool name and version; omitted in canonical mode so that output
    /// bytes are stable across releases.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub payload: Payload,
}

impl Report {
    /// Pretty JSON with a trailing newline; byte-deterministic for a
    /// fixed report value.
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports are serializable");
        s.push('\n');
        s
    }

    /// All polylines carried by the payload, in report order.
    pub fn polylines(&self) -> Vec<&PolylineF64> {
        match &self.payload {
            Payload::Trace { line, .. } => vec![line],
            Payload::CriticalLines { lines, .. } => lines.iter().collect(),
            _ => Vec::new(),
        }
    }
}

/// The approximate column of a coefficient table: linear coefficients
/// truncated toward zero at two decimals, stored in hundredths.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct ApproxRow {
    pub vertex: VertexId,
    pub x_hundredths: i64,
    pub y_hundredths: i64,
}

/// Typed payload, tagged by report kind.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    FixedPoints {
        set: FixedPointSet,
    },
    Covering {
        n: usize,
        boxes: Vec<MarkedQuadrilateral>,
        checks: Vec<PairCheck>,
        /// Directed pairs (0-based) whose covering was asserted.
        asserted: Vec<(usize, usize)>,
        matrix: TransitionMatrix,
        bound: EntropyBound,
    },
    EntropyBound {
        family: FamilyCheck,
    },
    Trapping {
        region: ConvexPolygon,
        certificate: TrappingCertificate,
        /// Per macro step, the largest distance from an image vertex to
        /// the fixed segment. Diagnostic only; containment is certified
        /// by the exact pieces in the certificate.
        contraction_evidence: Vec<f64>,
    },
    Perturb {
        table: DriftTable,
        approx: Vec<ApproxRow>,
        max_drift_evidence: f64,
    },
    JumpDemo {
        fixed_points: FixedPointSet,
        region: ConvexPolygon,
        trapping: TrappingCertificate,
        family: FamilyCheck,
    },
    Trace {
        line: PolylineF64,
        first_axis_crossing_evidence: Option<[f64; 2]>,
        /// Empirical count of n-fold steps the seed takes to enter the
        /// trapping region, when the parameters admit one.
        steps_until_region_evidence: Option<usize>,
    },
    CriticalLines {
        depth: usize,
        lines: Vec<PolylineF64>,
    },
    EntropyEstimate {
        estimate: EntropyEstimate,
    },
}

/// The truncated approximate column for a drift table.
pub fn approx_rows(table: &DriftTable) -> Vec<ApproxRow> {
    table
        .rows
        .iter()
        .map(|row| ApproxRow {
            vertex: row.vertex,
            x_hundredths: hundredths_toward_zero(&row.x_lin),
            y_hundredths: hundredths_toward_zero(&row.y_lin),
        })
        .collect()
}

/// CSV rendering of the report's polylines, one point per row.
///
/// Columns are the polyline role, its index within the report, the
/// point index, and the coordinates. Floats print in shortest
/// round-trip form.
pub fn to_csv(report: &Report) -> Result<String> {
    let lines = report.polylines();
    if lines.is_empty() {
        return Err(Error::Usage(format!(
            "the {} report carries no polylines to export as CSV",
            report.command
        )));
    }
    let mut out = String::from("role,line,point,x,y\n");
    for (li, line) in lines.iter().enumerate() {
        let role = serde_json::to_value(line.role).expect("role serializes");
        let role = role.as_str().expect("role is a string").to_owned();
        for (pi, q) in line.points.iter().enumerate() {
            out.push_str(&format!("{role},{li},{pi},{},{}\n", q[0], q[1]));
        }
    }
    Ok(out)
}
