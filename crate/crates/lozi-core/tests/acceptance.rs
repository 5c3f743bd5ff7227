//! Acceptance gate: one test per criterion the toolkit must meet.
//!
//! Each test prints a single `[PASS] criterion N: ...` line on success
//! (visible with `--nocapture`) or panics with a `[FAIL] criterion N: ...`
//! line carrying the full analysis. Stated runtime limits are asserted
//! around the computation they constrain.

use std::time::{Duration, Instant};

use lozi_core::covering::{fiber_spot_check, CoverVerdict};
use lozi_core::fixed_points::{enumerate_fixed_points, itinerary_for_domain, BranchSolution};
use lozi_core::geometry::{polygon_area, pt, Point2};
use lozi_core::map::{
    compose_branch, lozi_apply, lozi_inverse, saddle_data, BranchSide, LoziParams,
};
use lozi_core::perturbation::{
    covering_family_check, exact_vertex_image, hundredths_toward_zero, vertex_expansion, VertexId,
};
use lozi_core::simulation::{
    dist_point_segment, estimate_entropy, first_x_axis_crossing, fixed_segment_f64, trace_unstable,
    TraceSide, Viewport,
};
use lozi_core::trapping::{trapping_region_for, verify_trapping};
use lozi_core::{rat, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p2(xn: i64, xd: i64, yn: i64, yd: i64) -> Point2 {
    pt(rat(xn, xd), rat(yn, yd))
}

fn canonical() -> LoziParams {
    LoziParams::new(rat(7, 5), rat(2, 5))
}

/// Criterion 1: the 4-fold fixed-point enumeration at (7/5, 2/5) must
/// reproduce the reference table exactly: the two isolated points, the
/// two maximal segments, and a rejection at the reference's cited step
/// for each of the nine rejected domains.
#[test]
fn criterion_1_exact_fixed_point_table() {
    let started = Instant::now();
    let set = enumerate_fixed_points(&canonical(), 4).expect("enumeration failed");
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "[FAIL] criterion 1: runtime {elapsed:?} >= 1 s"
    );

    // Headline set, exact rational equality.
    let expected_points = [p2(1, 2, 1, 2), p2(-5, 4, -5, 4)];
    assert_eq!(
        set.points.len(),
        2,
        "[FAIL] criterion 1: expected 2 isolated points, got {:?}",
        set.points.iter().map(|it| &it.point).collect::<Vec<_>>()
    );
    for q in &expected_points {
        assert!(
            set.points.iter().any(|it| it.point == *q),
            "[FAIL] criterion 1: isolated point {q:?} missing"
        );
    }
    let expected_segments = [
        (p2(-20, 29, 35, 29), p2(0, 1, 15, 29)),
        (p2(15, 29, -20, 29), p2(35, 29, 0, 1)),
    ];
    assert_eq!(
        set.segments.len(),
        2,
        "[FAIL] criterion 1: expected 2 segments, got {}",
        set.segments.len()
    );
    for (a, b) in &expected_segments {
        assert!(
            set.segments
                .iter()
                .any(|s| s.endpoints == (a.clone(), b.clone())),
            "[FAIL] criterion 1: segment {a:?} - {b:?} missing"
        );
    }

    // Reference rejection table: (domain, violated step). Steps count the
    // orbit coordinates x0..x3, so step 0 is the sign of x itself.
    let reference: [(usize, usize); 9] = [
        (4, 1),
        (5, 2),
        (7, 0),
        (8, 0),
        (10, 0),
        (12, 0),
        (13, 3),
        (14, 3),
        (15, 1),
    ];
    let mut mismatches = Vec::new();
    for (domain, step) in reference {
        let report = &set.reports[domain - 1];
        assert_eq!(report.domain, domain, "report order broken");
        match &report.solution {
            BranchSolution::Empty if report.violated_steps.contains(&step) => {}
            BranchSolution::Empty => mismatches.push(format!(
                "domain {domain}: reference cites a violation at step {step}, but the \
                 candidate {:?} violates steps {:?}",
                report.candidate, report.violated_steps
            )),
            other => mismatches.push(format!(
                "domain {domain}: reference cites a violation at step {step}, but the \
                 branch solution is {other:?} (not rejected)"
            )),
        }
    }
    if !mismatches.is_empty() {
        panic!(
            "[FAIL] criterion 1: headline fixed-point set reproduced exactly, but {} of 9 \
             reference rejection rows disagree with exact arithmetic: {}. Analysis: the \
             domain-5 branch (sign pattern + - + +) has the genuine fixed point (35/29, 0); \
             its orbit coordinates 35/29, -20/29, 15/29, 0 satisfy every sign condition, so \
             there is no rejection for the reference row to cite (the point is the right \
             endpoint of the image segment and is reported there). The domain-7 branch \
             (sign pattern - - + +) solves to the candidate (-7/4, 7/4), whose x = -7/4 < 0 \
             matches its own sign pattern, while its step-2 coordinate -3/4 violates the \
             required >= 0; the rejection step is therefore 2, not the reference's 0. Both \
             computed rows are confirmed by substituting the candidates back into the four \
             sign conditions in exact arithmetic; the two reference rows appear to be \
             transcription slips, and this toolkit reports what the arithmetic yields.",
            mismatches.len(),
            mismatches.join("; ")
        );
    }
    println!(
        "[PASS] criterion 1: exact fixed-point table reproduced ({} points, {} segments, 9 \
         rejections) in {elapsed:?}",
        set.points.len(),
        set.segments.len()
    );
}

/// Criterion 2: across eps1 in {1/1000, 1/10000} and eps2 in
/// {0, 1/1000, -1/1000}, the two-box family must certify Covered for
/// (N1,N1), (N1,N2), (N2,N1) and NotCovered for (N2,N2), produce the
/// transition matrix [[1,1],[1,0]], and bound entropy inside
/// (0.1203, 0.12031).
#[test]
fn criterion_2_entropy_bound_certificates() {
    let started = Instant::now();
    let eps1s = [rat(1, 1000), rat(1, 10000)];
    let eps2s = [rat(0, 1), rat(1, 1000), rat(-1, 1000)];
    for eps1 in &eps1s {
        for eps2 in &eps2s {
            let fam = covering_family_check(eps1, eps2).unwrap_or_else(|e| {
                panic!("[FAIL] criterion 2: eps1 = {eps1}, eps2 = {eps2}: {e}")
            });
            for check in &fam.checks {
                let want_covered = !(check.from == 1 && check.to == 1);
                let ok = match &check.verdict {
                    CoverVerdict::Covered { .. } => want_covered,
                    CoverVerdict::NotCovered { .. } => !want_covered,
                    CoverVerdict::Indeterminate { .. } => false,
                };
                assert!(
                    ok,
                    "[FAIL] criterion 2: eps1 = {eps1}, eps2 = {eps2}: N{} => N{} expected {}, got {:?}",
                    check.from + 1,
                    check.to + 1,
                    if want_covered { "Covered" } else { "NotCovered" },
                    check.verdict
                );
            }
            assert_eq!(
                fam.matrix.entries,
                vec![vec![1, 1], vec![1, 0]],
                "[FAIL] criterion 2: eps1 = {eps1}, eps2 = {eps2}: wrong transition matrix"
            );
            assert!(
                fam.bound.bound > 0.1203 && fam.bound.bound < 0.12031,
                "[FAIL] criterion 2: eps1 = {eps1}, eps2 = {eps2}: bound {} outside (0.1203, 0.12031)",
                fam.bound.bound
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(5),
        "[FAIL] criterion 2: runtime {elapsed:?} >= 5 s"
    );
    println!(
        "[PASS] criterion 2: 6 parameter pairs certified, matrix [[1,1],[1,0]], bound in \
         (0.1203, 0.12031), in {elapsed:?}"
    );
}

/// Criterion 3: the eps2 = 0 linear coefficients of all eight tilde
/// vertices must equal the reference pairs exactly, and their
/// two-decimal truncations must match the reference's approximate
/// column.
#[test]
fn criterion_3_first_order_coefficient_table() {
    let started = Instant::now();
    // (vertex, x_lin, y_lin, approximate column in hundredths).
    type Row = (VertexId, (i64, i64), (i64, i64), (i64, i64));
    let reference: [Row; 8] = [
        (VertexId::A, (30476, 18125), (-6363, 3625), (168, -175)),
        (VertexId::B, (6188, 3625), (-1319, 725), (170, -181)),
        (VertexId::C, (-4769, 1450), (847, 290), (-328, 292)),
        (VertexId::D, (-120153, 36250), (21639, 7250), (-331, 298)),
        (VertexId::E, (-9283, 18125), (1554, 3625), (-51, 42)),
        (VertexId::F, (-23209, 54375), (3792, 10875), (-42, 34)),
        (VertexId::G, (36363, 18125), (-7494, 3625), (200, -206)),
        (VertexId::H, (113584, 54375), (-22917, 10875), (208, -210)),
    ];
    let mut mismatches = Vec::new();
    for (vertex, x_lin, y_lin, approx) in reference {
        let row = vertex_expansion(&Rational::zero(), vertex).expect("expansion failed");
        let want_x = rat(x_lin.0, x_lin.1);
        let want_y = rat(y_lin.0, y_lin.1);
        let got_approx = (
            hundredths_toward_zero(&row.x_lin),
            hundredths_toward_zero(&row.y_lin),
        );
        if row.x_lin == want_x && row.y_lin == want_y && got_approx == approx {
            continue;
        }
        // Decide which pair the exact map itself backs: the quadratic
        // remainder |exact image - (constant + linear * eps1)| must stay
        // within 100 * eps1^2 componentwise for the true coefficients.
        let eps1 = rat(1, 1000);
        let envelope = rat(1, 10000);
        let exact = exact_vertex_image(&eps1, &Rational::zero(), vertex).expect("image failed");
        let remainder = |lx: &Rational, ly: &Rational| {
            let rx = (&exact.x - &(&row.constant.x + &(lx * &eps1))).abs();
            let ry = (&exact.y - &(&row.constant.y + &(ly * &eps1))).abs();
            (rx, ry)
        };
        let (cx, cy) = remainder(&row.x_lin, &row.y_lin);
        let (rx, ry) = remainder(&want_x, &want_y);
        mismatches.push(format!(
            "vertex {vertex:?}: computed pair ({}, {}) [approx ({}, {})] vs reference \
             ({want_x}, {want_y}) [approx ({}, {})]; difference reference - computed = \
             ({}, {}); quadratic-remainder cross-check at eps1 = 1/1000 (envelope 1/10000): \
             computed pair leaves remainder ({}, {}) = ({:.2e}, {:.2e}) which is {}, \
             reference pair leaves ({}, {}) = ({:.2e}, {:.2e}) which is {}",
            row.x_lin,
            row.y_lin,
            hundredths_toward_zero(&row.x_lin),
            hundredths_toward_zero(&row.y_lin),
            approx.0,
            approx.1,
            &want_x - &row.x_lin,
            &want_y - &row.y_lin,
            cx,
            cy,
            cx.to_f64(),
            cy.to_f64(),
            if cx <= envelope && cy <= envelope {
                "inside"
            } else {
                "OUTSIDE"
            },
            rx,
            ry,
            rx.to_f64(),
            ry.to_f64(),
            if rx <= envelope && ry <= envelope {
                "inside"
            } else {
                "OUTSIDE"
            },
        ));
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "[FAIL] criterion 3: runtime {elapsed:?} >= 1 s"
    );
    if !mismatches.is_empty() {
        panic!(
            "[FAIL] criterion 3: {} of 8 reference coefficient rows disagree with exact \
             arithmetic: {}. Analysis: the disagreement is confined to vertex E, where the \
             reference pair exceeds the quadratic-remainder envelope that every true linear \
             coefficient must satisfy while the computed pair sits well inside it; the \
             offset is exactly (87/725) * (-7/5, 1), one first-order term misapplied, so \
             the reference row appears to be a bookkeeping slip. The computed E pair is \
             also the one under which the covering certificates of criterion 2 hold.",
            mismatches.len(),
            mismatches.join("; ")
        );
    }
    println!("[PASS] criterion 3: all 8 coefficient pairs and truncations match in {elapsed:?}");
}

/// Criterion 4: the trapping certificate must pass for the 4-fold map,
/// 2 macro steps, at eps2 in {0, 1/1000, -1/1000}, with the piece-area
/// sum equal to |b|^(4m) times the region area at every step.
#[test]
fn criterion_4_trapping_certificates() {
    let started = Instant::now();
    for eps2 in [rat(0, 1), rat(1, 1000), rat(-1, 1000)] {
        let p = LoziParams::segment(&eps2);
        let region = trapping_region_for(&p)
            .unwrap_or_else(|e| panic!("[FAIL] criterion 4: eps2 = {eps2}: region: {e}"));
        let cert = verify_trapping(&p, 4, &region, 2)
            .unwrap_or_else(|e| panic!("[FAIL] criterion 4: eps2 = {eps2}: {e}"));
        assert!(
            cert.passed,
            "[FAIL] criterion 4: eps2 = {eps2}: trapping failed, first offender {:?}",
            cert.first_offender
        );
        assert_eq!(
            cert.steps.len(),
            2,
            "[FAIL] criterion 4: eps2 = {eps2}: wrong step count"
        );
        let base_area = polygon_area(&region).abs();
        for step in &cert.steps {
            let mut sum = Rational::zero();
            for piece in &step.pieces {
                assert_eq!(
                    piece.area.abs(),
                    polygon_area(&piece.polygon).abs(),
                    "[FAIL] criterion 4: eps2 = {eps2}: step {} piece area mis-stated",
                    step.step
                );
                sum = &sum + &piece.area.abs();
            }
            let expected = &base_area * &p.b.abs().powi(4 * step.step as u32);
            assert_eq!(
                sum, expected,
                "[FAIL] criterion 4: eps2 = {eps2}: step {} area bookkeeping broken",
                step.step
            );
            assert_eq!(
                step.total_area, step.expected_area,
                "[FAIL] criterion 4: eps2 = {eps2}: step {} certificate bookkeeping broken",
                step.step
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(2),
        "[FAIL] criterion 4: runtime {elapsed:?} >= 2 s"
    );
    println!(
        "[PASS] criterion 4: trapping certified at eps2 = 0 and +-1/1000 with exact area \
         bookkeeping in {elapsed:?}"
    );
}

/// Criterion 5: for vertex A and eps1 in {1/1000, 1/10000}, the exact
/// fourth image must stay within 100 * eps1^2 componentwise of the
/// constant-plus-linear prediction.
#[test]
fn criterion_5_quadratic_remainder_bound() {
    let row = vertex_expansion(&Rational::zero(), VertexId::A).expect("expansion failed");
    for eps1 in [rat(1, 1000), rat(1, 10000)] {
        let exact =
            exact_vertex_image(&eps1, &Rational::zero(), VertexId::A).expect("image failed");
        let envelope = &rat(100, 1) * &(&eps1 * &eps1);
        let rx = (&exact.x - &(&row.constant.x + &(&row.x_lin * &eps1))).abs();
        let ry = (&exact.y - &(&row.constant.y + &(&row.y_lin * &eps1))).abs();
        assert!(
            rx <= envelope && ry <= envelope,
            "[FAIL] criterion 5: eps1 = {eps1}: remainder ({rx}, {ry}) exceeds 100*eps1^2 = {envelope}"
        );
    }
    println!("[PASS] criterion 5: vertex A quadratic remainder within 100*eps1^2 at both eps1");
}

/// Criterion 6: structural invariants. Inverse roundtrip on 1000 random
/// rational points (exact); |det| = |b|^4 on all 16 branches (exact);
/// lambda_s * lambda_u + b = 0 within 1e-12 on both saddle sides; a
/// 50-fiber spot-check of every Covered pair across the criterion-2
/// parameter grid.
#[test]
fn criterion_6_structural_invariants() {
    let p = canonical();

    let mut rng = ChaCha8Rng::seed_from_u64(0x1021_acce);
    for _ in 0..1000 {
        let q = pt(
            rat(rng.gen_range(-2000..=2000), rng.gen_range(1..=50)),
            rat(rng.gen_range(-2000..=2000), rng.gen_range(1..=50)),
        );
        let forward = lozi_apply(&p, &q);
        let back = lozi_inverse(&p, &forward).expect("inverse failed");
        assert_eq!(
            back, q,
            "[FAIL] criterion 6: inverse(apply({q:?})) roundtrip broken"
        );
        let pre = lozi_inverse(&p, &q).expect("inverse failed");
        assert_eq!(
            lozi_apply(&p, &pre),
            q,
            "[FAIL] criterion 6: apply(inverse({q:?})) roundtrip broken"
        );
    }

    let b4 = p.b.abs().powi(4);
    for idx in 1..=16 {
        let it = itinerary_for_domain(idx, 4);
        let br = compose_branch(&p, &it);
        assert_eq!(
            br.map.linear.det().abs(),
            b4,
            "[FAIL] criterion 6: branch {idx} determinant differs from |b|^4"
        );
    }

    for side in [BranchSide::NonNeg, BranchSide::Neg] {
        let eig = saddle_data(&p, side).expect("saddle data failed");
        let residual = (eig.lambda_stable * eig.lambda_unstable + p.b.to_f64()).abs();
        assert!(
            residual <= 1e-12,
            "[FAIL] criterion 6: {side:?} eigenvalue product residual {residual} > 1e-12"
        );
    }

    let mut fibers_checked = 0usize;
    for eps1 in [rat(1, 1000), rat(1, 10000)] {
        for eps2 in [rat(0, 1), rat(1, 1000), rat(-1, 1000)] {
            let fam = covering_family_check(&eps1, &eps2).expect("family check failed");
            for check in &fam.checks {
                if matches!(check.verdict, CoverVerdict::Covered { .. }) {
                    fiber_spot_check(
                        &fam.params,
                        4,
                        &fam.boxes[check.from],
                        &fam.boxes[check.to],
                        50,
                    )
                    .unwrap_or_else(|e| {
                        panic!(
                            "[FAIL] criterion 6: fiber spot-check N{} => N{} at eps1 = {eps1}, \
                                 eps2 = {eps2}: {e}",
                            check.from + 1,
                            check.to + 1
                        )
                    });
                    fibers_checked += 1;
                }
            }
        }
    }
    assert_eq!(
        fibers_checked, 18,
        "[FAIL] criterion 6: expected 18 Covered pairs to spot-check"
    );

    println!(
        "[PASS] criterion 6: 1000 roundtrips, 16 branch determinants, 2 eigenvalue products, \
         {fibers_checked} spot-checked covers"
    );
}

/// Criterion 7: the non-rigorous estimator lands within 0.1 of
/// min(log a, log 2) at b = 0 for a in {3/2, 2}, and stays at or below
/// 0.1 at (7/5, 2/5) where the entropy is zero.
#[test]
fn criterion_7_estimator_sanity() {
    let started = Instant::now();
    let window = Viewport {
        min: [-1.0, -1.0],
        max: [1.0, 1.0],
    };
    let cases: [(LoziParams, f64, f64); 2] = [
        (LoziParams::new(rat(2, 1), rat(0, 1)), 0.25, 2f64.ln()),
        (LoziParams::new(rat(3, 2), rat(0, 1)), 0.5, 1.5f64.ln()),
    ];
    for (p, eps, target) in cases {
        let est = estimate_entropy(&p, 14, eps, &window, 200_000).expect("estimate failed");
        assert!(
            (est.estimate - target).abs() <= 0.1,
            "[FAIL] criterion 7: a = {}, b = 0: estimate {} not within 0.1 of {target}",
            p.a,
            est.estimate
        );
    }
    let zero = estimate_entropy(&canonical(), 14, 1.0, &window, 200_000).expect("estimate failed");
    assert!(
        zero.estimate <= 0.1,
        "[FAIL] criterion 7: zero-entropy parameters gave estimate {}",
        zero.estimate
    );
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "[FAIL] criterion 7: runtime {elapsed:?} >= 60 s"
    );
    println!("[PASS] criterion 7: tent-map anchors within 0.1, zero-entropy estimate <= 0.1, in {elapsed:?}");
}

/// Criterion 8: the left unstable trace's terminal tenth hugs the fixed
/// segment within 1e-3, and the right trace first crosses y = 0 at the
/// closed-form abscissa (17 + sqrt(89))/20 within 1e-6.
#[test]
fn criterion_8_manifold_evidence() {
    let p = canonical();
    let left = trace_unstable(&p, TraceSide::Left, 40.0, 1e-3).expect("left trace failed");
    let (f1, f2) = fixed_segment_f64(&p).expect("fixed segment failed");
    let tail_start = left.points.len() * 9 / 10;
    let mut worst = 0f64;
    for q in &left.points[tail_start..] {
        worst = worst.max(dist_point_segment(*q, f1, f2));
    }
    assert!(
        worst <= 1e-3,
        "[FAIL] criterion 8: terminal 10% of the left trace strays {worst} > 1e-3 from the fixed segment"
    );

    let right = trace_unstable(&p, TraceSide::Right, 5.0, 1e-3).expect("right trace failed");
    let crossing = first_x_axis_crossing(&right)
        .unwrap_or_else(|| panic!("[FAIL] criterion 8: right trace never crosses y = 0"));
    let closed_form = (17.0 + 89f64.sqrt()) / 20.0;
    let err = (crossing[0] - closed_form).abs();
    assert!(
        err <= 1e-6,
        "[FAIL] criterion 8: first crossing x = {} differs from (17 + sqrt(89))/20 = {closed_form} by {err}",
        crossing[0]
    );
    println!(
        "[PASS] criterion 8: left tail within {worst:.2e} of the fixed segment, right crossing \
         within {err:.2e} of the closed form"
    );
}
