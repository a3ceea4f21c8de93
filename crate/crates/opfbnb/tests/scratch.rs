use opfbnb::acopf;
use opfbnb::case::parse_case;
use opfbnb::qc::{build_qc, BoundBox, QcOptions};
use opfbnb::solver::{solve_convex, ConvexOptions};

#[test]
fn case3_anchor_scratch() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/pglib_opf_case3_lmbd.m"
    ))
    .unwrap();
    let net = parse_case(&text).unwrap();
    assert!(net.validate().is_empty());

    let t0 = std::time::Instant::now();
    let (pt, obj) = acopf::local_solve(&net, None).unwrap();
    println!("AC local objective: {obj:.4}  ({:?})", t0.elapsed());
    println!("dispatch: pg = {:?}", pt.pg);
    println!("v = {:?}", pt.v);

    let t1 = std::time::Instant::now();
    let qc = build_qc(&net, &BoundBox::from_network(&net), QcOptions::default()).unwrap();
    println!(
        "qc program: {} vars, {} lin rows, {} quad, {} disks, {} cones",
        qc.program.num_vars(),
        qc.program.lin.len(),
        qc.program.quad.len(),
        qc.program.disks.len(),
        qc.program.cones.len()
    );
    let out = solve_convex(&qc.program, ConvexOptions::default());
    println!(
        "QC bound: {:?} {:.4} in {} pivots {} rounds ({:?})",
        out.status,
        out.objective,
        out.iterations,
        out.rounds,
        t1.elapsed()
    );
    println!("gap: {:.4}%", (obj - out.objective) / obj * 100.0);

    // lifted AC point must satisfy the relaxation
    let lifted = opfbnb::qc::lift_point(&net, &qc, &pt.v, &pt.theta, &pt.pg, &pt.qg);
    println!("containment violation: {:.3e}", qc.program.max_violation(&lifted));
    println!(
        "objective agreement: {:.3e}",
        (qc.program.objective_value(&lifted) - obj).abs()
    );
}
