//! The nonconvex AC optimal power flow model: objective, branch flows,
//! nodal balances, feasibility checks, and a locally optimal dispatch that
//! serves as the branch-and-bound upper bound.

pub mod nlp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{Branch, Network};

#[derive(Debug, Error, PartialEq)]
pub enum AcError {
    #[error("vector length {got} does not match expected {want} ({what})")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("local solve failed: {0}")]
    LocalSolveFailed(String),
}

/// A candidate AC solution: per-bus voltage magnitude (pu) and angle (rad),
/// per-generator dispatch (pu).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
}

impl OperatingPoint {
    /// Flat start: V = 1 clipped into bounds, angles zero, dispatch at the
    /// midpoint of its box.
    pub fn flat_start(net: &Network) -> Self {
        OperatingPoint {
            v: net
                .buses
                .iter()
                .map(|b| 1.0f64.clamp(b.v_min, b.v_max))
                .collect(),
            theta: vec![0.0; net.buses.len()],
            pg: net
                .generators
                .iter()
                .map(|g| 0.5 * (g.p_min + g.p_max))
                .collect(),
            qg: net
                .generators
                .iter()
                .map(|g| 0.5 * (g.q_min + g.q_max))
                .collect(),
        }
    }

    fn check_dims(&self, net: &Network) -> Result<(), AcError> {
        let checks = [
            ("v", self.v.len(), net.buses.len()),
            ("theta", self.theta.len(), net.buses.len()),
            ("pg", self.pg.len(), net.generators.len()),
            ("qg", self.qg.len(), net.generators.len()),
        ];
        for (what, got, want) in checks {
            if got != want {
                return Err(AcError::LengthMismatch { what, got, want });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub max_balance_violation: f64,
    pub max_bound_violation: f64,
    pub max_thermal_violation: f64,
    pub is_feasible: bool,
}

/// Generation cost sum c2*pg^2 + c1*pg + c0 in $/hr (per-unit coefficients).
pub fn cost(net: &Network, pg: &[f64]) -> Result<f64, AcError> {
    if pg.len() != net.generators.len() {
        return Err(AcError::LengthMismatch {
            what: "pg",
            got: pg.len(),
            want: net.generators.len(),
        });
    }
    Ok(net
        .generators
        .iter()
        .zip(pg)
        .map(|(g, &p)| g.c2 * p * p + g.c1 * p + g.c0)
        .sum())
}

/// Branch flows (P_lm, Q_lm, P_ml, Q_ml) from scalar endpoint state.
/// `thd` is theta_from - theta_to; the tap and shift of the branch are
/// folded in per the transformer Pi-model.
pub fn branch_flow_parts(br: &Branch, v_from: f64, v_to: f64, thd: f64) -> (f64, f64, f64, f64) {
    let (g, b, bc) = (br.g, br.b, br.b_c);
    let u = v_from / br.tap;
    let d = thd - br.shift;
    let (sin_d, cos_d) = d.sin_cos();
    let a = u * v_to * cos_d;
    let bb = u * v_to * sin_d;
    let p_fwd = g * u * u - g * a - b * bb;
    let q_fwd = -(b + bc / 2.0) * u * u + b * a - g * bb;
    let p_rev = g * v_to * v_to - g * a + b * bb;
    let q_rev = -(b + bc / 2.0) * v_to * v_to + b * a + g * bb;
    (p_fwd, q_fwd, p_rev, q_rev)
}

/// Flows on one branch of the network at an operating point.
pub fn branch_flow(
    net: &Network,
    pt: &OperatingPoint,
    branch: usize,
) -> Result<(f64, f64, f64, f64), AcError> {
    pt.check_dims(net)?;
    let br = &net.branches[branch];
    let fi = net.bus_index(br.from_bus).expect("valid branch endpoint");
    let ti = net.bus_index(br.to_bus).expect("valid branch endpoint");
    Ok(branch_flow_parts(
        br,
        pt.v[fi],
        pt.v[ti],
        pt.theta[fi] - pt.theta[ti],
    ))
}

/// Per-bus active/reactive balance residuals. Zero at any AC-feasible point:
/// injections minus shunt draw minus incident flows.
pub fn balance_residual(net: &Network, pt: &OperatingPoint) -> Result<Vec<(f64, f64)>, AcError> {
    pt.check_dims(net)?;
    let nb = net.buses.len();
    let mut res: Vec<(f64, f64)> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, bus)| {
            (
                -bus.p_d - bus.g_sh * pt.v[i] * pt.v[i],
                -bus.q_d + bus.b_sh * pt.v[i] * pt.v[i],
            )
        })
        .collect();
    for (g, gen) in net.generators.iter().enumerate() {
        let i = net.bus_index(gen.bus).expect("valid generator bus");
        res[i].0 += pt.pg[g];
        res[i].1 += pt.qg[g];
    }
    for (l, br) in net.branches.iter().enumerate() {
        let fi = net.bus_index(br.from_bus).expect("valid branch endpoint");
        let ti = net.bus_index(br.to_bus).expect("valid branch endpoint");
        let (p_fwd, q_fwd, p_rev, q_rev) = branch_flow(net, pt, l)?;
        res[fi].0 -= p_fwd;
        res[fi].1 -= q_fwd;
        res[ti].0 -= p_rev;
        res[ti].1 -= q_rev;
    }
    debug_assert_eq!(res.len(), nb);
    Ok(res)
}

/// Aggregates bound, reference-angle, balance and thermal violations.
pub fn check_feasible(net: &Network, pt: &OperatingPoint, tol: f64) -> Result<FeasibilityReport, AcError> {
    assert!(tol > 0.0, "tolerance must be positive");
    pt.check_dims(net)?;

    let mut bound: f64 = 0.0;
    for (i, bus) in net.buses.iter().enumerate() {
        bound = bound.max(bus.v_min - pt.v[i]).max(pt.v[i] - bus.v_max);
    }
    for (g, gen) in net.generators.iter().enumerate() {
        bound = bound
            .max(gen.p_min - pt.pg[g])
            .max(pt.pg[g] - gen.p_max)
            .max(gen.q_min - pt.qg[g])
            .max(pt.qg[g] - gen.q_max);
    }
    for br in net.branches.iter() {
        let fi = net.bus_index(br.from_bus).expect("valid branch endpoint");
        let ti = net.bus_index(br.to_bus).expect("valid branch endpoint");
        let thd = pt.theta[fi] - pt.theta[ti];
        bound = bound.max(br.ang_min_raw - thd).max(thd - br.ang_max_raw);
    }
    bound = bound.max(pt.theta[net.ref_bus()].abs());

    let mut balance: f64 = 0.0;
    for (dp, dq) in balance_residual(net, pt)? {
        balance = balance.max(dp.abs()).max(dq.abs());
    }

    let mut thermal: f64 = 0.0;
    for (l, br) in net.branches.iter().enumerate() {
        if br.s_max > 0.0 {
            let (p_fwd, q_fwd, p_rev, q_rev) = branch_flow(net, pt, l)?;
            let fwd = (p_fwd * p_fwd + q_fwd * q_fwd).sqrt() - br.s_max;
            let rev = (p_rev * p_rev + q_rev * q_rev).sqrt() - br.s_max;
            thermal = thermal.max(fwd).max(rev);
        }
    }

    Ok(FeasibilityReport {
        max_balance_violation: balance,
        max_bound_violation: bound.max(0.0),
        max_thermal_violation: thermal.max(0.0),
        is_feasible: balance <= tol && bound <= tol && thermal <= tol,
    })
}

/// Locally optimal AC dispatch and its objective: the branch-and-bound
/// upper bound. Interior-point on the polar NLP from a flat start (or the
/// supplied start), with a penalized-Newton homotopy fallback.
pub fn local_solve(
    net: &Network,
    start: Option<&OperatingPoint>,
) -> Result<(OperatingPoint, f64), AcError> {
    let start = match start {
        Some(s) => {
            s.check_dims(net)?;
            s.clone()
        }
        None => OperatingPoint::flat_start(net),
    };
    let pt = nlp::solve(net, &start)?;
    let report = check_feasible(net, &pt, 1e-6)?;
    if !report.is_feasible {
        return Err(AcError::LocalSolveFailed(format!(
            "solution violates constraints: balance {:.2e}, bounds {:.2e}, thermal {:.2e}",
            report.max_balance_violation, report.max_bound_violation, report.max_thermal_violation
        )));
    }
    let obj = cost(net, &pt.pg)?;
    Ok((pt, obj))
}
