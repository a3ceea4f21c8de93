//! Primal-dual interior-point solver for the polar AC-OPF NLP, with a
//! penalized-Newton homotopy fallback for starts the barrier method cannot
//! digest. Dense KKT systems: the networks here stay well under a hundred
//! buses, so factorization cost is irrelevant next to assembly.

use crate::case::{Branch, Network};
use crate::solver::linalg::{lu_factor, DenseMat};

use super::{AcError, OperatingPoint};

const MAX_ITERS: usize = 200;
const XI: f64 = 0.99995; // fraction-to-boundary
const SIGMA: f64 = 0.1; // centering
const FEAS_TOL: f64 = 1e-9;
const GRAD_TOL: f64 = 1e-8;
const COMP_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;

/// Value, gradient and Hessian of a branch flow with respect to the local
/// frame (v_from, v_to, theta_from, theta_to).
#[derive(Debug, Clone, Copy, Default)]
struct FlowDeriv {
    val: f64,
    grad: [f64; 4],
    hess: [[f64; 4]; 4],
}

impl FlowDeriv {
    fn axpy(&mut self, c: f64, other: &FlowDeriv) {
        self.val += c * other.val;
        for i in 0..4 {
            self.grad[i] += c * other.grad[i];
            for j in 0..4 {
                self.hess[i][j] += c * other.hess[i][j];
            }
        }
    }
}

/// All four flows of one branch: [P_fwd, Q_fwd, P_rev, Q_rev].
fn flow_derivs(br: &Branch, vl: f64, vm: f64, tl: f64, tm: f64) -> [FlowDeriv; 4] {
    let tap = br.tap;
    let (g, b, bc) = (br.g, br.b, br.b_c);
    let u = vl / tap;
    let d = (tl - tm) - br.shift;
    let (sd, cd) = d.sin_cos();

    // A = u*vm*cos(d), B = u*vm*sin(d)
    let a_val = u * vm * cd;
    let b_val = u * vm * sd;
    let a = FlowDeriv {
        val: a_val,
        grad: [vm * cd / tap, u * cd, -b_val, b_val],
        hess: [
            [0.0, cd / tap, -vm * sd / tap, vm * sd / tap],
            [cd / tap, 0.0, -u * sd, u * sd],
            [-vm * sd / tap, -u * sd, -a_val, a_val],
            [vm * sd / tap, u * sd, a_val, -a_val],
        ],
    };
    let bb = FlowDeriv {
        val: b_val,
        grad: [vm * sd / tap, u * sd, a_val, -a_val],
        hess: [
            [0.0, sd / tap, vm * cd / tap, -vm * cd / tap],
            [sd / tap, 0.0, u * cd, -u * cd],
            [vm * cd / tap, u * cd, -b_val, b_val],
            [-vm * cd / tap, -u * cd, b_val, -b_val],
        ],
    };
    let mut u2 = FlowDeriv::default();
    u2.val = u * u;
    u2.grad[0] = 2.0 * u / tap;
    u2.hess[0][0] = 2.0 / (tap * tap);
    let mut vm2 = FlowDeriv::default();
    vm2.val = vm * vm;
    vm2.grad[1] = 2.0 * vm;
    vm2.hess[1][1] = 2.0;

    let mut p_fwd = FlowDeriv::default();
    p_fwd.axpy(g, &u2);
    p_fwd.axpy(-g, &a);
    p_fwd.axpy(-b, &bb);

    let mut q_fwd = FlowDeriv::default();
    q_fwd.axpy(-(b + bc / 2.0), &u2);
    q_fwd.axpy(b, &a);
    q_fwd.axpy(-g, &bb);

    let mut p_rev = FlowDeriv::default();
    p_rev.axpy(g, &vm2);
    p_rev.axpy(-g, &a);
    p_rev.axpy(b, &bb);

    let mut q_rev = FlowDeriv::default();
    q_rev.axpy(-(b + bc / 2.0), &vm2);
    q_rev.axpy(b, &a);
    q_rev.axpy(g, &bb);

    [p_fwd, q_fwd, p_rev, q_rev]
}

#[derive(Debug, Clone, Copy)]
enum Ineq {
    VarHi { var: usize, hi: f64 },
    VarLo { var: usize, lo: f64 },
    AngHi { l: usize, hi: f64 },
    AngLo { l: usize, lo: f64 },
    /// P^2 + Q^2 <= s_max^2, forward (dir 0) or reverse (dir 1).
    Thermal { l: usize, dir: usize },
}

struct Model<'a> {
    net: &'a Network,
    nb: usize,
    ng: usize,
    n: usize,
    neq: usize,
    ineqs: Vec<Ineq>,
    /// Branch endpoint bus indices.
    ends: Vec<(usize, usize)>,
    /// Generator bus indices.
    gen_bus: Vec<usize>,
    /// Variables pinned by equal bounds, enforced as equality rows.
    fixed: Vec<(usize, f64)>,
    s_f: f64,
}

/// Variables fixed by the case data (p_min == p_max and the like) become
/// equality rows so the barrier never sees an empty interior.
const FIX_EPS: f64 = 1e-12;

impl<'a> Model<'a> {
    fn new(net: &'a Network) -> Self {
        let nb = net.buses.len();
        let ng = net.generators.len();
        let n = 2 * nb + 2 * ng;
        let ends: Vec<(usize, usize)> = net
            .branches
            .iter()
            .map(|br| {
                (
                    net.bus_index(br.from_bus).expect("valid endpoint"),
                    net.bus_index(br.to_bus).expect("valid endpoint"),
                )
            })
            .collect();
        let gen_bus: Vec<usize> = net
            .generators
            .iter()
            .map(|g| net.bus_index(g.bus).expect("valid generator bus"))
            .collect();

        let mut bounds: Vec<(usize, f64, f64)> = Vec::new();
        for (i, bus) in net.buses.iter().enumerate() {
            bounds.push((i, bus.v_min, bus.v_max));
        }
        for (g, gen) in net.generators.iter().enumerate() {
            bounds.push((2 * nb + g, gen.p_min, gen.p_max));
            bounds.push((2 * nb + ng + g, gen.q_min, gen.q_max));
        }

        let mut fixed: Vec<(usize, f64)> = Vec::new();
        let mut ineqs = Vec::new();
        for (var, lo, hi) in bounds {
            if hi - lo <= FIX_EPS {
                fixed.push((var, 0.5 * (lo + hi)));
            } else {
                if hi.is_finite() {
                    ineqs.push(Ineq::VarHi { var, hi });
                }
                if lo.is_finite() {
                    ineqs.push(Ineq::VarLo { var, lo });
                }
            }
        }
        for (l, br) in net.branches.iter().enumerate() {
            if br.ang_max_raw.is_finite() {
                ineqs.push(Ineq::AngHi {
                    l,
                    hi: br.ang_max_raw,
                });
            }
            if br.ang_min_raw.is_finite() {
                ineqs.push(Ineq::AngLo {
                    l,
                    lo: br.ang_min_raw,
                });
            }
            if br.s_max > 0.0 {
                ineqs.push(Ineq::Thermal { l, dir: 0 });
                ineqs.push(Ineq::Thermal { l, dir: 1 });
            }
        }

        // Objective scaling keeps the duals O(1): divide by the largest
        // marginal cost at midpoint dispatch.
        let mut marginal: f64 = 1.0;
        for g in &net.generators {
            let mid = 0.5 * (g.p_min + g.p_max);
            marginal = marginal.max((g.c1 + 2.0 * g.c2 * mid).abs());
        }
        let neq = 2 * nb + 1 + fixed.len();
        Model {
            net,
            nb,
            ng,
            n,
            neq,
            ineqs,
            ends,
            gen_bus,
            fixed,
            s_f: 1.0 / marginal,
        }
    }

    fn x_from_point(&self, pt: &OperatingPoint) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n);
        x.extend_from_slice(&pt.v);
        x.extend_from_slice(&pt.theta);
        x.extend_from_slice(&pt.pg);
        x.extend_from_slice(&pt.qg);
        x
    }

    fn point_from_x(&self, x: &[f64]) -> OperatingPoint {
        let nb = self.nb;
        let ng = self.ng;
        let mut pt = OperatingPoint {
            v: x[0..nb].to_vec(),
            theta: x[nb..2 * nb].to_vec(),
            pg: x[2 * nb..2 * nb + ng].to_vec(),
            qg: x[2 * nb + ng..2 * nb + 2 * ng].to_vec(),
        };
        // pin the reference angle exactly
        let shift = pt.theta[self.net.ref_bus()];
        for t in &mut pt.theta {
            *t -= shift;
        }
        pt
    }
}

impl<'a> Model<'a> {
    fn objective(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let nb = self.nb;
        let mut f = 0.0;
        let mut df = vec![0.0; self.n];
        for (g, gen) in self.net.generators.iter().enumerate() {
            let p = x[2 * nb + g];
            f += gen.c2 * p * p + gen.c1 * p + gen.c0;
            df[2 * nb + g] = self.s_f * (2.0 * gen.c2 * p + gen.c1);
        }
        (f, df)
    }
}

struct Eval {
    f_raw: f64,
    df: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<Vec<(usize, f64)>>,
    h: Vec<f64>,
    dh: Vec<Vec<(usize, f64)>>,
    flows: Vec<[FlowDeriv; 4]>,
}

fn evaluate(model: &Model, x: &[f64]) -> Eval {
    let nb = model.nb;
    let net = model.net;
    let (f_raw, df) = model.objective(x);

    let flows: Vec<[FlowDeriv; 4]> = net
        .branches
        .iter()
        .enumerate()
        .map(|(l, br)| {
            let (fi, ti) = model.ends[l];
            flow_derivs(br, x[fi], x[ti], x[nb + fi], x[nb + ti])
        })
        .collect();

    let mut g = vec![0.0; model.neq];
    let mut dg: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.neq];
    // active balance rows 0..nb, reactive nb..2nb
    for (i, bus) in net.buses.iter().enumerate() {
        let vi = x[i];
        g[i] = bus.g_sh * vi * vi + bus.p_d;
        g[nb + i] = -bus.b_sh * vi * vi + bus.q_d;
        if bus.g_sh != 0.0 {
            dg[i].push((i, 2.0 * bus.g_sh * vi));
        }
        if bus.b_sh != 0.0 {
            dg[nb + i].push((i, -2.0 * bus.b_sh * vi));
        }
    }
    for (gi, _) in net.generators.iter().enumerate() {
        let i = model.gen_bus[gi];
        g[i] -= x[2 * nb + gi];
        dg[i].push((2 * nb + gi, -1.0));
        g[nb + i] -= x[2 * nb + model.ng + gi];
        dg[nb + i].push((2 * nb + model.ng + gi, -1.0));
    }
    for (l, _) in net.branches.iter().enumerate() {
        let (fi, ti) = model.ends[l];
        let idx = [fi, ti, nb + fi, nb + ti];
        let fl = &flows[l];
        g[fi] += fl[0].val;
        g[nb + fi] += fl[1].val;
        g[ti] += fl[2].val;
        g[nb + ti] += fl[3].val;
        for k in 0..4 {
            dg[fi].push((idx[k], fl[0].grad[k]));
            dg[nb + fi].push((idx[k], fl[1].grad[k]));
            dg[ti].push((idx[k], fl[2].grad[k]));
            dg[nb + ti].push((idx[k], fl[3].grad[k]));
        }
    }
    // reference angle row
    let ref_row = 2 * nb;
    let ref_bus = net.ref_bus();
    g[ref_row] = x[nb + ref_bus];
    dg[ref_row].push((nb + ref_bus, 1.0));
    // fixed-variable rows
    for (k, &(var, val)) in model.fixed.iter().enumerate() {
        g[ref_row + 1 + k] = x[var] - val;
        dg[ref_row + 1 + k].push((var, 1.0));
    }

    let mut h = Vec::with_capacity(model.ineqs.len());
    let mut dh: Vec<Vec<(usize, f64)>> = Vec::with_capacity(model.ineqs.len());
    for ineq in &model.ineqs {
        match *ineq {
            Ineq::VarHi { var, hi } => {
                h.push(x[var] - hi);
                dh.push(vec![(var, 1.0)]);
            }
            Ineq::VarLo { var, lo } => {
                h.push(lo - x[var]);
                dh.push(vec![(var, -1.0)]);
            }
            Ineq::AngHi { l, hi } => {
                let (fi, ti) = model.ends[l];
                h.push(x[nb + fi] - x[nb + ti] - hi);
                dh.push(vec![(nb + fi, 1.0), (nb + ti, -1.0)]);
            }
            Ineq::AngLo { l, lo } => {
                let (fi, ti) = model.ends[l];
                h.push(lo - (x[nb + fi] - x[nb + ti]));
                dh.push(vec![(nb + fi, -1.0), (nb + ti, 1.0)]);
            }
            Ineq::Thermal { l, dir } => {
                let (fi, ti) = model.ends[l];
                let idx = [fi, ti, nb + fi, nb + ti];
                let s_max = net.branches[l].s_max;
                let (p, q) = (&flows[l][2 * dir], &flows[l][2 * dir + 1]);
                h.push(p.val * p.val + q.val * q.val - s_max * s_max);
                let mut row = Vec::with_capacity(4);
                for k in 0..4 {
                    row.push((idx[k], 2.0 * (p.val * p.grad[k] + q.val * q.grad[k])));
                }
                dh.push(row);
            }
        }
    }

    Eval {
        f_raw,
        df,
        g,
        dg,
        h,
        dh,
        flows,
    }
}

/// Hessian of the Lagrangian s_f*f + lambda'g + mu'h in dense form.
fn lagrangian_hessian(model: &Model, ev: &Eval, lam: &[f64], mu: &[f64]) -> DenseMat {
    let nb = model.nb;
    let net = model.net;
    let mut hmat = DenseMat::zeros(model.n, model.n);
    for (g, gen) in net.generators.iter().enumerate() {
        *hmat.at_mut(2 * nb + g, 2 * nb + g) += model.s_f * 2.0 * gen.c2;
    }
    for (i, bus) in net.buses.iter().enumerate() {
        *hmat.at_mut(i, i) += lam[i] * 2.0 * bus.g_sh - lam[nb + i] * 2.0 * bus.b_sh;
    }
    for (l, _) in net.branches.iter().enumerate() {
        let (fi, ti) = model.ends[l];
        let idx = [fi, ti, nb + fi, nb + ti];
        let w = [lam[fi], lam[nb + fi], lam[ti], lam[nb + ti]];
        let fl = &ev.flows[l];
        for (k, flow) in fl.iter().enumerate() {
            if w[k] != 0.0 {
                for a in 0..4 {
                    for b in 0..4 {
                        *hmat.at_mut(idx[a], idx[b]) += w[k] * flow.hess[a][b];
                    }
                }
            }
        }
    }
    for (j, ineq) in model.ineqs.iter().enumerate() {
        if let Ineq::Thermal { l, dir } = *ineq {
            let m = mu[j];
            if m == 0.0 {
                continue;
            }
            let (fi, ti) = model.ends[l];
            let idx = [fi, ti, nb + fi, nb + ti];
            let (p, q) = (&ev.flows[l][2 * dir], &ev.flows[l][2 * dir + 1]);
            for a in 0..4 {
                for b in 0..4 {
                    let v = 2.0
                        * (p.grad[a] * p.grad[b]
                            + p.val * p.hess[a][b]
                            + q.grad[a] * q.grad[b]
                            + q.val * q.hess[a][b]);
                    *hmat.at_mut(idx[a], idx[b]) += m * v;
                }
            }
        }
    }
    hmat
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// One interior-point run from `start`. Returns the solution point or a
/// description of why it stalled.
fn ipm(model: &Model, start: &OperatingPoint) -> Result<OperatingPoint, String> {
    let n = model.n;
    let neq = model.neq;
    let ni = model.ineqs.len();
    let mut x = model.x_from_point(start);
    let mut ev = evaluate(model, &x);

    let z0 = 1.0;
    let mut z: Vec<f64> = ev.h.iter().map(|&hi| (-hi).max(z0)).collect();
    let mut mu: Vec<f64> = z.iter().map(|&zi| 1.0 / zi).collect();
    let mut lam = vec![0.0; neq];
    let mut gamma = 1.0;
    let mut f_prev = model.s_f * ev.f_raw;
    let mut reg = 0.0;

    for _iter in 0..MAX_ITERS {
        // residuals and convergence
        let mut lx = ev.df.clone();
        for (k, row) in ev.dg.iter().enumerate() {
            for &(var, c) in row {
                lx[var] += lam[k] * c;
            }
        }
        for (j, row) in ev.dh.iter().enumerate() {
            for &(var, c) in row {
                lx[var] += mu[j] * c;
            }
        }
        let maxh = ev.h.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let feascond =
            inf_norm(&ev.g).max(maxh.max(0.0)) / (1.0 + inf_norm(&x).max(inf_norm(&z)));
        let gradcond = inf_norm(&lx) / (1.0 + inf_norm(&lam).max(inf_norm(&mu)));
        let comp: f64 = z.iter().zip(&mu).map(|(a, b)| a * b).sum();
        let compcond = comp / (1.0 + inf_norm(&x));
        let f_now = model.s_f * ev.f_raw;
        let costcond = (f_now - f_prev).abs() / (1.0 + f_prev.abs());
        f_prev = f_now;
        if feascond < FEAS_TOL && gradcond < GRAD_TOL && compcond < COMP_TOL && costcond < COST_TOL
        {
            return Ok(model.point_from_x(&x));
        }

        // Newton step on the reduced KKT system
        // M = H + dh' diag(mu/z) dh ; rhs_x = -(Lx + dh'*(1/z)(gamma + mu.*h))
        let mut hmat = lagrangian_hessian(model, &ev, &lam, &mu);
        for (j, row) in ev.dh.iter().enumerate() {
            let w = mu[j] / z[j];
            for &(va, ca) in row {
                for &(vb, cb) in row {
                    *hmat.at_mut(va, vb) += w * ca * cb;
                }
            }
        }
        let mut rhs_x = lx.clone();
        for (j, row) in ev.dh.iter().enumerate() {
            let c = (gamma + mu[j] * ev.h[j]) / z[j];
            for &(var, co) in row {
                rhs_x[var] += co * c;
            }
        }

        let dim = n + neq;
        let mut kkt = DenseMat::zeros(dim, dim);
        for r in 0..n {
            for c in 0..n {
                *kkt.at_mut(r, c) = hmat.at(r, c);
            }
            *kkt.at_mut(r, r) += reg;
        }
        for (k, row) in ev.dg.iter().enumerate() {
            for &(var, co) in row {
                *kkt.at_mut(var, n + k) += co;
                *kkt.at_mut(n + k, var) += co;
            }
        }
        let mut rhs = vec![0.0; dim];
        for i in 0..n {
            rhs[i] = -rhs_x[i];
        }
        for k in 0..neq {
            rhs[n + k] = -ev.g[k];
        }
        let lu = match lu_factor(&kkt) {
            Ok(lu) => lu,
            Err(_) => {
                reg = if reg == 0.0 { 1e-8 } else { reg * 100.0 };
                if reg > 1.0 {
                    return Err("KKT matrix stays singular under regularization".into());
                }
                continue;
            }
        };
        let mut sol = rhs;
        lu.solve(&mut sol);
        if sol.iter().any(|v| !v.is_finite()) {
            reg = if reg == 0.0 { 1e-8 } else { reg * 100.0 };
            if reg > 1.0 {
                return Err("KKT solve produced non-finite step".into());
            }
            continue;
        }
        let dx = &sol[0..n];
        let dlam = &sol[n..n + neq];

        let mut dz = vec![0.0; ni];
        for j in 0..ni {
            let mut dhdx = 0.0;
            for &(var, c) in &ev.dh[j] {
                dhdx += c * dx[var];
            }
            dz[j] = -ev.h[j] - z[j] - dhdx;
        }
        let dmu: Vec<f64> = (0..ni)
            .map(|j| -mu[j] + (gamma - mu[j] * dz[j]) / z[j])
            .collect();

        let mut alpha_p = 1.0f64;
        for j in 0..ni {
            if dz[j] < 0.0 {
                alpha_p = alpha_p.min(-XI * z[j] / dz[j]);
            }
        }
        let mut alpha_d = 1.0f64;
        for j in 0..ni {
            if dmu[j] < 0.0 {
                alpha_d = alpha_d.min(-XI * mu[j] / dmu[j]);
            }
        }

        // Plain step first; halve while both the equality residual and the
        // barrier objective get worse (a coarse filter acceptance).
        let g_norm = inf_norm(&ev.g);
        let barrier = |f_s: f64, zv: &[f64]| -> f64 {
            f_s - gamma * zv.iter().map(|&v| v.max(1e-300).ln()).sum::<f64>()
        };
        let bar0 = barrier(f_now, &z);
        let mut accepted = None;
        let mut alpha = alpha_p;
        for _ in 0..6 {
            let x_try: Vec<f64> = x.iter().zip(dx).map(|(xv, dv)| xv + alpha * dv).collect();
            let z_try: Vec<f64> = z.iter().zip(&dz).map(|(zv, dv)| zv + alpha * dv).collect();
            let ev_try = evaluate(model, &x_try);
            let g_try = inf_norm(&ev_try.g);
            let bar_try = barrier(model.s_f * ev_try.f_raw, &z_try);
            if g_try <= g_norm * (1.0 - 1e-6 * alpha) + 1e-12
                || bar_try <= bar0 - 1e-12
                || g_try <= FEAS_TOL
            {
                accepted = Some((x_try, z_try, ev_try));
                break;
            }
            alpha *= 0.5;
        }
        let (x_new, z_new, ev_new) = match accepted {
            Some(t) => t,
            None => {
                // fall back to the full fraction-to-boundary step
                let x_try: Vec<f64> = x
                    .iter()
                    .zip(dx)
                    .map(|(xv, dv)| xv + alpha_p * dv)
                    .collect();
                let z_try: Vec<f64> =
                    z.iter().zip(&dz).map(|(zv, dv)| zv + alpha_p * dv).collect();
                let ev_try = evaluate(model, &x_try);
                (x_try, z_try, ev_try)
            }
        };
        x = x_new;
        z = z_new;
        ev = ev_new;
        for j in 0..ni {
            mu[j] += alpha_d * dmu[j];
        }
        for k in 0..neq {
            lam[k] += alpha_d * dlam[k];
        }
        gamma = SIGMA * z.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() / (ni.max(1) as f64);
    }
    Err(format!("no convergence in {MAX_ITERS} iterations"))
}

/// Penalized Newton homotopy: minimize s_f*f + rho/2 ||g||^2 + rho/2 ||h+||^2
/// with a log barrier on the simple bounds, ramping rho. Used only to rescue
/// starts the interior-point method rejects.
fn homotopy(model: &Model, start: &OperatingPoint) -> OperatingPoint {
    let n = model.n;
    let mut x = model.x_from_point(start);
    let beta = 1e-6;
    let mut rho = 10.0;
    while rho <= 1e6 {
        for _ in 0..30 {
            let ev = evaluate(model, &x);
            // gradient and Gauss-Newton Hessian
            let mut grad = ev.df.clone();
            let mut hmat = lagrangian_hessian(
                model,
                &ev,
                &vec![0.0; model.neq],
                &vec![0.0; model.ineqs.len()],
            );
            for (k, row) in ev.dg.iter().enumerate() {
                for &(var, c) in row {
                    grad[var] += rho * ev.g[k] * c;
                    for &(vb, cb) in row {
                        *hmat.at_mut(var, vb) += rho * c * cb;
                    }
                }
            }
            for (j, row) in ev.dh.iter().enumerate() {
                if ev.h[j] > 0.0 {
                    for &(var, c) in row {
                        grad[var] += rho * ev.h[j] * c;
                        for &(vb, cb) in row {
                            *hmat.at_mut(var, vb) += rho * c * cb;
                        }
                    }
                } else {
                    // log-barrier keeps iterates interior where possible
                    let s = -ev.h[j];
                    for &(var, c) in row {
                        grad[var] += beta * c / s;
                        for &(vb, cb) in row {
                            *hmat.at_mut(var, vb) += beta * c * cb / (s * s);
                        }
                    }
                }
            }
            for d in 0..n {
                *hmat.at_mut(d, d) += 1e-8;
            }
            let lu = match lu_factor(&hmat) {
                Ok(lu) => lu,
                Err(_) => break,
            };
            let mut step: Vec<f64> = grad.iter().map(|v| -v).collect();
            lu.solve(&mut step);
            if inf_norm(&step) < 1e-10 {
                break;
            }
            // Armijo backtracking on the penalty merit
            let merit = |xv: &[f64]| -> f64 {
                let e = evaluate(model, xv);
                let gsq: f64 = e.g.iter().map(|v| v * v).sum();
                let hsq: f64 = e.h.iter().map(|v| v.max(0.0).powi(2)).sum();
                model.s_f * e.f_raw + 0.5 * rho * (gsq + hsq)
            };
            let m0 = merit(&x);
            let mut alpha = 1.0;
            for _ in 0..20 {
                let x_try: Vec<f64> =
                    x.iter().zip(&step).map(|(xv, s)| xv + alpha * s).collect();
                if merit(&x_try) < m0 {
                    x = x_try;
                    break;
                }
                alpha *= 0.5;
            }
            if alpha < 1e-6 {
                break;
            }
        }
        rho *= 100.0;
    }
    model.point_from_x(&x)
}

/// Full local solve: interior point from the given start, falling back to
/// the homotopy (and an interior-point polish of its result).
pub fn solve(net: &Network, start: &OperatingPoint) -> Result<OperatingPoint, AcError> {
    let model = Model::new(net);
    match ipm(&model, start) {
        Ok(pt) => Ok(pt),
        Err(first) => {
            log::warn!("interior point failed ({first}); trying homotopy fallback");
            let warm = homotopy(&model, &OperatingPoint::flat_start(net));
            ipm(&model, &warm).map_err(|second| {
                AcError::LocalSolveFailed(format!(
                    "interior point failed ({first}); homotopy restart failed ({second})"
                ))
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::parse_case;

    // Finite-difference check of the hand-coded flow derivatives; a sign
    // slip here would silently poison every solve.
    #[test]
    fn flow_derivatives_match_finite_differences() {
        let br = Branch {
            from_bus: 1,
            to_bus: 2,
            g: 1.2,
            b: -4.5,
            b_c: 0.3,
            tap: 1.04,
            shift: 0.02,
            s_max: 1.0,
            ang_min: -0.5,
            ang_max: 0.5,
            ang_min_raw: -0.5,
            ang_max_raw: 0.5,
            r: 0.06,
            x: 0.22,
        };
        let base = [1.07, 0.95, 0.21, -0.13];
        let h = 1e-6;
        let f0 = flow_derivs(&br, base[0], base[1], base[2], base[3]);
        for var in 0..4 {
            let mut up = base;
            up[var] += h;
            let mut dn = base;
            dn[var] -= h;
            let fu = flow_derivs(&br, up[0], up[1], up[2], up[3]);
            let fd = flow_derivs(&br, dn[0], dn[1], dn[2], dn[3]);
            for flow in 0..4 {
                let fdiff = (fu[flow].val - fd[flow].val) / (2.0 * h);
                assert!(
                    (fdiff - f0[flow].grad[var]).abs() < 1e-6,
                    "grad mismatch flow {flow} var {var}: {fdiff} vs {}",
                    f0[flow].grad[var]
                );
                for var2 in 0..4 {
                    let hdiff = (fu[flow].grad[var2] - fd[flow].grad[var2]) / (2.0 * h);
                    assert!(
                        (hdiff - f0[flow].hess[var2][var]).abs() < 1e-5,
                        "hess mismatch flow {flow} ({var2},{var})"
                    );
                }
            }
        }
    }

    #[test]
    fn two_bus_local_solve_is_feasible_and_sane() {
        let net = parse_case(include_str!("../../fixtures/case2_tiny.m")).unwrap();
        let (pt, obj) = crate::acopf::local_solve(&net, None).unwrap();
        let rep = crate::acopf::check_feasible(&net, &pt, 1e-6).unwrap();
        assert!(rep.is_feasible, "{rep:?}");
        // load is 1.2 pu plus losses, mostly from the cheap unit
        assert!(pt.pg[0] > 1.0 && pt.pg[0] < 1.5, "pg0 = {}", pt.pg[0]);
        assert!(obj > 0.0);
    }
}
