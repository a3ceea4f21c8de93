//! Convex-program solving: a presolved bounded-variable simplex core and a
//! cutting-plane (outer approximation) loop that handles the quadratic and
//! cone rows of a [`ConvexProgram`] by supporting hyperplanes.

pub mod linalg;
pub mod simplex;

use crate::qc::{ConvexProgram, LinRow, RowKind};
use simplex::{Simplex, SimplexStatus};

/// Default pivot budget for one LP solve.
pub const DEFAULT_PIVOT_BUDGET: usize = 1_000_000;
/// Default cut-round budget for one convex solve.
pub const DEFAULT_CUT_ROUNDS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rows: Vec<LinRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

/// Row multipliers proving infeasibility: minimizing y'Ax over the variable
/// box exceeds what the rows allow. See [`verify_farkas`].
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub row_multipliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    pub certificate: Option<FarkasCertificate>,
    /// Simplex pivots spent (determinism checks compare these).
    pub iterations: usize,
    /// Cut rounds spent (zero for plain LP solves).
    pub rounds: usize,
}

impl SolveOutcome {
    fn empty(status: Status) -> Self {
        SolveOutcome {
            status,
            x: Vec::new(),
            objective: 0.0,
            certificate: None,
            iterations: 0,
            rounds: 0,
        }
    }
}

/// Presolve: drops empty rows, substitutes variables fixed by their bounds,
/// scales rows to unit max-abs coefficient, and detects trivially crossed
/// bounds. The optimum is preserved exactly; `restore` maps a reduced
/// solution back to the original variable order.
pub struct Presolved {
    pub lp: LinearProgram,
    pub objective_shift: f64,
    pub infeasible: bool,
    /// A violated empty row, when that is what proved infeasibility.
    empty_violated: Option<(usize, RowKind)>,
    /// original index -> reduced index (or fixed value)
    col_map: Vec<Result<usize, f64>>,
    n_original: usize,
}

impl Presolved {
    pub fn restore(&self, x_reduced: &[f64]) -> Vec<f64> {
        (0..self.n_original)
            .map(|j| match self.col_map[j] {
                Ok(k) => x_reduced[k],
                Err(v) => v,
            })
            .collect()
    }
}

pub fn presolve(lp: &LinearProgram) -> Presolved {
    let n = lp.objective.len();
    let mut col_map: Vec<Result<usize, f64>> = Vec::with_capacity(n);
    let mut keep: Vec<usize> = Vec::new();
    let mut infeasible = false;
    let mut shift = 0.0;
    for j in 0..n {
        if lp.lo[j] > lp.hi[j] {
            infeasible = true;
        }
        if lp.lo[j] == lp.hi[j] {
            col_map.push(Err(lp.lo[j]));
            shift += lp.objective[j] * lp.lo[j];
        } else {
            col_map.push(Ok(keep.len()));
            keep.push(j);
        }
    }

    let mut empty_violated = None;
    let mut rows = Vec::with_capacity(lp.rows.len());
    for (i, row) in lp.rows.iter().enumerate() {
        let mut rhs = row.rhs;
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(row.terms.len());
        for &(j, c) in &row.terms {
            match col_map[j] {
                Ok(k) => terms.push((k, c)),
                Err(v) => rhs -= c * v,
            }
        }
        if terms.is_empty() {
            let violated = match row.kind {
                RowKind::Le => rhs < -1e-11,
                RowKind::Ge => rhs > 1e-11,
                RowKind::Eq => rhs.abs() > 1e-11,
            };
            if violated {
                infeasible = true;
                if empty_violated.is_none() {
                    empty_violated = Some((i, if rhs > 0.0 { RowKind::Ge } else { RowKind::Le }));
                }
            }
            continue;
        }
        let scale = terms
            .iter()
            .map(|&(_, c)| c.abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        for t in &mut terms {
            t.1 /= scale;
        }
        rows.push(LinRow {
            terms,
            kind: row.kind,
            rhs: rhs / scale,
        });
    }

    Presolved {
        lp: LinearProgram {
            objective: keep.iter().map(|&j| lp.objective[j]).collect(),
            lo: keep.iter().map(|&j| lp.lo[j]).collect(),
            hi: keep.iter().map(|&j| lp.hi[j]).collect(),
            rows,
        },
        objective_shift: shift,
        infeasible,
        empty_violated,
        col_map,
        n_original: n,
    }
}

fn slack_bounds(kind: RowKind) -> (f64, f64) {
    match kind {
        RowKind::Le => (0.0, f64::INFINITY),
        RowKind::Ge => (f64::NEG_INFINITY, 0.0),
        RowKind::Eq => (0.0, 0.0),
    }
}

/// Solve a linear program to optimality or a proof of infeasibility.
/// Deterministic: identical programs yield identical outcomes, including
/// pivot counts.
pub fn solve_lp(lp: &LinearProgram) -> SolveOutcome {
    let pre = presolve(lp);
    if pre.infeasible {
        let mut out = SolveOutcome::empty(Status::Infeasible);
        // an empty violated row certifies itself; a crossed variable bound
        // has no row-space certificate
        out.certificate = pre.empty_violated.map(|(i, sense)| {
            let mut y = vec![0.0; lp.rows.len()];
            y[i] = if sense == RowKind::Ge { 1.0 } else { -1.0 };
            FarkasCertificate { row_multipliers: y }
        });
        return out;
    }
    let mut s = Simplex::new(
        pre.lp.lo.clone(),
        pre.lp.hi.clone(),
        pre.lp.objective.clone(),
        DEFAULT_PIVOT_BUDGET,
    );
    for row in &pre.lp.rows {
        let (s_lo, s_hi) = slack_bounds(row.kind);
        s.add_row(&row.terms, row.rhs, s_lo, s_hi);
    }
    let status = s.solve();
    let mut out = SolveOutcome::empty(match status {
        SimplexStatus::Optimal => Status::Optimal,
        SimplexStatus::Infeasible => Status::Infeasible,
        SimplexStatus::Unbounded => Status::Unbounded,
        SimplexStatus::IterLimit => Status::IterLimit,
    });
    out.iterations = s.pivots;
    match status {
        SimplexStatus::Optimal => {
            let n_red = pre.lp.objective.len();
            out.x = pre.restore(&s.values()[0..n_red]);
            out.objective = s.objective_value() + pre.objective_shift;
        }
        SimplexStatus::Infeasible => {
            out.certificate = s.farkas.take().map(|y| FarkasCertificate {
                // row scaling changes the certificate scale row-wise; undo it
                // by re-expressing over the original rows. Scaling divided
                // each row by its max-abs coefficient, so multiply back.
                row_multipliers: unscale_certificate(lp, &pre, &y),
            });
        }
        _ => {}
    }
    out
}

fn unscale_certificate(lp: &LinearProgram, pre: &Presolved, y_reduced: &[f64]) -> Vec<f64> {
    // presolve may have dropped empty rows; walk original rows in order and
    // match them to reduced rows, recovering the scale factor from the
    // first surviving coefficient.
    let mut out = vec![0.0; lp.rows.len()];
    let mut k = 0usize;
    for (i, row) in lp.rows.iter().enumerate() {
        let has_terms = row
            .terms
            .iter()
            .any(|&(j, _)| matches!(pre.col_map[j], Ok(_)));
        if !has_terms {
            continue;
        }
        if k >= y_reduced.len() {
            break;
        }
        let scale = row
            .terms
            .iter()
            .filter(|&&(j, _)| matches!(pre.col_map[j], Ok(_)))
            .map(|&(_, c)| c.abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        out[i] = y_reduced[k] / scale;
        k += 1;
    }
    out
}

/// Numerically verifies a Farkas certificate. With q = y'A, any point
/// satisfying the rows has q'x + y's = y'b for the slack values s, so the
/// rows are infeasible whenever the box range of q'x + y's excludes y'b.
/// Returns the positive margin, or None when y proves nothing.
pub fn verify_farkas(lp: &LinearProgram, cert: &FarkasCertificate) -> Option<f64> {
    let y = &cert.row_multipliers;
    if y.len() != lp.rows.len() {
        return None;
    }
    let n = lp.objective.len();
    let mut q = vec![0.0; n];
    let mut yb = 0.0;
    // the slack of row i has bounds from the row sense and coefficient y_i
    let mut range_lo = 0.0f64;
    let mut range_hi = 0.0f64;
    let mut span = |coef: f64, lo: f64, hi: f64, range: &mut (f64, f64)| {
        if coef == 0.0 {
            return;
        }
        let (a, b) = (coef * lo, coef * hi);
        range.0 += a.min(b);
        range.1 += a.max(b);
    };
    for (i, row) in lp.rows.iter().enumerate() {
        let yi = y[i];
        if yi == 0.0 {
            continue;
        }
        for &(j, c) in &row.terms {
            q[j] += yi * c;
        }
        yb += yi * row.rhs;
        let (s_lo, s_hi) = slack_bounds(row.kind);
        let mut r = (range_lo, range_hi);
        span(yi, s_lo, s_hi, &mut r);
        (range_lo, range_hi) = r;
    }
    for j in 0..n {
        if q[j].abs() <= 1e-9 {
            continue; // numerically zero; ignore even on unbounded vars
        }
        let mut r = (range_lo, range_hi);
        span(q[j], lp.lo[j], lp.hi[j], &mut r);
        (range_lo, range_hi) = r;
    }
    let margin = (range_lo - yb).max(yb - range_hi);
    if margin.is_nan() {
        return None;
    }
    if margin > 1e-9 {
        Some(margin)
    } else {
        None
    }
}

/// Options for the cutting-plane loop.
#[derive(Debug, Clone, Copy)]
pub struct ConvexOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub pivot_budget: usize,
    /// Log one line per round (round, LP objective, max violation).
    pub trace: bool,
}

impl Default for ConvexOptions {
    fn default() -> Self {
        ConvexOptions {
            tol: 1e-6,
            max_rounds: DEFAULT_CUT_ROUNDS,
            pivot_budget: DEFAULT_PIVOT_BUDGET,
            trace: false,
        }
    }
}

/// Solve a convex program by outer approximation: the LP of all linear rows
/// plus accumulated supporting hyperplanes, cut at each violated quadratic,
/// disk or rotated-cone row until the worst violation is within tolerance.
/// The returned objective is a valid lower bound on the convex optimum.
///
/// Equality rows stay in the working LP from the start; inequality rows
/// activate lazily when violated, which keeps the basis small. The 8-gon
/// seed cuts for disk rows and one midpoint tangent per quadratic row and
/// epigraph term are installed before the loop so the first LP is bounded.
pub fn solve_convex(p: &ConvexProgram, opts: ConvexOptions) -> SolveOutcome {
    let n = p.num_vars();
    let mut lo = p.var_lo.clone();
    let mut hi = p.var_hi.clone();
    let mut obj = vec![0.0; n];
    for &(j, c) in &p.objective.lin {
        obj[j] += c;
    }
    // epigraph variable per quadratic objective term
    let mut epi: Vec<(usize, f64, usize)> = Vec::new(); // (var, coef, epi_var)
    for &(j, c) in &p.objective.quad_diag {
        debug_assert!(c >= 0.0, "objective curvature must be nonnegative");
        let (lj, hj) = (p.var_lo[j], p.var_hi[j]);
        let min_sq = if lj <= 0.0 && hj >= 0.0 {
            0.0
        } else {
            (lj * lj).min(hj * hj)
        };
        let max_sq = if lj.is_finite() && hj.is_finite() {
            (lj * lj).max(hj * hj)
        } else {
            f64::INFINITY
        };
        let t = lo.len();
        lo.push(c * min_sq);
        hi.push(c * max_sq);
        obj.push(1.0);
        epi.push((j, c, t));
    }

    let mut s = Simplex::new(lo.clone(), hi.clone(), obj, opts.pivot_budget);

    let add_scaled = |s: &mut Simplex, terms: &[(usize, f64)], kind: RowKind, rhs: f64| {
        let scale = terms
            .iter()
            .map(|&(_, c)| c.abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let scaled: Vec<(usize, f64)> = terms.iter().map(|&(j, c)| (j, c / scale)).collect();
        let (s_lo, s_hi) = slack_bounds(kind);
        s.add_row(&scaled, rhs / scale, s_lo, s_hi);
    };

    // equalities up front; inequalities activate lazily
    let mut pool: Vec<usize> = Vec::new();
    for (i, row) in p.lin.iter().enumerate() {
        if row.kind == RowKind::Eq {
            add_scaled(&mut s, &row.terms, RowKind::Eq, row.rhs);
        } else {
            pool.push(i);
        }
    }
    let mut pool_active = vec![false; p.lin.len()];

    // seed cuts
    let norm_cap = |pv: usize, qv: usize| -> f64 {
        let pm = p.var_lo[pv].abs().max(p.var_hi[pv].abs());
        let qm = p.var_lo[qv].abs().max(p.var_hi[qv].abs());
        (pm * pm + qm * qm).sqrt()
    };
    for d in &p.disks {
        if d.radius < norm_cap(d.p, d.q) {
            for k in 0..8 {
                let ang = std::f64::consts::PI / 4.0 * k as f64;
                add_scaled(
                    &mut s,
                    &[(d.p, ang.cos()), (d.q, ang.sin())],
                    RowKind::Le,
                    d.radius,
                );
            }
        }
    }
    let mid = |j: usize| -> f64 {
        let (l, h) = (p.var_lo[j], p.var_hi[j]);
        if l.is_finite() && h.is_finite() {
            0.5 * (l + h)
        } else if l.is_finite() {
            l
        } else if h.is_finite() {
            h
        } else {
            0.0
        }
    };
    // one tangent per quadratic row at the box midpoint keeps the first LP
    // bounded in the lifted directions
    for row in &p.quad {
        let cut = quad_tangent(row, &|j| mid(j));
        add_scaled(&mut s, &cut.0, RowKind::Le, cut.1);
    }
    for &(j, c, t) in &epi {
        let x0 = mid(j);
        add_scaled(
            &mut s,
            &[(j, 2.0 * c * x0), (t, -1.0)],
            RowKind::Le,
            c * x0 * x0,
        );
    }

    let mut rounds = 0usize;
    loop {
        let status = s.solve();
        match status {
            SimplexStatus::Optimal => {}
            SimplexStatus::Infeasible => {
                let mut out = SolveOutcome::empty(Status::Infeasible);
                out.iterations = s.pivots;
                out.rounds = rounds;
                out.certificate = s.farkas.take().map(|y| FarkasCertificate {
                    row_multipliers: y,
                });
                return out;
            }
            SimplexStatus::Unbounded => {
                let mut out = SolveOutcome::empty(Status::Unbounded);
                out.iterations = s.pivots;
                out.rounds = rounds;
                return out;
            }
            SimplexStatus::IterLimit => {
                let mut out = SolveOutcome::empty(Status::IterLimit);
                out.iterations = s.pivots;
                out.rounds = rounds;
                out.x = s.values()[0..n].to_vec();
                out.objective = s.objective_value() + p.objective.constant;
                return out;
            }
        }
        let x = s.values();

        let mut worst: f64 = 0.0;
        let mut cuts: Vec<(Vec<(usize, f64)>, RowKind, f64)> = Vec::new();

        for &i in &pool {
            if pool_active[i] {
                continue;
            }
            let row = &p.lin[i];
            let lhs: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum();
            let scale = row
                .terms
                .iter()
                .map(|&(_, c)| c.abs())
                .fold(0.0f64, f64::max)
                .max(1.0);
            let viol = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => unreachable!(),
            } / scale;
            if viol > 1e-9 {
                pool_active[i] = true;
                cuts.push((row.terms.clone(), row.kind, row.rhs));
                worst = worst.max(viol);
            }
        }

        for row in &p.quad {
            let mut lhs = 0.0;
            for &(i, j, q) in &row.quad {
                lhs += q * x[i] * x[j];
            }
            for &(j, a) in &row.lin {
                lhs += a * x[j];
            }
            let viol = (lhs - row.rhs) / (1.0 + row.rhs.abs());
            if viol > opts.tol {
                let cut = quad_tangent(row, &|j| x[j]);
                cuts.push((cut.0, RowKind::Le, cut.1));
                worst = worst.max(viol);
            }
        }

        for d in &p.disks {
            let (pv, qv) = (x[d.p], x[d.q]);
            let norm = (pv * pv + qv * qv).sqrt();
            let viol = (norm - d.radius) / (1.0 + d.radius);
            if viol > opts.tol {
                cuts.push((
                    vec![(d.p, pv / norm), (d.q, qv / norm)],
                    RowKind::Le,
                    d.radius,
                ));
                worst = worst.max(viol);
            }
        }

        for cone in &p.cones {
            let (c, sv, u, v) = (x[cone.x], x[cone.y], x[cone.u], x[cone.v]);
            let err = c * c + sv * sv - u * v;
            let viol = err / (1.0 + (u * v).abs());
            if viol > opts.tol {
                // rotated cone as ||(2c, 2s, u-v)|| <= u+v, supporting plane
                // at the current point
                let a = [2.0 * c, 2.0 * sv, u - v];
                let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
                if na > 0.0 {
                    cuts.push((
                        vec![
                            (cone.x, 2.0 * a[0] / na),
                            (cone.y, 2.0 * a[1] / na),
                            (cone.u, a[2] / na - 1.0),
                            (cone.v, -a[2] / na - 1.0),
                        ],
                        RowKind::Le,
                        0.0,
                    ));
                    worst = worst.max(viol);
                }
            }
        }

        for &(j, c, t) in &epi {
            let viol = (c * x[j] * x[j] - x[t]) / (1.0 + (c * x[j] * x[j]).abs());
            if viol > opts.tol {
                cuts.push((
                    vec![(j, 2.0 * c * x[j]), (t, -1.0)],
                    RowKind::Le,
                    c * x[j] * x[j],
                ));
                worst = worst.max(viol);
            }
        }

        if opts.trace {
            log::info!(
                "cut round {rounds}: lp objective {:.6}, max violation {worst:.3e}, {} cuts",
                s.objective_value() + p.objective.constant,
                cuts.len()
            );
        }

        if cuts.is_empty() {
            let mut out = SolveOutcome::empty(Status::Optimal);
            out.iterations = s.pivots;
            out.rounds = rounds;
            out.x = s.values()[0..n].to_vec();
            out.objective = s.objective_value() + p.objective.constant;
            return out;
        }
        rounds += 1;
        if rounds >= opts.max_rounds {
            let mut out = SolveOutcome::empty(Status::IterLimit);
            out.iterations = s.pivots;
            out.rounds = rounds;
            out.x = s.values()[0..n].to_vec();
            out.objective = s.objective_value() + p.objective.constant;
            return out;
        }
        for (terms, kind, rhs) in cuts {
            add_scaled(&mut s, &terms, kind, rhs);
        }
    }
}

/// Supporting hyperplane of a convex quadratic row at the point given by
/// `at`: grad'x <= rhs + x0'Qx0 (the linearization drops the positive
/// curvature remainder, so the cut is valid).
fn quad_tangent(
    row: &crate::qc::QuadRow,
    at: &dyn Fn(usize) -> f64,
) -> (Vec<(usize, f64)>, f64) {
    let mut terms: Vec<(usize, f64)> = row.lin.clone();
    let mut quad_const = 0.0;
    for &(i, j, q) in &row.quad {
        let (xi, xj) = (at(i), at(j));
        quad_const += q * xi * xj;
        if i == j {
            terms.push((i, 2.0 * q * xi));
        } else {
            terms.push((i, q * xj));
            terms.push((j, q * xi));
        }
    }
    // merge duplicate indices deterministically
    terms.sort_by_key(|&(j, _)| j);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (j, c) in terms {
        if let Some(last) = merged.last_mut() {
            if last.0 == j {
                last.1 += c;
                continue;
            }
        }
        merged.push((j, c));
    }
    (merged, row.rhs + quad_const)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qc::{DiskRow, Objective, QuadRow};

    fn simple_lp() -> LinearProgram {
        // min x st x >= 1, x <= 10
        LinearProgram {
            objective: vec![1.0],
            lo: vec![f64::NEG_INFINITY],
            hi: vec![f64::INFINITY],
            rows: vec![
                LinRow {
                    terms: vec![(0, 1.0)],
                    kind: RowKind::Ge,
                    rhs: 1.0,
                },
                LinRow {
                    terms: vec![(0, 1.0)],
                    kind: RowKind::Le,
                    rhs: 10.0,
                },
            ],
        }
    }

    #[test]
    fn lp_minimum_at_row_bound() {
        let out = solve_lp(&simple_lp());
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x[0] - 1.0).abs() < 1e-9);
        assert!((out.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_infeasible_with_certificate() {
        let lp = LinearProgram {
            objective: vec![0.0],
            lo: vec![f64::NEG_INFINITY],
            hi: vec![f64::INFINITY],
            rows: vec![
                LinRow {
                    terms: vec![(0, 1.0)],
                    kind: RowKind::Ge,
                    rhs: 1.0,
                },
                LinRow {
                    terms: vec![(0, 1.0)],
                    kind: RowKind::Le,
                    rhs: 0.0,
                },
            ],
        };
        let out = solve_lp(&lp);
        assert_eq!(out.status, Status::Infeasible);
        let cert = out.certificate.expect("certificate on infeasible");
        assert!(verify_farkas(&lp, &cert).is_some(), "{cert:?}");
    }

    #[test]
    fn lp_vertex_under_lowest_index_entering() {
        // min -x - y st x + y <= 1, x, y >= 0: optimum on a segment; the
        // lowest-index entering rule reports (1, 0)
        let lp = LinearProgram {
            objective: vec![-1.0, -1.0],
            lo: vec![0.0, 0.0],
            hi: vec![f64::INFINITY, f64::INFINITY],
            rows: vec![LinRow {
                terms: vec![(0, 1.0), (1, 1.0)],
                kind: RowKind::Le,
                rhs: 1.0,
            }],
        };
        let out = solve_lp(&lp);
        assert_eq!(out.status, Status::Optimal);
        assert!((out.objective + 1.0).abs() < 1e-9);
        assert!((out.x[0] - 1.0).abs() < 1e-9);
        assert!(out.x[1].abs() < 1e-9);
    }

    #[test]
    fn lp_determinism() {
        let a = solve_lp(&simple_lp());
        let b = solve_lp(&simple_lp());
        assert_eq!(a, b);
    }

    #[test]
    fn presolve_detects_empty_row_infeasibility() {
        // 0*x <= -1
        let lp = LinearProgram {
            objective: vec![0.0],
            lo: vec![0.0],
            hi: vec![1.0],
            rows: vec![LinRow {
                terms: vec![],
                kind: RowKind::Le,
                rhs: -1.0,
            }],
        };
        assert_eq!(solve_lp(&lp).status, Status::Infeasible);
    }

    #[test]
    fn presolve_substitutes_fixed_variable() {
        // min x + y with y fixed to 3 via bounds, x + y >= 5
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            lo: vec![0.0, 3.0],
            hi: vec![f64::INFINITY, 3.0],
            rows: vec![LinRow {
                terms: vec![(0, 1.0), (1, 1.0)],
                kind: RowKind::Ge,
                rhs: 5.0,
            }],
        };
        let pre = presolve(&lp);
        assert_eq!(pre.lp.objective.len(), 1);
        assert_eq!(pre.objective_shift, 3.0);
        let out = solve_lp(&lp);
        assert_eq!(out.status, Status::Optimal);
        assert!((out.objective - 5.0).abs() < 1e-9);
        assert_eq!(out.x[1], 3.0);
    }

    #[test]
    fn presolve_scaling_preserves_optimum() {
        let mut lp = LinearProgram {
            objective: vec![-1.0, -1.0],
            lo: vec![0.0, 0.0],
            hi: vec![f64::INFINITY, f64::INFINITY],
            rows: vec![LinRow {
                terms: vec![(0, 1000.0), (1, 1000.0)],
                kind: RowKind::Le,
                rhs: 1000.0,
            }],
        };
        let out = solve_lp(&lp);
        assert!((out.objective + 1.0).abs() < 1e-9);
        lp.rows[0] = LinRow {
            terms: vec![(0, 1.0), (1, 1.0)],
            kind: RowKind::Le,
            rhs: 1.0,
        };
        let out2 = solve_lp(&lp);
        assert!((out.objective - out2.objective).abs() < 1e-12);
    }

    #[test]
    fn convex_square_epigraph() {
        // min y st y >= x^2, x in [0.5, 2] -> 0.25
        let mut p = ConvexProgram::new();
        let x = p.add_var("x".into(), 0.5, 2.0);
        let y = p.add_var("y".into(), 0.0, 4.0);
        p.quad.push(QuadRow {
            quad: vec![(x, x, 1.0)],
            lin: vec![(y, -1.0)],
            rhs: 0.0,
        });
        p.objective = Objective {
            quad_diag: vec![],
            lin: vec![(y, 1.0)],
            constant: 0.0,
        };
        let out = solve_convex(&p, ConvexOptions::default());
        assert_eq!(out.status, Status::Optimal);
        assert!((out.objective - 0.25).abs() < 1e-5, "{}", out.objective);
    }

    #[test]
    fn convex_disk_boundary() {
        // min -P st P^2 + Q^2 <= 1 -> P = 1
        let mut p = ConvexProgram::new();
        let pv = p.add_var("P".into(), -2.0, 2.0);
        let qv = p.add_var("Q".into(), -1.0, 1.0);
        p.disks.push(DiskRow {
            p: pv,
            q: qv,
            radius: 1.0,
        });
        p.objective = Objective {
            quad_diag: vec![],
            lin: vec![(pv, -1.0)],
            constant: 0.0,
        };
        let out = solve_convex(&p, ConvexOptions::default());
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x[0] - 1.0).abs() < 1e-4, "{}", out.x[0]);
    }

    #[test]
    fn convex_quadratic_objective() {
        // min (x-1)^2 = x^2 - 2x + 1 over [0, 3]
        let mut p = ConvexProgram::new();
        let x = p.add_var("x".into(), 0.0, 3.0);
        p.objective = Objective {
            quad_diag: vec![(x, 1.0)],
            lin: vec![(x, -2.0)],
            constant: 1.0,
        };
        let out = solve_convex(&p, ConvexOptions::default());
        assert_eq!(out.status, Status::Optimal);
        assert!(out.objective.abs() < 1e-5, "{}", out.objective);
        assert!((out.x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn convex_rotated_cone() {
        // max c st c^2 <= u*v, u in [0,2], v in [0,2] -> c = 2 at u=v=2
        let mut p = ConvexProgram::new();
        let c = p.add_var("c".into(), -3.0, 3.0);
        let s = p.add_var("s".into(), 0.0, 0.0);
        let u = p.add_var("u".into(), 0.0, 2.0);
        let v = p.add_var("v".into(), 0.0, 2.0);
        p.cones.push(crate::qc::RotatedConeRow { x: c, y: s, u, v });
        p.objective = Objective {
            quad_diag: vec![],
            lin: vec![(c, -1.0)],
            constant: 0.0,
        };
        let out = solve_convex(&p, ConvexOptions::default());
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x[0] - 2.0).abs() < 1e-4, "{}", out.x[0]);
    }

    #[test]
    fn convex_determinism_includes_rounds() {
        let build = || {
            let mut p = ConvexProgram::new();
            let x = p.add_var("x".into(), 0.5, 2.0);
            let y = p.add_var("y".into(), 0.0, 4.0);
            p.quad.push(QuadRow {
                quad: vec![(x, x, 1.0)],
                lin: vec![(y, -1.0)],
                rhs: 0.0,
            });
            p.objective = Objective {
                quad_diag: vec![],
                lin: vec![(y, 1.0)],
                constant: 0.0,
            };
            p
        };
        let a = solve_convex(&build(), ConvexOptions::default());
        let b = solve_convex(&build(), ConvexOptions::default());
        assert_eq!(a, b);
    }
}
