//! The quadratic-convex relaxation: lifted surrogate variables tied together
//! by square, McCormick and trigonometric envelopes over a variable box.
//!
//! The lifting introduces w_ii ~ V_i^2, w_lm ~ V_l*V_m, c_lm ~ w_lm*cos(t),
//! s_lm ~ w_lm*sin(t) and replaces every nonconvex power-flow term by linear
//! rows in those surrogates. The trilinear terms are decomposed in two
//! stages: auxiliary variables for cos/sin bounded by their convex envelopes,
//! then a McCormick link of (w_lm, aux) onto c_lm/s_lm.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::case::Network;

#[derive(Debug, Error, PartialEq)]
pub enum QcError {
    #[error("invalid bounds [{lo}, {hi}]{}", ctx_suffix(.ctx))]
    InvalidBounds { lo: f64, hi: f64, ctx: String },
    #[error("box dimensions ({v} voltages, {th} angles) do not match network ({nb} buses, {nl} branches)")]
    DimensionMismatch {
        v: usize,
        th: usize,
        nb: usize,
        nl: usize,
    },
}

fn ctx_suffix(ctx: &str) -> String {
    if ctx.is_empty() {
        String::new()
    } else {
        format!(" for {ctx}")
    }
}

/// Per-bus voltage and per-branch angle-difference bounds: the region a
/// branch-and-bound node relaxes over.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundBox {
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
    pub th_lo: Vec<f64>,
    pub th_hi: Vec<f64>,
}

impl BoundBox {
    /// The full box straight from the case file bounds.
    pub fn from_network(net: &Network) -> Self {
        BoundBox {
            v_lo: net.buses.iter().map(|b| b.v_min).collect(),
            v_hi: net.buses.iter().map(|b| b.v_max).collect(),
            th_lo: net.branches.iter().map(|b| b.ang_min).collect(),
            th_hi: net.branches.iter().map(|b| b.ang_max).collect(),
        }
    }

    pub fn contains(&self, other: &BoundBox) -> bool {
        let le = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
        le(&self.v_lo, &other.v_lo)
            && le(&other.v_hi, &self.v_hi)
            && le(&self.th_lo, &other.th_lo)
            && le(&other.th_hi, &self.th_hi)
    }

    fn check(&self, net: &Network) -> Result<(), QcError> {
        if self.v_lo.len() != net.buses.len()
            || self.v_hi.len() != net.buses.len()
            || self.th_lo.len() != net.branches.len()
            || self.th_hi.len() != net.branches.len()
        {
            return Err(QcError::DimensionMismatch {
                v: self.v_lo.len(),
                th: self.th_lo.len(),
                nb: net.buses.len(),
                nl: net.branches.len(),
            });
        }
        for (i, (&lo, &hi)) in self.v_lo.iter().zip(&self.v_hi).enumerate() {
            if !(lo <= hi) {
                return Err(invalid(lo, hi, format!("voltage at bus index {i}")));
            }
        }
        for (i, (&lo, &hi)) in self.th_lo.iter().zip(&self.th_hi).enumerate() {
            if !(lo <= hi && lo > -FRAC_PI_2 && hi < FRAC_PI_2) {
                return Err(invalid(lo, hi, format!("angle at branch index {i}")));
            }
        }
        Ok(())
    }
}

fn invalid(lo: f64, hi: f64, ctx: String) -> QcError {
    QcError::InvalidBounds { lo, hi, ctx }
}

/// One linear row: sum of coeff*var {<=,=,>=} rhs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinRow {
    pub terms: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

/// Convex quadratic row sum q_ij*x_i*x_j + sum a_i*x_i <= b. Curvature is
/// kept verifiably PSD: diagonal terms nonnegative, off-diagonal only in
/// checked 2x2 blocks (none are emitted by the builder).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRow {
    pub quad: Vec<(usize, usize, f64)>,
    pub lin: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Two-term cone row x_p^2 + x_q^2 <= radius^2.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskRow {
    pub p: usize,
    pub q: usize,
    pub radius: f64,
}

/// Rotated cone x^2 + y^2 <= u*v with u, v >= 0 (the relaxed coupling
/// between the lifted cosine/sine surrogates and the squared voltages).
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedConeRow {
    pub x: usize,
    pub y: usize,
    pub u: usize,
    pub v: usize,
}

/// Quadratic objective with diagonal nonnegative curvature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Objective {
    pub quad_diag: Vec<(usize, f64)>,
    pub lin: Vec<(usize, f64)>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProgram {
    pub var_lo: Vec<f64>,
    pub var_hi: Vec<f64>,
    pub var_names: Vec<String>,
    pub lin: Vec<LinRow>,
    pub quad: Vec<QuadRow>,
    pub disks: Vec<DiskRow>,
    pub cones: Vec<RotatedConeRow>,
    pub objective: Objective,
}

impl ConvexProgram {
    pub fn new() -> Self {
        ConvexProgram {
            var_lo: Vec::new(),
            var_hi: Vec::new(),
            var_names: Vec::new(),
            lin: Vec::new(),
            quad: Vec::new(),
            disks: Vec::new(),
            cones: Vec::new(),
            objective: Objective::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_lo.len()
    }

    pub fn add_var(&mut self, name: String, lo: f64, hi: f64) -> usize {
        debug_assert!(lo <= hi, "variable {name} bounds inverted: [{lo}, {hi}]");
        self.var_lo.push(lo);
        self.var_hi.push(hi);
        self.var_names.push(name);
        self.var_lo.len() - 1
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let mut v = self.objective.constant;
        for &(i, q) in &self.objective.quad_diag {
            v += q * x[i] * x[i];
        }
        for &(i, c) in &self.objective.lin {
            v += c * x[i];
        }
        v
    }

    /// Largest violation of any row at `x` (bounds included); the containment
    /// property tests drive this with lifted AC-feasible points.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.num_vars() {
            worst = worst.max(self.var_lo[i] - x[i]).max(x[i] - self.var_hi[i]);
        }
        for row in &self.lin {
            let lhs: f64 = row.terms.iter().map(|&(i, c)| c * x[i]).sum();
            let v = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for row in &self.quad {
            let mut lhs = 0.0;
            for &(i, j, q) in &row.quad {
                lhs += q * x[i] * x[j];
            }
            for &(i, a) in &row.lin {
                lhs += a * x[i];
            }
            worst = worst.max(lhs - row.rhs);
        }
        for d in &self.disks {
            worst = worst.max(x[d.p] * x[d.p] + x[d.q] * x[d.q] - d.radius * d.radius);
        }
        for c in &self.cones {
            worst = worst.max(x[c.x] * x[c.x] + x[c.y] * x[c.y] - x[c.u] * x[c.v]);
        }
        worst
    }

    /// Sparse one-row-per-line text dump for debugging.
    pub fn to_debug_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        for i in 0..self.num_vars() {
            let _ = writeln!(
                s,
                "var {} {} {} {}",
                i, self.var_names[i], self.var_lo[i], self.var_hi[i]
            );
        }
        for row in &self.lin {
            let kind = match row.kind {
                RowKind::Le => "le",
                RowKind::Eq => "eq",
                RowKind::Ge => "ge",
            };
            let _ = write!(s, "lin {kind} {}", row.rhs);
            for &(i, c) in &row.terms {
                let _ = write!(s, " {i}:{c}");
            }
            let _ = writeln!(s);
        }
        for row in &self.quad {
            let _ = write!(s, "quad le {}", row.rhs);
            for &(i, j, q) in &row.quad {
                let _ = write!(s, " {i}*{j}:{q}");
            }
            for &(i, a) in &row.lin {
                let _ = write!(s, " {i}:{a}");
            }
            let _ = writeln!(s);
        }
        for d in &self.disks {
            let _ = writeln!(s, "disk {} {} {}", d.p, d.q, d.radius);
        }
        for c in &self.cones {
            let _ = writeln!(s, "rcone {} {} {} {}", c.x, c.y, c.u, c.v);
        }
        let _ = write!(s, "obj {}", self.objective.constant);
        for &(i, q) in &self.objective.quad_diag {
            let _ = write!(s, " {i}^2:{q}");
        }
        for &(i, c) in &self.objective.lin {
            let _ = write!(s, " {i}:{c}");
        }
        s.push('\n');
        s
    }
}

impl Default for ConvexProgram {
    fn default() -> Self {
        Self::new()
    }
}

/// Rows produced by one envelope call, in terms of the two linked variables.
/// `EnvRow { x_coef, y_coef, rhs, kind }` encodes x_coef*x + y_coef*y <=/>= rhs
/// where x is the original variable and y the surrogate; `quad_x` adds a
/// x^2 coefficient on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvRow {
    pub quad_x: f64,
    pub x_coef: f64,
    pub y_coef: f64,
    pub rhs: f64,
    pub kind: RowKind,
}

impl EnvRow {
    /// Signed slack at (x, y): positive means violated.
    pub fn violation(&self, x: f64, y: f64) -> f64 {
        let lhs = self.quad_x * x * x + self.x_coef * x + self.y_coef * y;
        match self.kind {
            RowKind::Le => lhs - self.rhs,
            RowKind::Ge => self.rhs - lhs,
            RowKind::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Convex hull of y = x^2 over [lo, hi]: y >= x^2 and the secant
/// y <= (lo+hi)x - lo*hi.
pub fn square_envelope(lo: f64, hi: f64) -> Result<Vec<EnvRow>, QcError> {
    if !(lo <= hi) {
        return Err(invalid(lo, hi, "square envelope".into()));
    }
    Ok(vec![
        EnvRow {
            quad_x: 1.0,
            x_coef: 0.0,
            y_coef: -1.0,
            rhs: 0.0,
            kind: RowKind::Le,
        },
        EnvRow {
            quad_x: 0.0,
            x_coef: -(lo + hi),
            y_coef: 1.0,
            rhs: -lo * hi,
            kind: RowKind::Le,
        },
    ])
}

/// The four McCormick inequalities for w ~ x*y over a box, as
/// (x_coef, y_coef, w_coef, rhs, kind) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct McCormickRow {
    pub x_coef: f64,
    pub y_coef: f64,
    pub w_coef: f64,
    pub rhs: f64,
    pub kind: RowKind,
}

impl McCormickRow {
    pub fn violation(&self, x: f64, y: f64, w: f64) -> f64 {
        let lhs = self.x_coef * x + self.y_coef * y + self.w_coef * w;
        match self.kind {
            RowKind::Le => lhs - self.rhs,
            RowKind::Ge => self.rhs - lhs,
            RowKind::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Convex hull of the bilinear product w = x*y over a box:
///   w >= x_lo*y + y_lo*x - x_lo*y_lo
///   w >= x_hi*y + y_hi*x - x_hi*y_hi
///   w <= x_lo*y + y_hi*x - x_lo*y_hi
///   w <= x_hi*y + y_lo*x - x_hi*y_lo
pub fn mccormick(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Vec<McCormickRow>, QcError> {
    if !(x_lo <= x_hi) {
        return Err(invalid(x_lo, x_hi, "mccormick x".into()));
    }
    if !(y_lo <= y_hi) {
        return Err(invalid(y_lo, y_hi, "mccormick y".into()));
    }
    let row = |xc: f64, yc: f64, rhs: f64, kind: RowKind| McCormickRow {
        x_coef: xc,
        y_coef: yc,
        w_coef: if kind == RowKind::Ge { 1.0 } else { 1.0 },
        rhs,
        kind,
    };
    // w - x_lo*y - y_lo*x >= -x_lo*y_lo, etc.
    Ok(vec![
        row(-y_lo, -x_lo, -x_lo * y_lo, RowKind::Ge),
        row(-y_hi, -x_hi, -x_hi * y_hi, RowKind::Ge),
        row(-y_hi, -x_lo, -x_lo * y_hi, RowKind::Le),
        row(-y_lo, -x_hi, -x_hi * y_lo, RowKind::Le),
    ])
}

/// Convex envelope of sin over [lo, hi] within (-pi/2, pi/2): two tangents
/// at +-x_m/2 with x_m = max(|lo|, |hi|), plus the chord when the interval
/// does not straddle zero (lower chord for lo >= 0, upper chord for hi <= 0).
pub fn sin_envelope(lo: f64, hi: f64) -> Result<Vec<EnvRow>, QcError> {
    check_trig_interval(lo, hi, "sin envelope")?;
    let xm = lo.abs().max(hi.abs());
    let (sh, ch) = ((xm / 2.0).sin(), (xm / 2.0).cos());
    let mut rows = vec![
        // S <= cos(xm/2)*(x - xm/2) + sin(xm/2)
        EnvRow {
            quad_x: 0.0,
            x_coef: -ch,
            y_coef: 1.0,
            rhs: sh - ch * xm / 2.0,
            kind: RowKind::Le,
        },
        // S >= cos(xm/2)*(x + xm/2) - sin(xm/2)
        EnvRow {
            quad_x: 0.0,
            x_coef: -ch,
            y_coef: 1.0,
            rhs: ch * xm / 2.0 - sh,
            kind: RowKind::Ge,
        },
    ];
    if hi > lo {
        let slope = (lo.sin() - hi.sin()) / (lo - hi);
        let chord = EnvRow {
            quad_x: 0.0,
            x_coef: -slope,
            y_coef: 1.0,
            rhs: lo.sin() - slope * lo,
            kind: if lo >= 0.0 { RowKind::Ge } else { RowKind::Le },
        };
        if lo >= 0.0 || hi <= 0.0 {
            rows.push(chord);
        }
    }
    Ok(rows)
}

/// Convex envelope of cos over [lo, hi] within (-pi/2, pi/2): quadratic
/// upper bound C <= 1 - (1-cos(x_m))/x_m^2 * x^2 and the chord below.
pub fn cos_envelope(lo: f64, hi: f64) -> Result<Vec<EnvRow>, QcError> {
    check_trig_interval(lo, hi, "cos envelope")?;
    let xm = lo.abs().max(hi.abs());
    let mut rows = Vec::with_capacity(2);
    if xm > 0.0 {
        let k = (1.0 - xm.cos()) / (xm * xm);
        rows.push(EnvRow {
            quad_x: k,
            x_coef: 0.0,
            y_coef: 1.0,
            rhs: 1.0,
            kind: RowKind::Le,
        });
    } else {
        rows.push(EnvRow {
            quad_x: 0.0,
            x_coef: 0.0,
            y_coef: 1.0,
            rhs: 1.0,
            kind: RowKind::Le,
        });
    }
    if hi > lo {
        let slope = (lo.cos() - hi.cos()) / (lo - hi);
        rows.push(EnvRow {
            quad_x: 0.0,
            x_coef: -slope,
            y_coef: 1.0,
            rhs: lo.cos() - slope * lo,
            kind: RowKind::Ge,
        });
    } else {
        rows.push(EnvRow {
            quad_x: 0.0,
            x_coef: 0.0,
            y_coef: 1.0,
            rhs: lo.cos(),
            kind: RowKind::Ge,
        });
    }
    Ok(rows)
}

/// Interval bounds of sin and cos over [lo, hi] within (-pi/2, pi/2):
/// sin is monotone; cos peaks at 1 when the interval straddles zero.
pub fn trig_bounds(lo: f64, hi: f64) -> Result<(f64, f64, f64, f64), QcError> {
    check_trig_interval(lo, hi, "trig bounds")?;
    let s_lo = lo.sin();
    let s_hi = hi.sin();
    let c_lo = lo.cos().min(hi.cos());
    let c_hi = if lo.signum() == hi.signum() || lo == 0.0 || hi == 0.0 {
        lo.cos().max(hi.cos())
    } else {
        1.0
    };
    Ok((s_lo, s_hi, c_lo, c_hi))
}

fn check_trig_interval(lo: f64, hi: f64, ctx: &str) -> Result<(), QcError> {
    if !(lo <= hi && lo > -FRAC_PI_2 && hi < FRAC_PI_2) {
        return Err(invalid(lo, hi, ctx.into()));
    }
    Ok(())
}

/// Where each family of lifted variables lives inside the program's variable
/// vector. Tests use this to map an AC operating point onto the lifting.
#[derive(Debug, Clone)]
pub struct LiftedVars {
    pub v: Vec<usize>,
    pub theta: Vec<usize>,
    /// Per-branch angle difference theta_from - theta_to.
    pub theta_d: Vec<usize>,
    pub w_ii: Vec<usize>,
    pub w_lm: Vec<usize>,
    pub c_lm: Vec<usize>,
    pub s_lm: Vec<usize>,
    pub cos_aux: Vec<usize>,
    pub sin_aux: Vec<usize>,
    pub p_fwd: Vec<usize>,
    pub q_fwd: Vec<usize>,
    pub p_rev: Vec<usize>,
    pub q_rev: Vec<usize>,
    pub pg: Vec<usize>,
    pub qg: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct QcOptions {
    /// Include the rotated-cone coupling c^2 + s^2 <= w_ll * w_mm.
    pub jabr_cut: bool,
}

impl Default for QcOptions {
    fn default() -> Self {
        QcOptions { jabr_cut: true }
    }
}

/// The relaxation of one network over one box, plus the variable layout.
pub struct QcProgram {
    pub program: ConvexProgram,
    pub vars: LiftedVars,
}

/// Boxes narrower than this are widened before envelope construction to
/// avoid degenerate rows.
const MIN_WIDTH: f64 = 1e-9;

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < MIN_WIDTH {
        let mid = 0.5 * (lo + hi);
        (mid - MIN_WIDTH / 2.0, mid + MIN_WIDTH / 2.0)
    } else {
        (lo, hi)
    }
}

/// Builds the full QC relaxation of the network over `bx`.
pub fn build_qc(net: &Network, bx: &BoundBox, opts: QcOptions) -> Result<QcProgram, QcError> {
    bx.check(net)?;
    let nb = net.buses.len();
    let nl = net.branches.len();
    let ng = net.generators.len();
    let mut p = ConvexProgram::new();

    // Bus voltage magnitudes and angles. Angles only tie the per-branch
    // differences together, so a wide box is enough to keep them bounded.
    let theta_cap = (nb as f64 + 1.0) * FRAC_PI_2;
    let mut v = Vec::with_capacity(nb);
    let mut theta = Vec::with_capacity(nb);
    let mut w_ii = Vec::with_capacity(nb);
    for (i, bus) in net.buses.iter().enumerate() {
        let (lo, hi) = widen(bx.v_lo[i], bx.v_hi[i]);
        v.push(p.add_var(format!("v{}", bus.id), lo, hi));
        let (tlo, thi) = if bus.is_ref {
            (0.0, 0.0)
        } else {
            (-theta_cap, theta_cap)
        };
        theta.push(p.add_var(format!("th{}", bus.id), tlo, thi));
        // (7d): voltage-square bounds live directly on the surrogate.
        w_ii.push(p.add_var(format!("w{}", bus.id), lo * lo, hi * hi));
    }

    let mut pg = Vec::with_capacity(ng);
    let mut qg = Vec::with_capacity(ng);
    for (g, gen) in net.generators.iter().enumerate() {
        pg.push(p.add_var(format!("pg{g}"), gen.p_min, gen.p_max));
        qg.push(p.add_var(format!("qg{g}"), gen.q_min, gen.q_max));
    }

    let mut vars = LiftedVars {
        v,
        theta,
        theta_d: Vec::with_capacity(nl),
        w_ii,
        w_lm: Vec::with_capacity(nl),
        c_lm: Vec::with_capacity(nl),
        s_lm: Vec::with_capacity(nl),
        cos_aux: Vec::with_capacity(nl),
        sin_aux: Vec::with_capacity(nl),
        p_fwd: Vec::with_capacity(nl),
        q_fwd: Vec::with_capacity(nl),
        p_rev: Vec::with_capacity(nl),
        q_rev: Vec::with_capacity(nl),
        pg,
        qg,
    };

    for (l, br) in net.branches.iter().enumerate() {
        let fi = net.bus_index(br.from_bus).expect("validated branch endpoint");
        let ti = net.bus_index(br.to_bus).expect("validated branch endpoint");
        let (th_lo, th_hi) = widen(bx.th_lo[l], bx.th_hi[l]);

        let th_d = p.add_var(format!("thd{l}"), th_lo, th_hi);
        vars.theta_d.push(th_d);
        // theta_d = theta_from - theta_to
        p.lin.push(LinRow {
            terms: vec![(th_d, 1.0), (vars.theta[fi], -1.0), (vars.theta[ti], 1.0)],
            kind: RowKind::Eq,
            rhs: 0.0,
        });

        // The envelopes act on the shifted angle for phase-shifting branches.
        let (ph_lo, ph_hi) = (th_lo - br.shift, th_hi - br.shift);
        check_trig_interval(ph_lo, ph_hi, "shifted angle interval")?;
        let phi = if br.shift == 0.0 {
            th_d
        } else {
            let var = p.add_var(format!("phi{l}"), ph_lo, ph_hi);
            p.lin.push(LinRow {
                terms: vec![(var, 1.0), (th_d, -1.0)],
                kind: RowKind::Eq,
                rhs: -br.shift,
            });
            var
        };

        let (s_lo, s_hi, c_lo, c_hi) = trig_bounds(ph_lo, ph_hi)?;
        let cos_aux = p.add_var(format!("cosa{l}"), c_lo, c_hi);
        let sin_aux = p.add_var(format!("sina{l}"), s_lo, s_hi);
        vars.cos_aux.push(cos_aux);
        vars.sin_aux.push(sin_aux);
        for row in cos_envelope(ph_lo, ph_hi)? {
            push_env_row(&mut p, phi, cos_aux, &row);
        }
        for row in sin_envelope(ph_lo, ph_hi)? {
            push_env_row(&mut p, phi, sin_aux, &row);
        }

        let (vl_lo, vl_hi) = (p.var_lo[vars.v[fi]], p.var_hi[vars.v[fi]]);
        let (vm_lo, vm_hi) = (p.var_lo[vars.v[ti]], p.var_hi[vars.v[ti]]);
        let (w_lo, w_hi) = (vl_lo * vm_lo, vl_hi * vm_hi);
        let w_lm = p.add_var(format!("wp{l}"), w_lo, w_hi);
        vars.w_lm.push(w_lm);
        // (7h): w_lm in the McCormick hull of V_l * V_m.
        for row in mccormick(vl_lo, vl_hi, vm_lo, vm_hi)? {
            push_mccormick_row(&mut p, vars.v[fi], vars.v[ti], w_lm, &row);
        }

        let prod_bounds = |y_lo: f64, y_hi: f64| -> (f64, f64) {
            let c = [w_lo * y_lo, w_lo * y_hi, w_hi * y_lo, w_hi * y_hi];
            (
                c.iter().cloned().fold(f64::INFINITY, f64::min),
                c.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        let (cl, ch) = prod_bounds(c_lo, c_hi);
        let c_lm = p.add_var(format!("c{l}"), cl, ch);
        let (sl, sh) = prod_bounds(s_lo, s_hi);
        let s_lm = p.add_var(format!("s{l}"), sl, sh);
        vars.c_lm.push(c_lm);
        vars.s_lm.push(s_lm);
        // (7i)/(7j): McCormick link of (w_lm, aux) onto the trilinear
        // surrogates.
        for row in mccormick(w_lo, w_hi, c_lo, c_hi)? {
            push_mccormick_row(&mut p, w_lm, cos_aux, c_lm, &row);
        }
        for row in mccormick(w_lo, w_hi, s_lo, s_hi)? {
            push_mccormick_row(&mut p, w_lm, sin_aux, s_lm, &row);
        }

        // Flow variables with interval-arithmetic bounds from their linear
        // definitions, intersected with the thermal limit when present.
        let tap = br.tap;
        let t2 = tap * tap;
        let (g, b, bc) = (br.g, br.b, br.b_c);
        let w_ll = vars.w_ii[fi];
        let w_mm = vars.w_ii[ti];
        let (wll_lo, wll_hi) = (p.var_lo[w_ll], p.var_hi[w_ll]);
        let (wmm_lo, wmm_hi) = (p.var_lo[w_mm], p.var_hi[w_mm]);

        let iv = |c: f64, lo: f64, hi: f64| -> (f64, f64) {
            if c >= 0.0 {
                (c * lo, c * hi)
            } else {
                (c * hi, c * lo)
            }
        };
        let add3 = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
            (a.0 + b.0 + c.0, a.1 + b.1 + c.1)
        };
        // P_lm = g/t2 * w_ll - (g*c + b*s)/tap
        let p_fwd_rng = add3(
            iv(g / t2, wll_lo, wll_hi),
            iv(-g / tap, cl, ch),
            iv(-b / tap, sl, sh),
        );
        // Q_lm = -(b + bc/2)/t2 * w_ll + (b*c - g*s)/tap
        let q_fwd_rng = add3(
            iv(-(b + bc / 2.0) / t2, wll_lo, wll_hi),
            iv(b / tap, cl, ch),
            iv(-g / tap, sl, sh),
        );
        // P_ml = g * w_mm - (g*c - b*s)/tap
        let p_rev_rng = add3(
            iv(g, wmm_lo, wmm_hi),
            iv(-g / tap, cl, ch),
            iv(b / tap, sl, sh),
        );
        // Q_ml = -(b + bc/2) * w_mm + (b*c + g*s)/tap
        let q_rev_rng = add3(
            iv(-(b + bc / 2.0), wmm_lo, wmm_hi),
            iv(b / tap, cl, ch),
            iv(g / tap, sl, sh),
        );
        let cap = |rng: (f64, f64)| -> (f64, f64) {
            if br.s_max > 0.0 {
                (rng.0.max(-br.s_max), rng.1.min(br.s_max))
            } else {
                rng
            }
        };
        let (plm_lo, plm_hi) = cap(p_fwd_rng);
        let (qlm_lo, qlm_hi) = cap(q_fwd_rng);
        let (pml_lo, pml_hi) = cap(p_rev_rng);
        let (qml_lo, qml_hi) = cap(q_rev_rng);
        let p_fwd = p.add_var(format!("P{l}f"), plm_lo, plm_hi);
        let q_fwd = p.add_var(format!("Q{l}f"), qlm_lo, qlm_hi);
        let p_rev = p.add_var(format!("P{l}r"), pml_lo, pml_hi);
        let q_rev = p.add_var(format!("Q{l}r"), qml_lo, qml_hi);
        vars.p_fwd.push(p_fwd);
        vars.q_fwd.push(q_fwd);
        vars.p_rev.push(p_rev);
        vars.q_rev.push(q_rev);

        // (7e)/(7f): linearized flow definitions.
        p.lin.push(LinRow {
            terms: vec![
                (p_fwd, 1.0),
                (w_ll, -g / t2),
                (c_lm, g / tap),
                (s_lm, b / tap),
            ],
            kind: RowKind::Eq,
            rhs: 0.0,
        });
        p.lin.push(LinRow {
            terms: vec![
                (q_fwd, 1.0),
                (w_ll, (b + bc / 2.0) / t2),
                (c_lm, -b / tap),
                (s_lm, g / tap),
            ],
            kind: RowKind::Eq,
            rhs: 0.0,
        });
        p.lin.push(LinRow {
            terms: vec![
                (p_rev, 1.0),
                (w_mm, -g),
                (c_lm, g / tap),
                (s_lm, -b / tap),
            ],
            kind: RowKind::Eq,
            rhs: 0.0,
        });
        p.lin.push(LinRow {
            terms: vec![
                (q_rev, 1.0),
                (w_mm, b + bc / 2.0),
                (c_lm, -b / tap),
                (s_lm, -g / tap),
            ],
            kind: RowKind::Eq,
            rhs: 0.0,
        });

        // (1j) thermal cones on both directions.
        if br.s_max > 0.0 {
            p.disks.push(DiskRow {
                p: p_fwd,
                q: q_fwd,
                radius: br.s_max,
            });
            p.disks.push(DiskRow {
                p: p_rev,
                q: q_rev,
                radius: br.s_max,
            });
        }

        if opts.jabr_cut {
            p.cones.push(RotatedConeRow {
                x: c_lm,
                y: s_lm,
                u: w_ll,
                v: w_mm,
            });
        }
    }

    // (7g): square envelopes tying v_i to w_ii.
    for i in 0..nb {
        let (lo, hi) = (p.var_lo[vars.v[i]], p.var_hi[vars.v[i]]);
        for row in square_envelope(lo, hi)? {
            push_env_row(&mut p, vars.v[i], vars.w_ii[i], &row);
        }
    }

    // (7b)/(7c): lifted power balances.
    for (i, bus) in net.buses.iter().enumerate() {
        let mut p_terms = vec![(vars.w_ii[i], -bus.g_sh)];
        let mut q_terms = vec![(vars.w_ii[i], bus.b_sh)];
        for (g, gen) in net.generators.iter().enumerate() {
            if net.bus_index(gen.bus) == Some(i) {
                p_terms.push((vars.pg[g], 1.0));
                q_terms.push((vars.qg[g], 1.0));
            }
        }
        for (l, br) in net.branches.iter().enumerate() {
            if net.bus_index(br.from_bus) == Some(i) {
                p_terms.push((vars.p_fwd[l], -1.0));
                q_terms.push((vars.q_fwd[l], -1.0));
            }
            if net.bus_index(br.to_bus) == Some(i) {
                p_terms.push((vars.p_rev[l], -1.0));
                q_terms.push((vars.q_rev[l], -1.0));
            }
        }
        p.lin.push(LinRow {
            terms: p_terms,
            kind: RowKind::Eq,
            rhs: bus.p_d,
        });
        p.lin.push(LinRow {
            terms: q_terms,
            kind: RowKind::Eq,
            rhs: bus.q_d,
        });
    }

    // (7a): generation cost.
    for (g, gen) in net.generators.iter().enumerate() {
        if gen.c2 != 0.0 {
            p.objective.quad_diag.push((vars.pg[g], gen.c2));
        }
        if gen.c1 != 0.0 {
            p.objective.lin.push((vars.pg[g], gen.c1));
        }
        p.objective.constant += gen.c0;
    }

    Ok(QcProgram { program: p, vars })
}

fn push_env_row(p: &mut ConvexProgram, x: usize, y: usize, row: &EnvRow) {
    if row.quad_x != 0.0 {
        // quad rows are stored in <= orientation
        debug_assert_eq!(row.kind, RowKind::Le);
        p.quad.push(QuadRow {
            quad: vec![(x, x, row.quad_x)],
            lin: vec![(x, row.x_coef), (y, row.y_coef)],
            rhs: row.rhs,
        });
    } else {
        p.lin.push(LinRow {
            terms: vec![(x, row.x_coef), (y, row.y_coef)],
            kind: row.kind,
            rhs: row.rhs,
        });
    }
}

fn push_mccormick_row(p: &mut ConvexProgram, x: usize, y: usize, w: usize, row: &McCormickRow) {
    p.lin.push(LinRow {
        terms: vec![(x, row.x_coef), (y, row.y_coef), (w, row.w_coef)],
        kind: row.kind,
        rhs: row.rhs,
    });
}

/// Maps an AC operating point (v, theta per bus; pg, qg per generator) onto
/// the lifted variable vector: w_ii = V_i^2, w_lm = V_l*V_m,
/// c_lm = w_lm*cos(phi), s_lm = w_lm*sin(phi), flows from the AC equations.
pub fn lift_point(
    net: &Network,
    qc: &QcProgram,
    v: &[f64],
    theta: &[f64],
    pg: &[f64],
    qg: &[f64],
) -> Vec<f64> {
    let mut x = vec![0.0; qc.program.num_vars()];
    for i in 0..net.buses.len() {
        x[qc.vars.v[i]] = v[i];
        x[qc.vars.theta[i]] = theta[i];
        x[qc.vars.w_ii[i]] = v[i] * v[i];
    }
    for g in 0..net.generators.len() {
        x[qc.vars.pg[g]] = pg[g];
        x[qc.vars.qg[g]] = qg[g];
    }
    for (l, br) in net.branches.iter().enumerate() {
        let fi = net.bus_index(br.from_bus).unwrap();
        let ti = net.bus_index(br.to_bus).unwrap();
        let thd = theta[fi] - theta[ti];
        let phi = thd - br.shift;
        x[qc.vars.theta_d[l]] = thd;
        x[qc.vars.cos_aux[l]] = phi.cos();
        x[qc.vars.sin_aux[l]] = phi.sin();
        let w = v[fi] * v[ti];
        x[qc.vars.w_lm[l]] = w;
        x[qc.vars.c_lm[l]] = w * phi.cos();
        x[qc.vars.s_lm[l]] = w * phi.sin();
        let flows = crate::acopf::branch_flow_parts(br, v[fi], v[ti], thd);
        x[qc.vars.p_fwd[l]] = flows.0;
        x[qc.vars.q_fwd[l]] = flows.1;
        x[qc.vars.p_rev[l]] = flows.2;
        x[qc.vars.q_rev[l]] = flows.3;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn admissible_range_env(rows: &[EnvRow], x: f64) -> (f64, f64) {
        // y appears with coefficient +-1 in every envelope row
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in rows {
            assert!(r.y_coef != 0.0);
            let bound = (r.rhs - r.quad_x * x * x - r.x_coef * x) / r.y_coef;
            match (r.kind, r.y_coef > 0.0) {
                (RowKind::Le, true) | (RowKind::Ge, false) => hi = hi.min(bound),
                (RowKind::Le, false) | (RowKind::Ge, true) => lo = lo.max(bound),
                (RowKind::Eq, _) => {
                    lo = lo.max(bound);
                    hi = hi.min(bound);
                }
            }
        }
        (lo, hi)
    }

    #[test]
    fn square_envelope_interior_and_endpoints() {
        let rows = square_envelope(0.9, 1.1).unwrap();
        let (lo, hi) = admissible_range_env(&rows, 1.0);
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 1.01).abs() < 1e-12);
        // tight at endpoints
        let (lo, hi) = admissible_range_env(&rows, 0.9);
        assert!((lo - 0.81).abs() < 1e-12 && (hi - 0.81).abs() < 1e-12);
    }

    #[test]
    fn square_envelope_degenerate_interval() {
        let rows = square_envelope(1.05, 1.05).unwrap();
        let (lo, hi) = admissible_range_env(&rows, 1.05);
        assert!((lo - 1.1025).abs() < 1e-12 && (hi - 1.1025).abs() < 1e-12);
    }

    #[test]
    fn square_envelope_rejects_inverted() {
        assert!(square_envelope(1.0, 0.5).is_err());
    }

    fn mccormick_range(rows: &[McCormickRow], x: f64, y: f64) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in rows {
            let bound = (r.rhs - r.x_coef * x - r.y_coef * y) / r.w_coef;
            match r.kind {
                RowKind::Le => hi = hi.min(bound),
                RowKind::Ge => lo = lo.max(bound),
                RowKind::Eq => unreachable!(),
            }
        }
        (lo, hi)
    }

    #[test]
    fn mccormick_interior_point() {
        let rows = mccormick(0.9, 1.1, 0.9, 1.1).unwrap();
        let (lo, hi) = mccormick_range(&rows, 1.0, 1.0);
        assert!((lo - 0.99).abs() < 1e-12);
        assert!((hi - 1.01).abs() < 1e-12);
    }

    #[test]
    fn mccormick_exact_at_corner() {
        let rows = mccormick(0.9, 1.1, 0.9, 1.1).unwrap();
        let (lo, hi) = mccormick_range(&rows, 1.1, 1.1);
        assert!((lo - 1.21).abs() < 1e-12 && (hi - 1.21).abs() < 1e-12);
    }

    #[test]
    fn mccormick_collapses_when_x_fixed() {
        let rows = mccormick(0.7, 0.7, -1.0, 2.0).unwrap();
        for y in [-1.0, -0.25, 0.5, 2.0] {
            let (lo, hi) = mccormick_range(&rows, 0.7, y);
            assert!((lo - 0.7 * y).abs() < 1e-12, "lo at y={y}");
            assert!((hi - 0.7 * y).abs() < 1e-12, "hi at y={y}");
        }
    }

    // Independent oracle for the sine tangent value at 0 over [-d, d]:
    // sin(d/2) - (d/2) cos(d/2), evaluated fresh here rather than trusting
    // the implementation path.
    #[test]
    fn sin_envelope_symmetric_interval() {
        let d = std::f64::consts::PI / 6.0;
        let half = d / 2.0;
        let expect = half.sin() - half * half.cos();
        assert!((expect - 0.005940255120655102).abs() < 1e-15);

        let rows = sin_envelope(-d, d).unwrap();
        assert_eq!(rows.len(), 2); // straddles zero: no chord
        let (lo, hi) = admissible_range_env(&rows, 0.0);
        assert!((hi - expect).abs() < 1e-12);
        assert!((lo + expect).abs() < 1e-12);
    }

    #[test]
    fn sin_envelope_nonnegative_interval_has_chord() {
        let d = std::f64::consts::PI / 6.0;
        let rows = sin_envelope(0.0, d).unwrap();
        assert_eq!(rows.len(), 3);
        let half = d / 2.0;
        let expect_hi = half.sin() - half * half.cos();
        let (lo, hi) = admissible_range_env(&rows, 0.0);
        assert!((lo - 0.0).abs() < 1e-12, "chord forces S >= 0 at theta=0");
        assert!((hi - expect_hi).abs() < 1e-12);
        // chord tight at the left endpoint: S allowed down to sin(lo)
        let (lo, _) = admissible_range_env(&rows, 0.3);
        assert!((lo - (0.3f64.sin() / d.sin() * d.sin() * 0.3 / 0.3)).abs() < 1.0); // sanity only
        let (lo, _) = admissible_range_env(&rows, 0.0);
        assert!((lo - 0.0).abs() < 1e-12);
    }

    #[test]
    fn sin_envelope_chord_tight_at_endpoint() {
        let rows = sin_envelope(0.1, 0.5).unwrap();
        let (lo, _) = admissible_range_env(&rows, 0.1);
        assert!((lo - 0.1f64.sin()).abs() < 1e-12);
        let (lo, _) = admissible_range_env(&rows, 0.5);
        assert!((lo - 0.5f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn cos_envelope_upper_is_one_at_zero() {
        let rows = cos_envelope(-0.4, 0.4).unwrap();
        let (_, hi) = admissible_range_env(&rows, 0.0);
        assert!((hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cos_envelope_symmetric_chord() {
        let d = std::f64::consts::PI / 6.0;
        let rows = cos_envelope(-d, d).unwrap();
        let (lo, hi) = admissible_range_env(&rows, 0.0);
        assert!((lo - d.cos()).abs() < 1e-12);
        assert!((hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cos_envelope_chord_tight_at_endpoint() {
        let d = std::f64::consts::PI / 6.0;
        let rows = cos_envelope(-d, d).unwrap();
        let (lo, hi) = admissible_range_env(&rows, d);
        assert!((lo - d.cos()).abs() < 1e-12);
        assert!(hi >= d.cos() - 1e-12);
    }

    #[test]
    fn trig_bounds_straddling_zero() {
        let d = std::f64::consts::PI / 12.0;
        let (s_lo, s_hi, c_lo, c_hi) = trig_bounds(-d, d).unwrap();
        assert!((s_lo + d.sin()).abs() < 1e-15);
        assert!((s_hi - d.sin()).abs() < 1e-15);
        assert!((c_lo - d.cos()).abs() < 1e-15);
        assert_eq!(c_hi, 1.0);
    }

    #[test]
    fn trig_bounds_same_sign() {
        let (s_lo, s_hi, c_lo, c_hi) = trig_bounds(0.1, 0.3).unwrap();
        assert!((s_lo - 0.1f64.sin()).abs() < 1e-15);
        assert!((s_hi - 0.3f64.sin()).abs() < 1e-15);
        assert!((c_lo - 0.3f64.cos()).abs() < 1e-15);
        assert!((c_hi - 0.1f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn trig_bounds_degenerate_zero() {
        assert_eq!(trig_bounds(0.0, 0.0).unwrap(), (0.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn trig_bounds_rejects_wide_interval() {
        assert!(trig_bounds(-2.0, 0.1).is_err());
    }
}
