//! MATPOWER-style case files parsed into an immutable per-unit network model.
//!
//! Only the sections needed for OPF are read: `mpc.baseMVA`, `mpc.bus`,
//! `mpc.gen`, `mpc.branch` and `mpc.gencost`. All quantities are converted
//! to per-unit on `base_mva` and angles to radians at parse time, so the
//! rest of the toolkit never sees MW or degrees.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

/// Angle-difference boxes wider than this are clamped so the trigonometric
/// envelopes stay valid (they require bounds strictly inside (-pi/2, pi/2)).
pub const ANGLE_CLAMP: f64 = PI / 2.0 - 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum CaseError {
    #[error("malformed section: {0}")]
    MalformedSection(String),
    #[error("unknown bus reference {0}")]
    UnknownBusReference(i64),
    #[error("no reference bus (type 3) in case")]
    NoReferenceBus,
    #[error("baseMVA must be positive, got {0}")]
    NonPositiveBase(f64),
    #[error("branch {from}-{to} has zero series impedance")]
    ZeroImpedance { from: i64, to: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// Bus number from the case file (not necessarily contiguous).
    pub id: i64,
    pub v_min: f64,
    pub v_max: f64,
    /// Shunt conductance/susceptance, per-unit.
    pub g_sh: f64,
    pub b_sh: f64,
    /// Active/reactive demand, per-unit.
    pub p_d: f64,
    pub q_d: f64,
    pub is_ref: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: i64,
    pub to_bus: i64,
    /// Series admittance y = 1/(r + jx), per-unit.
    pub g: f64,
    pub b: f64,
    /// Total charging susceptance, per-unit.
    pub b_c: f64,
    /// Off-nominal turns ratio (1.0 when the file stores 0).
    pub tap: f64,
    /// Phase shift, radians.
    pub shift: f64,
    /// Apparent-power limit, per-unit; 0 means unconstrained.
    pub s_max: f64,
    /// Angle-difference bounds, radians, clamped to (-pi/2, pi/2).
    pub ang_min: f64,
    pub ang_max: f64,
    /// Bounds as stated in the file, before clamping. Used by the AC
    /// feasibility checks; the clamp only applies to envelope construction.
    pub ang_min_raw: f64,
    pub ang_max_raw: f64,
    /// Raw series impedance kept for serialization and admittance checks.
    pub r: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: i64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Cost coefficients in $/pu^2, $/pu, $ (rescaled from the MW file values
    /// so cost(pg in pu) equals cost(pg in MW) of the raw file).
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// A single data-invariant violation found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VoltageBoundsInverted { bus: i64 },
    NonPositiveVoltageLower { bus: i64 },
    MultipleReferenceBuses,
    NoReferenceBus,
    AngleBoundsInverted { from: i64, to: i64 },
    NonPositiveTap { from: i64, to: i64 },
    NegativeThermalLimit { from: i64, to: i64 },
    DispatchBoundsInverted { gen: usize },
    NegativeQuadraticCost { gen: usize },
    UnknownBus { id: i64 },
    DuplicateBusId { id: i64 },
}

impl Network {
    pub fn bus_index(&self, id: i64) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn ref_bus(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.is_ref)
            .expect("network invariant: one reference bus")
    }

    /// Checks every type invariant and returns the violations as data.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = Vec::new();
        for bus in &self.buses {
            if seen.contains(&bus.id) {
                out.push(Violation::DuplicateBusId { id: bus.id });
            }
            seen.push(bus.id);
            if bus.v_min > bus.v_max {
                out.push(Violation::VoltageBoundsInverted { bus: bus.id });
            }
            if bus.v_min <= 0.0 {
                out.push(Violation::NonPositiveVoltageLower { bus: bus.id });
            }
        }
        match self.buses.iter().filter(|b| b.is_ref).count() {
            0 => out.push(Violation::NoReferenceBus),
            1 => {}
            _ => out.push(Violation::MultipleReferenceBuses),
        }
        for br in &self.branches {
            if br.ang_min > br.ang_max {
                out.push(Violation::AngleBoundsInverted {
                    from: br.from_bus,
                    to: br.to_bus,
                });
            }
            if br.tap <= 0.0 {
                out.push(Violation::NonPositiveTap {
                    from: br.from_bus,
                    to: br.to_bus,
                });
            }
            if br.s_max < 0.0 {
                out.push(Violation::NegativeThermalLimit {
                    from: br.from_bus,
                    to: br.to_bus,
                });
            }
            for id in [br.from_bus, br.to_bus] {
                if self.bus_index(id).is_none() {
                    out.push(Violation::UnknownBus { id });
                }
            }
        }
        for (i, gen) in self.generators.iter().enumerate() {
            if gen.p_min > gen.p_max || gen.q_min > gen.q_max {
                out.push(Violation::DispatchBoundsInverted { gen: i });
            }
            if gen.c2 < 0.0 {
                out.push(Violation::NegativeQuadraticCost { gen: i });
            }
            if self.bus_index(gen.bus).is_none() {
                out.push(Violation::UnknownBus { id: gen.bus });
            }
        }
        out
    }
}

/// Series admittance folded with the tap per the standard transformer
/// Pi-model, seen from the from side: (g, b, b_c) / tap^2. Identity for
/// tap = 1, shift = 0.
pub fn effective_admittance(br: &Branch) -> Result<(f64, f64, f64), CaseError> {
    if br.r == 0.0 && br.x == 0.0 {
        return Err(CaseError::ZeroImpedance {
            from: br.from_bus,
            to: br.to_bus,
        });
    }
    let t2 = br.tap * br.tap;
    Ok((br.g / t2, br.b / t2, br.b_c / t2))
}

/// Interprets the file's angle-difference bounds: (0, 0) and magnitudes of
/// 360 degrees or more mean "unconstrained" per the MATPOWER convention.
fn interpret_angle(lo_raw: f64, hi_raw: f64) -> (f64, f64) {
    if lo_raw == 0.0 && hi_raw == 0.0 {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let lo = if lo_raw <= -2.0 * PI {
        f64::NEG_INFINITY
    } else {
        lo_raw
    };
    let hi = if hi_raw >= 2.0 * PI {
        f64::INFINITY
    } else {
        hi_raw
    };
    (lo, hi)
}

struct RawCase {
    base_mva: Option<f64>,
    bus: Vec<Vec<f64>>,
    gen: Vec<Vec<f64>>,
    branch: Vec<Vec<f64>>,
    gencost: Vec<Vec<f64>>,
    name: String,
}

fn parse_matrix_row(line: &str) -> Result<Vec<f64>, CaseError> {
    let mut row = Vec::new();
    for tok in line.split_whitespace() {
        let v: f64 = tok
            .parse()
            .map_err(|_| CaseError::MalformedSection(format!("bad number `{tok}`")))?;
        row.push(v);
    }
    Ok(row)
}

fn parse_sections(text: &str) -> Result<RawCase, CaseError> {
    let mut raw = RawCase {
        base_mva: None,
        bus: Vec::new(),
        gen: Vec::new(),
        branch: Vec::new(),
        gencost: Vec::new(),
        name: String::new(),
    };
    let mut section: Option<&'static str> = None;
    let mut push_rows = |section: &str, chunk: &str, raw: &mut RawCase| -> Result<(), CaseError> {
        for part in chunk.split(';') {
            let row = parse_matrix_row(part)?;
            if row.is_empty() {
                continue;
            }
            match section {
                "bus" => raw.bus.push(row),
                "gen" => raw.gen.push(row),
                "branch" => raw.branch.push(row),
                "gencost" => raw.gencost.push(row),
                _ => unreachable!(),
            }
        }
        Ok(())
    };
    for line in text.lines() {
        let line = match line.find('%') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match section {
            None => {
                if let Some(rest) = line.strip_prefix("function mpc =") {
                    raw.name = rest.trim().to_string();
                    continue;
                }
                if line.contains("mpc.version") {
                    continue;
                }
                if let Some(eq) = line.strip_prefix("mpc.baseMVA") {
                    let val = eq.trim_start_matches(['=', ' ', '\t']).trim_end_matches(';');
                    raw.base_mva = Some(val.trim().parse().map_err(|_| {
                        CaseError::MalformedSection(format!("bad baseMVA `{val}`"))
                    })?);
                    continue;
                }
                for (key, name) in [
                    ("mpc.gencost", "gencost"),
                    ("mpc.branch", "branch"),
                    ("mpc.bus", "bus"),
                    ("mpc.gen", "gen"),
                ] {
                    if line.starts_with(key) && line.contains('=') {
                        let after = match line.find('[') {
                            Some(pos) => &line[pos + 1..],
                            None => "",
                        };
                        if let Some(close) = after.find(']') {
                            push_rows(name, &after[..close], &mut raw)?;
                        } else {
                            if !after.trim().is_empty() {
                                push_rows(name, after, &mut raw)?;
                            }
                            section = Some(name);
                        }
                        break;
                    }
                }
            }
            Some(name) => {
                match line.find(']') {
                    Some(pos) => {
                        push_rows(name, &line[..pos], &mut raw)?;
                        section = None;
                    }
                    None => push_rows(name, line, &mut raw)?,
                }
            }
        }
    }
    Ok(raw)
}

/// Parses MATPOWER case text into a per-unit [`Network`].
///
/// MW/MVAr columns are divided by `baseMVA`, cost coefficients rescaled so
/// the cost of a per-unit dispatch equals the raw file's cost of the same
/// dispatch in MW, and angle columns converted from degrees to radians.
/// Out-of-service branches (status 0) are dropped.
pub fn parse_case(text: &str) -> Result<Network, CaseError> {
    let raw = parse_sections(text)?;
    let base = raw
        .base_mva
        .ok_or_else(|| CaseError::MalformedSection("missing mpc.baseMVA".into()))?;
    if base <= 0.0 {
        return Err(CaseError::NonPositiveBase(base));
    }
    if raw.bus.is_empty() {
        return Err(CaseError::MalformedSection("missing mpc.bus".into()));
    }

    let mut buses = Vec::with_capacity(raw.bus.len());
    for row in &raw.bus {
        if row.len() < 13 {
            return Err(CaseError::MalformedSection(format!(
                "bus row has {} columns, need 13",
                row.len()
            )));
        }
        buses.push(Bus {
            id: row[0] as i64,
            v_min: row[12],
            v_max: row[11],
            g_sh: row[4] / base,
            b_sh: row[5] / base,
            p_d: row[2] / base,
            q_d: row[3] / base,
            is_ref: row[1] as i64 == 3,
        });
    }
    if !buses.iter().any(|b| b.is_ref) {
        return Err(CaseError::NoReferenceBus);
    }
    let known = |id: i64| buses.iter().any(|b| b.id == id);

    if raw.gencost.len() != raw.gen.len() && !raw.gencost.is_empty() {
        return Err(CaseError::MalformedSection(format!(
            "{} gencost rows for {} generators",
            raw.gencost.len(),
            raw.gen.len()
        )));
    }
    let mut generators = Vec::with_capacity(raw.gen.len());
    for (i, row) in raw.gen.iter().enumerate() {
        if row.len() < 10 {
            return Err(CaseError::MalformedSection(format!(
                "gen row has {} columns, need 10",
                row.len()
            )));
        }
        if row[7] == 0.0 {
            continue; // out of service
        }
        let bus = row[0] as i64;
        if !known(bus) {
            return Err(CaseError::UnknownBusReference(bus));
        }
        let (c2, c1, c0) = match raw.gencost.get(i) {
            None => (0.0, 0.0, 0.0),
            Some(cost) => {
                if cost.len() < 4 {
                    return Err(CaseError::MalformedSection("short gencost row".into()));
                }
                if cost[0] as i64 != 2 {
                    return Err(CaseError::MalformedSection(
                        "only polynomial gencost (model 2) is supported".into(),
                    ));
                }
                let n = cost[3] as usize;
                if cost.len() < 4 + n {
                    return Err(CaseError::MalformedSection("short gencost row".into()));
                }
                let c = &cost[4..4 + n];
                match n {
                    0 => (0.0, 0.0, 0.0),
                    1 => (0.0, 0.0, c[0]),
                    2 => (0.0, c[0] * base, c[1]),
                    3 => (c[0] * base * base, c[1] * base, c[2]),
                    _ => {
                        return Err(CaseError::MalformedSection(
                            "polynomial gencost degree above 2 is not supported".into(),
                        ))
                    }
                }
            }
        };
        generators.push(Generator {
            bus,
            p_min: row[9] / base,
            p_max: row[8] / base,
            q_min: row[4] / base,
            q_max: row[3] / base,
            c2,
            c1,
            c0,
        });
    }

    let mut branches = Vec::with_capacity(raw.branch.len());
    for row in &raw.branch {
        if row.len() < 13 {
            return Err(CaseError::MalformedSection(format!(
                "branch row has {} columns, need 13",
                row.len()
            )));
        }
        if row[10] == 0.0 {
            continue; // out of service
        }
        let (from_bus, to_bus) = (row[0] as i64, row[1] as i64);
        for id in [from_bus, to_bus] {
            if !known(id) {
                return Err(CaseError::UnknownBusReference(id));
            }
        }
        let (r, x) = (row[2], row[3]);
        if r == 0.0 && x == 0.0 {
            return Err(CaseError::ZeroImpedance {
                from: from_bus,
                to: to_bus,
            });
        }
        let den = r * r + x * x;
        let tap = if row[8] == 0.0 { 1.0 } else { row[8] };
        let (ang_min_raw, ang_max_raw) = interpret_angle(row[11].to_radians(), row[12].to_radians());
        let ang_min = ang_min_raw.max(-ANGLE_CLAMP);
        let ang_max = ang_max_raw.min(ANGLE_CLAMP);
        branches.push(Branch {
            from_bus,
            to_bus,
            g: r / den,
            b: -x / den,
            b_c: row[4],
            tap,
            shift: row[9].to_radians(),
            s_max: row[5] / base,
            ang_min,
            ang_max,
            ang_min_raw,
            ang_max_raw,
            r,
            x,
        });
    }

    Ok(Network {
        name: raw.name,
        base_mva: base,
        buses,
        branches,
        generators,
    })
}

/// Writes the network back to MATPOWER case text. Reparsing the output
/// yields a field-identical network; see the round-trip test.
pub fn write_case(net: &Network) -> String {
    let base = net.base_mva;
    let mut s = String::new();
    let name = if net.name.is_empty() { "case" } else { &net.name };
    let _ = writeln!(s, "function mpc = {name}");
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = {base};");
    let _ = writeln!(s, "\nmpc.bus = [");
    for b in &net.buses {
        let bus_type = if b.is_ref { 3 } else { 1 };
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t1\t1.0\t0.0\t0.0\t1\t{}\t{};",
            b.id,
            bus_type,
            b.p_d * base,
            b.q_d * base,
            b.g_sh * base,
            b.b_sh * base,
            b.v_max,
            b.v_min
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\nmpc.gen = [");
    for g in &net.generators {
        let _ = writeln!(
            s,
            "\t{}\t0.0\t0.0\t{}\t{}\t1.0\t{}\t1\t{}\t{};",
            g.bus,
            g.q_max * base,
            g.q_min * base,
            base,
            g.p_max * base,
            g.p_min * base
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\nmpc.gencost = [");
    for g in &net.generators {
        let _ = writeln!(
            s,
            "\t2\t0.0\t0.0\t3\t{}\t{}\t{};",
            g.c2 / (base * base),
            g.c1 / base,
            g.c0
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\nmpc.branch = [");
    for br in &net.branches {
        let ratio = if br.tap == 1.0 { 0.0 } else { br.tap };
        let ang_lo = if br.ang_min_raw.is_finite() {
            br.ang_min_raw.to_degrees()
        } else {
            -360.0
        };
        let ang_hi = if br.ang_max_raw.is_finite() {
            br.ang_max_raw.to_degrees()
        } else {
            360.0
        };
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t0.0\t0.0\t{}\t{}\t1\t{}\t{};",
            br.from_bus,
            br.to_bus,
            br.r,
            br.x,
            br.b_c,
            br.s_max * base,
            ratio,
            br.shift.to_degrees(),
            ang_lo,
            ang_hi
        );
    }
    let _ = writeln!(s, "];");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_BUS: &str = r#"
function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100.0;
mpc.bus = [
    1 3 0.0   0.0  0.0 0.0 1 1.0 0.0 138.0 1 1.1 0.9;
    2 1 120.0 40.0 0.0 0.0 1 1.0 0.0 138.0 1 1.1 0.9;
];
mpc.gen = [
    1 150.0 0.0 200.0 -200.0 1.0 100.0 1 300.0 0.0;
];
mpc.gencost = [
    2 0.0 0.0 3 0.02 10.0 0.0;
];
mpc.branch = [
    1 2 0.04 0.2 0.04 0.0 0.0 0.0 0.0 0.0 1 -30.0 30.0;
];
"#;

    #[test]
    fn parses_hand_written_two_bus() {
        let net = parse_case(TWO_BUS).unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.branches.len(), 1);
        assert_eq!(net.generators.len(), 1);
        assert_eq!(net.base_mva, 100.0);

        let b1 = &net.buses[0];
        assert!(b1.is_ref);
        assert_eq!(b1.p_d, 0.0);
        let b2 = &net.buses[1];
        assert!(!b2.is_ref);
        assert_eq!(b2.p_d, 1.2);
        assert_eq!(b2.q_d, 0.4);
        assert_eq!((b2.v_min, b2.v_max), (0.9, 1.1));

        let g = &net.generators[0];
        assert_eq!((g.p_min, g.p_max), (0.0, 3.0));
        assert_eq!((g.q_min, g.q_max), (-2.0, 2.0));
        // cost(pg pu) == cost(pg MW): 0.02*150^2 + 10*150 = 1950
        let pu = g.c2 * 1.5 * 1.5 + g.c1 * 1.5 + g.c0;
        assert!((pu - 1950.0).abs() < 1e-9);

        let br = &net.branches[0];
        assert_eq!(br.tap, 1.0);
        assert_eq!(br.s_max, 0.0);
        assert!((br.ang_max - 30f64.to_radians()).abs() < 1e-15);
        // y = 1/(0.04 + j0.2)
        let den = 0.04 * 0.04 + 0.2 * 0.2;
        assert!((br.g - 0.04 / den).abs() < 1e-15);
        assert!((br.b + 0.2 / den).abs() < 1e-15);
    }

    #[test]
    fn empty_input_is_malformed() {
        assert!(matches!(
            parse_case(""),
            Err(CaseError::MalformedSection(_))
        ));
    }

    #[test]
    fn ragged_bus_matrix_is_malformed() {
        let text = TWO_BUS.replace("2 1 120.0 40.0 0.0 0.0 1 1.0 0.0 138.0 1 1.1 0.9;", "2 1 120.0;");
        assert!(matches!(
            parse_case(&text),
            Err(CaseError::MalformedSection(_))
        ));
    }

    #[test]
    fn unknown_bus_in_branch() {
        let text = TWO_BUS.replace("1 2 0.04", "1 7 0.04");
        assert_eq!(parse_case(&text), Err(CaseError::UnknownBusReference(7)));
    }

    #[test]
    fn missing_reference_bus() {
        let text = TWO_BUS.replace("1 3 0.0", "1 1 0.0");
        assert_eq!(parse_case(&text), Err(CaseError::NoReferenceBus));
    }

    #[test]
    fn non_positive_base() {
        let text = TWO_BUS.replace("mpc.baseMVA = 100.0;", "mpc.baseMVA = 0.0;");
        assert_eq!(parse_case(&text), Err(CaseError::NonPositiveBase(0.0)));
    }

    #[test]
    fn piecewise_linear_cost_rejected() {
        let text = TWO_BUS.replace("2 0.0 0.0 3 0.02 10.0 0.0;", "1 0.0 0.0 2 0.0 0.0 100.0 2000.0;");
        assert!(matches!(
            parse_case(&text),
            Err(CaseError::MalformedSection(_))
        ));
    }

    #[test]
    fn out_of_service_branch_dropped() {
        let text = TWO_BUS.replace(
            "1 2 0.04 0.2 0.04 0.0 0.0 0.0 0.0 0.0 1 -30.0 30.0;",
            "1 2 0.04 0.2 0.04 0.0 0.0 0.0 0.0 0.0 0 -30.0 30.0;",
        );
        assert!(parse_case(&text).unwrap().branches.is_empty());
    }

    #[test]
    fn angle_bounds_clamped_but_raw_kept() {
        let text = TWO_BUS.replace("1 -30.0 30.0;", "1 -360.0 360.0;");
        let net = parse_case(&text).unwrap();
        let br = &net.branches[0];
        assert_eq!(br.ang_max, ANGLE_CLAMP);
        assert_eq!(br.ang_min, -ANGLE_CLAMP);
        // +-360 in the file means unconstrained for the AC checks
        assert_eq!(br.ang_max_raw, f64::INFINITY);

        let text = TWO_BUS.replace("1 -30.0 30.0;", "1 0.0 0.0;");
        let net = parse_case(&text).unwrap();
        assert_eq!(net.branches[0].ang_min_raw, f64::NEG_INFINITY);
        assert_eq!(net.branches[0].ang_max, ANGLE_CLAMP);
    }

    #[test]
    fn validate_clean_fixture_is_empty() {
        let net = parse_case(TWO_BUS).unwrap();
        assert!(net.validate().is_empty());
    }

    #[test]
    fn validate_flags_inverted_voltage_bounds() {
        let mut net = parse_case(TWO_BUS).unwrap();
        net.buses[1].v_min = 1.1;
        net.buses[1].v_max = 0.9;
        assert_eq!(
            net.validate(),
            vec![Violation::VoltageBoundsInverted { bus: 2 }]
        );
    }

    #[test]
    fn validate_flags_multiple_reference_buses() {
        let mut net = parse_case(TWO_BUS).unwrap();
        net.buses[1].is_ref = true;
        assert_eq!(net.validate(), vec![Violation::MultipleReferenceBuses]);
    }

    #[test]
    fn effective_admittance_identity_and_errors() {
        let mut br = Branch {
            from_bus: 1,
            to_bus: 2,
            g: 0.0,
            b: -1.0,
            b_c: 0.0,
            tap: 1.0,
            shift: 0.0,
            s_max: 0.0,
            ang_min: -0.5,
            ang_max: 0.5,
            ang_min_raw: -0.5,
            ang_max_raw: 0.5,
            r: 0.0,
            x: 1.0,
        };
        // r=0, x=1: y = -j
        assert_eq!(effective_admittance(&br).unwrap(), (0.0, -1.0, 0.0));

        // r=1, x=1: y = 0.5 - 0.5j
        br.r = 1.0;
        br.g = 0.5;
        br.b = -0.5;
        let (g, b, _) = effective_admittance(&br).unwrap();
        assert_eq!((g, b), (0.5, -0.5));

        // tap folding divides by tap^2
        br.tap = 2.0;
        let (g, b, _) = effective_admittance(&br).unwrap();
        assert_eq!((g, b), (0.125, -0.125));

        br.r = 0.0;
        br.x = 0.0;
        assert!(matches!(
            effective_admittance(&br),
            Err(CaseError::ZeroImpedance { .. })
        ));
    }

    #[test]
    fn roundtrip_two_bus() {
        let net = parse_case(TWO_BUS).unwrap();
        let text = write_case(&net);
        let net2 = parse_case(&text).unwrap();
        assert_eq!(net, net2);
    }
}
