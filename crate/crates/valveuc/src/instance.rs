//! Problem data model, text instance format, validation, and the
//! dispatch-to-commitment conversion for single-period runs.
//!
//! An instance document is UTF-8 text. `#` starts a comment that runs to the
//! end of the line. The header gives the horizon length and the per-period
//! load data, then one record per unit follows:
//!
//! ```text
//! periods 3
//! demand 370 400 450
//! reserve 37 40 45
//! unit id=u1 a=1000 b=16.19 c=0.00048 e=300 f=0.035 pmin=150 pmax=455
//!      ton=8 toff=8 ahot=4500 acold=9000 tcold=5 yprev=1 tprev=8
//! ```
//!
//! A `unit` record is the keyword `unit` followed by fifteen `key=value`
//! fields in any order; records may span lines. Unknown fields, duplicate
//! fields, missing fields, and any token outside the grammar are errors.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Cost and technical parameters of one generating unit.
///
/// Fuel cost at output `p` is `a + b p + c p^2 + |e sin(f (p_min - p))|`:
/// a quadratic plus the valve-point ripple of amplitude `e` and angular
/// frequency `f` (rad/MW).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitParams {
    pub id: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub f: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Minimum number of consecutive on periods after a start.
    pub t_on: u32,
    /// Minimum number of consecutive off periods after a shutdown.
    pub t_off: u32,
    /// Hot start-up cost.
    pub a_hot: f64,
    /// Cold start-up cost.
    pub a_cold: f64,
    /// A start is cold when the unit was off for more than `t_cold` periods.
    pub t_cold: u32,
    /// State just before the horizon: `true` = on.
    pub y_prev: bool,
    /// Number of periods the unit has been in state `y_prev` (>= 1).
    pub t_prev: u32,
}

impl UnitParams {
    /// Commitment state assumed for period `i <= 0`, before the horizon.
    ///
    /// The unit spent the `t_prev` periods `-(t_prev-1)..=0` in state
    /// `y_prev`; anything earlier is taken as the opposite state. Start-type
    /// windows that reach past the horizon use this rule.
    pub fn state_before_horizon(&self, i: i64) -> bool {
        debug_assert!(i <= 0);
        if i > -(self.t_prev as i64) {
            self.y_prev
        } else {
            !self.y_prev
        }
    }

    /// Periods at the start of the horizon during which the unit is pinned
    /// to its previous state by its minimum up/down time.
    pub fn pinned_prefix(&self) -> u32 {
        let t_min = if self.y_prev { self.t_on } else { self.t_off };
        t_min.saturating_sub(self.t_prev)
    }
}

/// A unit-commitment problem: units, horizon, and per-period load data.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub units: Vec<UnitParams>,
    pub periods: usize,
    /// System load per period, MW.
    pub demand: Vec<f64>,
    /// Spinning reserve requirement per period, MW.
    pub reserve: Vec<f64>,
}

/// One validation finding: a short stable code plus a human-readable message.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub code: &'static str,
    pub message: String,
}

/// Outcome of [`Instance::validate`]. An instance is accepted for solving
/// exactly when `errors` is empty.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error[{}]: {}", e.code, e.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning[{}]: {}", w.code, w.message)?;
        }
        Ok(())
    }
}

/// Errors raised while parsing an instance document.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unit record missing field(s): {fields}")]
    MissingField { line: usize, fields: String },
    #[error("{what} has {got} value(s) but periods is {want}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
}

fn syntax(line: usize, msg: impl Into<String>) -> InstanceError {
    InstanceError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// A token with the 1-based line it came from.
struct Tok<'a> {
    line: usize,
    text: &'a str,
}

fn tokenize(text: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        for t in body.split_whitespace() {
            toks.push(Tok {
                line: i + 1,
                text: t,
            });
        }
    }
    toks
}

struct Parser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            toks: tokenize(text),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Tok<'a>> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn last_line(&self) -> usize {
        self.toks.last().map_or(1, |t| t.line)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), InstanceError> {
        match self.next() {
            Some(t) if t.text == kw => Ok(()),
            Some(t) => Err(syntax(
                t.line,
                format!("expected `{kw}`, found `{}`", t.text),
            )),
            None => Err(syntax(self.last_line(), format!("expected `{kw}`"))),
        }
    }

    fn parse_f64(&mut self, what: &str) -> Result<f64, InstanceError> {
        match self.next() {
            Some(t) => t.text.parse::<f64>().map_err(|_| {
                syntax(t.line, format!("invalid number `{}` for {what}", t.text))
            }),
            None => Err(syntax(self.last_line(), format!("expected value for {what}"))),
        }
    }

    fn parse_usize(&mut self, what: &str) -> Result<usize, InstanceError> {
        match self.next() {
            Some(t) => t.text.parse::<usize>().map_err(|_| {
                syntax(t.line, format!("invalid integer `{}` for {what}", t.text))
            }),
            None => Err(syntax(self.last_line(), format!("expected value for {what}"))),
        }
    }

    /// Reads exactly `n` reals; stops with an error when a keyword or EOF
    /// arrives early, or when an (n+1)-th number follows.
    fn parse_profile(&mut self, what: &'static str, n: usize) -> Result<Vec<f64>, InstanceError> {
        let mut vals = Vec::with_capacity(n);
        while let Some(t) = self.peek() {
            if t.text.parse::<f64>().is_err() {
                break;
            }
            vals.push(self.parse_f64(what)?);
        }
        if vals.len() != n {
            return Err(InstanceError::LengthMismatch {
                what,
                got: vals.len(),
                want: n,
            });
        }
        Ok(vals)
    }

    fn parse_unit(&mut self) -> Result<UnitParams, InstanceError> {
        let start_line = self.peek().map_or(self.last_line(), |t| t.line);
        let mut fields: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
        while let Some(t) = self.peek() {
            if t.text == "unit" {
                break;
            }
            let line = t.line;
            let tok = self.next().unwrap().text;
            let (key, value) = tok.split_once('=').ok_or_else(|| {
                syntax(line, format!("expected key=value in unit record, found `{tok}`"))
            })?;
            if !UNIT_FIELDS.contains(&key) {
                return Err(syntax(line, format!("unknown field `{key}` in unit record")));
            }
            if fields.insert(key, (value, line)).is_some() {
                return Err(syntax(line, format!("duplicate field `{key}` in unit record")));
            }
        }
        let missing: Vec<&str> = UNIT_FIELDS
            .iter()
            .copied()
            .filter(|k| !fields.contains_key(k))
            .collect();
        if !missing.is_empty() {
            return Err(InstanceError::MissingField {
                line: start_line,
                fields: missing.join(", "),
            });
        }
        let f64_field = |key: &str| -> Result<f64, InstanceError> {
            let (v, line) = fields[key];
            v.parse::<f64>()
                .map_err(|_| syntax(line, format!("invalid number `{v}` for field `{key}`")))
        };
        let u32_field = |key: &str| -> Result<u32, InstanceError> {
            let (v, line) = fields[key];
            v.parse::<u32>()
                .map_err(|_| syntax(line, format!("invalid integer `{v}` for field `{key}`")))
        };
        let (yprev_text, yprev_line) = fields["yprev"];
        let y_prev = match yprev_text {
            "0" => false,
            "1" => true,
            other => {
                return Err(syntax(
                    yprev_line,
                    format!("field `yprev` must be 0 or 1, found `{other}`"),
                ))
            }
        };
        Ok(UnitParams {
            id: fields["id"].0.to_string(),
            a: f64_field("a")?,
            b: f64_field("b")?,
            c: f64_field("c")?,
            e: f64_field("e")?,
            f: f64_field("f")?,
            p_min: f64_field("pmin")?,
            p_max: f64_field("pmax")?,
            t_on: u32_field("ton")?,
            t_off: u32_field("toff")?,
            a_hot: f64_field("ahot")?,
            a_cold: f64_field("acold")?,
            t_cold: u32_field("tcold")?,
            y_prev,
            t_prev: u32_field("tprev")?,
        })
    }

    fn parse_unit_blocks(&mut self) -> Result<Vec<UnitParams>, InstanceError> {
        let mut units = Vec::new();
        while let Some(t) = self.peek() {
            if t.text != "unit" {
                let (line, text) = (t.line, t.text.to_string());
                return Err(syntax(line, format!("expected `unit`, found `{text}`")));
            }
            self.next();
            units.push(self.parse_unit()?);
        }
        Ok(units)
    }
}

const UNIT_FIELDS: [&str; 15] = [
    "id", "a", "b", "c", "e", "f", "pmin", "pmax", "ton", "toff", "ahot", "acold", "tcold",
    "yprev", "tprev",
];

/// Parses a full instance document (header plus unit records).
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut p = Parser::new(text);
    p.expect_keyword("periods")?;
    let periods = p.parse_usize("periods")?;
    p.expect_keyword("demand")?;
    let demand = p.parse_profile("demand", periods)?;
    p.expect_keyword("reserve")?;
    let reserve = p.parse_profile("reserve", periods)?;
    let units = p.parse_unit_blocks()?;
    Ok(Instance {
        units,
        periods,
        demand,
        reserve,
    })
}

/// Parses a units-only document (no header), as used by the `eld` command.
pub fn parse_units(text: &str) -> Result<Vec<UnitParams>, InstanceError> {
    Parser::new(text).parse_unit_blocks()
}

impl fmt::Display for UnitParams {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            out,
            "unit id={} a={} b={} c={} e={} f={} pmin={} pmax={} ton={} toff={} \
             ahot={} acold={} tcold={} yprev={} tprev={}",
            self.id,
            self.a,
            self.b,
            self.c,
            self.e,
            self.f,
            self.p_min,
            self.p_max,
            self.t_on,
            self.t_off,
            self.a_hot,
            self.a_cold,
            self.t_cold,
            self.y_prev as u8,
            self.t_prev
        )
    }
}

impl fmt::Display for Instance {
    /// Canonical document form; `parse_instance` inverts it exactly. Floats
    /// print with the shortest representation that round-trips.
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(out, "periods {}", self.periods)?;
        write!(out, "demand")?;
        for d in &self.demand {
            write!(out, " {d}")?;
        }
        writeln!(out)?;
        write!(out, "reserve")?;
        for r in &self.reserve {
            write!(out, " {r}")?;
        }
        writeln!(out)?;
        for u in &self.units {
            writeln!(out, "{u}")?;
        }
        Ok(())
    }
}

/// Absolute slack allowed in the concavity comparison `c <= e f^2 / 2`.
pub const CONCAVITY_TOL: f64 = 1e-12;

impl Instance {
    /// Checks the instance against the model's assumptions.
    ///
    /// Errors make the instance unusable: a cost curve that is not concave
    /// between valve points (the piecewise-linear interpolant would not be a
    /// lower bound), inverted production limits, a nonpositive horizon,
    /// malformed numbers. Warnings flag suspicious but workable data.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        if self.periods == 0 {
            rep.errors.push(Issue {
                code: "periods",
                message: "horizon must have at least one period".into(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for u in &self.units {
            if !seen.insert(u.id.as_str()) {
                rep.errors.push(Issue {
                    code: "duplicate-id",
                    message: format!("unit id `{}` appears more than once", u.id),
                });
            }
            let finite = [u.a, u.b, u.c, u.e, u.f, u.p_min, u.p_max, u.a_hot, u.a_cold];
            if finite.iter().any(|v| !v.is_finite()) {
                rep.errors.push(Issue {
                    code: "not-finite",
                    message: format!("unit `{}` has a non-finite parameter", u.id),
                });
                continue;
            }
            if u.p_min < 0.0 || u.p_min > u.p_max {
                rep.errors.push(Issue {
                    code: "pmin-range",
                    message: format!(
                        "unit `{}`: need 0 <= pmin <= pmax, got [{}, {}]",
                        u.id, u.p_min, u.p_max
                    ),
                });
            }
            if u.e < 0.0 || u.f < 0.0 {
                rep.errors.push(Issue {
                    code: "valve-negative",
                    message: format!("unit `{}`: e and f must be nonnegative", u.id),
                });
            }
            let bound = u.e * u.f * u.f / 2.0;
            if u.c - bound > CONCAVITY_TOL {
                rep.errors.push(Issue {
                    code: "concavity",
                    message: format!(
                        "unit `{}`: c = {} exceeds e*f^2/2 = {}; cost is not concave \
                         between valve points, so the linear interpolant would not be \
                         a lower bound",
                        u.id, u.c, bound
                    ),
                });
            }
            if u.t_prev < 1 {
                rep.errors.push(Issue {
                    code: "tprev-range",
                    message: format!("unit `{}`: tprev must be >= 1", u.id),
                });
            }
            if u.e == 0.0 && u.c <= 0.0 {
                rep.warnings.push(Issue {
                    code: "degenerate-cost",
                    message: format!(
                        "unit `{}`: no valve term and nonconvex quadratic (c <= 0)",
                        u.id
                    ),
                });
            }
            if u.a_hot > u.a_cold {
                rep.warnings.push(Issue {
                    code: "startup-order",
                    message: format!(
                        "unit `{}`: hot start cost {} exceeds cold start cost {}",
                        u.id, u.a_hot, u.a_cold
                    ),
                });
            }
        }
        for (t, (&d, &r)) in self.demand.iter().zip(&self.reserve).enumerate() {
            if !d.is_finite() || d < 0.0 {
                rep.errors.push(Issue {
                    code: "demand-negative",
                    message: format!("demand in period {} is {}", t + 1, d),
                });
            }
            if !r.is_finite() || r < 0.0 {
                rep.errors.push(Issue {
                    code: "reserve-negative",
                    message: format!("reserve in period {} is {}", t + 1, r),
                });
            }
        }
        let cap: f64 = self.units.iter().map(|u| u.p_max).sum();
        let need = self
            .demand
            .iter()
            .zip(&self.reserve)
            .map(|(d, r)| d + r)
            .fold(0.0_f64, f64::max);
        if cap < need {
            rep.warnings.push(Issue {
                code: "capacity",
                message: format!(
                    "total capacity {cap} is below peak demand plus reserve {need}; \
                     every period needing more than {cap} MW is infeasible"
                ),
            });
        }
        rep
    }
}

/// Wraps a set of dispatch-only units into a single-period commitment
/// instance with the given load.
///
/// Every unit starts committed (`y_prev = 1`, `t_prev = 1`) and its minimum
/// up time is raised so the initial-state constraint pins it on for the one
/// period of the horizon: the solve then decides dispatch only, and no
/// start-up cost can be incurred.
pub fn eld_to_ucp(units: &[UnitParams], load: f64) -> Instance {
    assert!(!units.is_empty(), "eld_to_ucp needs at least one unit");
    assert!(load > 0.0, "eld_to_ucp needs a positive load");
    let units = units
        .iter()
        .map(|u| UnitParams {
            y_prev: true,
            t_prev: 1,
            t_on: 2,
            ..u.clone()
        })
        .collect();
    Instance {
        units,
        periods: 1,
        demand: vec![load],
        reserve: vec![0.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn test_unit(id: &str) -> UnitParams {
        UnitParams {
            id: id.to_string(),
            a: 100.0,
            b: 2.0,
            c: 0.001,
            e: 10.0,
            f: 0.2,
            p_min: 50.0,
            p_max: 200.0,
            t_on: 2,
            t_off: 2,
            a_hot: 30.0,
            a_cold: 60.0,
            t_cold: 2,
            y_prev: true,
            t_prev: 3,
        }
    }

    const MINIMAL: &str = "\
periods 1
demand 100
reserve 0
unit id=g1 a=100 b=2 c=0.001 e=10 f=0.2 pmin=50 pmax=200 ton=1 toff=1 \
ahot=30 acold=60 tcold=2 yprev=1 tprev=3
";

    #[test]
    fn parses_minimal_document() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.periods, 1);
        assert_eq!(inst.demand, vec![100.0]);
        assert_eq!(inst.reserve, vec![0.0]);
        assert_eq!(inst.units.len(), 1);
        assert_eq!(inst.units[0].id, "g1");
        assert_eq!(inst.units[0].p_max, 200.0);
        assert!(inst.units[0].y_prev);
    }

    #[test]
    fn demand_length_mismatch_is_reported() {
        let doc = "periods 2\ndemand 1 2 3\nreserve 0 0\n";
        match parse_instance(doc) {
            Err(InstanceError::LengthMismatch { what, got, want }) => {
                assert_eq!(what, "demand");
                assert_eq!(got, 3);
                assert_eq!(want, 2);
            }
            other => panic!("expected length mismatch, got {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let doc = format!("{MINIMAL}stray-token\n");
        let err = parse_instance(&doc).unwrap_err();
        assert!(err.to_string().contains("stray-token"), "{err}");
    }

    #[test]
    fn unknown_and_duplicate_fields_are_rejected() {
        let doc = MINIMAL.replace("tcold=2", "tcold=2 bogus=1");
        assert!(parse_instance(&doc)
            .unwrap_err()
            .to_string()
            .contains("unknown field `bogus`"));
        let doc = MINIMAL.replace("tcold=2", "tcold=2 tcold=3");
        assert!(parse_instance(&doc)
            .unwrap_err()
            .to_string()
            .contains("duplicate field `tcold`"));
    }

    #[test]
    fn missing_field_lists_what_is_absent() {
        let doc = MINIMAL.replace("tcold=2 ", "");
        let err = parse_instance(&doc).unwrap_err();
        assert!(matches!(err, InstanceError::MissingField { .. }));
        assert!(err.to_string().contains("tcold"));
    }

    #[test]
    fn comments_are_ignored() {
        let doc = format!("# leading comment\n{MINIMAL}# trailing\n");
        assert!(parse_instance(&doc).is_ok());
    }

    #[test]
    fn document_round_trips() {
        let inst = parse_instance(MINIMAL).unwrap();
        let printed = inst.to_string();
        let reparsed = parse_instance(&printed).unwrap();
        assert_eq!(inst, reparsed);
    }

    #[test]
    fn concavity_boundary_cases() {
        // c = 0.001 <= 10 * 0.2^2 / 2 = 0.2: fine.
        let mut inst = Instance {
            units: vec![test_unit("g1")],
            periods: 1,
            demand: vec![100.0],
            reserve: vec![0.0],
        };
        assert!(inst.validate().is_ok());
        // c = 1 with e = 0: bound is 0, so 1 > 0 must be flagged.
        inst.units[0].c = 1.0;
        inst.units[0].e = 0.0;
        inst.units[0].f = 0.0;
        let rep = inst.validate();
        assert!(rep.errors.iter().any(|e| e.code == "concavity"));
    }

    #[test]
    fn capacity_shortfall_is_a_warning_not_an_error() {
        let inst = Instance {
            units: vec![test_unit("g1")],
            periods: 1,
            demand: vec![300.0],
            reserve: vec![50.0],
        };
        let rep = inst.validate();
        assert!(rep.is_ok());
        assert!(rep.warnings.iter().any(|w| w.code == "capacity"));
    }

    #[test]
    fn eld_conversion_pins_units_on() {
        let units = vec![test_unit("g1"), test_unit("g2")];
        let inst = eld_to_ucp(&units, 150.0);
        assert_eq!(inst.periods, 1);
        assert_eq!(inst.demand, vec![150.0]);
        assert_eq!(inst.reserve, vec![0.0]);
        for u in &inst.units {
            assert!(u.y_prev);
            assert_eq!(u.t_prev, 1);
            // Minimum-up pin must cover period 1.
            assert!(u.pinned_prefix() >= 1);
        }
    }

    #[test]
    fn pre_horizon_state_rule() {
        let u = test_unit("g1"); // on for the last 3 periods
        assert!(u.state_before_horizon(0));
        assert!(u.state_before_horizon(-1));
        assert!(u.state_before_horizon(-2));
        assert!(!u.state_before_horizon(-3));
        assert!(!u.state_before_horizon(-10));
    }
}
