//! Text formats: potential files, inline potential specs, flat `key = value`
//! configs and tab-separated result tables.
//!
//! Floats are written with `{:e}`, the shortest representation that parses back
//! to the same bits. Integral table cells are written as plain integers.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::TrigPotential;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn finite(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("{what} `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what} `{tok}` is not finite")));
    }
    Ok(v)
}

/// Modes above this are rejected by the parsers.
pub const MAX_MODES: usize = 1 << 16;

/// Parses
///
/// ```text
/// # comment
/// modes 3
/// 1  0.25  0.0
/// 3  0.0  -0.1
/// ```
///
/// Each data line is `n re im` for the coefficient of `e^{i 2 pi n x}`; unlisted modes are zero.
pub fn parse_potential(text: &str) -> Result<TrigPotential> {
    let mut modes: Option<usize> = None;
    let mut coeffs: Vec<Option<Complex64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match (modes, toks.as_slice()) {
            (None, ["modes", n]) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| parse_err(line, format!("mode count `{n}` is not a non-negative integer")))?;
                if n > MAX_MODES {
                    return Err(parse_err(line, format!("mode count {n} exceeds {MAX_MODES}")));
                }
                modes = Some(n);
                coeffs = vec![None; n];
            }
            (None, _) => return Err(parse_err(line, "expected `modes <N>` before coefficients")),
            (Some(_), ["modes", ..]) => return Err(parse_err(line, "repeated `modes` line")),
            (Some(n_modes), [n, re, im]) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| parse_err(line, format!("mode index `{n}` is not a positive integer")))?;
                if n == 0 || n > n_modes {
                    return Err(parse_err(line, format!("mode index {n} outside 1..={n_modes}")));
                }
                let c = Complex64::new(finite(re, line, "real part")?, finite(im, line, "imaginary part")?);
                if coeffs[n - 1].replace(c).is_some() {
                    return Err(parse_err(line, format!("mode {n} given twice")));
                }
            }
            (Some(_), _) => return Err(parse_err(line, "expected `n re im`")),
        }
    }
    if modes.is_none() {
        return Err(parse_err(0, "missing `modes <N>` line"));
    }
    Ok(TrigPotential::new(
        coeffs.into_iter().map(|c| c.unwrap_or_default()).collect(),
    ))
}

/// Inverse of [`parse_potential`]; `header` lines are written as comments.
pub fn write_potential(psi: &TrigPotential, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let _ = writeln!(out, "modes {}", psi.modes());
    for (i, c) in psi.coeffs().iter().enumerate() {
        let _ = writeln!(out, "{}\t{:e}\t{:e}", i + 1, c.re, c.im);
    }
    out
}

/// Parses a sum of terms `cos:<n>:<amp>` and `sin:<n>:<amp>` joined by `+`,
/// meaning `amp cos(2 pi n x)` and `amp sin(2 pi n x)`; `0` is the zero potential.
pub fn parse_inline(spec: &str) -> Result<TrigPotential> {
    let spec = spec.trim();
    if spec == "0" {
        return Ok(TrigPotential::zero());
    }
    let mut psi = TrigPotential::zero();
    for term in spec.split('+') {
        let term = term.trim();
        let parts: Vec<&str> = term.split(':').collect();
        let [kind, n, amp] = parts.as_slice() else {
            return Err(parse_err(
                1,
                format!("term `{term}` is not `cos:<n>:<amp>` or `sin:<n>:<amp>`"),
            ));
        };
        let n: usize = n
            .trim()
            .parse()
            .ok()
            .filter(|&n| (1..=MAX_MODES).contains(&n))
            .ok_or_else(|| parse_err(1, format!("mode `{n}` in `{term}` must be in 1..={MAX_MODES}")))?;
        let amp = finite(amp.trim(), 1, "amplitude")?;
        let t = match kind.trim() {
            "cos" => TrigPotential::cosine(n, amp),
            "sin" => TrigPotential::sine(n, amp),
            other => return Err(parse_err(1, format!("unknown term kind `{other}`"))),
        };
        psi = &psi + &t;
    }
    if psi.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(parse_err(1, "amplitudes overflow when summed"));
    }
    Ok(psi)
}

/// Ordered `key = value` pairs; blank lines and `#` comments are skipped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KeyValues {
    pub entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(parse_err(line, format!("invalid key `{k}`")));
            }
            if entries.iter().any(|(e, _)| e == k) {
                return Err(parse_err(line, format!("key `{k}` given twice")));
            }
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(KeyValues { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    /// `key = value` lines in insertion order.
    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// A tab-separated numeric table with `#` metadata lines and one header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// Metadata lines without the leading `# `.
    pub meta: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Panics if the row width differs from the header.
    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.meta {
            for l in m.lines() {
                let _ = writeln!(out, "# {l}");
            }
        }
        let _ = writeln!(out, "{}", self.columns.join("\t"));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|&v| cell(v)).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Table::default();
        let mut header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if let Some(m) = raw.strip_prefix('#') {
                if header {
                    return Err(parse_err(line, "metadata after the header row"));
                }
                t.meta.push(m.strip_prefix(' ').unwrap_or(m).to_string());
                continue;
            }
            if raw.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if !header {
                if cells.iter().any(|c| c.is_empty()) {
                    return Err(parse_err(line, "empty column name"));
                }
                if cells[0].starts_with('#') {
                    return Err(parse_err(line, "the first column name may not start with `#`"));
                }
                t.columns = cells.iter().map(|c| c.to_string()).collect();
                header = true;
                continue;
            }
            if cells.len() != t.columns.len() {
                return Err(parse_err(
                    line,
                    format!("row has {} cells, header has {}", cells.len(), t.columns.len()),
                ));
            }
            let row = cells
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| parse_err(line, format!("cell `{c}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            t.rows.push(row);
        }
        if !header {
            return Err(parse_err(0, "missing header row"));
        }
        Ok(t)
    }
}

/// Integral values below 2^53 are written as integers, everything else with `{:e}`.
fn cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9.0e15 && !(v == 0.0 && v.is_sign_negative()) {
        format!("{}", v as i64)
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn potential_file_with_comments_and_gaps() {
        let psi = parse_potential("# demo\nmodes 3\n1 0.25 0   # first\n\n3 0 -0.1\n").unwrap();
        assert_eq!(psi.modes(), 3);
        assert_eq!(psi.coeff(1), Complex64::new(0.25, 0.0));
        assert_eq!(psi.coeff(2), Complex64::new(0.0, 0.0));
        assert_eq!(psi.coeff(-3), Complex64::new(0.0, 0.1));
        assert!(parse_potential("modes 0\n").unwrap().is_zero());
    }

    #[test]
    fn malformed_potential_files_are_rejected() {
        for bad in [
            "",
            "1 0 0\n",
            "modes 2\n3 0 0\n",
            "modes 2\n0 0 0\n",
            "modes 2\n1 0 0\n1 0 0\n",
            "modes 2\n1 x 0\n",
            "modes 2\n1 0 inf\n",
            "modes 2\nmodes 2\n",
            "modes -1\n",
            "modes 2\n1 0\n",
        ] {
            assert!(matches!(parse_potential(bad), Err(Error::Parse { .. })), "{bad:?}");
        }
    }

    #[test]
    fn inline_terms_sum() {
        let psi = parse_inline("cos:1:0.5 + sin:3:-0.2 + cos:1:0.5").unwrap();
        assert_eq!(psi.coeff(1), Complex64::new(0.5, 0.0));
        assert!(
            (psi.eval(0.25) - (2f64 * std::f64::consts::PI * 0.25).cos()
                + 0.2 * (6.0 * std::f64::consts::PI * 0.25).sin())
            .abs()
                < 1e-15
        );
        assert!(parse_inline("0").unwrap().is_zero());
        for bad in [
            "",
            "cos:0:1",
            "tan:1:1",
            "cos:1",
            "cos:1:nan",
            "cos:1:1 +",
            "cos:1:1e308 + cos:1:1e308 + cos:1:1e308 + cos:1:1e308",
        ] {
            assert!(parse_inline(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn key_values_keep_order_and_reject_duplicates() {
        let kv = KeyValues::parse("b = 2\n# skip\na=1 # trailing\n").unwrap();
        assert_eq!(kv.entries, vec![("b".into(), "2".into()), ("a".into(), "1".into())]);
        assert_eq!(kv.render(), "b = 2\na = 1\n");
        assert!(KeyValues::parse("a = 1\na = 2\n").is_err());
        assert!(KeyValues::parse("novalue\n").is_err());
        assert!(KeyValues::parse("bad key = 1\n").is_err());
    }

    #[test]
    fn table_rejects_ragged_rows() {
        assert!(Table::parse("a\tb\n1\t2\n3\n").is_err());
        assert!(Table::parse("# only meta\n").is_err());
        assert!(Table::parse("a\tb\n1\tx\n").is_err());
        assert!(Table::parse(" #a\tb\n1\t2\n").is_err());
    }

    fn potential() -> impl Strategy<Value = TrigPotential> {
        prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 0..12)
            .prop_map(|v| TrigPotential::new(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn potential_files_roundtrip_exactly(psi in potential()) {
            let text = write_potential(&psi, &["generated".into()]);
            prop_assert_eq!(parse_potential(&text).unwrap(), psi);
        }

        #[test]
        fn tables_roundtrip_exactly(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 0..20)) {
            let mut t = Table::new(&["x", "y", "z"]);
            t.meta = vec!["version 1".into(), "a = b".into()];
            for r in rows {
                t.push(r);
            }
            prop_assert_eq!(Table::parse(&t.render()).unwrap(), t);
        }

        #[test]
        fn parsers_never_panic(s in "\\PC{0,80}") {
            let _ = parse_potential(&s);
            let _ = parse_inline(&s);
            let _ = KeyValues::parse(&s);
            let _ = Table::parse(&s);
        }
    }
}
