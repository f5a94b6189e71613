//! Byte-stable CSV output: nine significant digits, `.` decimal point,
//! `\n` line endings, empty fields for missing values.

use std::fmt::Write as _;

/// Formats `x` like C's `%.9g`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // The exponent after rounding to nine digits decides the notation.
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub const HEADER: &str =
    "series,swept_value,ph_density,price,expected_cost,benchmark_cost,exact_cost,mc_mean,mc_std_err,regime";

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepRow {
    pub series: String,
    pub swept_value: f64,
    /// Total pH density of the market at this point.
    pub ph_density: f64,
    pub price: Option<f64>,
    pub expected_cost: Option<f64>,
    pub benchmark_cost: Option<f64>,
    pub exact_cost: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_std_err: Option<f64>,
    pub regime: String,
}

impl SweepRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.series,
            fmt_num(self.swept_value),
            fmt_num(self.ph_density),
            fmt_opt(self.price),
            fmt_opt(self.expected_cost),
            fmt_opt(self.benchmark_cost),
            fmt_opt(self.exact_cost),
            fmt_opt(self.mc_mean),
            fmt_opt(self.mc_std_err),
            self.regime,
        )
    }
}

pub fn render(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_line());
    }
    out
}
