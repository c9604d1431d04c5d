//! CSV output.
//!
//! Reals use `%.8g`-style formatting so files are stable byte for byte.
//! The `d` column is 0 for perfect feedback.

use std::io::Write;

use crate::error::Result;
use crate::montecarlo::SweepResult;

pub const SWEEP_HEADER: &str = "scheme,B,nr,feedback,d,snr_db,mean_max_mse,mean_mse,ber,realizations,seed";
pub const TRACE_HEADER: &str = "iteration,max_mse";

/// Formats `x` with `digits` significant digits the way C's `%g` does:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (digits as i32 - 1 - exp) as usize, x))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn real(x: f64) -> String {
    format_sig(x, 8)
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: &mut W) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.bs_count,
            r.nr,
            r.feedback.label(),
            r.feedback.bits(),
            real(r.snr_db),
            real(r.mean_max_mse),
            real(r.mean_mse),
            real(r.ber),
            r.realizations,
            r.seed
        )?;
    }
    Ok(())
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// One row per iteration, numbered from 1.
pub fn write_trace_csv<W: Write>(history: &[f64], out: &mut W) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for (i, m) in history.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, real(*m))?;
    }
    Ok(())
}
