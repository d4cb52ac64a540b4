//! CSV emission for sweep results.
//!
//! Layout: `experiment,axis,value,metric,mean,stderr,trials,seed` with one
//! row per (axis value, metric). Floats carry 9 significant digits, output is
//! UTF-8 with LF endings, and identical results serialize to identical bytes.

use std::io::{self, Write};

use crate::sweep::SweepResult;

/// Format with 9 significant digits, printf `%.9g` style: decimal notation
/// for moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.8e}", x);
    let (_, exp_part) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp_part.parse().expect("numeric exponent");

    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let plain = format!("{:.*}", decimals, x);
        let trimmed = if plain.contains('.') {
            plain.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            plain
        };
        trimmed
    } else {
        let (mantissa, _) = sci.split_once('e').unwrap();
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

/// Write one sweep result as CSV.
pub fn write_csv<W: Write + ?Sized>(result: &SweepResult, out: &mut W) -> io::Result<()> {
    out.write_all(b"experiment,axis,value,metric,mean,stderr,trials,seed\n")?;
    for row in &result.rows {
        let metrics = [
            ("R_DL", &row.stats.r_dl),
            ("R_UL", &row.stats.r_ul),
            ("R_total", &row.stats.r_total),
        ];
        for (name, stat) in metrics {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                result.spec_name,
                result.axis.as_str(),
                fmt_sig9(row.value),
                name,
                fmt_sig9(stat.mean),
                fmt_sig9(stat.stderr),
                row.stats.trials_used,
                result.master_seed
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_nine_significant_digits() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(-20.0), "-20");
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(3.0), "3");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(1234567891.0), "1.23456789e9");
        assert_eq!(fmt_sig9(0.0001), "0.0001");
        assert_eq!(fmt_sig9(0.00001), "1e-5");
        assert_eq!(fmt_sig9(12.3456789123), "12.3456789");
    }

    #[test]
    fn formatting_is_parse_stable() {
        // parsing the printed form and reformatting reproduces the bytes
        for x in [1.234567891234e-3, -9.87654321e7, 42.0, 7.5e-11, 1e9] {
            let s = fmt_sig9(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(fmt_sig9(back), s);
            // 9 significant digits keep 5e-9 relative accuracy
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }
}
