use std::path::Path;

use crate::error::{Error, Result};

/// `%.17g`: shortest fixed or scientific form with 17 significant digits, which
/// round-trips every `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        strip_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa.to_owned()), exp.abs())
    }
}

fn strip_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

/// RFC 4180 CSV with a header row and one column per series.
pub fn write_series_csv(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.1.len());
    if let Some((name, col)) = columns.iter().find(|c| c.1.len() != rows) {
        return Err(Error::Input(format!(
            "column {name:?} has {} entries, expected {rows}",
            col.len()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(columns.iter().map(|c| c.0))
        .map_err(|e| csv_error(path, e))?;
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| format_f64(c.1[r])))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_series_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out: Vec<(String, Vec<f64>)> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| (h.to_owned(), Vec::new()))
        .collect();
    for record in r.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (col, field) in out.iter_mut().zip(record.iter()) {
            let v = field
                .parse::<f64>()
                .map_err(|_| Error::format(path, format!("not a number: {field:?}")))?;
            col.1.push(v);
        }
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(1.0), "1");
        assert_eq!(format_f64(-2.5), "-2.5");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_f64(1e20), "1e+20");
        assert_eq!(format_f64(123456.0), "123456");
    }

    #[test]
    fn two_columns_of_three() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_series_csv(&p, &[("a", &[1.0, 2.0, 3.0]), ("b", &[0.1, 0.2, 0.3])]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), "a,b");
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        let dir = tempdir().unwrap();
        let r = write_series_csv(&dir.path().join("s.csv"), &[("a", &[1.0]), ("b", &[])]);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    proptest! {
        #[test]
        fn formatting_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = format_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.731).sin() * 10f64.powi(i % 9 - 4)).collect();
        write_series_csv(&p, &[("x", &xs)]).unwrap();
        let back = read_series_csv(&p).unwrap();
        assert_eq!(back[0].0, "x");
        for (a, b) in xs.iter().zip(&back[0].1) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
