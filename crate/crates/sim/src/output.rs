//! CSV output for sweep results.

use std::io::Write;
use std::path::Path;

use crate::config::Algorithm;
use crate::error::{Result, SimError};
use crate::sweep::SweepResult;

pub const HEADER: &str = "sweep,value,algorithm,trial,seed,avg_se_bits,r_opt_bits,normalized_se,bsr";

const SIGNIFICANT: i32 = 12;

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-5, 1e12)`.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT).contains(&exp) {
        let decimals = (SIGNIFICANT - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(results: &[SweepResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.sweep_name,
            format_g(r.sweep_value),
            r.algorithm,
            r.trial_index,
            r.seed_used,
            format_g(r.average_se_bits),
            format_g(r.r_opt_bits),
            format_g(r.normalized_se),
            format_g(r.bsr_closed_form),
        )?;
    }
    Ok(())
}

/// Writes `results` to `path`, or to stdout when `path` is `None`.
pub fn emit_csv(results: &[SweepResult], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let io_err = |source| SimError::Io {
                path: p.to_path_buf(),
                source,
            };
            let file = std::fs::File::create(p).map_err(io_err)?;
            let mut buf = std::io::BufWriter::new(file);
            write_csv(results, &mut buf).map_err(io_err)?;
            buf.flush().map_err(io_err)
        }
        None => write_csv(results, std::io::stdout().lock()).map_err(|source| SimError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepResult>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => {
            return Err(SimError::Parse {
                line: 1,
                reason: "missing header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| parse_row(line).map_err(|reason| SimError::Parse { line: i + 1, reason }))
        .collect()
}

fn parse_row(line: &str) -> std::result::Result<SweepResult, String> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 9 {
        return Err(format!("expected 9 fields, found {}", f.len()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    Ok(SweepResult {
        sweep_name: f[0].to_string(),
        sweep_value: num(f[1])?,
        algorithm: f[2].parse::<Algorithm>().map_err(|e| e.to_string())?,
        trial_index: f[3].parse().map_err(|e| format!("`{}`: {e}", f[3]))?,
        seed_used: f[4].parse().map_err(|e| format!("`{}`: {e}", f[4]))?,
        average_se_bits: num(f[5])?,
        r_opt_bits: num(f[6])?,
        normalized_se: num(f[7])?,
        bsr_closed_form: num(f[8])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g_format() {
        assert_eq!(format_g(0.0), "0");
        assert_eq!(format_g(1.0), "1");
        assert_eq!(format_g(0.1), "0.1");
        assert_eq!(format_g(-2.5), "-2.5");
        assert_eq!(format_g(30e9), "30000000000");
        assert_eq!(format_g(300e9), "300000000000");
        assert_eq!(format_g(3e12), "3e12");
        assert_eq!(format_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g(1.0 / 256.0), "0.00390625");
        assert_eq!(format_g(1.5e-7), "1.5e-7");
        assert_eq!(format_g(123456789.123456), "123456789.123");
    }

    #[test]
    fn empty_results_give_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{HEADER}\n"));
    }

    #[test]
    fn emit_reports_path_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing").join("out.csv");
        let err = emit_csv(&[], Some(&bad)).unwrap_err();
        assert!(err.to_string().contains("missing"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(parse_csv("nope\n").is_err());
        assert!(parse_csv(&format!("{HEADER}\nsnr,1,proposed,0\n")).is_err());
        assert!(parse_csv(&format!("{HEADER}\nsnr,1,magic,0,1,1,1,1,1\n")).is_err());
    }

    fn close(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= 1e-11 * a.abs().max(b.abs())
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            rows in prop::collection::vec(
                (
                    "[a-z_]{1,8}(\\.[0-9])?",
                    -1e12f64..1e12,
                    0usize..3,
                    0usize..100_000,
                    any::<u64>(),
                    0f64..100.0,
                    1e-9f64..100.0,
                    0f64..1.0,
                    0f64..20.0,
                ),
                0..20,
            )
        ) {
            let results: Vec<SweepResult> = rows
                .into_iter()
                .map(|(name, value, alg, trial, seed, se, opt, norm, bsr)| SweepResult {
                    sweep_name: name,
                    sweep_value: value,
                    algorithm: Algorithm::ALL[alg],
                    trial_index: trial,
                    seed_used: seed,
                    average_se_bits: se,
                    r_opt_bits: opt,
                    normalized_se: norm,
                    bsr_closed_form: bsr,
                })
                .collect();
            let mut buf = Vec::new();
            write_csv(&results, &mut buf).unwrap();
            let parsed = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(parsed.len(), results.len());
            for (p, r) in parsed.iter().zip(&results) {
                prop_assert_eq!(&p.sweep_name, &r.sweep_name);
                prop_assert_eq!(p.algorithm, r.algorithm);
                prop_assert_eq!(p.trial_index, r.trial_index);
                prop_assert_eq!(p.seed_used, r.seed_used);
                prop_assert!(close(p.sweep_value, r.sweep_value));
                prop_assert!(close(p.average_se_bits, r.average_se_bits));
                prop_assert!(close(p.r_opt_bits, r.r_opt_bits));
                prop_assert!(close(p.normalized_se, r.normalized_se));
                prop_assert!(close(p.bsr_closed_form, r.bsr_closed_form));
            }
            // a second pass is exact: the printed values are fixed points
            let mut again = Vec::new();
            write_csv(&parsed, &mut again).unwrap();
            prop_assert_eq!(buf, again);
        }
    }
}
