//! Text formats for series, matrix profiles and ground truth.
//!
//! Series: one sample per line, optional `value` header.
//! Profiles: CSV `pos,mpd,mpi` (0-based, 9 significant digits) preceded by
//! `#` comment lines carrying metadata, e.g. `# mp length=100 n=10000` and,
//! for privacy-aware profiles, `# pmp l_attack=300 l_perm=25 seed=7`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::GroundTruth;
use crate::{MatrixProfile, TimeSeries};

/// Formats `x` like C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn read_series<R: BufRead>(reader: R) -> Result<TimeSeries> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let text = line.trim().trim_start_matches('\u{feff}');
        if text.is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if text.eq_ignore_ascii_case("value") {
                continue;
            }
        }
        let v: f64 = text.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("expected a number, found `{text}`"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite sample `{text}`"),
            });
        }
        values.push(v);
    }
    TimeSeries::new(values)
}

pub fn read_series_file(path: impl AsRef<Path>) -> Result<TimeSeries> {
    read_series(BufReader::new(File::open(path)?))
}

pub fn write_series<W: Write>(mut out: W, series: &TimeSeries) -> Result<()> {
    writeln!(out, "value")?;
    for v in series.values() {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_series_file(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    write_series(BufWriter::new(File::create(path)?), series)
}

/// Parameters recorded in a privacy-aware profile file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmpMeta {
    pub l_attack: usize,
    pub l_perm: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LoadedProfile {
    pub mp: MatrixProfile,
    /// False when the window length came from the caller instead of the file.
    pub window_from_file: bool,
    pub pmp: Option<PmpMeta>,
}

pub fn write_mp<W: Write>(mut out: W, mp: &MatrixProfile, pmp: Option<&PmpMeta>) -> Result<()> {
    writeln!(out, "# mp length={} n={}", mp.window(), mp.source_len())?;
    if let Some(m) = pmp {
        writeln!(out, "# pmp l_attack={} l_perm={} seed={}", m.l_attack, m.l_perm, m.seed)?;
    }
    writeln!(out, "pos,mpd,mpi")?;
    for (pos, (d, j)) in mp.mpd().iter().zip(mp.mpi()).enumerate() {
        writeln!(out, "{pos},{},{j}", format_sig9(*d))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_mp_file(path: impl AsRef<Path>, mp: &MatrixProfile, pmp: Option<&PmpMeta>) -> Result<()> {
    write_mp(BufWriter::new(File::create(path)?), mp, pmp)
}

fn comment_fields(body: &str) -> impl Iterator<Item = (&str, &str)> {
    body.split_whitespace().filter_map(|kv| kv.split_once('='))
}

fn parse_field<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad value `{value}` for `{key}`"),
    })
}

/// Reads a profile file. `fallback_window` is used when the file has no
/// `# mp length=` comment; without either the window is unknown and an error
/// is returned.
pub fn read_mp<R: BufRead>(reader: R, fallback_window: Option<usize>) -> Result<LoadedProfile> {
    let mut window = None;
    let mut source_len = None;
    let mut pmp: Option<PmpMeta> = None;
    let mut header_seen = false;
    let mut mpd = Vec::new();
    let mut mpi = Vec::new();
    let mut last_line = 0;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        last_line = lineno;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(body) = text.strip_prefix('#') {
            let body = body.trim();
            if let Some(rest) = body.strip_prefix("mp ") {
                for (key, v) in comment_fields(rest) {
                    match key {
                        "length" => window = Some(parse_field(lineno, key, v)?),
                        "n" => source_len = Some(parse_field(lineno, key, v)?),
                        _ => {}
                    }
                }
            } else if let Some(rest) = body.strip_prefix("pmp ") {
                let mut meta = PmpMeta {
                    l_attack: 0,
                    l_perm: 0,
                    seed: 0,
                };
                for (key, v) in comment_fields(rest) {
                    match key {
                        "l_attack" => meta.l_attack = parse_field(lineno, key, v)?,
                        "l_perm" => meta.l_perm = parse_field(lineno, key, v)?,
                        "seed" => meta.seed = parse_field(lineno, key, v)?,
                        _ => {}
                    }
                }
                pmp = Some(meta);
            }
            continue;
        }
        if !header_seen {
            header_seen = true;
            let cols: Vec<&str> = text.split(',').map(str::trim).collect();
            if cols != ["pos", "mpd", "mpi"] {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header `pos,mpd,mpi`, found `{text}`"),
                });
            }
            continue;
        }
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 columns, found {}", cols.len()),
            });
        }
        let pos: usize = parse_field(lineno, "pos", cols[0])?;
        if pos != mpd.len() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected position {}, found {pos}", mpd.len()),
            });
        }
        let d: f64 = parse_field(lineno, "mpd", cols[1])?;
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("distance `{}` is not a finite non-negative number", cols[1]),
            });
        }
        mpd.push(d);
        mpi.push(parse_field(lineno, "mpi", cols[2])?);
    }
    if mpd.is_empty() {
        return Err(Error::Parse {
            line: last_line,
            message: "profile has no rows".into(),
        });
    }
    let window_from_file = window.is_some();
    let window = window.or(fallback_window).ok_or_else(|| {
        Error::Config("profile file has no `# mp length=` comment and no window length was given".into())
    })?;
    let source_len = source_len.unwrap_or(mpd.len() + window - 1);
    Ok(LoadedProfile {
        mp: MatrixProfile::from_parts(mpd, mpi, window, source_len)?,
        window_from_file,
        pmp,
    })
}

pub fn read_mp_file(path: impl AsRef<Path>, fallback_window: Option<usize>) -> Result<LoadedProfile> {
    read_mp(BufReader::new(File::open(path)?), fallback_window)
}

pub fn write_truth_file(path: impl AsRef<Path>, truth: &GroundTruth) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, truth)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_truth_file(path: impl AsRef<Path>) -> Result<GroundTruth> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (1.5, "1.5"),
            (std::f64::consts::PI, "3.14159265"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.000123456789123, "0.000123456789"),
            (0.0000123456789123, "1.23456789e-05"),
            (14.142135623730951, "14.1421356"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig9(x), want, "{x}");
        }
    }

    #[test]
    fn series_header_optional_and_parse_errors_have_lines() {
        let s = read_series("value\n1\n2.5\n\n-3e-1\n".as_bytes()).unwrap();
        assert_eq!(s.values(), &[1.0, 2.5, -0.3]);
        let s = read_series("4\n5\n".as_bytes()).unwrap();
        assert_eq!(s.values(), &[4.0, 5.0]);
        match read_series("value\n1\nabc\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read_series("1\nNaN\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_series("value\n".as_bytes()), Err(Error::EmptySeries)));
    }

    #[test]
    fn series_round_trip_is_exact() {
        let s = TimeSeries::new(vec![0.1, -2.0 / 3.0, 1e-300, 12345.678]).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        assert_eq!(read_series(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn mp_round_trip() {
        let mp = MatrixProfile::from_parts(vec![0.5, 1.0 / 3.0, 2.0, 0.0, 1.25], vec![3, 4, 0, 0, 1], 4, 8).unwrap();
        let meta = PmpMeta {
            l_attack: 9,
            l_perm: 1,
            seed: 42,
        };
        let mut buf = Vec::new();
        write_mp(&mut buf, &mp, Some(&meta)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# mp length=4 n=8\n# pmp l_attack=9 l_perm=1 seed=42\npos,mpd,mpi\n0,0.5,3\n1,0.333333333,4\n"));
        let loaded = read_mp(buf.as_slice(), None).unwrap();
        assert_eq!(loaded.mp.mpi(), mp.mpi());
        assert_eq!(loaded.mp.window(), 4);
        assert!(loaded.window_from_file);
        assert_eq!(loaded.pmp, Some(meta));
        for (a, b) in loaded.mp.mpd().iter().zip(mp.mpd()) {
            assert!((a - b).abs() <= 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn mp_without_metadata_needs_window() {
        let text = "pos,mpd,mpi\n0,1,3\n1,1,3\n2,1,0\n3,1,0\n";
        assert!(matches!(read_mp(text.as_bytes(), None), Err(Error::Config(_))));
        let loaded = read_mp(text.as_bytes(), Some(2)).unwrap();
        assert!(!loaded.window_from_file);
        assert_eq!(loaded.mp.source_len(), 5);
    }

    #[test]
    fn mp_parse_errors() {
        let bad_pos = "pos,mpd,mpi\n0,1,2\n2,1,0\n";
        assert!(matches!(read_mp(bad_pos.as_bytes(), Some(1)), Err(Error::Parse { line: 3, .. })));
        let bad_header = "a,b,c\n";
        assert!(matches!(read_mp(bad_header.as_bytes(), Some(1)), Err(Error::Parse { line: 1, .. })));
        let negative = "pos,mpd,mpi\n0,-1,1\n";
        assert!(matches!(read_mp(negative.as_bytes(), Some(1)), Err(Error::Parse { line: 2, .. })));
    }
}
