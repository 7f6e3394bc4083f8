//! Load-trace CSV files.
//!
//! Format: header `round,channel,load`, then one row per (round, channel) with
//! 0-based rounds, 1-based channels and loads in `[0, 1]`. LF line endings.
//! The matrix must be dense: every cell present exactly once.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cca::LoadMatrix;
use crate::error::{Error, Result};

pub const HEADER: &str = "round,channel,load";

/// Renders the measured plane as trace CSV.
pub fn export_trace(matrix: &LoadMatrix) -> String {
    let mut out = String::with_capacity(16 * matrix.rounds() * matrix.channels() + HEADER.len());
    out.push_str(HEADER);
    out.push('\n');
    for r in 0..matrix.rounds() {
        for ch in matrix.channel_ids() {
            // `{}` on f64 prints the shortest string that parses back bit-exactly
            let _ = writeln!(out, "{r},{ch},{}", matrix.measured_load(r, ch));
        }
    }
    out
}

pub fn write_trace(matrix: &LoadMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, export_trace(matrix)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn ingest_trace(path: &Path) -> Result<LoadMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_trace(&text, path)
}

/// Parses trace CSV text. `origin` is only used in error messages.
pub fn parse_trace(text: &str, origin: &Path) -> Result<LoadMatrix> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_owned(),
        line,
        message,
    };

    let mut lines = text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => {
            return Err(parse_err(
                n,
                format!("expected header {HEADER:?}, found {other:?}"),
            ));
        }
        None => return Err(parse_err(1, "empty file".into())),
    }

    let mut rows: Vec<(usize, u64, u16, f64)> = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                n,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let round: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("bad round {:?}", fields[0])))?;
        let channel: u16 = fields[1]
            .trim()
            .parse()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| parse_err(n, format!("bad channel {:?}", fields[1])))?;
        let load: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("bad load {:?}", fields[2])))?;
        if !(0.0..=1.0).contains(&load) {
            return Err(parse_err(n, format!("load {load} outside [0, 1]")));
        }
        rows.push((n, round, channel, load));
    }
    if rows.is_empty() {
        return Err(parse_err(1, "trace has no rows".into()));
    }

    let rounds = rows.iter().map(|r| r.1).max().unwrap_or(0) as usize + 1;
    let channels = usize::from(rows.iter().map(|r| r.2).max().unwrap_or(0));
    let cells = rounds
        .checked_mul(channels)
        .filter(|&c| c <= rows.len())
        .ok_or_else(|| missing_cell(origin, &rows, rounds, channels))?;

    let mut plane: Vec<Option<(usize, f64)>> = vec![None; cells];
    for &(n, round, channel, load) in &rows {
        let slot = &mut plane[round as usize * channels + usize::from(channel) - 1];
        if let Some((first, _)) = slot {
            return Err(parse_err(
                n,
                format!("duplicate cell round {round}, channel {channel} (first on line {first})"),
            ));
        }
        *slot = Some((n, load));
    }
    if let Some(hole) = plane.iter().position(Option::is_none) {
        return Err(Error::Incomplete {
            path: origin.to_owned(),
            round: (hole / channels) as u64,
            channel: (hole % channels + 1) as u16,
        });
    }
    let measured = plane
        .into_iter()
        .map(|c| c.map(|(_, l)| l).unwrap_or_default())
        .collect();
    LoadMatrix::from_measured(rounds, channels, measured)
}

// More cells than rows: some cell must be absent. Name the first one.
fn missing_cell(
    origin: &Path,
    rows: &[(usize, u64, u16, f64)],
    rounds: usize,
    channels: usize,
) -> Error {
    let present: std::collections::HashSet<(u64, u16)> = rows.iter().map(|r| (r.1, r.2)).collect();
    let (round, channel) = (0..rounds as u64)
        .flat_map(|r| (1..=channels as u16).map(move |c| (r, c)))
        .find(|cell| !present.contains(cell))
        .unwrap_or((0, 1));
    Error::Incomplete {
        path: PathBuf::from(origin),
        round,
        channel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadMatrix> {
        parse_trace(text, Path::new("t.csv"))
    }

    #[test]
    fn parses_dense_trace() {
        let m = parse("round,channel,load\n0,1,0.5\n0,2,0.25\n1,2,1\n1,1,0\n").unwrap();
        assert_eq!((m.rounds(), m.channels()), (2, 2));
        assert_eq!(m.measured_row(0), [0.5, 0.25]);
        assert_eq!(m.measured_row(1), [0.0, 1.0]);
        assert_eq!(m.true_row(1), m.measured_row(1));
    }

    #[test]
    fn rejects_out_of_range_load_with_line() {
        let err = parse("round,channel,load\n0,1,0.5\n0,2,0.5\n3,2,1.2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn names_the_missing_cell() {
        let mut text = String::from("round,channel,load\n");
        for r in 0..6 {
            for c in 1..=4 {
                if (r, c) != (5, 4) {
                    text.push_str(&format!("{r},{c},0.1\n"));
                }
            }
        }
        match parse(&text).unwrap_err() {
            Error::Incomplete { round, channel, .. } => assert_eq!((round, channel), (5, 4)),
            other => panic!("{other}"),
        }

        text.push_str("5,4,0.1\n");
        let hole = text.replace("2,3,0.1\n", "");
        match parse(&hole).unwrap_err() {
            Error::Incomplete { round, channel, .. } => assert_eq!((round, channel), (2, 3)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn missing_interior_cell_with_extra_rows_elsewhere() {
        // hole at (1, 2) but a duplicate keeps the row count equal
        let err = parse("round,channel,load\n0,1,0\n0,2,0\n1,1,0\n1,1,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn malformed_rows() {
        for (text, line) in [
            ("round,load\n", 1),
            ("round,channel,load\n0,1\n", 2),
            ("round,channel,load\n0,1,0.1\nx,1,0.2\n", 3),
            ("round,channel,load\n0,0,0.1\n", 2),
            ("round,channel,load\n0,1,abc\n", 2),
            ("round,channel,load\n0,1,-0.1\n", 2),
            ("round,channel,load\n", 1),
        ] {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn export_layout() {
        let m = LoadMatrix::from_measured(2, 2, vec![0.1, 0.2, 0.3, 1.0]).unwrap();
        assert_eq!(
            export_trace(&m),
            "round,channel,load\n0,1,0.1\n0,2,0.2\n1,1,0.3\n1,2,1\n"
        );
        assert_eq!(parse(&export_trace(&m)).unwrap(), m);
    }
}
