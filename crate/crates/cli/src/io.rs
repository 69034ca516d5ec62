//! Shot files and plot tables.
//!
//! Shot files are CSV with header `shot,m_s,m_i`, one pulse per row, values
//! in electrons, LF line endings.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::anyhow;
use twinbeam::{DetectedShot, Histogram};

use crate::failure::{Failure, Outcome};

pub const HEADER: [&str; 3] = ["shot", "m_s", "m_i"];

fn writer(path: &Path) -> Outcome<csv::Writer<BufWriter<File>>> {
    let file = File::create(path)
        .map_err(|e| Failure::data(e).context(format!("cannot write {}", path.display())))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure::data(e).context(format!("writing {}", path.display()))
}

pub fn write_shots(path: &Path, shots: &[DetectedShot]) -> Outcome<()> {
    let mut w = writer(path)?;
    let err = write_err(path);
    w.write_record(HEADER).map_err(&err)?;
    for (k, s) in shots.iter().enumerate() {
        w.write_record([k.to_string(), s.m_s.to_string(), s.m_i.to_string()])
            .map_err(&err)?;
    }
    w.flush()
        .map_err(|e| Failure::data(e).context(format!("writing {}", path.display())))
}

/// Reads a shot file. Every malformed row is reported with its line number.
pub fn read_shots(path: &Path) -> Outcome<Vec<DetectedShot>> {
    let file = File::open(path)
        .map_err(|e| Failure::data(e).context(format!("cannot read {}", path.display())))?;
    parse_shots(file).map_err(|e| e.context(format!("in {}", path.display())))
}

pub fn parse_shots(input: impl io::Read) -> Outcome<Vec<DetectedShot>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = reader.headers().map_err(Failure::data)?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER {
        return Err(Failure::data(anyhow!(
            "line 1: expected header `shot,m_s,m_i`, found `{}`",
            names.join(",")
        )));
    }
    let mut shots = Vec::new();
    let mut problems = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                problems.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        match parse_row(&record) {
            Ok(shot) => shots.push(shot),
            Err(msg) => problems.push(format!("line {line}: {msg}")),
        }
    }
    if !problems.is_empty() {
        const SHOWN: usize = 20;
        let mut msg = format!("{} malformed row(s)", problems.len());
        for p in problems.iter().take(SHOWN) {
            msg.push_str("\n  ");
            msg.push_str(p);
        }
        if problems.len() > SHOWN {
            msg.push_str(&format!("\n  ... and {} more", problems.len() - SHOWN));
        }
        return Err(Failure::data(anyhow!(msg)));
    }
    if shots.is_empty() {
        return Err(Failure::data(anyhow!("no shot records")));
    }
    Ok(shots)
}

fn parse_row(record: &csv::StringRecord) -> Result<DetectedShot, String> {
    if record.len() != 3 {
        return Err(format!("expected 3 fields, found {}", record.len()));
    }
    record[0]
        .trim()
        .parse::<u64>()
        .map_err(|_| format!("bad shot index `{}`", &record[0]))?;
    let value = |i: usize, name: &str| {
        let field = record[i].trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("bad {name} value `{field}`")),
        }
    };
    Ok(DetectedShot {
        m_s: value(1, "m_s")?,
        m_i: value(2, "m_i")?,
    })
}

/// 17 significant digits, the same precision as the JSON reports.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// Writes a CSV table to `path`, or to stdout when `None`.
pub fn write_table(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Outcome<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    emit(path, &text)
}

pub fn emit(path: Option<&Path>, text: &str) -> Outcome<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::data(e).context(format!("cannot write {}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(Failure::data),
    }
}

pub fn histogram_rows(h: &Histogram) -> Vec<Vec<String>> {
    h.rows()
        .into_iter()
        .map(|(edge, count, p)| vec![fmt17(edge), count.to_string(), fmt17(p)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_well_formed_file() {
        let shots = parse_shots("shot,m_s,m_i\n0,1.5,2\n1,-0.25,3e2\n".as_bytes()).unwrap();
        assert_eq!(shots.len(), 2);
        assert_eq!(
            shots[1],
            DetectedShot {
                m_s: -0.25,
                m_i: 300.0
            }
        );
    }

    #[test]
    fn reports_line_numbers_of_bad_rows() {
        let text = "shot,m_s,m_i\n0,1,2\n1,x,2\n2,1\n3,1,inf\n4,5,6\n";
        let err = parse_shots(text.as_bytes()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let msg = err.to_string();
        assert!(msg.contains("3 malformed"), "{msg}");
        assert!(msg.contains("line 3: bad m_s"), "{msg}");
        assert!(msg.contains("line 4: expected 3 fields"), "{msg}");
        assert!(msg.contains("line 5: bad m_i"), "{msg}");
    }

    #[test]
    fn rejects_wrong_header_and_empty_files() {
        assert!(parse_shots("a,b,c\n0,1,2\n".as_bytes())
            .unwrap_err()
            .to_string()
            .contains("line 1"));
        assert!(parse_shots("shot,m_s,m_i\n".as_bytes()).is_err());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(f64::NAN), "");
    }
}
