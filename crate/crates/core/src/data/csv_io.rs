use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{Cohort, Subject, Visit};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] =
    ["subject_id", "ga_weeks", "pcrh", "ct_sum", "bmi", "cses", "dces", "ob_risk", "parity"];

/// Reads a long-format cohort file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Cohort> {
    let file = std::fs::File::open(path)?;
    read_csv(file)
}

/// Parses long-format rows, groups them by subject (first-appearance order)
/// and sorts each subject's visits by gestational age.
pub fn read_csv<R: Read>(reader: R) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::Parse { line: 1, message: "empty file, expected header".into() }),
        Some(r) => r.map_err(|e| csv_err(1, e))?,
    };
    let names: Vec<&str> = header.iter().collect();
    if names != CSV_HEADER {
        return Err(Error::Parse { line: 1, message: format!("header must be `{}`", CSV_HEADER.join(",")) });
    }

    struct Pending {
        subject: Subject,
        first_line: usize,
        lines: Vec<usize>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, Pending> = HashMap::new();

    for (idx, rec) in records.enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| csv_err(line, e))?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse { line, message: format!("expected 9 fields, found {}", rec.len()) });
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse { line, message: "empty subject_id".into() });
        }
        let ga = parse_f64(&rec[1], line, "ga_weeks")?;
        let pcrh = parse_f64(&rec[2], line, "pcrh")?;
        let ct_sum = parse_u8(&rec[3], line, "ct_sum")?;
        let bmi = parse_f64(&rec[4], line, "bmi")?;
        let cses = parse_f64(&rec[5], line, "cses")?;
        let dces = parse_f64(&rec[6], line, "dces")?;
        let ob_risk = parse_u8(&rec[7], line, "ob_risk")?;
        let parity = parse_u8(&rec[8], line, "parity")?;

        if !(pcrh > 0.0) {
            return Err(Error::validation(Some(line), format!("pcrh {pcrh} must be positive")));
        }
        if ct_sum > 4 {
            return Err(Error::validation(Some(line), format!("ct_sum {ct_sum} outside 0..=4")));
        }
        if parity > 4 {
            return Err(Error::validation(Some(line), format!("parity {parity} outside 0..=4")));
        }
        if ob_risk > 1 {
            return Err(Error::validation(Some(line), format!("ob_risk {ob_risk} is not 0 or 1")));
        }
        if !(super::GA_MIN..=super::GA_MAX).contains(&ga) {
            return Err(Error::validation(Some(line), format!("ga_weeks {ga} outside [14, 40]")));
        }
        if !(bmi > 0.0) {
            return Err(Error::validation(Some(line), format!("bmi {bmi} must be positive")));
        }

        let visit = Visit { ga_weeks: ga, pcrh };
        match by_id.get_mut(&id) {
            Some(p) => {
                let s = &p.subject;
                if s.ct_sum != ct_sum
                    || s.bmi != bmi
                    || s.cses != cses
                    || s.dces != dces
                    || s.ob_risk != ob_risk
                    || s.parity != parity
                {
                    return Err(Error::validation(
                        Some(line),
                        format!("subject-level covariates of {id} differ from line {}", p.first_line),
                    ));
                }
                if let Some(k) = s.visits.iter().position(|v| v.ga_weeks == ga) {
                    return Err(Error::validation(
                        Some(line),
                        format!("duplicate visit ({id}, {ga}) also on line {}", p.lines[k]),
                    ));
                }
                p.subject.visits.push(visit);
                p.lines.push(line);
            }
            None => {
                order.push(id.clone());
                by_id.insert(
                    id.clone(),
                    Pending {
                        subject: Subject { id, ct_sum, bmi, cses, dces, ob_risk, parity, visits: vec![visit] },
                        first_line: line,
                        lines: vec![line],
                    },
                );
            }
        }
    }

    let subjects = order
        .into_iter()
        .map(|id| {
            let mut s = by_id.remove(&id).expect("grouped").subject;
            s.visits.sort_by(|a, b| a.ga_weeks.total_cmp(&b.ga_weeks));
            s
        })
        .collect();
    Cohort::new(subjects)
}

/// Writes the long format; floats use the shortest representation that
/// parses back to the identical value.
pub fn write_csv<W: Write>(cohort: &Cohort, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER).map_err(csv_io)?;
    for s in cohort.subjects() {
        for v in &s.visits {
            w.write_record([
                s.id.clone(),
                v.ga_weeks.to_string(),
                v.pcrh.to_string(),
                s.ct_sum.to_string(),
                s.bmi.to_string(),
                s.cses.to_string(),
                s.dces.to_string(),
                s.ob_risk.to_string(),
                s.parity.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(line: usize, e: csv::Error) -> Error {
    Error::Parse { line, message: e.to_string() }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn parse_f64(field: &str, line: usize, name: &str) -> Result<f64> {
    let v: f64 =
        field.parse().map_err(|_| Error::Parse { line, message: format!("{name}: `{field}` is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("{name}: `{field}` is not finite") });
    }
    Ok(v)
}

fn parse_u8(field: &str, line: usize, name: &str) -> Result<u8> {
    field
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("{name}: `{field}` is not a small non-negative integer") })
}
