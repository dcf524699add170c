//! Tab-separated record files and their verification.
//!
//! One record per line: `L  E  F  hex  origin [fingerprint]`. Candidate
//! streams omit the fingerprint column. Blank lines and lines starting with
//! `#` are skipped.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::candidate::{Candidate, Origin};
use crate::error::{Error, Result};
use crate::hex::{hex_decode, hex_encode};
use crate::sequence::{autocorrelation, merit_from_energy, BinarySequence};
use crate::skew::is_skew_symmetric;

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub length: usize,
    pub energy: i64,
    pub merit: f64,
    /// Merit factor as written; its decimal count sets the check tolerance.
    pub merit_text: String,
    pub hex: String,
    pub origin: Origin,
    pub fingerprint: Option<String>,
}

impl ResultRecord {
    pub fn from_candidate(c: &Candidate, fingerprint: Option<&str>) -> Self {
        let merit = c.merit();
        Self {
            length: c.len(),
            energy: c.energy,
            merit,
            merit_text: format!("{merit:.6}"),
            hex: hex_encode(&c.sequence),
            origin: c.origin,
            fingerprint: fingerprint.map(str::to_owned),
        }
    }

    pub fn sequence(&self) -> Result<BinarySequence> {
        hex_decode(&self.hex, self.length)
    }

    pub fn to_candidate(&self) -> Result<Candidate> {
        let seq = self.sequence()?;
        let c = Candidate::new(seq, self.origin);
        if c.energy != self.energy {
            return Err(Error::Record(format!(
                "stored energy {} but sequence has {}",
                self.energy, c.energy
            )));
        }
        Ok(c)
    }

    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{}\t{}\t{}\t{}\t{}",
            self.length, self.energy, self.merit_text, self.hex, self.origin
        );
        if let Some(fp) = &self.fingerprint {
            line.push('\t');
            line.push_str(fp);
        }
        line
    }
}

pub fn parse_record(line: &str) -> Result<ResultRecord> {
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    if fields.len() < 5 || fields.len() > 6 {
        return Err(Error::Record(format!(
            "expected 5 or 6 tab-separated fields, found {}",
            fields.len()
        )));
    }
    let length = fields[0]
        .parse()
        .map_err(|_| Error::Record(format!("bad length {:?}", fields[0])))?;
    let energy = fields[1]
        .parse()
        .map_err(|_| Error::Record(format!("bad energy {:?}", fields[1])))?;
    let merit = fields[2]
        .parse()
        .map_err(|_| Error::Record(format!("bad merit factor {:?}", fields[2])))?;
    Ok(ResultRecord {
        length,
        energy,
        merit,
        merit_text: fields[2].to_owned(),
        hex: fields[3].to_owned(),
        origin: fields[4].parse()?,
        fingerprint: fields.get(5).map(|s| (*s).to_owned()),
    })
}

/// Parsed records with their 1-based line numbers, plus the lines that failed.
pub type ParsedRecords = (Vec<(usize, ResultRecord)>, Vec<(usize, Error)>);

pub fn read_records(path: &Path) -> Result<ParsedRecords> {
    let file = File::open(path)?;
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_record(&line) {
            Ok(r) => good.push((i + 1, r)),
            Err(e) => bad.push((i + 1, e)),
        }
    }
    Ok((good, bad))
}

pub fn read_candidates(path: &Path) -> Result<Vec<Candidate>> {
    let (good, bad) = read_records(path)?;
    if let Some((line, err)) = bad.into_iter().next() {
        return Err(Error::Record(format!("{}:{line}: {err}", path.display())));
    }
    good.into_iter().map(|(_, r)| r.to_candidate()).collect()
}

/// Append-only record file.
pub struct RecordWriter {
    out: BufWriter<File>,
}

impl RecordWriter {
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write(&mut self, record: &ResultRecord) -> Result<()> {
        writeln!(self.out, "{}", record.to_line())?;
        Ok(())
    }

    pub fn write_candidate(&mut self, c: &Candidate) -> Result<()> {
        self.write(&ResultRecord::from_candidate(c, None))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

impl Drop for RecordWriter {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

/// Best record per length, rebuilt by scanning an append-only file.
pub fn best_index(path: &Path) -> Result<BTreeMap<usize, ResultRecord>> {
    let (good, _) = read_records(path)?;
    let mut best: BTreeMap<usize, ResultRecord> = BTreeMap::new();
    for (_, r) in good {
        if best.get(&r.length).is_none_or(|b| r.energy < b.energy) {
            best.insert(r.length, r);
        }
    }
    Ok(best)
}

fn merit_tolerance(text: &str) -> f64 {
    let decimals = text.split_once('.').map_or(0, |(_, frac)| frac.len()) as i32;
    0.5 * 10f64.powi(-decimals) + 1e-9
}

/// Problems found in one record; empty when it checks out.
pub fn check_record(r: &ResultRecord) -> Vec<String> {
    let mut issues = Vec::new();
    let seq = match r.sequence() {
        Ok(s) => s,
        Err(e) => {
            issues.push(format!("hex does not decode to length {}: {e}", r.length));
            return issues;
        }
    };
    let st = autocorrelation(&seq);
    if st.energy() != r.energy {
        issues.push(format!(
            "stored E={} but recomputed E={}",
            r.energy,
            st.energy()
        ));
    }
    match merit_from_energy(seq.len(), st.energy()) {
        Ok(f) if (f - r.merit).abs() > merit_tolerance(&r.merit_text) => {
            issues.push(format!("stored F={} but recomputed F={f:.6}", r.merit_text));
        }
        Ok(_) => {}
        Err(e) => issues.push(e.to_string()),
    }
    if r.origin == Origin::Saw {
        if !is_skew_symmetric(&seq) {
            issues.push("walk record is not skew-symmetric".into());
        } else if (1..seq.len()).step_by(2).any(|k| st.correlation(k) != 0) {
            issues.push("odd-lag correlation is nonzero".into());
        }
    }
    issues
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checked: usize,
    /// `(line, problem)` for records that parsed but failed a check.
    pub mismatches: Vec<(usize, String)>,
    /// `(line, parse error)`.
    pub malformed: Vec<(usize, String)>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.malformed.is_empty()
    }
}

pub fn verify(path: &Path) -> Result<VerifyReport> {
    let (good, bad) = read_records(path)?;
    let mut report = VerifyReport {
        checked: good.len(),
        malformed: bad.into_iter().map(|(l, e)| (l, e.to_string())).collect(),
        ..VerifyReport::default()
    };
    for (line, r) in good {
        for issue in check_record(&r) {
            report.mismatches.push((line, issue));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn barker() -> Candidate {
        Candidate::new("+++++--++-+-+".parse().unwrap(), Origin::Refine)
    }

    #[test]
    fn line_format() {
        let r = ResultRecord::from_candidate(&barker(), Some("abc"));
        assert_eq!(r.to_line(), "13\t6\t14.083333\t1F35\trefine\tabc");
        assert_eq!(parse_record(&r.to_line()).unwrap().to_line(), r.to_line());
        let c = ResultRecord::from_candidate(
            &Candidate::new("+++-+".parse().unwrap(), Origin::Saw),
            None,
        );
        assert_eq!(c.to_line(), "5\t2\t6.250000\t1D\tsaw");
    }

    #[test]
    fn parse_errors() {
        assert!(parse_record("13\t6\t14.08").is_err());
        assert!(parse_record("x\t6\t14.08\t1F35\trefine").is_err());
        assert!(parse_record("13\t6\t14.08\t1F35\tbogus").is_err());
    }

    #[test]
    fn clean_record_passes() {
        let r = ResultRecord::from_candidate(&barker(), None);
        assert!(check_record(&r).is_empty());
        // four-decimal merit factors, as usually published
        let p = parse_record("13\t6\t14.0833\t1F35\trefine").unwrap();
        assert!(check_record(&p).is_empty());
    }

    #[test]
    fn detects_tampering() {
        let mut r = ResultRecord::from_candidate(&barker(), None);
        r.hex = "1F34".into();
        assert!(!check_record(&r).is_empty());

        let mut r = ResultRecord::from_candidate(&barker(), None);
        r.merit_text = "14.100000".into();
        r.merit = 14.1;
        assert_eq!(check_record(&r).len(), 1);

        let mut r = ResultRecord::from_candidate(&barker(), None);
        r.hex = "FF35".into();
        assert!(check_record(&r)[0].contains("decode"));

        let mut r = ResultRecord::from_candidate(
            &Candidate::new("++++-".parse().unwrap(), Origin::Refine),
            None,
        );
        r.origin = Origin::Saw;
        assert!(check_record(&r).iter().any(|m| m.contains("skew")));
    }
}
