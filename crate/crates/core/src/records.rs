//! Per-interval measurement records and their CSV representation.
//!
//! Schema (UTF-8, LF line endings, `.` decimal separator):
//! `set,setting,alice_deg,bob_deg,duration_s,singles_a,singles_b,coincidences`

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::correlation::ChshAngles;
use crate::error::{Error, Result};
use crate::sim::SETTINGS_PER_SET;

pub const CSV_HEADER: [&str; 8] = [
    "set",
    "setting",
    "alice_deg",
    "bob_deg",
    "duration_s",
    "singles_a",
    "singles_b",
    "coincidences",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub set: u32,
    pub setting: u32,
    pub alice_deg: f64,
    pub bob_deg: f64,
    pub duration_s: f64,
    pub singles_a: u64,
    pub singles_b: u64,
    pub coincidences: u64,
}

/// Coincidence counts of the four outcome channels of one correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceCounts {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    /// Total acquisition time summed over the four channels, seconds.
    pub duration: f64,
    /// Analyzer angles of the `++` channel, degrees.
    pub alice_deg: f64,
    pub bob_deg: f64,
}

impl CoincidenceCounts {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> Self {
        CoincidenceCounts {
            n_pp,
            n_pm,
            n_mp,
            n_mm,
            duration: 0.0,
            alice_deg: 0.0,
            bob_deg: 0.0,
        }
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.n_pp, self.n_pm, self.n_mp, self.n_mm]
    }

    pub fn total(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementRecordSet {
    pub records: Vec<MeasurementRecord>,
}

impl MeasurementRecordSet {
    pub fn new(records: Vec<MeasurementRecord>) -> Self {
        MeasurementRecordSet { records }
    }

    /// Checks that every set holds each of the sixteen settings exactly once
    /// and that set indices run densely from 0.
    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::IncompleteRecords("no records".into()));
        }
        let mut seen: BTreeMap<u32, [bool; SETTINGS_PER_SET]> = BTreeMap::new();
        for r in &self.records {
            let idx = r.setting as usize;
            if idx >= SETTINGS_PER_SET {
                return Err(Error::IncompleteRecords(format!(
                    "set {} has setting index {} outside 0..16",
                    r.set, r.setting
                )));
            }
            let slot = seen.entry(r.set).or_default();
            if slot[idx] {
                return Err(Error::IncompleteRecords(format!(
                    "set {} lists setting {} twice",
                    r.set, r.setting
                )));
            }
            slot[idx] = true;
        }
        for (expect, (set, slot)) in seen.iter().enumerate() {
            if *set as usize != expect {
                return Err(Error::IncompleteRecords(format!("set {expect} is missing")));
            }
            if let Some(missing) = slot.iter().position(|x| !x) {
                return Err(Error::IncompleteRecords(format!(
                    "set {set} is missing setting {missing}"
                )));
            }
        }
        Ok(())
    }

    pub fn set_count(&self) -> usize {
        self.records.iter().map(|r| r.set).max().map_or(0, |m| m as usize + 1)
    }

    /// Coincidences of each setting summed over all sets.
    pub fn pooled_coincidences(&self) -> [u64; SETTINGS_PER_SET] {
        let mut out = [0u64; SETTINGS_PER_SET];
        for r in &self.records {
            out[r.setting as usize] += r.coincidences;
        }
        out
    }

    /// Counts pooled over sets and grouped per correlation.
    pub fn pooled_counts(&self) -> Result<[CoincidenceCounts; 4]> {
        self.validate()?;
        let pooled = self.pooled_coincidences();
        let mut dur = [0.0f64; SETTINGS_PER_SET];
        let mut angle = [(0.0, 0.0); SETTINGS_PER_SET];
        for r in &self.records {
            dur[r.setting as usize] += r.duration_s;
            angle[r.setting as usize] = (r.alice_deg, r.bob_deg);
        }
        Ok(std::array::from_fn(|pair| {
            let k = 4 * pair;
            CoincidenceCounts {
                n_pp: pooled[k],
                n_pm: pooled[k + 1],
                n_mp: pooled[k + 2],
                n_mm: pooled[k + 3],
                duration: dur[k..k + 4].iter().sum(),
                alice_deg: angle[k].0,
                bob_deg: angle[k].1,
            }
        }))
    }

    /// Base CHSH angles, read from the `++` channels of the first set.
    pub fn base_angles(&self) -> Result<ChshAngles> {
        let c = self.pooled_counts()?;
        Ok(ChshAngles::new(c[0].alice_deg, c[2].alice_deg, c[0].bob_deg, c[1].bob_deg))
    }

    pub fn mean_duration(&self) -> f64 {
        self.records.iter().map(|r| r.duration_s).sum::<f64>() / self.records.len() as f64
    }

    /// Mean singles per acquisition interval at A and B.
    pub fn mean_singles(&self) -> (f64, f64) {
        let n = self.records.len() as f64;
        let a = self.records.iter().map(|r| r.singles_a as f64).sum::<f64>() / n;
        let b = self.records.iter().map(|r| r.singles_b as f64).sum::<f64>() / n;
        (a, b)
    }

    pub fn total_coincidences(&self) -> u64 {
        self.records.iter().map(|r| r.coincidences).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.set.to_string(),
                r.setting.to_string(),
                r.alice_deg.to_string(),
                r.bob_deg.to_string(),
                r.duration_s.to_string(),
                r.singles_a.to_string(),
                r.singles_b.to_string(),
                r.coincidences.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parse records; `source` names the input in error messages.
    pub fn read_csv<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header_err = |message: String| Error::Parse {
            path: source.to_string(),
            line: 1,
            message,
        };
        let headers = rdr.headers().map_err(|e| header_err(e.to_string()))?.clone();
        if headers.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(header_err(format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut records = Vec::new();
        for row in rdr.deserialize::<MeasurementRecord>() {
            let r = row.map_err(|e| Error::Parse {
                path: source.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                message: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                },
            })?;
            records.push(r);
        }
        Ok(MeasurementRecordSet { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(set: u32, setting: u32) -> MeasurementRecord {
        MeasurementRecord {
            set,
            setting,
            alice_deg: 1.9,
            bob_deg: 22.9,
            duration_s: 60.0,
            singles_a: 290_400,
            singles_b: 207_000,
            coincidences: 100 + setting as u64,
        }
    }

    fn full(sets: u32) -> MeasurementRecordSet {
        MeasurementRecordSet::new(
            (0..sets)
                .flat_map(|s| (0..16).map(move |k| record(s, k)))
                .collect(),
        )
    }

    #[test]
    fn csv_layout() {
        let csv = full(1).to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "set,setting,alice_deg,bob_deg,duration_s,singles_a,singles_b,coincidences"
        );
        assert_eq!(lines.next().unwrap(), "0,0,1.9,22.9,60,290400,207000,100");
        assert!(!csv.contains('\r'));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn csv_round_trip_full_precision() {
        let mut set = full(2);
        set.records[3].alice_deg = 0.1 + 0.2;
        set.records[4].duration_s = 1.0 / 3.0;
        let text = set.to_csv_string();
        let back = MeasurementRecordSet::read_csv(text.as_bytes(), "mem").unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn malformed_row_reports_line() {
        let mut text = full(1).to_csv_string();
        text.push_str("1,0,abc,0,60,1,1,1\n");
        let err = MeasurementRecordSet::read_csv(text.as_bytes(), "runs.csv").unwrap_err();
        match err {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 18);
                assert_eq!(path, "runs.csv");
            }
            other => panic!("{other:?}"),
        }
        let err = MeasurementRecordSet::read_csv("a,b\n1,2\n".as_bytes(), "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn validation_finds_gaps() {
        let mut s = full(2);
        s.records.retain(|r| !(r.set == 1 && r.setting == 7));
        assert!(matches!(s.validate(), Err(Error::IncompleteRecords(m)) if m.contains("setting 7")));
        let mut s = full(3);
        s.records.retain(|r| r.set != 1);
        assert!(s.validate().is_err());
        let mut s = full(1);
        s.records.push(record(0, 3));
        assert!(s.validate().is_err());
        assert!(MeasurementRecordSet::default().validate().is_err());
        assert!(full(3).validate().is_ok());
    }

    #[test]
    fn pooling_sums_over_sets() {
        let s = full(3);
        let c = s.pooled_counts().unwrap();
        assert_eq!(c[0].as_array(), [300, 303, 306, 309]);
        assert_eq!(c[3].n_mm, 3 * 115);
        assert_eq!(c[1].duration, 3.0 * 4.0 * 60.0);
        assert_eq!(s.set_count(), 3);
    }
}
