//! Run records and their CSV form. The first line of every file is the
//! schema marker `#schema=1`; the second is the column header.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

pub const SCHEMA_LINE: &str = "#schema=1";

/// One `(n, eps, trial)` outcome. Refused runs carry no risk value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub p: f64,
    pub d: usize,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trial: usize,
    pub seed: u64,
    pub excess_risk: Option<f64>,
    /// Standard error of the excess-risk evaluation (0 for closed forms).
    pub excess_risk_se: Option<f64>,
    pub truncation_fraction: Option<f64>,
    pub wall_ms: Option<f64>,
    pub refused: bool,
    pub refusal_reason: Option<String>,
}

pub fn write_records<W: Write>(mut out: W, records: &[RunRecord]) -> HarnessResult<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        // keep the header even for an empty run
        w.write_record([
            "algorithm",
            "p",
            "d",
            "n",
            "epsilon",
            "delta",
            "trial",
            "seed",
            "excess_risk",
            "excess_risk_se",
            "truncation_fraction",
            "wall_ms",
            "refused",
            "refusal_reason",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> HarnessResult<Vec<RunRecord>> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let first = first.trim_end();
    if !first.starts_with("#schema=") {
        return Err(HarnessError::config("missing '#schema=' line at the top of the records file"));
    }
    if first != SCHEMA_LINE {
        return Err(HarnessError::config(format!(
            "unsupported records schema {first:?}, expected {SCHEMA_LINE:?}"
        )));
    }
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn to_csv_string(records: &[RunRecord]) -> HarnessResult<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(i: usize) -> RunRecord {
        RunRecord {
            algorithm: "noisy_reg_md".into(),
            p: 1.5,
            d: 20,
            n: 256 << i,
            epsilon: 0.5,
            delta: 1e-5,
            trial: i,
            seed: 0xdead_beef + i as u64,
            excess_risk: Some(0.1 / (i + 1) as f64),
            excess_risk_se: Some(1e-3),
            truncation_fraction: None,
            wall_ms: None,
            refused: false,
            refusal_reason: None,
        }
    }

    #[test]
    fn header_and_refusals() {
        let mut r = rec(0);
        r.refused = true;
        r.excess_risk = None;
        r.excess_risk_se = None;
        r.refusal_reason = Some("privacy precondition violated: x, y (requires n >= 4)".into());
        let text = to_csv_string(&[r.clone()]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SCHEMA_LINE));
        assert!(lines.next().unwrap().starts_with("algorithm,p,d,n,epsilon"));
        assert_eq!(read_records(text.as_bytes()).unwrap(), vec![r]);
        let empty = to_csv_string(&[]).unwrap();
        assert!(read_records(empty.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn schema_is_checked() {
        assert!(read_records("algorithm\n".as_bytes()).is_err());
        assert!(read_records("#schema=2\nalgorithm\n".as_bytes()).is_err());
    }

    #[test]
    fn infinite_p_round_trips() {
        let mut r = rec(1);
        r.p = f64::INFINITY;
        let text = to_csv_string(&[r.clone()]).unwrap();
        assert_eq!(read_records(text.as_bytes()).unwrap(), vec![r]);
    }

    proptest! {
        #[test]
        fn round_trip(
            risk in proptest::option::of(-1e3f64..1e3),
            frac in proptest::option::of(0.0f64..1.0),
            ms in proptest::option::of(0.0f64..1e6),
            eps in 1e-6f64..1e6,
            seed in any::<u64>(),
            reason in proptest::option::of("[a-z ,\"#=]{0,30}"),
        ) {
            let mut r = rec(2);
            r.excess_risk = risk;
            r.truncation_fraction = frac;
            r.wall_ms = ms;
            r.epsilon = eps;
            r.seed = seed;
            r.refused = reason.is_some();
            r.refusal_reason = reason.filter(|s| !s.is_empty());
            let text = to_csv_string(&[r.clone(), rec(3)]).unwrap();
            prop_assert_eq!(read_records(text.as_bytes()).unwrap(), vec![r, rec(3)]);
        }
    }
}
