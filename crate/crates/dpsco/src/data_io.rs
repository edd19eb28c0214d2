//! Dataset CSV files: header `x_1,...,x_d` plus a trailing `y` column for
//! labelled data.

use std::io::{Read, Write};

use dpsco_core::problems::Dataset;

use crate::error::{HarnessError, HarnessResult};

pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> HarnessResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=data.d()).map(|j| format!("x_{j}")).collect();
    if data.has_labels() {
        header.push("y".into());
    }
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.x(i).iter().map(|v| v.to_string()).collect();
        if data.has_labels() {
            row.push(data.y(i).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> HarnessResult<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let labelled = header.iter().last() == Some("y");
    let d = header.len() - usize::from(labelled);
    for (j, name) in header.iter().take(d).enumerate() {
        if name != format!("x_{}", j + 1) {
            return Err(HarnessError::config(format!(
                "column {} is named {name:?}, expected \"x_{}\"",
                j + 1,
                j + 1
            )));
        }
    }
    if d == 0 {
        return Err(HarnessError::config("dataset has no feature columns"));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| -> HarnessResult<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                HarnessError::config(format!("row {}: cannot parse {s:?} as a number", line + 1))
            })
        };
        for j in 0..d {
            features.push(parse(&rec[j])?);
        }
        if labelled {
            labels.push(parse(&rec[d])?);
        }
    }
    Ok(Dataset::new(d, features, labelled.then_some(labels))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpsco_core::problems::DataDistribution;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn round_trip(data: &Dataset) -> Dataset {
        let mut buf = Vec::new();
        write_dataset(&mut buf, data).unwrap();
        read_dataset(buf.as_slice()).unwrap()
    }

    #[test]
    fn labelled_and_unlabelled_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lab = DataDistribution::logistic(vec![0.1, 0.2, 0.3], 1.0, 2.0).unwrap().sample(50, &mut rng).unwrap();
        assert_eq!(round_trip(&lab), lab);
        let unl = DataDistribution::mean_point(vec![0.5, -1.0], 0.3).unwrap().sample(20, &mut rng).unwrap();
        let back = round_trip(&unl);
        assert_eq!(back, unl);
        assert!(!back.has_labels());
    }

    #[test]
    fn header_is_checked() {
        assert!(read_dataset("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset("x_1,x_3\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset("x_1,y\n1,oops\n".as_bytes()).is_err());
        let ok = read_dataset("x_1,x_2,y\n1,2,-1\n3,4,1\n".as_bytes()).unwrap();
        assert_eq!((ok.n(), ok.d(), ok.y(1)), (2, 2, 1.0));
    }
}
