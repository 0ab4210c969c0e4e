use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RECORD_HEADER: &str =
    "family,optimizer,seed,e_ground,e_excited,e_sa,n_evals,converged,wall_time_ms";

/// Outcome of one optimization run. Energies are NaN when the run aborted
/// before any finite point was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: String,
    pub optimizer: String,
    pub seed: u64,
    pub e_ground: f64,
    pub e_excited: f64,
    pub e_sa: f64,
    pub n_evals: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
}

impl RunRecord {
    /// Same record with the timing zeroed, for comparing reruns.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }

    fn check(&self, line: usize) -> Result<()> {
        if self.e_ground > self.e_excited {
            return Err(Error::Parse {
                line,
                msg: format!(
                    "e_ground {} above e_excited {}",
                    self.e_ground, self.e_excited
                ),
            });
        }
        Ok(())
    }
}

/// Writes a header line followed by one row per record. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Appends records one at a time, flushing after each so partial results
/// survive an interrupted experiment.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(out),
        }
    }

    pub fn write(&mut self, record: &RunRecord) -> Result<()> {
        self.inner.serialize(record)?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RECORD_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{RECORD_HEADER}`"),
        });
    }
    let mut records = Vec::new();
    for (i, row) in rd.deserialize::<RunRecord>().enumerate() {
        let line = i + 2;
        let r = row.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        r.check(line)?;
        records.push(r);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunRecord> {
        vec![
            RunRecord {
                family: "ideal".into(),
                optimizer: "bfgs".into(),
                seed: 3,
                e_ground: -2.236_067_977_499_79,
                e_excited: -0.325_485_163_310_043_6,
                e_sa: -2.561_552_812_808_830_3,
                n_evals: 37,
                converged: true,
                wall_time_ms: 1.25,
            },
            RunRecord {
                family: "SN-256".into(),
                optimizer: "slsqp".into(),
                seed: 0,
                e_ground: f64::NAN,
                e_excited: f64::NAN,
                e_sa: f64::NAN,
                n_evals: 4,
                converged: false,
                wall_time_ms: 0.0,
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let mut buf = Vec::new();
        write_records(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(RECORD_HEADER));
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back[0], sample()[0]);
        assert!(back[1].e_ground.is_nan() && !back[1].converged);
    }

    #[test]
    fn streaming_matches_batch() {
        let mut batch = Vec::new();
        write_records(&mut batch, &sample()).unwrap();
        let mut streamed = Vec::new();
        let mut w = RecordWriter::new(&mut streamed);
        for r in &sample() {
            w.write(r).unwrap();
        }
        drop(w);
        assert_eq!(batch, streamed);
    }

    #[test]
    fn rejects_wrong_header_and_order() {
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
        let bad = format!("{RECORD_HEADER}\nideal,bfgs,0,1.0,0.5,1.5,3,true,0\n");
        assert!(matches!(
            read_records(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
