use std::io::{Read, Write};
use std::path::Path;

use super::JobSpec;
use crate::error::{Error, Result};

/// Parse a job table with header `id,release,deadline,work,max_rate,weight`.
/// Row numbers in errors count data rows from 1.
pub fn load_job_portfolio<R: Read>(source: R) -> Result<Vec<JobSpec>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let expected = ["id", "release", "deadline", "work", "max_rate", "weight"];
    for col in expected {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Parse {
                row: 0,
                message: format!("missing column `{col}`"),
            });
        }
    }
    let mut jobs = Vec::new();
    for (k, rec) in rdr.deserialize::<JobSpec>().enumerate() {
        let job = rec.map_err(|e| Error::Parse {
            row: k + 1,
            message: e.to_string(),
        })?;
        jobs.push(job);
    }
    Ok(jobs)
}

pub fn load_job_portfolio_path(path: impl AsRef<Path>) -> Result<Vec<JobSpec>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_job_portfolio(f)
}

/// Write jobs in the same CSV layout [`load_job_portfolio`] reads.
pub fn write_job_portfolio<W: Write>(jobs: &[JobSpec], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    if jobs.is_empty() {
        w.write_record(["id", "release", "deadline", "work", "max_rate", "weight"])?;
    }
    for j in jobs {
        w.serialize(j)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

pub fn total_work(jobs: &[JobSpec]) -> f64 {
    jobs.iter().map(|j| j.work).sum()
}
