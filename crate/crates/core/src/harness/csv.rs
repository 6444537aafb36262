use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Arm, ExperimentResult};
use crate::error::{Error, Result};
use crate::report::fmt17;

pub const PVALUE_CSV: &str = "pvalues.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";

fn header_comment(result: &ExperimentResult) -> String {
    format!("# {}\n", result.spec.describe())
}

/// Long format `trial,arm,key_index,p`; key 0 is the identity witness.
pub fn write_pvalue_csv<W: Write>(result: &ExperimentResult, mut w: W) -> std::io::Result<()> {
    w.write_all(header_comment(result).as_bytes())?;
    writeln!(w, "trial,arm,key_index,p")?;
    for r in &result.records {
        for (arm, witness, ps) in [
            (Arm::Honest, r.witness_honest_p, &r.honest_p),
            (Arm::Attack, r.witness_attack_p, &r.attack_p),
        ] {
            if let Some(p) = witness {
                writeln!(w, "{},{},0,{}", r.trial, arm.as_str(), fmt17(p))?;
            }
            for (k, p) in ps.iter().enumerate() {
                writeln!(w, "{},{},{},{}", r.trial, arm.as_str(), k + 1, fmt17(*p))?;
            }
        }
    }
    Ok(())
}

/// `trial,arm,delta`.
pub fn write_aggregate_csv<W: Write>(result: &ExperimentResult, mut w: W) -> std::io::Result<()> {
    w.write_all(header_comment(result).as_bytes())?;
    writeln!(w, "trial,arm,delta")?;
    for r in &result.records {
        writeln!(w, "{},honest,{}", r.trial, fmt17(r.honest_delta))?;
        writeln!(w, "{},attack,{}", r.trial, fmt17(r.attack_delta))?;
    }
    Ok(())
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes [`PVALUE_CSV`] and [`AGGREGATE_CSV`] into `dir`, creating it.
pub fn emit_csv(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(PVALUE_CSV);
    let a = dir.join(AGGREGATE_CSV);
    write_file(&p, |w| write_pvalue_csv(result, w))?;
    write_file(&a, |w| write_aggregate_csv(result, w))?;
    Ok(vec![p, a])
}
