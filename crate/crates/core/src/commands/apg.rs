use std::collections::BTreeMap;
use std::path::Path;

use crate::analysis::apg;
use crate::{Error, Result};

/// Reads a two-column `env,score` CSV with a header row.
pub fn read_score_file(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Config(format!("{}: expected `env,score` rows", path.display())));
        }
        let score: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{}: score {:?} is not a number", path.display(), &rec[1])))?;
        if out.insert(rec[0].trim().to_string(), score).is_some() {
            return Err(Error::Config(format!("{}: environment {:?} listed twice", path.display(), &rec[0])));
        }
    }
    Ok(out)
}

/// Average performance gain of `method` over `baseline`, in percent.
pub fn cmd_apg(method: &Path, baseline: &Path) -> Result<f64> {
    apg(&read_score_file(method)?, &read_score_file(baseline)?)
}
