use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::records::Aggregate;
use crate::error::{Error, Result};

/// Writes whitespace-separated plot series into `dir`, one file per
/// `(kind, n, alg, metric)`: `p_pct` followed by one column per β.
/// Missing points are written as `NaN`.
pub fn write_plot_data(dir: &Path, aggs: &[Aggregate]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut series: Vec<(&str, usize, &str)> = Vec::new();
    for a in aggs {
        let key = (a.kind.as_str(), a.n, a.alg.as_str());
        if !series.contains(&key) {
            series.push(key);
        }
    }
    let mut out = Vec::new();
    for (kind, n, alg) in series {
        let group: Vec<&Aggregate> = aggs
            .iter()
            .filter(|a| a.kind == kind && a.n == n && a.alg == alg)
            .collect();
        let betas: BTreeSet<u64> = group.iter().map(|a| a.beta.to_bits()).collect();
        let ps: BTreeSet<u32> = group.iter().map(|a| a.p_pct).collect();
        for (metric, pick) in [
            ("rse", (|a: &Aggregate| a.mean_rse) as fn(&Aggregate) -> f64),
            ("infeas", |a: &Aggregate| a.mean_infeas),
        ] {
            let mut text = String::from("# p_pct");
            for &b in &betas {
                let _ = write!(text, " beta={}", f64::from_bits(b));
            }
            text.push('\n');
            for &p in &ps {
                let _ = write!(text, "{p}");
                for &b in &betas {
                    let v = group
                        .iter()
                        .find(|a| a.p_pct == p && a.beta.to_bits() == b)
                        .map_or(f64::NAN, |a| pick(a));
                    let _ = write!(text, " {v:.6e}");
                }
                text.push('\n');
            }
            let path = dir.join(format!("plot_{metric}_{kind}_n={n}_{alg}.dat"));
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            out.push(path);
        }
    }
    Ok(out)
}
