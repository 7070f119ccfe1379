use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Algorithm;
use crate::error::{Error, Result};

/// First line of every CSV this crate writes.
pub const CSV_VERSION_LINE: &str = "# orthofact-csv v1";

/// One solve of a benchmark sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub kind: String,
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub replicate: usize,
    /// Seed of the instance.
    pub seed: u64,
    pub alg: String,
    pub alpha: f64,
    pub beta: f64,
    pub final_rse: f64,
    pub final_infeas: f64,
    pub iters: usize,
    pub wall_seconds: f64,
    /// A termination reason, or `error: <message>` when the solve failed.
    pub termination: String,
    pub master_seed: u64,
    pub config_hash: String,
}

impl RawRow {
    /// `p` as a percentage of `k`, rounded to an integer.
    pub fn p_percent(&self) -> u32 {
        (100.0 * self.p as f64 / self.k as f64).round() as u32
    }

    pub fn is_error(&self) -> bool {
        self.termination.starts_with("error")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(w, "{CSV_VERSION_LINE}").map_err(|e| Error::io(path, e))?;
    Ok(w)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Csv {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn write_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_raw_csv(path: &Path, rows: &[RawRow]) -> Result<()> {
    write_records(path, rows)
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<RawRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    if first.trim_end() != CSV_VERSION_LINE {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected {CSV_VERSION_LINE:?}, found {:?}", first.trim_end()),
        });
    }
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| {
                // Offset by the version line consumed above.
                let mut err = csv_err(path, e);
                if let Error::Csv { line, .. } = &mut err {
                    *line += 1;
                }
                err
            })
        })
        .collect()
}

/// Mean metrics of one `(kind, n, p%, alg, β)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub kind: String,
    pub n: usize,
    pub p_pct: u32,
    pub alg: String,
    pub beta: f64,
    pub count: usize,
    pub mean_rse: f64,
    pub mean_infeas: f64,
}

type GroupKey = (String, usize, u32, usize, u64);

fn alg_rank(alg: &str) -> usize {
    alg.parse::<Algorithm>()
        .map_or(usize::MAX, |a| Algorithm::ALL.iter().position(|&b| b == a).unwrap_or(usize::MAX))
}

/// Arithmetic means grouped by `(kind, n, p%, alg, β)`; failed solves are skipped.
pub fn aggregate(rows: &[RawRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<GroupKey, (String, f64, usize, f64, f64)> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.is_error()) {
        // β ≥ 0, so the bit pattern orders like the value.
        let key = (row.kind.clone(), row.n, row.p_percent(), alg_rank(&row.alg), row.beta.to_bits());
        let e = groups
            .entry(key)
            .or_insert_with(|| (row.alg.clone(), row.beta, 0, 0.0, 0.0));
        e.2 += 1;
        e.3 += row.final_rse;
        e.4 += row.final_infeas;
    }
    groups
        .into_iter()
        .map(|((kind, n, p_pct, _, _), (alg, beta, count, rse, infeas))| Aggregate {
            kind,
            n,
            p_pct,
            alg,
            beta,
            count,
            mean_rse: rse / count as f64,
            mean_infeas: infeas / count as f64,
        })
        .collect()
}

pub fn write_aggregate_csv(path: &Path, aggs: &[Aggregate]) -> Result<()> {
    write_records(path, aggs)
}

fn column_name(alg: &str, beta: f64) -> String {
    if alg == Algorithm::Ding.as_str() {
        alg.to_string()
    } else {
        format!("{alg}_beta={beta}")
    }
}

/// Writes `table_rse_<KIND>.csv` and `table_infeas_<KIND>.csv` into `dir`:
/// one row per `(n, p%)`, one column per algorithm and β. Returns the paths.
pub fn write_wide_tables(dir: &Path, aggs: &[Aggregate]) -> Result<Vec<PathBuf>> {
    let kinds: BTreeSet<&str> = aggs.iter().map(|a| a.kind.as_str()).collect();
    let mut out = Vec::new();
    for kind in kinds {
        let of_kind: Vec<&Aggregate> = aggs.iter().filter(|a| a.kind == kind).collect();
        let columns: BTreeSet<(usize, u64)> = of_kind
            .iter()
            .map(|a| (alg_rank(&a.alg), a.beta.to_bits()))
            .collect();
        let headers: Vec<String> = columns
            .iter()
            .map(|&(rank, bits)| {
                let a = of_kind
                    .iter()
                    .find(|a| alg_rank(&a.alg) == rank && a.beta.to_bits() == bits)
                    .expect("column comes from data");
                column_name(&a.alg, a.beta)
            })
            .collect();
        let rows: BTreeSet<(usize, u32)> = of_kind.iter().map(|a| (a.n, a.p_pct)).collect();
        for (metric, pick) in [
            ("rse", (|a: &Aggregate| a.mean_rse) as fn(&Aggregate) -> f64),
            ("infeas", |a: &Aggregate| a.mean_infeas),
        ] {
            let path = dir.join(format!("table_{metric}_{kind}.csv"));
            let mut w = csv::Writer::from_writer(create(&path)?);
            let mut header = vec!["n".to_string(), "p_pct".to_string()];
            header.extend(headers.iter().cloned());
            w.write_record(&header).map_err(|e| csv_err(&path, e))?;
            for &(n, p_pct) in &rows {
                let mut record = vec![n.to_string(), p_pct.to_string()];
                for &(rank, bits) in &columns {
                    let cell = of_kind
                        .iter()
                        .find(|a| a.n == n && a.p_pct == p_pct && alg_rank(&a.alg) == rank && a.beta.to_bits() == bits)
                        .map_or(String::new(), |a| format!("{:.4}", pick(a)));
                    record.push(cell);
                }
                w.write_record(&record).map_err(|e| csv_err(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            out.push(path);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn row(alg: &str, beta: f64, p: usize, rse: f64, infeas: f64) -> RawRow {
        RawRow {
            kind: "UNION".into(),
            n: 50,
            k: 10,
            p,
            replicate: 1,
            seed: 3,
            alg: alg.into(),
            alpha: 0.0,
            beta,
            final_rse: rse,
            final_infeas: infeas,
            iters: 10,
            wall_seconds: 0.5,
            termination: "stall".into(),
            master_seed: 1,
            config_hash: "abc".into(),
        }
    }

    #[test]
    fn single_row_aggregate_equals_raw() {
        let r = row("pg", 10.0, 2, 0.123, 0.456);
        let agg = aggregate(std::slice::from_ref(&r));
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].mean_rse, 0.123);
        assert_eq!(agg[0].mean_infeas, 0.456);
        assert_eq!(agg[0].p_pct, 20);
        assert_eq!(agg[0].count, 1);
    }

    #[test]
    fn groups_by_beta_and_skips_errors() {
        let mut bad = row("pg", 1.0, 2, f64::NAN, f64::NAN);
        bad.termination = "error: boom".into();
        let rows = vec![
            row("pg", 1.0, 2, 0.2, 0.1),
            row("pg", 1.0, 2, 0.4, 0.3),
            row("pg", 10.0, 2, 0.5, 0.05),
            row("ding", 0.0, 2, 0.3, 0.01),
            bad,
        ];
        let agg = aggregate(&rows);
        let algs: Vec<(&str, f64)> = agg.iter().map(|a| (a.alg.as_str(), a.beta)).collect();
        assert_eq!(algs, vec![("ding", 0.0), ("pg", 1.0), ("pg", 10.0)]);
        assert!((agg[1].mean_rse - 0.3).abs() < 1e-15);
        assert_eq!(agg[1].count, 2);
    }

    #[test]
    fn raw_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        let rows = vec![row("mirzal", 100.0, 4, 0.1 + 0.2, 1e-17), row("ding", 0.0, 2, 0.5, 0.25)];
        write_raw_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_VERSION_LINE));
        assert_eq!(
            lines.next(),
            Some("kind,n,k,p,replicate,seed,alg,alpha,beta,final_rse,final_infeas,iters,wall_seconds,termination,master_seed,config_hash")
        );
        assert_eq!(read_raw_csv(&path).unwrap(), rows);
    }

    #[test]
    fn malformed_csv_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        std::fs::write(&path, "kind,n\nUNION,50\n").unwrap();
        assert!(matches!(read_raw_csv(&path), Err(Error::Csv { line: 1, .. })));
        std::fs::write(&path, format!("{CSV_VERSION_LINE}\nkind,n\nUNION,x\n")).unwrap();
        assert!(matches!(read_raw_csv(&path), Err(Error::Csv { .. })));
    }

    #[test]
    fn wide_table_layout() {
        let rows = vec![
            row("ding", 0.0, 2, 0.3, 0.01),
            row("mirzal", 1.0, 2, 0.2, 0.1),
            row("mirzal", 10.0, 2, 0.25, 0.05),
            row("pg", 1.0, 2, 0.21, 0.09),
            row("pg", 1.0, 4, 0.11, 0.08),
        ];
        let dir = tempfile::tempdir().unwrap();
        let paths = write_wide_tables(dir.path(), &aggregate(&rows)).unwrap();
        assert_eq!(paths.len(), 2);
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "n,p_pct,ding,mirzal_beta=1,mirzal_beta=10,pg_beta=1");
        assert_eq!(lines[2], "50,20,0.3000,0.2000,0.2500,0.2100");
        assert_eq!(lines[3], "50,40,,,,0.1100");
    }
}
