//! Synthetic UNION / BION instances and their text-file representation.
//!
//! An orthonormal factor is built row by row: each row gets exactly one
//! non-zero entry at a uniformly chosen column, with a value drawn from
//! (0, 1). Columns left (near) empty are refilled by moving an entry over
//! from the largest column, and finally every column is scaled to unit norm.
//! Disjoint column supports make the columns orthogonal.
//!
//! Files are named `NMF_<BIOG|UNION>_data_<R|G|H>_n=<n>_k=<k>_id=<id>.txt`
//! and hold one matrix row per line.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::NonNegMatrix;
use crate::rng::{derive_seed, rng_from_seed, uniform_open01, SeededRng};

/// Columns whose Euclidean norm falls below this are refilled.
pub const MIN_COLUMN_NORM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InstanceKind {
    /// Only `G` has orthonormal columns; `H` is dense uniform.
    Union,
    /// `G` has orthonormal columns and `H` orthonormal rows.
    Bion,
}

impl InstanceKind {
    /// Token used in file names.
    pub fn file_token(self) -> &'static str {
        match self {
            InstanceKind::Union => "UNION",
            InstanceKind::Bion => "BIOG",
        }
    }

    fn from_file_token(s: &str) -> Option<Self> {
        match s {
            "UNION" => Some(InstanceKind::Union),
            "BIOG" => Some(InstanceKind::Bion),
            _ => None,
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            InstanceKind::Union => 1,
            InstanceKind::Bion => 2,
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Union => "UNION",
            InstanceKind::Bion => "BION",
        })
    }
}

impl std::str::FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "UNION" => Ok(InstanceKind::Union),
            "BION" | "BIOG" => Ok(InstanceKind::Bion),
            other => Err(Error::Parameter(format!("unknown instance kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorRole {
    R,
    G,
    H,
}

impl FactorRole {
    fn token(self) -> &'static str {
        match self {
            FactorRole::R => "R",
            FactorRole::G => "G",
            FactorRole::H => "H",
        }
    }
}

/// The identifying part of an instance file name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstanceName {
    pub kind: InstanceKind,
    pub n: usize,
    pub k: usize,
    pub id: usize,
}

impl InstanceName {
    pub fn file_name(&self, role: FactorRole) -> String {
        format!(
            "NMF_{}_data_{}_n={}_k={}_id={}.txt",
            self.kind.file_token(),
            role.token(),
            self.n,
            self.k,
            self.id
        )
    }

    /// Parses a file name (no directory part) into its name and role.
    pub fn parse(file_name: &str) -> Option<(Self, FactorRole)> {
        let rest = file_name.strip_prefix("NMF_")?.strip_suffix(".txt")?;
        let (token, rest) = rest.split_once("_data_")?;
        let kind = InstanceKind::from_file_token(token)?;
        let (role, rest) = rest.split_once('_')?;
        let role = match role {
            "R" => FactorRole::R,
            "G" => FactorRole::G,
            "H" => FactorRole::H,
            _ => return None,
        };
        let mut fields = rest.split('_');
        let n = parse_field(fields.next()?, "n=")?;
        let k = parse_field(fields.next()?, "k=")?;
        let id = parse_field(fields.next()?, "id=")?;
        if fields.next().is_some() {
            return None;
        }
        Some((InstanceName { kind, n, k, id }, role))
    }
}

fn parse_field(s: &str, prefix: &str) -> Option<usize> {
    let digits = s.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// A generated instance with its ground-truth factors.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTriple {
    pub name: InstanceName,
    pub seed: u64,
    pub r: NonNegMatrix,
    pub g_true: NonNegMatrix,
    pub h_true: NonNegMatrix,
}

/// An instance read back from disk; the true factors are present only when
/// the companion files exist.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedInstance {
    pub name: InstanceName,
    pub r: NonNegMatrix,
    pub truth: Option<(NonNegMatrix, NonNegMatrix)>,
}

/// Seed for replicate `id` of the `(n, k, kind)` cell under `master`.
pub fn instance_seed(master: u64, n: usize, k: usize, kind: InstanceKind, id: usize) -> u64 {
    derive_seed(master, &[n as u64, k as u64, kind.seed_tag(), id as u64])
}

pub fn generate_orthonormal_factor(rows: usize, cols: usize, seed: u64) -> Result<NonNegMatrix> {
    let mut rng = rng_from_seed(seed);
    orthonormal_factor(&mut rng, rows, cols)
}

fn orthonormal_factor(rng: &mut SeededRng, rows: usize, cols: usize) -> Result<NonNegMatrix> {
    check_factor_shape(rows, cols)?;
    let positions: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..cols)).collect();
    let values: Vec<f64> = (0..rows)
        .map(|_| rng.sample::<f64, _>(rand::distributions::Open01))
        .collect();
    orthonormal_factor_from_draws(rows, cols, &positions, &values)
}

fn check_factor_shape(rows: usize, cols: usize) -> Result<()> {
    if cols == 0 || rows < cols {
        return Err(Error::Parameter(format!(
            "orthonormal factor needs rows >= cols >= 1, got {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Deterministic part of [`generate_orthonormal_factor`]: row `i` gets
/// `values[i]` in column `positions[i]`, then columns are repaired and
/// normalized.
pub fn orthonormal_factor_from_draws(
    rows: usize,
    cols: usize,
    positions: &[usize],
    values: &[f64],
) -> Result<NonNegMatrix> {
    check_factor_shape(rows, cols)?;
    if positions.len() != rows || values.len() != rows {
        return Err(Error::Dimension(format!(
            "expected {rows} draws, got {} positions and {} values",
            positions.len(),
            values.len()
        )));
    }
    let mut m = Array2::<f64>::zeros((rows, cols));
    for (i, (&j, &v)) in positions.iter().zip(values).enumerate() {
        if j >= cols || v.is_nan() || v <= 0.0 {
            return Err(Error::Parameter(format!(
                "row {i}: draw ({j}, {v}) outside {cols} columns or not positive"
            )));
        }
        m[[i, j]] = v;
    }
    repair_columns(&mut m);
    for mut col in m.columns_mut() {
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    NonNegMatrix::new(m)
}

fn column_norms(m: &Array2<f64>) -> Vec<f64> {
    m.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect()
}

/// Moves entries into near-empty columns until every column has norm at least
/// [`MIN_COLUMN_NORM`]. The donor is the column of largest norm among those
/// holding two or more non-zeros (ties to the lowest index); its first
/// non-zero (lowest row) moves to the same row of the deficient column.
fn repair_columns(m: &mut Array2<f64>) {
    loop {
        let norms = column_norms(m);
        let Some(target) = norms.iter().position(|&v| v < MIN_COLUMN_NORM) else {
            return;
        };
        let donor = (0..m.ncols())
            .filter(|&j| m.column(j).iter().filter(|&&v| v != 0.0).count() >= 2)
            .fold(None::<usize>, |best, j| match best {
                Some(b) if norms[b] >= norms[j] => Some(b),
                _ => Some(j),
            })
            .expect("rows >= cols leaves some column with two entries");
        let row = m
            .column(donor)
            .iter()
            .position(|&v| v != 0.0)
            .expect("donor column is non-empty");
        // Any tiny leftover in the target stays in its own row, so supports
        // remain disjoint.
        m[[row, target]] = m[[row, donor]];
        m[[row, donor]] = 0.0;
    }
}

/// Builds replicate `id` of an `(n, k)` instance. `R` is `n×n`.
pub fn generate_instance(n: usize, k: usize, kind: InstanceKind, id: usize, seed: u64) -> Result<InstanceTriple> {
    if k == 0 || n < 2 * k {
        return Err(Error::Parameter(format!(
            "instance needs n >= 2k and k >= 1, got n = {n}, k = {k}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let g = orthonormal_factor(&mut rng, n, k)?;
    let h = match kind {
        InstanceKind::Bion => orthonormal_factor(&mut rng, n, k)?.into_inner().reversed_axes(),
        InstanceKind::Union => uniform_open01(&mut rng, k, n),
    };
    let h = NonNegMatrix::new(h)?;
    let r = NonNegMatrix::new(g.as_array().dot(h.as_array()))?;
    Ok(InstanceTriple {
        name: InstanceName { kind, n, k, id },
        seed,
        r,
        g_true: g,
        h_true: h,
    })
}

/// Writes `R`, `G`, `H` into `dir` and returns the three paths in that order.
pub fn write_instance(t: &InstanceTriple, dir: &Path) -> Result<[PathBuf; 3]> {
    if dir.as_os_str().is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty directory path"),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::with_capacity(3);
    for (role, m) in [
        (FactorRole::R, &t.r),
        (FactorRole::G, &t.g_true),
        (FactorRole::H, &t.h_true),
    ] {
        let path = dir.join(t.name.file_name(role));
        write_matrix(&path, m.as_array())?;
        out.push(path);
    }
    Ok(out.try_into().expect("three paths"))
}

/// 17 significant digits, space separated, one row per line.
pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b" ").map_err(|e| Error::io(path, e))?;
            }
            first = false;
            write!(w, "{v:.16e}").map_err(|e| Error::io(path, e))?;
        }
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| Error::MalformedNumber {
                path: path.to_path_buf(),
                line: idx + 1,
                token: token.to_string(),
            })?;
            data.push(v);
        }
        let found = data.len() - before;
        match cols {
            None => cols = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::RaggedRow {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    expected,
                    found,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if rows == 0 {
        return Err(Error::Shape { rows, cols });
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Dimension(e.to_string()))
}

/// Reads an `R` file; `_G_`/`_H_` companions next to it are loaded and checked
/// against `R = GH` when both exist.
pub fn read_instance(path_r: &Path) -> Result<LoadedInstance> {
    let file_name = path_r
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::FileName {
            path: path_r.to_path_buf(),
        })?;
    let (name, role) = InstanceName::parse(file_name).ok_or_else(|| Error::FileName {
        path: path_r.to_path_buf(),
    })?;
    if role != FactorRole::R {
        return Err(Error::FileName {
            path: path_r.to_path_buf(),
        });
    }
    let r = NonNegMatrix::new(read_matrix(path_r)?)?;
    let dir = path_r.parent().unwrap_or_else(|| Path::new(""));
    let g_path = dir.join(name.file_name(FactorRole::G));
    let h_path = dir.join(name.file_name(FactorRole::H));
    let truth = if g_path.is_file() && h_path.is_file() {
        let g = NonNegMatrix::new(read_matrix(&g_path)?)?;
        let h = NonNegMatrix::new(read_matrix(&h_path)?)?;
        if g.rows() != r.rows() || h.cols() != r.cols() || g.cols() != h.rows() {
            return Err(Error::Dimension(format!(
                "{}: companions G {}x{} and H {}x{} do not conform with R {}x{}",
                path_r.display(),
                g.rows(),
                g.cols(),
                h.rows(),
                h.cols(),
                r.rows(),
                r.cols()
            )));
        }
        let product = g.as_array().dot(h.as_array());
        let deviation = (&product - r.as_array())
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if deviation > 1e-10 {
            return Err(Error::Inconsistent {
                path: path_r.to_path_buf(),
                deviation,
            });
        }
        Some((g, h))
    } else {
        None
    };
    Ok(LoadedInstance { name, r, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{infeas_bi, infeas_uni, rse};

    fn gram_error(m: &Array2<f64>) -> f64 {
        let gram = m.t().dot(m);
        (&gram - &Array2::<f64>::eye(m.ncols()))
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn single_column_normalizes_to_one() {
        for seed in 0..20 {
            let g = generate_orthonormal_factor(2, 1, seed).unwrap();
            let col: Vec<f64> = g.as_array().column(0).to_vec();
            let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-15, "seed {seed}: {col:?}");
            assert!(col.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn four_by_two_is_orthonormal() {
        let g = generate_orthonormal_factor(4, 2, 11).unwrap();
        assert!(gram_error(g.as_array()) < 1e-12);
    }

    #[test]
    fn repair_fills_empty_column() {
        // Every row lands in column 0.
        let g = orthonormal_factor_from_draws(4, 2, &[0, 0, 0, 0], &[0.4, 0.9, 0.2, 0.7]).unwrap();
        let m = g.as_array();
        assert!(gram_error(m) < 1e-12);
        // First non-zero of the donor (row 0) moved to column 1.
        assert_eq!(m[[0, 0]], 0.0);
        assert_eq!(m[[0, 1]], 1.0);
    }

    #[test]
    fn repair_skips_single_entry_donors() {
        // Column 0 holds one large entry, column 1 two small ones, column 2 none.
        let g = orthonormal_factor_from_draws(3, 3, &[0, 1, 1], &[0.9, 0.1, 0.2]).unwrap();
        let m = g.as_array();
        assert!(gram_error(m) < 1e-12);
        assert_eq!(m[[0, 0]], 1.0);
        assert_eq!(m[[1, 2]], 1.0);
        assert_eq!(m[[2, 1]], 1.0);
    }

    #[test]
    fn factor_shape_errors() {
        assert!(generate_orthonormal_factor(2, 3, 0).is_err());
        assert!(generate_orthonormal_factor(3, 0, 0).is_err());
        assert!(orthonormal_factor_from_draws(2, 2, &[0, 2], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn bion_instance_is_exact() {
        let t = generate_instance(50, 10, InstanceKind::Bion, 1, 99).unwrap();
        assert_eq!(t.r.rows(), 50);
        assert_eq!(t.r.cols(), 50);
        assert!(infeas_bi(t.g_true.as_array(), t.h_true.as_array()).unwrap() < 1e-12);
        assert_eq!(rse(t.r.as_array(), t.g_true.as_array(), t.h_true.as_array()).unwrap(), 0.0);
    }

    #[test]
    fn union_instance_has_dense_positive_h() {
        let t = generate_instance(50, 20, InstanceKind::Union, 1, 5).unwrap();
        assert!(infeas_uni(t.g_true.as_array()) < 1e-12);
        assert!(t.h_true.as_array().iter().all(|&v| v > 0.0));
        assert_eq!(t.h_true.rows(), 20);
    }

    #[test]
    fn instance_rejects_large_k() {
        assert!(generate_instance(10, 6, InstanceKind::Bion, 1, 0).is_err());
    }

    #[test]
    fn file_name_round_trip() {
        let name = InstanceName {
            kind: InstanceKind::Bion,
            n: 200,
            k: 80,
            id: 5,
        };
        let file = name.file_name(FactorRole::R);
        assert_eq!(file, "NMF_BIOG_data_R_n=200_k=80_id=5.txt");
        assert_eq!(InstanceName::parse(&file), Some((name, FactorRole::R)));
        assert_eq!(
            InstanceName::parse("NMF_UNION_data_H_n=50_k=10_id=2.txt").map(|(n, r)| (n.kind, r)),
            Some((InstanceKind::Union, FactorRole::H))
        );
        for bad in [
            "NMF_BION_data_R_n=200_k=80_id=5.txt",
            "NMF_BIOG_data_R_k=80_n=200_id=5.txt",
            "NMF_BIOG_data_X_n=200_k=80_id=5.txt",
            "NMF_BIOG_data_R_n=200_k=80_id=5.csv",
            "NMF_BIOG_data_R_n=2x0_k=80_id=5.txt",
            "NMF_BIOG_data_R_n=200_k=80_id=5_extra.txt",
        ] {
            assert_eq!(InstanceName::parse(bad), None, "{bad}");
        }
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = generate_instance(20, 4, InstanceKind::Union, 3, 17).unwrap();
        let [r_path, _, _] = write_instance(&t, dir.path()).unwrap();
        let loaded = read_instance(&r_path).unwrap();
        assert_eq!(loaded.name, t.name);
        assert_eq!(loaded.r, t.r);
        let (g, h) = loaded.truth.unwrap();
        assert_eq!(g, t.g_true);
        assert_eq!(h, t.h_true);
    }

    #[test]
    fn read_without_companions() {
        let dir = tempfile::tempdir().unwrap();
        let t = generate_instance(10, 2, InstanceKind::Bion, 1, 3).unwrap();
        let [r_path, g_path, _] = write_instance(&t, dir.path()).unwrap();
        fs::remove_file(g_path).unwrap();
        let loaded = read_instance(&r_path).unwrap();
        assert!(loaded.truth.is_none());
    }

    #[test]
    fn write_to_empty_path_fails() {
        let t = generate_instance(10, 2, InstanceKind::Bion, 1, 3).unwrap();
        assert!(matches!(write_instance(&t, Path::new("")), Err(Error::Io { .. })));
    }

    #[test]
    fn read_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let bad_num = dir.path().join("NMF_UNION_data_R_n=2_k=1_id=1.txt");
        fs::write(&bad_num, "1 2\n3 x\n").unwrap();
        assert!(matches!(read_instance(&bad_num), Err(Error::MalformedNumber { line: 2, .. })));

        let ragged = dir.path().join("NMF_UNION_data_R_n=2_k=1_id=2.txt");
        fs::write(&ragged, "1 2\n3\n").unwrap();
        assert!(matches!(
            read_instance(&ragged),
            Err(Error::RaggedRow { expected: 2, found: 1, .. })
        ));

        let misnamed = dir.path().join("matrix.txt");
        fs::write(&misnamed, "1 2\n3 4\n").unwrap();
        assert!(matches!(read_instance(&misnamed), Err(Error::FileName { .. })));
    }

    #[test]
    fn inconsistent_companions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = generate_instance(10, 2, InstanceKind::Bion, 1, 3).unwrap();
        let [r_path, g_path, _] = write_instance(&t, dir.path()).unwrap();
        let mut g = t.g_true.as_array().clone();
        g[[0, 0]] += 0.5;
        write_matrix(&g_path, &g).unwrap();
        assert!(matches!(read_instance(&r_path), Err(Error::Inconsistent { .. })));
    }
}
