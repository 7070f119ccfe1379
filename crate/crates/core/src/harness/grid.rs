use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::records::RawRow;
use super::{orthogonality_for, run_solve, Algorithm, SolverSettings};
use crate::datagen::{
    generate_instance, instance_seed, read_instance, write_instance, FactorRole, InstanceKind, InstanceName,
};
use crate::error::{Error, Result};
use crate::model::{NonNegMatrix, ProblemSpec};
use crate::rng::{derive_seed, random_init};

/// Where benchmark instances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    /// Generate in memory from the master seed.
    Generate,
    /// Read `R` files written by [`generate_dataset`] from this directory.
    Directory(PathBuf),
}

/// A sweep over sizes, ranks, penalties and algorithms for one data kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub kind: InstanceKind,
    pub ns: Vec<usize>,
    /// `k = round(frac * n)`.
    pub k_fractions: Vec<f64>,
    /// `p = max(1, round(frac * k))`.
    pub p_fractions: Vec<f64>,
    pub betas: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub replicates: usize,
    pub master_seed: u64,
}

impl ExperimentGrid {
    pub fn default_for(kind: InstanceKind) -> Self {
        Self {
            kind,
            ns: vec![50, 100, 200, 500, 1000],
            k_fractions: vec![0.2, 0.4],
            p_fractions: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            betas: vec![1.0, 10.0, 100.0, 1000.0],
            algorithms: Algorithm::ALL.to_vec(),
            replicates: 5,
            master_seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Parameter(what.to_string()));
        if self.ns.is_empty() || self.k_fractions.is_empty() || self.p_fractions.is_empty() {
            return bad("grid needs at least one n, k fraction and p fraction");
        }
        if self.algorithms.is_empty() {
            return bad("grid needs at least one algorithm");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.algorithms.iter().any(|a| a.is_penalized()) && self.betas.is_empty() {
            return bad("penalized algorithms need at least one beta");
        }
        if self.betas.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return bad("beta values must be finite and non-negative");
        }
        for &f in self.k_fractions.iter().chain(&self.p_fractions) {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Parameter(format!("fractions must lie in (0, 1], got {f}")));
            }
        }
        for (n, k) in self.sizes() {
            if k == 0 || n < 2 * k {
                return Err(Error::Parameter(format!("n = {n} with k = {k} violates n >= 2k, k >= 1")));
            }
        }
        Ok(())
    }

    /// Distinct `(n, k)` pairs in grid order.
    pub fn sizes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &kf in &self.k_fractions {
                let k = (kf * n as f64).round() as usize;
                if !out.contains(&(n, k)) {
                    out.push((n, k));
                }
            }
        }
        out
    }

    pub fn ranks(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &pf in &self.p_fractions {
            let p = ((pf * k as f64).round() as usize).max(1);
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Every solve in the grid, in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (n, k) in self.sizes() {
            for id in 1..=self.replicates {
                for p in self.ranks(k) {
                    for &alg in &self.algorithms {
                        let betas: &[f64] = if alg.is_penalized() { &self.betas } else { &[0.0] };
                        for &beta in betas {
                            let alpha = match self.kind {
                                InstanceKind::Bion => beta,
                                InstanceKind::Union => 0.0,
                            };
                            out.push(Cell { n, k, p, id, alg, alpha, beta });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One solve of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub id: usize,
    pub alg: Algorithm,
    pub alpha: f64,
    pub beta: f64,
}

/// Writes every instance of the grid's sizes and replicates into `dir`.
pub fn generate_dataset(grid: &ExperimentGrid, dir: &Path) -> Result<Vec<PathBuf>> {
    grid.validate()?;
    let mut out = Vec::new();
    for (n, k) in grid.sizes() {
        for id in 1..=grid.replicates {
            let seed = instance_seed(grid.master_seed, n, k, grid.kind, id);
            let t = generate_instance(n, k, grid.kind, id, seed)?;
            out.extend(write_instance(&t, dir)?);
        }
    }
    Ok(out)
}

fn load(grid: &ExperimentGrid, source: &InstanceSource, n: usize, k: usize, id: usize) -> Result<NonNegMatrix> {
    let seed = instance_seed(grid.master_seed, n, k, grid.kind, id);
    match source {
        InstanceSource::Generate => Ok(generate_instance(n, k, grid.kind, id, seed)?.r),
        InstanceSource::Directory(dir) => {
            let name = InstanceName { kind: grid.kind, n, k, id };
            Ok(read_instance(&dir.join(name.file_name(FactorRole::R)))?.r)
        }
    }
}

fn solve_cell(
    grid: &ExperimentGrid,
    settings: &SolverSettings,
    r: &Result<NonNegMatrix>,
    cell: &Cell,
    config_hash: &str,
) -> RawRow {
    let seed = instance_seed(grid.master_seed, cell.n, cell.k, grid.kind, cell.id);
    let mut row = RawRow {
        kind: grid.kind.to_string(),
        n: cell.n,
        k: cell.k,
        p: cell.p,
        replicate: cell.id,
        seed,
        alg: cell.alg.to_string(),
        alpha: cell.alpha,
        beta: cell.beta,
        final_rse: f64::NAN,
        final_infeas: f64::NAN,
        iters: 0,
        wall_seconds: 0.0,
        termination: String::new(),
        master_seed: grid.master_seed,
        config_hash: config_hash.to_string(),
    };
    let result = r.as_ref().map_err(|e| Error::Parameter(e.to_string())).and_then(|r| {
        let spec = ProblemSpec::new(r.clone(), cell.p, orthogonality_for(grid.kind), cell.alpha, cell.beta)?;
        let init = random_init(cell.n, cell.p, cell.n, derive_seed(seed, &[cell.p as u64]));
        run_solve(cell.alg, &spec, grid.kind, settings, init)
    });
    match result {
        Ok(report) => {
            row.final_rse = report.final_rse();
            row.final_infeas = report.final_infeas();
            row.iters = report.iters;
            row.wall_seconds = report.wall_seconds;
            row.termination = report.termination.to_string();
        }
        Err(e) => row.termination = format!("error: {e}"),
    }
    row
}

/// Runs every cell of `grid` on up to `threads` workers (0 picks the number
/// of cores). Failed solves become rows with an `error: ...` termination.
/// Rows come back in [`ExperimentGrid::cells`] order regardless of scheduling.
pub fn run_benchmark(
    grid: &ExperimentGrid,
    settings: &SolverSettings,
    source: &InstanceSource,
    threads: usize,
) -> Result<Vec<RawRow>> {
    grid.validate()?;
    settings.validate()?;
    let config_hash = settings.config_hash();
    let cells = grid.cells();
    let run = || {
        let mut instances = Vec::new();
        for (n, k) in grid.sizes() {
            for id in 1..=grid.replicates {
                instances.push(((n, k, id), load(grid, source, n, k, id)));
            }
        }
        cells
            .par_iter()
            .map(|cell| {
                let r = &instances
                    .iter()
                    .find(|(key, _)| *key == (cell.n, cell.k, cell.id))
                    .expect("instance loaded for every cell")
                    .1;
                solve_cell(grid, settings, r, cell, &config_hash)
            })
            .collect::<Vec<_>>()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => Ok(pool.install(run)),
        Err(_) => Ok(run()),
    }
}
