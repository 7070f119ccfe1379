use serde::Serialize;
use wasm_bindgen::prelude::*;

use orthofact::datagen::{generate_instance, InstanceKind, InstanceTriple};
use orthofact::harness::{orthogonality_for, run_solve, Algorithm, SolverSettings};
use orthofact::model::ProblemSpec;
use orthofact::rng::{derive_seed, random_init};
use orthofact::{Error, Result, SolveReport};

#[derive(Serialize)]
pub struct Run {
    pub alg: &'static str,
    pub termination: &'static str,
    pub iters: usize,
    pub seconds: f64,
    pub rse: Vec<f64>,
    pub infeas: Vec<f64>,
    pub objective: Vec<f64>,
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub p_pct: u32,
    pub beta: f64,
    pub rse: f64,
    pub infeas: f64,
}

#[derive(Serialize)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub true_cols: usize,
    /// Row-major.
    pub g: Vec<f64>,
    pub g_true: Vec<f64>,
    pub rse: f64,
}

struct Setup {
    kind: InstanceKind,
    inst: InstanceTriple,
    settings: SolverSettings,
    seed: u64,
}

fn setup(kind: &str, n: usize, k: usize, seed: u32, max_iters: usize) -> Result<Setup> {
    let kind: InstanceKind = kind.parse()?;
    let seed = u64::from(seed);
    let inst = generate_instance(n, k, kind, 1, seed)?;
    let mut settings = SolverSettings::default();
    settings.set_max_iters(max_iters);
    settings.set_time_limit(30.0);
    settings.validate()?;
    Ok(Setup {
        kind,
        inst,
        settings,
        seed,
    })
}

impl Setup {
    fn solve(&self, alg: Algorithm, p: usize, beta: f64) -> Result<SolveReport> {
        let beta = if alg.is_penalized() { beta } else { 0.0 };
        let alpha = match self.kind {
            InstanceKind::Bion => beta,
            InstanceKind::Union => 0.0,
        };
        let n = self.inst.name.n;
        let spec = ProblemSpec::new(self.inst.r.clone(), p, orthogonality_for(self.kind), alpha, beta)?;
        let init = random_init(n, p, n, derive_seed(self.seed, &[p as u64]));
        run_solve(alg, &spec, self.kind, &self.settings, init)
    }
}

/// Every algorithm on one generated instance from one shared start.
pub fn convergence_runs(kind: &str, n: usize, k: usize, p: usize, beta: f64, seed: u32, max_iters: usize) -> Result<Vec<Run>> {
    let s = setup(kind, n, k, seed, max_iters)?;
    Algorithm::ALL
        .iter()
        .map(|&alg| {
            let r = s.solve(alg, p, beta)?;
            Ok(Run {
                alg: alg.as_str(),
                termination: r.termination.as_str(),
                iters: r.iters,
                seconds: r.wall_seconds,
                rse: r.trace.iter().map(|t| t.rse).collect(),
                infeas: r.trace.iter().map(|t| t.infeas).collect(),
                objective: r.trace.iter().map(|t| t.objective).collect(),
            })
        })
        .collect()
}

/// Final metrics of `alg` for p = 20%..100% of k and each β.
pub fn sweep_points(
    kind: &str,
    n: usize,
    k: usize,
    alg: &str,
    betas: &[f64],
    seed: u32,
    max_iters: usize,
) -> Result<Vec<SweepPoint>> {
    let s = setup(kind, n, k, seed, max_iters)?;
    let alg: Algorithm = alg.parse()?;
    if betas.is_empty() {
        return Err(Error::Parameter("no beta values".into()));
    }
    let mut out = Vec::new();
    for pct in [20, 40, 60, 80, 100] {
        let p = ((pct * k) as f64 / 100.0).round().max(1.0) as usize;
        for &beta in betas {
            let r = s.solve(alg, p, beta)?;
            out.push(SweepPoint {
                p_pct: pct as u32,
                beta,
                rse: r.final_rse(),
                infeas: r.final_infeas(),
            });
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn heatmap_data(
    kind: &str,
    n: usize,
    k: usize,
    p: usize,
    alg: &str,
    beta: f64,
    seed: u32,
    max_iters: usize,
) -> Result<Heatmap> {
    let s = setup(kind, n, k, seed, max_iters)?;
    let r = s.solve(alg.parse()?, p, beta)?;
    Ok(Heatmap {
        rows: n,
        cols: p,
        true_cols: k,
        g: r.factors.g.iter().copied().collect(),
        g_true: s.inst.g_true.as_array().iter().copied().collect(),
        rse: r.final_rse(),
    })
}

fn to_json<T: Serialize>(v: Result<T>) -> std::result::Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn convergence(kind: &str, n: usize, k: usize, p: usize, beta: f64, seed: u32, max_iters: usize) -> std::result::Result<String, JsError> {
    to_json(convergence_runs(kind, n, k, p, beta, seed, max_iters))
}

#[wasm_bindgen]
pub fn beta_sweep(
    kind: &str,
    n: usize,
    k: usize,
    alg: &str,
    betas: Vec<f64>,
    seed: u32,
    max_iters: usize,
) -> std::result::Result<String, JsError> {
    to_json(sweep_points(kind, n, k, alg, &betas, seed, max_iters))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn factor_heatmap(
    kind: &str,
    n: usize,
    k: usize,
    p: usize,
    alg: &str,
    beta: f64,
    seed: u32,
    max_iters: usize,
) -> std::result::Result<String, JsError> {
    to_json(heatmap_data(kind, n, k, p, alg, beta, seed, max_iters))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_traces_line_up() {
        let runs = convergence_runs("BION", 20, 4, 4, 1.0, 3, 50).unwrap();
        assert_eq!(runs.len(), 3);
        for r in &runs {
            assert_eq!(r.rse.len(), r.iters + 1);
            assert_eq!(r.infeas.len(), r.objective.len());
        }
    }

    #[test]
    fn sweep_covers_every_rank_and_beta() {
        let pts = sweep_points("UNION", 20, 4, "pg", &[1.0, 100.0], 1, 20).unwrap();
        assert_eq!(pts.len(), 10);
        assert!(pts.iter().all(|p| p.rse.is_finite() && p.infeas >= 0.0));
        assert!(sweep_points("UNION", 20, 4, "pg", &[], 1, 20).is_err());
    }

    #[test]
    fn heatmap_shapes() {
        let h = heatmap_data("BION", 20, 4, 3, "mirzal", 10.0, 2, 20).unwrap();
        assert_eq!(h.g.len(), 20 * 3);
        assert_eq!(h.g_true.len(), 20 * 4);
        assert!(heatmap_data("BION", 20, 4, 3, "svd", 10.0, 2, 20).is_err());
    }
}
