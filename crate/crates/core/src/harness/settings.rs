use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::datagen::InstanceKind;
use crate::error::{Error, Result};
use crate::solver::{DingConfig, MirzalConfig, PgConfig};

/// Resolved configuration for all three solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub ding: DingConfig,
    pub mirzal: MirzalConfig,
    pub pg_union: PgConfig,
    pub pg_bion: PgConfig,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            ding: DingConfig::default(),
            mirzal: MirzalConfig::default(),
            pg_union: PgConfig::union(),
            pg_bion: PgConfig::bion(),
        }
    }
}

impl SolverSettings {
    pub fn pg(&self, kind: InstanceKind) -> &PgConfig {
        match kind {
            InstanceKind::Union => &self.pg_union,
            InstanceKind::Bion => &self.pg_bion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ding.validate()?;
        self.mirzal.validate()?;
        self.pg_union.validate()?;
        self.pg_bion.validate()
    }

    pub fn set_time_limit(&mut self, seconds: f64) {
        self.ding.time_limit = seconds;
        self.mirzal.time_limit = seconds;
        self.pg_union.time_limit = seconds;
        self.pg_bion.time_limit = seconds;
    }

    /// Caps the outer iteration count of every solver.
    pub fn set_max_iters(&mut self, iters: usize) {
        self.ding.max_iters = iters;
        self.mirzal.max_outer_iters = iters;
        self.pg_union.max_outer_iters = iters;
        self.pg_bion.max_outer_iters = iters;
    }

    /// Canonical `key=value` listing of every field.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let d = &self.ding;
        let _ = writeln!(s, "ding.delta={:e}", d.delta);
        let _ = writeln!(s, "ding.max_iters={}", d.max_iters);
        let _ = writeln!(s, "ding.time_limit={:e}", d.time_limit);
        let _ = writeln!(s, "ding.rse_stall_tol={:e}", d.rse_stall_tol);
        let m = &self.mirzal;
        let _ = writeln!(s, "mirzal.delta0={:e}", m.delta0);
        let _ = writeln!(s, "mirzal.step={:e}", m.step);
        let _ = writeln!(s, "mirzal.nu={:e}", m.nu);
        let _ = writeln!(s, "mirzal.max_outer_iters={}", m.max_outer_iters);
        let _ = writeln!(s, "mirzal.time_limit={:e}", m.time_limit);
        let _ = writeln!(s, "mirzal.max_inner_tries={}", m.max_inner_tries);
        let _ = writeln!(s, "mirzal.stall_tol={:e}", m.stall_tol);
        for (name, p) in [("pg_union", &self.pg_union), ("pg_bion", &self.pg_bion)] {
            let _ = writeln!(s, "{name}.sigma={:e}", p.sigma);
            let _ = writeln!(s, "{name}.gamma={:e}", p.gamma);
            let _ = writeln!(s, "{name}.tau={:e}", p.tau);
            let _ = writeln!(s, "{name}.epsilon={:e}", p.epsilon);
            let _ = writeln!(s, "{name}.max_outer_iters={}", p.max_outer_iters);
            let _ = writeln!(s, "{name}.max_inner_iters={}", p.max_inner_iters);
            let _ = writeln!(s, "{name}.max_step_trials={}", p.max_step_trials);
            let _ = writeln!(s, "{name}.time_limit={:e}", p.time_limit);
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DingOverrides {
    pub delta: Option<f64>,
    pub max_iters: Option<usize>,
    pub time_limit: Option<f64>,
    pub rse_stall_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirzalOverrides {
    pub delta0: Option<f64>,
    pub step: Option<f64>,
    pub nu: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub time_limit: Option<f64>,
    pub max_inner_tries: Option<usize>,
    pub stall_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgOverrides {
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub max_inner_iters: Option<usize>,
    pub max_step_trials: Option<usize>,
    pub time_limit: Option<f64>,
}

impl PgOverrides {
    fn apply(&self, p: &mut PgConfig) {
        set(&mut p.sigma, self.sigma);
        set(&mut p.gamma, self.gamma);
        set(&mut p.tau, self.tau);
        set(&mut p.epsilon, self.epsilon);
        set(&mut p.max_outer_iters, self.max_outer_iters);
        set(&mut p.max_inner_iters, self.max_inner_iters);
        set(&mut p.max_step_trials, self.max_step_trials);
        set(&mut p.time_limit, self.time_limit);
    }
}

/// Contents of a `--config` file. Every key is optional; `[pg]` applies to
/// both data presets and `[pg_union]` / `[pg_bion]` to one of them.
///
/// ```toml
/// [ding]
/// max_iters = 2000
///
/// [pg_bion]
/// gamma = 0.5
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default)]
    pub ding: DingOverrides,
    #[serde(default)]
    pub mirzal: MirzalOverrides,
    #[serde(default)]
    pub pg: PgOverrides,
    #[serde(default)]
    pub pg_union: PgOverrides,
    #[serde(default)]
    pub pg_bion: PgOverrides,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ConfigOverrides {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&self, s: &mut SolverSettings) {
        let d = &self.ding;
        set(&mut s.ding.delta, d.delta);
        set(&mut s.ding.max_iters, d.max_iters);
        set(&mut s.ding.time_limit, d.time_limit);
        set(&mut s.ding.rse_stall_tol, d.rse_stall_tol);
        let m = &self.mirzal;
        set(&mut s.mirzal.delta0, m.delta0);
        set(&mut s.mirzal.step, m.step);
        set(&mut s.mirzal.nu, m.nu);
        set(&mut s.mirzal.max_outer_iters, m.max_outer_iters);
        set(&mut s.mirzal.time_limit, m.time_limit);
        set(&mut s.mirzal.max_inner_tries, m.max_inner_tries);
        set(&mut s.mirzal.stall_tol, m.stall_tol);
        self.pg.apply(&mut s.pg_union);
        self.pg.apply(&mut s.pg_bion);
        self.pg_union.apply(&mut s.pg_union);
        self.pg_bion.apply(&mut s.pg_bion);
    }
}
