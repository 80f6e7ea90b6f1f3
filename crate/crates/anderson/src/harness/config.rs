//! Experiment configuration: a hand-editable TOML recipe with nested
//! sections, strict validation, and a content hash used to key run records.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::harness::HarnessError;
use crate::operator::{BoundaryCondition, PotentialSpec};
use crate::stats::dos::Ensemble;

/// Experiment kind selector; each value maps to one CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Dos,
    Wegner,
    Minami,
    Poisson,
    Decompose,
    Regularity,
    Decay,
    Tail,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Dos => "dos",
            ExperimentKind::Wegner => "wegner",
            ExperimentKind::Minami => "minami",
            ExperimentKind::Poisson => "poisson",
            ExperimentKind::Decompose => "decompose",
            ExperimentKind::Regularity => "regularity",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Tail => "tail",
        }
    }
}

/// Model geometry and disorder parameters (`[model]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub side: i64,
    pub lambda: f64,
    pub potential: PotentialSpec,
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
}

fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Periodic
}

/// Rescaled-window parameters (`[window]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    /// Half-width a of the scaled energy window [−a, a].
    pub a: f64,
    /// Energy side of the counting rectangle A (scaled units).
    pub rect: (f64, f64),
    /// Spatial uniformity bins.
    pub m_bins: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            a: 8.0,
            rect: (-2.0, 2.0),
            m_bins: 10,
        }
    }
}

/// Window-scan parameters for the moment checks (`[scan]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Window width in unscaled energy; default 1/|Λ|.
    pub width: Option<f64>,
    pub count: usize,
    /// Pass/fail ratio bound; default derives from the potential density.
    pub bound: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            width: None,
            count: 20,
            bound: None,
        }
    }
}

/// Two-scale decomposition parameters (`[schedule]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub l_k: i64,
    pub l_km1: i64,
    /// Matching rate γ'; ε = e^{−γ'·L_{k−1}/2}.
    pub gamma_prime: f64,
}

/// Density-of-states estimator parameters (`[dos]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DosConfig {
    /// Histogram half-width in unscaled energy; default 1/|Λ|.
    pub halfwidth: Option<f64>,
    /// Cauchy broadening τ in scaled units.
    pub tau: f64,
}

impl Default for DosConfig {
    fn default() -> Self {
        DosConfig {
            halfwidth: None,
            tau: 4.0,
        }
    }
}

/// Green-function regularity parameters (`[regularity]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityConfig {
    pub gamma: f64,
    pub energies: Vec<f64>,
    #[serde(default)]
    pub p_exponent: Option<f64>,
}

/// Tail-bound parameters (`[tail]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailConfig {
    /// Wegner constant C_W used on the right-hand side.
    pub c_w: f64,
    /// Distance of E0 to the boundary of the energy region (unscaled).
    pub r: f64,
    pub sigma: f64,
    pub tau: f64,
    pub c_r: f64,
    pub big_r: f64,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig {
            c_w: 1.0,
            r: 1.0,
            sigma: 0.0,
            tau: 1.0,
            c_r: 2.0,
            big_r: 2.0,
        }
    }
}

/// One experiment recipe. TOML round trips are stable: parse ∘ emit is the
/// identity on parsed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelConfig,
    #[serde(default)]
    pub e0: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Worker threads; `ANDERSON_WORKERS` overrides, default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Record output path (JSON lines); stdout summary only when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub dos: DosConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<RegularityConfig>,
    #[serde(default)]
    pub tail: TailConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Volume |Λ| = side^dim.
    pub fn volume(&self) -> f64 {
        (self.model.side as f64).powi(self.model.dim as i32)
    }

    pub fn ensemble(&self) -> Ensemble {
        Ensemble {
            potential: self.model.potential,
            dim: self.model.dim,
            side: self.model.side,
            lambda: self.model.lambda,
            bc: self.model.bc,
            seed: self.seed,
            n_samples: self.n_samples,
        }
    }

    /// Validate every field; errors carry the offending field path.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |path: &str, msg: String| Err(HarnessError::Config(format!("{path}: {msg}")));
        if self.model.dim == 0 || self.model.dim > 3 {
            return err("model.dim", format!("must be 1..=3, got {}", self.model.dim));
        }
        if self.model.side < 2 {
            return err("model.side", format!("must be >= 2, got {}", self.model.side));
        }
        if !(self.model.lambda >= 0.0 && self.model.lambda.is_finite()) {
            return err(
                "model.lambda",
                format!("must be finite and >= 0, got {}", self.model.lambda),
            );
        }
        if let Err(e) = self.model.potential.validate() {
            return err("model.potential", e.to_string());
        }
        if self.n_samples == 0 {
            return err("n_samples", "must be >= 1".into());
        }
        if !(self.window.a > 0.0) {
            return err("window.a", format!("must be > 0, got {}", self.window.a));
        }
        if self.window.rect.1 <= self.window.rect.0 {
            return err("window.rect", format!("empty interval {:?}", self.window.rect));
        }
        if self.window.m_bins < 2 {
            return err("window.m_bins", "must be >= 2".into());
        }
        if self.scan.count == 0 {
            return err("scan.count", "must be >= 1".into());
        }
        if let Some(w) = self.scan.width {
            if !(w > 0.0) {
                return err("scan.width", format!("must be > 0, got {w}"));
            }
        }
        if let Some(h) = self.dos.halfwidth {
            if !(h > 0.0) {
                return err("dos.halfwidth", format!("must be > 0, got {h}"));
            }
        }
        if !(self.dos.tau > 0.0) {
            return err("dos.tau", format!("must be > 0, got {}", self.dos.tau));
        }
        if let Some(s) = &self.schedule {
            if s.l_k <= 2 * s.l_km1 {
                return err(
                    "schedule.l_k",
                    format!("must exceed 2·l_km1 = {}, got {}", 2 * s.l_km1, s.l_k),
                );
            }
            if s.l_k >= self.model.side {
                return err(
                    "schedule.l_k",
                    format!("must be below model.side = {}, got {}", self.model.side, s.l_k),
                );
            }
            if !(s.gamma_prime > 0.0) {
                return err("schedule.gamma_prime", format!("must be > 0, got {}", s.gamma_prime));
            }
        }
        if let Some(r) = &self.regularity {
            if !(r.gamma > 0.0) {
                return err("regularity.gamma", format!("must be > 0, got {}", r.gamma));
            }
            if r.energies.is_empty() {
                return err("regularity.energies", "must list at least one energy".into());
            }
            if self.model.side % 2 == 0 {
                return err("model.side", "regularity runs need an odd side".into());
            }
        }
        match self.kind {
            ExperimentKind::Decompose | ExperimentKind::Decay => {
                if self.schedule.is_none() {
                    return err("schedule", "required for decompose/decay runs".into());
                }
            }
            ExperimentKind::Regularity => {
                if self.regularity.is_none() {
                    return err("regularity", "required for regularity runs".into());
                }
            }
            ExperimentKind::Tail => {
                if !(self.tail.r * self.volume() >= self.tail.big_r) {
                    return err(
                        "tail.r",
                        format!(
                            "r·|Λ| = {} must be >= big_r = {}",
                            self.tail.r * self.volume(),
                            self.tail.big_r
                        ),
                    );
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Content hash of the scientifically relevant fields. Worker count and
    /// output location never change results, so they are excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = None;
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    /// Effective worker count: `ANDERSON_WORKERS` beats the config field.
    pub fn effective_workers(&self) -> usize {
        std::env::var("ANDERSON_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
            .or(self.workers)
            .unwrap_or(1)
            .max(1)
    }
}
