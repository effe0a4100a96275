use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Scenario, SimConfig};
use crate::sim::run;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub share_ppm: u32,
    pub trials: u64,
    pub successes: u64,
    pub fraction: f64,
}

/// Runs `trials` double-spend attempts with seeds `seed, seed+1, …` and
/// reports how many reversed the payment. Trials run in parallel.
pub fn attack_trials(cfg: &SimConfig, trials: u64) -> Result<AttackSummary, ConfigError> {
    if cfg.scenario != Scenario::DoubleSpendAttack || trials == 0 {
        return Err(ConfigError::Trials);
    }
    cfg.validate()?;
    let successes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let c = SimConfig {
                seed: cfg.seed.wrapping_add(i),
                keep_transcript: false,
                ..cfg.clone()
            };
            let report = run(c)?;
            Ok(u64::from(report.attack_succeeded == Some(true)))
        })
        .sum::<Result<u64, ConfigError>>()?;
    Ok(AttackSummary {
        share_ppm: cfg.adversary.share_ppm,
        trials,
        successes,
        fraction: successes as f64 / trials as f64,
    })
}
