use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hash-power shares are integers in parts per million and must sum to
/// exactly this value.
pub const PPM: u32 = 1_000_000;

/// Above this the simulator would spend most of its time hashing.
pub const MAX_SIM_DIFFICULTY: u8 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scenario {
    HonestConvergence,
    DoubleSpendAttack,
    PartitionHeal,
}

impl std::str::FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "HONEST_CONVERGENCE" | "HONEST" => Ok(Self::HonestConvergence),
            "DOUBLE_SPEND_ATTACK" | "DOUBLE_SPEND" | "ATTACK" => Ok(Self::DoubleSpendAttack),
            "PARTITION_HEAL" | "PARTITION" => Ok(Self::PartitionHeal),
            _ => Err(ConfigError::UnknownScenario(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Latency {
    pub min_ms: u64,
    pub max_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryParams {
    /// Adversary (node 0) hash share in ppm; honest nodes split the rest.
    pub share_ppm: u32,
    /// Give up once the public chain leads the private one by more than this.
    pub secret_mining_depth: u64,
    /// Blocks on top of (and including) the one holding the payment before
    /// the adversary may publish.
    pub confirmation_depth: u64,
}

impl Default for AdversaryParams {
    fn default() -> Self {
        Self {
            share_ppm: 300_000,
            secret_mining_depth: 6,
            confirmation_depth: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionParams {
    /// Group id per node; messages between different groups are dropped
    /// while the partition is active.
    pub groups: Vec<u8>,
    pub start_ms: u64,
    pub heal_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub node_count: usize,
    pub latency: Latency,
    /// Per-node share in ppm. Empty means an equal split. Ignored by the
    /// double-spend scenario, which derives shares from `adversary`.
    #[serde(default)]
    pub hash_power_ppm: Vec<u32>,
    pub difficulty_bits: u8,
    /// Virtual milliseconds per unit of work; the network-wide expected
    /// block interval is `2^difficulty_bits × ms_per_work_unit`.
    #[serde(default = "default_ms_per_work_unit")]
    pub ms_per_work_unit: u64,
    pub max_sim_time_ms: u64,
    pub scenario: Scenario,
    #[serde(default)]
    pub adversary: AdversaryParams,
    /// Mean gap between client transactions; 0 disables the workload.
    #[serde(default)]
    pub tx_interval_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionParams>,
    /// Keep every transcript line in the report.
    #[serde(default)]
    pub keep_transcript: bool,
}

fn default_ms_per_work_unit() -> u64 {
    40
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("node_count must be at least 2")]
    TooFewNodes,
    #[error("hash_power_ppm has {got} entries for {expected} nodes")]
    ShareCount { expected: usize, got: usize },
    #[error("hash shares sum to {0} ppm, expected 1000000")]
    ShareSum(u64),
    #[error("latency min {min} > max {max}")]
    Latency { min: u64, max: u64 },
    #[error("difficulty_bits {0} exceeds the simulator limit of 20")]
    Difficulty(u8),
    #[error("ms_per_work_unit must be positive")]
    WorkUnit,
    #[error("adversary share {0} ppm exceeds 1000000")]
    AdversaryShare(u32),
    #[error("confirmation_depth must be at least 1")]
    ConfirmationDepth,
    #[error("partition: {0}")]
    Partition(String),
    #[error("attack trials need the DOUBLE_SPEND_ATTACK scenario and at least one trial")]
    Trials,
}

impl SimConfig {
    /// Five nodes, 10–100 ms latency, about 10 s between blocks.
    pub fn honest(seed: u64) -> Self {
        Self {
            seed,
            node_count: 5,
            latency: Latency {
                min_ms: 10,
                max_ms: 100,
            },
            hash_power_ppm: vec![],
            difficulty_bits: 8,
            ms_per_work_unit: default_ms_per_work_unit(),
            max_sim_time_ms: 300_000,
            scenario: Scenario::HonestConvergence,
            adversary: AdversaryParams::default(),
            tx_interval_ms: 3_000,
            partition: None,
            keep_transcript: false,
        }
    }

    pub fn double_spend(seed: u64, share_ppm: u32, confirmation_depth: u64) -> Self {
        Self {
            difficulty_bits: 6,
            max_sim_time_ms: 3_600_000,
            scenario: Scenario::DoubleSpendAttack,
            adversary: AdversaryParams {
                share_ppm,
                confirmation_depth,
                ..AdversaryParams::default()
            },
            tx_interval_ms: 0,
            ..Self::honest(seed)
        }
    }

    pub fn partition_heal(seed: u64) -> Self {
        Self {
            scenario: Scenario::PartitionHeal,
            max_sim_time_ms: 400_000,
            ..Self::honest(seed)
        }
    }

    pub fn for_scenario(scenario: Scenario, seed: u64) -> Self {
        match scenario {
            Scenario::HonestConvergence => Self::honest(seed),
            Scenario::DoubleSpendAttack => {
                Self::double_spend(seed, AdversaryParams::default().share_ppm, 2)
            }
            Scenario::PartitionHeal => Self::partition_heal(seed),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Shares actually used by the run, in ppm.
    pub fn effective_shares(&self) -> Vec<u32> {
        match self.scenario {
            Scenario::DoubleSpendAttack => {
                let honest = self.node_count - 1;
                let mut v = vec![self.adversary.share_ppm];
                v.extend(split_evenly(
                    PPM - self.adversary.share_ppm.min(PPM),
                    honest,
                ));
                v
            }
            _ if self.hash_power_ppm.is_empty() => split_evenly(PPM, self.node_count),
            _ => self.hash_power_ppm.clone(),
        }
    }

    /// Partition used by PARTITION_HEAL: the configured one, or the first
    /// half of the nodes cut off from one quarter to one half of the run.
    pub fn effective_partition(&self) -> Option<PartitionParams> {
        if self.scenario != Scenario::PartitionHeal {
            return None;
        }
        Some(self.partition.clone().unwrap_or_else(|| {
            PartitionParams {
                groups: (0..self.node_count)
                    .map(|i| u8::from(i >= self.node_count / 2))
                    .collect(),
                start_ms: self.max_sim_time_ms / 4,
                heal_ms: self.max_sim_time_ms / 2,
            }
        }))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_count < 2 {
            return Err(ConfigError::TooFewNodes);
        }
        if self.latency.min_ms > self.latency.max_ms {
            return Err(ConfigError::Latency {
                min: self.latency.min_ms,
                max: self.latency.max_ms,
            });
        }
        if self.difficulty_bits > MAX_SIM_DIFFICULTY {
            return Err(ConfigError::Difficulty(self.difficulty_bits));
        }
        if self.ms_per_work_unit == 0 {
            return Err(ConfigError::WorkUnit);
        }
        if self.adversary.share_ppm > PPM {
            return Err(ConfigError::AdversaryShare(self.adversary.share_ppm));
        }
        if self.adversary.confirmation_depth == 0 {
            return Err(ConfigError::ConfirmationDepth);
        }
        let shares = self.effective_shares();
        if shares.len() != self.node_count {
            return Err(ConfigError::ShareCount {
                expected: self.node_count,
                got: shares.len(),
            });
        }
        let sum: u64 = shares.iter().map(|&s| s as u64).sum();
        if sum != PPM as u64 {
            return Err(ConfigError::ShareSum(sum));
        }
        if let Some(p) = self.effective_partition() {
            if p.groups.len() != self.node_count {
                return Err(ConfigError::Partition(format!(
                    "{} group ids for {} nodes",
                    p.groups.len(),
                    self.node_count
                )));
            }
            if p.start_ms > p.heal_ms {
                return Err(ConfigError::Partition("start after heal".into()));
            }
        }
        Ok(())
    }
}

/// Splits `total` into `parts` integers differing by at most one, larger
/// ones first.
pub fn split_evenly(total: u32, parts: usize) -> Vec<u32> {
    if parts == 0 {
        return vec![];
    }
    let base = total / parts as u32;
    let extra = (total % parts as u32) as usize;
    (0..parts).map(|i| base + u32::from(i < extra)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_exact() {
        assert_eq!(split_evenly(PPM, 3), vec![333_334, 333_333, 333_333]);
        assert_eq!(split_evenly(PPM, 4).iter().sum::<u32>(), PPM);
    }

    #[test]
    fn attack_shares_sum_to_one() {
        for s in [0, 100_000, 500_000, 900_000, PPM] {
            let c = SimConfig::double_spend(1, s, 2);
            assert_eq!(c.effective_shares()[0], s);
            assert_eq!(c.effective_shares().iter().sum::<u32>(), PPM);
            c.validate().unwrap();
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = SimConfig::honest(1);
        c.hash_power_ppm = vec![500_000, 500_000];
        assert!(matches!(c.validate(), Err(ConfigError::ShareCount { .. })));
        c.hash_power_ppm = vec![200_000; 4].into_iter().chain([199_999]).collect();
        assert_eq!(c.validate(), Err(ConfigError::ShareSum(999_999)));
        let mut c = SimConfig::honest(1);
        c.node_count = 1;
        assert_eq!(c.validate(), Err(ConfigError::TooFewNodes));
    }

    #[test]
    fn json_round_trip() {
        let c = SimConfig::partition_heal(9);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"PARTITION_HEAL\""));
        assert_eq!(SimConfig::from_json(&s).unwrap(), c);
        assert!(SimConfig::from_json(r#"{"seed":1}"#).is_err());
    }
}
