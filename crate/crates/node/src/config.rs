use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fundchain_core::fx::RateSourceConfig;
use fundchain_core::{
    Address, Amount, Difficulty, GasSchedule, GenesisConfig, KeyPair, PublicKey, Wei,
};

/// Seed of the well-known development key: funded at genesis and allowed
/// to mint. Never use it outside local testing.
pub const DEV_KEY_SEED: &str = "fundchain-dev";

pub const DEFAULT_MAX_BLOB_BYTES: usize = 8 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub enabled: bool,
    /// Block production tick.
    pub interval_ms: u64,
    /// Produce blocks even when the mempool is empty.
    pub empty_blocks: bool,
    pub max_block_txs: usize,
    /// Fee recipient for blocks this node produces.
    pub proposer: Address,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            interval_ms: 1_000,
            empty_blocks: false,
            max_block_txs: 500,
            proposer: Address::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub data_dir: PathBuf,
    pub listen: SocketAddr,
    pub difficulty_bits: u8,
    pub genesis_timestamp: u64,
    pub allocations: BTreeMap<Address, Amount<Wei>>,
    /// Key allowed to sign `Mint` transactions.
    pub treasury: Option<PublicKey>,
    pub gas: GasSchedule,
    /// Rates served by `/rates`. On-chain minimum checks always use the
    /// fixture rates pinned in the genesis config.
    pub rates: RateSourceConfig,
    pub mining: MiningConfig,
    /// Base URLs of peer nodes, e.g. `http://127.0.0.1:8546`.
    pub peers: Vec<String>,
    pub max_blob_bytes: usize,
    /// Blocks buffered per event-stream subscriber before it is cut off.
    pub event_buffer: usize,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("fundchain-data"),
            listen: "127.0.0.1:8545".parse().expect("literal"),
            difficulty_bits: 8,
            genesis_timestamp: 1_700_000_000,
            allocations: BTreeMap::new(),
            treasury: None,
            gas: GasSchedule::default(),
            rates: RateSourceConfig::Fixture,
            mining: MiningConfig::default(),
            peers: vec![],
            max_blob_bytes: DEFAULT_MAX_BLOB_BYTES,
            event_buffer: 1024,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl NodeConfig {
    /// Development defaults: the dev key holds 1000 coins and is the treasury.
    pub fn dev(data_dir: impl Into<PathBuf>) -> Self {
        let dev = KeyPair::from_seed(DEV_KEY_SEED);
        let mut allocations = BTreeMap::new();
        allocations.insert(dev.address(), Amount::new(1_000 * 10u128.pow(18)));
        Self {
            data_dir: data_dir.into(),
            allocations,
            treasury: Some(dev.public_key()),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        Difficulty::new(self.difficulty_bits).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !self.gas.is_valid() {
            return Err(ConfigError::Invalid("gas costs must be positive".into()));
        }
        if self.max_blob_bytes == 0 || self.event_buffer == 0 {
            return Err(ConfigError::Invalid(
                "max_blob_bytes and event_buffer must be positive".into(),
            ));
        }
        if self.genesis().initial_supply().is_none() {
            return Err(ConfigError::Invalid("allocations overflow".into()));
        }
        Ok(())
    }

    pub fn genesis(&self) -> GenesisConfig {
        GenesisConfig {
            difficulty: Difficulty::new(self.difficulty_bits).expect("validated"),
            timestamp: self.genesis_timestamp,
            allocations: self.allocations.clone(),
            treasury: self.treasury,
            gas: self.gas,
            rates: fundchain_core::RateTable::fixture(),
        }
    }
}
