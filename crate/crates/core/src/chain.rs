//! Chain parameters, full validation, fork choice and replay.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{Amount, Wei};
use crate::block::{tx_root, validate_block_structure, Block, BlockError, BlockHeader};
use crate::codec::Decode;
use crate::contract::{ExecutionOutcome, GasSchedule, TrailEvent};
use crate::crypto::{derive_address, Address, Digest, PublicKey};
use crate::exec::{apply_tx, BlockExecution, TxContext, TxRejection};
use crate::fx::RateTable;
use crate::pow::{meets_target, mine, Difficulty};
use crate::state::{AccountState, WorldState};
use crate::tx::SignedTransaction;

/// Everything that determines a chain: difficulty, initial allocations,
/// treasury key, gas schedule, and the rate table used for on-chain
/// minimum-fund checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub difficulty: Difficulty,
    /// Unix seconds of the genesis block.
    #[serde(default)]
    pub timestamp: u64,
    #[serde(default)]
    pub allocations: BTreeMap<Address, Amount<Wei>>,
    /// Key allowed to sign `Mint` transactions.
    #[serde(default)]
    pub treasury: Option<PublicKey>,
    #[serde(default)]
    pub gas: GasSchedule,
    #[serde(default = "RateTable::fixture")]
    pub rates: RateTable,
}

impl GenesisConfig {
    pub fn new(difficulty: Difficulty) -> Self {
        Self {
            difficulty,
            timestamp: 0,
            allocations: BTreeMap::new(),
            treasury: None,
            gas: GasSchedule::default(),
            rates: RateTable::fixture(),
        }
    }

    pub fn with_allocation(mut self, address: Address, amount: Amount<Wei>) -> Self {
        self.allocations.insert(address, amount);
        self
    }

    pub fn with_treasury(mut self, key: PublicKey) -> Self {
        self.treasury = Some(key);
        self
    }

    pub fn treasury_address(&self) -> Option<Address> {
        self.treasury.as_ref().and_then(|k| derive_address(k).ok())
    }

    /// Total initial supply; `None` on overflow.
    pub fn initial_supply(&self) -> Option<Amount<Wei>> {
        self.allocations
            .values()
            .try_fold(Amount::ZERO, |acc, a| acc.checked_add(*a).ok())
    }

    pub fn genesis_state(&self) -> WorldState {
        let mut state = WorldState::default();
        for (addr, amount) in &self.allocations {
            state.accounts.insert(
                *addr,
                AccountState {
                    balance: *amount,
                    nonce: 0,
                },
            );
        }
        state.supply = self
            .initial_supply()
            .expect("genesis allocations overflow u128");
        state
    }

    fn genesis_template(&self) -> Block {
        Block {
            header: BlockHeader {
                parent_hash: Digest::ZERO,
                height: 0,
                difficulty_bits: self.difficulty.bits(),
                pow_nonce: 0,
                timestamp: self.timestamp,
                tx_root: tx_root(&[]),
                state_digest: self.genesis_state().digest(),
                proposer: Address::ZERO,
            },
            transactions: vec![],
        }
    }

    /// The genesis block, mined from nonce 0.
    pub fn genesis_block(&self) -> Block {
        mine(&self.genesis_template(), self.difficulty, 0).expect("genesis nonce space")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("block at height {height} rejected: {reason}")]
pub struct ChainError {
    pub height: u64,
    pub reason: BlockError,
}

/// Validates one block against its parent: structure, difficulty, work,
/// execution and the resulting state digest.
pub fn validate_block(
    block: &Block,
    parent: Option<(&BlockHeader, &WorldState)>,
    genesis: &GenesisConfig,
) -> Result<BlockExecution, BlockError> {
    validate_block_structure(block, parent.map(|(h, _)| h))?;
    if block.header.difficulty_bits != genesis.difficulty.bits() {
        return Err(BlockError::BadDifficulty);
    }
    if !meets_target(&block.hash(), genesis.difficulty) {
        return Err(BlockError::PowFail);
    }
    match parent {
        None => {
            let expected = genesis.genesis_template().header;
            let h = &block.header;
            if !block.transactions.is_empty()
                || h.timestamp != expected.timestamp
                || h.proposer != expected.proposer
                || h.state_digest != expected.state_digest
            {
                return Err(BlockError::BadGenesis);
            }
            Ok(BlockExecution {
                state: genesis.genesis_state(),
                outcomes: vec![],
            })
        }
        Some((_, parent_state)) => {
            let exec = crate::exec::execute_block(parent_state, genesis, block)
                .map_err(|_| BlockError::InvalidTx)?;
            if exec.state.digest() != block.header.state_digest {
                return Err(BlockError::BadStateDigest);
            }
            Ok(exec)
        }
    }
}

/// Headers from genesis to head with their total work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainView {
    pub headers: Vec<BlockHeader>,
    /// Σ 2^difficulty_bits.
    pub cumulative_work: u128,
}

impl ChainView {
    pub fn from_headers(headers: Vec<BlockHeader>) -> Self {
        let cumulative_work = headers
            .iter()
            .map(|h| 1u128 << h.difficulty_bits.min(64))
            .sum();
        Self {
            headers,
            cumulative_work,
        }
    }

    pub fn from_blocks(blocks: &[Block]) -> Self {
        Self::from_headers(blocks.iter().map(|b| b.header.clone()).collect())
    }

    pub fn head(&self) -> Option<&BlockHeader> {
        self.headers.last()
    }

    pub fn head_hash(&self) -> Digest {
        self.head().map(BlockHeader::hash).unwrap_or_default()
    }

    pub fn height(&self) -> u64 {
        self.head().map(|h| h.height).unwrap_or_default()
    }
}

/// Outcome of validating a whole chain.
#[derive(Debug, Clone)]
pub struct ValidatedChain {
    pub view: ChainView,
    pub state: WorldState,
    pub outcomes: Vec<Vec<ExecutionOutcome>>,
}

impl ValidatedChain {
    pub fn events(&self) -> impl Iterator<Item = &TrailEvent> {
        self.outcomes.iter().flatten().flat_map(|o| o.events.iter())
    }
}

/// Validates `blocks` from genesis, reporting the first failing height.
pub fn validate_chain(
    blocks: &[Block],
    genesis: &GenesisConfig,
) -> Result<ValidatedChain, ChainError> {
    if blocks.is_empty() {
        return Err(ChainError {
            height: 0,
            reason: BlockError::BadGenesis,
        });
    }
    let mut state = WorldState::default();
    let mut outcomes = Vec::with_capacity(blocks.len());
    for (i, block) in blocks.iter().enumerate() {
        let parent = (i > 0).then(|| (&blocks[i - 1].header, &state));
        let exec = validate_block(block, parent, genesis).map_err(|reason| ChainError {
            height: i as u64,
            reason,
        })?;
        state = exec.state;
        outcomes.push(exec.outcomes);
    }
    Ok(ValidatedChain {
        view: ChainView::from_blocks(blocks),
        state,
        outcomes,
    })
}

/// Decodes and validates canonical block encodings; a block that fails to
/// decode is rejected as `MALFORMED` at its position.
pub fn validate_encoded_chain(
    encoded: &[Vec<u8>],
    genesis: &GenesisConfig,
) -> Result<ValidatedChain, ChainError> {
    let blocks = encoded
        .iter()
        .enumerate()
        .map(|(i, bytes)| {
            Block::from_canonical_bytes(bytes).map_err(|_| ChainError {
                height: i as u64,
                reason: BlockError::Malformed,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    validate_chain(&blocks, genesis)
}

/// Orders chains by work, then prefers the lexicographically smaller head hash.
pub fn compare_chains(a: &ChainView, b: &ChainView) -> Ordering {
    a.cumulative_work
        .cmp(&b.cumulative_work)
        .then_with(|| b.head_hash().cmp(&a.head_hash()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ForkChoiceError {
    #[error("no candidate chains")]
    Empty,
}

/// Picks the chain with the most cumulative work; ties go to the smaller head hash.
pub fn fork_choice<'a, I>(candidates: I) -> Result<&'a ChainView, ForkChoiceError>
where
    I: IntoIterator<Item = &'a ChainView>,
{
    candidates
        .into_iter()
        .reduce(|best, c| match compare_chains(c, best) {
            Ordering::Greater => c,
            _ => best,
        })
        .ok_or(ForkChoiceError::Empty)
}

/// Audit trail of one contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trail {
    pub contract: Address,
    pub found: bool,
    pub events: Vec<TrailEvent>,
}

impl Trail {
    pub fn from_events<'a>(
        contract: Address,
        state: &WorldState,
        events: impl Iterator<Item = &'a TrailEvent>,
    ) -> Self {
        if state.contract(&contract).is_none() {
            return Self {
                contract,
                found: false,
                events: vec![],
            };
        }
        Self {
            contract,
            found: true,
            events: events
                .filter(|e| e.contract == Some(contract))
                .cloned()
                .collect(),
        }
    }
}

/// Replays a chain and collects every event touching `contract`, including
/// rejected attempts, in (height, index) order.
pub fn audit_trail(
    blocks: &[Block],
    genesis: &GenesisConfig,
    contract: &Address,
) -> Result<Trail, ChainError> {
    let chain = validate_chain(blocks, genesis)?;
    Ok(Trail::from_events(*contract, &chain.state, chain.events()))
}

/// A block ready for mining, with the state it produces.
#[derive(Debug, Clone)]
pub struct BlockTemplate {
    /// Unmined: `pow_nonce` is 0.
    pub block: Block,
    pub state: WorldState,
    pub outcomes: Vec<ExecutionOutcome>,
    /// Candidates left out, with the reason.
    pub deferred: Vec<(SignedTransaction, TxRejection)>,
}

/// Builds the next block from candidates in the given order. Candidates
/// failing the envelope are deferred; signatures must already be verified.
pub fn build_block<I>(
    parent: &BlockHeader,
    parent_state: &WorldState,
    genesis: &GenesisConfig,
    candidates: I,
    proposer: Address,
    timestamp: u64,
    max_txs: usize,
) -> BlockTemplate
where
    I: IntoIterator<Item = SignedTransaction>,
{
    let height = parent.height + 1;
    let mut state = parent_state.clone();
    let mut included = Vec::new();
    let mut outcomes = Vec::new();
    let mut deferred = Vec::new();
    for tx in candidates {
        if included.len() >= max_txs {
            break;
        }
        let ctx = TxContext {
            height,
            index: included.len() as u32,
            proposer,
        };
        match apply_tx(&mut state, genesis, &tx, ctx) {
            Ok(outcome) => {
                outcomes.push(outcome);
                included.push(tx);
            }
            Err(reason) => deferred.push((tx, reason)),
        }
    }
    let header = BlockHeader {
        parent_hash: parent.hash(),
        height,
        difficulty_bits: genesis.difficulty.bits(),
        pow_nonce: 0,
        timestamp: timestamp.max(parent.timestamp),
        tx_root: tx_root(&included),
        state_digest: state.digest(),
        proposer,
    };
    BlockTemplate {
        block: Block {
            header,
            transactions: included,
        },
        state,
        outcomes,
        deferred,
    }
}

/// A validated linear chain with its current state, extended one block at a time.
#[derive(Debug, Clone)]
pub struct Ledger {
    genesis: GenesisConfig,
    blocks: Vec<Block>,
    outcomes: Vec<Vec<ExecutionOutcome>>,
    state: WorldState,
    work: u128,
}

impl Ledger {
    pub fn new(genesis: GenesisConfig) -> Self {
        let block = genesis.genesis_block();
        let state = genesis.genesis_state();
        let work = genesis.difficulty.work();
        Self {
            genesis,
            blocks: vec![block],
            outcomes: vec![vec![]],
            state,
            work,
        }
    }

    /// Rebuilds a ledger by validating and replaying `blocks`.
    pub fn from_blocks(genesis: GenesisConfig, blocks: Vec<Block>) -> Result<Self, ChainError> {
        let chain = validate_chain(&blocks, &genesis)?;
        Ok(Self {
            genesis,
            blocks,
            outcomes: chain.outcomes,
            state: chain.state,
            work: chain.view.cumulative_work,
        })
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("ledger has genesis")
    }

    pub fn height(&self) -> u64 {
        self.head().header.height
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn cumulative_work(&self) -> u128 {
        self.work
    }

    pub fn block_at(&self, height: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(height).ok()?)
    }

    pub fn outcomes_at(&self, height: u64) -> Option<&[ExecutionOutcome]> {
        self.outcomes
            .get(usize::try_from(height).ok()?)
            .map(Vec::as_slice)
    }

    pub fn events(&self) -> impl Iterator<Item = &TrailEvent> {
        self.outcomes.iter().flatten().flat_map(|o| o.events.iter())
    }

    pub fn trail(&self, contract: &Address) -> Trail {
        Trail::from_events(*contract, &self.state, self.events())
    }

    /// Template for the next block on top of the head.
    pub fn template<I>(
        &self,
        candidates: I,
        proposer: Address,
        timestamp: u64,
        max_txs: usize,
    ) -> BlockTemplate
    where
        I: IntoIterator<Item = SignedTransaction>,
    {
        build_block(
            &self.head().header,
            &self.state,
            &self.genesis,
            candidates,
            proposer,
            timestamp,
            max_txs,
        )
    }

    /// Fully validates `block` as the next block and appends it.
    pub fn append(&mut self, block: Block) -> Result<&[ExecutionOutcome], ChainError> {
        let exec = validate_block(
            &block,
            Some((&self.head().header, &self.state)),
            &self.genesis,
        )
        .map_err(|reason| ChainError {
            height: block.header.height,
            reason,
        })?;
        self.work += 1u128 << block.header.difficulty_bits;
        self.state = exec.state;
        self.blocks.push(block);
        self.outcomes.push(exec.outcomes);
        Ok(self.outcomes.last().expect("just pushed"))
    }

    pub fn view(&self) -> ChainView {
        ChainView::from_blocks(&self.blocks)
    }
}
