//! The node process: one writer thread owns the ledger, mempool and block
//! log; everyone else reads immutable snapshots.

use std::collections::{HashMap, HashSet};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{broadcast, oneshot};
use tracing::{debug, error, info, warn};

use fundchain_core::chain::{validate_block, Trail};
use fundchain_core::pow::PowError;
use fundchain_core::{
    mine, Address, Block, BlockError, ChainError, Digest, ExecutionOutcome, GenesisConfig, Ledger,
    SignedTransaction, TrailEvent, TxId, TxRejection, WorldState,
};

use crate::blobs::{BlobError, BlobStore};
use crate::config::{ConfigError, NodeConfig};
use crate::events::BlockMessages;
use crate::mempool::{Mempool, SubmitError};
use crate::rates::RateService;
use crate::store::{BlockLog, StoreError};

#[derive(Debug, Error)]
pub enum NodeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Blob(#[from] BlobError),
    #[error("stored chain does not replay: {0}")]
    Replay(ChainError),
    #[error("mining failed: {0}")]
    Mining(#[from] PowError),
    #[error("node is shutting down")]
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImportError {
    #[error("NOT_EXTENDING_HEAD")]
    NotExtendingHead,
    #[error("{0}")]
    Invalid(BlockError),
    #[error("STORAGE")]
    Storage,
}

/// Transactions left in the mempool by a block build, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deferred {
    pub tx_id: TxId,
    pub reason: TxRejection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedBlock {
    pub height: u64,
    pub hash: Digest,
    pub tx_count: usize,
    pub outcomes: Vec<ExecutionOutcome>,
    pub deferred: Vec<Deferred>,
}

#[derive(Debug, Default)]
pub struct Pending {
    pub ids: HashSet<TxId>,
    /// Next unused nonce per sender, counting pending transactions.
    pub next_nonce: HashMap<Address, u64>,
}

/// Immutable view of the chain at one head.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub genesis: Arc<GenesisConfig>,
    pub blocks: Arc<Vec<Arc<Block>>>,
    pub outcomes: Arc<Vec<Arc<Vec<ExecutionOutcome>>>>,
    pub state: Arc<WorldState>,
    pub cumulative_work: u128,
    pub pending: Arc<Pending>,
}

impl Snapshot {
    fn from_ledger(ledger: &Ledger) -> Self {
        let blocks = ledger.blocks().iter().cloned().map(Arc::new).collect();
        let outcomes = (0..=ledger.height())
            .map(|h| Arc::new(ledger.outcomes_at(h).expect("in range").to_vec()))
            .collect();
        Self {
            genesis: Arc::new(ledger.genesis().clone()),
            blocks: Arc::new(blocks),
            outcomes: Arc::new(outcomes),
            state: Arc::new(ledger.state().clone()),
            cumulative_work: ledger.cumulative_work(),
            pending: Arc::default(),
        }
    }

    fn extended(&self, ledger: &Ledger) -> Self {
        let mut blocks = Vec::clone(&self.blocks);
        let mut outcomes = Vec::clone(&self.outcomes);
        blocks.push(Arc::new(ledger.head().clone()));
        outcomes.push(Arc::new(
            ledger.outcomes_at(ledger.height()).expect("head").to_vec(),
        ));
        Self {
            genesis: self.genesis.clone(),
            blocks: Arc::new(blocks),
            outcomes: Arc::new(outcomes),
            state: Arc::new(ledger.state().clone()),
            cumulative_work: ledger.cumulative_work(),
            pending: self.pending.clone(),
        }
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("genesis")
    }

    pub fn height(&self) -> u64 {
        self.head().header.height
    }

    pub fn block_at(&self, height: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(height).ok()?).map(|b| &**b)
    }

    pub fn block_by_hash(&self, hash: &Digest) -> Option<&Block> {
        self.blocks
            .iter()
            .rev()
            .find(|b| b.hash() == *hash)
            .map(|b| &**b)
    }

    pub fn outcomes_at(&self, height: u64) -> Option<&[ExecutionOutcome]> {
        self.outcomes
            .get(usize::try_from(height).ok()?)
            .map(|o| o.as_slice())
    }

    pub fn events(&self) -> impl Iterator<Item = &TrailEvent> {
        self.outcomes
            .iter()
            .flat_map(|o| o.iter())
            .flat_map(|o| o.events.iter())
    }

    pub fn trail(&self, contract: &Address) -> Trail {
        Trail::from_events(*contract, &self.state, self.events())
    }

    /// Where a transaction was included: height, index and outcome.
    pub fn find_tx(&self, id: &TxId) -> Option<(u64, u32, &ExecutionOutcome)> {
        self.outcomes
            .iter()
            .enumerate()
            .rev()
            .find_map(|(h, outs)| {
                outs.iter()
                    .position(|o| o.tx_id == *id)
                    .map(|i| (h as u64, i as u32, &outs[i]))
            })
    }

    pub fn next_nonce(&self, addr: &Address) -> u64 {
        let confirmed = self.state.nonce(addr);
        self.pending
            .next_nonce
            .get(addr)
            .copied()
            .unwrap_or(0)
            .max(confirmed)
    }

    /// Stream messages for every block from `from` to the head.
    pub fn messages_from(&self, from: u64) -> Vec<BlockMessages> {
        (from..=self.height())
            .map(|h| {
                BlockMessages::new(
                    self.block_at(h).expect("in range"),
                    self.outcomes_at(h).expect("in range"),
                )
            })
            .collect()
    }
}

enum Command {
    Submit {
        tx: Box<SignedTransaction>,
        gossip: bool,
        reply: oneshot::Sender<Result<TxId, SubmitError>>,
    },
    Mine {
        reply: oneshot::Sender<Result<MinedBlock, NodeError>>,
    },
    Import {
        block: Box<Block>,
        reply: oneshot::Sender<Result<u64, ImportError>>,
    },
    Shutdown,
}

struct Shared {
    config: NodeConfig,
    commands: mpsc::Sender<Command>,
    snapshot: RwLock<Arc<Snapshot>>,
    events: broadcast::Sender<Arc<BlockMessages>>,
    blobs: BlobStore,
    rates: RateService,
}

/// Cheap, cloneable access to a running node.
#[derive(Clone)]
pub struct NodeHandle {
    shared: Arc<Shared>,
}

impl NodeHandle {
    pub fn config(&self) -> &NodeConfig {
        &self.shared.config
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.shared.snapshot.read().clone()
    }

    pub fn blobs(&self) -> &BlobStore {
        &self.shared.blobs
    }

    pub fn rates(&self) -> &RateService {
        &self.shared.rates
    }

    /// Live stream of committed blocks. Subscribe before taking a snapshot
    /// to replay without gaps.
    pub fn subscribe(&self) -> broadcast::Receiver<Arc<BlockMessages>> {
        self.shared.events.subscribe()
    }

    /// Submits a client transaction; accepted ones are relayed to peers.
    pub async fn submit(
        &self,
        tx: SignedTransaction,
    ) -> Result<Result<TxId, SubmitError>, NodeError> {
        self.submit_inner(tx, true).await
    }

    /// Submits a transaction relayed by a peer; it is not relayed again.
    pub async fn submit_from_peer(
        &self,
        tx: SignedTransaction,
    ) -> Result<Result<TxId, SubmitError>, NodeError> {
        self.submit_inner(tx, false).await
    }

    async fn submit_inner(
        &self,
        tx: SignedTransaction,
        gossip: bool,
    ) -> Result<Result<TxId, SubmitError>, NodeError> {
        let (reply, rx) = oneshot::channel();
        self.send(Command::Submit {
            tx: Box::new(tx),
            gossip,
            reply,
        })?;
        rx.await.map_err(|_| NodeError::Stopped)
    }

    /// Produces one block now, empty or not.
    pub async fn mine(&self) -> Result<MinedBlock, NodeError> {
        let (reply, rx) = oneshot::channel();
        self.send(Command::Mine { reply })?;
        rx.await.map_err(|_| NodeError::Stopped)?
    }

    /// Appends a block received from a peer if it extends the head.
    pub async fn import(&self, block: Block) -> Result<Result<u64, ImportError>, NodeError> {
        let (reply, rx) = oneshot::channel();
        self.send(Command::Import {
            block: Box::new(block),
            reply,
        })?;
        rx.await.map_err(|_| NodeError::Stopped)
    }

    fn send(&self, cmd: Command) -> Result<(), NodeError> {
        self.shared
            .commands
            .send(cmd)
            .map_err(|_| NodeError::Stopped)
    }
}

/// A node with its writer thread. Dropping it stops the writer.
pub struct Node {
    handle: NodeHandle,
    writer: Option<JoinHandle<()>>,
}

impl Node {
    /// Opens (or creates) the chain in `config.data_dir`, replaying the
    /// block log, and starts the writer.
    pub fn start(config: NodeConfig) -> Result<Self, NodeError> {
        config.validate()?;
        let genesis = config.genesis();
        let (log, stored) = BlockLog::open(&config.data_dir.join("chain"))?;
        let mut log = log;
        let ledger = if stored.is_empty() {
            let ledger = Ledger::new(genesis);
            log.append(ledger.head())?;
            ledger
        } else {
            Ledger::from_blocks(genesis, stored).map_err(NodeError::Replay)?
        };
        info!(
            height = ledger.height(),
            head = %ledger.head().hash(),
            "chain loaded"
        );
        let blobs = BlobStore::open(&config.data_dir.join("receipts"), config.max_blob_bytes)?;
        let (commands, rx) = mpsc::channel();
        let (events, _) = broadcast::channel(config.event_buffer);
        let shared = Arc::new(Shared {
            rates: RateService::new(config.rates.clone()),
            config,
            commands,
            snapshot: RwLock::new(Arc::new(Snapshot::from_ledger(&ledger))),
            events,
            blobs,
        });
        let gossip = Gossip::spawn(shared.config.peers.clone());
        let mut writer = Writer {
            shared: shared.clone(),
            ledger,
            mempool: Mempool::new(),
            log,
            gossip,
        };
        let thread = std::thread::Builder::new()
            .name("fundchain-writer".into())
            .spawn(move || writer.run(rx))
            .expect("spawn writer thread");
        Ok(Self {
            handle: NodeHandle { shared },
            writer: Some(thread),
        })
    }

    pub fn handle(&self) -> NodeHandle {
        self.handle.clone()
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(thread) = self.writer.take() {
            let _ = self.handle.shared.commands.send(Command::Shutdown);
            let _ = thread.join();
        }
    }
}

impl Drop for Node {
    fn drop(&mut self) {
        self.stop();
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}

struct Writer {
    shared: Arc<Shared>,
    ledger: Ledger,
    mempool: Mempool,
    log: BlockLog,
    gossip: Option<Gossip>,
}

impl Writer {
    fn run(&mut self, rx: mpsc::Receiver<Command>) {
        let mining = self.shared.config.mining.clone();
        let tick = Duration::from_millis(mining.interval_ms.max(1));
        loop {
            let cmd = if mining.enabled {
                match rx.recv_timeout(tick) {
                    Ok(cmd) => Some(cmd),
                    Err(RecvTimeoutError::Timeout) => None,
                    Err(RecvTimeoutError::Disconnected) => return,
                }
            } else {
                match rx.recv() {
                    Ok(cmd) => Some(cmd),
                    Err(_) => return,
                }
            };
            match cmd {
                None => {
                    if !self.mempool.is_empty() || mining.empty_blocks {
                        if let Err(e) = self.produce() {
                            // The mempool is untouched; the next tick retries.
                            error!(error = %e, "block production failed");
                        }
                    }
                }
                Some(Command::Submit { tx, gossip, reply }) => {
                    let result = self.mempool.insert((*tx).clone(), self.ledger.state());
                    if result.is_ok() {
                        self.publish_pending();
                        if gossip {
                            self.relay("/tx", serde_json::to_value(&*tx).expect("tx json"));
                        }
                    }
                    let _ = reply.send(result);
                }
                Some(Command::Mine { reply }) => {
                    let _ = reply.send(self.produce());
                }
                Some(Command::Import { block, reply }) => {
                    let _ = reply.send(self.import(*block));
                }
                Some(Command::Shutdown) => return,
            }
        }
    }

    fn produce(&mut self) -> Result<MinedBlock, NodeError> {
        let cfg = &self.shared.config.mining;
        let template = self.ledger.template(
            self.mempool.ordered(),
            cfg.proposer,
            now_secs(),
            cfg.max_block_txs,
        );
        let difficulty = self.ledger.genesis().difficulty;
        let block = mine(&template.block, difficulty, 0)?;
        let hash = block.hash();
        self.commit(block).map_err(|e| match e {
            CommitError::Store(s) => NodeError::Store(s),
            CommitError::Chain(c) => NodeError::Replay(c),
        })?;
        let mined = self.ledger.head().clone();
        debug!(height = mined.header.height, %hash, txs = mined.transactions.len(), "mined block");
        self.relay("/blocks", serde_json::to_value(&mined).expect("block json"));
        Ok(MinedBlock {
            height: mined.header.height,
            hash,
            tx_count: mined.transactions.len(),
            outcomes: template.outcomes,
            deferred: template
                .deferred
                .iter()
                .map(|(tx, reason)| Deferred {
                    tx_id: tx.id(),
                    reason: *reason,
                })
                .collect(),
        })
    }

    fn import(&mut self, block: Block) -> Result<u64, ImportError> {
        let snap = self.shared.snapshot.read().clone();
        let hash = block.hash();
        if snap.block_by_hash(&hash).is_some() {
            return Ok(block.header.height);
        }
        if block.header.parent_hash != self.ledger.head().hash() {
            return Err(ImportError::NotExtendingHead);
        }
        let height = block.header.height;
        self.commit(block).map_err(|e| match e {
            CommitError::Chain(c) => ImportError::Invalid(c.reason),
            CommitError::Store(s) => {
                error!(error = %s, "failed to persist imported block");
                ImportError::Storage
            }
        })?;
        info!(height, %hash, "imported block from peer");
        Ok(height)
    }

    /// Validates, persists, publishes. The ledger only moves once the
    /// block is on disk.
    fn commit(&mut self, block: Block) -> Result<(), CommitError> {
        validate_block(
            &block,
            Some((&self.ledger.head().header, self.ledger.state())),
            self.ledger.genesis(),
        )
        .map_err(|reason| {
            CommitError::Chain(ChainError {
                height: block.header.height,
                reason,
            })
        })?;
        self.log.append(&block).map_err(CommitError::Store)?;
        self.ledger.append(block).expect("block validated above");
        self.mempool.prune(self.ledger.state());

        let prev = self.shared.snapshot.read().clone();
        let mut snap = prev.extended(&self.ledger);
        snap.pending = Arc::new(self.pending());
        *self.shared.snapshot.write() = Arc::new(snap);

        let height = self.ledger.height();
        let msgs = BlockMessages::new(
            self.ledger.head(),
            self.ledger.outcomes_at(height).expect("head"),
        );
        // No receivers is fine; lagging receivers notice on their own.
        let _ = self.shared.events.send(Arc::new(msgs));
        Ok(())
    }

    fn pending(&self) -> Pending {
        let mut p = Pending::default();
        for tx in self.mempool.ordered() {
            p.ids.insert(tx.id());
            let n = p.next_nonce.entry(tx.sender).or_insert(0);
            *n = (*n).max(tx.nonce + 1);
        }
        p
    }

    fn publish_pending(&self) {
        let mut snap = Snapshot::clone(&self.shared.snapshot.read());
        snap.pending = Arc::new(self.pending());
        *self.shared.snapshot.write() = Arc::new(snap);
    }

    fn relay(&self, path: &'static str, body: serde_json::Value) {
        if let Some(g) = &self.gossip {
            g.send(path, body);
        }
    }
}

enum CommitError {
    Chain(ChainError),
    Store(StoreError),
}

/// Best-effort relay of transactions and blocks to peer nodes, off the
/// writer thread.
struct Gossip {
    tx: mpsc::Sender<(&'static str, serde_json::Value)>,
}

impl Gossip {
    fn spawn(peers: Vec<String>) -> Option<Self> {
        if peers.is_empty() {
            return None;
        }
        let (tx, rx) = mpsc::channel::<(&'static str, serde_json::Value)>();
        std::thread::Builder::new()
            .name("fundchain-gossip".into())
            .spawn(move || {
                let agent = ureq::AgentBuilder::new()
                    .timeout(Duration::from_secs(2))
                    .build();
                for (path, body) in rx {
                    for peer in &peers {
                        let url = format!("{}{}", peer.trim_end_matches('/'), path);
                        if let Err(e) = agent
                            .post(&url)
                            .set(crate::api::PEER_HEADER, "1")
                            .send_json(&body)
                        {
                            warn!(%url, error = %e, "gossip failed");
                        }
                    }
                }
            })
            .expect("spawn gossip thread");
        Some(Self { tx })
    }

    fn send(&self, path: &'static str, body: serde_json::Value) {
        let _ = self.tx.send((path, body));
    }
}
