//! Discrete-event engine: a virtual clock, a (time, sequence) ordered
//! queue, and one block tree per node.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use fundchain_core::chain::{build_block, validate_block};
use fundchain_core::contract::{contract_address, DEFAULT_GAS_PRICE_WEI};
use fundchain_core::fx::{usd_to_wei, RateTable};
use fundchain_core::{
    fork_choice, mine, sign_tx, verify_tx, Address, Amount, Block, BlockError, ChainView, Digest,
    GasSchedule, GenesisConfig, KeyPair, SignedTransaction, TxPayload, UnsignedTx, WorldState,
};

use crate::config::{ConfigError, PartitionParams, Scenario, SimConfig, PPM};
use crate::report::{NodeReport, SimReport};
use crate::workload::Workload;

const GENESIS_TIME: u64 = 1_700_000_000;
const ALLOCATION: u128 = 1_000_000_000_000_000_000_000;
const MAX_BLOCK_TXS: usize = 256;
const WORKLOAD_CLIENTS: usize = 3;
const MERCHANT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    MineComplete,
    TxArrive,
    BlockArrive,
    PartitionToggle,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MineComplete => "MINE_COMPLETE",
            Self::TxArrive => "TX_ARRIVE",
            Self::BlockArrive => "BLOCK_ARRIVE",
            Self::PartitionToggle => "PARTITION_TOGGLE",
        }
    }
}

/// One applied event, as written to the transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time_us: u64,
    pub seq: u64,
    pub kind: EventKind,
    pub node: Option<usize>,
    pub detail: String,
    /// Set when a delivered block failed validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<BlockError>,
}

impl EventRecord {
    pub fn line(&self) -> String {
        let node = self.node.map_or("-".to_string(), |n| n.to_string());
        format!(
            "{} {} {} {} {}",
            self.time_us,
            self.seq,
            self.kind.as_str(),
            node,
            self.detail
        )
    }
}

#[derive(Debug, Clone)]
enum Payload {
    Mine {
        node: usize,
    },
    Tx {
        node: usize,
        tx: SignedTransaction,
        from: Option<usize>,
        client: bool,
    },
    Block {
        node: usize,
        block: Block,
        from: Option<usize>,
    },
    Partition {
        active: bool,
    },
}

#[derive(Debug)]
struct Scheduled {
    time: u64,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Debug, Clone)]
struct Stored {
    block: Block,
    state: WorldState,
}

#[derive(Debug, Clone)]
struct SimNode {
    address: Address,
    share_ppm: u32,
    mine_rng: ChaCha8Rng,
    net_rng: ChaCha8Rng,
    store: BTreeMap<Digest, Stored>,
    head: Digest,
    orphans: BTreeMap<Digest, Vec<Block>>,
    seen_blocks: BTreeSet<Digest>,
    seen_txs: BTreeSet<Digest>,
    mempool: BTreeMap<Digest, SignedTransaction>,
    blocks_mined: u64,
    adversary: bool,
}

impl SimNode {
    fn chain_view(&self, tip: &Digest) -> ChainView {
        let mut headers = Vec::new();
        let mut cur = Some(*tip);
        while let Some(h) = cur {
            let s = &self.store[&h];
            headers.push(s.block.header.clone());
            cur = (s.block.header.height > 0).then_some(s.block.header.parent_hash);
        }
        headers.reverse();
        ChainView::from_headers(headers)
    }

    fn chain_blocks(&self, tip: &Digest) -> Vec<Block> {
        let mut blocks = Vec::new();
        let mut cur = Some(*tip);
        while let Some(h) = cur {
            let s = &self.store[&h];
            blocks.push(s.block.clone());
            cur = (s.block.header.height > 0).then_some(s.block.header.parent_hash);
        }
        blocks.reverse();
        blocks
    }

    /// Whether `candidate` wins fork choice against `current`.
    fn prefers(&self, current: &Digest, candidate: &Digest) -> bool {
        if current == candidate {
            return false;
        }
        let a = self.chain_view(current);
        let b = self.chain_view(candidate);
        std::ptr::eq(fork_choice([&a, &b]).expect("two candidates"), &b)
    }

    fn head_state(&self) -> &WorldState {
        &self.store[&self.head].state
    }

    fn height_of(&self, h: &Digest) -> u64 {
        self.store[h].block.header.height
    }

    fn prune_mempool(&mut self) {
        let state = &self.store[&self.head].state;
        let stale: Vec<Digest> = self
            .mempool
            .iter()
            .filter(|(_, tx)| tx.nonce < state.nonce(&tx.sender))
            .map(|(id, _)| *id)
            .collect();
        for id in stale {
            self.mempool.remove(&id);
        }
    }
}

#[derive(Debug, Clone)]
struct Attack {
    payment: SignedTransaction,
    conflict: SignedTransaction,
    /// Best public chain tip as seen by the adversary.
    public_best: Digest,
    published: bool,
    gave_up: bool,
}

/// A running simulation. Drive it with [`Sim::step`] or [`Sim::run_to_end`].
pub struct Sim {
    cfg: SimConfig,
    genesis: GenesisConfig,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: u64,
    max_time: u64,
    interval_us: f64,
    nodes: Vec<SimNode>,
    partition: Option<PartitionParams>,
    partitioned: bool,
    mining_open: bool,
    halted: bool,
    workload: Option<Workload>,
    attack: Option<Attack>,
    hasher: Sha256,
    lines: Vec<String>,
    events: u64,
    messages_sent: u64,
    messages_dropped: u64,
    blocks_rejected: u64,
}

fn adversary_wallet() -> KeyPair {
    KeyPair::from_seed("sim-adversary")
}

fn merchant_wallet() -> KeyPair {
    KeyPair::from_seed("sim-merchant")
}

fn signed(kp: &KeyPair, nonce: u64, payload: TxPayload) -> SignedTransaction {
    let gas_limit = GasSchedule::default().default_limit(payload.kind());
    sign_tx(
        kp,
        UnsignedTx {
            nonce,
            gas_limit,
            gas_price: Amount::new(DEFAULT_GAS_PRICE_WEI),
            payload,
        },
    )
}

impl Sim {
    pub fn new(cfg: SimConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let shares = cfg.effective_shares();
        let base = ChaCha8Rng::seed_from_u64(cfg.seed);
        let stream = |s: u64| {
            let mut r = base.clone();
            r.set_stream(s);
            r
        };

        let workload = (cfg.tx_interval_ms > 0 && cfg.scenario != Scenario::DoubleSpendAttack)
            .then(|| Workload::new(stream(u64::MAX), WORKLOAD_CLIENTS, cfg.tx_interval_ms));

        let mut genesis = GenesisConfig::new(
            fundchain_core::Difficulty::new(cfg.difficulty_bits).expect("validated"),
        );
        genesis.timestamp = GENESIS_TIME;
        let mut wallets = vec![adversary_wallet().address(), merchant_wallet().address()];
        if let Some(w) = &workload {
            wallets.extend(w.clients().iter().map(KeyPair::address));
        }
        for a in wallets {
            genesis = genesis.with_allocation(a, Amount::new(ALLOCATION));
        }

        let genesis_block = genesis.genesis_block();
        let mut initial = vec![(genesis_block.clone(), genesis.genesis_state())];
        let mut attack = None;
        if cfg.scenario == Scenario::DoubleSpendAttack {
            // Common prefix: the merchant's contract is already deployed.
            let merchant = merchant_wallet();
            let deploy = signed(
                &merchant,
                0,
                TxPayload::Deploy {
                    min_fund_usd: Amount::usd(50),
                },
            );
            let tpl = build_block(
                &genesis_block.header,
                &initial[0].1,
                &genesis,
                [deploy],
                KeyPair::from_seed("sim-node-1").address(),
                GENESIS_TIME + 1,
                1,
            );
            let block1 = mine(&tpl.block, genesis.difficulty, 0).expect("nonce space");
            initial.push((block1.clone(), tpl.state));
            let adv = adversary_wallet();
            let payment = signed(
                &adv,
                0,
                TxPayload::Fund {
                    contract: contract_address(&merchant.address(), 0),
                    amount: usd_to_wei(Amount::usd(90), &RateTable::fixture()).expect("fixture"),
                    declared_fiat: None,
                },
            );
            let conflict = signed(
                &adv,
                0,
                TxPayload::Deploy {
                    min_fund_usd: Amount::usd(50),
                },
            );
            attack = Some(Attack {
                payment,
                conflict,
                public_best: block1.hash(),
                published: false,
                gave_up: false,
            });
        }

        let head = initial.last().expect("genesis").0.hash();
        let nodes = (0..cfg.node_count)
            .map(|i| {
                let mut store = BTreeMap::new();
                let mut seen_blocks = BTreeSet::new();
                for (b, s) in &initial {
                    seen_blocks.insert(b.hash());
                    store.insert(
                        b.hash(),
                        Stored {
                            block: b.clone(),
                            state: s.clone(),
                        },
                    );
                }
                SimNode {
                    address: KeyPair::from_seed(&format!("sim-node-{i}")).address(),
                    share_ppm: shares[i],
                    mine_rng: stream(2 * i as u64),
                    net_rng: stream(2 * i as u64 + 1),
                    store,
                    head,
                    orphans: BTreeMap::new(),
                    seen_blocks,
                    seen_txs: BTreeSet::new(),
                    mempool: BTreeMap::new(),
                    blocks_mined: 0,
                    adversary: attack.is_some() && i == 0,
                }
            })
            .collect();

        let interval_us =
            (1u64 << cfg.difficulty_bits) as f64 * cfg.ms_per_work_unit as f64 * 1000.0;
        let mut sim = Self {
            max_time: cfg.max_sim_time_ms.saturating_mul(1000),
            partition: cfg.effective_partition(),
            cfg,
            genesis,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            interval_us,
            nodes,
            partitioned: false,
            mining_open: true,
            halted: false,
            workload,
            attack,
            hasher: Sha256::new(),
            lines: Vec::new(),
            events: 0,
            messages_sent: 0,
            messages_dropped: 0,
            blocks_rejected: 0,
        };
        sim.bootstrap();
        Ok(sim)
    }

    fn bootstrap(&mut self) {
        for n in 0..self.nodes.len() {
            self.schedule_mining(n);
        }
        if let Some(p) = self.partition.clone() {
            self.schedule(p.start_ms * 1000, Payload::Partition { active: true });
            self.schedule(p.heal_ms * 1000, Payload::Partition { active: false });
        }
        if let Some(w) = self.workload.as_mut() {
            let at = w.next_gap_us();
            let node = w.pick_node(self.nodes.len());
            let tx = w.next_tx();
            if at <= self.max_time {
                self.schedule(
                    at,
                    Payload::Tx {
                        node,
                        tx,
                        from: None,
                        client: true,
                    },
                );
            }
        }
        if let Some(a) = &self.attack {
            let payment = a.payment.clone();
            self.nodes[0].seen_txs.insert(payment.id().0);
            for peer in 1..self.nodes.len() {
                self.send(
                    0,
                    peer,
                    Payload::Tx {
                        node: peer,
                        tx: payment.clone(),
                        from: Some(0),
                        client: false,
                    },
                );
            }
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn now_us(&self) -> u64 {
        self.now
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn head(&self, node: usize) -> &Block {
        &self.nodes[node].store[&self.nodes[node].head].block
    }

    pub fn head_state(&self, node: usize) -> &WorldState {
        self.nodes[node].head_state()
    }

    /// The node's adopted chain, genesis first.
    pub fn chain(&self, node: usize) -> Vec<Block> {
        self.nodes[node].chain_blocks(&self.nodes[node].head)
    }

    /// The workload's contract, if it deployed one.
    pub fn workload_contract(&self) -> Option<Address> {
        self.workload.as_ref().and_then(Workload::contract)
    }

    /// The adversary's payment, in the double-spend scenario.
    pub fn payment(&self) -> Option<&SignedTransaction> {
        self.attack.as_ref().map(|a| &a.payment)
    }

    /// Delivers `block` to `node` after `delay_ms`, as if from outside.
    pub fn inject_block(&mut self, node: usize, block: Block, delay_ms: u64) {
        self.schedule(
            self.now + delay_ms * 1000,
            Payload::Block {
                node,
                block,
                from: None,
            },
        );
    }

    fn schedule(&mut self, time: u64, payload: Payload) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            seq: self.seq,
            payload,
        });
    }

    fn schedule_mining(&mut self, n: usize) {
        let node = &mut self.nodes[n];
        if node.share_ppm == 0 {
            return;
        }
        let rate = node.share_ppm as f64 / PPM as f64 / self.interval_us;
        let u: f64 = node.mine_rng.gen();
        let dt = (-(1.0 - u).ln() / rate).ceil().max(1.0) as u64;
        let at = self.now.saturating_add(dt);
        if at <= self.max_time {
            self.schedule(at, Payload::Mine { node: n });
        }
    }

    fn send(&mut self, from: usize, to: usize, payload: Payload) {
        if self.partitioned {
            if let Some(p) = &self.partition {
                if p.groups[from] != p.groups[to] {
                    self.messages_dropped += 1;
                    return;
                }
            }
        }
        let (lo, hi) = (
            self.cfg.latency.min_ms * 1000,
            self.cfg.latency.max_ms * 1000,
        );
        let delay = self.nodes[from].net_rng.gen_range(lo..=hi);
        self.messages_sent += 1;
        self.schedule(self.now + delay, payload);
    }

    fn broadcast_block(&mut self, from: usize, block: &Block, except: Option<usize>) {
        for peer in 0..self.nodes.len() {
            if peer != from && Some(peer) != except {
                self.send(
                    from,
                    peer,
                    Payload::Block {
                        node: peer,
                        block: block.clone(),
                        from: Some(from),
                    },
                );
            }
        }
    }

    /// Applies the next event; `None` once the run is over.
    pub fn step(&mut self) -> Option<EventRecord> {
        if self.halted {
            return None;
        }
        let ev = self.queue.pop()?;
        self.now = ev.time;
        let (kind, node, detail, rejected) = match ev.payload {
            Payload::Mine { node } => {
                let detail = self.on_mine(node);
                (EventKind::MineComplete, Some(node), detail, None)
            }
            Payload::Tx {
                node,
                tx,
                from,
                client,
            } => {
                let detail = self.on_tx(node, tx, from, client);
                (EventKind::TxArrive, Some(node), detail, None)
            }
            Payload::Block { node, block, from } => {
                let (detail, rejected) = self.on_block(node, block, from);
                (EventKind::BlockArrive, Some(node), detail, rejected)
            }
            Payload::Partition { active } => {
                let detail = self.on_partition(active);
                (EventKind::PartitionToggle, None, detail, None)
            }
        };
        let rec = EventRecord {
            time_us: ev.time,
            seq: ev.seq,
            kind,
            node,
            detail,
            rejected,
        };
        let line = rec.line();
        self.hasher.update(line.as_bytes());
        self.hasher.update(b"\n");
        if self.cfg.keep_transcript {
            self.lines.push(line);
        }
        self.events += 1;
        Some(rec)
    }

    pub fn run_to_end(&mut self) -> SimReport {
        while self.step().is_some() {}
        self.report()
    }

    fn on_mine(&mut self, n: usize) -> String {
        if !self.mining_open {
            return "idle".into();
        }
        let node = &self.nodes[n];
        let parent = &node.store[&node.head];
        let candidates: Vec<SignedTransaction> = if node.adversary {
            let a = self.attack.as_ref().expect("attack state");
            if parent.state.nonce(&a.conflict.sender) == 0 {
                vec![a.conflict.clone()]
            } else {
                vec![]
            }
        } else {
            let mut txs: Vec<_> = node.mempool.values().cloned().collect();
            txs.sort_by_key(|t| (t.nonce, t.id()));
            txs
        };
        let ts = GENESIS_TIME + self.now / 1_000_000;
        let tpl = build_block(
            &parent.block.header,
            &parent.state,
            &self.genesis,
            candidates,
            node.address,
            ts,
            MAX_BLOCK_TXS,
        );
        let block = mine(&tpl.block, self.genesis.difficulty, 0).expect("nonce space");
        let hash = block.hash();
        let node = &mut self.nodes[n];
        node.blocks_mined += 1;
        node.seen_blocks.insert(hash);
        node.store.insert(
            hash,
            Stored {
                block: block.clone(),
                state: tpl.state,
            },
        );
        node.head = hash;
        node.prune_mempool();
        let height = block.header.height;
        let txs = block.transactions.len();
        if node.adversary {
            self.check_attack();
        } else {
            self.broadcast_block(n, &block, None);
        }
        self.schedule_mining(n);
        format!("mined height={height} txs={txs} hash={hash}")
    }

    fn on_tx(
        &mut self,
        n: usize,
        tx: SignedTransaction,
        from: Option<usize>,
        client: bool,
    ) -> String {
        if client {
            self.schedule_next_client_tx();
        }
        let id = tx.id().0;
        let node = &mut self.nodes[n];
        if !node.seen_txs.insert(id) {
            return format!("duplicate tx={id}");
        }
        if node.adversary {
            return format!("ignored tx={id}");
        }
        if verify_tx(&tx).is_err() {
            return format!("bad signature tx={id}");
        }
        if tx.nonce < node.head_state().nonce(&tx.sender) {
            return format!("stale tx={id}");
        }
        node.mempool.insert(id, tx.clone());
        for peer in 0..self.nodes.len() {
            if peer != n && Some(peer) != from {
                self.send(
                    n,
                    peer,
                    Payload::Tx {
                        node: peer,
                        tx: tx.clone(),
                        from: Some(n),
                        client: false,
                    },
                );
            }
        }
        format!("pooled tx={id}")
    }

    fn schedule_next_client_tx(&mut self) {
        let n = self.nodes.len();
        let Some(w) = self.workload.as_mut() else {
            return;
        };
        let at = self.now + w.next_gap_us();
        let node = w.pick_node(n);
        let tx = w.next_tx();
        if at <= self.max_time && self.mining_open {
            self.schedule(
                at,
                Payload::Tx {
                    node,
                    tx,
                    from: None,
                    client: true,
                },
            );
        }
    }

    fn on_block(
        &mut self,
        n: usize,
        block: Block,
        from: Option<usize>,
    ) -> (String, Option<BlockError>) {
        let hash = block.hash();
        let node = &mut self.nodes[n];
        if !node.seen_blocks.insert(hash) {
            return (format!("duplicate hash={hash}"), None);
        }
        if !node.store.contains_key(&block.header.parent_hash) {
            node.orphans
                .entry(block.header.parent_hash)
                .or_default()
                .push(block);
            return (format!("orphan hash={hash}"), None);
        }
        let mut work = vec![(block, from)];
        let mut accepted = 0;
        let mut first_error = None;
        while let Some((b, from)) = work.pop() {
            match self.accept(n, &b) {
                Ok(h) => {
                    accepted += 1;
                    if !self.nodes[n].adversary {
                        self.broadcast_block(n, &b, from);
                    }
                    if let Some(children) = self.nodes[n].orphans.remove(&h) {
                        work.extend(children.into_iter().map(|c| (c, None)));
                    }
                }
                Err(e) => {
                    self.blocks_rejected += 1;
                    first_error.get_or_insert(e);
                }
            }
        }
        if self.nodes[n].adversary {
            self.check_attack();
        }
        let head = self.nodes[n].head;
        let height = self.nodes[n].height_of(&head);
        let detail = match first_error {
            Some(e) => format!("hash={hash} accepted={accepted} rejected={e} head={height}"),
            None => format!("hash={hash} accepted={accepted} head={height}"),
        };
        (detail, first_error)
    }

    /// Validates a block whose parent is known, stores it and runs fork choice.
    fn accept(&mut self, n: usize, block: &Block) -> Result<Digest, BlockError> {
        let node = &self.nodes[n];
        let parent = &node.store[&block.header.parent_hash];
        let exec = validate_block(
            block,
            Some((&parent.block.header, &parent.state)),
            &self.genesis,
        )?;
        let hash = block.hash();
        let node = &mut self.nodes[n];
        node.store.insert(
            hash,
            Stored {
                block: block.clone(),
                state: exec.state,
            },
        );
        if node.adversary && !self.attack.as_ref().is_some_and(|a| a.published) {
            let a = self.attack.as_mut().expect("attack state");
            if node.prefers(&a.public_best, &hash) {
                a.public_best = hash;
            }
        } else if node.prefers(&node.head, &hash) {
            node.head = hash;
            node.prune_mempool();
        }
        Ok(hash)
    }

    fn on_partition(&mut self, active: bool) -> String {
        self.partitioned = active;
        if active {
            return "partition on".into();
        }
        // Heal: everyone re-announces its chain.
        for n in 0..self.nodes.len() {
            let chain = self.chain(n);
            for b in chain.iter().skip(1) {
                self.broadcast_block(n, b, None);
            }
        }
        "partition healed".into()
    }

    fn check_attack(&mut self) {
        let Some(a) = self.attack.as_ref() else {
            return;
        };
        if a.published || a.gave_up {
            return;
        }
        let adv = &self.nodes[0];
        let public = adv.chain_view(&a.public_best);
        let private = adv.chain_view(&adv.head);
        let payment_id = a.payment.id();
        let confirmations = adv
            .chain_blocks(&a.public_best)
            .iter()
            .find(|b| b.transactions.iter().any(|t| t.id() == payment_id))
            .map_or(0, |b| public.height() - b.header.height + 1);
        if confirmations >= self.cfg.adversary.confirmation_depth
            && private.cumulative_work > public.cumulative_work
        {
            let fork: Vec<Block> = adv
                .chain_blocks(&adv.head)
                .into_iter()
                .filter(|b| b.header.height >= 2)
                .collect();
            self.attack.as_mut().expect("attack").published = true;
            self.mining_open = false;
            for b in &fork {
                self.broadcast_block(0, b, None);
            }
        } else if public.height() > private.height() + self.cfg.adversary.secret_mining_depth {
            self.attack.as_mut().expect("attack").gave_up = true;
            self.mining_open = false;
            self.halted = true;
        }
    }

    fn attack_succeeded(&self) -> Option<bool> {
        let a = self.attack.as_ref()?;
        if !a.published {
            return Some(false);
        }
        let id = a.payment.id();
        let merchant = &self.nodes[MERCHANT];
        let chain = merchant.chain_blocks(&merchant.head);
        Some(
            !chain
                .iter()
                .any(|b| b.transactions.iter().any(|t| t.id() == id)),
        )
    }

    pub fn report(&self) -> SimReport {
        let nodes: Vec<NodeReport> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let view = n.chain_view(&n.head);
                NodeReport {
                    id: i,
                    head_hash: n.head,
                    height: view.height(),
                    cumulative_work: view.cumulative_work,
                    blocks_mined: n.blocks_mined,
                    hash_share_ppm: n.share_ppm,
                }
            })
            .collect();
        let converged = nodes.windows(2).all(|w| w[0].head_hash == w[1].head_hash);
        SimReport {
            scenario: self.cfg.scenario,
            seed: self.cfg.seed,
            nodes,
            converged,
            messages_sent: self.messages_sent,
            messages_dropped: self.messages_dropped,
            blocks_rejected: self.blocks_rejected,
            attack_succeeded: self.attack_succeeded(),
            conserved: self.nodes.iter().all(|n| n.head_state().is_conserved()),
            events: self.events,
            end_time_ms: self.now / 1000,
            transcript_digest: Digest(self.hasher.clone().finalize().into()),
            transcript: self.cfg.keep_transcript.then(|| self.lines.clone()),
        }
    }
}

/// Runs a configuration to completion.
pub fn run(cfg: SimConfig) -> Result<SimReport, ConfigError> {
    Ok(Sim::new(cfg)?.run_to_end())
}
