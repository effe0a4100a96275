//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any failed. Run with `cargo test -p fundchain-cli --test acceptance`.

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fundchain_cli::bench::{self, FEATURES};
use fundchain_cli::wallet::{self, Inclusion};
use fundchain_cli::ApiClient;
use fundchain_core::chain::validate_encoded_chain;
use fundchain_core::contract::{contract_address, DEFAULT_FUND_GAS_LIMIT, DEFAULT_GAS_PRICE_WEI};
use fundchain_core::exec::TxContext;
use fundchain_core::fx::{convert_to_wei, min_wei_for_usd, usd_to_wei};
use fundchain_core::{
    apply_tx, hash256, mine, sign_tx, Address, Amount, Difficulty, Encode, ExecStatus,
    ExecutionOutcome, GasSchedule, GenesisConfig, KeyPair, Ledger, RateTable, SignedTransaction,
    TaggedAmount, TrailEvent, TrailKind, TxPayload, Unit, UnsignedTx, WorldState,
};
use fundchain_netsim::{attack_trials, SimConfig};
use fundchain_node::api::{HeadInfo, RatesInfo};
use fundchain_node::{LocalNode, NodeConfig, DEV_KEY_SEED};

// Pinned tolerances.
const NINETY_USD_WEI: u128 = 25_106_073_159_097_186;
const FUND_GAS_USED: u64 = 109_281;
const FUND_GAS_LIMIT: u64 = 120_209;
const MUTATIONS: usize = 100;
const CHAIN_BLOCKS: usize = 10;
const WORKLOAD_TXS: usize = 200;
const ATTACK_TRIALS: u64 = 200;
const ATTACK_SHARES_PPM: [u32; 5] = [100_000, 300_000, 500_000, 600_000, 900_000];
const BENCH_MAX_MEAN_MS: f64 = 250.0;
const RICH: u128 = 10u128.pow(24);

/// Fixture rate written down independently of the implementation:
/// 25106073159097186 wei per 90 USD (micro-USD denominator).
const ORACLE_WEI_NUM: u64 = 25_106_073_159_097_186;
const ORACLE_WEI_DEN: u64 = 90_000_000;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let checks: [Criterion; 11] = [
        ("conversion exactness", conversion),
        ("minimum-fund rule", minimum_fund),
        ("access control brute force", access_control),
        ("gas anchor", gas_anchor),
        ("immutability", immutability),
        ("conservation", conservation),
        ("replay determinism", replay),
        ("simulation determinism and convergence", simulation),
        ("51% attack monotonicity", attack_monotonicity),
        ("bench harness", bench_harness),
        ("trail completeness", trail_completeness),
    ];
    // Failures are reported on their PASS/FAIL line.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- helpers

fn keys(n: usize) -> Vec<KeyPair> {
    (0..n)
        .map(|i| KeyPair::from_seed(&format!("acceptance-{i}")))
        .collect()
}

fn genesis(ks: &[KeyPair], bits: u8) -> GenesisConfig {
    ks.iter().fold(
        GenesisConfig::new(Difficulty::new(bits).unwrap()),
        |g, k| g.with_allocation(k.address(), Amount::new(RICH)),
    )
}

fn signed(kp: &KeyPair, nonce: u64, payload: TxPayload) -> SignedTransaction {
    signed_with_limit(
        kp,
        nonce,
        GasSchedule::default().default_limit(payload.kind()),
        payload,
    )
}

fn signed_with_limit(
    kp: &KeyPair,
    nonce: u64,
    gas_limit: u64,
    payload: TxPayload,
) -> SignedTransaction {
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

struct Chain {
    ledger: Ledger,
    clock: u64,
}

impl Chain {
    fn new(g: GenesisConfig) -> Self {
        Self {
            ledger: Ledger::new(g),
            clock: 1_700_000_000,
        }
    }

    fn nonce(&self, kp: &KeyPair) -> u64 {
        self.ledger.state().nonce(&kp.address())
    }

    fn mine(&mut self, txs: Vec<SignedTransaction>) -> Vec<ExecutionOutcome> {
        let n = txs.len();
        self.clock += 10;
        let tpl = self
            .ledger
            .template(txs, Address([0xee; 20]), self.clock, usize::MAX);
        assert!(tpl.deferred.is_empty(), "deferred: {:?}", tpl.deferred);
        assert_eq!(tpl.block.transactions.len(), n);
        let block = mine(&tpl.block, self.ledger.genesis().difficulty, 0).unwrap();
        self.ledger.append(block).unwrap().to_vec()
    }

    fn exec(&mut self, kp: &KeyPair, payload: TxPayload) -> ExecutionOutcome {
        let tx = signed(kp, self.nonce(kp), payload);
        self.mine(vec![tx]).remove(0)
    }

    fn deploy(&mut self, kp: &KeyPair) -> Address {
        let out = self.exec(
            kp,
            TxPayload::Deploy {
                min_fund_usd: Amount::usd(50),
            },
        );
        assert!(out.status.is_success(), "deploy: {}", out.status);
        out.events[0].contract.unwrap()
    }
}

fn fund(contract: Address, wei: u128) -> TxPayload {
    TxPayload::Fund {
        contract,
        amount: Amount::new(wei),
        declared_fiat: None,
    }
}

fn dev_node(dir: &std::path::Path) -> LocalNode {
    let mut c = NodeConfig::dev(dir);
    c.listen = "127.0.0.1:0".parse().unwrap();
    c.mining.enabled = false;
    LocalNode::spawn(c).unwrap()
}

fn now() -> Inclusion {
    Inclusion {
        mine: true,
        wait: Some(Duration::from_secs(30)),
    }
}

// ---------------------------------------------------------------- checks

fn conversion() -> Check {
    let t = RateTable::fixture();
    let c = convert_to_wei(TaggedAmount::new(90_000_000, Unit::MicroUsd), &t).unwrap();
    ensure!(
        c.wei.value() == NINETY_USD_WEI,
        "library: {}",
        c.wei.value()
    );
    ensure!(
        c.wei.to_decimal_string() == "0.025106073159097186",
        "display: {}",
        c.wei.to_decimal_string()
    );
    let bdt = convert_to_wei(TaggedAmount::new(765_000, Unit::CentiBdt), &t).unwrap();
    ensure!(
        bdt.wei.value() == NINETY_USD_WEI,
        "7650 BDT: {}",
        bdt.wei.value()
    );

    // Same answer through the node's rates endpoint.
    let dir = tempfile::tempdir().unwrap();
    let node = dev_node(dir.path());
    let api = ApiClient::new(&node.url());
    let r: RatesInfo = api
        .get("/rates?amount=90&currency=usd")
        .map_err(|e| e.to_string())?;
    let conv = r.conversion.ok_or("no conversion in response")?;
    ensure!(
        conv.conversion.wei.value() == NINETY_USD_WEI,
        "api: {}",
        conv.conversion.wei.value()
    );
    ensure!(
        conv.wei_display == "0.025106073159097186",
        "api display: {}",
        conv.wei_display
    );
    Ok(format!(
        "90 USD = {NINETY_USD_WEI} wei = 0.025106073159097186"
    ))
}

fn oracle_meets_minimum(wei: u128, min_micro_usd: u128) -> bool {
    BigUint::from(wei) * BigUint::from(ORACLE_WEI_DEN)
        >= BigUint::from(min_micro_usd) * BigUint::from(ORACLE_WEI_NUM)
}

fn minimum_fund() -> Check {
    let ks = keys(2);
    let mut ch = Chain::new(genesis(&ks, 2));
    let c = ch.deploy(&ks[0]);
    let t = RateTable::fixture();
    let min = 50_000_000u128;
    let cases = [
        (
            "50 USD",
            min_wei_for_usd(Amount::usd(50), &t).unwrap().value(),
        ),
        ("49 USD", usd_to_wei(Amount::usd(49), &t).unwrap().value()),
        (
            "1 wei under 50 USD",
            min_wei_for_usd(Amount::usd(50), &t).unwrap().value() - 1,
        ),
        ("90 USD", NINETY_USD_WEI),
    ];
    for (label, wei) in cases {
        let expect_ok = oracle_meets_minimum(wei, min);
        let out = ch.exec(&ks[1], fund(c, wei));
        let want = if expect_ok {
            ExecStatus::Success
        } else {
            ExecStatus::BelowMinimumFund
        };
        ensure!(
            out.status == want,
            "{label} ({wei} wei): got {}, oracle says {want}",
            out.status
        );
    }
    ensure!(
        oracle_meets_minimum(cases[0].1, min) && !oracle_meets_minimum(cases[1].1, min),
        "oracle disagrees on the 50/49 pair"
    );
    Ok("50 USD accepted, 49 USD and boundary-1 rejected with BELOW_MINIMUM_FUND".into())
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Grant(usize, usize),
    Revoke(usize, usize),
    Withdraw(usize),
}

impl Op {
    fn caller(self) -> usize {
        match self {
            Op::Grant(c, _) | Op::Revoke(c, _) | Op::Withdraw(c) => c,
        }
    }
}

/// Principal 0 deploys. Plain set semantics for the authorized set.
fn oracle_step(auth: &mut BTreeSet<usize>, op: Op) -> ExecStatus {
    match op {
        Op::Grant(caller, _) | Op::Revoke(caller, _) if caller != 0 => ExecStatus::NotOwner,
        Op::Grant(_, 0) => ExecStatus::GranteeIsOwner,
        Op::Grant(_, t) => {
            auth.insert(t);
            ExecStatus::Success
        }
        Op::Revoke(_, 0) => ExecStatus::CannotRevokeDeployer,
        Op::Revoke(_, t) if auth.remove(&t) => ExecStatus::Success,
        Op::Revoke(..) => ExecStatus::TargetNotAuthorized,
        Op::Withdraw(c) if c == 0 || auth.contains(&c) => ExecStatus::Success,
        Op::Withdraw(_) => ExecStatus::UnauthorizedWithdrawer,
    }
}

struct Brute<'a> {
    genesis: &'a GenesisConfig,
    principals: Vec<Address>,
    contract: Address,
    ops: Vec<Op>,
    txs: Vec<Vec<SignedTransaction>>,
    sequences: u64,
    discrepancies: u64,
    first: Option<String>,
}

const MAX_OPS: usize = 5;

impl Brute<'_> {
    fn dfs(
        &mut self,
        state: &WorldState,
        auth: &BTreeSet<usize>,
        sent: [usize; 3],
        path: &mut Vec<Op>,
    ) {
        self.sequences += 1;
        if path.len() == MAX_OPS {
            return;
        }
        for i in 0..self.ops.len() {
            let op = self.ops[i];
            let mut next = state.clone();
            let ctx = TxContext {
                height: 1,
                index: path.len() as u32,
                proposer: Address([0xee; 20]),
            };
            let out = apply_tx(
                &mut next,
                self.genesis,
                &self.txs[i][sent[op.caller()]],
                ctx,
            )
            .expect("envelope");
            let mut auth2 = auth.clone();
            let want = oracle_step(&mut auth2, op);
            path.push(op);
            let c = next.contract(&self.contract).unwrap();
            let got: BTreeSet<usize> = (0..3)
                .filter(|&p| c.authorized.contains(&self.principals[p]))
                .collect();
            if out.status != want || got != auth2 || c.deployer_owner != self.principals[0] {
                self.discrepancies += 1;
                self.first
                    .get_or_insert_with(|| format!("{path:?}: got {}, want {want}", out.status));
            }
            let mut sent2 = sent;
            sent2[op.caller()] += 1;
            self.dfs(&next, &auth2, sent2, path);
            path.pop();
        }
    }
}

fn access_control() -> Check {
    let ks = keys(3);
    let mut ch = Chain::new(genesis(&ks, 2));
    let contract = ch.deploy(&ks[0]);
    ch.exec(&ks[1], fund(contract, NINETY_USD_WEI));
    let state = ch.ledger.state().clone();

    let mut ops = Vec::new();
    for caller in 0..3 {
        for target in 0..3 {
            ops.push(Op::Grant(caller, target));
            ops.push(Op::Revoke(caller, target));
        }
        ops.push(Op::Withdraw(caller));
    }
    let txs = ops
        .iter()
        .map(|&op| {
            let payload = match op {
                Op::Grant(_, t) => TxPayload::Grant {
                    contract,
                    grantee: ks[t].address(),
                },
                Op::Revoke(_, t) => TxPayload::Revoke {
                    contract,
                    target: ks[t].address(),
                },
                Op::Withdraw(_) => TxPayload::Withdraw { contract },
            };
            let kp = &ks[op.caller()];
            let base = state.nonce(&kp.address());
            (0..MAX_OPS as u64)
                .map(|k| signed(kp, base + k, payload.clone()))
                .collect()
        })
        .collect();
    let g = ch.ledger.genesis().clone();
    let mut b = Brute {
        genesis: &g,
        principals: ks.iter().map(|k| k.address()).collect(),
        contract,
        ops,
        txs,
        sequences: 0,
        discrepancies: 0,
        first: None,
    };
    b.dfs(&state, &BTreeSet::new(), [0; 3], &mut vec![]);
    let expected: u64 = (0..=MAX_OPS as u32).map(|k| 21u64.pow(k)).sum();
    ensure!(
        b.sequences == expected,
        "explored {} sequences, expected {expected}",
        b.sequences
    );
    ensure!(
        b.discrepancies == 0,
        "{} discrepancies, first {}",
        b.discrepancies,
        b.first.unwrap()
    );
    Ok(format!("{} sequences, 0 discrepancies", b.sequences))
}

fn gas_anchor() -> Check {
    ensure!(
        GasSchedule::default().default_limit(fundchain_core::tx::TxKind::Fund) == FUND_GAS_LIMIT
            && DEFAULT_FUND_GAS_LIMIT == FUND_GAS_LIMIT,
        "default fund gas limit is not {FUND_GAS_LIMIT}"
    );
    let ks = keys(2);
    let mut ch = Chain::new(genesis(&ks, 2));
    let c = ch.deploy(&ks[0]);
    let out = ch.exec(&ks[1], fund(c, NINETY_USD_WEI));
    ensure!(out.status.is_success(), "fund: {}", out.status);
    ensure!(out.gas_used == FUND_GAS_USED, "gas_used {}", out.gas_used);
    let pct = format!(
        "{:.2}%",
        out.gas_used as f64 * 100.0 / FUND_GAS_LIMIT as f64
    );
    ensure!(pct == "90.91%", "ratio {pct}");
    Ok(format!("gas used: {} ({pct})", out.gas_used))
}

fn immutability() -> Check {
    let ks = keys(2);
    // 16 bits so a flipped nonce in the head block still breaks its proof of work.
    let mut ch = Chain::new(genesis(&ks, 16));
    let c = ch.deploy(&ks[0]);
    while ch.ledger.blocks().len() < CHAIN_BLOCKS {
        let n = ch.nonce(&ks[1]);
        ch.mine(vec![signed(&ks[1], n, fund(c, NINETY_USD_WEI))]);
    }
    let blocks = &ch.ledger.blocks()[..CHAIN_BLOCKS];
    let g = ch.ledger.genesis();
    let encoded: Vec<Vec<u8>> = blocks.iter().map(|b| b.to_canonical_bytes()).collect();
    if let Err(e) = validate_encoded_chain(&encoded, g) {
        return Err(format!("pristine chain rejected: {e:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut rejected = 0;
    for _ in 0..MUTATIONS {
        let mut m = encoded.clone();
        let bi = rng.gen_range(0..m.len());
        let pos = rng.gen_range(0..m[bi].len());
        m[bi][pos] ^= rng.gen_range(1..=255u8);
        if validate_encoded_chain(&m, g).is_err() {
            rejected += 1;
        }
    }
    ensure!(
        rejected == MUTATIONS,
        "{rejected}/{MUTATIONS} mutations rejected"
    );
    Ok(format!(
        "{rejected}/{MUTATIONS} single-byte mutations rejected over {CHAIN_BLOCKS} blocks"
    ))
}

fn conservation() -> Check {
    let ks = keys(4);
    let g = genesis(&ks, 1).with_treasury(ks[0].public_key());
    let initial = g.initial_supply().unwrap().value();
    let mut ch = Chain::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let min_wei = min_wei_for_usd(Amount::usd(50), &RateTable::fixture())
        .unwrap()
        .value();
    let mut contracts: Vec<Address> = Vec::new();
    let mut minted = 0u128;
    let (mut sent, mut blocks) = (0, 0);
    while sent < WORKLOAD_TXS {
        let batch = rng.gen_range(1..=6).min(WORKLOAD_TXS - sent);
        let mut pending: HashMap<Address, u64> = HashMap::new();
        let mut txs = Vec::new();
        for _ in 0..batch {
            let who = rng.gen_range(0..ks.len());
            let kp = &ks[who];
            let nonce = ch.nonce(kp) + pending.get(&kp.address()).copied().unwrap_or(0);
            let target = if contracts.is_empty() {
                Address([0xab; 20])
            } else {
                contracts[rng.gen_range(0..contracts.len())]
            };
            let other = ks[rng.gen_range(0..ks.len())].address();
            let payload = match rng.gen_range(0..100) {
                0..=9 => {
                    contracts.push(contract_address(&kp.address(), nonce));
                    TxPayload::Deploy {
                        min_fund_usd: Amount::usd(rng.gen_range(0..=60)),
                    }
                }
                10..=44 => fund(target, min_wei + rng.gen_range(0..min_wei) - min_wei / 8),
                45..=59 => TxPayload::Withdraw { contract: target },
                60..=72 => TxPayload::Grant {
                    contract: target,
                    grantee: other,
                },
                73..=82 => TxPayload::Revoke {
                    contract: target,
                    target: other,
                },
                83..=92 => TxPayload::AttachReceipt {
                    contract: target,
                    content_hash: hash256(&rng.gen::<[u8; 8]>()),
                    memo: "r".into(),
                },
                // Key 0 is the treasury; mints from anyone else never reach a block.
                _ if who == 0 => TxPayload::Mint {
                    to: other,
                    amount: Amount::new(rng.gen_range(1..min_wei)),
                },
                _ => TxPayload::Withdraw { contract: target },
            };
            let mut limit = GasSchedule::default().default_limit(payload.kind());
            if rng.gen_ratio(1, 20) {
                limit /= 2;
            }
            txs.push(signed_with_limit(kp, nonce, limit, payload));
            *pending.entry(kp.address()).or_default() += 1;
        }
        sent += txs.len();
        for o in ch.mine(txs) {
            for e in &o.events {
                if e.kind == TrailKind::Minted && e.status.is_success() {
                    minted += e.amount.unwrap().value();
                }
            }
        }
        blocks += 1;
        let s = ch.ledger.state();
        let total = s.total_balances();
        ensure!(
            total == Some(initial + minted) && s.supply.value() == initial + minted,
            "block {blocks}: balances {total:?}, supply {}, minted {}",
            s.supply.value(),
            initial + minted
        );
    }
    ensure!(minted > 0, "workload never minted");
    Ok(format!(
        "{sent} txs over {blocks} blocks, {minted} wei minted, sums exact"
    ))
}

fn replay() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let dev = KeyPair::from_seed(DEV_KEY_SEED);
    let (head, digest) = {
        let node = dev_node(dir.path());
        let api = ApiClient::new(&node.url());
        let nonce = wallet::next_nonce(&api, &dev.address()).map_err(|e| e.to_string())?;
        wallet::execute(
            &api,
            &dev,
            TxPayload::Deploy {
                min_fund_usd: Amount::usd(50),
            },
            now(),
        )
        .map_err(|e| e.to_string())?;
        let c = contract_address(&dev.address(), nonce);
        for _ in 0..3 {
            wallet::execute(&api, &dev, fund(c, NINETY_USD_WEI), now())
                .map_err(|e| e.to_string())?;
        }
        let h: HeadInfo = api.get("/head").map_err(|e| e.to_string())?;
        let snap = node.handle().snapshot();
        // Rebuild from the persisted log, independent of the running node.
        let replayed = Ledger::from_blocks(
            (*snap.genesis).clone(),
            snap.blocks.iter().map(|b| (**b).clone()).collect(),
        )
        .map_err(|e| format!("{e:?}"))?;
        ensure!(
            replayed.state().digest().to_string() == h.state_digest.to_string(),
            "replayed digest differs"
        );
        (h.hash, h.state_digest)
    };
    let node = dev_node(dir.path());
    let h: HeadInfo = ApiClient::new(&node.url())
        .get("/head")
        .map_err(|e| e.to_string())?;
    ensure!(h.hash == head, "head after restart {} != {head}", h.hash);
    ensure!(h.state_digest == digest, "digest after restart differs");
    Ok(format!(
        "height {} head {} survives restart",
        h.height, h.hash
    ))
}

fn simulation() -> Check {
    let a = fundchain_netsim::run(SimConfig::honest(42)).map_err(|e| e.to_string())?;
    let b = fundchain_netsim::run(SimConfig::honest(42)).map_err(|e| e.to_string())?;
    ensure!(
        a.transcript_digest == b.transcript_digest,
        "transcript digests differ"
    );
    ensure!(a.nodes.len() == 5, "{} nodes", a.nodes.len());
    ensure!(a.converged, "honest nodes did not converge");
    let heads: BTreeSet<_> = a.nodes.iter().map(|n| n.head_hash).collect();
    ensure!(heads.len() == 1, "{} distinct heads", heads.len());
    Ok(format!(
        "5 nodes on one head at height {}, transcript {}",
        a.nodes[0].height, a.transcript_digest
    ))
}

fn attack_monotonicity() -> Check {
    let depth = SimConfig::double_spend(0, 0, 2)
        .adversary
        .confirmation_depth;
    let zero = attack_trials(&SimConfig::double_spend(1, 0, depth), ATTACK_TRIALS)
        .map_err(|e| e.to_string())?;
    ensure!(
        zero.successes == 0,
        "share 0 succeeded {} times",
        zero.successes
    );
    let mut fractions = Vec::new();
    for share in ATTACK_SHARES_PPM {
        let s = attack_trials(&SimConfig::double_spend(1, share, depth), ATTACK_TRIALS)
            .map_err(|e| e.to_string())?;
        fractions.push(s.fraction);
    }
    let shown: Vec<String> = ATTACK_SHARES_PPM
        .iter()
        .zip(&fractions)
        .map(|(s, f)| format!("{:.1}:{f:.3}", *s as f64 / 1e6))
        .collect();
    ensure!(
        fractions.windows(2).all(|w| w[0] <= w[1]),
        "not monotone: {}",
        shown.join(" ")
    );
    Ok(format!("0.0:0.000 {}", shown.join(" ")))
}

fn bench_harness() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let node = dev_node(dir.path());
    let api = ApiClient::new(&node.url());
    let rep = bench::run(
        &api,
        &KeyPair::from_seed(DEV_KEY_SEED),
        bench::DEFAULT_ITERATIONS,
    )
    .map_err(|e| e.to_string())?;
    let names: Vec<&str> = rep.rows.iter().map(|r| r.feature.as_str()).collect();
    ensure!(names == FEATURES, "rows {names:?}");
    let well_formed = |s: &str| {
        s.strip_suffix(" ms")
            .and_then(|n| n.split_once('.'))
            .is_some_and(|(i, f)| {
                !i.is_empty()
                    && i.bytes().all(|b| b.is_ascii_digit())
                    && f.len() == 4
                    && f.bytes().all(|b| b.is_ascii_digit())
            })
    };
    ensure!(
        well_formed(&rep.overall_mean),
        "overall mean {:?}",
        rep.overall_mean
    );
    for r in &rep.rows {
        ensure!(
            r.mean_ms < BENCH_MAX_MEAN_MS,
            "{} mean {:.4} ms",
            r.feature,
            r.mean_ms
        );
    }
    let slowest = rep.rows.iter().map(|r| r.mean_ms).fold(0.0, f64::max);
    Ok(format!(
        "8 rows x {} iterations, overall {}, slowest {}",
        bench::DEFAULT_ITERATIONS,
        rep.overall_mean,
        bench::format_ms(slowest)
    ))
}

fn trail_completeness() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = NodeConfig::dev(dir.path());
    cfg.listen = "127.0.0.1:0".parse().unwrap();
    cfg.mining.enabled = false;
    let agent = KeyPair::from_seed("acceptance-agent");
    cfg.allocations
        .insert(agent.address(), Amount::new(10u128.pow(18)));
    let node = LocalNode::spawn(cfg).unwrap();
    let api = ApiClient::new(&node.url());
    let owner = KeyPair::from_seed(DEV_KEY_SEED);
    let run =
        |kp: &KeyPair, p: TxPayload| wallet::execute(&api, kp, p, now()).map_err(|e| e.to_string());

    let nonce = wallet::next_nonce(&api, &owner.address()).map_err(|e| e.to_string())?;
    let c = contract_address(&owner.address(), nonce);
    run(
        &owner,
        TxPayload::Deploy {
            min_fund_usd: Amount::usd(50),
        },
    )?;
    run(&owner, fund(c, NINETY_USD_WEI))?;
    run(&agent, TxPayload::Withdraw { contract: c })?;
    run(
        &owner,
        TxPayload::Grant {
            contract: c,
            grantee: agent.address(),
        },
    )?;
    run(&agent, TxPayload::Withdraw { contract: c })?;

    let body = api
        .get_text(&format!("/contracts/{c}/trail"))
        .map_err(|e| e.to_string())?;
    let events: Vec<TrailEvent> = body
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let got: Vec<(TrailKind, ExecStatus)> = events.iter().map(|e| (e.kind, e.status)).collect();
    let want = vec![
        (TrailKind::Deployed, ExecStatus::Success),
        (TrailKind::Funded, ExecStatus::Success),
        (TrailKind::Withdrawn, ExecStatus::UnauthorizedWithdrawer),
        (TrailKind::Granted, ExecStatus::Success),
        (TrailKind::Withdrawn, ExecStatus::Success),
    ];
    ensure!(got == want, "trail {got:?}");
    let denied = events
        .iter()
        .filter(|e| e.status == ExecStatus::UnauthorizedWithdrawer)
        .count();
    ensure!(denied == 1, "{denied} denied entries");
    ensure!(
        events.windows(2).all(|w| w[0].position() < w[1].position()),
        "entries out of order"
    );
    Ok("5 entries in order, 1 UNAUTHORIZED_WITHDRAWER".into())
}
