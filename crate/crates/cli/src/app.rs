//! Command-line interface.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use fundchain_core::contract::contract_address;
use fundchain_core::fx::convert_to_wei;
use fundchain_core::{Address, Amount, Digest, KeyPair, TaggedAmount, TxPayload, Unit};
use fundchain_netsim::{attack_trials, Scenario, SimConfig};
use fundchain_node::api::{
    AccountInfo, BalanceInfo, FundedInfo, OwnerInfo, RatesInfo, ReceiptInfo,
};
use fundchain_node::{Currency, LocalNode, NodeConfig, DEV_KEY_SEED};

use crate::bench;
use crate::client::{ApiClient, CliError};
use crate::keys;
use crate::wallet::{self, Executed, Inclusion};

pub const DEFAULT_NODE_URL: &str = "http://127.0.0.1:8545";
pub const DEFAULT_KEY_FILE: &str = "fundchain-key.json";

#[derive(Debug, Parser)]
#[command(
    name = "fundchain",
    version,
    about = "Operate fund contracts on a fundchain node"
)]
pub struct Cli {
    /// Node base URL [default: http://127.0.0.1:8545]
    #[arg(long, env = "FUNDCHAIN_NODE_URL", global = true)]
    pub node_url: Option<String>,
    /// Key file used to sign transactions [default: fundchain-key.json]
    #[arg(long, env = "FUNDCHAIN_KEY_FILE", global = true)]
    pub key_file: Option<PathBuf>,
    /// JSON file with `node_url` and `key_file` defaults.
    #[arg(long, env = "FUNDCHAIN_CLI_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct WaitArgs {
    /// Ask the node to produce a block immediately after submitting.
    #[arg(long)]
    pub mine: bool,
    /// Return once the node accepts the transaction.
    #[arg(long, conflicts_with = "mine")]
    pub no_wait: bool,
    /// Seconds to wait for the transaction to be mined.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

impl WaitArgs {
    fn inclusion(self) -> Inclusion {
        Inclusion {
            mine: self.mine,
            wait: (!self.no_wait).then(|| Duration::from_secs(self.timeout)),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a key file.
    Keygen {
        /// Derive the key from a seed phrase instead of randomness.
        #[arg(long, conflicts_with = "dev")]
        seed: Option<String>,
        /// Write the well-known dev key (funded on dev nodes).
        #[arg(long)]
        dev: bool,
        #[arg(long)]
        force: bool,
    },
    /// Deploy a fund contract owned by this key.
    Deploy {
        /// Minimum funding per transaction, in USD.
        #[arg(long, default_value = "50")]
        min_usd: String,
        #[command(flatten)]
        wait: WaitArgs,
    },
    /// Fund a contract; the amount is converted to wei before signing.
    Fund {
        contract: Address,
        #[arg(long)]
        amount: String,
        #[arg(long, default_value = "usd")]
        currency: Currency,
        #[command(flatten)]
        wait: WaitArgs,
    },
    /// Withdraw a contract's whole balance.
    Withdraw {
        contract: Address,
        #[command(flatten)]
        wait: WaitArgs,
    },
    /// Allow another address to withdraw.
    Grant {
        contract: Address,
        grantee: Address,
        #[command(flatten)]
        wait: WaitArgs,
    },
    /// Remove a withdrawal grant.
    Revoke {
        contract: Address,
        target: Address,
        #[command(flatten)]
        wait: WaitArgs,
    },
    /// Print a contract's owner.
    Owner { contract: Address },
    /// Print a contract's balance, or this key's balance without a contract.
    Balance { contract: Option<Address> },
    /// Print how much an address has paid into a contract.
    Funded {
        contract: Address,
        /// Defaults to this key's address.
        #[arg(long)]
        funder: Option<Address>,
    },
    /// Print a contract's audit trail, one JSON event per line.
    Trail { contract: Address },
    /// Receipt documents.
    Receipt {
        #[command(subcommand)]
        command: ReceiptCommand,
    },
    /// Produce a block now.
    Mine,
    /// Network simulations.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Time each feature against a node.
    Bench {
        #[arg(long, default_value_t = bench::DEFAULT_ITERATIONS)]
        iterations: usize,
        /// Run against a throwaway in-process dev node instead of --node-url.
        #[arg(long)]
        spawn: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReceiptCommand {
    /// Upload a file to the node's receipt store.
    Put { file: PathBuf },
    /// Download a stored receipt.
    Get {
        hash: Digest,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record a stored receipt on a contract.
    Attach {
        contract: Address,
        hash: Digest,
        #[arg(long, default_value = "")]
        memo: String,
        #[command(flatten)]
        wait: WaitArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Run one scenario: a name (honest_convergence, double_spend_attack,
    /// partition_heal) or a JSON config file.
    Run {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Repeat a double-spend scenario over this many seeds and report
        /// the success fraction.
        #[arg(long)]
        trials: Option<u64>,
        /// Include the event transcript in JSON output.
        #[arg(long)]
        transcript: bool,
    },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub node_url: Option<String>,
    pub key_file: Option<PathBuf>,
}

struct Ctx {
    api: ApiClient,
    key_file: PathBuf,
    json: bool,
}

impl Ctx {
    fn key(&self) -> Result<KeyPair, CliError> {
        keys::load(&self.key_file)
    }

    fn emit(&self, human: impl AsRef<str>, value: serde_json::Value) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
        } else {
            let h = human.as_ref();
            if h.ends_with('\n') {
                print!("{h}");
            } else {
                println!("{h}");
            }
        }
    }
}

fn ratio(used: u64, limit: u64) -> String {
    format!("{used} ({:.2}%)", used as f64 * 100.0 / limit as f64)
}

/// Human lines and JSON for an executed transaction.
fn report(ctx: &Ctx, e: &Executed, mut extra: serde_json::Value, mut human: String) {
    human += &format!("tx id:    {}\n", e.tx_id);
    let mut v = json!({ "tx_id": e.tx_id });
    match &e.status {
        Some(s) => {
            let o = s.outcome.as_ref().expect("included tx has an outcome");
            human += &format!(
                "status:   {} (block {})\ngas used: {}\n",
                o.status,
                s.height.unwrap_or_default(),
                ratio(o.gas_used, e.tx.gas_limit)
            );
            v["state"] = json!("INCLUDED");
            v["height"] = json!(s.height);
            v["status"] = json!(o.status);
            v["gas_used"] = json!(o.gas_used);
            v["gas_limit"] = json!(e.tx.gas_limit);
            v["fee"] = json!(o.fee);
        }
        None => {
            human += "status:   PENDING\n";
            v["state"] = json!("PENDING");
        }
    }
    if let Some(obj) = extra.as_object_mut() {
        for (k, val) in obj.iter_mut() {
            v[k] = val.take();
        }
    }
    ctx.emit(human, v);
}

fn mutate(
    ctx: &Ctx,
    payload: TxPayload,
    wait: WaitArgs,
    extra: serde_json::Value,
    human: String,
) -> Result<(), CliError> {
    let kp = ctx.key()?;
    let e = wallet::execute(&ctx.api, &kp, payload, wait.inclusion())?;
    report(ctx, &e, extra, human);
    e.ensure_success()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file_cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<CliConfig>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => CliConfig::default(),
    };
    let node_url = cli
        .node_url
        .or(file_cfg.node_url)
        .unwrap_or_else(|| DEFAULT_NODE_URL.to_string());
    let ctx = Ctx {
        api: ApiClient::new(&node_url),
        key_file: cli
            .key_file
            .or(file_cfg.key_file)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_KEY_FILE)),
        json: cli.json,
    };

    match cli.command {
        Command::Keygen { seed, dev, force } => {
            let kp = match (seed, dev) {
                (Some(s), _) => KeyPair::from_seed(&s),
                (None, true) => KeyPair::from_seed(DEV_KEY_SEED),
                (None, false) => KeyPair::generate(),
            };
            keys::save(&ctx.key_file, &kp, force)?;
            ctx.emit(
                format!("address:  {}\nkey file: {}", kp.address(), ctx.key_file.display()),
                json!({ "address": kp.address(), "public_key": kp.public_key(), "key_file": ctx.key_file }),
            );
            Ok(())
        }
        Command::Deploy { min_usd, wait } => {
            let min_fund_usd: Amount<fundchain_core::MicroUsd> =
                TaggedAmount::parse_whole(&min_usd, Unit::MicroUsd)
                    .and_then(|t| t.typed())
                    .map_err(|e| CliError::Usage(format!("--min-usd: {e}")))?;
            let kp = ctx.key()?;
            let nonce = wallet::next_nonce(&ctx.api, &kp.address())?;
            let contract = contract_address(&kp.address(), nonce);
            mutate(
                &ctx,
                TxPayload::Deploy { min_fund_usd },
                wait,
                json!({ "contract": contract, "owner": kp.address() }),
                format!("contract: {contract}\nowner:    {}\n", kp.address()),
            )
        }
        Command::Fund {
            contract,
            amount,
            currency,
            wait,
        } => {
            let input = currency
                .parse_amount(&amount)
                .map_err(|e| CliError::Usage(format!("--amount: {e}")))?;
            let rates: RatesInfo = ctx.api.get("/rates")?;
            let conv =
                convert_to_wei(input, &rates.table).map_err(|e| CliError::Usage(e.to_string()))?;
            let human = format!(
                "amount:   {amount} {}\nusd_leg:  {} USD\nwei:      {} ({})\n",
                currency.to_string().to_uppercase(),
                conv.usd_leg.to_decimal_string(),
                conv.wei.value(),
                conv.wei.to_decimal_string()
            );
            // Show the conversion before the transaction goes out.
            if !ctx.json {
                print!("{human}");
            }
            let declared_fiat = (input.unit != Unit::Wei).then_some(input);
            mutate(
                &ctx,
                TxPayload::Fund {
                    contract,
                    amount: conv.wei,
                    declared_fiat,
                },
                wait,
                json!({ "conversion": conv, "contract": contract }),
                String::new(),
            )
        }
        Command::Withdraw { contract, wait } => mutate(
            &ctx,
            TxPayload::Withdraw { contract },
            wait,
            json!({}),
            String::new(),
        ),
        Command::Grant {
            contract,
            grantee,
            wait,
        } => mutate(
            &ctx,
            TxPayload::Grant { contract, grantee },
            wait,
            json!({}),
            String::new(),
        ),
        Command::Revoke {
            contract,
            target,
            wait,
        } => mutate(
            &ctx,
            TxPayload::Revoke { contract, target },
            wait,
            json!({}),
            String::new(),
        ),
        Command::Owner { contract } => {
            let o: OwnerInfo = ctx.api.get(&format!("/contracts/{contract}/owner"))?;
            ctx.emit(o.owner.to_string(), json!(o));
            Ok(())
        }
        Command::Balance {
            contract: Some(contract),
        } => {
            let b: BalanceInfo = ctx.api.get(&format!("/contracts/{contract}/balance"))?;
            ctx.emit(
                format!(
                    "{} wei ({}), about {} USD",
                    b.balance.value(),
                    b.display,
                    b.usd.to_decimal_string()
                ),
                json!(b),
            );
            Ok(())
        }
        Command::Balance { contract: None } => {
            let addr = ctx.key()?.address();
            let a = match ctx.api.get::<AccountInfo>(&format!("/accounts/{addr}")) {
                Ok(a) => a,
                Err(e) if e.is_not_found() => AccountInfo {
                    address: addr,
                    balance: Amount::ZERO,
                    nonce: 0,
                    next_nonce: 0,
                },
                Err(e) => return Err(e),
            };
            ctx.emit(
                format!(
                    "{} wei ({})",
                    a.balance.value(),
                    a.balance.to_decimal_string()
                ),
                json!(a),
            );
            Ok(())
        }
        Command::Funded { contract, funder } => {
            let funder = match funder {
                Some(f) => f,
                None => ctx.key()?.address(),
            };
            let f: FundedInfo = ctx
                .api
                .get(&format!("/contracts/{contract}/funded/{funder}"))?;
            ctx.emit(
                format!(
                    "{} wei ({})",
                    f.amount.value(),
                    f.amount.to_decimal_string()
                ),
                json!(f),
            );
            Ok(())
        }
        Command::Trail { contract } => {
            // Verbatim: identical bytes to the API response.
            let body = ctx.api.get_text(&format!("/contracts/{contract}/trail"))?;
            print!("{body}");
            Ok(())
        }
        Command::Receipt { command } => receipt(&ctx, command),
        Command::Mine => {
            let m = wallet::mine(&ctx.api)?;
            ctx.emit(
                format!(
                    "block {} {} ({} transactions)",
                    m.height, m.hash, m.tx_count
                ),
                json!(m),
            );
            Ok(())
        }
        Command::Sim { command } => sim(&ctx, command),
        Command::Bench {
            iterations,
            spawn,
            out,
        } => run_bench(&ctx, iterations, spawn, out.as_deref()),
    }
}

fn receipt(ctx: &Ctx, command: ReceiptCommand) -> Result<(), CliError> {
    match command {
        ReceiptCommand::Put { file } => {
            let bytes = std::fs::read(&file)?;
            let r: ReceiptInfo = ctx.api.post_bytes("/receipts", &bytes)?;
            ctx.emit(r.content_hash.to_string(), json!(r));
            Ok(())
        }
        ReceiptCommand::Get { hash, out } => {
            let bytes = ctx.api.get_bytes(&format!("/receipts/{hash}"))?;
            match out {
                Some(p) => std::fs::write(p, bytes)?,
                None => std::io::Write::write_all(&mut std::io::stdout(), &bytes)?,
            }
            Ok(())
        }
        ReceiptCommand::Attach {
            contract,
            hash,
            memo,
            wait,
        } => mutate(
            ctx,
            TxPayload::AttachReceipt {
                contract,
                content_hash: hash,
                memo,
            },
            wait,
            json!({}),
            String::new(),
        ),
    }
}

fn sim(ctx: &Ctx, command: SimCommand) -> Result<(), CliError> {
    let SimCommand::Run {
        scenario,
        seed,
        trials,
        transcript,
    } = command;
    let mut cfg = if Path::new(&scenario).is_file() {
        let text = std::fs::read_to_string(&scenario)?;
        SimConfig::from_json(&text).map_err(|e| CliError::Usage(format!("{scenario}: {e}")))?
    } else {
        let s: Scenario = scenario
            .parse()
            .map_err(|e: fundchain_netsim::ConfigError| CliError::Usage(e.to_string()))?;
        SimConfig::for_scenario(s, seed.unwrap_or(1))
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.keep_transcript = transcript;

    if let Some(trials) = trials {
        let s = attack_trials(&cfg, trials).map_err(|e| CliError::Usage(e.to_string()))?;
        ctx.emit(
            format!(
                "adversary share {:.2}: {} of {} attacks succeeded ({:.3})",
                s.share_ppm as f64 / 1e6,
                s.successes,
                s.trials,
                s.fraction
            ),
            json!(s),
        );
        return Ok(());
    }

    let r = fundchain_netsim::run(cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut human = format!(
        "scenario:   {:?}\nseed:       {}\nconverged:  {}\nconserved:  {}\nmessages:   {} sent, {} dropped\nrejected:   {} blocks\nsim time:   {} ms\ntranscript: {}\n",
        r.scenario,
        r.seed,
        r.converged,
        r.conserved,
        r.messages_sent,
        r.messages_dropped,
        r.blocks_rejected,
        r.end_time_ms,
        r.transcript_digest
    );
    if let Some(ok) = r.attack_succeeded {
        human += &format!("attack:     {}\n", if ok { "succeeded" } else { "failed" });
    }
    for n in &r.nodes {
        human += &format!(
            "node {}: height {} head {} mined {}\n",
            n.id, n.height, n.head_hash, n.blocks_mined
        );
    }
    ctx.emit(human, json!(r));
    Ok(())
}

fn run_bench(
    ctx: &Ctx,
    iterations: usize,
    spawn: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let report = if spawn {
        let dir = tempfile::tempdir()?;
        let mut cfg = NodeConfig::dev(dir.path());
        cfg.listen = "127.0.0.1:0".parse().expect("literal");
        cfg.mining.enabled = false;
        let node = LocalNode::spawn(cfg).map_err(|e| CliError::Other(e.to_string()))?;
        bench::run(
            &ApiClient::new(&node.url()),
            &KeyPair::from_seed(DEV_KEY_SEED),
            iterations,
        )?
    } else {
        bench::run(&ctx.api, &ctx.key()?, iterations)?
    };
    if let Some(p) = out {
        std::fs::write(
            p,
            serde_json::to_string_pretty(&report).expect("json") + "\n",
        )?;
    }
    ctx.emit(report.to_table(), json!(report));
    Ok(())
}
