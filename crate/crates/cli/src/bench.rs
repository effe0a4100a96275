//! Per-feature response times against a running node.
//!
//! Each feature is timed end to end from request to response. Mutating
//! features include signing, submission, block production and the status
//! lookup, so they measure the time until the change is on chain.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use fundchain_core::contract::contract_address;
use fundchain_core::fx::min_wei_for_usd;
use fundchain_core::{Address, Amount, KeyPair, TxPayload};
use fundchain_node::api::{AccountInfo, BalanceInfo, HeadInfo, OwnerInfo, RatesInfo};

use crate::client::{ApiClient, CliError};
use crate::wallet::{self, Inclusion};

pub const DEFAULT_ITERATIONS: usize = 100;
pub const MIN_ITERATIONS: usize = 10;

pub const FEATURES: [&str; 8] = [
    "Owner check",
    "Owner's balance check",
    "Owner's withdrawal process",
    "Assign new owner",
    "Funding",
    "Currency convert in Dollar",
    "Currency Convert in Taka",
    "Get Contract Balance",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub feature: String,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Arithmetic mean of the row means.
    pub overall_mean_ms: f64,
    /// `overall_mean_ms` as printed, e.g. `8.3786 ms`.
    pub overall_mean: String,
    pub environment: String,
}

pub fn format_ms(ms: f64) -> String {
    format!("{ms:.4} ms")
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = (p * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

impl BenchRow {
    pub fn from_samples(feature: &str, samples: &[Duration]) -> Self {
        let mut v: Vec<f64> = samples.iter().copied().map(ms).collect();
        v.sort_by(f64::total_cmp);
        Self {
            feature: feature.to_string(),
            mean_ms: v.iter().sum::<f64>() / v.len() as f64,
            p50_ms: percentile(&v, 0.50),
            p95_ms: percentile(&v, 0.95),
            iterations: v.len(),
        }
    }
}

impl BenchReport {
    pub fn new(rows: Vec<BenchRow>, environment: String) -> Self {
        let overall = rows.iter().map(|r| r.mean_ms).sum::<f64>() / rows.len() as f64;
        Self {
            rows,
            overall_mean_ms: overall,
            overall_mean: format_ms(overall),
            environment,
        }
    }

    pub fn to_table(&self) -> String {
        let width = FEATURES.iter().map(|f| f.len()).max().unwrap_or(0).max(7);
        let mut out = format!(
            "{:<width$}  {:>12}  {:>12}  {:>12}  {:>10}\n",
            "Feature", "mean", "p50", "p95", "iterations"
        );
        for r in &self.rows {
            out += &format!(
                "{:<width$}  {:>12}  {:>12}  {:>12}  {:>10}\n",
                r.feature,
                format_ms(r.mean_ms),
                format_ms(r.p50_ms),
                format_ms(r.p95_ms),
                r.iterations
            );
        }
        out += &format!("{:<width$}  {:>12}\n", "Overall mean", self.overall_mean);
        out += &format!("environment: {}\n", self.environment);
        out
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T, CliError>) -> Result<(Duration, T), CliError> {
    let start = Instant::now();
    let v = f()?;
    Ok((start.elapsed(), v))
}

/// Runs every feature `iterations` times, serially, with `owner` paying.
/// The owner needs enough balance for `iterations` fundings of 90 USD plus gas.
pub fn run(api: &ApiClient, owner: &KeyPair, iterations: usize) -> Result<BenchReport, CliError> {
    if iterations < MIN_ITERATIONS {
        return Err(CliError::Usage(format!(
            "bench needs at least {MIN_ITERATIONS} iterations"
        )));
    }
    let now = Inclusion {
        mine: true,
        wait: Some(Duration::from_secs(30)),
    };
    let head: HeadInfo = api.get("/head")?;
    let rates: RatesInfo = api.get("/rates")?;
    let fund_wei = min_wei_for_usd(Amount::usd(90), &rates.table)
        .map_err(|e| CliError::Other(e.to_string()))?;

    // Setup, untimed: a fresh contract owned by `owner`.
    let deploy_nonce = wallet::next_nonce(api, &owner.address())?;
    let deployed = wallet::execute(
        api,
        owner,
        TxPayload::Deploy {
            min_fund_usd: Amount::usd(50),
        },
        now,
    )?;
    deployed.ensure_success()?;
    let contract = contract_address(&owner.address(), deploy_nonce);

    let mut samples: Vec<Vec<Duration>> = vec![Vec::with_capacity(iterations); FEATURES.len()];
    let run_id = head.height;
    for i in 0..iterations {
        let (d, _) = timed(|| api.get::<OwnerInfo>(&format!("/contracts/{contract}/owner")))?;
        samples[0].push(d);
        let (d, _) = timed(|| api.get::<AccountInfo>(&format!("/accounts/{}", owner.address())))?;
        samples[1].push(d);
        let (d, _) = timed(|| {
            let e = wallet::execute(api, owner, TxPayload::Withdraw { contract }, now)?;
            e.ensure_success()
        })?;
        samples[2].push(d);
        let grantee = grantee(run_id, i);
        let (d, _) = timed(|| {
            let e = wallet::execute(api, owner, TxPayload::Grant { contract, grantee }, now)?;
            e.ensure_success()
        })?;
        samples[3].push(d);
        let (d, _) = timed(|| {
            let payload = TxPayload::Fund {
                contract,
                amount: fund_wei,
                declared_fiat: Some(Amount::usd(90).tagged()),
            };
            wallet::execute(api, owner, payload, now)?.ensure_success()
        })?;
        samples[4].push(d);
        let (d, _) = timed(|| api.get::<RatesInfo>("/rates?amount=90&currency=usd"))?;
        samples[5].push(d);
        let (d, _) = timed(|| api.get::<RatesInfo>("/rates?amount=7650&currency=bdt"))?;
        samples[6].push(d);
        let (d, _) = timed(|| api.get::<BalanceInfo>(&format!("/contracts/{contract}/balance")))?;
        samples[7].push(d);
    }

    let rows = FEATURES
        .iter()
        .zip(&samples)
        .map(|(f, s)| BenchRow::from_samples(f, s))
        .collect();
    let env = format!(
        "{}/{}, {} cpu(s), node {}, difficulty {} bits, {} iterations per feature",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        api.base(),
        head.header.difficulty_bits,
        iterations
    );
    Ok(BenchReport::new(rows, env))
}

fn grantee(run: u64, i: usize) -> Address {
    KeyPair::from_seed(&format!("bench-grantee-{run}-{i}")).address()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_statistics() {
        let samples: Vec<Duration> = (1..=20).map(Duration::from_millis).collect();
        let r = BenchRow::from_samples("Funding", &samples);
        assert_eq!(r.iterations, 20);
        assert!((r.mean_ms - 10.5).abs() < 1e-9);
        assert_eq!(r.p50_ms, 10.0);
        assert_eq!(r.p95_ms, 19.0);
    }

    #[test]
    fn overall_is_mean_of_means() {
        let rows: Vec<_> = FEATURES
            .iter()
            .enumerate()
            .map(|(i, f)| BenchRow {
                feature: f.to_string(),
                mean_ms: i as f64 + 0.5,
                p50_ms: 0.0,
                p95_ms: 0.0,
                iterations: 10,
            })
            .collect();
        let rep = BenchReport::new(rows, String::new());
        assert!((rep.overall_mean_ms - 4.0).abs() < 1e-12);
        assert_eq!(rep.overall_mean, "4.0000 ms");
        assert!(rep.to_table().contains("Overall mean"));
    }

    #[test]
    fn formats_four_decimals() {
        assert_eq!(format_ms(8.37864), "8.3786 ms");
        assert_eq!(format_ms(0.5), "0.5000 ms");
    }
}
