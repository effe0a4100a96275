//! Exact-rational currency conversion: BDT → USD → wei.
//!
//! Every rate is a reduced fraction of `u128`s. Conversions compute
//! `floor(amount × num / den)` through a 256-bit intermediate, so the only
//! failure mode is a result that does not fit back into `u128`.

use std::path::PathBuf;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use ethnum::U256;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::amount::{Amount, CentiBdt, MicroUsd, TaggedAmount, Unit, Wei};

/// Wei per 90 USD in the fixture: the pair `90 USD → 25106073159097186 wei`
/// reproduces exactly.
pub const FIXTURE_WEI_PER_90_USD: u128 = 25_106_073_159_097_186;
/// Fixture BDT per USD.
pub const FIXTURE_BDT_PER_USD: u128 = 85;
/// Environment variable that switches the rate source to an HTTP provider.
pub const RATES_URL_ENV: &str = "FUNDCHAIN_RATES_URL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FxError {
    #[error("conversion overflow")]
    Overflow,
    #[error("rate denominator is zero")]
    ZeroDenominator,
    #[error("rate numerator is zero")]
    ZeroNumerator,
    #[error("expected rate {expected_from}->{expected_to}, got {from}->{to}")]
    WrongPair {
        expected_from: Unit,
        expected_to: Unit,
        from: Unit,
        to: Unit,
    },
    #[error("malformed rate record {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("rates file: {0}")]
    Io(String),
    #[error("missing rate {from}->{to}")]
    MissingPair { from: Unit, to: Unit },
    #[error("rate provider unreachable and no cached table: {0}")]
    ProviderUnavailable(String),
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `floor(amount × num / den)` with a 256-bit intermediate.
fn mul_div_floor(amount: u128, num: u128, den: u128) -> Result<u128, FxError> {
    if den == 0 {
        return Err(FxError::ZeroDenominator);
    }
    let q = U256::from(amount) * U256::from(num) / U256::from(den);
    u128::try_from(q).map_err(|_| FxError::Overflow)
}

/// One `from` base unit is worth `num / den` `to` base units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub from: Unit,
    pub to: Unit,
    #[serde(with = "crate::amount::u128_string")]
    pub num: u128,
    #[serde(with = "crate::amount::u128_string")]
    pub den: u128,
}

impl Rate {
    /// Builds a rate in lowest terms.
    pub fn new(from: Unit, to: Unit, num: u128, den: u128) -> Result<Self, FxError> {
        if den == 0 {
            return Err(FxError::ZeroDenominator);
        }
        if num == 0 {
            return Err(FxError::ZeroNumerator);
        }
        let g = gcd(num, den);
        Ok(Self {
            from,
            to,
            num: num / g,
            den: den / g,
        })
    }

    pub fn apply(&self, amount: u128) -> Result<u128, FxError> {
        mul_div_floor(amount, self.num, self.den)
    }

    /// The inverse valuation `floor(amount × den / num)`.
    pub fn apply_inverse(&self, amount: u128) -> Result<u128, FxError> {
        mul_div_floor(amount, self.den, self.num)
    }

    fn expect_pair(self, from: Unit, to: Unit) -> Result<Self, FxError> {
        if self.from != from || self.to != to {
            return Err(FxError::WrongPair {
                expected_from: from,
                expected_to: to,
                from: self.from,
                to: self.to,
            });
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RateSource {
    Fixture,
    File,
    HttpProvider,
}

/// An immutable snapshot of both conversion rates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateTable {
    /// Micro-USD → wei.
    pub wei_per_usd: Rate,
    /// Centi-BDT → micro-USD.
    pub usd_per_bdt: Rate,
    pub source: RateSource,
    /// Unix seconds.
    pub fetched_at: u64,
    /// Set when an HTTP provider failed and this is the last cached table.
    #[serde(default)]
    pub stale: bool,
}

impl RateTable {
    pub fn fixture() -> Self {
        Self {
            // 1 micro-USD = 25106073159097186 / 90_000_000 wei.
            wei_per_usd: Rate::new(
                Unit::MicroUsd,
                Unit::Wei,
                FIXTURE_WEI_PER_90_USD,
                90 * 1_000_000,
            )
            .expect("fixture rate"),
            // 1 centi-BDT = 1_000_000 / (85 × 100) micro-USD.
            usd_per_bdt: Rate::new(
                Unit::CentiBdt,
                Unit::MicroUsd,
                1_000_000,
                FIXTURE_BDT_PER_USD * 100,
            )
            .expect("fixture rate"),
            source: RateSource::Fixture,
            fetched_at: 0,
            stale: false,
        }
    }

    pub fn new(
        wei_per_usd: Rate,
        usd_per_bdt: Rate,
        source: RateSource,
        fetched_at: u64,
    ) -> Result<Self, FxError> {
        Ok(Self {
            wei_per_usd: wei_per_usd.expect_pair(Unit::MicroUsd, Unit::Wei)?,
            usd_per_bdt: usd_per_bdt.expect_pair(Unit::CentiBdt, Unit::MicroUsd)?,
            source,
            fetched_at,
            stale: false,
        })
    }

    /// The table as rate-file records.
    pub fn records(&self) -> Vec<RateRecord> {
        [self.wei_per_usd, self.usd_per_bdt]
            .into_iter()
            .map(|r| RateRecord {
                from: r.from,
                to: r.to,
                num: r.num,
                den: r.den,
            })
            .collect()
    }
}

pub fn usd_to_wei(amount: Amount<MicroUsd>, table: &RateTable) -> Result<Amount<Wei>, FxError> {
    table.wei_per_usd.apply(amount.value()).map(Amount::new)
}

pub fn bdt_to_usd(
    amount: Amount<CentiBdt>,
    table: &RateTable,
) -> Result<Amount<MicroUsd>, FxError> {
    table.usd_per_bdt.apply(amount.value()).map(Amount::new)
}

/// USD value of a wei amount, rounded down.
pub fn wei_to_usd(amount: Amount<Wei>, table: &RateTable) -> Result<Amount<MicroUsd>, FxError> {
    table
        .wei_per_usd
        .apply_inverse(amount.value())
        .map(Amount::new)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversion {
    pub input: TaggedAmount,
    pub usd_leg: Amount<MicroUsd>,
    pub wei: Amount<Wei>,
}

/// Runs the conversion pipeline for any input unit. BDT is floored to
/// micro-USD first, then to wei; wei passes through with its USD valuation.
pub fn convert_to_wei(amount: TaggedAmount, table: &RateTable) -> Result<Conversion, FxError> {
    let (usd_leg, wei) = match amount.unit {
        Unit::CentiBdt => {
            let usd = bdt_to_usd(Amount::new(amount.value), table)?;
            (usd, usd_to_wei(usd, table)?)
        }
        Unit::MicroUsd => {
            let usd = Amount::new(amount.value);
            (usd, usd_to_wei(usd, table)?)
        }
        Unit::Wei => {
            let wei = Amount::new(amount.value);
            (wei_to_usd(wei, table)?, wei)
        }
    };
    Ok(Conversion {
        input: amount,
        usd_leg,
        wei,
    })
}

/// Whether `amount_wei` is worth at least `min_usd`, by exact
/// cross-multiplication: `amount × den ≥ min × num`.
pub fn meets_minimum(
    amount_wei: Amount<Wei>,
    min_usd: Amount<MicroUsd>,
    table: &RateTable,
) -> bool {
    let rate = &table.wei_per_usd;
    U256::from(amount_wei.value()) * U256::from(rate.den)
        >= U256::from(min_usd.value()) * U256::from(rate.num)
}

/// Smallest wei amount worth at least `usd`.
pub fn min_wei_for_usd(usd: Amount<MicroUsd>, table: &RateTable) -> Result<Amount<Wei>, FxError> {
    let rate = &table.wei_per_usd;
    let n = U256::from(usd.value()) * U256::from(rate.num);
    let q = (n + U256::from(rate.den) - 1) / U256::from(rate.den);
    u128::try_from(q)
        .map(Amount::new)
        .map_err(|_| FxError::Overflow)
}

/// One record of a rates file or provider response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateRecord {
    pub from: Unit,
    pub to: Unit,
    #[serde(with = "flexible_u128")]
    pub num: u128,
    #[serde(with = "flexible_u128")]
    pub den: u128,
}

/// Builds a table from records; every rate is reduced to lowest terms.
pub fn table_from_records(
    records: &[serde_json::Value],
    source: RateSource,
    fetched_at: u64,
) -> Result<RateTable, FxError> {
    let mut wei_per_usd = None;
    let mut usd_per_bdt = None;
    for (index, raw) in records.iter().enumerate() {
        let malformed = |reason: String| FxError::MalformedRecord { index, reason };
        let rec: RateRecord =
            serde_json::from_value(raw.clone()).map_err(|e| malformed(e.to_string()))?;
        let rate =
            Rate::new(rec.from, rec.to, rec.num, rec.den).map_err(|e| malformed(e.to_string()))?;
        match (rec.from, rec.to) {
            (Unit::MicroUsd, Unit::Wei) => wei_per_usd = Some(rate),
            (Unit::CentiBdt, Unit::MicroUsd) => usd_per_bdt = Some(rate),
            (from, to) => return Err(malformed(format!("unsupported pair {from}->{to}"))),
        }
    }
    let wei_per_usd = wei_per_usd.ok_or(FxError::MissingPair {
        from: Unit::MicroUsd,
        to: Unit::Wei,
    })?;
    let usd_per_bdt = usd_per_bdt.ok_or(FxError::MissingPair {
        from: Unit::CentiBdt,
        to: Unit::MicroUsd,
    })?;
    RateTable::new(wei_per_usd, usd_per_bdt, source, fetched_at)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSourceConfig {
    #[default]
    Fixture,
    File {
        path: PathBuf,
    },
    Http {
        url: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    2_000
}

impl RateSourceConfig {
    /// Replaces the source with an HTTP provider when [`RATES_URL_ENV`] is set.
    pub fn with_env_override(self) -> Self {
        match std::env::var(RATES_URL_ENV) {
            Ok(url) if !url.is_empty() => RateSourceConfig::Http {
                url,
                timeout_ms: default_timeout_ms(),
            },
            _ => self,
        }
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}

/// Loads rate tables and remembers the last good one for provider fallback.
#[derive(Debug, Default)]
pub struct RateLoader {
    cached: Option<RateTable>,
}

impl RateLoader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cache(table: RateTable) -> Self {
        Self {
            cached: Some(table),
        }
    }

    pub fn cached(&self) -> Option<&RateTable> {
        self.cached.as_ref()
    }

    pub fn load(&mut self, source: &RateSourceConfig) -> Result<RateTable, FxError> {
        let table = match source {
            RateSourceConfig::Fixture => RateTable::fixture(),
            RateSourceConfig::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| FxError::Io(format!("{}: {e}", path.display())))?;
                let records: Vec<serde_json::Value> =
                    serde_json::from_str(&text).map_err(|e| FxError::Io(e.to_string()))?;
                table_from_records(&records, RateSource::File, now_secs())?
            }
            RateSourceConfig::Http { url, timeout_ms } => {
                match fetch_records(url, Duration::from_millis(*timeout_ms)) {
                    Ok(records) => {
                        table_from_records(&records, RateSource::HttpProvider, now_secs())?
                    }
                    Err(reason) => {
                        return match &self.cached {
                            Some(cached) => {
                                warn!(%url, %reason, "rate provider failed, serving cached table");
                                Ok(RateTable {
                                    stale: true,
                                    ..cached.clone()
                                })
                            }
                            None => Err(FxError::ProviderUnavailable(reason)),
                        };
                    }
                }
            }
        };
        self.cached = Some(table.clone());
        Ok(table)
    }
}

pub fn load_rates(source: &RateSourceConfig) -> Result<RateTable, FxError> {
    RateLoader::new().load(source)
}

fn fetch_records(url: &str, timeout: Duration) -> Result<Vec<serde_json::Value>, String> {
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let resp = agent.get(url).call().map_err(|e| e.to_string())?;
    resp.into_json::<Vec<serde_json::Value>>()
        .map_err(|e| e.to_string())
}

/// Accepts a `u128` as a JSON integer or a decimal string.
mod flexible_u128 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(u128::from)
                .ok_or_else(|| D::Error::custom(format!("not an unsigned integer: {n}"))),
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            other => Err(D::Error::custom(format!("expected integer, got {other}"))),
        }
    }
}
