//! Rate table served by `/rates`, and the currency flag shared with the CLI.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use fundchain_core::amount::AmountError;
use fundchain_core::fx::{FxError, RateLoader};
use fundchain_core::{RateSourceConfig, RateTable, TaggedAmount, Unit};

/// How long an HTTP-provider table is reused before refetching.
const PROVIDER_TTL: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Currency {
    Bdt,
    Usd,
    Wei,
}

impl Currency {
    /// `bdt` and `usd` take whole-unit decimals (`90`, `7650.25`); `wei`
    /// takes an integer count of wei.
    pub fn parse_amount(self, s: &str) -> Result<TaggedAmount, AmountError> {
        match self {
            Currency::Bdt => TaggedAmount::parse_whole(s, Unit::CentiBdt),
            Currency::Usd => TaggedAmount::parse_whole(s, Unit::MicroUsd),
            Currency::Wei => {
                if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(AmountError::Parse(s.to_string()));
                }
                let value = s.parse::<u128>().map_err(|_| AmountError::Overflow)?;
                Ok(TaggedAmount::new(value, Unit::Wei))
            }
        }
    }
}

impl FromStr for Currency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bdt" => Ok(Currency::Bdt),
            "usd" => Ok(Currency::Usd),
            "wei" => Ok(Currency::Wei),
            other => Err(format!(
                "unknown currency {other:?}, expected bdt, usd or wei"
            )),
        }
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Currency::Bdt => "bdt",
            Currency::Usd => "usd",
            Currency::Wei => "wei",
        })
    }
}

#[derive(Debug)]
pub struct RateService {
    source: RateSourceConfig,
    inner: Mutex<(RateLoader, Option<(Instant, RateTable)>)>,
}

impl RateService {
    pub fn new(source: RateSourceConfig) -> Self {
        Self {
            source,
            inner: Mutex::new((RateLoader::new(), None)),
        }
    }

    pub fn source(&self) -> &RateSourceConfig {
        &self.source
    }

    /// Current table. Blocks while an HTTP provider is queried.
    pub fn current(&self) -> Result<RateTable, FxError> {
        let mut guard = self.inner.lock();
        let (loader, last) = &mut *guard;
        if let (RateSourceConfig::Http { .. }, Some((at, table))) = (&self.source, &*last) {
            if at.elapsed() < PROVIDER_TTL && !table.stale {
                return Ok(table.clone());
            }
        }
        let table = loader.load(&self.source)?;
        *last = Some((Instant::now(), table.clone()));
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_amounts_per_currency() {
        assert_eq!(
            Currency::Usd.parse_amount("90").unwrap(),
            TaggedAmount::new(90_000_000, Unit::MicroUsd)
        );
        assert_eq!(
            Currency::Bdt.parse_amount("7650.5").unwrap(),
            TaggedAmount::new(765_050, Unit::CentiBdt)
        );
        assert_eq!(
            Currency::Wei.parse_amount("25106073159097186").unwrap(),
            TaggedAmount::new(25_106_073_159_097_186, Unit::Wei)
        );
        assert!(Currency::Wei.parse_amount("1.5").is_err());
        assert!(Currency::Usd.parse_amount("0.0000001").is_err());
        assert_eq!("USD".parse::<Currency>().unwrap(), Currency::Usd);
        assert!("eth".parse::<Currency>().is_err());
    }

    #[test]
    fn fixture_source() {
        let svc = RateService::new(RateSourceConfig::Fixture);
        assert_eq!(svc.current().unwrap(), RateTable::fixture());
    }
}
