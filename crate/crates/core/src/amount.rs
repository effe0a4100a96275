//! Integer fixed-point money.
//!
//! An [`Amount`] carries its unit in the type, so adding wei to micro-USD does
//! not compile. [`TaggedAmount`] carries the unit at runtime for places where
//! the unit is data (a funder's declared fiat input, CLI arguments).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::marker::PhantomData;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::codec::{Decode, DecodeError, Encode, Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Unit {
    /// 10^-18 of one crypto coin.
    Wei,
    /// 10^-6 USD.
    MicroUsd,
    /// 10^-2 BDT.
    CentiBdt,
}

impl Unit {
    pub fn tag(self) -> u8 {
        match self {
            Unit::Wei => 0,
            Unit::MicroUsd => 1,
            Unit::CentiBdt => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        match tag {
            0 => Ok(Unit::Wei),
            1 => Ok(Unit::MicroUsd),
            2 => Ok(Unit::CentiBdt),
            tag => Err(DecodeError::InvalidTag { what: "unit", tag }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Wei => "WEI",
            Unit::MicroUsd => "MICRO_USD",
            Unit::CentiBdt => "CENTI_BDT",
        }
    }

    /// Number of decimal places between the whole unit and this base unit.
    pub fn decimals(self) -> u32 {
        match self {
            Unit::Wei => 18,
            Unit::MicroUsd => 6,
            Unit::CentiBdt => 2,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Type-level unit marker.
pub trait Currency: Copy + Default + fmt::Debug + Send + Sync + 'static {
    const UNIT: Unit;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Wei;
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroUsd;
#[derive(Debug, Clone, Copy, Default)]
pub struct CentiBdt;

impl Currency for Wei {
    const UNIT: Unit = Unit::Wei;
}
impl Currency for MicroUsd {
    const UNIT: Unit = Unit::MicroUsd;
}
impl Currency for CentiBdt {
    const UNIT: Unit = Unit::CentiBdt;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("amount overflow")]
    Overflow,
    #[error("amount underflow")]
    Underflow,
    #[error("unit mismatch: expected {expected}, got {actual}")]
    UnitMismatch { expected: Unit, actual: Unit },
    #[error("invalid decimal amount: {0}")]
    Parse(String),
}

pub struct Amount<U> {
    value: u128,
    unit: PhantomData<U>,
}

impl<U: Currency> Amount<U> {
    pub const ZERO: Self = Self::new(0);

    pub const fn new(value: u128) -> Self {
        Self {
            value,
            unit: PhantomData,
        }
    }

    pub const fn value(self) -> u128 {
        self.value
    }

    pub fn unit(self) -> Unit {
        U::UNIT
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, AmountError> {
        self.value
            .checked_add(rhs.value)
            .map(Self::new)
            .ok_or(AmountError::Overflow)
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, AmountError> {
        self.value
            .checked_sub(rhs.value)
            .map(Self::new)
            .ok_or(AmountError::Underflow)
    }

    pub fn checked_mul(self, factor: u128) -> Result<Self, AmountError> {
        self.value
            .checked_mul(factor)
            .map(Self::new)
            .ok_or(AmountError::Overflow)
    }

    pub fn tagged(self) -> TaggedAmount {
        TaggedAmount {
            value: self.value,
            unit: U::UNIT,
        }
    }

    /// Parses a whole-unit decimal such as `"90"` or `"76.50"` into base units.
    pub fn from_decimal_str(s: &str) -> Result<Self, AmountError> {
        parse_decimal(s, U::UNIT.decimals()).map(Self::new)
    }

    /// Renders in whole units with all base-unit decimals, e.g. wei as
    /// `0.025106073159097186`.
    pub fn to_decimal_string(self) -> String {
        format_decimal(self.value, U::UNIT.decimals())
    }
}

impl Amount<MicroUsd> {
    pub const fn usd(whole: u128) -> Self {
        Self::new(whole * 1_000_000)
    }
}

impl Amount<CentiBdt> {
    pub const fn bdt(whole: u128) -> Self {
        Self::new(whole * 100)
    }
}

// Manual impls: derives would put bounds on the marker type.
impl<U> Clone for Amount<U> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<U> Copy for Amount<U> {}
impl<U> PartialEq for Amount<U> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}
impl<U> Eq for Amount<U> {}
impl<U> PartialOrd for Amount<U> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<U> Ord for Amount<U> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.cmp(&other.value)
    }
}
impl<U> Hash for Amount<U> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.value.hash(state);
    }
}
impl<U: Currency> Default for Amount<U> {
    fn default() -> Self {
        Self::ZERO
    }
}

impl<U: Currency> fmt::Debug for Amount<U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, U::UNIT)
    }
}

impl<U: Currency> fmt::Display for Amount<U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, U::UNIT)
    }
}

impl<U: Currency> Encode for Amount<U> {
    fn encode(&self, w: &mut Writer) {
        w.put_u128(self.value);
    }
}

impl<U: Currency> Decode for Amount<U> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        r.u128().map(Self::new)
    }
}

impl<U: Currency> Serialize for Amount<U> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.tagged().serialize(s)
    }
}

impl<'de, U: Currency> Deserialize<'de> for Amount<U> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let tagged = TaggedAmount::deserialize(d)?;
        tagged.typed::<U>().map_err(D::Error::custom)
    }
}

/// An amount whose unit is only known at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedAmount {
    #[serde(with = "u128_string")]
    pub value: u128,
    pub unit: Unit,
}

impl TaggedAmount {
    pub fn new(value: u128, unit: Unit) -> Self {
        Self { value, unit }
    }

    pub fn typed<U: Currency>(self) -> Result<Amount<U>, AmountError> {
        if self.unit != U::UNIT {
            return Err(AmountError::UnitMismatch {
                expected: U::UNIT,
                actual: self.unit,
            });
        }
        Ok(Amount::new(self.value))
    }

    /// Parses a whole-unit decimal string in the given unit.
    pub fn parse_whole(s: &str, unit: Unit) -> Result<Self, AmountError> {
        parse_decimal(s, unit.decimals()).map(|value| Self { value, unit })
    }
}

impl fmt::Display for TaggedAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

impl Encode for TaggedAmount {
    fn encode(&self, w: &mut Writer) {
        w.put_u128(self.value);
        w.put_u8(self.unit.tag());
    }
}

impl Decode for TaggedAmount {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let value = r.u128()?;
        let unit = Unit::from_tag(r.u8()?)?;
        Ok(Self { value, unit })
    }
}

fn parse_decimal(s: &str, decimals: u32) -> Result<u128, AmountError> {
    let err = || AmountError::Parse(s.to_string());
    let (whole, frac) = match s.split_once('.') {
        Some((w, f)) => (w, f),
        None => (s, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    if frac.len() > decimals as usize {
        return Err(err());
    }
    let scale = 10u128.pow(decimals);
    let whole: u128 = if whole.is_empty() {
        0
    } else {
        whole.parse().map_err(|_| err())?
    };
    let frac_value: u128 = if frac.is_empty() {
        0
    } else {
        let padded = format!("{frac:0<width$}", width = decimals as usize);
        padded.parse().map_err(|_| err())?
    };
    whole
        .checked_mul(scale)
        .and_then(|v| v.checked_add(frac_value))
        .ok_or(AmountError::Overflow)
}

fn format_decimal(value: u128, decimals: u32) -> String {
    let scale = 10u128.pow(decimals);
    format!(
        "{}.{:0width$}",
        value / scale,
        value % scale,
        width = decimals as usize
    )
}

impl FromStr for Unit {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wei" => Ok(Unit::Wei),
            "usd" | "micro_usd" => Ok(Unit::MicroUsd),
            "bdt" | "taka" | "centi_bdt" => Ok(Unit::CentiBdt),
            _ => Err(AmountError::Parse(s.to_string())),
        }
    }
}

/// Serde helper: `u128` as a decimal string (JSON numbers lose precision).
pub mod u128_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}
