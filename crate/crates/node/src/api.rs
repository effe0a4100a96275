//! HTTP/JSON interface and the server-sent event stream.
//!
//! Errors are `{"error": CODE, "message": text}` where `CODE` is a stable
//! machine-readable reason such as `BAD_NONCE` or `NOT_FOUND`.

use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;

use fundchain_core::contract::{contract_balance, funded_amount, owner_of, trail_to_json_lines};
use fundchain_core::fx::{convert_to_wei, wei_to_usd, Conversion, RateRecord};
use fundchain_core::state::ContractState;
use fundchain_core::{
    Address, Amount, Block, BlockHeader, Digest, ExecutionOutcome, MicroUsd, RateTable,
    SignedTransaction, TxId, Wei,
};

use crate::events::{BlockMessages, StreamMessage};
use crate::rates::Currency;
use crate::service::{ImportError, NodeHandle};

/// Marks requests relayed by a peer node; they are not relayed again.
pub const PEER_HEADER: &str = "x-fundchain-peer";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            error: code.to_string(),
            message: message.into(),
            status: status.as_u16(),
        }
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NOT_FOUND",
            format!("{what} not found"),
        )
    }

    fn malformed(what: &str, raw: &str) -> Self {
        Self::new(
            StatusCode::BAD_REQUEST,
            "MALFORMED_ID",
            format!("malformed {what}: {raw:?}"),
        )
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub tx_id: TxId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxState {
    Pending,
    Included,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxStatus {
    pub tx_id: TxId,
    pub state: TxState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<ExecutionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadInfo {
    pub height: u64,
    pub hash: Digest,
    pub header: BlockHeader,
    #[serde(with = "fundchain_core::amount::u128_string")]
    pub cumulative_work: u128,
    pub state_digest: Digest,
    pub mempool_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub hash: Digest,
    pub block: Block,
    pub outcomes: Vec<ExecutionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountInfo {
    pub address: Address,
    pub balance: Amount<Wei>,
    pub nonce: u64,
    /// Nonce to use for the next submission, counting pending transactions.
    pub next_nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerInfo {
    pub contract: Address,
    pub owner: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceInfo {
    pub contract: Address,
    pub balance: Amount<Wei>,
    /// The balance in whole coins, e.g. `0.025106073159097186`.
    pub display: String,
    /// Valuation at the chain's rates, rounded down.
    pub usd: Amount<MicroUsd>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundedInfo {
    pub contract: Address,
    pub funder: Address,
    pub amount: Amount<Wei>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptInfo {
    pub content_hash: Digest,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionInfo {
    #[serde(flatten)]
    pub conversion: Conversion,
    /// `usd_leg` in whole dollars.
    pub usd_display: String,
    /// `wei` in whole coins.
    pub wei_display: String,
}

impl From<Conversion> for ConversionInfo {
    fn from(c: Conversion) -> Self {
        Self {
            usd_display: c.usd_leg.to_decimal_string(),
            wei_display: c.wei.to_decimal_string(),
            conversion: c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatesInfo {
    pub table: RateTable,
    pub records: Vec<RateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversion: Option<ConversionInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportResponse {
    pub height: u64,
}

pub fn router(node: NodeHandle) -> Router {
    let body_limit = node.config().max_blob_bytes.saturating_mul(2).max(1 << 20);
    Router::new()
        .route("/tx", post(submit_tx))
        .route("/tx/{id}", get(tx_status))
        .route("/head", get(head))
        .route("/blocks", post(import_block))
        .route("/blocks/{id}", get(block))
        .route("/mine", post(mine_now))
        .route("/accounts/{addr}", get(account))
        .route("/contracts/{addr}", get(contract))
        .route("/contracts/{addr}/owner", get(owner))
        .route("/contracts/{addr}/balance", get(balance))
        .route("/contracts/{addr}/funded/{funder}", get(funded))
        .route("/contracts/{addr}/trail", get(trail))
        .route("/receipts", post(put_receipt))
        .route("/receipts/{hash}", get(get_receipt))
        .route("/rates", get(rates))
        .route("/events", get(events))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(node)
}

/// Serves the API until `shutdown` resolves.
pub async fn serve(
    node: NodeHandle,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(node))
        .with_graceful_shutdown(shutdown)
        .await
}

fn parse<T: std::str::FromStr>(what: &str, raw: &str) -> Result<T, ApiError> {
    raw.parse().map_err(|_| ApiError::malformed(what, raw))
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MALFORMED", e.to_string()))
}

async fn submit_tx(
    State(node): State<NodeHandle>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<SubmitResponse> {
    let tx: SignedTransaction = parse_json(&body)?;
    let from_peer = headers.contains_key(PEER_HEADER);
    let result = if from_peer {
        node.submit_from_peer(tx).await
    } else {
        node.submit(tx).await
    };
    match result.map_err(ApiError::internal)? {
        Ok(tx_id) => Ok(Json(SubmitResponse { tx_id })),
        Err(e) => {
            let status = match e {
                crate::mempool::SubmitError::Duplicate => StatusCode::CONFLICT,
                _ => StatusCode::BAD_REQUEST,
            };
            Err(ApiError::new(status, e.as_str(), e.to_string()))
        }
    }
}

async fn tx_status(State(node): State<NodeHandle>, Path(id): Path<String>) -> ApiResult<TxStatus> {
    let tx_id: TxId = parse("transaction id", &id)?;
    let snap = node.snapshot();
    if let Some((height, index, outcome)) = snap.find_tx(&tx_id) {
        return Ok(Json(TxStatus {
            tx_id,
            state: TxState::Included,
            height: Some(height),
            index: Some(index),
            outcome: Some(outcome.clone()),
        }));
    }
    if snap.pending.ids.contains(&tx_id) {
        return Ok(Json(TxStatus {
            tx_id,
            state: TxState::Pending,
            height: None,
            index: None,
            outcome: None,
        }));
    }
    Err(ApiError::not_found(format!("transaction {tx_id}")))
}

async fn head(State(node): State<NodeHandle>) -> Json<HeadInfo> {
    let snap = node.snapshot();
    let h = snap.head();
    Json(HeadInfo {
        height: h.header.height,
        hash: h.hash(),
        header: h.header.clone(),
        cumulative_work: snap.cumulative_work,
        state_digest: snap.state.digest(),
        mempool_size: snap.pending.ids.len(),
    })
}

async fn block(State(node): State<NodeHandle>, Path(id): Path<String>) -> ApiResult<BlockInfo> {
    let snap = node.snapshot();
    let found = if id.starts_with("0x") {
        let hash: Digest = parse("block hash", &id)?;
        snap.block_by_hash(&hash)
    } else {
        let height: u64 = parse("block height", &id)?;
        snap.block_at(height)
    };
    let block = found.ok_or_else(|| ApiError::not_found(format!("block {id}")))?;
    Ok(Json(BlockInfo {
        hash: block.hash(),
        block: block.clone(),
        outcomes: snap
            .outcomes_at(block.header.height)
            .unwrap_or_default()
            .to_vec(),
    }))
}

async fn import_block(State(node): State<NodeHandle>, body: Bytes) -> ApiResult<ImportResponse> {
    let block: Block = parse_json(&body)?;
    match node.import(block).await.map_err(ApiError::internal)? {
        Ok(height) => Ok(Json(ImportResponse { height })),
        Err(e) => {
            let status = match e {
                ImportError::Storage => StatusCode::INTERNAL_SERVER_ERROR,
                _ => StatusCode::CONFLICT,
            };
            Err(ApiError::new(status, &e.to_string(), "block not imported"))
        }
    }
}

async fn mine_now(State(node): State<NodeHandle>) -> ApiResult<crate::service::MinedBlock> {
    node.mine().await.map(Json).map_err(ApiError::internal)
}

async fn account(
    State(node): State<NodeHandle>,
    Path(addr): Path<String>,
) -> ApiResult<AccountInfo> {
    let address: Address = parse("address", &addr)?;
    let snap = node.snapshot();
    let acct = snap
        .state
        .account(&address)
        .ok_or_else(|| ApiError::not_found(format!("account {address}")))?;
    Ok(Json(AccountInfo {
        address,
        balance: acct.balance,
        nonce: acct.nonce,
        next_nonce: snap.next_nonce(&address),
    }))
}

fn contract_addr(raw: &str) -> Result<Address, ApiError> {
    parse("contract address", raw)
}

async fn contract(
    State(node): State<NodeHandle>,
    Path(addr): Path<String>,
) -> ApiResult<ContractState> {
    let address = contract_addr(&addr)?;
    node.snapshot()
        .state
        .contract(&address)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("contract {address}")))
}

async fn owner(State(node): State<NodeHandle>, Path(addr): Path<String>) -> ApiResult<OwnerInfo> {
    let contract = contract_addr(&addr)?;
    let owner = owner_of(&node.snapshot().state, &contract)
        .map_err(|_| ApiError::not_found(format!("contract {contract}")))?;
    Ok(Json(OwnerInfo { contract, owner }))
}

async fn balance(
    State(node): State<NodeHandle>,
    Path(addr): Path<String>,
) -> ApiResult<BalanceInfo> {
    let contract = contract_addr(&addr)?;
    let snap = node.snapshot();
    let balance = contract_balance(&snap.state, &contract)
        .map_err(|_| ApiError::not_found(format!("contract {contract}")))?;
    let usd = wei_to_usd(balance, &snap.genesis.rates).map_err(ApiError::internal)?;
    Ok(Json(BalanceInfo {
        contract,
        balance,
        display: balance.to_decimal_string(),
        usd,
    }))
}

async fn funded(
    State(node): State<NodeHandle>,
    Path((addr, funder)): Path<(String, String)>,
) -> ApiResult<FundedInfo> {
    let contract = contract_addr(&addr)?;
    let funder: Address = parse("address", &funder)?;
    let amount = funded_amount(&node.snapshot().state, &contract, &funder)
        .map_err(|_| ApiError::not_found(format!("contract {contract}")))?;
    Ok(Json(FundedInfo {
        contract,
        funder,
        amount,
    }))
}

/// Newline-delimited JSON, one trail event per line, oldest first.
async fn trail(
    State(node): State<NodeHandle>,
    Path(addr): Path<String>,
) -> Result<Response, ApiError> {
    let contract = contract_addr(&addr)?;
    let trail = node.snapshot().trail(&contract);
    if !trail.found {
        return Err(ApiError::not_found(format!("contract {contract}")));
    }
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        trail_to_json_lines(&trail.events),
    )
        .into_response())
}

async fn put_receipt(State(node): State<NodeHandle>, body: Bytes) -> ApiResult<ReceiptInfo> {
    let size = body.len();
    let blobs = node.blobs().clone();
    let result = tokio::task::spawn_blocking(move || blobs.put(&body))
        .await
        .map_err(ApiError::internal)?;
    match result {
        Ok(content_hash) => Ok(Json(ReceiptInfo { content_hash, size })),
        Err(e @ crate::blobs::BlobError::TooLarge { .. }) => Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "OVERSIZE",
            e.to_string(),
        )),
        Err(e) => Err(ApiError::internal(e)),
    }
}

async fn get_receipt(
    State(node): State<NodeHandle>,
    Path(hash): Path<String>,
) -> Result<Response, ApiError> {
    let digest: Digest = parse("content hash", &hash)?;
    let blobs = node.blobs().clone();
    let found = tokio::task::spawn_blocking(move || blobs.get(&digest))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    let bytes = found.ok_or_else(|| ApiError::not_found(format!("receipt {digest}")))?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

#[derive(Debug, Deserialize)]
pub struct RatesQuery {
    pub amount: Option<String>,
    pub currency: Option<String>,
}

async fn rates(
    State(node): State<NodeHandle>,
    Query(q): Query<RatesQuery>,
) -> ApiResult<RatesInfo> {
    let conversion_input = match (&q.amount, &q.currency) {
        (None, None) => None,
        (Some(amount), currency) => {
            let currency: Currency = currency
                .as_deref()
                .unwrap_or("usd")
                .parse()
                .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "BAD_CURRENCY", e))?;
            let tagged = currency
                .parse_amount(amount)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_AMOUNT", e.to_string()))?;
            Some(tagged)
        }
        (None, Some(_)) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "BAD_AMOUNT",
                "currency given without amount",
            ))
        }
    };
    let handle = node.clone();
    let table = tokio::task::spawn_blocking(move || handle.rates().current())
        .await
        .map_err(ApiError::internal)?
        .map_err(|e| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "RATES_UNAVAILABLE",
                e.to_string(),
            )
        })?;
    let conversion = match conversion_input {
        Some(input) => Some(
            convert_to_wei(input, &table)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_AMOUNT", e.to_string()))?
                .into(),
        ),
        None => None,
    };
    Ok(Json(RatesInfo {
        records: table.records(),
        table,
        conversion,
    }))
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    pub from_height: Option<u64>,
}

fn to_sse(height: u64, msg: &StreamMessage) -> Event {
    Event::default()
        .event(msg.name())
        .id(height.to_string())
        .data(serde_json::to_string(msg).expect("stream message serializes"))
}

/// Messages in commit order, each with the height of its block. With
/// `from_height`, history from that height is replayed first. A subscriber
/// more than the buffer behind gets `OVERFLOW` and the stream ends.
pub fn event_stream(
    node: &NodeHandle,
    from_height: Option<u64>,
) -> impl Stream<Item = (u64, StreamMessage)> + Send + 'static {
    // Subscribe before the snapshot so nothing falls in between.
    let rx = node.subscribe();
    let snap = node.snapshot();
    let head = snap.height();
    let replay: Vec<Arc<BlockMessages>> = match from_height {
        Some(from) if from <= head => snap.messages_from(from).into_iter().map(Arc::new).collect(),
        _ => vec![],
    };
    drop(snap);

    let live = stream::unfold(Some(rx), move |rx| async move {
        let mut rx = rx?;
        loop {
            match rx.recv().await {
                Ok(batch) if batch.height <= head => continue,
                Ok(batch) => return Some((batch, Some(rx))),
                Err(RecvError::Lagged(missed)) => {
                    let notice = Arc::new(BlockMessages {
                        height: head,
                        messages: vec![StreamMessage::Overflow {
                            missed_blocks: missed,
                        }],
                    });
                    return Some((notice, None));
                }
                Err(RecvError::Closed) => return None,
            }
        }
    });

    stream::iter(replay).chain(live).flat_map(|batch| {
        let height = batch.height;
        let items: Vec<_> = batch.messages.iter().map(|m| (height, m.clone())).collect();
        stream::iter(items)
    })
}

async fn events(
    State(node): State<NodeHandle>,
    Query(q): Query<EventsQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let events = event_stream(&node, q.from_height).map(|(h, m)| Ok(to_sse(h, &m)));
    Sse::new(events).keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
}
