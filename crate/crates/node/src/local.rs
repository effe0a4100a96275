//! A node plus HTTP server on its own runtime, for embedding in tools and
//! tests. Dropping it stops both.

use std::net::SocketAddr;

use crate::{api, Node, NodeConfig, NodeError, NodeHandle};

pub struct LocalNode {
    node: Option<Node>,
    runtime: Option<tokio::runtime::Runtime>,
    addr: SocketAddr,
}

impl LocalNode {
    /// Starts the node and serves on `config.listen` (port 0 picks a free one).
    pub fn spawn(config: NodeConfig) -> Result<Self, NodeError> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .map_err(|e| NodeError::Store(e.into()))?;
        let listen = config.listen;
        let node = Node::start(config)?;
        let listener = runtime
            .block_on(tokio::net::TcpListener::bind(listen))
            .map_err(|e| NodeError::Store(e.into()))?;
        let addr = listener
            .local_addr()
            .map_err(|e| NodeError::Store(e.into()))?;
        runtime.spawn(api::serve(node.handle(), listener, std::future::pending()));
        Ok(Self {
            node: Some(node),
            runtime: Some(runtime),
            addr,
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn handle(&self) -> NodeHandle {
        self.node.as_ref().expect("running").handle()
    }
}

impl Drop for LocalNode {
    fn drop(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
        if let Some(node) = self.node.take() {
            node.shutdown();
        }
    }
}
