//! In-process server and fixture paths shared by the CLI test targets.
#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::thread;

use cpd_cli::server::{serve, AppState, Cors};
use cpd_core::glossary::Glossary;
use cpd_core::llm::{Gateway, MockGateway};
use cpd_core::store::Store;
use tokio::sync::oneshot;

#[path = "../../../core/tests/support/corpus.rs"]
pub mod corpus;

/// `*.cpd.json` files in `dir`, sorted.
pub fn fixtures(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".cpd.json"))
        .collect();
    out.sort();
    out
}

/// Runs the `cpd` binary with a clean LLM environment.
pub fn cpd(args: &[&str], stdin: Option<&str>, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpd"));
    cmd.args(args)
        .env_remove("CPD_LLM_BASE_URL")
        .env_remove("CPD_LLM_API_KEY")
        .env_remove("CPD_LLM_MODEL")
        .env_remove("CPD_GLOSSARY")
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    if let Some(text) = stdin {
        use std::io::Write;
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    }
    child.wait_with_output().unwrap()
}

/// A server on an ephemeral port, stopped on drop.
pub struct TestServer {
    pub addr: SocketAddr,
    pub store_dir: tempfile::TempDir,
    pub client: reqwest::blocking::Client,
    stop: Option<oneshot::Sender<()>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl TestServer {
    pub fn start() -> Self {
        Self::with_gateway(Arc::new(MockGateway::new(42)))
    }

    pub fn with_gateway(gateway: Arc<dyn Gateway>) -> Self {
        let store_dir = tempfile::tempdir().unwrap();
        let store = Store::open(store_dir.path()).unwrap();
        let state = AppState::new(store, gateway, Glossary::bundled().clone());
        let std_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        std_listener.set_nonblocking(true).unwrap();
        let addr = std_listener.local_addr().unwrap();
        let (stop, stopped) = oneshot::channel::<()>();
        let handle = thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
                serve(listener, state, Cors::from_origins(&["http://ui.test".to_string()]).unwrap(), async {
                    let _ = stopped.await;
                })
                .await
                .unwrap();
            });
        });
        TestServer {
            addr,
            store_dir,
            client: reqwest::blocking::Client::new(),
            stop: Some(stop),
            handle: Some(handle),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn get(&self, path: &str) -> reqwest::blocking::Response {
        self.client.get(self.url(path)).send().unwrap()
    }

    pub fn delete(&self, path: &str) -> reqwest::blocking::Response {
        self.client.delete(self.url(path)).send().unwrap()
    }

    pub fn post(&self, path: &str, body: &str) -> reqwest::blocking::Response {
        self.client
            .post(self.url(path))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .unwrap()
    }

    pub fn put(&self, path: &str, body: &str) -> reqwest::blocking::Response {
        self.client
            .put(self.url(path))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .unwrap()
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
