//! Command implementations behind the `cpd` binary, and the HTTP service.

pub mod commands;
pub mod server;

use cpd_core::llm::{build_gateway, BackendChoice, CompletionRequest, CompletionResponse, Gateway, GatewayError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// `check` found Error diagnostics; other commands: runtime failure.
    pub const FOUND_ERRORS: i32 = 1;
    /// Unreadable input or bad usage.
    pub const USAGE: i32 = 2;
    pub const GATEWAY: i32 = 3;
}

/// Stands in when no backend is configured so callers get a clear error per
/// request instead of failing at startup.
pub struct Unconfigured(pub String);

impl Gateway for Unconfigured {
    fn backend_id(&self) -> String {
        "unconfigured".into()
    }

    fn complete(&self, _: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        Err(GatewayError::NotConfigured(self.0.clone()))
    }
}

/// Mock when asked for, otherwise the environment-configured client.
/// Must be called outside any async runtime.
pub fn gateway_for(mock: bool, seed: u64) -> Box<dyn Gateway> {
    let choice = if mock {
        BackendChoice::Mock { seed }
    } else {
        BackendChoice::Env
    };
    match build_gateway(&choice) {
        Ok(g) => g,
        Err(e) => Box::new(Unconfigured(e.to_string())),
    }
}
