#![allow(dead_code)]

use std::path::PathBuf;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario_path(name: &str) -> PathBuf {
    workspace_root().join("scenarios").join(name)
}

pub fn data_path(name: &str) -> PathBuf {
    workspace_root().join("data").join(name)
}

pub mod live;
pub mod ws;

/// Free localhost port; the listener is dropped before returning.
pub fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}
