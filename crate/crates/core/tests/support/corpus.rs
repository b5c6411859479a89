//! Fixture corpora under `tests/data`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

/// The core crate's directory, also when compiled into a sibling crate's tests.
pub fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("core")
}

pub fn data_dir() -> PathBuf {
    core_dir().join("tests").join("data")
}

#[derive(Debug, Deserialize)]
pub struct DiagnosticCase {
    pub file: String,
    pub code: String,
    #[serde(default)]
    pub subjects: Vec<Vec<String>>,
    #[serde(default)]
    pub kinds: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct MalformedCase {
    pub file: String,
    pub class: String,
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub line: Option<usize>,
}

#[derive(Deserialize)]
struct Manifest<T> {
    case: Vec<T>,
}

fn load<T: for<'de> Deserialize<'de>>(dir: &str) -> Vec<T> {
    let path = data_dir().join(dir).join("expected.toml");
    let text = fs::read_to_string(&path).unwrap();
    toml::from_str::<Manifest<T>>(&text).unwrap().case
}

pub fn diagnostic_cases() -> Vec<DiagnosticCase> {
    load("diagnostics")
}

pub fn malformed_cases() -> Vec<MalformedCase> {
    load("malformed")
}

pub fn diagnostic_path(file: &str) -> PathBuf {
    data_dir().join("diagnostics").join(file)
}

pub fn malformed_path(file: &str) -> PathBuf {
    data_dir().join("malformed").join(file)
}

pub fn fig1_path() -> PathBuf {
    core_dir().join("fixtures").join("physical_activity.cpd.json")
}
