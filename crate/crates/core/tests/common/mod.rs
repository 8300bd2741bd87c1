#![allow(dead_code)]

pub mod calc;
pub mod criteria;
pub mod cyk;
pub mod props;

use std::path::PathBuf;

use modelgen::Language;

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(format!("{name}.json"))
}

pub fn model_text(name: &str) -> String {
    std::fs::read_to_string(model_path(name)).unwrap()
}

pub fn language(name: &str) -> Language {
    Language::from_document(&model_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
