//! Replays the checked-in fuzz corpus through the parsers.
//!
//! The fuzz targets under `fuzz/` assert one thing: arbitrary input never
//! panics. Running the seed corpus here keeps that guarantee covered by
//! `cargo test` alone, without the fuzzing toolchain installed.

use std::fs;
use std::path::PathBuf;

fn corpus_dir(target: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target)
}

fn seed_files(target: &str) -> Vec<PathBuf> {
    let dir = corpus_dir(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("corpus directory {} is missing: {e}", dir.display()))
        .map(|entry| entry.unwrap().path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files
}

#[test]
fn cloud_parser_survives_its_corpus() {
    for path in seed_files("fuzz_cloud_parser") {
        let bytes = fs::read(&path).unwrap();
        if let Ok(text) = std::str::from_utf8(&bytes) {
            let _ = chemogfd::geometry::parse_cloud(text);
        }
    }
}

#[test]
fn config_parser_survives_its_corpus() {
    for path in seed_files("fuzz_config_parser") {
        let bytes = fs::read(&path).unwrap();
        let _ = chemogfd::config::parse_config(&bytes);
    }
}

/// The seeds are not arbitrary noise: each one pins the outcome its name
/// promises, so corpus rot shows up as a plain test failure.
#[test]
fn corpus_seeds_keep_their_documented_outcomes() {
    let expect_cloud = [
        ("valid-grid.txt", true),
        ("no-header.txt", true),
        ("duplicate-nodes.txt", false),
        ("out-of-domain.txt", false),
        ("bad-number.txt", false),
    ];
    for (name, ok) in expect_cloud {
        let text = fs::read_to_string(corpus_dir("fuzz_cloud_parser").join(name)).unwrap();
        assert_eq!(
            chemogfd::geometry::parse_cloud(&text).is_ok(),
            ok,
            "cloud seed {name}"
        );
    }

    let expect_config = [
        ("preset-example1.toml", true),
        ("full-explicit.toml", true),
        ("bad-dt.toml", false),
        ("unknown-key.toml", false),
    ];
    for (name, ok) in expect_config {
        let bytes = fs::read(corpus_dir("fuzz_config_parser").join(name)).unwrap();
        assert_eq!(
            chemogfd::config::parse_config(&bytes).is_ok(),
            ok,
            "config seed {name}"
        );
    }
}
