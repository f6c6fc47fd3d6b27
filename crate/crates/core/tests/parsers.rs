//! The fuzz-target properties, run over the checked-in seeds and random input.

use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use rmcmc::config::RunConfig;
use rmcmc::table::Table;

fn corpus(name: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(name);
    let mut out: Vec<String> =
        fs::read_dir(&dir).unwrap().map(|e| fs::read_to_string(e.unwrap().path()).unwrap()).collect();
    out.sort();
    out
}

fn config_property(text: &str) {
    if let Ok(cfg) = RunConfig::from_text(text) {
        let again = RunConfig::from_text(&cfg.to_lines().join("\n")).expect("serialized config reparses");
        assert_eq!(again, cfg);
    }
}

fn table_property(text: &str) {
    if let Ok(t) = Table::parse(text) {
        assert!(!t.columns.is_empty());
        assert_eq!(t.rows.len(), t.row_lines.len());
        assert!(t.rows.iter().all(|r| r.len() == t.columns.len()));
        for c in &t.columns {
            let _ = t.f64_column(c);
        }
    }
}

#[test]
fn config_seeds() {
    let seeds = corpus("config_parse");
    assert!(seeds.len() >= 5);
    let ok = seeds.iter().filter(|s| RunConfig::from_text(s).is_ok()).count();
    assert!(ok >= 3 && ok < seeds.len(), "seeds should cover both outcomes");
    seeds.iter().for_each(|s| config_property(s));
}

#[test]
fn table_seeds() {
    let seeds = corpus("table_parse");
    let ok = seeds.iter().filter(|s| Table::parse(s).is_ok()).count();
    assert!(ok >= 3 && ok < seeds.len());
    seeds.iter().for_each(|s| table_property(s));
}

proptest! {
    #[test]
    fn config_text_never_panics(text in "([a-z_]{0,12} ?= ?[a-z0-9.,#= -]{0,12}\n?){0,6}") {
        config_property(&text);
    }

    #[test]
    fn config_arbitrary_text(text in "\\PC{0,80}") {
        config_property(&text);
    }

    #[test]
    fn table_text_never_panics(text in "(#?[a-z0-9.,e-]{0,16}\r?\n){0,8}") {
        table_property(&text);
    }
}
