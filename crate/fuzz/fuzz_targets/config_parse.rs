#![no_main]

use libfuzzer_sys::fuzz_target;
use rmcmc::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // anything that parses must survive a write/read cycle unchanged
    if let Ok(cfg) = RunConfig::from_text(text) {
        let again = RunConfig::from_text(&cfg.to_lines().join("\n")).expect("serialized config reparses");
        assert_eq!(again, cfg);
    }
});
