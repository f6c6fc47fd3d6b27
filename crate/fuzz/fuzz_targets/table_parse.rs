#![no_main]

use libfuzzer_sys::fuzz_target;
use rmcmc::table::Table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = Table::parse(text) {
        assert!(!t.columns.is_empty());
        assert_eq!(t.rows.len(), t.row_lines.len());
        for row in &t.rows {
            assert_eq!(row.len(), t.columns.len());
        }
        for c in &t.columns {
            let _ = t.f64_column(c);
        }
    }
});
