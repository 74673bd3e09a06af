#![no_main]

use jumpcopula::io::parse_skew_report;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_skew_report(text, "report.csv") {
        for (_, col) in &t.columns {
            assert_eq!(col.len(), t.moneyness.len());
        }
    }
});
