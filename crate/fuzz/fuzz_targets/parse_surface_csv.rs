#![no_main]

use jumpcopula::io::parse_surface_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match parse_surface_csv(text, "fuzz.csv") {
        Ok(rows) => {
            for r in rows {
                assert!(r.strike > 0.0 && r.maturity > 0.0 && r.implied_vol > 0.0);
            }
        }
        Err(issues) => assert!(!issues.is_empty()),
    }
});
