#![no_main]

use jumpcopula::io::parse_correlation_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_correlation_csv(text, "fuzz.csv") {
        let n = c.labels.len();
        assert_eq!((c.matrix.nrows(), c.matrix.ncols()), (n, n));
        // an accepted matrix must survive a reorder by its own labels
        assert_eq!(c.reordered(&c.labels).as_ref(), Some(&c.matrix));
    }
});
