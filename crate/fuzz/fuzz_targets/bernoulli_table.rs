#![no_main]

use libfuzzer_sys::fuzz_target;
use subjet::io::{parse_bernoulli_table, write_bernoulli_table};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(profile) = parse_bernoulli_table(text) {
        // accepted tables survive a write/read cycle
        let again = parse_bernoulli_table(&write_bernoulli_table(&profile)).expect("rewritten table parses");
        assert_eq!(again.intervals(), profile.intervals());
        assert!(profile.b_min() > 0.0 && profile.b_min() <= profile.b_max());
    }
});
