#![no_main]

use libfuzzer_sys::fuzz_target;
use subjet::io::parse_nozzle_table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(nozzle) = parse_nozzle_table(text, 2.0) {
        assert!(nozzle.theta(1.0).abs() < 1e-9);
        for k in 0..=16 {
            let x2 = 1.0 + k as f64 / 16.0 * 0.999;
            let _ = nozzle.theta(x2);
            let _ = nozzle.inlet_height(0.5 + k as f64 / 8.0);
        }
    }
});
