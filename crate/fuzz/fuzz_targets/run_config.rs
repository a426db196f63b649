#![no_main]

use libfuzzer_sys::fuzz_target;
use subjet::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        // validation must reject or accept without panicking
        let _ = cfg.validate();
        let _ = cfg.fluxes();
    }
});
