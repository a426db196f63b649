#![no_main]

use libfuzzer_sys::fuzz_target;
use subjet::io::parse_field_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(field) = parse_field_csv(text) {
        let nodes = (field.n1 + 1) * (field.n2 + 1);
        assert_eq!(field.psi.len(), nodes);
        assert_eq!(field.region.len(), nodes);
        let _ = field.to_discrete();
    }
});
