#![no_main]

use libfuzzer_sys::fuzz_target;
use wormbot::scenario::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = parse_config(text) {
        // anything accepted must survive a serialize/parse round trip
        let again = parse_config(&config.to_toml_string()).expect("serialized config parses");
        assert_eq!(config, again);
    }
});
