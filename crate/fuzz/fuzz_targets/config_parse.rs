//! Fuzzes the TOML config path: parse, validate into parameters, and the
//! serialize/reparse round trip. None of these may panic or blow memory on
//! arbitrary input.

#![no_main]

use libfuzzer_sys::fuzz_target;

use excitonic::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = Config::parse(text) else {
        return;
    };
    // anything that parses must also serialize and reparse identically
    let round = Config::parse(&config.to_toml()).expect("round trip reparses");
    let _ = round.into_params();
    let _ = config.into_params();
});
