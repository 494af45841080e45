#![no_main]

use libfuzzer_sys::fuzz_target;
use popt::format;
use popt::popt::EvidenceOptions;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let opts = EvidenceOptions { restarts: 2, iters: 5, ..EvidenceOptions::default() };
    let _ = format::load_popt(text, &opts);
});
