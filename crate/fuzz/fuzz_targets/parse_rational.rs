#![no_main]

use inftda::mechanism::{parse_rational, PrivacyParams};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if parse_rational(text).is_ok() {
        if let Ok(params) = PrivacyParams::parse(text, 3) {
            let shown = params.to_string();
            let reparsed = PrivacyParams::parse(&shown, 3).expect("display re-parses");
            assert_eq!(reparsed.rho(), params.rho());
        }
    }
});
