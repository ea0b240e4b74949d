#![no_main]

use forge_core::config::ForgeConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ForgeConfig::from_toml_str(text) {
            let _ = cfg.validate();
            assert_eq!(cfg.hash().len(), 64);
        }
    }
});
