#![no_main]
use libfuzzer_sys::fuzz_target;
use pite_bench::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text) {
        let scenarios = cfg.scenarios().expect("validated config must expand");
        assert!(!scenarios.is_empty());
        cfg.learner_specs().expect("validated config must yield learner specs");
    }
});
