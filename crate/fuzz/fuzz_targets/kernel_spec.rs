#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_energy::kernels::{kernel_eval, KernelSpec};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // must never panic; accepted specs must validate and evaluate
        if let Ok(spec) = text.parse::<KernelSpec>() {
            spec.validate().expect("parsed specs are validated");
            let _ = kernel_eval(&spec, 0.25);
        }
    }
});
