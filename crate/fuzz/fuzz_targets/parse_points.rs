#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_energy::geometry::parse_points;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // must never panic; valid parses must round-trip dimensions
        if let Ok(ps) = parse_points(text) {
            assert!(ps.dim() >= 1);
            assert!(ps.len() >= 1);
            for p in ps.iter() {
                assert_eq!(p.len(), ps.dim());
                assert!(p.iter().all(|c| (0.0..1.0).contains(c)));
            }
        }
    }
});
