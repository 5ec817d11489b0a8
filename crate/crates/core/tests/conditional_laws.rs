mod common;

use common::cases::conditional_check;

#[test]
fn conditional_laws_match_windowed_sampling() {
    for seed in 0..8 {
        let c = conditional_check(seed, 200_000, 1000, 20_000_000);
        assert!(c.min_accepted >= 500, "seed {seed}: only {} accepted", c.min_accepted);
        assert!(c.max_z < 4.0, "seed {seed}: z = {}", c.max_z);
    }
}
