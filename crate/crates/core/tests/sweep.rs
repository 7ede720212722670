use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use serial_monopoly::analytics::{market_points, welfare_ratio};
use serial_monopoly::generate::random_instance;
use serial_monopoly::number::ratio;
use serial_monopoly::verify::sweep;

const SEED: u64 = 2024;

#[test]
fn two_hundred_instances_pass_every_exact_check() {
    let outcomes = sweep(200, 200, SEED).unwrap();
    assert_eq!(outcomes.len(), 200);
    for o in &outcomes {
        let names: Vec<_> = o.failures.iter().map(|f| (&f.name, &f.witness)).collect();
        assert!(o.failures.is_empty(), "instance {}: {names:?}", o.index);
    }
}

#[test]
fn two_hundred_instances_meet_the_welfare_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..200 {
        let (q, s) = random_instance(&mut rng);
        let m = market_points(&q, &s).unwrap();
        assert!(welfare_ratio(&m).unwrap() >= ratio(1, 2));
        assert!(m.sw_ser >= m.sw_mon);
        assert!(m.sw_ser >= &m.sw_eq - &m.rev_mon);
    }
}
