use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twolin::ea::{batch_run, RunConfig, StartRule};
use twolin::exact_drift::{exact_drift, mc_drift, Method};
use twolin::potential::step_size_tail;
use twolin::{Params, State};

/// A 99% interval misses about 2 of 200 times; more than 6 misses has
/// probability about 0.005 under nominal coverage.
#[test]
fn mc_interval_coverage() {
    let p = Params::new(1.5, 0.4, 0.5, 100).unwrap();
    let s = State::new(12, 8);
    let exact = exact_drift(s, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut misses = [0usize; 2];
    for _ in 0..200 {
        let mc = mc_drift(s, &p, 4000, &mut rng).unwrap();
        let Method::MonteCarlo { ci_halfwidth, .. } = mc.method else { unreachable!() };
        for k in 0..2 {
            if (mc.as_array()[k] - exact.as_array()[k]).abs() > ci_halfwidth[k] {
                misses[k] += 1;
            }
        }
    }
    assert!(misses.iter().all(|&m| m <= 6), "{misses:?}");
}

#[test]
fn hits_are_unaffected_by_recording() {
    let p = Params::symmetric(1.2, 300).unwrap();
    let base = RunConfig::new(p, StartRule::UniformRandom, 50_000, 77);
    let a = batch_run(&base, 6).unwrap();
    let b = batch_run(&base.with_record_every(7), 6).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.hit, y.hit);
        assert_eq!(x.final_state(), y.final_state());
    }
}

#[test]
fn step_size_tail_below_flip_tail() {
    // Accepted steps never move more bits than were flipped.
    let p = Params::symmetric(2.0, 500).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = step_size_tail(State::new(100, 40), &p, 100_000, &mut rng).unwrap();
    let flip_tail = |i: usize| -> f64 {
        (i..=p.n).map(|k| twolin::binomial::pmf(p.n, k, p.rate())).sum::<f64>()
    };
    for (i, &f) in t.tail.iter().enumerate().skip(1) {
        assert!(f <= flip_tail(i) + 0.01, "{i}: {f} vs {}", flip_tail(i));
    }
}
