use cv_entangler::certification::{fixtures, monte_carlo_eigs, monte_carlo_samples, Spread};
use cv_entangler::Bipartition;

const DRAWS: usize = 10_000;

#[test]
fn doubling_sigma_doubles_the_spread() {
    let base = fixtures::gamma1().with_uniform_sigma(0.005);
    let double = fixtures::gamma1().with_uniform_sigma(0.01);
    let a = monte_carlo_eigs(&base, DRAWS, 1)
        .unwrap()
        .uncertainty
        .unwrap();
    let b = monte_carlo_eigs(&double, DRAWS, 1)
        .unwrap()
        .uncertainty
        .unwrap();
    for bp in Bipartition::ALL {
        let ratio = b.entry(bp).std / a.entry(bp).std;
        assert!((ratio - 2.0).abs() < 0.2, "{bp}: ratio {ratio}");
    }
}

#[test]
fn disjoint_halves_agree() {
    let m = fixtures::gamma2();
    let samples = monte_carlo_samples(&m, DRAWS, 3).unwrap();
    let (first, second) = samples.split_at(DRAWS / 2);
    for k in 0..7 {
        let a = Spread::of(first.iter().map(|s| s[k])).std;
        let b = Spread::of(second.iter().map(|s| s[k])).std;
        assert!((a - b).abs() / a.max(b) < 0.2, "quantity {k}: {a} vs {b}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let m = fixtures::gamma1();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_samples(&m, 1000, 9).unwrap())
    };
    assert_eq!(run(1), run(4));
}
