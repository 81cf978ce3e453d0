use rank2_mle::candidates::SignPattern;
use rank2_mle::rational::parse_rational;
use rank2_mle::solvers::SolverConfig;
use rank2_mle::verify::{certify, Verdict};

fn cfg(seed: u64, starts: usize) -> SolverConfig {
    SolverConfig { seed, starts, ..SolverConfig::default() }
}

#[test]
fn swiss_instance_is_certified() {
    let c = certify(4, 2.0, 1.0, &cfg(0, 200)).unwrap();
    assert_eq!(c.verdict, Verdict::CertifiedCandidateMax, "{}", c.to_text());
    let w = c.winner.as_ref().unwrap();
    assert_eq!(w.pattern, SignPattern::Ppnn);
    let m = w.sum_one_matrix();
    let hi = parse_rational("3/40").unwrap();
    let lo = parse_rational("1/20").unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let same = (i < 2) == (j < 2);
            assert_eq!(m.get(i, j), if same { &hi } else { &lo });
        }
    }
    assert!(c.checks.iter().all(|k| k.passed || !k.required));
    let json = serde_json::to_string(&c).unwrap();
    assert!(json.contains("\"CERTIFIED_CANDIDATE_MAX\""));
}

#[test]
fn verdict_stable_across_seeds() {
    for seed in 0..10 {
        let c = certify(4, 2.0, 1.0, &cfg(seed * 7919 + 1, 60)).unwrap();
        assert_eq!(c.verdict, Verdict::CertifiedCandidateMax, "seed {seed}");
    }
}

#[test]
fn generator_instances_are_only_supported() {
    let c = certify(6, 2.0, 1.0, &cfg(0, 60)).unwrap();
    assert_eq!(c.verdict, Verdict::Supported, "{}", c.to_text());
    assert!(c.generator.as_ref().unwrap().conjectured);
    let c = certify(4, 1.0, 2.0, &cfg(0, 60)).unwrap();
    assert_eq!(c.verdict, Verdict::Supported, "{}", c.to_text());
    assert_eq!(c.generator.as_ref().unwrap().kind, "corner");
}

#[test]
fn identical_seed_gives_identical_json() {
    let a = serde_json::to_string(&certify(4, 3.0, 1.0, &cfg(5, 40)).unwrap()).unwrap();
    let b = serde_json::to_string(&certify(4, 3.0, 1.0, &cfg(5, 40)).unwrap()).unwrap();
    assert_eq!(a, b);
}
