use rank2_mle::model::swiss_counts;
use rank2_mle::solvers::{em_fit, multistart, Classification, SolverConfig};

fn p_logliks() -> Vec<f64> {
    let ln = f64::ln;
    vec![
        12.0 * ln(16.0 / 15.0) + 2.0 * ln(8.0 / 5.0) + 6.0 * ln(4.0 / 5.0),
        12.0 * ln(6.0 / 5.0) + 8.0 * ln(4.0 / 5.0),
        // P3 and P4 from their closed-form entries
        {
            let q = 1.0 / 8.0;
            let e = |x: f64| ln(1.0 + x);
            // a = b = alpha (1, 1, 0, -2)
            let c = [1.0, 1.0, 0.0, -2.0];
            let mut l = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let w = if i == j { 2.0 } else { 1.0 };
                    l += w * e(q * c[i] * c[j]);
                }
            }
            l
        },
        {
            let c: [f64; 4] = [1.0, 0.0, 0.0, -1.0];
            let mut l = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let w = if i == j { 2.0 } else { 1.0 };
                    l += w * (1.0 + c[i] * c[j] / 3.0).ln();
                }
            }
            l
        },
        0.0,
    ]
}

#[test]
fn multistart_swiss_weights() {
    let cfg = SolverConfig { seed: 42, ..Default::default() };
    let rep = multistart(2.0, 1.0, 4, &cfg).unwrap();
    let target = 12.0 * 1.2f64.ln() + 8.0 * 0.8f64.ln();
    assert!((rep.best.loglik - target).abs() < 1e-8);
    let known = p_logliks();
    for c in &rep.clusters {
        eprintln!(
            "cluster loglik {:.12} members {} class {:?} key {:?}",
            c.loglik, c.members, c.representative.classification, c.key
        );
        assert!(c.loglik <= target + 1e-8);
        assert!(known.iter().any(|k| (k - c.loglik).abs() < 1e-7), "unexpected optimum {}", c.loglik);
    }
    assert_eq!(rep.best.classification, Classification::LocalMax);
}

#[test]
fn em_swiss_two_classes() {
    let cfg = SolverConfig { starts: 100, seed: 7, ..Default::default() };
    let rep = em_fit(&swiss_counts(), 2, &cfg, None).unwrap();
    let target = 24.0 * (3.0f64 / 40.0).ln() + 16.0 * (1.0f64 / 20.0).ln();
    eprintln!("em best {} target {}", rep.loglik, target);
    assert!((rep.loglik - target).abs() < 1e-6);
}
