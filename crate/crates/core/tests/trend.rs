//! Small-scale version of the success-rate trend: K-Match drives the attack
//! down, and larger k does not help the attacker.

use graphanon::attack::{self, to_f64, AttackParams, Defence};
use graphanon::generators::er_graph_seeded;

#[test]
fn success_falls_with_k() {
    let params = AttackParams::default();
    let ks = [2usize, 3, 4];
    let instances = 16u64;
    let mut pseudo = 0.0;
    let mut by_k = [0.0; 3];
    for seed in 0..instances {
        let g = er_graph_seeded(40, 0.25, 500 + seed).unwrap();
        let env = attack::prepare(&g, 4, None, seed).unwrap();
        pseudo += to_f64(&attack::play(&env, Defence::PseudonymOnly, 2, &params, seed).unwrap().success);
        for (i, &k) in ks.iter().enumerate() {
            by_k[i] += to_f64(&attack::play(&env, Defence::Kmatch, k, &params, seed).unwrap().success);
        }
    }
    let n = instances as f64;
    pseudo /= n;
    let means: Vec<f64> = by_k.iter().map(|s| s / n).collect();
    assert!(pseudo >= 0.9, "pseudonym-only {pseudo}");
    for (i, &k) in ks.iter().enumerate() {
        assert!(means[i] <= 1.0 / k as f64 + 0.05, "k={k}: {}", means[i]);
        assert!(means[i] < pseudo);
    }
    assert!(means.windows(2).all(|w| w[1] <= w[0] + 0.05), "{means:?}");
}
