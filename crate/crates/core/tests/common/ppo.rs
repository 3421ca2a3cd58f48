use ethgnn::rl::*;
use rand::Rng;

use super::rng;

pub fn three_step_trajectory(params: &PpoParams) -> PpoTrajectory {
    let mut r = rng(301);
    let mut traj = PpoTrajectory::default();
    // Offsets put step 0 inside the clip band and steps 1 and 2 outside it.
    let offsets = [0.05, 0.5, -0.4];
    for (t, off) in offsets.into_iter().enumerate() {
        let state: Vec<f64> = (0..3).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
        let action = t % params.n_actions();
        let lp = params.log_probs(&state).unwrap()[action];
        let value = params.value_of(&state).unwrap();
        traj.push(state, action, lp + off, value, [1.0, -0.5, 2.0][t]);
    }
    compute_advantages(traj, 0.9).unwrap()
}

pub fn perturbed_params(seed: u64) -> PpoParams {
    let cfg = PpoConfig { hidden: 5, entropy_coef: 0.05, ..Default::default() };
    let mut p = PpoParams::init(&cfg, 3, 4, &mut rng(seed));
    // Larger output weights so the policy is far from uniform.
    for v in p.policy.w2.as_mut_slice() {
        *v *= 100.0;
    }
    for (i, v) in p.policy.b1.iter_mut().enumerate() {
        *v = 0.1 * i as f64;
    }
    p
}
