//! Oracles shared by the integration and acceptance tests. Each one is
//! written independently of the library code it checks.
#![allow(dead_code)]

use coaching_core::dynamics::{
    rk4_step, CartPole, CartPoleState, DoubleCartPole, DoubleCartPoleState, Mechanism,
    MechanismParams, StateVector,
};
use coaching_core::ppo::{loss_and_grad, Agent, AgentParams, PpoConfig, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Energy from explicit particle positions, differentiated numerically in
/// time along the state's velocity field, so it shares no algebra with the
/// library's energy helpers.
pub fn particle_energy_single(s: &CartPoleState, p: &MechanismParams) -> f64 {
    let pos = |st: &CartPoleState| {
        let bob = (
            st.x - p.pole_length * st.theta.sin(),
            p.pole_length * st.theta.cos(),
        );
        (st.x, bob)
    };
    let h = 1e-6;
    let fwd = pos(&CartPoleState::new(
        s.x + h * s.x_dot,
        0.0,
        s.theta + h * s.theta_dot,
        0.0,
    ));
    let bwd = pos(&CartPoleState::new(
        s.x - h * s.x_dot,
        0.0,
        s.theta - h * s.theta_dot,
        0.0,
    ));
    let cart_v = (fwd.0 - bwd.0) / (2.0 * h);
    let bob_v = (
        (fwd.1 .0 - bwd.1 .0) / (2.0 * h),
        (fwd.1 .1 - bwd.1 .1) / (2.0 * h),
    );
    let (_, bob) = pos(s);
    0.5 * p.cart_mass * cart_v * cart_v
        + 0.5 * p.pole_mass * (bob_v.0 * bob_v.0 + bob_v.1 * bob_v.1)
        + p.pole_mass * p.gravity * bob.1
}

pub fn particle_energy_double(s: &DoubleCartPoleState, p: &MechanismParams) -> f64 {
    let l = p.pole_length;
    let pos = |x: f64, t1: f64, t2: f64| {
        let b1 = (x - l * t1.sin(), l * t1.cos());
        let b2 = (b1.0 - l * t2.sin(), b1.1 + l * t2.cos());
        (x, b1, b2)
    };
    let h = 1e-6;
    let f = pos(
        s.x + h * s.x_dot,
        s.theta1 + h * s.theta1_dot,
        s.theta2 + h * s.theta2_dot,
    );
    let b = pos(
        s.x - h * s.x_dot,
        s.theta1 - h * s.theta1_dot,
        s.theta2 - h * s.theta2_dot,
    );
    let d = |a: f64, c: f64| (a - c) / (2.0 * h);
    let vc = d(f.0, b.0);
    let v1 = (d(f.1 .0, b.1 .0), d(f.1 .1, b.1 .1));
    let v2 = (d(f.2 .0, b.2 .0), d(f.2 .1, b.2 .1));
    let (_, b1, b2) = pos(s.x, s.theta1, s.theta2);
    0.5 * p.cart_mass * vc * vc
        + 0.5 * p.pole_mass * (v1.0 * v1.0 + v1.1 * v1.1 + v2.0 * v2.0 + v2.1 * v2.1)
        + p.pole_mass * p.gravity * (b1.1 + b2.1)
}

pub fn rollout<M: Mechanism>(mech: &M, s: &M::State, force: f64, steps: usize) -> M::State {
    let mut s = *s;
    for _ in 0..steps {
        s = rk4_step(mech, &s, force).unwrap();
    }
    s
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Worst relative drift of the particle-oracle energy over `steps` zero-force
/// steps.
pub fn single_energy_drift(s: CartPoleState, steps: usize) -> f64 {
    let p = MechanismParams::cart_pole();
    let mech = CartPole::new(p);
    let mut s = s;
    let e0 = particle_energy_single(&s, &p);
    let mut worst = 0.0_f64;
    for _ in 0..steps {
        s = rk4_step(&mech, &s, 0.0).unwrap();
        worst = worst.max(((particle_energy_single(&s, &p) - e0) / e0).abs());
    }
    worst
}

pub fn double_energy_drift(s: DoubleCartPoleState, steps: usize) -> f64 {
    let p = MechanismParams::double_cart_pole();
    let mech = DoubleCartPole::new(p);
    let mut s = s;
    let e0 = particle_energy_double(&s, &p);
    let mut worst = 0.0_f64;
    for _ in 0..steps {
        s = rk4_step(&mech, &s, 0.0).unwrap();
        worst = worst.max(((particle_energy_double(&s, &p) - e0) / e0).abs());
    }
    worst
}

/// Large-amplitude swing about the hanging configuration. Released from
/// upright, the light links tumble fast enough that dt=0.01 only holds
/// energy to ~1e-3.
pub fn hanging_swing() -> DoubleCartPoleState {
    DoubleCartPoleState {
        theta1: std::f64::consts::PI - 1.0,
        theta2: std::f64::consts::PI,
        ..Default::default()
    }
}

/// Ratio of one-second rollout errors at dt=0.02 and dt=0.01 against a
/// dt=1e-4 reference, for both mechanisms. Fourth order gives 16.
pub fn rk4_convergence_ratios() -> (f64, f64) {
    let base = MechanismParams::cart_pole();
    let s = CartPoleState::new(0.0, 0.1, 0.01, 0.02);
    let run = |dt: f64| {
        let mut p = base;
        p.dt = dt;
        rollout(&CartPole::new(p), &s, 0.0, (1.0 / dt).round() as usize).to_vec()
    };
    let reference = run(1e-4);
    let single = max_abs_diff(&run(0.02), &reference) / max_abs_diff(&run(0.01), &reference);

    let dbase = MechanismParams::double_cart_pole();
    let ds = DoubleCartPoleState {
        theta1: 0.01,
        theta2: -0.005,
        x_dot: 0.1,
        ..Default::default()
    };
    let drun = |dt: f64| {
        let mut p = dbase;
        p.dt = dt;
        rollout(
            &DoubleCartPole::new(p),
            &ds,
            0.0,
            (1.0 / dt).round() as usize,
        )
        .to_vec()
    };
    let reference = drun(1e-4);
    let double = max_abs_diff(&drun(0.02), &reference) / max_abs_diff(&drun(0.01), &reference);
    (single, double)
}

/// A_t = sum_l (gamma lam)^l delta_{t+l}, evaluated term by term.
pub fn gae_oracle(
    rewards: &[f64],
    values: &[f64],
    terminal: bool,
    gamma: f64,
    lam: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let v = |t: usize| if t == n && terminal { 0.0 } else { values[t] };
    let delta: Vec<f64> = (0..n)
        .map(|t| rewards[t] + gamma * v(t + 1) - v(t))
        .collect();
    (0..n)
        .map(|t| {
            (t..n)
                .map(|k| (gamma * lam).powi((k - t) as i32) * delta[k])
                .sum()
        })
        .collect()
}

/// Random short episode for GAE checks.
pub struct GaeCase {
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub terminal: bool,
    pub gamma: f64,
    pub lam: f64,
}

pub fn random_gae_case(rng: &mut ChaCha8Rng) -> GaeCase {
    let n = rng.gen_range(1..=10);
    GaeCase {
        rewards: (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        values: (0..=n).map(|_| rng.gen_range(-20.0..20.0)).collect(),
        terminal: rng.gen_bool(0.5),
        gamma: rng.gen_range(0.5..=1.0),
        lam: rng.gen_range(0.0..=1.0),
    }
}

pub fn streak_oracle(scores: &[f64], target: f64, k: usize) -> Option<usize> {
    (k..=scores.len()).find(|&end| scores[end - k..end].iter().all(|&s| s > target))
}

pub fn average_oracle(scores: &[f64], target: f64, window: usize) -> Option<usize> {
    (window..=scores.len()).find(|&end| {
        let total: f64 = scores[end - window..end].iter().sum();
        total > target * window as f64
    })
}

pub fn toy_params(obs_dim: usize, hidden: usize, seed: u64) -> AgentParams {
    let cfg = PpoConfig {
        hidden,
        ..PpoConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = Agent::new(obs_dim, 1, cfg, &mut rng).unwrap();
    // lift the tiny output layer so every weight carries gradient
    for w in agent.params.policy.mean_net.params_mut() {
        *w += 0.3 * rng.sample::<f64, _>(StandardNormal);
    }
    agent.params.policy.log_std[0] = -0.4;
    agent.params
}

pub fn toy_samples(params: &AgentParams, n: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    (0..n)
        .map(|_| {
            let input: Vec<f64> = (0..params.obs_dim())
                .map(|_| rng.gen_range(-1.5..1.5))
                .collect();
            let d = params.act(&input, rng, false);
            // keep the probability ratio away from the clip kinks
            let offset = rng.gen_range(-0.1..0.1);
            Sample {
                logprob_old: d.logprob + offset,
                action: d.action,
                input,
                advantage: rng.gen_range(-2.0..2.0),
                value_target: rng.gen_range(-3.0..3.0),
            }
        })
        .collect()
}

/// Largest relative disagreement between the analytic gradient of the total
/// loss and central differences at step `h`, over every parameter.
/// Components whose magnitude is below 1e-6 are rounding noise in the
/// difference quotient and are held to an absolute 1e-10 instead.
pub fn gradient_check(params: &AgentParams, samples: &[Sample], cfg: &PpoConfig, h: f64) -> f64 {
    let (_, grads) = loss_and_grad(params, samples, cfg);
    let loss = |p: &AgentParams| loss_and_grad(p, samples, cfg).0.total(cfg.entropy_coef);
    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, perturb: &dyn Fn(&mut AgentParams, f64)| {
        let mut plus = params.clone();
        perturb(&mut plus, h);
        let mut minus = params.clone();
        perturb(&mut minus, -h);
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
        let scale = analytic.abs().max(numeric.abs());
        if scale > 1e-6 {
            worst = worst.max((analytic - numeric).abs() / scale);
        } else if (analytic - numeric).abs() > 1e-10 {
            worst = f64::INFINITY;
        }
    };
    for i in 0..grads.policy.len() {
        check(grads.policy[i], &|p, d| {
            p.policy.mean_net.params_mut()[i] += d
        });
    }
    for j in 0..grads.log_std.len() {
        check(grads.log_std[j], &|p, d| p.policy.log_std[j] += d);
    }
    for i in 0..grads.value.len() {
        check(grads.value[i], &|p, d| p.value.net.params_mut()[i] += d);
    }
    worst
}
