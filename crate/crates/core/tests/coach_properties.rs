use coaching_core::coach::{coached_step, intervene, is_critical};
use coaching_core::dynamics::CartPoleState;
use coaching_core::{
    AgentTransition, CoachConfig, CoachedEnv, Env, EnvConfig, EnvId, PhysicsState,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coached(id: EnvId, cfg: CoachConfig) -> CoachedEnv {
    CoachedEnv::new(Env::new(EnvConfig::new(id)).unwrap(), cfg).unwrap()
}

fn single(theta: f64, theta_dot: f64) -> PhysicsState {
    PhysicsState::Single(CartPoleState::new(0.0, 0.0, theta, theta_dot))
}

/// Gains that actually return the state inside the boundary, so both
/// successful and failed interventions show up.
fn lively(id: EnvId) -> CoachConfig {
    let mut cfg = CoachConfig::for_env(id);
    cfg.gains.kd = 1.0;
    cfg
}

/// Plays one episode with random actions and returns the agent-visible
/// transitions.
fn play(env: &mut CoachedEnv, seed: u64, scale: f64) -> Vec<AgentTransition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    env.reset(1, seed);
    let mut out = Vec::new();
    while !env.is_done() {
        out.push(env.step(rng.gen_range(-scale..scale)).unwrap());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn buffer_purity_pendulum(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let mut env = coached(EnvId::InvertedPendulum, lively(EnvId::InvertedPendulum));
        let ts = play(&mut env, seed, scale);
        prop_assert_eq!(ts.len(), env.decisions());
        let visible: f64 = ts.iter().map(|t| t.reward).sum();
        let hidden: f64 = env.interventions().iter().map(|r| r.hidden_reward).sum();
        // pendulum rewards are 0 or 1, so the split is exact
        prop_assert_eq!(visible + hidden, env.env().emitted_reward());
        let steps: usize = env.interventions().iter().map(|r| r.steps_used).sum();
        prop_assert_eq!(env.decisions() + steps, env.env().steps_taken());
    }

    #[test]
    fn buffer_purity_double(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let mut env = coached(EnvId::DoublePendulum, lively(EnvId::DoublePendulum));
        let ts = play(&mut env, seed, scale);
        prop_assert_eq!(ts.len(), env.decisions());
        let visible: f64 = ts.iter().map(|t| t.reward).sum();
        let hidden: f64 = env.interventions().iter().map(|r| r.hidden_reward).sum();
        let total = env.env().emitted_reward();
        prop_assert!((visible + hidden - total).abs() <= 1e-9 * total.abs().max(1.0));
    }

    #[test]
    fn stored_next_obs_is_inside_or_explained(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let cfg = lively(EnvId::InvertedPendulum);
        let mut env = coached(EnvId::InvertedPendulum, cfg);
        let ts = play(&mut env, seed, scale);
        let failed_at: Vec<usize> = env
            .interventions()
            .iter()
            .filter(|r| !r.success)
            .map(|r| r.trigger_step)
            .collect();
        for (i, t) in ts.iter().enumerate() {
            let theta_dot = t.next_obs.0[3];
            prop_assert!(
                theta_dot.abs() <= cfg.boundary || t.terminal || t.truncated || failed_at.contains(&i),
                "transition {} ends at {}", i, theta_dot
            );
        }
        for r in env.interventions() {
            prop_assert!(r.steps_used <= cfg.max_intervention_steps);
            prop_assert_eq!(r.forces.len(), r.steps_used);
        }
    }

    #[test]
    fn infinite_boundary_and_disabled_coach_are_the_plain_env(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        for id in [EnvId::InvertedPendulum, EnvId::DoublePendulum] {
            let mut inf = CoachConfig::for_env(id);
            inf.boundary = f64::INFINITY;
            let mut a = coached(id, inf);
            let mut b = coached(id, CoachConfig::disabled(id));
            let ta = play(&mut a, seed, scale);
            let tb = play(&mut b, seed, scale);
            prop_assert_eq!(&ta, &tb);
            prop_assert!(a.interventions().is_empty() && b.interventions().is_empty());

            let mut plain = Env::new(EnvConfig::new(id)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            plain.reset(seed);
            for t in &ta {
                let r = plain.step(rng.gen_range(-scale..scale)).unwrap();
                prop_assert_eq!(&r.observation, &t.next_obs);
                prop_assert_eq!(r.reward, t.reward);
                prop_assert_eq!((r.terminal, r.truncated), (t.terminal, t.truncated));
            }
        }
    }
}

/// Replays the recorded intervention forces on an uncoached copy of the
/// environment and checks that the stitched transition matches it.
#[test]
fn stitched_transition_matches_replay() {
    let cfg = lively(EnvId::InvertedPendulum);
    let mut checked = 0;
    for seed in 0..400u64 {
        let mut env = Env::new(EnvConfig::new(EnvId::InvertedPendulum)).unwrap();
        env.reset(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut decision = 0;
        while !env.is_done() {
            let shadow = env.clone();
            let action = rng.gen_range(-3.0..3.0);
            let (t, record) = coached_step(&mut env, action, &cfg, 1, decision).unwrap();
            decision += 1;
            let mut replay = shadow;
            let first = replay.step(action).unwrap();
            assert_eq!(t.reward, first.reward);
            let Some(record) = record else {
                assert_eq!(t.next_obs, first.observation);
                continue;
            };
            checked += 1;
            let mut hidden = 0.0;
            for &f in &record.forces {
                hidden += replay.step(f).unwrap().reward;
            }
            assert_eq!(t.next_obs, replay.observation());
            assert_eq!(record.hidden_reward, hidden);
            assert_eq!(t.terminal, replay.is_terminated());
            assert_eq!(t.truncated, replay.is_truncated());
        }
    }
    assert!(checked > 100, "only {checked} interventions exercised");
}

#[test]
fn doomed_intervention_marks_agent_transition_terminal() {
    let cfg = CoachConfig::for_env(EnvId::InvertedPendulum);
    let start = single(0.175, 1.5);
    let mut env = Env::new(EnvConfig::new(EnvId::InvertedPendulum)).unwrap();
    env.reset_to(start).unwrap();
    let mut probe = env.clone();
    probe.step(0.0).unwrap();
    let landed = probe.state();
    assert!(!probe.is_done());
    assert!(is_critical(&landed, &cfg).unwrap());
    // every admissible force terminates from the landing state
    for i in 0..=400 {
        let f = -10.0 + 0.05 * i as f64;
        let mut e = Env::new(EnvConfig::new(EnvId::InvertedPendulum)).unwrap();
        e.reset_to(landed).unwrap();
        assert!(e.step(f).unwrap().terminal, "force {f} survives");
    }
    let (t, record) = coached_step(&mut env, 0.0, &cfg, 1, 0).unwrap();
    let record = record.expect("intervention ran");
    assert!(record.terminal_during && !record.success);
    assert_eq!(record.steps_used, 1);
    assert_eq!(record.hidden_reward, 0.0);
    assert!(t.terminal);
    assert_eq!(t.reward, 1.0);
}

#[test]
fn favourable_state_recovers_quickly() {
    let cfg = CoachConfig::for_env(EnvId::InvertedPendulum);
    let mut env = Env::new(EnvConfig::new(EnvId::InvertedPendulum)).unwrap();
    // just past the boundary while gravity already pulls theta_dot back
    env.reset_to(single(-0.05, 0.41)).unwrap();
    let r = intervene(&mut env, &cfg, 1, 0).unwrap();
    assert!(r.success && !r.terminal_during);
    assert!(r.steps_used <= 3);
    assert!(r.hidden_reward > 0.0);
    let PhysicsState::Single(s) = env.state() else {
        unreachable!()
    };
    assert!(s.theta_dot.abs() <= cfg.boundary);
}

#[test]
fn one_step_budget_on_diverging_state_fails() {
    let mut cfg = CoachConfig::for_env(EnvId::InvertedPendulum);
    cfg.max_intervention_steps = 1;
    let mut env = Env::new(EnvConfig::new(EnvId::InvertedPendulum)).unwrap();
    env.reset_to(single(0.1, 2.0)).unwrap();
    let r = intervene(&mut env, &cfg, 1, 0).unwrap();
    assert!(!r.success && !r.terminal_during);
    assert_eq!(r.steps_used, 1);
}

#[test]
fn intervening_inside_the_boundary_is_a_usage_error() {
    let cfg = CoachConfig::for_env(EnvId::InvertedPendulum);
    let mut env = Env::new(EnvConfig::new(EnvId::InvertedPendulum)).unwrap();
    env.reset_to(single(0.0, 0.4)).unwrap();
    assert!(intervene(&mut env, &cfg, 1, 0).is_err());
}
