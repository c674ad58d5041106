use guard_core::dynamics::{g_to_ftps2, stack_state, AgentState};
use guard_core::lqdg::{solve_gains, solve_lqdg, Feedback, GainCache, Gains};
use guard_core::rollout::{
    evaluate_pair, read_trajectory_csv, simulate_engagement, solve_reward, write_trajectory_csv, AgentModels,
    InputLimits, RewardConfig, INFEASIBLE_REWARD,
};
use guard_core::weights::{build_team_objectives, EmphasisSpace, EmphasisVector, WeightConfig};

const DT: f64 = 0.005;

fn config() -> RewardConfig {
    RewardConfig {
        rho_u: 1000.0,
        rho_v: 1000.0,
        r_max: 20.0,
        r_c: 20.0,
        limits: InputLimits {
            asset: 0.0,
            interceptor: g_to_ftps2(20.0),
            threat: g_to_ftps2(30.0),
        },
        threat_emphasis: 1.0,
    }
}

fn agent(p: [f64; 3], v: [f64; 3]) -> AgentState {
    AgentState::from_slices(&p, &v).unwrap()
}

fn asset() -> AgentState {
    agent([0.0; 3], [0.0, 50.0, 0.0])
}

#[test]
fn per_axis_gains_match_the_full_solve() {
    let models = AgentModels::double_integrators(DT, 3).unwrap();
    for m in 1..=3 {
        let system = models.engagement(m).unwrap();
        let wc = WeightConfig {
            rho_u: 1000.0,
            rho_v: 1000.0,
            u_max: g_to_ftps2(20.0),
            v_max: g_to_ftps2(30.0),
            r_max: 20.0,
            horizon: 40,
            m,
            n_u: 3,
        };
        let d = EmphasisVector::interceptor_focus(m, 0, 100.0).unwrap();
        let weights = build_team_objectives(&wc, &d, &EmphasisVector::uniform(m))
            .unwrap()
            .team_game()
            .unwrap();
        let (full, _) = solve_lqdg(&system, &weights).unwrap();
        let reduced = solve_gains(&system, &weights).unwrap();
        assert!(matches!(reduced, Gains::PerAxis(_)));
        let expanded = reduced.to_full();
        for h in 0..40 {
            let scale = full.f[h].norm().max(1e-300);
            assert!((&expanded.f[h] - &full.f[h]).norm() / scale < 1e-9, "F m={m} h={h}");
            let scale = full.g[h].norm().max(1e-300);
            assert!((&expanded.g[h] - &full.g[h]).norm() / scale < 1e-9, "G m={m} h={h}");
        }
        // commands through the trait agree with the dense product
        let x = nalgebra::DVector::from_fn(system.state_dim(), |i, _| (i as f64 * 37.0) % 101.0 - 50.0);
        let dense = &full.f[7] * &x;
        let fast = reduced.team_command(7, &x);
        assert!((dense - fast).norm() < 1e-9 * x.norm() * full.f[7].norm());
    }
}

#[test]
fn colocated_interceptor_captures() {
    let models = AgentModels::double_integrators(DT, 3).unwrap();
    let threat = agent([5000.0, 0.0, 0.0], [0.0; 3]);
    let interceptor = threat.clone();
    let asset = agent([0.0; 3], [0.0; 3]);
    let space = EmphasisSpace::new(vec![EmphasisVector::uniform(1)]).unwrap();
    let r = solve_reward(&threat, &[interceptor], &asset, &models, &space, &[10], &config(), &GainCache::new()).unwrap();
    assert!(r.feasible());
    assert_eq!(r.capturing_slot, Some(0));
    let t = r.trajectory.as_ref().unwrap();
    assert!(t.terminal_miss(0) <= 20.0);
    assert_eq!(r.reward, t.terminal_asset_distance());
    assert!((r.reward - 5000.0).abs() < 50.0, "{}", r.reward);
}

#[test]
fn unreachable_threat_gets_the_sentinel() {
    let models = AgentModels::double_integrators(DT, 3).unwrap();
    let threat = agent([8000.0, 0.0, 0.0], [-2600.0, 0.0, 0.0]);
    let far = agent([-1.0e6, 0.0, 0.0], [0.0; 3]);
    let space = EmphasisSpace::focused(1, &[100.0]).unwrap();
    let r = solve_reward(&threat, &[far], &asset(), &models, &space, &[5, 10], &config(), &GainCache::new()).unwrap();
    assert!(!r.feasible());
    assert_eq!(r.reward, INFEASIBLE_REWARD);
    assert!(r.trajectory.is_none());
    assert!(r.closest_approach > 1.0e6);
}

fn head_on() -> (AgentState, Vec<AgentState>) {
    let threat = agent([7000.0, 40.0, 0.0], [-2600.0, 0.0, 0.0]);
    let group = vec![
        agent([100.0, 0.0, 0.0], [2000.0, 0.0, 0.0]),
        agent([0.0, 150.0, 0.0], [1950.0, 0.0, 0.0]),
    ];
    (threat, group)
}

#[test]
fn reward_grows_with_the_search_set_and_replays() {
    let models = AgentModels::double_integrators(DT, 3).unwrap();
    let (threat, group) = head_on();
    let cache = GainCache::new();
    let space = EmphasisSpace::focused(2, &[100.0]).unwrap();
    let small: Vec<usize> = (280..=320).step_by(4).collect();
    let large: Vec<usize> = (260..=340).step_by(2).collect();
    let a = solve_reward(&threat, &group, &asset(), &models, &space, &small, &config(), &cache).unwrap();
    let b = solve_reward(&threat, &group, &asset(), &models, &space, &large, &config(), &cache).unwrap();
    assert!(b.reward >= a.reward);
    assert!(b.feasible(), "head-on pair should capture somewhere in the grid");

    // the stored pair reproduces the reward exactly and satisfies capture
    let system = models.engagement(2).unwrap();
    let x0 = stack_state(&asset(), &group, &threat).unwrap();
    let again = evaluate_pair(&system, &x0, b.best_emphasis.as_ref().unwrap(), b.best_horizon.unwrap(), &config(), &cache).unwrap();
    assert_eq!(again.asset_distance, b.reward);
    assert_eq!(Some(&again.trajectory), b.trajectory.as_ref());
    assert!(again.trajectory.terminal_miss(b.capturing_slot.unwrap()) <= 20.0);
    assert_eq!(again.trajectory.replay_mismatch(&system), None);
    assert!(again.trajectory.within_limits(&config().limits));
    assert!(b.closest_approach <= again.trajectory.closest_approach());
}

#[test]
fn csv_round_trip_is_exact() {
    let models = AgentModels::double_integrators(DT, 3).unwrap();
    let (threat, group) = head_on();
    let system = models.engagement(2).unwrap();
    let x0 = stack_state(&asset(), &group, &threat).unwrap();
    let cfg = config();
    let wc = cfg.weight_config(2, 3, 120);
    let obj = build_team_objectives(&wc, &EmphasisVector::uniform(2), &EmphasisVector::uniform(2)).unwrap();
    let team = solve_gains(&system, &obj.team_game().unwrap()).unwrap();
    let threat_gains = solve_gains(&system, &obj.threat_game().unwrap()).unwrap();
    let t = simulate_engagement(&system, &team, &threat_gains, &x0, &cfg.limits).unwrap();
    let ids: Vec<String> = ["asset", "I1", "I2", "T1"].iter().map(|s| s.to_string()).collect();
    let mut buf = Vec::new();
    write_trajectory_csv(&t, &ids, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("time_s,agent_id,px,py,pz,vx,vy,vz,ux,uy,uz\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 121);
    let (back, back_ids) = read_trajectory_csv(&buf[..], DT).unwrap();
    assert_eq!(back_ids, ids);
    assert_eq!(back, t);
    assert_eq!(back.replay_mismatch(&system), None);
}

#[test]
fn csv_reader_rejects_damage() {
    assert!(read_trajectory_csv("time_s,agent_id\n0,asset\n".as_bytes(), DT).is_err());
    let bad = "time_s,agent_id,px,py,pz,vx,vy,vz,ux,uy,uz\n0,asset,x,0,0,0,0,0,0,0,0\n";
    assert!(read_trajectory_csv(bad.as_bytes(), DT).is_err());
}

#[test]
fn cache_solves_each_game_once() {
    let models = AgentModels::double_integrators(DT, 3).unwrap();
    let (threat, group) = head_on();
    let cache = GainCache::new();
    let space = EmphasisSpace::focused(2, &[100.0]).unwrap();
    let horizons = [100, 110];
    solve_reward(&threat, &group, &asset(), &models, &space, &horizons, &config(), &cache).unwrap();
    // per horizon: one game per emphasis vector plus the threat's game
    assert_eq!(cache.len(), horizons.len() * (space.len() + 1));
    solve_reward(&threat, &group, &asset(), &models, &space, &horizons, &config(), &cache).unwrap();
    assert_eq!(cache.len(), horizons.len() * (space.len() + 1));
}
