//! wasm-bindgen bindings for `www/index.html`. Everything crosses the
//! boundary as JSON strings.

use guard_core::assignment::{solve_assignment, RewardMatrix};
use guard_core::lqdg::GainCache;
use guard_core::pipeline::{PipelineConfig, AXES};
use guard_core::rollout::{solve_reward, AgentModels};
use guard_core::scenario::{generate_scenario, Scenario, ScenarioTemplate};
use guard_core::weights::EmphasisSpace;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Samples a scenario with the default template.
#[wasm_bindgen]
pub fn sample_scenario(seed: u64, interceptors: usize, threats: usize) -> Result<String, JsError> {
    let s = generate_scenario(seed, interceptors, threats, &ScenarioTemplate::default()).map_err(js)?;
    Ok(s.to_json())
}

/// Best capturing engagement of one group against one threat over horizons
/// `lo..=hi` (steps, stride `step`). Returns the reward, the chosen horizon
/// and the x/y track of every agent.
#[wasm_bindgen]
pub fn engage(
    scenario_json: &str,
    threat: usize,
    members: Vec<u32>,
    lo: usize,
    hi: usize,
    step: usize,
) -> Result<String, JsError> {
    let scenario = Scenario::from_json(scenario_json).map_err(js)?;
    scenario.validate().map_err(js)?;
    let config = PipelineConfig::default();
    let threat_state = scenario
        .threat_states()
        .get(threat)
        .cloned()
        .ok_or_else(|| js(format!("no threat {threat}")))?;
    let all = scenario.interceptor_states();
    let mut ids = members.clone();
    ids.sort_unstable();
    ids.dedup();
    let group = ids
        .iter()
        .map(|&i| all.get((i as usize).wrapping_sub(1)).cloned().ok_or_else(|| js(format!("no interceptor I{i}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if group.is_empty() {
        return Err(js("pick at least one interceptor"));
    }
    if step == 0 || hi < lo || lo == 0 {
        return Err(js("bad horizon range"));
    }
    let horizons: Vec<usize> = (lo..=hi).step_by(step).collect();
    let models = AgentModels::double_integrators(config.sample_time_s, AXES).map_err(js)?;
    let space = EmphasisSpace::focused(group.len(), &config.emphasis_ratios).map_err(js)?;
    let result = solve_reward(
        &threat_state,
        &group,
        &scenario.asset_state(),
        &models,
        &space,
        &horizons,
        &config.reward_config(&scenario),
        &GainCache::new(),
    )
    .map_err(js)?;

    let tracks: Vec<Vec<[f64; 2]>> = match &result.trajectory {
        Some(t) => (0..t.agents())
            .map(|a| t.states.iter().map(|x| [x[a * t.n_x], x[a * t.n_x + 1]]).collect())
            .collect(),
        None => Vec::new(),
    };
    let labels = scenario.engagement_ids(&ids.iter().map(|&i| i as usize).collect::<Vec<_>>(), threat);
    Ok(json!({
        "feasible": result.feasible(),
        "reward_ft": result.feasible().then_some(result.reward),
        "horizon_s": result.best_horizon.map(|h| h as f64 * config.sample_time_s),
        "capturing": result.capturing_slot.map(|s| labels[s + 1].clone()),
        "closest_approach_ft": result.closest_approach.is_finite().then_some(result.closest_approach),
        "labels": labels,
        "tracks": tracks,
    })
    .to_string())
}

/// Max-min assignment of a hand-written reward matrix (`values[threat][group]`,
/// groups in enumeration order).
#[wasm_bindgen]
pub fn assign(interceptors: usize, values_json: &str) -> Result<String, JsError> {
    let values: Vec<Vec<f64>> = serde_json::from_str(values_json).map_err(js)?;
    let rewards = RewardMatrix::from_values(interceptors, values).map_err(js)?;
    let solution = solve_assignment(&rewards, interceptors, rewards.threats()).map_err(js)?;
    let pairs: Vec<_> = solution
        .assigned_pairs
        .iter()
        .map(|&(j, c)| json!({ "threat": format!("T{}", j + 1), "group": rewards.groups[c].label(), "reward": rewards.values[j][c] }))
        .collect();
    Ok(json!({
        "regime": format!("{:?}", solution.regime),
        "objective": solution.objective,
        "sentinel": solution.sentinel_objective,
        "pairs": pairs,
    })
    .to_string())
}

/// Group labels in column order, for building the matrix editor.
#[wasm_bindgen]
pub fn group_labels(interceptors: usize) -> Result<Vec<String>, JsError> {
    Ok(guard_core::assignment::enumerate_groups(interceptors)
        .map_err(js)?
        .iter()
        .map(|g| g.label())
        .collect())
}
