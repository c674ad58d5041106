//! End-to-end run: reward matrix, assignment, and the final rollouts of the
//! assigned engagements.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assignment::{
    build_reward_matrix, solve_assignment, verify_assignment, AssignmentSolution, Regime, RewardMatrix, VerificationReport,
};
use crate::dynamics::stack_state;
use crate::error::{invalid, Result};
use crate::lqdg::GainCache;
use crate::rollout::{evaluate_pair, AgentModels, RewardConfig, Trajectory};
use crate::scenario::Scenario;
use crate::weights::EmphasisVector;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Spatial axes of every scenario engagement.
pub const AXES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub sample_time_s: f64,
    pub rho_u: f64,
    pub rho_v: f64,
    pub r_max_ft: f64,
    /// Candidate engagement horizons, in steps of `sample_time_s`.
    pub horizons_steps: Vec<usize>,
    /// Interceptor-focus ratios of the team emphasis space.
    pub emphasis_ratios: Vec<f64>,
    /// Weight the threat puts on its own distance to the asset.
    pub threat_emphasis: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_time_s: 0.005,
            rho_u: 1000.0,
            rho_v: 1000.0,
            r_max_ft: 20.0,
            horizons_steps: (120..=480).step_by(3).collect(),
            emphasis_ratios: vec![100.0],
            threat_emphasis: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_time_s.is_finite() && self.sample_time_s > 0.0) {
            return Err(invalid(format!("sample time must be positive, got {}", self.sample_time_s)));
        }
        for (name, v) in [
            ("rho_u", self.rho_u),
            ("rho_v", self.rho_v),
            ("r_max_ft", self.r_max_ft),
            ("threat_emphasis", self.threat_emphasis),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.horizons_steps.is_empty() || self.horizons_steps.contains(&0) {
            return Err(invalid("horizons must be a non-empty list of positive step counts"));
        }
        if self.emphasis_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("emphasis ratios must be positive"));
        }
        Ok(())
    }

    pub fn reward_config(&self, scenario: &Scenario) -> RewardConfig {
        RewardConfig {
            rho_u: self.rho_u,
            rho_v: self.rho_v,
            r_max: self.r_max_ft,
            r_c: scenario.capture_radius_ft,
            limits: scenario.input_limits(),
            threat_emphasis: self.threat_emphasis,
        }
    }
}

/// One assigned group–threat engagement, re-rolled with its stored `(d, H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engagement {
    pub threat: usize,
    pub threat_id: String,
    /// 1-based group number.
    pub group: usize,
    pub interceptor_ids: Vec<String>,
    pub reward_ft: f64,
    pub feasible: bool,
    pub horizon_steps: Option<usize>,
    pub horizon_s: Option<f64>,
    pub emphasis: Option<EmphasisVector>,
    pub capturing_interceptor: Option<String>,
    /// Smallest terminal interceptor–threat distance in the group, ft.
    pub miss_ft: Option<f64>,
    /// Terminal threat–asset distance, ft.
    pub intercept_distance_ft: Option<f64>,
    /// Stacked as asset, group members, threat.
    pub agent_ids: Vec<String>,
    pub trajectory: Option<Trajectory>,
}

impl Engagement {
    /// Summary numbers recomputed from the trajectory.
    pub fn recomputed(&self) -> Option<(f64, f64)> {
        self.trajectory.as_ref().map(summary_distances)
    }
}

fn summary_distances(t: &Trajectory) -> (f64, f64) {
    let miss = (0..t.m()).map(|s| t.terminal_miss(s)).fold(f64::INFINITY, f64::min);
    (miss, t.terminal_asset_distance())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub objective_ft: f64,
    pub sentinel_objective: bool,
    /// Threats without an assigned group or assigned only to a sentinel cell.
    pub uncovered_threats: Vec<String>,
    pub all_threats_intercepted: bool,
    pub multi_interceptor_groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub scenario: Scenario,
    pub config: PipelineConfig,
    pub rewards: RewardMatrix,
    pub assignment: AssignmentSolution,
    pub verification: VerificationReport,
    pub engagements: Vec<Engagement>,
    pub summary: RunSummary,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// True when the run should exit with success.
    pub fn succeeded(&self) -> bool {
        let covered = match self.assignment.regime {
            Regime::CoverThreats => self.summary.uncovered_threats.is_empty(),
            Regime::EmployAllInterceptors => true,
        };
        self.verification.is_valid() && !self.summary.sentinel_objective && covered
    }
}

/// Wall-clock seconds per stage. Kept out of [`RunReport`] so reports stay
/// byte-identical across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub reward_matrix_s: f64,
    pub assignment_s: f64,
    pub rollouts_s: f64,
}

pub fn compute_rewards(scenario: &Scenario, config: &PipelineConfig, cache: &GainCache) -> Result<RewardMatrix> {
    scenario.validate()?;
    config.validate()?;
    let models = AgentModels::double_integrators(config.sample_time_s, AXES)?;
    build_reward_matrix(
        &scenario.asset_state(),
        &scenario.interceptor_states(),
        &scenario.threat_states(),
        &models,
        &config.emphasis_ratios,
        &config.horizons_steps,
        &config.reward_config(scenario),
        cache,
    )
}

fn assigned_engagement(
    scenario: &Scenario,
    config: &PipelineConfig,
    rewards: &RewardMatrix,
    models: &AgentModels,
    cache: &GainCache,
    (j, c): (usize, usize),
) -> Result<Engagement> {
    let group = &rewards.groups[c];
    let threat = &scenario.threats.agents[j];
    let mut e = Engagement {
        threat: j,
        threat_id: threat.id.clone(),
        group: group.k,
        interceptor_ids: group
            .members
            .iter()
            .map(|&i| scenario.interceptors.agents[i - 1].id.clone())
            .collect(),
        reward_ft: rewards.values[j][c],
        feasible: rewards.feasible[j][c],
        horizon_steps: None,
        horizon_s: None,
        emphasis: None,
        capturing_interceptor: None,
        miss_ft: None,
        intercept_distance_ft: None,
        agent_ids: scenario.engagement_ids(&group.members, j),
        trajectory: None,
    };
    let Some(prov) = &rewards.provenance[j][c] else {
        return Ok(e);
    };
    let system = models.engagement(group.size())?;
    let interceptors = scenario.interceptor_states();
    let members: Vec<_> = group.members.iter().map(|&i| interceptors[i - 1].clone()).collect();
    let x0 = stack_state(&scenario.asset_state(), &members, &threat.state())?;
    let outcome = evaluate_pair(
        &system,
        &x0,
        &prov.best_emphasis,
        prov.best_horizon,
        &config.reward_config(scenario),
        cache,
    )?;
    let (miss, distance) = summary_distances(&outcome.trajectory);
    e.horizon_steps = Some(prov.best_horizon);
    e.horizon_s = Some(prov.best_horizon as f64 * config.sample_time_s);
    e.emphasis = Some(prov.best_emphasis.clone());
    e.capturing_interceptor = outcome.capturing_slot.map(|s| e.interceptor_ids[s].clone());
    e.miss_ft = Some(miss);
    e.intercept_distance_ft = Some(distance);
    e.trajectory = Some(outcome.trajectory);
    Ok(e)
}

/// Runs every stage on `scenario`. Reward cells run on the current rayon
/// pool; everything after is sequential, so the report does not depend on
/// the pool size.
pub fn run_pipeline(scenario: &Scenario, config: &PipelineConfig) -> Result<(RunReport, RunTimings)> {
    run_pipeline_with_cache(scenario, config, &GainCache::new())
}

/// Same as [`run_pipeline`] but reuses `cache`, so a batch of scenarios
/// solves each (group size, d, H) game once.
pub fn run_pipeline_with_cache(
    scenario: &Scenario,
    config: &PipelineConfig,
    cache: &GainCache,
) -> Result<(RunReport, RunTimings)> {
    let start = Instant::now();
    let rewards = compute_rewards(scenario, config, cache)?;
    let reward_matrix_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let (m, n) = (scenario.interceptor_count(), scenario.threat_count());
    let assignment = solve_assignment(&rewards, m, n)?;
    let verification = verify_assignment(&assignment.z, &rewards, m, n, assignment.regime);
    let assignment_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let models = AgentModels::double_integrators(config.sample_time_s, AXES)?;
    let engagements = assignment
        .assigned_pairs
        .iter()
        .map(|&pair| assigned_engagement(scenario, config, &rewards, &models, cache, pair))
        .collect::<Result<Vec<_>>>()?;
    let rollouts_s = start.elapsed().as_secs_f64();

    let covered: Vec<bool> = (0..n)
        .map(|j| engagements.iter().any(|e| e.threat == j && e.feasible))
        .collect();
    let uncovered_threats = covered
        .iter()
        .enumerate()
        .filter(|(_, c)| !**c)
        .map(|(j, _)| scenario.threats.agents[j].id.clone())
        .collect::<Vec<_>>();
    let summary = RunSummary {
        objective_ft: assignment.objective,
        sentinel_objective: assignment.sentinel_objective,
        all_threats_intercepted: uncovered_threats.is_empty()
            && engagements.iter().all(|e| e.capturing_interceptor.is_some()),
        uncovered_threats,
        multi_interceptor_groups: engagements.iter().filter(|e| e.interceptor_ids.len() > 1).count(),
    };
    if !summary.uncovered_threats.is_empty() {
        log::warn!("threats left uncovered: {}", summary.uncovered_threats.join(", "));
    }
    let report = RunReport {
        schema: REPORT_SCHEMA_VERSION,
        scenario: scenario.clone(),
        config: config.clone(),
        rewards,
        assignment,
        verification,
        engagements,
        summary,
    };
    Ok((
        report,
        RunTimings {
            reward_matrix_s,
            assignment_s,
            rollouts_s,
        },
    ))
}
