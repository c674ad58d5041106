//! Closed-loop engagement prediction and the intercept reward search.

use std::io::{Read, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    build_engagement_system, stack_state, AgentModel, AgentState, EngagementSystem, StackedState,
};
use crate::error::{invalid, Error, Result};
use crate::lqdg::{solve_gains, CacheKey, Feedback, GainCache};
use crate::weights::{build_team_objectives, EmphasisSpace, EmphasisVector, WeightConfig};

/// Reward assigned to a group–threat pairing with no predicted intercept, ft.
pub const INFEASIBLE_REWARD: f64 = -1e9;

/// Clamps each component of `command` to `[−limit, limit]`.
///
/// A zero limit pins the command to zero (a non-maneuvering agent).
pub fn saturate(command: &DVector<f64>, limit: f64) -> DVector<f64> {
    command.map(|c| c.clamp(-limit, limit))
}

/// Per-component acceleration bounds, ft/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputLimits {
    pub asset: f64,
    pub interceptor: f64,
    pub threat: f64,
}

impl InputLimits {
    /// Same bound for every team member.
    pub fn uniform(u_max: f64, v_max: f64) -> Self {
        Self {
            asset: u_max,
            interceptor: u_max,
            threat: v_max,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("asset", self.asset), ("interceptor", self.interceptor), ("threat", self.threat)] {
            if v.is_nan() || v < 0.0 {
                return Err(invalid(format!("{name} acceleration limit must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn saturate_team(&self, command: &mut [f64], n_u: usize) {
        for (i, c) in command.iter_mut().enumerate() {
            let limit = if i < n_u { self.asset } else { self.interceptor };
            *c = c.clamp(-limit, limit);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sample_time: f64,
    /// Per-agent state dimension.
    pub n_x: usize,
    /// `H + 1` stacked states.
    pub states: Vec<Vec<f64>>,
    /// `H` team inputs (asset first).
    pub u_inputs: Vec<Vec<f64>>,
    /// `H` threat inputs.
    pub v_inputs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.u_inputs.len()
    }

    pub fn agents(&self) -> usize {
        self.states[0].len() / self.n_x
    }

    pub fn m(&self) -> usize {
        self.agents() - 2
    }

    pub fn n_u(&self) -> usize {
        self.n_x / 2
    }

    pub fn state(&self, h: usize) -> StackedState {
        StackedState::from_vector(DVector::from_column_slice(&self.states[h]), self.n_x)
            .expect("trajectory states are well formed")
    }

    pub fn terminal(&self) -> StackedState {
        self.state(self.horizon())
    }

    fn distance(&self, h: usize, a: usize, b: usize) -> f64 {
        agent_distance(&self.states[h], self.n_x, a, b)
    }

    /// Terminal distance from interceptor `slot` to the threat.
    pub fn terminal_miss(&self, slot: usize) -> f64 {
        self.distance(self.horizon(), 1 + slot, self.agents() - 1)
    }

    /// Terminal threat–asset distance.
    pub fn terminal_asset_distance(&self) -> f64 {
        self.distance(self.horizon(), self.agents() - 1, 0)
    }

    /// Closest any interceptor came to the threat over the whole rollout.
    pub fn closest_approach(&self) -> f64 {
        let t = self.agents() - 1;
        (0..=self.horizon())
            .flat_map(|h| (1..t).map(move |i| (h, i)))
            .map(|(h, i)| self.distance(h, i, t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Slot of the interceptor within `r_c` of the threat at the final step
    /// (the closest one if several qualify).
    pub fn capturing_slot(&self, r_c: f64) -> Option<usize> {
        terminal_capture(&self.states[self.horizon()], self.n_x, r_c)
    }

    /// Re-applies the state recursion to the recorded inputs and reports the
    /// first step that does not reproduce bit-for-bit.
    pub fn replay_mismatch(&self, system: &EngagementSystem) -> Option<usize> {
        let mut x = DVector::from_column_slice(&self.states[0]);
        for h in 0..self.horizon() {
            let u = DVector::from_column_slice(&self.u_inputs[h]);
            let v = DVector::from_column_slice(&self.v_inputs[h]);
            x = system.step(&x, &u, &v);
            if x.as_slice() != self.states[h + 1].as_slice() {
                return Some(h + 1);
            }
        }
        None
    }

    /// True when every recorded input respects `limits` exactly.
    pub fn within_limits(&self, limits: &InputLimits) -> bool {
        let n_u = self.n_u();
        let team_ok = self.u_inputs.iter().all(|u| {
            u.iter().enumerate().all(|(i, c)| {
                let limit = if i < n_u { limits.asset } else { limits.interceptor };
                c.abs() <= limit
            })
        });
        team_ok && self.v_inputs.iter().all(|v| v.iter().all(|c| c.abs() <= limits.threat))
    }
}

/// Position distance between agents `a` and `b` of a stacked state.
fn agent_distance(x: &[f64], n_x: usize, a: usize, b: usize) -> f64 {
    let n_p = n_x / 2;
    x[a * n_x..a * n_x + n_p]
        .iter()
        .zip(&x[b * n_x..b * n_x + n_p])
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Interceptor slot closest to the threat in `x`, if within `r_c`.
fn terminal_capture(x: &[f64], n_x: usize, r_c: f64) -> Option<usize> {
    let threat = x.len() / n_x - 1;
    let (slot, miss) = (0..threat - 1)
        .map(|s| (s, agent_distance(x, n_x, 1 + s, threat)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    (miss <= r_c).then_some(slot)
}

fn closest_in(x: &[f64], n_x: usize) -> f64 {
    let threat = x.len() / n_x - 1;
    (1..threat)
        .map(|i| agent_distance(x, n_x, i, threat))
        .fold(f64::INFINITY, f64::min)
}

/// Forward rollout with saturated feedback. Team commands come from
/// `team_law`, threat commands from `threat_law`.
pub fn simulate_engagement(
    system: &EngagementSystem,
    team_law: &dyn Feedback,
    threat_law: &dyn Feedback,
    x0: &StackedState,
    limits: &InputLimits,
) -> Result<Trajectory> {
    let horizon = team_law.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut u_inputs = Vec::with_capacity(horizon);
    let mut v_inputs = Vec::with_capacity(horizon);
    states.push(x0.as_vector().as_slice().to_vec());
    roll(system, team_law, threat_law, x0, limits, |x, u, v| {
        states.push(x.to_vec());
        u_inputs.push(u.to_vec());
        v_inputs.push(v.to_vec());
    })?;
    Ok(Trajectory {
        sample_time: system.sample_time,
        n_x: system.n_x,
        states,
        u_inputs,
        v_inputs,
    })
}

/// The rollout loop. `record` sees each new state with the inputs that
/// produced it; the terminal state is returned.
fn roll(
    system: &EngagementSystem,
    team_law: &dyn Feedback,
    threat_law: &dyn Feedback,
    x0: &StackedState,
    limits: &InputLimits,
    mut record: impl FnMut(&[f64], &[f64], &[f64]),
) -> Result<Vec<f64>> {
    limits.validate()?;
    let horizon = team_law.horizon();
    if threat_law.horizon() != horizon {
        return Err(invalid(format!(
            "team gains cover {horizon} steps but threat gains cover {}",
            threat_law.horizon()
        )));
    }
    if x0.as_vector().len() != system.state_dim() {
        return Err(invalid("initial state does not match the system dimension"));
    }
    if team_law.team_inputs() != system.team_input_dim() || threat_law.threat_inputs() != system.n_u {
        return Err(invalid("gain dimensions do not match the system"));
    }
    let mut x = x0.as_vector().as_slice().to_vec();
    let mut next = vec![0.0; x.len()];
    let mut u = vec![0.0; system.team_input_dim()];
    let mut v = vec![0.0; system.n_u];
    for h in 0..horizon {
        team_law.team_command_into(h, &x, &mut u);
        limits.saturate_team(&mut u, system.n_u);
        threat_law.threat_command_into(h, &x, &mut v);
        for c in v.iter_mut() {
            *c = c.clamp(-limits.threat, limits.threat);
        }
        system.step_into(&x, &u, &v, &mut next);
        if next.iter().any(|c| !c.is_finite()) {
            return Err(Error::Blowup { step: h + 1 });
        }
        std::mem::swap(&mut x, &mut next);
        record(&x, &u, &v);
    }
    Ok(x)
}

/// Agent models for the three classes.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModels {
    pub asset: AgentModel,
    pub interceptor: AgentModel,
    pub threat: AgentModel,
}

impl AgentModels {
    pub fn double_integrators(sample_time: f64, n_u: usize) -> Result<Self> {
        let model = crate::dynamics::discretize_double_integrator(sample_time, n_u)?;
        Ok(Self {
            asset: model.clone(),
            interceptor: model.clone(),
            threat: model,
        })
    }

    pub fn engagement(&self, m: usize) -> Result<EngagementSystem> {
        build_engagement_system(&self.asset, &self.interceptor, &self.threat, m)
    }
}

/// Everything the reward search needs besides the states and search sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub rho_u: f64,
    pub rho_v: f64,
    /// Largest acceptable relative distance in the terminal weight, ft.
    pub r_max: f64,
    /// Capture radius, ft.
    pub r_c: f64,
    /// Saturation bounds; the interceptor and threat bounds also normalize
    /// the team and threat input weights.
    pub limits: InputLimits,
    /// Threat-side emphasis on its distance to the asset (others are 1).
    pub threat_emphasis: f64,
}

impl RewardConfig {
    pub fn weight_config(&self, m: usize, n_u: usize, horizon: usize) -> WeightConfig {
        WeightConfig {
            rho_u: self.rho_u,
            rho_v: self.rho_v,
            u_max: self.limits.interceptor,
            v_max: self.limits.threat,
            r_max: self.r_max,
            horizon,
            m,
            n_u,
        }
    }
}

/// Outcome of one `(emphasis, horizon)` evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub trajectory: Trajectory,
    pub capturing_slot: Option<usize>,
    pub asset_distance: f64,
}

fn pair_key(system: &EngagementSystem, config: &RewardConfig, horizon: usize, d: Option<&EmphasisVector>) -> CacheKey {
    let mut h = Sha256::new();
    h.update(if d.is_some() { b"team-game" } else { b"threat-gm" });
    h.update(system.fingerprint());
    h.update((horizon as u64).to_le_bytes());
    for v in [
        config.rho_u,
        config.rho_v,
        config.r_max,
        config.limits.interceptor,
        config.limits.threat,
        config.threat_emphasis,
    ] {
        h.update(v.to_bits().to_le_bytes());
    }
    for v in d.map_or(&[][..], |d| d.values()) {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().into()
}

type PairGains = (std::sync::Arc<crate::lqdg::Gains>, std::sync::Arc<crate::lqdg::Gains>);

fn pair_gains(
    system: &EngagementSystem,
    d: &EmphasisVector,
    horizon: usize,
    config: &RewardConfig,
    cache: &GainCache,
) -> Result<PairGains> {
    let objectives = || {
        let wc = config.weight_config(system.m, system.n_u, horizon);
        let d_threat = EmphasisVector::asset_focus(system.m, config.threat_emphasis)?;
        build_team_objectives(&wc, d, &d_threat)
    };
    let team = cache.get_or_insert_with(pair_key(system, config, horizon, Some(d)), || {
        solve_gains(system, &objectives()?.team_game()?)
    })?;
    let threat = cache.get_or_insert_with(pair_key(system, config, horizon, None), || {
        solve_gains(system, &objectives()?.threat_game()?)
    })?;
    Ok((team, threat))
}

/// Solves both games for one `(d, H)` pair and rolls the engagement out.
pub fn evaluate_pair(
    system: &EngagementSystem,
    x0: &StackedState,
    d: &EmphasisVector,
    horizon: usize,
    config: &RewardConfig,
    cache: &GainCache,
) -> Result<PairOutcome> {
    let (team, threat) = pair_gains(system, d, horizon, config, cache)?;
    let trajectory = simulate_engagement(system, team.as_ref(), threat.as_ref(), x0, &config.limits)?;
    Ok(PairOutcome {
        capturing_slot: trajectory.capturing_slot(config.r_c),
        asset_distance: trajectory.terminal_asset_distance(),
        trajectory,
    })
}

/// [`evaluate_pair`] without keeping the trajectory: `(capturing slot,
/// terminal asset distance, closest approach)`.
fn probe_pair(
    system: &EngagementSystem,
    x0: &StackedState,
    d: &EmphasisVector,
    horizon: usize,
    config: &RewardConfig,
    cache: &GainCache,
) -> Result<(Option<usize>, f64, f64)> {
    let (team, threat) = pair_gains(system, d, horizon, config, cache)?;
    let n_x = system.n_x;
    let mut closest = closest_in(x0.as_vector().as_slice(), n_x);
    let end = roll(system, team.as_ref(), threat.as_ref(), x0, &config.limits, |x, _, _| {
        closest = closest.min(closest_in(x, n_x));
    })?;
    let threat_agent = end.len() / n_x - 1;
    Ok((
        terminal_capture(&end, n_x, config.r_c),
        agent_distance(&end, n_x, threat_agent, 0),
        closest,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardResult {
    /// Terminal threat–asset distance (ft), or [`INFEASIBLE_REWARD`].
    pub reward: f64,
    pub best_horizon: Option<usize>,
    pub best_emphasis: Option<EmphasisVector>,
    /// Index of `best_emphasis` within the searched space.
    pub best_emphasis_index: Option<usize>,
    pub capturing_slot: Option<usize>,
    pub trajectory: Option<Trajectory>,
    /// Smallest interceptor–threat distance at any step of any successful
    /// rollout; diagnostic only.
    pub closest_approach: f64,
    pub evaluated: usize,
    /// Pairs whose game had no solution or whose rollout diverged.
    pub skipped: usize,
}

impl RewardResult {
    pub fn feasible(&self) -> bool {
        self.best_horizon.is_some()
    }
}

/// Best feasible terminal threat–asset distance over all `(d, H)` pairs.
#[allow(clippy::too_many_arguments)]
pub fn solve_reward(
    threat: &AgentState,
    group: &[AgentState],
    asset: &AgentState,
    models: &AgentModels,
    emphasis_space: &EmphasisSpace,
    horizon_space: &[usize],
    config: &RewardConfig,
    cache: &GainCache,
) -> Result<RewardResult> {
    if horizon_space.is_empty() || horizon_space.contains(&0) {
        return Err(invalid("horizon space must be non-empty and contain only positive horizons"));
    }
    if emphasis_space.m() != group.len() {
        return Err(invalid(format!(
            "emphasis space is for groups of {} but the group has {}",
            emphasis_space.m(),
            group.len()
        )));
    }
    let system = models.engagement(group.len())?;
    let x0 = stack_state(asset, group, threat)?;

    let mut result = RewardResult {
        reward: INFEASIBLE_REWARD,
        best_horizon: None,
        best_emphasis: None,
        best_emphasis_index: None,
        capturing_slot: None,
        trajectory: None,
        closest_approach: f64::INFINITY,
        evaluated: 0,
        skipped: 0,
    };
    for &horizon in horizon_space {
        for (index, d) in emphasis_space.members().iter().enumerate() {
            result.evaluated += 1;
            let (capture, asset_distance, closest) = match probe_pair(&system, &x0, d, horizon, config, cache) {
                Ok(o) => o,
                Err(e) => {
                    log::debug!("skipping d#{index} H={horizon}: {e}");
                    result.skipped += 1;
                    continue;
                }
            };
            result.closest_approach = result.closest_approach.min(closest);
            let Some(slot) = capture else {
                continue;
            };
            let better = match result.best_horizon {
                None => true,
                Some(best_h) => {
                    asset_distance > result.reward
                        || (asset_distance == result.reward
                            && (horizon, index) < (best_h, result.best_emphasis_index.unwrap_or(usize::MAX)))
                }
            };
            if better {
                result.reward = asset_distance;
                result.best_horizon = Some(horizon);
                result.best_emphasis = Some(d.clone());
                result.best_emphasis_index = Some(index);
                result.capturing_slot = Some(slot);
            }
        }
    }
    if let (Some(horizon), Some(d)) = (result.best_horizon, &result.best_emphasis) {
        result.trajectory = Some(evaluate_pair(&system, &x0, d, horizon, config, cache)?.trajectory);
    }
    if result.evaluated == result.skipped {
        log::warn!("every (d, H) pair failed for this engagement; reward set to sentinel");
    }
    Ok(result)
}

/// One CSV row per agent per step: `time_s, agent_id, px.., vx.., ux..`.
/// Inputs on the terminal step are left empty.
pub fn write_trajectory_csv<W: Write>(trajectory: &Trajectory, agent_ids: &[String], out: W) -> Result<()> {
    if agent_ids.len() != trajectory.agents() {
        return Err(invalid(format!(
            "{} agent ids for {} agents",
            agent_ids.len(),
            trajectory.agents()
        )));
    }
    if trajectory.n_u() != 3 {
        return Err(invalid("trajectory export is defined for three-axis engagements"));
    }
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_s", "agent_id", "px", "py", "pz", "vx", "vy", "vz", "ux", "uy", "uz"])
        .map_err(csv_err)?;
    let n_u = trajectory.n_u();
    let threat = trajectory.agents() - 1;
    for h in 0..=trajectory.horizon() {
        let time = h as f64 * trajectory.sample_time;
        for (g, id) in agent_ids.iter().enumerate() {
            let mut record = vec![time.to_string(), id.clone()];
            let off = g * trajectory.n_x;
            record.extend(trajectory.states[h][off..off + trajectory.n_x].iter().map(f64::to_string));
            if h < trajectory.horizon() {
                let input = if g == threat {
                    &trajectory.v_inputs[h][..]
                } else {
                    &trajectory.u_inputs[h][g * n_u..(g + 1) * n_u]
                };
                record.extend(input.iter().map(f64::to_string));
            } else {
                record.extend(std::iter::repeat_n(String::new(), n_u));
            }
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory_csv`]. Agents are taken
/// in first-appearance order; the first is the asset, the last the threat.
pub fn read_trajectory_csv<R: Read>(input: R, sample_time: f64) -> Result<(Trajectory, Vec<String>)> {
    let parse_err = |e: csv::Error| Error::Parse(e.to_string());
    let mut reader = csv::Reader::from_reader(input);
    let mut ids: Vec<String> = Vec::new();
    let mut rows: Vec<(String, Vec<f64>, Option<Vec<f64>>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(parse_err)?;
        if record.len() != 11 {
            return Err(Error::Parse(format!("expected 11 columns, found {}", record.len())));
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("column {i}: {e}")))
        };
        let id = record[1].to_string();
        if !ids.contains(&id) {
            ids.push(id.clone());
        }
        let state = (2..8).map(num).collect::<Result<Vec<_>>>()?;
        let input = if record[8].is_empty() {
            None
        } else {
            Some((8..11).map(num).collect::<Result<Vec<_>>>()?)
        };
        rows.push((id, state, input));
    }
    let agents = ids.len();
    if agents < 3 || rows.len() % agents != 0 {
        return Err(Error::Parse("trajectory csv does not hold whole steps of at least three agents".into()));
    }
    let steps = rows.len() / agents;
    let mut states = Vec::with_capacity(steps);
    let mut u_inputs = Vec::new();
    let mut v_inputs = Vec::new();
    for (h, chunk) in rows.chunks(agents).enumerate() {
        let mut x = Vec::with_capacity(agents * 6);
        let mut u = Vec::new();
        let mut v = Vec::new();
        for (g, (id, state, input)) in chunk.iter().enumerate() {
            if id != &ids[g] {
                return Err(Error::Parse(format!("step {h}: agent order differs")));
            }
            x.extend_from_slice(state);
            match (input, h + 1 < steps) {
                (Some(inp), true) if g + 1 == agents => v.extend_from_slice(inp),
                (Some(inp), true) => u.extend_from_slice(inp),
                (None, false) => {}
                _ => return Err(Error::Parse(format!("step {h}: unexpected input columns"))),
            }
        }
        states.push(x);
        if h + 1 < steps {
            u_inputs.push(u);
            v_inputs.push(v);
        }
    }
    Ok((
        Trajectory {
            sample_time,
            n_x: 6,
            states,
            u_inputs,
            v_inputs,
        },
        ids,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::double_integrator_engagement;
    use crate::lqdg::GainSchedule;
    use nalgebra::DMatrix;

    fn zero_gains(system: &EngagementSystem, horizon: usize) -> GainSchedule {
        GainSchedule {
            f: vec![DMatrix::zeros(system.team_input_dim(), system.state_dim()); horizon],
            g: vec![DMatrix::zeros(system.n_u, system.state_dim()); horizon],
        }
    }

    #[test]
    fn saturate_examples() {
        let inside = DVector::from_column_slice(&[5.0, -5.0, 0.0]);
        assert_eq!(saturate(&inside, 10.0), inside);
        let big = DVector::from_column_slice(&[1609.0, 0.0, -1000.0]);
        let clamped = saturate(&big, 643.48);
        assert_eq!(clamped.as_slice(), &[643.48, 0.0, -643.48]);
        assert_eq!(saturate(&clamped, 643.48), clamped);
    }

    #[test]
    fn resting_agents_stay_put() {
        let sys = double_integrator_engagement(0.01, 3, 2).unwrap();
        let x0 = StackedState::from_vector(DVector::from_fn(24, |i, _| if i % 6 < 3 { i as f64 } else { 0.0 }), 6).unwrap();
        let gains = zero_gains(&sys, 10);
        let traj = simulate_engagement(&sys, &gains, &gains, &x0, &InputLimits::uniform(1.0, 1.0)).unwrap();
        assert!(traj.states.iter().all(|s| s.as_slice() == x0.as_vector().as_slice()));
    }

    #[test]
    fn ballistic_motion() {
        let sys = double_integrator_engagement(0.01, 3, 1).unwrap();
        let e = AgentState::from_slices(&[0.0; 3], &[50.0, 0.0, 0.0]).unwrap();
        let i = AgentState::from_slices(&[0.0; 3], &[0.0, 2000.0, 0.0]).unwrap();
        let t = AgentState::from_slices(&[8000.0, 0.0, 0.0], &[-2600.0, 0.0, 10.0]).unwrap();
        let x0 = stack_state(&e, &[i], &t).unwrap();
        let gains = zero_gains(&sys, 100);
        let traj = simulate_engagement(&sys, &gains, &gains, &x0, &InputLimits::uniform(1.0, 1.0)).unwrap();
        let end = traj.terminal();
        assert!((end.position(0)[0] - 50.0).abs() < 1e-9);
        assert!((end.position(1)[1] - 2000.0).abs() < 1e-9);
        assert!((end.position(2)[0] - 5400.0).abs() < 1e-9);
        assert!((end.position(2)[2] - 10.0).abs() < 1e-9);
        assert_eq!(traj.replay_mismatch(&sys), None);
    }

    #[test]
    fn mismatched_gain_lengths_rejected() {
        let sys = double_integrator_engagement(0.01, 3, 1).unwrap();
        let x0 = StackedState::from_vector(DVector::zeros(18), 6).unwrap();
        let a = zero_gains(&sys, 3);
        let b = zero_gains(&sys, 4);
        assert!(simulate_engagement(&sys, &a, &b, &x0, &InputLimits::uniform(1.0, 1.0)).is_err());
    }

    #[test]
    fn blowup_is_reported() {
        let sys = double_integrator_engagement(0.01, 3, 1).unwrap();
        let x0 = StackedState::from_vector(DVector::from_element(18, 1.0), 6).unwrap();
        let mut gains = zero_gains(&sys, 3);
        gains.f[1] = DMatrix::from_element(6, 18, f64::NAN);
        let err = simulate_engagement(&sys, &gains, &gains, &x0, &InputLimits::uniform(1.0, 1.0)).unwrap_err();
        assert_eq!(err, Error::Blowup { step: 2 });
    }
}
