//! Engagement scenarios: the JSON file format, validation and seeded
//! generation around a single high-value asset.
//!
//! Positions are in ft, velocities in ft/s and acceleration limits in G.
//! Spawn radii are measured from the asset's initial position.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::MAX_INTERCEPTORS;
use crate::dynamics::{g_to_ftps2, AgentState};
use crate::error::{invalid, Error, Result};
use crate::rollout::InputLimits;

pub const SCHEMA_VERSION: u32 = 1;

/// Relative slack on radius and speed bounds, so values written from a
/// sampled speed survive the `|v|` recomputation.
const BOUND_SLACK: f64 = 1e-9;

/// How generated interceptors are pointed at their threat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptorHeading {
    /// Straight at the threat's current position.
    Direct,
    /// Along the constant-velocity collision course when one exists.
    Lead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub threat_radius_ft: f64,
    pub threat_min_radius_ft: f64,
    pub interceptor_radius_ft: f64,
    pub interceptor_min_radius_ft: f64,
    /// Threat spawn elevation above the asset's horizontal plane, degrees.
    pub threat_elevation_deg: [f64; 2],
    pub interceptor_heading: InterceptorHeading,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            threat_radius_ft: 8000.0,
            threat_min_radius_ft: 6000.0,
            interceptor_radius_ft: 500.0,
            interceptor_min_radius_ft: 0.0,
            threat_elevation_deg: [0.0, 0.0],
            interceptor_heading: InterceptorHeading::Lead,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSpec {
    pub position_ft: [f64; 3],
    pub velocity_ftps: [f64; 3],
    pub speed_cap_ftps: f64,
    /// Zero keeps the asset on its constant-velocity track.
    pub accel_limit_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    pub position_ft: [f64; 3],
    pub velocity_ftps: [f64; 3],
}

impl AgentSpec {
    pub fn state(&self) -> AgentState {
        AgentState::from_slices(&self.position_ft, &self.velocity_ftps).expect("validated agent spec")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentClass {
    pub speed_range_ftps: [f64; 2],
    pub accel_limit_g: f64,
    pub agents: Vec<AgentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub capture_radius_ft: f64,
    pub geometry: Geometry,
    pub asset: AssetSpec,
    pub interceptors: AgentClass,
    pub threats: AgentClass,
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn norm(v: &[f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite3(field: String, v: &[f64; 3]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(field_err(field, "components must be finite"))
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo * (1.0 - BOUND_SLACK) && v <= hi * (1.0 + BOUND_SLACK)
}

impl Scenario {
    pub fn interceptor_count(&self) -> usize {
        self.interceptors.agents.len()
    }

    pub fn threat_count(&self) -> usize {
        self.threats.agents.len()
    }

    pub fn asset_state(&self) -> AgentState {
        AgentState::from_slices(&self.asset.position_ft, &self.asset.velocity_ftps).expect("validated asset")
    }

    pub fn interceptor_states(&self) -> Vec<AgentState> {
        self.interceptors.agents.iter().map(AgentSpec::state).collect()
    }

    pub fn threat_states(&self) -> Vec<AgentState> {
        self.threats.agents.iter().map(AgentSpec::state).collect()
    }

    /// Saturation bounds in ft/s².
    pub fn input_limits(&self) -> InputLimits {
        InputLimits {
            asset: g_to_ftps2(self.asset.accel_limit_g),
            interceptor: g_to_ftps2(self.interceptors.accel_limit_g),
            threat: g_to_ftps2(self.threats.accel_limit_g),
        }
    }

    /// Ids in stacking order for one engagement: asset, group, threat.
    pub fn engagement_ids(&self, members: &[usize], threat: usize) -> Vec<String> {
        let mut ids = vec!["asset".to_string()];
        ids.extend(members.iter().map(|&i| self.interceptors.agents[i - 1].id.clone()));
        ids.push(self.threats.agents[threat].id.clone());
        ids
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(field_err(
                "schema",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        positive("capture_radius_ft", self.capture_radius_ft)?;

        let g = &self.geometry;
        positive("geometry.threat_radius_ft", g.threat_radius_ft)?;
        positive("geometry.interceptor_radius_ft", g.interceptor_radius_ft)?;
        for (name, lo, hi) in [
            ("threat_min_radius_ft", g.threat_min_radius_ft, g.threat_radius_ft),
            ("interceptor_min_radius_ft", g.interceptor_min_radius_ft, g.interceptor_radius_ft),
        ] {
            if !(lo.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(field_err(format!("geometry.{name}"), format!("must lie in [0, {hi}], got {lo}")));
            }
        }
        let [e_lo, e_hi] = g.threat_elevation_deg;
        if !(e_lo.is_finite() && e_hi.is_finite() && -90.0 <= e_lo && e_lo <= e_hi && e_hi <= 90.0) {
            return Err(field_err(
                "geometry.threat_elevation_deg",
                format!("must be an ordered range within [-90, 90], got [{e_lo}, {e_hi}]"),
            ));
        }

        let a = &self.asset;
        finite3("asset.position_ft".into(), &a.position_ft)?;
        finite3("asset.velocity_ftps".into(), &a.velocity_ftps)?;
        positive("asset.speed_cap_ftps", a.speed_cap_ftps)?;
        if norm(&a.velocity_ftps) > a.speed_cap_ftps * (1.0 + BOUND_SLACK) {
            return Err(field_err(
                "asset.velocity_ftps",
                format!("speed {} exceeds cap {}", norm(&a.velocity_ftps), a.speed_cap_ftps),
            ));
        }
        if !(a.accel_limit_g.is_finite() && a.accel_limit_g >= 0.0) {
            return Err(field_err("asset.accel_limit_g", format!("must be >= 0, got {}", a.accel_limit_g)));
        }

        let m = self.interceptor_count();
        if m == 0 || m > MAX_INTERCEPTORS {
            return Err(field_err(
                "interceptors.agents",
                format!("need 1..={MAX_INTERCEPTORS} interceptors, got {m}"),
            ));
        }
        if self.threat_count() == 0 {
            return Err(field_err("threats.agents", "need at least one threat"));
        }
        self.validate_class("interceptors", &self.interceptors, g.interceptor_radius_ft)?;
        self.validate_class("threats", &self.threats, g.threat_radius_ft)?;

        let mut ids: Vec<&str> = self
            .interceptors
            .agents
            .iter()
            .chain(&self.threats.agents)
            .map(|s| s.id.as_str())
            .collect();
        if ids.contains(&"asset") {
            return Err(field_err("agents.id", "`asset` is reserved"));
        }
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(field_err("agents.id", format!("duplicate id `{}`", w[0])));
        }
        Ok(())
    }

    fn validate_class(&self, name: &str, class: &AgentClass, radius: f64) -> Result<()> {
        let [lo, hi] = class.speed_range_ftps;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(field_err(
                format!("{name}.speed_range_ftps"),
                format!("must be an ordered positive range, got [{lo}, {hi}]"),
            ));
        }
        positive(&format!("{name}.accel_limit_g"), class.accel_limit_g)?;
        for (i, agent) in class.agents.iter().enumerate() {
            let path = format!("{name}.agents[{i}]");
            if agent.id.is_empty() {
                return Err(field_err(format!("{path}.id"), "must not be empty"));
            }
            finite3(format!("{path}.position_ft"), &agent.position_ft)?;
            finite3(format!("{path}.velocity_ftps"), &agent.velocity_ftps)?;
            let dist = norm(&sub(&agent.position_ft, &self.asset.position_ft));
            if dist > radius * (1.0 + BOUND_SLACK) {
                return Err(field_err(
                    format!("{path}.position_ft"),
                    format!("{dist:.1} ft from the asset exceeds the {radius} ft spawn radius"),
                ));
            }
            let speed = norm(&agent.velocity_ftps);
            if !within(speed, lo, hi) {
                return Err(field_err(
                    format!("{path}.velocity_ftps"),
                    format!("speed {speed:.3} ft/s outside [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    scenario.validate()?;
    fs::write(path, scenario.to_json())?;
    Ok(())
}

/// Speed and acceleration envelope of one agent class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassEnvelope {
    pub speed_range_ftps: [f64; 2],
    pub accel_limit_g: f64,
}

/// Everything [`generate_scenario`] samples from besides the seed and counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub geometry: Geometry,
    pub capture_radius_ft: f64,
    pub asset_speed_ftps: f64,
    pub asset_accel_limit_g: f64,
    pub interceptor: ClassEnvelope,
    pub threat: ClassEnvelope,
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            capture_radius_ft: 20.0,
            asset_speed_ftps: 50.0,
            asset_accel_limit_g: 0.0,
            interceptor: ClassEnvelope {
                speed_range_ftps: [1800.0, 2200.0],
                accel_limit_g: 20.0,
            },
            threat: ClassEnvelope {
                speed_range_ftps: [2400.0, 2800.0],
                accel_limit_g: 30.0,
            },
        }
    }
}

fn scale(v: &[f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

fn add(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit(v: &[f64; 3]) -> [f64; 3] {
    scale(v, 1.0 / norm(v))
}

/// Radius uniform in volume between `lo` and `hi`.
fn shell_radius(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let (lo3, hi3) = (lo.powi(3), hi.powi(3));
    (lo3 + rng.random::<f64>() * (hi3 - lo3)).cbrt()
}

/// Direction uniform on the sphere band between two elevations (degrees).
fn band_direction(rng: &mut ChaCha8Rng, elevation_deg: [f64; 2]) -> [f64; 3] {
    let (s_lo, s_hi) = (elevation_deg[0].to_radians().sin(), elevation_deg[1].to_radians().sin());
    let z = s_lo + rng.random::<f64>() * (s_hi - s_lo);
    let azimuth = rng.random::<f64>() * std::f64::consts::TAU;
    let horizontal = (1.0 - z * z).max(0.0).sqrt();
    [horizontal * azimuth.cos(), horizontal * azimuth.sin(), z]
}

fn sample_speed(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

/// Unit heading for a pursuer at `from` with speed `speed` to meet a target
/// at `target` moving with `target_velocity`, if a collision course exists.
pub fn collision_heading(from: &[f64; 3], speed: f64, target: &[f64; 3], target_velocity: &[f64; 3]) -> Option<[f64; 3]> {
    let r = sub(target, from);
    let a = dot(target_velocity, target_velocity) - speed * speed;
    let b = 2.0 * dot(&r, target_velocity);
    let c = dot(&r, &r);
    let t = if a.abs() < 1e-12 {
        (b < 0.0).then(|| -c / b)?
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)]
            .into_iter()
            .filter(|t| *t > 0.0)
            .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.min(t))))?
    };
    Some(unit(&add(&r, &scale(target_velocity, t))))
}

/// Samples a scenario: threats in the outer shell heading straight for the
/// asset, interceptors in the inner shell each heading for threat
/// `i mod N`. Deterministic in `seed`.
pub fn generate_scenario(seed: u64, interceptors: usize, threats: usize, template: &ScenarioTemplate) -> Result<Scenario> {
    if interceptors == 0 || interceptors > MAX_INTERCEPTORS || threats == 0 {
        return Err(invalid(format!(
            "need 1..={MAX_INTERCEPTORS} interceptors and at least one threat, got {interceptors} and {threats}"
        )));
    }
    let geometry = template.geometry.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let asset_heading = rng.random::<f64>() * std::f64::consts::TAU;
    let asset = AssetSpec {
        position_ft: [0.0; 3],
        velocity_ftps: [
            template.asset_speed_ftps * asset_heading.cos(),
            template.asset_speed_ftps * asset_heading.sin(),
            0.0,
        ],
        speed_cap_ftps: template.asset_speed_ftps,
        accel_limit_g: template.asset_accel_limit_g,
    };

    let threat_agents: Vec<AgentSpec> = (0..threats)
        .map(|j| {
            let dir = band_direction(&mut rng, geometry.threat_elevation_deg);
            let radius = shell_radius(&mut rng, geometry.threat_min_radius_ft, geometry.threat_radius_ft);
            let speed = sample_speed(&mut rng, template.threat.speed_range_ftps);
            let position_ft = scale(&dir, radius);
            AgentSpec {
                id: format!("T{}", j + 1),
                velocity_ftps: scale(&dir, -speed),
                position_ft,
            }
        })
        .collect();

    let interceptor_agents: Vec<AgentSpec> = (0..interceptors)
        .map(|i| {
            let target = &threat_agents[i % threats];
            let offset = band_direction(&mut rng, [-90.0, 90.0]);
            let radius = shell_radius(&mut rng, geometry.interceptor_min_radius_ft, geometry.interceptor_radius_ft);
            let speed = sample_speed(&mut rng, template.interceptor.speed_range_ftps);
            let mut position_ft = scale(&offset, radius);
            // keep launch points at or above the asset's plane
            position_ft[2] = position_ft[2].abs();
            let direct = unit(&sub(&target.position_ft, &position_ft));
            let heading = match geometry.interceptor_heading {
                InterceptorHeading::Direct => direct,
                InterceptorHeading::Lead => {
                    collision_heading(&position_ft, speed, &target.position_ft, &target.velocity_ftps).unwrap_or(direct)
                }
            };
            AgentSpec {
                id: format!("I{}", i + 1),
                position_ft,
                velocity_ftps: scale(&heading, speed),
            }
        })
        .collect();

    let scenario = Scenario {
        schema: SCHEMA_VERSION,
        seed: Some(seed),
        capture_radius_ft: template.capture_radius_ft,
        geometry,
        asset,
        interceptors: AgentClass {
            speed_range_ftps: template.interceptor.speed_range_ftps,
            accel_limit_g: template.interceptor.accel_limit_g,
            agents: interceptor_agents,
        },
        threats: AgentClass {
            speed_range_ftps: template.threat.speed_range_ftps,
            accel_limit_g: template.threat.accel_limit_g,
            agents: threat_agents,
        },
    };
    scenario.validate()?;
    Ok(scenario)
}
