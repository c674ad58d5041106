//! Weight construction for the asset-guarding game.
//!
//! Running state cost is zero; only control effort and terminal relative
//! positions are penalized. Input weights follow Bryson's rule, normalized by
//! horizon and acceleration authority. The terminal weight is built from a
//! relative-position selector so that
//!
//! ```text
//! xᵀ Q_H(d) x = (−d₁‖p_T − p_E‖² + Σᵢ d_{i+1}‖p_{Iᵢ} − p_T‖²) / r_max²
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::block_diag;
use crate::error::{invalid, Result};
use crate::lqdg::WeightSet;

/// Positive emphasis on each terminal relative distance.
///
/// Entry 0 weights threat–asset separation; entry `i` weights the miss of
/// the `i`-th interceptor in the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmphasisVector(Vec<f64>);

impl EmphasisVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("emphasis vector needs an asset entry and at least one interceptor entry"));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("emphasis entries must be positive, got {bad}")));
        }
        Ok(Self(values))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0; m + 1])
    }

    /// Unit entries except interceptor `slot` (0-based), which gets `ratio`.
    pub fn interceptor_focus(m: usize, slot: usize, ratio: f64) -> Result<Self> {
        if slot >= m {
            return Err(invalid(format!("slot {slot} out of range for group of {m}")));
        }
        let mut v = vec![1.0; m + 1];
        v[slot + 1] = ratio;
        Self::new(v)
    }

    /// Threat-side emphasis: `ratio` on the asset distance, unit elsewhere.
    pub fn asset_focus(m: usize, ratio: f64) -> Result<Self> {
        let mut v = vec![1.0; m + 1];
        v[0] = ratio;
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Interceptors covered (`len − 1`).
    pub fn m(&self) -> usize {
        self.0.len() - 1
    }
}

impl TryFrom<Vec<f64>> for EmphasisVector {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EmphasisVector> for Vec<f64> {
    fn from(v: EmphasisVector) -> Self {
        v.0
    }
}

/// Finite search set of emphasis vectors for one group size.
#[derive(Debug, Clone, PartialEq)]
pub struct EmphasisSpace(Vec<EmphasisVector>);

impl EmphasisSpace {
    pub fn new(members: Vec<EmphasisVector>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(invalid("emphasis space must not be empty"));
        };
        let m = first.m();
        if members.iter().any(|d| d.m() != m) {
            return Err(invalid("emphasis vectors in one space must share a length"));
        }
        Ok(Self(members))
    }

    /// The uniform vector, then one interceptor-focused vector per slot for
    /// each ratio in `ratios`.
    pub fn focused(m: usize, ratios: &[f64]) -> Result<Self> {
        let mut members = vec![EmphasisVector::uniform(m)];
        for &ratio in ratios {
            for slot in 0..m {
                members.push(EmphasisVector::interceptor_focus(m, slot, ratio)?);
            }
        }
        Self::new(members)
    }

    pub fn members(&self) -> &[EmphasisVector] {
        &self.0
    }

    pub fn m(&self) -> usize {
        self.0[0].m()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub rho_u: f64,
    pub rho_v: f64,
    /// Normalizing acceleration for the team inputs, ft/s².
    pub u_max: f64,
    /// Normalizing acceleration for the threat input, ft/s².
    pub v_max: f64,
    /// Largest acceptable terminal relative distance, ft.
    pub r_max: f64,
    pub horizon: usize,
    pub m: usize,
    pub n_u: usize,
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho_u", self.rho_u),
            ("rho_v", self.rho_v),
            ("u_max", self.u_max),
            ("v_max", self.v_max),
            ("r_max", self.r_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.horizon == 0 || self.m == 0 || self.n_u == 0 {
            return Err(invalid("horizon, m and n_u must be positive"));
        }
        Ok(())
    }

    pub fn n_x(&self) -> usize {
        2 * self.n_u
    }

    pub fn state_dim(&self) -> usize {
        (self.m + 2) * self.n_x()
    }
}

/// Bryson-normalized `(R_u, R_v)`.
pub fn build_input_weights(config: &WeightConfig) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    config.validate()?;
    let h = config.horizon as f64;
    let team = config.m + 1;
    let alpha = 1.0 / (team * config.n_u) as f64;
    // one threat per sub-engagement
    let beta = 1.0 / config.n_u as f64;
    let r_team = alpha / (h * config.u_max * config.u_max);
    let r_threat = beta / (h * config.v_max * config.v_max);
    let block = DMatrix::<f64>::identity(config.n_u, config.n_u) * r_team;
    let r_u = DMatrix::<f64>::identity(team, team).kronecker(&block) * config.rho_u;
    let r_v = DMatrix::<f64>::identity(config.n_u, config.n_u) * (config.rho_v * r_threat);
    Ok((r_u, r_v))
}

/// Relative-position selector for a group of `m` interceptors.
pub fn build_q_rel(m: usize, n_x: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(invalid("group size m must be at least 1"));
    }
    if n_x == 0 || n_x % 2 != 0 {
        return Err(invalid(format!("state dimension must be even, got {n_x}")));
    }
    let n_p = n_x / 2;
    let q = m + 2;
    let threat_col = (q - 1) * n_x;
    let mut rel = DMatrix::zeros((m + 1) * n_p, q * n_x);
    for k in 0..n_p {
        rel[(k, k)] = -1.0;
        rel[(k, threat_col + k)] = 1.0;
    }
    for i in 0..m {
        let row = (i + 1) * n_p;
        let col = (i + 1) * n_x;
        for k in 0..n_p {
            rel[(row + k, col + k)] = 1.0;
            rel[(row + k, threat_col + k)] = -1.0;
        }
    }
    Ok(rel)
}

/// `Q_relᵀ · blkdiag(−w(d₁), w(d₂), …) · Q_rel` with `w(z) = z / r_max² · I`.
pub fn build_terminal_weight(d: &EmphasisVector, r_max: f64, m: usize, n_x: usize) -> Result<DMatrix<f64>> {
    if d.m() != m {
        return Err(invalid(format!(
            "emphasis vector has {} entries, expected {}",
            d.values().len(),
            m + 1
        )));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(invalid(format!("r_max must be positive, got {r_max}")));
    }
    let rel = build_q_rel(m, n_x)?;
    let n_p = n_x / 2;
    let scale = 1.0 / (r_max * r_max);
    let blocks: Vec<DMatrix<f64>> = d
        .values()
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            DMatrix::identity(n_p, n_p) * (sign * z * scale)
        })
        .collect();
    let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
    let q_w = block_diag(&refs);
    let q_h = rel.transpose() * q_w * &rel;
    Ok(crate::lqdg::symmetrize(&q_h))
}

/// Weights for the two separate game solves: the team's gains come from the
/// game with terminal weight `q_f`, the threat's from the game with `q_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamObjectives {
    pub q_f: DMatrix<f64>,
    pub q_g: DMatrix<f64>,
    pub q_running: DMatrix<f64>,
    pub r_u: DMatrix<f64>,
    pub r_v: DMatrix<f64>,
    pub horizon: usize,
}

impl TeamObjectives {
    pub fn team_game(&self) -> Result<WeightSet> {
        WeightSet::new(
            self.q_f.clone(),
            self.q_running.clone(),
            self.r_u.clone(),
            self.r_v.clone(),
            self.horizon,
        )
    }

    pub fn threat_game(&self) -> Result<WeightSet> {
        WeightSet::new(
            self.q_g.clone(),
            self.q_running.clone(),
            self.r_u.clone(),
            self.r_v.clone(),
            self.horizon,
        )
    }
}

pub fn build_team_objectives(
    config: &WeightConfig,
    d: &EmphasisVector,
    d_threat: &EmphasisVector,
) -> Result<TeamObjectives> {
    let (r_u, r_v) = build_input_weights(config)?;
    let n_x = config.n_x();
    let q_f = build_terminal_weight(d, config.r_max, config.m, n_x)?;
    let q_g = build_terminal_weight(d_threat, config.r_max, config.m, n_x)?;
    let n = config.state_dim();
    Ok(TeamObjectives {
        q_f,
        q_g,
        q_running: DMatrix::zeros(n, n),
        r_u,
        r_v,
        horizon: config.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{stack_state, AgentState, G_FTPS2};
    use nalgebra::{DVector, SymmetricEigen};

    fn config(m: usize) -> WeightConfig {
        WeightConfig {
            rho_u: 1000.0,
            rho_v: 1000.0,
            u_max: 20.0 * G_FTPS2,
            v_max: 30.0 * G_FTPS2,
            r_max: 20.0,
            horizon: 100,
            m,
            n_u: 3,
        }
    }

    #[test]
    fn input_weights_normalization() {
        let mut c = config(1);
        c.u_max = 643.48;
        let (r_u, r_v) = build_input_weights(&c).unwrap();
        let expected = 1000.0 * (1.0 / 6.0) / (100.0 * 643.48_f64.powi(2));
        for i in 0..6 {
            assert!((r_u[(i, i)] - expected).abs() <= 1e-15 * expected);
        }
        let trace = r_u.trace() / c.rho_u * (c.horizon as f64 * c.u_max * c.u_max);
        assert!((trace - 1.0).abs() < 1e-12);
        let rv_expected = c.rho_v / (3.0 * 100.0 * c.v_max * c.v_max);
        assert!((r_v[(0, 0)] - rv_expected).abs() <= 1e-15 * rv_expected);
        assert_eq!(r_u.nrows(), 6);
        assert_eq!(r_u[(0, 1)], 0.0);
    }

    #[test]
    fn input_weights_reject_nonpositive() {
        let mut c = config(1);
        c.rho_u = 0.0;
        assert!(build_input_weights(&c).is_err());
        let mut c = config(1);
        c.r_max = -1.0;
        assert!(build_input_weights(&c).is_err());
    }

    #[test]
    fn q_rel_structure() {
        let rel = build_q_rel(2, 6).unwrap();
        assert_eq!((rel.nrows(), rel.ncols()), (9, 24));
        let nonzero: Vec<f64> = rel.iter().copied().filter(|&v| v != 0.0).collect();
        assert_eq!(nonzero.len(), 2 * 3 * 3);
        assert!(nonzero.iter().all(|v| v.abs() == 1.0));
        assert!(build_q_rel(1, 5).is_err());
        assert!(build_q_rel(0, 6).is_err());
    }

    #[test]
    fn q_rel_colocated_is_zero() {
        let s = AgentState::from_slices(&[10.0, -3.0, 7.0], &[1.0, 2.0, 3.0]).unwrap();
        let moving = AgentState::from_slices(&[10.0, -3.0, 7.0], &[-100.0, 0.0, 9.0]).unwrap();
        let x = stack_state(&s, &[moving.clone(), s.clone()], &moving).unwrap();
        let rel = build_q_rel(2, 6).unwrap();
        assert!((rel * x.as_vector()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn terminal_weight_single_distance() {
        let d = EmphasisVector::new(vec![1.0, 1.0]).unwrap();
        let q_h = build_terminal_weight(&d, 20.0, 1, 6).unwrap();
        let e = AgentState::from_slices(&[0.0; 3], &[0.0; 3]).unwrap();
        let t = AgentState::from_slices(&[20.0, 0.0, 0.0], &[5.0, 1.0, 0.0]).unwrap();
        let x = stack_state(&e, std::slice::from_ref(&t), &t).unwrap();
        let v = x.as_vector().dot(&(&q_h * x.as_vector()));
        assert!((v + 1.0).abs() < 1e-14);
    }

    #[test]
    fn terminal_weight_is_indefinite_and_linear_in_d() {
        for m in 1..=3 {
            let d = EmphasisVector::new((0..=m).map(|i| 1.0 + i as f64).collect()).unwrap();
            let q_h = build_terminal_weight(&d, 20.0, m, 6).unwrap();
            let eig = SymmetricEigen::new(q_h.clone()).eigenvalues;
            assert!(eig.min() < 0.0 && eig.max() > 0.0);
            let scaled = EmphasisVector::new(d.values().iter().map(|v| v * 4.0).collect()).unwrap();
            let q_s = build_terminal_weight(&scaled, 20.0, m, 6).unwrap();
            assert!((q_s - q_h * 4.0).norm() < 1e-15);
        }
    }

    #[test]
    fn terminal_weight_rejects_length_mismatch() {
        let d = EmphasisVector::uniform(2);
        assert!(build_terminal_weight(&d, 20.0, 1, 6).is_err());
    }

    #[test]
    fn velocities_do_not_enter_terminal_cost() {
        let d = EmphasisVector::new(vec![2.0, 3.0, 5.0]).unwrap();
        let q_h = build_terminal_weight(&d, 20.0, 2, 6).unwrap();
        for g in 0..4 {
            for k in 3..6 {
                let idx = g * 6 + k;
                assert!(q_h.row(idx).iter().all(|&v| v == 0.0));
                assert!(q_h.column(idx).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn dominant_interceptor_term() {
        let d = EmphasisVector::interceptor_focus(2, 0, 100.0).unwrap();
        assert_eq!(d.values(), &[1.0, 100.0, 1.0]);
        // equal miss distances: interceptor 1's term is 100× interceptor 2's
        let q_h = build_terminal_weight(&d, 20.0, 2, 6).unwrap();
        let zero = AgentState::from_slices(&[0.0; 3], &[0.0; 3]).unwrap();
        let one = AgentState::from_slices(&[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        let only_first = stack_state(&zero, &[one.clone(), zero.clone()], &zero).unwrap();
        let only_second = stack_state(&zero, &[zero.clone(), one], &zero).unwrap();
        let quad = |x: &DVector<f64>| x.dot(&(&q_h * x));
        let ratio = quad(only_first.as_vector()) / quad(only_second.as_vector());
        assert!((ratio - 100.0).abs() < 1e-12);
    }

    #[test]
    fn team_objectives() {
        let c = config(2);
        let d = EmphasisVector::uniform(2);
        let obj = build_team_objectives(&c, &d, &d).unwrap();
        assert_eq!(obj.q_running, DMatrix::zeros(24, 24));
        assert_eq!(obj.q_f, obj.q_g);
        let dt = EmphasisVector::asset_focus(2, 100.0).unwrap();
        assert_eq!(dt.values(), &[100.0, 1.0, 1.0]);
        let obj = build_team_objectives(&c, &d, &dt).unwrap();
        assert!(obj.team_game().is_ok() && obj.threat_game().is_ok());
    }

    #[test]
    fn emphasis_validation() {
        assert!(EmphasisVector::new(vec![1.0]).is_err());
        assert!(EmphasisVector::new(vec![1.0, 0.0]).is_err());
        assert!(EmphasisVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(EmphasisSpace::new(vec![]).is_err());
        assert!(EmphasisSpace::new(vec![EmphasisVector::uniform(1), EmphasisVector::uniform(2)]).is_err());
        let space = EmphasisSpace::focused(3, &[100.0]).unwrap();
        assert_eq!(space.len(), 4);
        assert_eq!(space.members()[2].values(), &[1.0, 1.0, 100.0, 1.0]);
    }
}
