//! Finite-horizon discrete-time zero-sum linear-quadratic dynamic game.
//!
//! The team input `u` minimizes and the threat input `v` maximizes
//!
//! ```text
//! J = ½ x(H)ᵀ Q_H x(H) + ½ Σ_{h<H} [ x(h)ᵀ Q x(h) + u(h)ᵀ R_u u(h) − v(h)ᵀ R_v v(h) ]
//! ```
//!
//! subject to `x(h+1) = A x(h) + B_u u(h) + B_v v(h)`. The saddle point is the
//! pair of linear feedback laws `u = F(h) x`, `v = G(h) x` obtained from a
//! backward Riccati recursion anchored at `P(H) = Q_H`. Before each step the
//! recursion checks that `B_uᵀ P B_u + R_u ≻ 0` and `B_vᵀ P B_v − R_v ≺ 0`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut, SymmetricEigen};
use sha2::{Digest, Sha256};

use crate::dynamics::{EngagementSystem, StackedState};
use crate::error::{invalid, DefinitenessCondition, Error, Result};

/// Relative margin used for the strict definiteness tests.
pub const DEFINITENESS_MARGIN: f64 = 1e-12;
/// Relative Frobenius tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub(crate) fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn check_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(invalid(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    if relative_asymmetry(m) > SYMMETRY_TOL {
        return Err(invalid(format!("{name} is not symmetric")));
    }
    Ok(())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.max()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub q_terminal: DMatrix<f64>,
    pub q_running: DMatrix<f64>,
    pub r_u: DMatrix<f64>,
    pub r_v: DMatrix<f64>,
    pub horizon: usize,
}

impl WeightSet {
    pub fn new(
        q_terminal: DMatrix<f64>,
        q_running: DMatrix<f64>,
        r_u: DMatrix<f64>,
        r_v: DMatrix<f64>,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon must be at least one step"));
        }
        let n = q_terminal.nrows();
        check_square("Q_terminal", &q_terminal, n)?;
        check_square("Q_running", &q_running, n)?;
        check_square("R_u", &r_u, r_u.nrows())?;
        check_square("R_v", &r_v, r_v.nrows())?;
        for (name, r) in [("R_u", &r_u), ("R_v", &r_v)] {
            if r.nrows() == 0 || min_eigenvalue(r) <= 0.0 {
                return Err(invalid(format!("{name} must be positive definite")));
            }
        }
        Ok(Self {
            q_terminal,
            q_running,
            r_u,
            r_v,
            horizon,
        })
    }

    fn check_against(&self, system: &EngagementSystem) -> Result<()> {
        let n = system.a().nrows();
        if self.q_terminal.nrows() != n || self.q_running.nrows() != n {
            return Err(invalid(format!(
                "state weights are {}x{} but the system state has dimension {n}",
                self.q_terminal.nrows(),
                self.q_terminal.ncols()
            )));
        }
        if self.r_u.nrows() != system.b_u().ncols() || self.r_v.nrows() != system.b_v().ncols() {
            return Err(invalid("input weight dimensions do not match the system"));
        }
        Ok(())
    }
}

/// Extreme eigenvalues of the two bracketed matrices at one recursion step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConditions {
    /// Smallest eigenvalue of `B_uᵀ P B_u + R_u`.
    pub team_min_eigenvalue: f64,
    /// Largest eigenvalue of `B_vᵀ P B_v − R_v`.
    pub threat_max_eigenvalue: f64,
}

impl StepConditions {
    pub fn ok(&self) -> bool {
        self.team_min_eigenvalue > 0.0 && self.threat_max_eigenvalue < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    /// `P(h)` for `h = 0..=H`.
    pub p: Vec<DMatrix<f64>>,
    /// Conditions evaluated at steps `h = 0..H` (using `P(h+1)`).
    pub conditions: Vec<StepConditions>,
}

impl RiccatiSolution {
    pub fn horizon(&self) -> usize {
        self.p.len() - 1
    }

    pub fn conditions_ok(&self) -> Vec<bool> {
        self.conditions.iter().map(StepConditions::ok).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    pub f: Vec<DMatrix<f64>>,
    pub g: Vec<DMatrix<f64>>,
}

impl GainSchedule {
    pub fn horizon(&self) -> usize {
        self.f.len()
    }
}

/// One backward step. Returns `(F, G, P(h), conditions)`.
fn riccati_step(
    system: &EngagementSystem,
    weights: &WeightSet,
    p_next: &DMatrix<f64>,
    step: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, StepConditions)> {
    let (a, bu, bv) = (system.a(), system.b_u(), system.b_v());
    let p_bu = p_next * bu;
    let p_bv = p_next * bv;
    let m_uu = symmetrize(&(bu.transpose() * &p_bu + &weights.r_u));
    let m_vv = symmetrize(&(bv.transpose() * &p_bv - &weights.r_v));
    let m_uv = bu.transpose() * &p_bv;
    let m_vu = m_uv.transpose();

    let team_min = min_eigenvalue(&m_uu);
    let threat_max = max_eigenvalue(&m_vv);
    let conditions = StepConditions {
        team_min_eigenvalue: team_min,
        threat_max_eigenvalue: threat_max,
    };
    if team_min <= DEFINITENESS_MARGIN * m_uu.norm() {
        return Err(Error::Solvability {
            step,
            condition: DefinitenessCondition::MinimizerConvexity,
            eigenvalue: team_min,
        });
    }
    if threat_max >= -DEFINITENESS_MARGIN * m_vv.norm() {
        return Err(Error::Solvability {
            step,
            condition: DefinitenessCondition::MaximizerConcavity,
            eigenvalue: threat_max,
        });
    }

    let chol_uu = m_uu.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!("team block factorization failed at step {step}"))
    })?;
    let neg_vv = -&m_vv;
    let chol_vv = neg_vv.cholesky().ok_or_else(|| {
        Error::Numerical(format!("threat block factorization failed at step {step}"))
    })?;
    // Mvv⁻¹ · X  ==  −(−Mvv)⁻¹ · X
    let solve_vv = |x: &DMatrix<f64>| -chol_vv.solve(x);

    let bu_pa = p_bu.transpose() * a;
    let bv_pa = p_bv.transpose() * a;

    // Team gain: (I − Muu⁻¹ Muv Mvv⁻¹ Mvu)⁻¹ Muu⁻¹ (Muv Mvv⁻¹ B_vᵀPA − B_uᵀPA)
    let x_uv = chol_uu.solve(&m_uv);
    let y_vu = solve_vv(&m_vu);
    let n_u = m_uu.nrows();
    let n_v = m_vv.nrows();
    let outer_u = DMatrix::identity(n_u, n_u) - &x_uv * &y_vu;
    let rhs_u = chol_uu.solve(&(&m_uv * solve_vv(&bv_pa) - &bu_pa));
    let f = outer_u
        .lu()
        .solve(&rhs_u)
        .ok_or_else(|| Error::Numerical(format!("singular team coupling at step {step}")))?;

    // Threat gain: (I − Mvv⁻¹ Mvu Muu⁻¹ Muv)⁻¹ Mvv⁻¹ (Mvu Muu⁻¹ B_uᵀPA − B_vᵀPA)
    let outer_v = DMatrix::identity(n_v, n_v) - &y_vu * &x_uv;
    let rhs_v = solve_vv(&(&m_vu * chol_uu.solve(&bu_pa) - &bv_pa));
    let g = outer_v
        .lu()
        .solve(&rhs_v)
        .ok_or_else(|| Error::Numerical(format!("singular threat coupling at step {step}")))?;

    let closed = a + bu * &f + bv * &g;
    let p = closed.transpose() * p_next * &closed + &weights.q_running
        + f.transpose() * &weights.r_u * &f
        - g.transpose() * &weights.r_v * &g;
    let p = symmetrize(&p);
    if p.iter().any(|v| !v.is_finite()) || f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite Riccati iterate at step {step}")));
    }
    Ok((f, g, p, conditions))
}

pub fn solve_lqdg(
    system: &EngagementSystem,
    weights: &WeightSet,
) -> Result<(GainSchedule, RiccatiSolution)> {
    weights.check_against(system)?;
    let horizon = weights.horizon;
    let mut p = vec![DMatrix::zeros(0, 0); horizon + 1];
    let mut f = vec![DMatrix::zeros(0, 0); horizon];
    let mut g = vec![DMatrix::zeros(0, 0); horizon];
    let mut conditions = vec![
        StepConditions {
            team_min_eigenvalue: f64::NAN,
            threat_max_eigenvalue: f64::NAN,
        };
        horizon
    ];
    p[horizon] = weights.q_terminal.clone();
    for h in (0..horizon).rev() {
        let (fh, gh, ph, ch) = riccati_step(system, weights, &p[h + 1], h)?;
        f[h] = fh;
        g[h] = gh;
        p[h] = ph;
        conditions[h] = ch;
    }
    Ok((GainSchedule { f, g }, RiccatiSolution { p, conditions }))
}

/// `½ x₀ᵀ P(0) x₀`.
pub fn game_value(riccati: &RiccatiSolution, x0: &StackedState) -> Result<f64> {
    let p0 = &riccati.p[0];
    let x = x0.as_vector();
    if p0.nrows() != x.len() {
        return Err(invalid(format!(
            "state of dimension {} does not match P(0) of dimension {}",
            x.len(),
            p0.nrows()
        )));
    }
    Ok(0.5 * x.dot(&(p0 * x)))
}

/// Evaluates the game functional along given state/input sequences.
///
/// `states` has `H + 1` entries; `u` and `v` have `H`.
pub fn game_cost(
    weights: &WeightSet,
    states: &[DVector<f64>],
    u: &[DVector<f64>],
    v: &[DVector<f64>],
) -> f64 {
    let h = u.len();
    let mut j = 0.5 * states[h].dot(&(&weights.q_terminal * &states[h]));
    for k in 0..h {
        j += 0.5
            * (states[k].dot(&(&weights.q_running * &states[k]))
                + u[k].dot(&(&weights.r_u * &u[k]))
                - v[k].dot(&(&weights.r_v * &v[k])));
    }
    j
}

/// Open-loop propagation of given input sequences.
pub fn propagate_open_loop(
    system: &EngagementSystem,
    x0: &DVector<f64>,
    u: &[DVector<f64>],
    v: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let mut states = Vec::with_capacity(u.len() + 1);
    states.push(x0.clone());
    for k in 0..u.len() {
        let next = system.step(&states[k], &u[k], &v[k]);
        states.push(next);
    }
    states
}

/// Feedback law evaluated at step `h` on the full stacked state.
pub trait Feedback {
    fn horizon(&self) -> usize;
    fn team_inputs(&self) -> usize;
    fn threat_inputs(&self) -> usize;
    /// Writes `F(h) x` into `out`.
    fn team_command_into(&self, h: usize, x: &[f64], out: &mut [f64]);
    /// Writes `G(h) x` into `out`.
    fn threat_command_into(&self, h: usize, x: &[f64], out: &mut [f64]);

    fn team_command(&self, h: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.team_inputs());
        self.team_command_into(h, x.as_slice(), out.as_mut_slice());
        out
    }

    fn threat_command(&self, h: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.threat_inputs());
        self.threat_command_into(h, x.as_slice(), out.as_mut_slice());
        out
    }
}

fn gemv_into(gain: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let xv = DVectorView::from_slice(x, gain.ncols());
    let mut ov = DVectorViewMut::from_slice(out, gain.nrows());
    ov.gemv(1.0, gain, &xv, 0.0);
}

impl Feedback for GainSchedule {
    fn horizon(&self) -> usize {
        self.f.len()
    }

    fn team_inputs(&self) -> usize {
        self.f.first().map_or(0, |f| f.nrows())
    }

    fn threat_inputs(&self) -> usize {
        self.g.first().map_or(0, |g| g.nrows())
    }

    fn team_command_into(&self, h: usize, x: &[f64], out: &mut [f64]) {
        gemv_into(&self.f[h], x, out);
    }

    fn threat_command_into(&self, h: usize, x: &[f64], out: &mut [f64]) {
        gemv_into(&self.g[h], x, out);
    }
}

/// Index bookkeeping between a full `n_u`-axis engagement and one axis of it.
///
/// Agent `g` contributes state entries `g·n_x + c·n_u + axis` for `c ∈ {0, 1}`
/// (position, velocity) and input entry `g·n_u + axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisLayout {
    pub agents: usize,
    pub team_agents: usize,
    pub n_u: usize,
}

impl AxisLayout {
    pub fn of(system: &EngagementSystem) -> Self {
        Self {
            agents: system.agents(),
            team_agents: system.m + 1,
            n_u: system.n_u,
        }
    }

    pub fn state_indices(&self, axis: usize) -> Vec<usize> {
        let n_x = 2 * self.n_u;
        (0..self.agents)
            .flat_map(|g| (0..2).map(move |c| g * n_x + c * self.n_u + axis))
            .collect()
    }

    pub fn input_indices(&self, agents: usize, axis: usize) -> Vec<usize> {
        (0..agents).map(|g| g * self.n_u + axis).collect()
    }
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// True when `m` is block-separable by axis with identical per-axis blocks.
fn axis_separable(m: &DMatrix<f64>, rows: &[Vec<usize>], cols: &[Vec<usize>]) -> bool {
    let n_axes = rows.len();
    let reference = select(m, &rows[0], &cols[0]);
    for a in 0..n_axes {
        for b in 0..n_axes {
            let block = select(m, &rows[a], &cols[b]);
            let ok = if a == b {
                block == reference
            } else {
                block.iter().all(|&v| v == 0.0)
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Gains of a per-axis game, applied identically on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGains {
    pub layout: AxisLayout,
    pub reduced: GainSchedule,
}

impl AxisGains {
    fn apply(&self, gain: &DMatrix<f64>, agents: usize, x: &[f64], out: &mut [f64]) {
        const STACK: usize = 64;
        let n_u = self.layout.n_u;
        let n_x = 2 * n_u;
        let cols = gain.ncols();
        let mut xa_buf = [0.0; STACK];
        let mut xa_vec = Vec::new();
        let xa: &mut [f64] = if cols <= STACK {
            &mut xa_buf[..cols]
        } else {
            xa_vec.resize(cols, 0.0);
            &mut xa_vec
        };
        let data = gain.as_slice();
        let rows = gain.nrows();
        for axis in 0..n_u {
            for (k, slot) in xa.iter_mut().enumerate() {
                *slot = x[(k / 2) * n_x + (k % 2) * n_u + axis];
            }
            for g in 0..agents {
                out[g * n_u + axis] = 0.0;
            }
            // column-major: accumulate column k scaled by xa[k]
            for (k, &xk) in xa.iter().enumerate() {
                let col = &data[k * rows..k * rows + agents];
                for (g, &c) in col.iter().enumerate() {
                    out[g * n_u + axis] += c * xk;
                }
            }
        }
    }

    fn expand(&self, gain: &DMatrix<f64>, agents: usize) -> DMatrix<f64> {
        let n_u = self.layout.n_u;
        let mut out = DMatrix::zeros(agents * n_u, 2 * n_u * self.layout.agents);
        for axis in 0..n_u {
            let rows = self.layout.input_indices(agents, axis);
            let cols = self.layout.state_indices(axis);
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    out[(r, c)] = gain[(i, j)];
                }
            }
        }
        out
    }

    /// Full-layout gains (`kron` with the axis identity, permuted).
    pub fn expand_all(&self) -> GainSchedule {
        GainSchedule {
            f: self.reduced.f.iter().map(|f| self.expand(f, self.layout.team_agents)).collect(),
            g: self.reduced.g.iter().map(|g| self.expand(g, 1)).collect(),
        }
    }
}

impl Feedback for AxisGains {
    fn horizon(&self) -> usize {
        self.reduced.horizon()
    }

    fn team_inputs(&self) -> usize {
        self.layout.team_agents * self.layout.n_u
    }

    fn threat_inputs(&self) -> usize {
        self.layout.n_u
    }

    fn team_command_into(&self, h: usize, x: &[f64], out: &mut [f64]) {
        self.apply(&self.reduced.f[h], self.layout.team_agents, x, out);
    }

    fn threat_command_into(&self, h: usize, x: &[f64], out: &mut [f64]) {
        self.apply(&self.reduced.g[h], 1, x, out);
    }
}

/// Gains either for the full system or for a single representative axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Gains {
    Full(GainSchedule),
    PerAxis(AxisGains),
}

impl Gains {
    fn law(&self) -> &dyn Feedback {
        match self {
            Gains::Full(g) => g,
            Gains::PerAxis(g) => g,
        }
    }
}

impl Feedback for Gains {
    fn horizon(&self) -> usize {
        self.law().horizon()
    }

    fn team_inputs(&self) -> usize {
        self.law().team_inputs()
    }

    fn threat_inputs(&self) -> usize {
        self.law().threat_inputs()
    }

    fn team_command_into(&self, h: usize, x: &[f64], out: &mut [f64]) {
        self.law().team_command_into(h, x, out);
    }

    fn threat_command_into(&self, h: usize, x: &[f64], out: &mut [f64]) {
        self.law().threat_command_into(h, x, out);
    }
}

impl Gains {
    pub fn to_full(&self) -> GainSchedule {
        match self {
            Gains::Full(g) => g.clone(),
            Gains::PerAxis(g) => g.expand_all(),
        }
    }
}

/// Reduces `(system, weights)` to one axis when every matrix is an
/// axis-identity Kronecker product in the stacked layout.
pub fn reduce_to_axis(
    system: &EngagementSystem,
    weights: &WeightSet,
) -> Option<(EngagementSystem, WeightSet, AxisLayout)> {
    let layout = AxisLayout::of(system);
    if layout.n_u == 1 {
        return None;
    }
    let states: Vec<Vec<usize>> = (0..layout.n_u).map(|a| layout.state_indices(a)).collect();
    let team: Vec<Vec<usize>> = (0..layout.n_u)
        .map(|a| layout.input_indices(layout.team_agents, a))
        .collect();
    let threat: Vec<Vec<usize>> = (0..layout.n_u).map(|a| layout.input_indices(1, a)).collect();
    let separable = axis_separable(system.a(), &states, &states)
        && axis_separable(system.b_u(), &states, &team)
        && axis_separable(system.b_v(), &states, &threat)
        && axis_separable(&weights.q_terminal, &states, &states)
        && axis_separable(&weights.q_running, &states, &states)
        && axis_separable(&weights.r_u, &team, &team)
        && axis_separable(&weights.r_v, &threat, &threat);
    if !separable {
        return None;
    }
    let reduced_system = EngagementSystem::new(
        select(system.a(), &states[0], &states[0]),
        select(system.b_u(), &states[0], &team[0]),
        select(system.b_v(), &states[0], &threat[0]),
        system.m,
        2,
        1,
        system.sample_time,
    )
    .ok()?;
    let reduced_weights = WeightSet {
        q_terminal: select(&weights.q_terminal, &states[0], &states[0]),
        q_running: select(&weights.q_running, &states[0], &states[0]),
        r_u: select(&weights.r_u, &team[0], &team[0]),
        r_v: select(&weights.r_v, &threat[0], &threat[0]),
        horizon: weights.horizon,
    };
    Some((reduced_system, reduced_weights, layout))
}

/// Solves for the feedback gains only, on one axis when the problem allows.
pub fn solve_gains(system: &EngagementSystem, weights: &WeightSet) -> Result<Gains> {
    weights.check_against(system)?;
    match reduce_to_axis(system, weights) {
        Some((rs, rw, layout)) => {
            let (reduced, _) = solve_lqdg(&rs, &rw)?;
            Ok(Gains::PerAxis(AxisGains { layout, reduced }))
        }
        None => Ok(Gains::Full(solve_lqdg(system, weights)?.0)),
    }
}

pub type CacheKey = [u8; 32];

fn hash_matrix(hasher: &mut Sha256, m: &DMatrix<f64>) {
    hasher.update((m.nrows() as u64).to_le_bytes());
    hasher.update((m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        hasher.update(v.to_bits().to_le_bytes());
    }
}

/// Content address of a game instance.
pub fn cache_key(system: &EngagementSystem, weights: &WeightSet) -> CacheKey {
    let mut h = Sha256::new();
    h.update(system.fingerprint());
    for m in [
        &weights.q_terminal,
        &weights.q_running,
        &weights.r_u,
        &weights.r_v,
    ] {
        hash_matrix(&mut h, m);
    }
    h.update((weights.horizon as u64).to_le_bytes());
    h.finalize().into()
}

/// Thread-safe store of solved gain schedules, keyed by input content.
#[derive(Debug, Default)]
pub struct GainCache {
    entries: RwLock<HashMap<CacheKey, Result<Arc<Gains>>>>,
}

impl GainCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_solve(&self, system: &EngagementSystem, weights: &WeightSet) -> Result<Arc<Gains>> {
        self.get_or_insert_with(cache_key(system, weights), || solve_gains(system, weights))
    }

    /// Looks up `key`, running `solve` on a miss. The caller guarantees that
    /// `key` determines the result; failures are cached too.
    pub fn get_or_insert_with(&self, key: CacheKey, solve: impl FnOnce() -> Result<Gains>) -> Result<Arc<Gains>> {
        if let Some(hit) = self.entries.read().ok().and_then(|e| e.get(&key).cloned()) {
            return hit;
        }
        let solved = solve().map(Arc::new);
        if let Ok(mut entries) = self.entries.write() {
            entries.entry(key).or_insert_with(|| solved.clone());
        }
        solved
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::double_integrator_engagement;

    fn scalar_system(a: f64, bu: f64, bv: f64) -> EngagementSystem {
        // Smallest legal engagement, with all but one entry zeroed: a 1-state game.
        EngagementSystem::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, bu),
            DMatrix::from_element(1, 1, bv),
            1,
            1,
            1,
            1.0,
        )
        .unwrap()
    }

    fn scalar_weights(qh: f64, ru: f64, rv: f64, horizon: usize) -> WeightSet {
        WeightSet::new(
            DMatrix::from_element(1, 1, qh),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, ru),
            DMatrix::from_element(1, 1, rv),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn scalar_one_step_saddle() {
        // min_u max_v ½ q (x+u+v)² + ½ r_u u² − ½ r_v v², stationarity:
        //   q(x+u+v) + r_u u = 0,  q(x+u+v) − r_v v = 0
        // ⇒ u = −(r_v/r_u) v,  v = q x / (r_v − q + q r_v / r_u)
        let (q, ru, rv) = (1.0, 1.0, 3.0);
        let v_gain = q / (rv - q + q * rv / ru);
        let u_gain = -(rv / ru) * v_gain;
        let (gains, ric) = solve_lqdg(&scalar_system(1.0, 1.0, 1.0), &scalar_weights(q, ru, rv, 1)).unwrap();
        assert!((gains.f[0][(0, 0)] - u_gain).abs() < 1e-14, "{} vs {u_gain}", gains.f[0][(0, 0)]);
        assert!((gains.g[0][(0, 0)] - v_gain).abs() < 1e-14);
        assert_eq!(ric.p[1][(0, 0)], 1.0);
        // value: ½ P(0) x² with x = 1 equals the stage + terminal cost at the saddle
        let (u, v) = (u_gain, v_gain);
        let j = 0.5 * q * (1.0 + u + v).powi(2) + 0.5 * ru * u * u - 0.5 * rv * v * v;
        assert!((0.5 * ric.p[0][(0, 0)] - j).abs() < 1e-14);
    }

    #[test]
    fn concavity_violation_reported() {
        let err = solve_lqdg(&scalar_system(1.0, 1.0, 1.0), &scalar_weights(1.0, 1.0, 0.5, 3)).unwrap_err();
        match err {
            Error::Solvability {
                step,
                condition,
                eigenvalue,
            } => {
                assert_eq!(step, 2);
                assert_eq!(condition, DefinitenessCondition::MaximizerConcavity);
                assert!((eigenvalue - 0.5).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn convexity_violation_reported() {
        let err = solve_lqdg(&scalar_system(1.0, 1.0, 1.0), &scalar_weights(-2.0, 1.0, 5.0, 1)).unwrap_err();
        assert!(matches!(
            err,
            Error::Solvability {
                step: 0,
                condition: DefinitenessCondition::MinimizerConvexity,
                ..
            }
        ));
    }

    #[test]
    fn weight_validation() {
        let z = DMatrix::zeros(2, 2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let eye = DMatrix::identity(2, 2);
        assert!(WeightSet::new(asym, z.clone(), eye.clone(), eye.clone(), 3).is_err());
        assert!(WeightSet::new(z.clone(), z.clone(), -&eye, eye.clone(), 3).is_err());
        assert!(WeightSet::new(z.clone(), z.clone(), eye.clone(), eye.clone(), 0).is_err());
        assert!(WeightSet::new(z.clone(), z, eye.clone(), eye, 3).is_ok());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sys = double_integrator_engagement(0.01, 1, 1).unwrap();
        let w = scalar_weights(1.0, 1.0, 3.0, 2);
        assert!(matches!(solve_lqdg(&sys, &w), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn terminal_anchor_and_symmetry() {
        let sys = double_integrator_engagement(0.05, 1, 1).unwrap();
        let n = sys.state_dim();
        let mut qh = DMatrix::zeros(n, n);
        // interceptor-threat miss on position
        qh[(2, 2)] = 1.0;
        qh[(4, 4)] = 1.0;
        qh[(2, 4)] = -1.0;
        qh[(4, 2)] = -1.0;
        let w = WeightSet::new(qh.clone(), DMatrix::zeros(n, n), DMatrix::identity(2, 2) * 0.1, DMatrix::identity(1, 1) * 10.0, 20).unwrap();
        let (_, ric) = solve_lqdg(&sys, &w).unwrap();
        assert_eq!(ric.p[20], qh);
        for p in &ric.p {
            assert!(relative_asymmetry(p) <= 1e-10);
        }
        assert!(ric.conditions_ok().iter().all(|&ok| ok));
    }

    #[test]
    fn game_value_basics() {
        let ric = RiccatiSolution {
            p: vec![DMatrix::identity(6, 6)],
            conditions: vec![],
        };
        let zero = StackedState::from_vector(DVector::zeros(6), 2).unwrap();
        assert_eq!(game_value(&ric, &zero).unwrap(), 0.0);
        let mut e1 = DVector::zeros(6);
        e1[0] = 1.0;
        let x = StackedState::from_vector(e1, 2).unwrap();
        assert_eq!(game_value(&ric, &x).unwrap(), 0.5);
        let wrong = StackedState::from_vector(DVector::zeros(12), 4).unwrap();
        assert!(game_value(&ric, &wrong).is_err());
    }

    #[test]
    fn cache_reuses_solutions() {
        let sys = double_integrator_engagement(0.05, 3, 1).unwrap();
        let n = sys.state_dim();
        let w = WeightSet::new(
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n),
            DMatrix::identity(6, 6),
            DMatrix::identity(3, 3),
            5,
        )
        .unwrap();
        let cache = GainCache::new();
        let a = cache.get_or_solve(&sys, &w).unwrap();
        let b = cache.get_or_solve(&sys, &w).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        assert!(matches!(*a, Gains::PerAxis(_)));
    }
}
