//! Double-integrator agent models and the stacked multi-agent engagement.
//!
//! Every agent obeys `p̈ = u` per axis. The per-agent state is laid out as
//! `[position; velocity]`, each block `n_u` long. An engagement between one
//! asset, `m` interceptors and one threat stacks the agents in that order,
//! asset first and threat last. The asset and interceptors form the
//! minimizing team (input `u`); the threat is the maximizer (input `v`).

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};

/// Standard gravity used for all G ↔ ft/s² conversions.
pub const G_FTPS2: f64 = 32.174;

pub fn g_to_ftps2(g: f64) -> f64 {
    g * G_FTPS2
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
}

impl AgentState {
    pub fn new(position: DVector<f64>, velocity: DVector<f64>) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(invalid(format!(
                "position has {} components but velocity has {}",
                position.len(),
                velocity.len()
            )));
        }
        if position.is_empty() {
            return Err(invalid("agent state must have at least one axis"));
        }
        if position.iter().chain(velocity.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("agent state has non-finite components"));
        }
        Ok(Self { position, velocity })
    }

    pub fn from_slices(position: &[f64], velocity: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(position),
            DVector::from_column_slice(velocity),
        )
    }

    /// Number of spatial axes (`n_x / 2`).
    pub fn axes(&self) -> usize {
        self.position.len()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.axes()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.axes();
        DVector::from_fn(2 * n, |i, _| {
            if i < n {
                self.position[i]
            } else {
                self.velocity[i - n]
            }
        })
    }

    pub fn from_vector(x: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(invalid(format!("agent state vector of odd length {}", x.len())));
        }
        let n = x.len() / 2;
        Self::from_slices(&x[..n], &x[n..])
    }
}

/// Exact discrete-time model of one agent class.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    pub state_matrix: DMatrix<f64>,
    pub input_matrix: DMatrix<f64>,
    pub sample_time: f64,
}

impl AgentModel {
    pub fn n_x(&self) -> usize {
        self.state_matrix.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.input_matrix.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.state_matrix * x + &self.input_matrix * u
    }
}

/// Zero-order-hold discretization of a per-axis double integrator.
pub fn discretize_double_integrator(sample_time: f64, n_u: usize) -> Result<AgentModel> {
    if !sample_time.is_finite() || sample_time < 0.0 {
        return Err(invalid(format!("sample time must be finite and >= 0, got {sample_time}")));
    }
    if n_u == 0 {
        return Err(invalid("input dimension must be at least 1"));
    }
    let n_x = 2 * n_u;
    let dt = sample_time;
    let mut a = DMatrix::identity(n_x, n_x);
    let mut b = DMatrix::zeros(n_x, n_u);
    for i in 0..n_u {
        a[(i, n_u + i)] = dt;
        b[(i, i)] = 0.5 * dt * dt;
        b[(n_u + i, i)] = dt;
    }
    Ok(AgentModel {
        state_matrix: a,
        input_matrix: b,
        sample_time,
    })
}

pub(crate) fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Nonzero entries of a matrix, row by row in column order.
#[derive(Debug, Clone, PartialEq)]
struct SparseRows(Vec<Vec<(usize, f64)>>);

impl SparseRows {
    fn of(m: &DMatrix<f64>) -> Self {
        Self(
            (0..m.nrows())
                .map(|r| (0..m.ncols()).filter(|&c| m[(r, c)] != 0.0).map(|c| (c, m[(r, c)])).collect())
                .collect(),
        )
    }

    fn accumulate(&self, row: usize, x: &[f64], acc: f64) -> f64 {
        self.0[row].iter().fold(acc, |acc, &(c, v)| acc + v * x[c])
    }
}

/// Stacked linear game `x(h+1) = A x(h) + B_u u(h) + B_v v(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EngagementSystem {
    a: DMatrix<f64>,
    b_u: DMatrix<f64>,
    b_v: DMatrix<f64>,
    /// Interceptors in the group.
    pub m: usize,
    pub n_x: usize,
    pub n_u: usize,
    pub sample_time: f64,
    sparse: [SparseRows; 3],
    fingerprint: [u8; 32],
}

impl EngagementSystem {
    /// Checks dimensions and precomputes the sparse step.
    pub fn new(
        a: DMatrix<f64>,
        b_u: DMatrix<f64>,
        b_v: DMatrix<f64>,
        m: usize,
        n_x: usize,
        n_u: usize,
        sample_time: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b_u.nrows() != n || b_v.nrows() != n {
            return Err(invalid(format!(
                "A is {}x{}, B_u has {} rows, B_v has {} rows",
                a.nrows(),
                a.ncols(),
                b_u.nrows(),
                b_v.nrows()
            )));
        }
        if a.iter().chain(b_u.iter()).chain(b_v.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("system matrices must be finite"));
        }
        let mut h = Sha256::new();
        for mat in [&a, &b_u, &b_v] {
            h.update((mat.nrows() as u64).to_le_bytes());
            h.update((mat.ncols() as u64).to_le_bytes());
            for v in mat.iter() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        for v in [m, n_x, n_u] {
            h.update((v as u64).to_le_bytes());
        }
        h.update(sample_time.to_bits().to_le_bytes());
        Ok(Self {
            sparse: [SparseRows::of(&a), SparseRows::of(&b_u), SparseRows::of(&b_v)],
            fingerprint: h.finalize().into(),
            a,
            b_u,
            b_v,
            m,
            n_x,
            n_u,
            sample_time,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b_u(&self) -> &DMatrix<f64> {
        &self.b_u
    }

    pub fn b_v(&self) -> &DMatrix<f64> {
        &self.b_v
    }

    /// Content hash of the matrices and metadata.
    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    /// Total number of agents, `m + 2`.
    pub fn agents(&self) -> usize {
        self.m + 2
    }

    pub fn state_dim(&self) -> usize {
        self.agents() * self.n_x
    }

    pub fn team_input_dim(&self) -> usize {
        (self.m + 1) * self.n_u
    }

    /// The state recursion, written into `out`. Each entry sums the nonzero
    /// terms of `A x`, then `B_u u`, then `B_v v`, in column order; rollout
    /// and replay both go through here.
    pub fn step_into(&self, x: &[f64], u: &[f64], v: &[f64], out: &mut [f64]) {
        let [a, b_u, b_v] = &self.sparse;
        for (r, o) in out.iter_mut().enumerate() {
            let acc = a.accumulate(r, x, 0.0);
            let acc = b_u.accumulate(r, u, acc);
            *o = b_v.accumulate(r, v, acc);
        }
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        self.step_into(x.as_slice(), u.as_slice(), v.as_slice(), out.as_mut_slice());
        out
    }
}

pub fn build_engagement_system(
    asset: &AgentModel,
    interceptor: &AgentModel,
    threat: &AgentModel,
    m: usize,
) -> Result<EngagementSystem> {
    if m == 0 {
        return Err(invalid("group size m must be at least 1"));
    }
    let (n_x, n_u) = (asset.n_x(), asset.n_u());
    for (name, model) in [("interceptor", interceptor), ("threat", threat)] {
        if model.n_x() != n_x || model.n_u() != n_u {
            return Err(invalid(format!(
                "{name} model is {}x{} but asset model is {n_x}x{n_u}",
                model.n_x(),
                model.n_u()
            )));
        }
        if model.sample_time != asset.sample_time {
            return Err(invalid(format!(
                "{name} sample time {} differs from asset sample time {}",
                model.sample_time, asset.sample_time
            )));
        }
    }
    for (name, model) in [("asset", asset), ("interceptor", interceptor), ("threat", threat)] {
        if model.state_matrix.ncols() != n_x || model.input_matrix.nrows() != n_x {
            return Err(invalid(format!("{name} model matrices are inconsistent")));
        }
    }

    let eye_m = DMatrix::<f64>::identity(m, m);
    let a_team = eye_m.kronecker(&interceptor.state_matrix);
    let a = block_diag(&[&asset.state_matrix, &a_team, &threat.state_matrix]);

    let b_team = eye_m.kronecker(&interceptor.input_matrix);
    let mut b_team_padded = DMatrix::zeros((m + 1) * n_x, m * n_u);
    b_team_padded.view_mut((0, 0), (m * n_x, m * n_u)).copy_from(&b_team);
    let b_u = block_diag(&[&asset.input_matrix, &b_team_padded]);

    let mut b_v = DMatrix::zeros((m + 2) * n_x, n_u);
    b_v.view_mut(((m + 1) * n_x, 0), (n_x, n_u))
        .copy_from(&threat.input_matrix);

    EngagementSystem::new(a, b_u, b_v, m, n_x, n_u, asset.sample_time)
}

/// Convenience: identical double-integrator models for all three agent classes.
pub fn double_integrator_engagement(sample_time: f64, n_u: usize, m: usize) -> Result<EngagementSystem> {
    let model = discretize_double_integrator(sample_time, n_u)?;
    build_engagement_system(&model, &model, &model, m)
}

/// Concatenated engagement state: asset, interceptors in group order, threat.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    vector: DVector<f64>,
    n_x: usize,
}

impl StackedState {
    pub fn from_vector(vector: DVector<f64>, n_x: usize) -> Result<Self> {
        if n_x == 0 || n_x % 2 != 0 {
            return Err(invalid(format!("per-agent state dimension must be even, got {n_x}")));
        }
        if vector.len() % n_x != 0 || vector.len() < 3 * n_x {
            return Err(invalid(format!(
                "stacked vector of length {} does not hold at least three agents of dimension {n_x}",
                vector.len()
            )));
        }
        Ok(Self { vector, n_x })
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.vector
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.vector
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn agents(&self) -> usize {
        self.vector.len() / self.n_x
    }

    /// Interceptors in the group.
    pub fn m(&self) -> usize {
        self.agents() - 2
    }

    pub fn agent(&self, index: usize) -> AgentState {
        let n = self.n_x / 2;
        let off = index * self.n_x;
        AgentState {
            position: self.vector.rows(off, n).into_owned(),
            velocity: self.vector.rows(off + n, n).into_owned(),
        }
    }

    pub fn position(&self, index: usize) -> DVector<f64> {
        self.vector.rows(index * self.n_x, self.n_x / 2).into_owned()
    }

    pub fn asset(&self) -> AgentState {
        self.agent(0)
    }

    /// `slot` counts from 0 within the group.
    pub fn interceptor(&self, slot: usize) -> AgentState {
        self.agent(1 + slot)
    }

    pub fn threat(&self) -> AgentState {
        self.agent(self.agents() - 1)
    }
}

pub fn stack_state(
    asset: &AgentState,
    interceptors: &[AgentState],
    threat: &AgentState,
) -> Result<StackedState> {
    let n_x = asset.state_dim();
    if interceptors.is_empty() {
        return Err(invalid("at least one interceptor is required"));
    }
    let all: Vec<&AgentState> = std::iter::once(asset)
        .chain(interceptors.iter())
        .chain(std::iter::once(threat))
        .collect();
    if let Some(bad) = all.iter().position(|s| s.state_dim() != n_x) {
        return Err(invalid(format!(
            "agent {bad} has state dimension {} but asset has {n_x}",
            all[bad].state_dim()
        )));
    }
    let mut v = DVector::zeros(all.len() * n_x);
    for (i, s) in all.iter().enumerate() {
        v.rows_mut(i * n_x, n_x).copy_from(&s.to_vector());
    }
    StackedState::from_vector(v, n_x)
}

pub fn unstack_state(x: &StackedState) -> (AgentState, Vec<AgentState>, AgentState) {
    let interceptors = (0..x.m()).map(|i| x.interceptor(i)).collect();
    (x.asset(), interceptors, x.threat())
}
