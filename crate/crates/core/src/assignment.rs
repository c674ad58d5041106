//! Interceptor groups, the group-to-threat reward matrix and the exact
//! max-min assignment.
//!
//! Indices are 0-based internally: threat `j`, reward column `c` (group
//! number `k = c + 1`), interceptor `i`. Interceptor sets are bit masks.

use serde::{Deserialize, Serialize};

use crate::dynamics::AgentState;
use crate::error::{invalid, Error, Result};
use crate::lqdg::GainCache;
use crate::rollout::{solve_reward, AgentModels, RewardConfig, INFEASIBLE_REWARD};
use crate::weights::{EmphasisSpace, EmphasisVector};

pub const MAX_INTERCEPTORS: usize = 20;

/// A non-empty subset of the interceptors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupIndex {
    /// 1-based group number.
    pub k: usize,
    /// 1-based interceptor ids, increasing.
    pub members: Vec<usize>,
}

impl GroupIndex {
    pub fn mask(&self) -> u32 {
        self.members.iter().fold(0, |m, &i| m | 1 << (i - 1))
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// `I_k[slot]` with a 1-based slot.
    pub fn member(&self, slot: usize) -> Option<usize> {
        slot.checked_sub(1).and_then(|s| self.members.get(s).copied())
    }

    pub fn label(&self) -> String {
        let names: Vec<String> = self.members.iter().map(|i| format!("I{i}")).collect();
        format!("{{{}}}", names.join(","))
    }
}

fn combinations(n: usize, size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == size {
        out.push(current.clone());
        return;
    }
    for i in start..=n {
        current.push(i);
        combinations(n, size, i + 1, current, out);
        current.pop();
    }
}

/// All `2^M − 1` groups: by size, then lexicographically.
pub fn enumerate_groups(interceptors: usize) -> Result<Vec<GroupIndex>> {
    if interceptors == 0 || interceptors > MAX_INTERCEPTORS {
        return Err(invalid(format!(
            "interceptor count must be in 1..={MAX_INTERCEPTORS}, got {interceptors}"
        )));
    }
    let mut members = Vec::with_capacity((1 << interceptors) - 1);
    for size in 1..=interceptors {
        combinations(interceptors, size, 1, &mut Vec::new(), &mut members);
    }
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(c, members)| GroupIndex { k: c + 1, members })
        .collect())
}

/// Where a reward cell's value came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellProvenance {
    pub best_horizon: usize,
    pub best_emphasis: EmphasisVector,
    /// 0-based slot within the group of the capturing interceptor.
    pub capturing_slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardMatrix {
    pub interceptors: usize,
    pub groups: Vec<GroupIndex>,
    /// `values[j][c]`, ft or [`INFEASIBLE_REWARD`].
    pub values: Vec<Vec<f64>>,
    pub feasible: Vec<Vec<bool>>,
    pub provenance: Vec<Vec<Option<CellProvenance>>>,
}

impl RewardMatrix {
    /// Matrix from raw values; cells at or below the sentinel are infeasible.
    pub fn from_values(interceptors: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        let groups = enumerate_groups(interceptors)?;
        if values.is_empty() {
            return Err(invalid("reward matrix needs at least one threat row"));
        }
        if let Some(row) = values.iter().position(|r| r.len() != groups.len()) {
            return Err(invalid(format!(
                "row {row} has {} columns, expected {}",
                values[row].len(),
                groups.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("reward values must be finite"));
        }
        let feasible = values
            .iter()
            .map(|r| r.iter().map(|&v| v > INFEASIBLE_REWARD).collect())
            .collect();
        let provenance = values.iter().map(|r| vec![None; r.len()]).collect();
        Ok(Self {
            interceptors,
            groups,
            values,
            feasible,
            provenance,
        })
    }

    pub fn threats(&self) -> usize {
        self.values.len()
    }

    pub fn columns(&self) -> usize {
        self.groups.len()
    }
}

/// Builds one emphasis space per group size from the interceptor-focus ratios.
pub fn emphasis_spaces(max_group: usize, ratios: &[f64]) -> Result<Vec<EmphasisSpace>> {
    (1..=max_group).map(|m| EmphasisSpace::focused(m, ratios)).collect()
}

/// Evaluates every threat × group cell. Cells are independent; with the
/// `parallel` feature they run on the current rayon pool.
pub fn build_reward_matrix(
    asset: &AgentState,
    interceptors: &[AgentState],
    threats: &[AgentState],
    models: &AgentModels,
    emphasis_ratios: &[f64],
    horizon_space: &[usize],
    config: &RewardConfig,
    cache: &GainCache,
) -> Result<RewardMatrix> {
    if threats.is_empty() {
        return Err(invalid("at least one threat is required"));
    }
    let groups = enumerate_groups(interceptors.len())?;
    let spaces = emphasis_spaces(interceptors.len(), emphasis_ratios)?;
    let cells: Vec<(usize, usize)> = (0..threats.len())
        .flat_map(|j| (0..groups.len()).map(move |c| (j, c)))
        .collect();

    let evaluate = |&(j, c): &(usize, usize)| -> Result<(f64, Option<CellProvenance>)> {
        let group = &groups[c];
        let states: Vec<AgentState> = group.members.iter().map(|&i| interceptors[i - 1].clone()).collect();
        let space = &spaces[group.size() - 1];
        let r = solve_reward(&threats[j], &states, asset, models, space, horizon_space, config, cache)?;
        let provenance = match (r.best_horizon, r.best_emphasis, r.capturing_slot) {
            (Some(best_horizon), Some(best_emphasis), Some(capturing_slot)) => Some(CellProvenance {
                best_horizon,
                best_emphasis,
                capturing_slot,
            }),
            _ => None,
        };
        Ok((r.reward, provenance))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<(f64, Option<CellProvenance>)>> = {
        use rayon::prelude::*;
        cells.par_iter().map(evaluate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(f64, Option<CellProvenance>)>> = cells.iter().map(evaluate).collect();

    let mut values = vec![vec![INFEASIBLE_REWARD; groups.len()]; threats.len()];
    let mut feasible = vec![vec![false; groups.len()]; threats.len()];
    let mut provenance = vec![vec![None; groups.len()]; threats.len()];
    for (&(j, c), result) in cells.iter().zip(results) {
        let (value, prov) = result?;
        values[j][c] = value;
        feasible[j][c] = prov.is_some();
        provenance[j][c] = prov;
    }
    Ok(RewardMatrix {
        interceptors: interceptors.len(),
        groups,
        values,
        feasible,
        provenance,
    })
}

/// Which constraint set applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `M ≥ N`: every threat gets exactly one group; groups are disjoint.
    CoverThreats,
    /// `M < N`: every interceptor is used; each used group takes exactly one
    /// threat; some threats go unassigned.
    EmployAllInterceptors,
}

impl Regime {
    pub fn for_counts(interceptors: usize, threats: usize) -> Self {
        if interceptors >= threats {
            Regime::CoverThreats
        } else {
            Regime::EmployAllInterceptors
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSolution {
    pub regime: Regime,
    /// `z[j][c] ∈ {0, 1}`.
    pub z: Vec<Vec<u8>>,
    /// Smallest reward over the assigned pairs.
    pub objective: f64,
    /// `(threat j, column c)`, sorted by threat.
    pub assigned_pairs: Vec<(usize, usize)>,
    /// Set when the optimum includes a pairing with no predicted intercept.
    pub sentinel_objective: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    objective: f64,
    sum: f64,
    pairs: Vec<(usize, usize)>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.objective != other.objective {
            return self.objective > other.objective;
        }
        if self.sum != other.sum {
            return self.sum > other.sum;
        }
        self.pairs < other.pairs
    }
}

struct Search<'a> {
    values: &'a [Vec<f64>],
    masks: Vec<u32>,
    full: u32,
    regime: Regime,
    /// Best value available to each threat, for the cover-regime bound.
    row_max: Vec<f64>,
    best: Option<Candidate>,
    pairs: Vec<(usize, usize)>,
}

impl Search<'_> {
    fn leaf(&mut self, min: f64, sum: f64, used: u32) {
        if self.pairs.is_empty() {
            return;
        }
        if self.regime == Regime::EmployAllInterceptors && used != self.full {
            return;
        }
        let cand = Candidate {
            objective: min,
            sum,
            pairs: self.pairs.clone(),
        };
        if self.best.as_ref().is_none_or(|b| cand.beats(b)) {
            self.best = Some(cand);
        }
    }

    fn pruned(&self, j: usize, min: f64) -> bool {
        let Some(best) = &self.best else {
            return false;
        };
        if min < best.objective {
            return true;
        }
        if self.regime == Regime::CoverThreats {
            let bound = self.row_max[j..].iter().fold(min, |a, &b| a.min(b));
            return bound < best.objective;
        }
        false
    }

    fn descend(&mut self, j: usize, used: u32, min: f64, sum: f64) {
        if j == self.values.len() {
            self.leaf(min, sum, used);
            return;
        }
        if self.pruned(j, min) {
            return;
        }
        if self.regime == Regime::EmployAllInterceptors {
            self.descend(j + 1, used, min, sum);
        }
        for c in 0..self.masks.len() {
            if self.masks[c] & used != 0 {
                continue;
            }
            let r = self.values[j][c];
            self.pairs.push((j, c));
            self.descend(j + 1, used | self.masks[c], min.min(r), sum + r);
            self.pairs.pop();
        }
    }
}

fn check_dimensions(rewards: &RewardMatrix, interceptors: usize, threats: usize) -> Result<()> {
    if rewards.interceptors != interceptors || rewards.threats() != threats {
        return Err(invalid(format!(
            "reward matrix is for {} interceptors x {} threats, expected {interceptors} x {threats}",
            rewards.interceptors,
            rewards.threats()
        )));
    }
    Ok(())
}

/// Exact max-min assignment in the regime implied by the counts.
pub fn solve_assignment(rewards: &RewardMatrix, interceptors: usize, threats: usize) -> Result<AssignmentSolution> {
    solve_assignment_in(rewards, interceptors, threats, Regime::for_counts(interceptors, threats))
}

/// Branch and bound over threat-by-threat group choices. Ties on the
/// objective go to the larger reward sum, then the lexicographically
/// smallest pair list.
pub fn solve_assignment_in(
    rewards: &RewardMatrix,
    interceptors: usize,
    threats: usize,
    regime: Regime,
) -> Result<AssignmentSolution> {
    check_dimensions(rewards, interceptors, threats)?;
    let masks: Vec<u32> = rewards.groups.iter().map(GroupIndex::mask).collect();
    let mut search = Search {
        values: &rewards.values,
        masks,
        full: (1u32 << interceptors) - 1,
        regime,
        row_max: rewards
            .values
            .iter()
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        best: None,
        pairs: Vec::with_capacity(threats),
    };
    search.descend(0, 0, f64::INFINITY, 0.0);
    let best = search.best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no assignment of {interceptors} interceptors to {threats} threats satisfies {regime:?}"
        ))
    })?;
    let mut z = vec![vec![0u8; rewards.columns()]; threats];
    for &(j, c) in &best.pairs {
        z[j][c] = 1;
    }
    let sentinel_objective = best.pairs.iter().any(|&(j, c)| !rewards.feasible[j][c]);
    if sentinel_objective {
        log::warn!("optimal assignment includes a pairing with no predicted intercept");
    }
    Ok(AssignmentSolution {
        regime,
        z,
        objective: best.objective,
        assigned_pairs: best.pairs,
        sentinel_objective,
    })
}

fn exists_with_threshold(
    values: &[Vec<f64>],
    masks: &[u32],
    full: u32,
    regime: Regime,
    threshold: f64,
    j: usize,
    used: u32,
    any: bool,
) -> bool {
    if j == values.len() {
        return any && (regime == Regime::CoverThreats || used == full);
    }
    if regime == Regime::EmployAllInterceptors
        && exists_with_threshold(values, masks, full, regime, threshold, j + 1, used, any)
    {
        return true;
    }
    (0..masks.len()).any(|c| {
        masks[c] & used == 0
            && values[j][c] >= threshold
            && exists_with_threshold(values, masks, full, regime, threshold, j + 1, used | masks[c], true)
    })
}

/// Optimal objective by bisection over candidate thresholds: the largest
/// reward value `t` for which an assignment using only cells `≥ t` exists.
pub fn solve_assignment_bisection(
    rewards: &RewardMatrix,
    interceptors: usize,
    threats: usize,
    regime: Regime,
) -> Result<f64> {
    check_dimensions(rewards, interceptors, threats)?;
    let masks: Vec<u32> = rewards.groups.iter().map(GroupIndex::mask).collect();
    let full = (1u32 << interceptors) - 1;
    let mut thresholds: Vec<f64> = rewards.values.iter().flatten().copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let feasible = |t: f64| exists_with_threshold(&rewards.values, &masks, full, regime, t, 0, 0, false);
    if thresholds.is_empty() || !feasible(thresholds[0]) {
        return Err(Error::Infeasible(format!("no feasible assignment in {regime:?}")));
    }
    // invariant: thresholds[lo] feasible, thresholds[hi] infeasible (or past the end)
    let (mut lo, mut hi) = (0, thresholds.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(thresholds[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(thresholds[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Shape { message: String },
    NonBinary { threat: usize, column: usize, value: u8 },
    /// Row-sum constraint on threat `threat`.
    ThreatRow { threat: usize, sum: u32 },
    /// Column-sum constraint on group column `column`.
    GroupColumn { column: usize, sum: u32 },
    /// Interceptor (1-based) in more than one assigned group.
    InterceptorReuse { interceptor: usize, count: u32 },
    /// Interceptor (1-based) left unused when all must be employed.
    InterceptorUnused { interceptor: usize },
    NothingAssigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
    /// Smallest reward over assigned cells, if any are assigned.
    pub objective: Option<f64>,
}

impl VerificationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits `z` against the constraint set of `regime`.
pub fn verify_assignment(
    z: &[Vec<u8>],
    rewards: &RewardMatrix,
    interceptors: usize,
    threats: usize,
    regime: Regime,
) -> VerificationReport {
    let mut violations = Vec::new();
    let columns = rewards.columns();
    if z.len() != threats
        || rewards.threats() != threats
        || rewards.interceptors != interceptors
        || z.iter().any(|r| r.len() != columns)
    {
        violations.push(Violation::Shape {
            message: format!("z must be {threats} x {columns} and match the reward matrix"),
        });
        return VerificationReport {
            violations,
            objective: None,
        };
    }
    for (j, row) in z.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v > 1 {
                violations.push(Violation::NonBinary { threat: j, column: c, value: v });
            }
        }
    }
    let on = |j: usize, c: usize| u32::from(z[j][c] != 0);
    for j in 0..threats {
        let sum: u32 = (0..columns).map(|c| on(j, c)).sum();
        let ok = match regime {
            Regime::CoverThreats => sum == 1,
            Regime::EmployAllInterceptors => sum <= 1,
        };
        if !ok {
            violations.push(Violation::ThreatRow { threat: j, sum });
        }
    }
    for c in 0..columns {
        let sum: u32 = (0..threats).map(|j| on(j, c)).sum();
        if sum > 1 {
            violations.push(Violation::GroupColumn { column: c, sum });
        }
    }
    for i in 1..=interceptors {
        let count: u32 = rewards
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.members.contains(&i))
            .map(|(c, _)| (0..threats).map(|j| on(j, c)).sum::<u32>())
            .sum();
        if count > 1 {
            violations.push(Violation::InterceptorReuse { interceptor: i, count });
        }
        if regime == Regime::EmployAllInterceptors && count == 0 {
            violations.push(Violation::InterceptorUnused { interceptor: i });
        }
    }
    let assigned: Vec<f64> = (0..threats)
        .flat_map(|j| (0..columns).map(move |c| (j, c)))
        .filter(|&(j, c)| z[j][c] != 0)
        .map(|(j, c)| rewards.values[j][c])
        .collect();
    if assigned.is_empty() {
        violations.push(Violation::NothingAssigned);
    }
    let objective = assigned.into_iter().reduce(f64::min);
    VerificationReport { violations, objective }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_interceptor_groups() {
        let groups = enumerate_groups(3).unwrap();
        let members: Vec<Vec<usize>> = groups.iter().map(|g| g.members.clone()).collect();
        assert_eq!(
            members,
            vec![vec![1], vec![2], vec![3], vec![1, 2], vec![1, 3], vec![2, 3], vec![1, 2, 3]]
        );
        assert_eq!(groups[5].k, 6);
        assert_eq!(groups[5].member(2), Some(3));
        assert_eq!(groups[6].label(), "{I1,I2,I3}");
    }

    #[test]
    fn group_counts() {
        assert_eq!(enumerate_groups(1).unwrap().len(), 1);
        assert_eq!(enumerate_groups(5).unwrap().len(), 31);
        assert!(enumerate_groups(0).is_err());
        assert!(enumerate_groups(21).is_err());
    }

    #[test]
    fn two_by_two_example() {
        let r = RewardMatrix::from_values(2, vec![vec![5.0, 1.0, 9.0], vec![4.0, 8.0, 9.0]]).unwrap();
        let s = solve_assignment(&r, 2, 2).unwrap();
        assert_eq!(s.objective, 5.0);
        assert_eq!(s.assigned_pairs, vec![(0, 0), (1, 1)]);
        assert!(verify_assignment(&s.z, &r, 2, 2, s.regime).is_valid());
        assert_eq!(solve_assignment_bisection(&r, 2, 2, Regime::CoverThreats).unwrap(), 5.0);
    }

    #[test]
    fn single_threat_takes_row_max() {
        let r = RewardMatrix::from_values(2, vec![vec![3.0, 11.0, 7.0]]).unwrap();
        let s = solve_assignment(&r, 2, 1).unwrap();
        assert_eq!(s.objective, 11.0);
        assert_eq!(s.assigned_pairs, vec![(0, 1)]);
    }

    #[test]
    fn fewer_interceptors_than_threats() {
        let r = RewardMatrix::from_values(1, vec![vec![3.0], vec![7.0]]).unwrap();
        let s = solve_assignment(&r, 1, 2).unwrap();
        assert_eq!(s.regime, Regime::EmployAllInterceptors);
        assert_eq!(s.objective, 7.0);
        assert_eq!(s.assigned_pairs, vec![(1, 0)]);
        assert!(verify_assignment(&s.z, &r, 1, 2, s.regime).is_valid());
    }

    #[test]
    fn forcing_cover_with_too_few_interceptors_is_infeasible() {
        let r = RewardMatrix::from_values(1, vec![vec![3.0], vec![7.0]]).unwrap();
        assert!(matches!(
            solve_assignment_in(&r, 1, 2, Regime::CoverThreats),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn sentinel_objective_flagged() {
        let r = RewardMatrix::from_values(1, vec![vec![INFEASIBLE_REWARD]]).unwrap();
        let s = solve_assignment(&r, 1, 1).unwrap();
        assert!(s.sentinel_objective);
        assert_eq!(s.objective, INFEASIBLE_REWARD);
    }

    #[test]
    fn tie_break_prefers_larger_sum_then_lexicographic() {
        // both covers have min 5; second has the larger sum
        let r = RewardMatrix::from_values(2, vec![vec![5.0, 5.0, 0.0], vec![6.0, 5.0, 0.0]]).unwrap();
        let s = solve_assignment(&r, 2, 2).unwrap();
        assert_eq!(s.assigned_pairs, vec![(0, 1), (1, 0)]);
        let r = RewardMatrix::from_values(2, vec![vec![5.0, 5.0, 0.0], vec![5.0, 5.0, 0.0]]).unwrap();
        let s = solve_assignment(&r, 2, 2).unwrap();
        assert_eq!(s.assigned_pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn verification_reports_violations() {
        let r = RewardMatrix::from_values(2, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        // groups {I1} and {I1,I2} share I1
        let z = vec![vec![1, 0, 0], vec![0, 0, 1]];
        let rep = verify_assignment(&z, &r, 2, 2, Regime::CoverThreats);
        assert!(rep.violations.contains(&Violation::InterceptorReuse { interceptor: 1, count: 2 }));
        let z = vec![vec![0, 0, 0], vec![0, 0, 1]];
        let rep = verify_assignment(&z, &r, 2, 2, Regime::CoverThreats);
        assert!(rep.violations.contains(&Violation::ThreatRow { threat: 0, sum: 0 }));
        assert_eq!(rep.objective, Some(6.0));
        let z = vec![vec![2, 0, 0], vec![0, 1, 0]];
        let rep = verify_assignment(&z, &r, 2, 2, Regime::CoverThreats);
        assert!(matches!(rep.violations[0], Violation::NonBinary { .. }));
        let rep = verify_assignment(&[vec![1, 0, 0]], &r, 2, 2, Regime::CoverThreats);
        assert!(matches!(rep.violations[0], Violation::Shape { .. }));
    }

    #[test]
    fn verification_requires_all_interceptors_when_outnumbered() {
        let r = RewardMatrix::from_values(2, vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        let z = vec![vec![1, 0, 0], vec![0, 0, 0], vec![0, 0, 0]];
        let rep = verify_assignment(&z, &r, 2, 3, Regime::EmployAllInterceptors);
        assert_eq!(rep.violations, vec![Violation::InterceptorUnused { interceptor: 2 }]);
    }

    #[test]
    fn shape_errors() {
        assert!(RewardMatrix::from_values(2, vec![vec![1.0, 2.0]]).is_err());
        assert!(RewardMatrix::from_values(1, vec![vec![f64::NAN]]).is_err());
        let r = RewardMatrix::from_values(2, vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(solve_assignment(&r, 3, 1).is_err());
    }
}
