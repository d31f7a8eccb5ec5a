//! Horizon cutting: split the horizon at shifted grids of cut points, solve
//! each window on its own, glue the window solutions together and keep the
//! best grid.

use std::time::Instant;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{GmkError, Result};
use crate::instance::{check_feasible, GmkInstance, MultistageSolution, SubInstanceView, Variant};
use crate::mkcp::{solve_mkcp_exact, solve_mkcp_greedy, MkcpConfig};
use crate::numeric::ratio_to_string;
use crate::oracle::{brute_force_view, DEFAULT_ORACLE_BUDGET};
use crate::ratio::check_phi_bound;
use crate::reduction::{lift_solution, reduce_view, DEFAULT_HORIZON_CAP};

/// Strictly increasing points `1 = u_0 < ... < u_k = T + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct CutPointSet {
    points: Vec<usize>,
}

impl CutPointSet {
    pub fn new(points: Vec<usize>) -> Result<Self> {
        if points.len() < 2 || points[0] != 1 {
            return Err(GmkError::input("cut points must start at 1 and contain at least two points"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GmkError::input("cut points must be strictly increasing"));
        }
        Ok(CutPointSet { points })
    }

    pub fn trivial(horizon: usize) -> Self {
        CutPointSet { points: vec![1, horizon + 1] }
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn horizon(&self) -> usize {
        self.points[self.points.len() - 1] - 1
    }

    pub fn interior(&self) -> &[usize] {
        &self.points[1..self.points.len() - 1]
    }

    /// Windows `[u_r, u_{r+1} - 1]`.
    pub fn windows(&self) -> Vec<(usize, usize)> {
        self.points.windows(2).map(|w| (w[0], w[1] - 1)).collect()
    }
}

impl TryFrom<Vec<usize>> for CutPointSet {
    type Error = GmkError;
    fn try_from(points: Vec<usize>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<CutPointSet> for Vec<usize> {
    fn from(c: CutPointSet) -> Self {
        c.points
    }
}

/// Accuracy `epsilon` in `(0, 1/4)`, ratio bound `phi >= 1`, and the grid
/// spacing `mu_inv = ceil(phi / epsilon^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeParams {
    pub epsilon: Ratio<u64>,
    pub phi: u64,
    pub mu_inv: usize,
}

impl SchemeParams {
    pub fn new(epsilon: Ratio<u64>, phi: u64) -> Result<Self> {
        if *epsilon.numer() == 0 || epsilon >= Ratio::new(1, 4) {
            return Err(GmkError::input(format!(
                "epsilon must lie strictly between 0 and 1/4, got {}",
                ratio_to_string(&epsilon)
            )));
        }
        if phi == 0 {
            return Err(GmkError::input("phi must be at least 1"));
        }
        let (n, d) = (*epsilon.numer() as u128, *epsilon.denom() as u128);
        let mu_inv = (phi as u128 * d * d).div_ceil(n * n);
        let mu_inv = usize::try_from(mu_inv).map_err(|_| GmkError::input("phi / epsilon^2 is too large"))?;
        Ok(SchemeParams { epsilon, phi, mu_inv })
    }

    /// `1 - epsilon`.
    pub fn guarantee(&self) -> Ratio<u64> {
        Ratio::from_integer(1) - self.epsilon
    }
}

/// `{a·m + j - 1 | a >= 1, a·m + j - 1 <= T - m} ∪ {1, T + 1}` for spacing `m`.
pub fn cut_points_with_spacing(horizon: usize, mu_inv: usize, j: usize) -> Result<CutPointSet> {
    if horizon == 0 {
        return Err(GmkError::input("horizon must be at least 1"));
    }
    if mu_inv == 0 || j == 0 || j > mu_inv {
        return Err(GmkError::input(format!("shift j={j} is outside [1, {mu_inv}]")));
    }
    let mut points = vec![1];
    let mut a = 1;
    while a * mu_inv + j - 1 + mu_inv <= horizon {
        let u = a * mu_inv + j - 1;
        if u > 1 {
            points.push(u);
        }
        a += 1;
    }
    points.push(horizon + 1);
    CutPointSet::new(points)
}

pub fn cut_points(horizon: usize, params: &SchemeParams, j: usize) -> Result<CutPointSet> {
    cut_points_with_spacing(horizon, params.mu_inv, j)
}

pub fn cut_instances<'a>(inst: &'a GmkInstance, cuts: &CutPointSet) -> Result<Vec<SubInstanceView<'a>>> {
    if cuts.horizon() != inst.horizon {
        return Err(GmkError::input(format!(
            "cut points end at {} but the horizon is {}",
            cuts.horizon() + 1,
            inst.horizon
        )));
    }
    cuts.windows().into_iter().map(|(a, b)| inst.view(a, b)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combined {
    pub solution: MultistageSolution,
    pub value: i64,
    pub window_values: Vec<i64>,
}

impl Combined {
    /// What gluing added on top of the window values.
    pub fn bonus(&self) -> i64 {
        self.value - self.window_values.iter().sum::<i64>()
    }
}

/// Concatenates window solutions. The combined value is checked against the
/// sum of the window values.
pub fn combine_cut_solutions(inst: &GmkInstance, cuts: &CutPointSet, parts: &[MultistageSolution]) -> Result<Combined> {
    let views = cut_instances(inst, cuts)?;
    if views.len() != parts.len() {
        return Err(GmkError::input(format!("{} windows but {} parts", views.len(), parts.len())));
    }
    let mut sets = Vec::with_capacity(inst.horizon);
    let mut assignments = Vec::with_capacity(inst.horizon);
    let mut window_values = Vec::with_capacity(parts.len());
    for (view, part) in views.iter().zip(parts) {
        let report = check_feasible(view, part);
        if !report.is_ok() {
            return Err(GmkError::Infeasible(report));
        }
        window_values.push(view.evaluate_unchecked(&part.sets));
        sets.extend(part.sets.iter().cloned());
        assignments.extend(part.assignments.iter().cloned());
    }
    let solution = MultistageSolution { sets, assignments };
    let full = inst.full_view();
    let report = check_feasible(&full, &solution);
    if !report.is_ok() {
        return Err(GmkError::Contract(format!("combined solution is infeasible: {report}")));
    }
    let value = full.evaluate_unchecked(&solution.sets);
    let sum: i64 = window_values.iter().sum();
    if value < sum {
        return Err(GmkError::Contract(format!(
            "combined value {value} is below the sum of window values {sum}"
        )));
    }
    Ok(Combined { solution, value, window_values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SubSolver {
    /// Reduction, exact branch and bound, lift.
    #[default]
    Exact,
    /// Reduction, greedy, lift.
    Greedy,
    /// Exact dynamic program over stage sets (no reduction, no horizon cap).
    Dp,
}

impl SubSolver {
    /// Whether the sub-solver returns window optima.
    pub fn is_exact(&self) -> bool {
        matches!(self, SubSolver::Exact | SubSolver::Dp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub horizon_cap: usize,
    pub mkcp: MkcpConfig,
    pub oracle_budget: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { horizon_cap: DEFAULT_HORIZON_CAP, mkcp: MkcpConfig::default(), oracle_budget: DEFAULT_ORACLE_BUDGET }
    }
}

/// Solves a window directly with `solver`.
pub fn solve_bounded_horizon(view: &SubInstanceView<'_>, solver: SubSolver, config: &SolveConfig) -> Result<MultistageSolution> {
    let sol = match solver {
        SubSolver::Dp => brute_force_view(view, config.oracle_budget)?.solution,
        SubSolver::Exact | SubSolver::Greedy => {
            let red = reduce_view(view, config.horizon_cap)?;
            let rsol = if solver == SubSolver::Exact {
                solve_mkcp_exact(&red, &config.mkcp)?
            } else {
                solve_mkcp_greedy(&red, &config.mkcp)?
            };
            lift_solution(view, &red, &rsol)?
        }
    };
    let report = check_feasible(view, &sol);
    if !report.is_ok() {
        return Err(GmkError::Contract(format!("sub-solver returned an infeasible solution: {report}")));
    }
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShiftReport {
    pub j: usize,
    pub cut_points: CutPointSet,
    pub window_values: Vec<i64>,
    pub combine_bonus: i64,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemeReport {
    pub mu_inv: usize,
    /// True when the horizon is at most `2·mu_inv` and the whole instance
    /// was solved directly.
    pub bypassed: bool,
    pub shifts: Vec<ShiftReport>,
    pub selected_j: Option<usize>,
    pub value: i64,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralOutcome {
    pub solution: MultistageSolution,
    pub value: i64,
    pub report: SchemeReport,
}

/// The horizon-cutting scheme. Returns the best glued solution over all
/// shifts `j = 1..=mu_inv`, the smallest `j` winning ties.
pub fn solve_general(inst: &GmkInstance, params: &SchemeParams, solver: SubSolver, config: &SolveConfig) -> Result<GeneralOutcome> {
    let start = Instant::now();
    match inst.variant {
        Variant::Modular => check_phi_bound(inst, params.phi)?,
        Variant::Submodular => {
            if !inst.cost_plus.is_zero() || !inst.cost_minus.is_zero() {
                return Err(GmkError::input("submodular instances must have zero change costs"));
            }
        }
    }
    let m = params.mu_inv;
    let full = inst.full_view();
    if inst.horizon <= 2 * m {
        let solution = solve_bounded_horizon(&full, solver, config)?;
        let value = full.evaluate_unchecked(&solution.sets);
        let report = SchemeReport {
            mu_inv: m,
            bypassed: true,
            shifts: Vec::new(),
            selected_j: None,
            value,
            elapsed_ms: start.elapsed().as_millis(),
        };
        return Ok(GeneralOutcome { solution, value, report });
    }

    let mut shifts = Vec::with_capacity(m);
    let mut best: Option<(i64, usize, MultistageSolution)> = None;
    for j in 1..=m {
        let cuts = cut_points(inst.horizon, params, j)?;
        let views = cut_instances(inst, &cuts)?;
        if !cuts.interior().is_empty() {
            if let Some(v) = views.iter().find(|v| v.horizon() > 2 * m) {
                return Err(GmkError::Contract(format!(
                    "window [{}, {}] is longer than 2·mu_inv = {}",
                    v.first,
                    v.last,
                    2 * m
                )));
            }
        }
        let parts = views
            .iter()
            .map(|v| solve_bounded_horizon(v, solver, config))
            .collect::<Result<Vec<_>>>()?;
        let combined = combine_cut_solutions(inst, &cuts, &parts)?;
        shifts.push(ShiftReport {
            j,
            cut_points: cuts,
            window_values: combined.window_values.clone(),
            combine_bonus: combined.bonus(),
            value: combined.value,
        });
        if best.as_ref().is_none_or(|(v, _, _)| combined.value > *v) {
            best = Some((combined.value, j, combined.solution));
        }
    }
    let (value, j, solution) = best.expect("mu_inv >= 1");
    let report = SchemeReport {
        mu_inv: m,
        bypassed: false,
        shifts,
        selected_j: Some(j),
        value,
        elapsed_ms: start.elapsed().as_millis(),
    };
    Ok(GeneralOutcome { solution, value, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_up_spacing() {
        let p = SchemeParams::new(Ratio::new(1, 5), 1).unwrap();
        assert_eq!(p.mu_inv, 25);
        let p = SchemeParams::new(Ratio::new(6, 25), 1).unwrap();
        assert_eq!(p.mu_inv, 18);
        assert!(SchemeParams::new(Ratio::new(1, 4), 1).is_err());
        assert!(SchemeParams::new(Ratio::new(0, 1), 1).is_err());
        assert!(SchemeParams::new(Ratio::new(1, 5), 0).is_err());
    }

    #[test]
    fn grid_examples() {
        assert_eq!(cut_points_with_spacing(12, 3, 1).unwrap().points(), &[1, 3, 6, 9, 13]);
        assert_eq!(cut_points_with_spacing(12, 3, 3).unwrap().points(), &[1, 5, 8, 13]);
        assert!(cut_points_with_spacing(12, 3, 4).is_err());
        assert!(cut_points_with_spacing(12, 3, 0).is_err());
    }

    #[test]
    fn windows_of_a_grid() {
        let cuts = CutPointSet::new(vec![1, 3, 6, 9, 13]).unwrap();
        assert_eq!(cuts.windows(), vec![(1, 2), (3, 5), (6, 8), (9, 12)]);
        assert_eq!(CutPointSet::trivial(7).windows(), vec![(1, 7)]);
        assert!(CutPointSet::new(vec![1, 1, 3]).is_err());
        assert!(CutPointSet::new(vec![2, 3]).is_err());
    }
}
