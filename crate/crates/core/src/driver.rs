//! Adaptive ε-constraint loop: for a decreasing sequence of cost caps,
//! alternate relaxed solves, repair, two-level search and multiplier
//! updates, and collect every harvested trade-off into one frontier.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lagrangian::{complete, exact_relaxed_min, relaxed_solution, repair, solve_relaxed, LagrangeState, Multipliers};
use crate::model::{Deployment, Scenario, Selection};
use crate::pareto::{two_level_search, FeasibleCache, ParetoArchive, TwoLevelLimits};
use crate::tabu::{run_tabu, TabuLimits};

/// Entries kept by the repair memo before it is flushed.
const CACHE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Cap decrement `Δc`; `None` means the smallest site cost.
    pub delta_c: Option<f64>,
    /// Harvest window width `Δε`; `None` means twice the smallest SCBS cost.
    pub delta_eps: Option<f64>,
    /// Relaxed-solve / repair / search rounds per cost cap.
    pub n_max_lagrange: usize,
    pub tabu: TabuLimits,
    pub two_level: TwoLevelLimits,
    /// Initial `α` of the subgradient step.
    pub step_scale0: f64,
    /// Non-improving lower bounds before `α` halves.
    pub halving_patience: usize,
    pub seed: u64,
    /// Carry multipliers and the step scale from one cost cap to the next.
    pub warm_start: bool,
    /// Relaxed problems with at most this many site subsets are solved by
    /// enumeration, making the recorded lower bound exact.
    pub exact_bound_guard: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            delta_c: None,
            delta_eps: None,
            n_max_lagrange: 5,
            tabu: TabuLimits::default(),
            two_level: TwoLevelLimits::default(),
            step_scale0: 2.0,
            halving_patience: 10,
            seed: 0,
            warm_start: true,
            exact_bound_guard: 4096,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dc) = self.delta_c {
            if !(dc.is_finite() && dc > 0.0) {
                return Err(Error::Config(format!("delta_c must be positive, got {dc}")));
            }
        }
        if let Some(de) = self.delta_eps {
            if !(de.is_finite() && de >= 0.0) {
                return Err(Error::Config(format!("delta_eps must be nonnegative, got {de}")));
            }
        }
        if !(self.step_scale0.is_finite() && self.step_scale0 > 0.0) {
            return Err(Error::Config(format!("step_scale0 must be positive, got {}", self.step_scale0)));
        }
        if self.halving_patience == 0 {
            return Err(Error::Config("halving_patience must be at least 1".into()));
        }
        if self.tabu.tenure == Some(0) || self.two_level.tenure == Some(0) {
            return Err(Error::Config("tabu tenure must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: SolverConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Proposed,
    SingleTabu,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::SingleTabu => "single-tabu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Relaxed problem solved by enumeration: a valid lower bound.
    Exact,
    /// Relaxed problem solved by tabu search: not guaranteed to bound.
    Heuristic,
    /// No relaxation was solved.
    None,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Exact => "exact",
            BoundKind::Heuristic => "heuristic",
            BoundKind::None => "none",
        }
    }
}

/// Outcome of one cost cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRecord {
    pub index: usize,
    pub epsilon: f64,
    pub lower_bound: Option<f64>,
    /// Lowest uncovered count archived under the cap after this round.
    pub upper_bound: u32,
    pub bound_kind: BoundKind,
    /// Multipliers at which `lower_bound` was attained.
    pub multipliers: Option<Multipliers>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub eps_index: usize,
    pub epsilon: f64,
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub subgradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub algorithm: Algorithm,
    pub frontier: ParetoArchive,
    pub epsilons: Vec<EpsilonRecord>,
    pub trace: Vec<TraceRow>,
    pub config: SolverConfig,
    pub epsilon0: f64,
    pub delta_c: f64,
    pub delta_eps: f64,
    pub subarea_count: usize,
    pub wall_time_s: f64,
}

/// Next cost cap: `min(min harvested cost, ε) − Δc`, or `ε − Δc` when
/// nothing was harvested.
pub fn update_epsilon(current: f64, harvested_costs: impl IntoIterator<Item = f64>, delta_c: f64) -> f64 {
    harvested_costs.into_iter().fold(current, f64::min) - delta_c
}

fn resolve(scn: &Scenario, config: &SolverConfig) -> (f64, f64, f64) {
    let inst = scn.instance();
    let min_pos = |it: &mut dyn Iterator<Item = f64>| it.filter(|c| *c > 0.0).fold(f64::INFINITY, f64::min);
    let min_site = min_pos(&mut inst.sc_sites.iter().chain(&inst.ban_sites).map(|s| s.cost));
    let min_sc = min_pos(&mut inst.sc_sites.iter().map(|s| s.cost));
    let delta_c = config.delta_c.unwrap_or(if min_site.is_finite() { min_site } else { 1.0 });
    let delta_eps = config.delta_eps.unwrap_or(if min_sc.is_finite() { 2.0 * min_sc } else { 2.0 * delta_c });
    (inst.total_cost(), delta_c, delta_eps)
}

fn exact_guard_ok(scn: &Scenario, guard: u64) -> bool {
    scn.n_stations() < 64 && (1u128 << scn.n_stations()) <= guard as u128
}

/// Run the adaptive ε-constraint method on `instance`.
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let scn = Scenario::new(instance.clone())?;
    solve_scenario(&scn, config)
}

pub fn solve_scenario(scn: &Scenario, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let clock = Instant::now();
    let (epsilon0, delta_c, delta_eps) = resolve(scn, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = FeasibleCache::new(CACHE_LIMIT);
    let exact = exact_guard_ok(scn, config.exact_bound_guard);

    let mut frontier = ParetoArchive::new();
    let empty = Deployment::empty(scn);
    frontier.insert(empty.objective(scn), empty);

    let mut lg = LagrangeState::new(scn, config.step_scale0, config.halving_patience);
    let mut epsilons = Vec::new();
    let mut trace = Vec::new();
    let mut eps = epsilon0;
    loop {
        let t = epsilons.len();
        if !config.warm_start {
            lg = LagrangeState::new(scn, config.step_scale0, config.halving_patience);
        }
        lg.reset_bounds();
        let mut harvested = ParetoArchive::new();
        let mut best_bound: Option<(f64, Multipliers)> = None;

        for l in 0..config.n_max_lagrange {
            let incumbent = frontier.best_under(eps).expect("the empty deployment is always archived");
            let start = if config.warm_start { incumbent.deployment.selection() } else { Selection::empty(scn) };
            let mult = lg.multipliers.clone();
            let (relaxed, lower) = if exact {
                let (v, sel) = exact_relaxed_min(scn, &mult, eps, config.exact_bound_guard as u128)?;
                let (dep, _) = relaxed_solution(scn, &sel, &mult).expect("enumeration keeps SCBSs backhauled");
                (dep, v)
            } else {
                let out = solve_relaxed(scn, &mult, eps, start, &config.tabu, &mut rng)?;
                (out.deployment, out.value)
            };
            if best_bound.as_ref().is_none_or(|(b, _)| lower > *b) {
                best_bound = Some((lower, mult.clone()));
            }

            let repaired = repair(&relaxed, scn, &mult, eps);
            let pe = two_level_search(scn, &repaired, eps, delta_eps, &config.two_level, &mut cache, &mut rng)?;
            for e in pe.entries() {
                frontier.insert(e.objective, e.deployment.clone());
            }
            harvested.merge(pe);

            let upper = frontier.best_under(eps).expect("archived").objective.uncovered as f64;
            let row = lg.subgradient_update(&relaxed, lower, upper, scn);
            trace.push(TraceRow {
                eps_index: t,
                epsilon: eps,
                iteration: l,
                lower_bound: row.lower_bound,
                upper_bound: row.upper_bound,
                subgradient_norm: row.subgradient_norm,
            });
        }

        let upper_bound = frontier.best_under(eps).expect("archived").objective.uncovered;
        let (lower_bound, multipliers) = match best_bound {
            Some((b, m)) => (Some(b), Some(m)),
            None => (None, None),
        };
        let bound_kind = match (lower_bound, exact) {
            (None, _) => BoundKind::None,
            (Some(_), true) => BoundKind::Exact,
            (Some(_), false) => BoundKind::Heuristic,
        };
        epsilons.push(EpsilonRecord { index: t, epsilon: eps, lower_bound, upper_bound, bound_kind, multipliers });

        eps = update_epsilon(eps, harvested.entries().iter().map(|e| e.objective.cost), delta_c);
        if eps <= 0.0 {
            break;
        }
    }

    Ok(SolverReport {
        algorithm: Algorithm::Proposed,
        frontier,
        epsilons,
        trace,
        config: config.clone(),
        epsilon0,
        delta_c,
        delta_eps,
        subarea_count: scn.subarea_count(),
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}

/// Comparator: the plain ε-constraint method with one single-level tabu
/// search per cap (minimizing the repaired uncovered count, cheaper first
/// on ties) started from the empty deployment; each cap contributes its
/// best point and the next cap sits `Δc` below that point's cost.
pub fn solve_single_tabu(instance: &Instance, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let scn = Scenario::new(instance.clone())?;
    solve_single_tabu_scenario(&scn, config)
}

pub fn solve_single_tabu_scenario(scn: &Scenario, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let clock = Instant::now();
    let (epsilon0, delta_c, delta_eps) = resolve(scn, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = FeasibleCache::new(CACHE_LIMIT);
    let tie = 0.5 / (epsilon0 + 1.0);

    let mut frontier = ParetoArchive::new();
    let empty = Deployment::empty(scn);
    frontier.insert(empty.objective(scn), empty);
    let mut epsilons = Vec::new();
    let mut eps = epsilon0;
    loop {
        let mut eval = |sel: &Selection| {
            let (_, o) = cache.get(scn, sel);
            Some(o.uncovered as f64 + o.cost * tie)
        };
        let out = run_tabu(scn, Selection::empty(scn), &mut eval, eps, &config.tabu, &mut rng)?;
        let best = complete(scn, &out.best);
        let obj = best.objective(scn);
        frontier.insert(obj, best);
        epsilons.push(EpsilonRecord {
            index: epsilons.len(),
            epsilon: eps,
            lower_bound: None,
            upper_bound: frontier.best_under(eps).expect("archived").objective.uncovered,
            bound_kind: BoundKind::None,
            multipliers: None,
        });
        eps = update_epsilon(eps, [obj.cost], delta_c);
        if eps <= 0.0 {
            break;
        }
    }

    Ok(SolverReport {
        algorithm: Algorithm::SingleTabu,
        frontier,
        epsilons,
        trace: Vec::new(),
        config: config.clone(),
        epsilon0,
        delta_c,
        delta_eps,
        subarea_count: scn.subarea_count(),
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, AreaSpec, ParamBundle};
    use crate::model::{check_feasible, ObjectiveVector};

    fn inst(n_sc: usize, n_ban: usize, seed: u64) -> Instance {
        generate_instance(AreaSpec::new(40.0, 40.0, 10.0).unwrap(), n_sc, n_ban, seed, &ParamBundle::default()).unwrap()
    }

    #[test]
    fn epsilon_update_rule() {
        assert_eq!(update_epsilon(30.0, [23.0, 27.0], 1.0), 22.0);
        assert_eq!(update_epsilon(30.0, [30.0], 1.0), 29.0);
        assert_eq!(update_epsilon(5.0, [], 1.0), 4.0);
    }

    #[test]
    fn zero_site_instance() {
        let r = solve(&inst(0, 0, 1), &SolverConfig::default()).unwrap();
        assert_eq!(r.frontier.objectives(), vec![ObjectiveVector { cost: 0.0, uncovered: 16 }]);
        assert_eq!(r.epsilons.len(), 1);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let c = SolverConfig { delta_c: Some(0.0), ..SolverConfig::default() };
        assert!(matches!(solve(&inst(2, 1, 1), &c), Err(Error::Config(_))));
        assert!(SolverConfig::from_json(r#"{"n_max_lagrange": 3, "bogus": 1}"#).is_err());
        assert_eq!(SolverConfig::from_json("{}").unwrap(), SolverConfig::default());
    }

    #[test]
    fn frontier_is_feasible_and_caps_decrease() {
        let i = inst(8, 3, 4);
        let r = solve(&i, &SolverConfig::default()).unwrap();
        let scn = Scenario::new(i).unwrap();
        for e in r.frontier.entries() {
            assert!(check_feasible(&e.deployment, &scn, None).is_feasible());
        }
        for w in r.epsilons.windows(2) {
            assert!(w[1].epsilon < w[0].epsilon);
        }
        assert!(r.epsilons.iter().all(|e| e.bound_kind == BoundKind::Exact));
        for e in &r.epsilons {
            assert!(e.lower_bound.unwrap() <= e.upper_bound as f64 + 1e-9);
        }
    }

    #[test]
    fn same_seed_same_frontier() {
        let i = inst(8, 3, 6);
        let c = SolverConfig { seed: 9, ..SolverConfig::default() };
        let a = solve(&i, &c).unwrap();
        let b = solve(&i, &c).unwrap();
        assert_eq!(a.frontier, b.frontier);
        assert_eq!(a.epsilons, b.epsilons);
    }

    #[test]
    fn baseline_runs() {
        let r = solve_single_tabu(&inst(8, 3, 4), &SolverConfig::default()).unwrap();
        assert!(r.frontier.len() >= 2);
        assert_eq!(r.algorithm, Algorithm::SingleTabu);
    }
}
