//! Nondominated archive and the two-level (BAN level, SCBS level) tabu
//! search that harvests cost/coverage trade-offs inside a cost window.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::{complete, complete_objective};
use crate::model::{check_feasible, Deployment, ObjectiveVector, Scenario, Selection, COST_TOL};
use crate::tabu::{default_tenure, neighborhood, Move, Scope};

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub objective: ObjectiveVector,
    pub deployment: Deployment,
}

/// Mutually nondominated points, cost strictly increasing and uncovered
/// count strictly decreasing along the list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.entries.iter().map(|e| e.objective).collect()
    }

    /// Whether `obj` would enter: no entry dominates or equals it.
    pub fn accepts(&self, obj: ObjectiveVector) -> bool {
        let pos = self.entries.partition_point(|e| e.objective.cost <= obj.cost);
        // entries[..pos] are the ones with cost ≤ obj.cost; the last has the
        // lowest uncovered count among them.
        pos == 0 || self.entries[pos - 1].objective.uncovered > obj.uncovered
    }

    /// Insert unless dominated or equal to an existing entry (the incumbent
    /// wins ties); entries the new point dominates are removed.
    pub fn insert(&mut self, objective: ObjectiveVector, deployment: Deployment) -> bool {
        if !self.accepts(objective) {
            return false;
        }
        let start = self.entries.partition_point(|e| e.objective.cost < objective.cost);
        let end = start + self.entries[start..].iter().take_while(|e| e.objective.uncovered >= objective.uncovered).count();
        self.entries.splice(start..end, [ArchiveEntry { objective, deployment }]);
        true
    }

    pub fn merge(&mut self, other: ParetoArchive) {
        for e in other.entries {
            self.insert(e.objective, e.deployment);
        }
    }

    /// Area dominated by the archive inside the box bounded by the reference
    /// point (cost `ref_cost`, uncovered `ref_uncovered`).
    pub fn hypervolume(&self, ref_cost: f64, ref_uncovered: f64) -> f64 {
        let pts: Vec<_> = self
            .entries
            .iter()
            .map(|e| e.objective)
            .filter(|o| o.cost <= ref_cost && (o.uncovered as f64) <= ref_uncovered)
            .collect();
        let mut hv = 0.0;
        for (n, o) in pts.iter().enumerate() {
            let next = pts.get(n + 1).map_or(ref_cost, |p| p.cost);
            hv += (next - o.cost) * (ref_uncovered - o.uncovered as f64);
        }
        hv
    }

    /// Lowest uncovered count among entries costing at most `cap`.
    pub fn best_under(&self, cap: f64) -> Option<&ArchiveEntry> {
        self.entries.iter().take_while(|e| e.objective.cost <= cap + COST_TOL).last()
    }
}

/// Objective of [`complete`] per selection, memoized. The cache only saves
/// time; it never changes results.
#[derive(Debug, Default)]
pub struct FeasibleCache {
    map: HashMap<Selection, (Selection, ObjectiveVector)>,
    limit: usize,
}

impl FeasibleCache {
    pub fn new(limit: usize) -> Self {
        FeasibleCache { map: HashMap::new(), limit }
    }

    /// Selection after repair and its objectives.
    pub fn get(&mut self, scn: &Scenario, sel: &Selection) -> (Selection, ObjectiveVector) {
        if let Some(v) = self.map.get(sel) {
            return v.clone();
        }
        let v = complete_objective(scn, sel);
        if self.map.len() >= self.limit {
            self.map.clear();
        }
        self.map.insert(sel.clone(), v.clone());
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoLevelLimits {
    pub n_t1: usize,
    pub n_t2: usize,
    pub n_swap: usize,
    /// `None` means `7 + ⌈sites/10⌉`.
    pub tenure: Option<usize>,
}

impl Default for TwoLevelLimits {
    fn default() -> Self {
        TwoLevelLimits { n_t1: 20, n_t2: 40, n_swap: 50, tenure: None }
    }
}

struct Level {
    expiry: Vec<usize>,
    t: usize,
    tenure: usize,
}

impl Level {
    fn is_tabu(&self, scn: &Scenario, mv: &Move) -> bool {
        mv.flipped().iter().flatten().any(|&s| self.expiry[scn.station_index(s)] > self.t)
    }

    fn record(&mut self, scn: &Scenario, mv: &Move) {
        for s in mv.flipped().iter().flatten() {
            self.expiry[scn.station_index(*s)] = self.t + self.tenure;
        }
    }
}

/// Lowest uncovered count (then cost) among every feasible point seen in
/// one search, whether or not it lies in the window.
struct Incumbent {
    uncovered: u32,
    cost: f64,
    selection: Selection,
}

impl Incumbent {
    fn offer(&mut self, obj: ObjectiveVector, sel: &Selection) {
        if (obj.uncovered, obj.cost) < (self.uncovered, self.cost) {
            *self = Incumbent { uncovered: obj.uncovered, cost: obj.cost, selection: sel.clone() };
        }
    }
}

/// Evaluate one neighborhood level and archive every candidate inside the
/// cost window. The next pivot is the lowest uncovered count (then cost,
/// then candidate order) among allowed window candidates; when there is
/// none, among allowed candidates no worse than `pivot_uncovered`. Allowed
/// means non-tabu or beating the best uncovered count seen so far.
#[allow(clippy::too_many_arguments)]
fn explore<R: Rng + ?Sized>(
    scn: &Scenario,
    pivot: &Selection,
    pivot_uncovered: u32,
    scope: Scope,
    cap: f64,
    window_low: f64,
    n_swap: usize,
    level: &mut Level,
    incumbent: &mut Incumbent,
    archive: &mut ParetoArchive,
    cache: &mut FeasibleCache,
    rng: &mut R,
) -> Option<(Selection, u32)> {
    level.t += 1;
    let cands = neighborhood(scn, pivot, cap, scope, n_swap, rng);
    // (in window, uncovered, cost, index)
    let mut pick: Option<(bool, u32, f64, usize, Selection)> = None;
    for (n, c) in cands.iter().enumerate() {
        let (repaired, obj) = cache.get(scn, &c.selection);
        let in_window = obj.cost >= window_low - COST_TOL && obj.cost <= cap + COST_TOL;
        if in_window && archive.accepts(obj) {
            archive.insert(obj, complete(scn, &c.selection));
        }
        let aspires = obj.uncovered < incumbent.uncovered;
        incumbent.offer(obj, &c.selection);
        if level.is_tabu(scn, &c.mv) && !aspires {
            continue;
        }
        if !in_window && obj.uncovered > pivot_uncovered {
            continue;
        }
        let better = match &pick {
            None => true,
            Some((w, u, cost, _, _)) => (!in_window, obj.uncovered, obj.cost) < (!*w, *u, *cost),
        };
        if better {
            pick = Some((in_window, obj.uncovered, obj.cost, n, repaired));
        }
    }
    let (_, u, _, n, sel) = pick?;
    level.record(scn, &cands[n].mv);
    Some((sel, u))
}

/// Hill-climb every window point within its own cost. Candidates are its
/// BAN-level and SCBS-level neighbors plus the SCBS-level neighbors of each
/// BAN-level neighbor; window candidates are archived and each newly
/// archived one is climbed from in turn. Ends when no candidate enters the
/// archive.
#[allow(clippy::too_many_arguments)]
fn polish<R: Rng + ?Sized>(
    scn: &Scenario,
    window_low: f64,
    n_swap: usize,
    incumbent: &mut Incumbent,
    archive: &mut ParetoArchive,
    cache: &mut FeasibleCache,
    rng: &mut R,
) {
    let mut queue: Vec<(Selection, ObjectiveVector)> =
        archive.entries().iter().rev().map(|e| (e.deployment.selection(), e.objective)).collect();
    while let Some((sel, obj)) = queue.pop() {
        let mut cands = neighborhood(scn, &sel, obj.cost, Scope::BAN, n_swap, rng);
        let relocated: Vec<Selection> = cands.iter().map(|c| cache.get(scn, &c.selection).0).collect();
        cands.extend(neighborhood(scn, &sel, obj.cost, Scope::SC, n_swap, rng));
        for r in &relocated {
            cands.extend(neighborhood(scn, r, obj.cost, Scope::SC, n_swap, rng));
        }
        for c in cands {
            let (repaired, o) = cache.get(scn, &c.selection);
            incumbent.offer(o, &c.selection);
            if o.cost < window_low - COST_TOL || !archive.accepts(o) {
                continue;
            }
            archive.insert(o, complete(scn, &c.selection));
            queue.push((repaired, o));
        }
    }
}

/// Two-level tabu search from a feasible `start` under cost cap `cap`.
///
/// The outer level flips BANs with the SCBS vector fixed; after each outer
/// move the inner level runs up to `n_t2` SCBS moves with the BAN vector
/// fixed, and its final pivot becomes the next outer pivot. Every candidate
/// is repaired to feasibility; those costing within `[cap − Δε, cap]` enter
/// the returned archive, which is then polished (skipped when `n_t1` is 0).
/// The incumbent (fewest uncovered, then cheapest, over
/// the start and every candidate) is added last, so a window holding only
/// dominated points collapses to that single point.
pub fn two_level_search<R: Rng + ?Sized>(
    scn: &Scenario,
    start: &Deployment,
    cap: f64,
    delta_eps: f64,
    limits: &TwoLevelLimits,
    cache: &mut FeasibleCache,
    rng: &mut R,
) -> Result<ParetoArchive> {
    let f = check_feasible(start, scn, Some(cap));
    if !f.is_feasible() {
        let v = &f.violations[0];
        return Err(Error::Infeasible(format!("start deployment violates {}: {}", v.constraint, v.message)));
    }
    let start_obj = start.objective(scn);
    let window_low = cap - delta_eps;
    let mut archive = ParetoArchive::new();
    if start_obj.cost >= window_low - COST_TOL {
        archive.insert(start_obj, start.clone());
    }

    let tenure = limits.tenure.unwrap_or_else(|| default_tenure(scn.n_stations()));
    // a level's tenure never reaches its own site count, so some move always stays open
    let level_tenure = |sites: usize| tenure.min((sites / 2).max(1));
    let mut outer = Level { expiry: vec![0; scn.n_stations()], t: 0, tenure: level_tenure(scn.n_ban()) };
    let mut inner = Level { expiry: vec![0; scn.n_stations()], t: 0, tenure: level_tenure(scn.n_sc()) };
    let mut incumbent = Incumbent { uncovered: start_obj.uncovered, cost: start_obj.cost, selection: start.selection() };
    let mut pivot = (start.selection(), start_obj.uncovered);

    for _ in 0..limits.n_t1 {
        let mut inner_pivot = explore(
            scn,
            &pivot.0,
            pivot.1,
            Scope::BAN,
            cap,
            window_low,
            limits.n_swap,
            &mut outer,
            &mut incumbent,
            &mut archive,
            cache,
            rng,
        )
        .unwrap_or_else(|| pivot.clone());
        for _ in 0..limits.n_t2 {
            match explore(
                scn,
                &inner_pivot.0,
                inner_pivot.1,
                Scope::SC,
                cap,
                window_low,
                limits.n_swap,
                &mut inner,
                &mut incumbent,
                &mut archive,
                cache,
                rng,
            ) {
                Some(next) => inner_pivot = next,
                None => continue,
            }
        }
        pivot = inner_pivot;
    }
    if limits.n_t1 > 0 {
        polish(scn, window_low, limits.n_swap, &mut incumbent, &mut archive, cache, rng);
    }
    // below the window the incumbent dominates every window point
    if incumbent.selection == start.selection() {
        archive.insert(start_obj, start.clone());
    } else {
        let dep = complete(scn, &incumbent.selection);
        archive.insert(dep.objective(scn), dep);
    }
    Ok(archive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, AreaSpec, ParamBundle};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ov(cost: f64, uncovered: u32) -> ObjectiveVector {
        ObjectiveVector { cost, uncovered }
    }

    fn scn(n_sc: usize, n_ban: usize, seed: u64) -> Scenario {
        let inst = generate_instance(AreaSpec::new(40.0, 40.0, 10.0).unwrap(), n_sc, n_ban, seed, &ParamBundle::default())
            .unwrap();
        Scenario::new(inst).unwrap()
    }

    fn dummy() -> Deployment {
        Deployment { y: vec![], z: vec![], sc_to_ban: vec![], coverage: vec![] }
    }

    #[test]
    fn dominated_insert_is_rejected() {
        let mut a = ParetoArchive::new();
        assert!(a.insert(ov(20.0, 50), dummy()));
        assert!(!a.insert(ov(21.0, 50), dummy()));
        assert!(!a.insert(ov(20.0, 50), dummy()));
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn incomparable_points_coexist() {
        let mut a = ParetoArchive::new();
        a.insert(ov(20.0, 50), dummy());
        assert!(a.insert(ov(10.0, 60), dummy()));
        assert_eq!(a.objectives(), vec![ov(10.0, 60), ov(20.0, 50)]);
    }

    #[test]
    fn dominating_insert_evicts() {
        let mut a = ParetoArchive::new();
        a.insert(ov(20.0, 50), dummy());
        a.insert(ov(30.0, 40), dummy());
        assert!(a.insert(ov(19.0, 40), dummy()));
        assert_eq!(a.objectives(), vec![ov(19.0, 40)]);
    }

    #[test]
    fn same_cost_lower_uncovered_replaces() {
        let mut a = ParetoArchive::new();
        a.insert(ov(5.0, 9), dummy());
        a.insert(ov(10.0, 7), dummy());
        assert!(a.insert(ov(10.0, 6), dummy()));
        assert_eq!(a.objectives(), vec![ov(5.0, 9), ov(10.0, 6)]);
    }

    #[test]
    fn hypervolume_of_a_staircase() {
        let mut a = ParetoArchive::new();
        a.insert(ov(0.0, 10), dummy());
        a.insert(ov(2.0, 4), dummy());
        // [0,2)×(10−10) + [2,5)×(10−4)
        assert_eq!(a.hypervolume(5.0, 10.0), 18.0);
        assert_eq!(ParetoArchive::new().hypervolume(5.0, 10.0), 0.0);
    }

    #[test]
    fn no_iterations_returns_start() {
        let s = scn(6, 2, 3);
        let start = complete(&s, &Selection { y: vec![true; 6], z: vec![true; 2] });
        let cap = start.selection().cost(&s);
        let limits = TwoLevelLimits { n_t1: 0, n_t2: 0, ..TwoLevelLimits::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = two_level_search(&s, &start, cap, 2.0, &limits, &mut FeasibleCache::new(1 << 16), &mut rng).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.entries()[0].deployment, start);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let s = scn(6, 2, 3);
        let mut start = Deployment::empty(&s);
        start.y[0] = true;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = two_level_search(&s, &start, 100.0, 2.0, &TwoLevelLimits::default(), &mut FeasibleCache::new(16), &mut rng);
        assert!(r.is_err());
    }

    #[test]
    fn harvest_stays_in_window_and_feasible() {
        let s = scn(8, 3, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = Deployment::empty(&s);
        let cap = 12.0;
        let a = two_level_search(&s, &start, cap, 2.0, &TwoLevelLimits::default(), &mut FeasibleCache::new(1 << 16), &mut rng)
            .unwrap();
        for e in a.entries() {
            assert!(check_feasible(&e.deployment, &s, Some(cap)).is_feasible());
            assert_eq!(e.deployment.objective(&s), e.objective);
        }
        let below: Vec<_> = a.entries().iter().filter(|e| e.objective.cost < cap - 2.0).collect();
        assert!(below.len() <= 1);
        if let Some(b) = below.first() {
            assert_eq!(a.len(), 1, "an incumbent below the window dominates the window");
            assert!(b.objective.uncovered <= a.entries()[0].objective.uncovered);
        }
        assert!(a.len() > 1);
    }
}
