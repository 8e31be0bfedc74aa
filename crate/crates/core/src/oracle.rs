//! Exhaustive ground truth for small instances: the exact frontier, exact
//! cost-capped optima and exact relaxed minima.
//!
//! Everything here is computed from the instance geometry and link table
//! directly, without the solver's scenario tables, coverage heuristics or
//! repair, so it can check them.

use crate::backhaul::build_links;
use crate::error::{Error, Result};
use crate::instance::{subarea_centers, Instance};
use crate::lagrangian::Multipliers;
use crate::model::{check_feasible, Deployment, ObjectiveVector, Scenario, Station, COST_TOL};
use crate::pareto::ParetoArchive;

/// Budget per open SCBS and the (SCBS, BAN) backhaul pairs realizing it.
type BudgetPlan = (Vec<u32>, Vec<(usize, usize)>);

/// Default bound on the number of site subsets the oracle will enumerate.
pub const DEFAULT_GUARD: u128 = 1 << 20;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub frontier: ParetoArchive,
    /// Site subsets examined.
    pub examined: u64,
}

impl OracleResult {
    /// Exact optimum of the cost-capped problem: fewest uncovered subareas
    /// with cost at most `eps`.
    pub fn optimum_under(&self, eps: f64) -> Option<ObjectiveVector> {
        self.frontier.best_under(eps).map(|e| e.objective)
    }
}

/// Plain Edmonds–Karp max-flow on an adjacency-list graph.
struct Flow {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl Flow {
    fn new(n: usize) -> Self {
        Flow { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn edge(&mut self, a: usize, b: usize, c: i64) -> usize {
        let e = self.to.len();
        self.head[a].push(e);
        self.to.push(b);
        self.cap.push(c);
        self.head[b].push(e + 1);
        self.to.push(a);
        self.cap.push(0);
        e
    }

    fn run(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        loop {
            let mut prev = vec![usize::MAX; self.head.len()];
            let mut queue = std::collections::VecDeque::from([s]);
            let mut seen = vec![false; self.head.len()];
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                for &e in &self.head[u] {
                    let v = self.to[e];
                    if !seen[v] && self.cap[e] > 0 {
                        seen[v] = true;
                        prev[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut push = i64::MAX;
            let mut v = t;
            while v != s {
                let e = prev[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            total += push;
        }
    }
}

struct Tables {
    n_sc: usize,
    n_ban: usize,
    s: usize,
    nb: usize,
    /// Per station (SCBSs then BANs): subareas within access range.
    reach: Vec<Vec<usize>>,
    /// Per SCBS: `(BAN, n_ki)` of every link.
    links: Vec<Vec<(usize, u32)>>,
    costs: Vec<f64>,
}

impl Tables {
    fn new(instance: &Instance) -> Result<Self> {
        instance.validate()?;
        let lt = build_links(instance);
        let centers = subarea_centers(&instance.area);
        let n_sc = instance.sc_sites.len();
        let mut reach = Vec::new();
        for (n, site) in instance.sc_sites.iter().chain(&instance.ban_sites).enumerate() {
            let r = if n < n_sc { lt.sc_access_radius[n] } else { lt.ban_access_radius[n - n_sc] };
            reach.push((0..centers.len()).filter(|&j| site.distance_to(centers[j].0, centers[j].1) <= r).collect());
        }
        let mut links = vec![Vec::new(); n_sc];
        for l in &lt.links {
            links[l.sc].push((l.ban, l.n_ki));
        }
        Ok(Tables {
            n_sc,
            n_ban: instance.ban_sites.len(),
            s: centers.len(),
            nb: instance.nb_max as usize,
            reach,
            links,
            costs: instance.sc_sites.iter().chain(&instance.ban_sites).map(|s| s.cost).collect(),
        })
    }

    fn stations(&self) -> usize {
        self.n_sc + self.n_ban
    }

    fn guard(&self, guard: u128) -> Result<()> {
        let n = self.stations();
        let required = if n >= 127 { u128::MAX } else { 1u128 << n };
        if required > guard || n > 63 {
            return Err(Error::GuardExceeded { required, guard });
        }
        Ok(())
    }

    fn cost(&self, mask: u64) -> f64 {
        (0..self.stations()).filter(|&s| mask >> s & 1 == 1).map(|s| self.costs[s]).fold(0.0, |a, c| a + c)
    }

    fn open(&self, mask: u64, s: usize) -> bool {
        mask >> s & 1 == 1
    }

    fn open_links(&self, mask: u64, i: usize) -> Vec<(usize, u32)> {
        self.links[i].iter().copied().filter(|&(k, _)| self.open(mask, self.n_sc + k)).collect()
    }

    /// SCBS→BAN assignment giving every open SCBS `i` a link with
    /// `n_ki ≥ need[i]`, within the fan-out limit.
    fn assignment(&self, mask: u64, need: &[(usize, u32)]) -> Option<Vec<(usize, usize)>> {
        let n_sc = need.len();
        let (src, sink) = (n_sc + self.n_ban, n_sc + self.n_ban + 1);
        let mut g = Flow::new(n_sc + self.n_ban + 2);
        let mut arcs = Vec::new();
        for (a, &(i, b)) in need.iter().enumerate() {
            g.edge(src, a, 1);
            for (k, n) in self.open_links(mask, i) {
                if n >= b {
                    arcs.push((g.edge(a, n_sc + k, 1), i, k));
                }
            }
        }
        for k in 0..self.n_ban {
            g.edge(n_sc + k, sink, self.nb as i64);
        }
        if g.run(src, sink) < n_sc as i64 {
            return None;
        }
        Some(arcs.into_iter().filter(|&(e, _, _)| g.cap[e] == 0).map(|(_, i, k)| (i, k)).collect())
    }

    /// Maximum coverage with the given SCBS budgets and the coverage pairs
    /// realizing it.
    fn coverage(&self, mask: u64, budget: &[(usize, u32)]) -> (usize, Vec<(usize, Station)>) {
        let st: Vec<(usize, i64)> = budget
            .iter()
            .map(|&(i, b)| (i, b as i64))
            .chain((0..self.n_ban).filter(|&k| self.open(mask, self.n_sc + k)).map(|k| (self.n_sc + k, self.s as i64)))
            .collect();
        let (src, sink) = (st.len() + self.s, st.len() + self.s + 1);
        let mut g = Flow::new(st.len() + self.s + 2);
        let mut arcs = Vec::new();
        for (a, &(s, c)) in st.iter().enumerate() {
            g.edge(src, a, c);
            for &j in &self.reach[s] {
                arcs.push((g.edge(a, st.len() + j, 1), s, j));
            }
        }
        for j in 0..self.s {
            g.edge(st.len() + j, sink, 1);
        }
        let covered = g.run(src, sink) as usize;
        let mut pairs: Vec<(usize, Station)> = arcs
            .into_iter()
            .filter(|&(e, _, _)| g.cap[e] == 0)
            .map(|(_, s, j)| (j, if s < self.n_sc { Station::Sc(s) } else { Station::Ban(s - self.n_sc) }))
            .collect();
        pairs.sort_unstable();
        (covered, pairs)
    }

    /// Best deployment for the open set `mask`, or `None` when some open
    /// SCBS cannot be backhauled.
    fn best_for(&self, mask: u64) -> Option<(usize, Deployment)> {
        let open_sc: Vec<usize> = (0..self.n_sc).filter(|&i| self.open(mask, i)).collect();
        let mut options: Vec<Vec<u32>> = Vec::new();
        for &i in &open_sc {
            let mut v: Vec<u32> = self.open_links(mask, i).iter().map(|&(_, n)| n).collect();
            if v.is_empty() {
                return None;
            }
            v.sort_unstable_by(|a, b| b.cmp(a));
            v.dedup();
            options.push(v);
        }
        // every budget vector with an assignment, keeping only maximal ones
        let mut feasible: Vec<BudgetPlan> = Vec::new();
        let mut idx = vec![0usize; open_sc.len()];
        loop {
            let b: Vec<u32> = idx.iter().enumerate().map(|(p, &q)| options[p][q]).collect();
            if !feasible.iter().any(|(f, _)| f.iter().zip(&b).all(|(x, y)| x >= y)) {
                let need: Vec<(usize, u32)> = open_sc.iter().copied().zip(b.iter().copied()).collect();
                if let Some(a) = self.assignment(mask, &need) {
                    feasible.push((b, a));
                }
            }
            let mut p = 0;
            while p < idx.len() {
                idx[p] += 1;
                if idx[p] < options[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == idx.len() {
                break;
            }
        }
        let mut best: Option<(usize, Deployment)> = None;
        for (b, assign) in feasible {
            let budget: Vec<(usize, u32)> = open_sc.iter().copied().zip(b).collect();
            let (covered, pairs) = self.coverage(mask, &budget);
            if best.as_ref().is_none_or(|(c, _)| covered > *c) {
                let mut dep = Deployment {
                    y: (0..self.n_sc).map(|i| self.open(mask, i)).collect(),
                    z: (0..self.n_ban).map(|k| self.open(mask, self.n_sc + k)).collect(),
                    sc_to_ban: vec![None; self.n_sc],
                    coverage: pairs,
                };
                for (i, k) in assign {
                    dep.sc_to_ban[i] = Some(k);
                }
                best = Some((covered, dep));
            }
        }
        best
    }
}

/// Exact frontier by enumerating every subset of sites. Refuses when the
/// instance has more than `log2(guard)` sites.
pub fn enumerate_frontier(instance: &Instance, guard: u128) -> Result<OracleResult> {
    let tb = Tables::new(instance)?;
    tb.guard(guard)?;
    let scn = Scenario::new(instance.clone())?;
    let mut frontier = ParetoArchive::new();
    let mut examined = 0u64;
    for mask in 0..(1u64 << tb.stations()) {
        examined += 1;
        let cost = tb.cost(mask);
        let Some((covered, dep)) = tb.best_for(mask) else { continue };
        let obj = ObjectiveVector { cost, uncovered: (tb.s - covered) as u32 };
        if frontier.accepts(obj) {
            let f = check_feasible(&dep, &scn, None);
            if !f.is_feasible() {
                return Err(Error::Infeasible(format!("oracle built an infeasible deployment: {:?}", f.violations)));
            }
            frontier.insert(obj, dep);
        }
    }
    Ok(OracleResult { frontier, examined })
}

/// Exact minimum of the relaxed problem under `cost_cap` and the open-site
/// mask attaining it (bit `s` for station `s`: SCBSs, then BANs).
pub fn exact_relaxed_optimum(instance: &Instance, mult: &Multipliers, cost_cap: f64, guard: u128) -> Result<(f64, u64)> {
    let tb = Tables::new(instance)?;
    tb.guard(guard)?;
    if mult.lambda1.len() != tb.n_ban || mult.lambda2.len() != tb.n_sc {
        return Err(Error::SizeMismatch("multiplier vectors do not match the instance".into()));
    }
    let constant = tb.s as f64 - mult.lambda1.iter().sum::<f64>() * tb.nb as f64;
    let mut best: Option<(f64, u64)> = None;
    'mask: for mask in 0..(1u64 << tb.stations()) {
        if tb.cost(mask) > cost_cap + COST_TOL {
            continue;
        }
        let mut v = constant;
        for i in (0..tb.n_sc).filter(|&i| tb.open(mask, i)) {
            let gain = tb
                .open_links(mask, i)
                .iter()
                .map(|&(k, n)| mult.lambda2[i] * n as f64 - mult.lambda1[k])
                .fold(f64::NEG_INFINITY, f64::max);
            if gain == f64::NEG_INFINITY {
                continue 'mask;
            }
            v -= gain;
        }
        let mut w = vec![0.0f64; tb.s];
        for s in (0..tb.stations()).filter(|&s| tb.open(mask, s)) {
            let ws = if s < tb.n_sc { 1.0 - mult.lambda2[s] } else { 1.0 };
            for &j in &tb.reach[s] {
                w[j] = w[j].max(ws);
            }
        }
        v -= w.iter().sum::<f64>();
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, mask));
        }
    }
    Ok(best.expect("the empty subset is always admissible"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, AreaSpec, CapacityOverride, ParamBundle};

    fn inst(n_sc: usize, n_ban: usize, seed: u64) -> Instance {
        generate_instance(AreaSpec::new(40.0, 40.0, 10.0).unwrap(), n_sc, n_ban, seed, &ParamBundle::default()).unwrap()
    }

    #[test]
    fn counts_subsets() {
        let r = enumerate_frontier(&inst(2, 1, 3), DEFAULT_GUARD).unwrap();
        assert_eq!(r.examined, 8);
    }

    #[test]
    fn empty_instance() {
        let r = enumerate_frontier(&inst(0, 0, 3), DEFAULT_GUARD).unwrap();
        assert_eq!(r.frontier.objectives(), vec![ObjectiveVector { cost: 0.0, uncovered: 16 }]);
        let m = Multipliers { lambda1: vec![], lambda2: vec![] };
        assert_eq!(exact_relaxed_optimum(&inst(0, 0, 3), &m, 0.0, DEFAULT_GUARD).unwrap().0, 16.0);
    }

    #[test]
    fn guard_refusal_reports_size() {
        match enumerate_frontier(&inst(8, 3, 3), 1 << 10) {
            Err(Error::GuardExceeded { required, guard }) => {
                assert_eq!(required, 1 << 11);
                assert_eq!(guard, 1 << 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flow_respects_budgets() {
        let mut i = inst(3, 1, 5);
        i.users.density_per_m2 = 0.008;
        for sc in &i.sc_sites.clone() {
            i.capacity_overrides.push(CapacityOverride { ban_id: i.ban_sites[0].id, sc_id: sc.id, capacity_bps: 3e8 });
        }
        let r = enumerate_frontier(&i, DEFAULT_GUARD).unwrap();
        let scn = Scenario::new(i).unwrap();
        for e in r.frontier.entries() {
            for s in 0..3 {
                assert!(e.deployment.covered_by(Station::Sc(s)).count() <= 1);
            }
            assert!(check_feasible(&e.deployment, &scn, None).is_feasible());
        }
    }

    #[test]
    fn zero_multipliers_relaxation_bounds_the_capped_optimum() {
        let i = inst(6, 2, 8);
        let r = enumerate_frontier(&i, DEFAULT_GUARD).unwrap();
        let zero = Multipliers { lambda1: vec![0.0; 2], lambda2: vec![0.0; 6] };
        for cap in [0.0, 5.0, 12.0, 30.0] {
            let (v, _) = exact_relaxed_optimum(&i, &zero, cap, DEFAULT_GUARD).unwrap();
            assert!(v <= r.optimum_under(cap).unwrap().uncovered as f64 + 1e-9);
        }
    }
}
