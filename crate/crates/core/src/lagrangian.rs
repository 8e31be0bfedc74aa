//! Lagrangian relaxation of the cost-capped coverage problem.
//!
//! The BAN fan-out limit and the per-SCBS coverage budget are moved into the
//! objective with multipliers `λ1` (per BAN) and `λ2` (per SCBS):
//!
//! ```text
//! V = S − Σ_i m_i y_i − Σ_k n_k z_k − Σ_k λ1_k N_b
//! m_i = Σ_j (1 − λ2_i) x_ij − Σ_k (λ1_k − λ2_i N_ki) x_ki
//! n_k = Σ_j x_kj
//! ```
//!
//! For fixed open sites the relaxed problem separates: each subarea goes to
//! the in-range open station of largest positive weight (1 for a BAN,
//! `1 − λ2_i` for an SCBS) and each open SCBS to the linked open BAN
//! minimizing `λ1_k − λ2_i N_ki`. [`relaxed_solution`] is therefore exact for
//! a given selection; only the search over selections is heuristic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_feasible, Constraint, CoverState, Deployment, ObjectiveVector, Scenario, Selection, Station, COST_TOL, NONE,
};
use crate::tabu::{run_tabu, TabuLimits};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    /// Per BAN candidate, for the fan-out limit.
    pub lambda1: Vec<f64>,
    /// Per SCBS candidate, for the coverage budget.
    pub lambda2: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(scn: &Scenario) -> Self {
        Multipliers { lambda1: vec![0.0; scn.n_ban()], lambda2: vec![0.0; scn.n_sc()] }
    }

    pub fn validate(&self, scn: &Scenario) -> Result<()> {
        if self.lambda1.len() != scn.n_ban() || self.lambda2.len() != scn.n_sc() {
            return Err(Error::SizeMismatch(format!(
                "multipliers sized {}/{} for {} BAN and {} SCBS candidates",
                self.lambda1.len(),
                self.lambda2.len(),
                scn.n_ban(),
                scn.n_sc()
            )));
        }
        if self.lambda1.iter().chain(&self.lambda2).any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Domain("multipliers must be finite and nonnegative".into()));
        }
        Ok(())
    }

    fn constant(&self, scn: &Scenario) -> f64 {
        scn.subarea_count() as f64 - self.lambda1.iter().sum::<f64>() * scn.nb_max() as f64
    }

    fn weight(&self, scn: &Scenario, station_idx: usize) -> f64 {
        if station_idx < scn.n_sc() {
            1.0 - self.lambda2[station_idx]
        } else {
            1.0
        }
    }

    /// Relaxed backhaul choice for SCBS `i`: `(BAN, λ2_i N_ki − λ1_k)` over
    /// open linked BANs, largest gain first, ties by BAN site id.
    fn best_link(&self, scn: &Scenario, z: &[bool], i: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &(k, n) in scn.sc_links(i) {
            if !z[k] {
                continue;
            }
            let gain = self.lambda2[i] * n as f64 - self.lambda1[k];
            let better = match best {
                None => true,
                Some((bk, bg)) => {
                    gain > bg || (gain == bg && scn.station_id(Station::Ban(k)) < scn.station_id(Station::Ban(bk)))
                }
            };
            if better {
                best = Some((k, gain));
            }
        }
        best
    }
}

fn is_open(sel: &Selection, n_sc: usize, s: usize) -> bool {
    if s < n_sc {
        sel.y[s]
    } else {
        sel.z[s - n_sc]
    }
}

/// Optimal relaxed objective for the open sites of `sel`; `None` when an
/// open SCBS has no open BAN in backhaul range.
pub fn relaxed_objective(scn: &Scenario, sel: &Selection, mult: &Multipliers) -> Option<f64> {
    let n_sc = scn.n_sc();
    let mut v = mult.constant(scn);
    for i in sel.open_sc() {
        v -= mult.best_link(scn, &sel.z, i)?.1;
    }
    for l in 0..scn.relevant_count() as u32 {
        let mut w = 0.0f64;
        for &s in scn.local_stations(l) {
            let s = s as usize;
            if is_open(sel, n_sc, s) {
                w = w.max(mult.weight(scn, s));
            }
        }
        v -= w;
    }
    Some(v)
}

/// The relaxed problem's optimal deployment for the open sites of `sel`
/// (coverage budgets and fan-out ignored) and its objective value.
pub fn relaxed_solution(scn: &Scenario, sel: &Selection, mult: &Multipliers) -> Option<(Deployment, f64)> {
    let n_sc = scn.n_sc();
    let mut dep = Deployment::empty(scn);
    dep.y.clone_from(&sel.y);
    dep.z.clone_from(&sel.z);
    let mut v = mult.constant(scn);
    for i in sel.open_sc() {
        let (k, gain) = mult.best_link(scn, &sel.z, i)?;
        dep.sc_to_ban[i] = Some(k);
        v -= gain;
    }
    let relevant = scn.relevant();
    for l in 0..scn.relevant_count() as u32 {
        let mut best: Option<(usize, f64)> = None;
        for &s in scn.local_stations(l) {
            let s = s as usize;
            if !is_open(sel, n_sc, s) {
                continue;
            }
            let w = mult.weight(scn, s);
            if w <= 0.0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bs, bw)) => w > bw || (w == bw && scn.site_id_of_index(s) < scn.site_id_of_index(bs)),
            };
            if better {
                best = Some((s, w));
            }
        }
        if let Some((s, w)) = best {
            dep.coverage.push((relevant[l as usize], scn.station(s)));
            v -= w;
        }
    }
    dep.coverage.sort_unstable();
    Some((dep, v))
}

/// `m_i` of every SCBS for the given deployment's `x`.
pub fn sc_coefficients(dep: &Deployment, scn: &Scenario, mult: &Multipliers) -> Vec<f64> {
    let mut m = vec![0.0; scn.n_sc()];
    for &(_, st) in &dep.coverage {
        if let Station::Sc(i) = st {
            m[i] += 1.0 - mult.lambda2[i];
        }
    }
    for (i, k) in dep.sc_to_ban.iter().enumerate() {
        if let Some(k) = *k {
            let n = scn.budget(k, i).unwrap_or(0) as f64;
            m[i] -= mult.lambda1[k] - mult.lambda2[i] * n;
        }
    }
    m
}

/// Relaxed objective of a complete deployment (its own `x`). Errors when a
/// constraint kept in the relaxation is violated.
pub fn relaxed_value(dep: &Deployment, scn: &Scenario, mult: &Multipliers, cost_cap: Option<f64>) -> Result<f64> {
    mult.validate(scn)?;
    let f = check_feasible(dep, scn, cost_cap);
    if let Some(v) = f.violations.iter().find(|v| !matches!(v.constraint, Constraint::FanOut | Constraint::Budget)) {
        return Err(Error::Infeasible(format!("{}: {}", v.constraint, v.message)));
    }
    let m = sc_coefficients(dep, scn, mult);
    let mut v = mult.constant(scn);
    for i in dep.selection().open_sc() {
        v -= m[i];
    }
    v -= dep.coverage.iter().filter(|(_, st)| matches!(st, Station::Ban(k) if dep.z[*k])).count() as f64;
    Ok(v)
}

/// Subgradient of the relaxed constraints at `dep`:
/// `g1_k = Σ_i x_ki − N_b`, `g2_i = Σ_j x_ij − Σ_k N_ki x_ki`.
pub fn subgradient(dep: &Deployment, scn: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let nb = scn.nb_max() as f64;
    let mut g1 = vec![-nb; scn.n_ban()];
    let mut g2 = vec![0.0; scn.n_sc()];
    for (i, k) in dep.sc_to_ban.iter().enumerate() {
        if let Some(k) = *k {
            g1[k] += 1.0;
            g2[i] -= scn.budget(k, i).unwrap_or(0) as f64;
        }
    }
    for &(_, st) in &dep.coverage {
        if let Station::Sc(i) = st {
            g2[i] += 1.0;
        }
    }
    (g1, g2)
}

/// Multipliers plus the bound bookkeeping of the subgradient method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagrangeState {
    pub multipliers: Multipliers,
    pub best_lower_bound: Option<f64>,
    pub best_upper_bound: Option<f64>,
    /// `α` in `θ = α (UB − LB) / ‖g‖²`.
    pub step_scale: f64,
    pub halving_patience: usize,
    /// Updates since the lower bound last improved.
    pub stall: usize,
}

/// One subgradient iteration as recorded in the bound trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub subgradient_norm: f64,
}

impl LagrangeState {
    pub fn new(scn: &Scenario, step_scale: f64, halving_patience: usize) -> Self {
        LagrangeState {
            multipliers: Multipliers::zeros(scn),
            best_lower_bound: None,
            best_upper_bound: None,
            step_scale,
            halving_patience,
            stall: 0,
        }
    }

    /// Forget the bounds (they belong to one cost cap).
    pub fn reset_bounds(&mut self) {
        self.best_lower_bound = None;
        self.best_upper_bound = None;
        self.stall = 0;
    }

    /// Record `lower` (relaxed value at the current multipliers, attained by
    /// `relaxed`) and `upper` (best feasible uncovered count), then take the
    /// projected step `λ ← max(0, λ + θ g)`.
    pub fn subgradient_update(&mut self, relaxed: &Deployment, lower: f64, upper: f64, scn: &Scenario) -> BoundRow {
        match self.best_lower_bound {
            Some(b) if lower <= b => {
                self.stall += 1;
                if self.stall >= self.halving_patience {
                    self.step_scale /= 2.0;
                    self.stall = 0;
                }
            }
            _ => {
                self.best_lower_bound = Some(lower);
                self.stall = 0;
            }
        }
        self.best_upper_bound = Some(self.best_upper_bound.map_or(upper, |u| u.min(upper)));

        let (g1, g2) = subgradient(relaxed, scn);
        let norm2: f64 = g1.iter().chain(&g2).map(|g| g * g).sum();
        let theta = if norm2 > 0.0 { (self.step_scale * (upper - lower) / norm2).max(0.0) } else { 0.0 };
        for (l, g) in self.multipliers.lambda1.iter_mut().zip(&g1) {
            *l = (*l + theta * g).max(0.0);
        }
        for (l, g) in self.multipliers.lambda2.iter_mut().zip(&g2) {
            *l = (*l + theta * g).max(0.0);
        }
        BoundRow { lower_bound: lower, upper_bound: upper, subgradient_norm: norm2.sqrt() }
    }
}

/// Best relaxed deployment found by tabu search from `start`.
#[derive(Debug, Clone)]
pub struct RelaxedOutcome {
    pub selection: Selection,
    pub deployment: Deployment,
    pub value: f64,
}

/// Minimize the relaxed objective over selections under `cost_cap` by tabu
/// search. The value is an upper bound on the relaxed minimum.
pub fn solve_relaxed<R: Rng + ?Sized>(
    scn: &Scenario,
    mult: &Multipliers,
    cost_cap: f64,
    start: Selection,
    limits: &TabuLimits,
    rng: &mut R,
) -> Result<RelaxedOutcome> {
    mult.validate(scn)?;
    let mut eval = |sel: &Selection| relaxed_objective(scn, sel, mult);
    let out = run_tabu(scn, start, &mut eval, cost_cap, limits, rng)?;
    let (deployment, value) =
        relaxed_solution(scn, &out.best, mult).ok_or_else(|| Error::Infeasible("tabu returned an orphan SCBS".into()))?;
    Ok(RelaxedOutcome { selection: out.best, deployment, value })
}

fn selection_of_mask(scn: &Scenario, mask: u64) -> Selection {
    let n_sc = scn.n_sc();
    let mut sel = Selection::empty(scn);
    for s in 0..scn.n_stations() {
        if mask >> s & 1 == 1 {
            if s < n_sc {
                sel.y[s] = true;
            } else {
                sel.z[s - n_sc] = true;
            }
        }
    }
    sel
}

/// Exact relaxed minimum under `cost_cap` by enumerating every selection.
/// Refuses when `2^sites` exceeds `guard`.
pub fn exact_relaxed_min(scn: &Scenario, mult: &Multipliers, cost_cap: f64, guard: u128) -> Result<(f64, Selection)> {
    mult.validate(scn)?;
    let n = scn.n_stations();
    let required = if n >= 127 { u128::MAX } else { 1u128 << n };
    if required > guard || n > 63 {
        return Err(Error::GuardExceeded { required, guard });
    }
    let mut best: Option<(f64, u64)> = None;
    for mask in 0..(1u64 << n) {
        let sel = selection_of_mask(scn, mask);
        if sel.cost(scn) > cost_cap + COST_TOL {
            continue;
        }
        if let Some(v) = relaxed_objective(scn, &sel, mult) {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, mask));
            }
        }
    }
    let (v, mask) = best.expect("the empty selection is always admissible");
    Ok((v, selection_of_mask(scn, mask)))
}

fn has_open_link(scn: &Scenario, z: &[bool], i: usize) -> bool {
    scn.sc_links(i).iter().any(|&(k, _)| z[k])
}

/// Turn a relaxed deployment into one satisfying every constraint:
///
/// 1. close SCBSs by ascending `m_i` until the open BANs have enough
///    backhaul slots, then reassign every SCBS (fewest open BANs in range
///    first) to the linked BAN with the largest `N_ki` and a free slot,
///    shifting earlier assignments along an augmenting path when needed;
///    an SCBS that still finds no slot is closed;
/// 2. trim each SCBS's coverage to its budget, dropping the farthest
///    subareas first;
/// 3. give each uncovered subarea to the least-loaded in-range station with
///    spare budget (ties by site id), then grow coverage along augmenting
///    paths.
///
/// Only closures happen, so the cost cap holds whenever it held for the
/// input; sites are also closed (SCBSs by `m_i`, then the costliest BANs)
/// while the input exceeds `cost_cap`.
pub fn repair(relaxed: &Deployment, scn: &Scenario, mult: &Multipliers, cost_cap: f64) -> Deployment {
    let m = sc_coefficients(relaxed, scn, mult);
    let mut owner = vec![NONE; scn.relevant_count()];
    for &(j, st) in &relaxed.coverage {
        owner[scn.local_of(j) as usize] = scn.station_index(st) as u32;
    }
    let (y, z, assign, st) = repair_core(scn, relaxed.y.clone(), relaxed.z.clone(), &owner, &m, cost_cap);
    Deployment { y, z, sc_to_ban: assign, coverage: st.into_pairs() }
}

/// [`repair`] on a relaxed coverage given as the owning station index per
/// local subarea.
fn repair_core<'s>(
    scn: &'s Scenario,
    mut y: Vec<bool>,
    mut z: Vec<bool>,
    relaxed_owner: &[u32],
    m: &[f64],
    cost_cap: f64,
) -> (Vec<bool>, Vec<bool>, Vec<Option<usize>>, CoverState<'s>) {
    let (n_sc, n_ban, nb) = (scn.n_sc(), scn.n_ban(), scn.nb_max());
    let sc_id = |i: usize| scn.station_id(Station::Sc(i));
    let ban_id = |k: usize| scn.station_id(Station::Ban(k));

    let by_m = |y: &[bool]| -> Option<usize> {
        (0..n_sc).filter(|&i| y[i]).min_by(|&a, &b| m[a].total_cmp(&m[b]).then(sc_id(a).cmp(&sc_id(b))))
    };
    let cost = |y: &[bool], z: &[bool]| {
        let sc = (0..n_sc).filter(|&i| y[i]).map(|i| scn.station_cost(Station::Sc(i)));
        let ban = (0..n_ban).filter(|&k| z[k]).map(|k| scn.station_cost(Station::Ban(k)));
        sc.chain(ban).fold(0.0, |a, c| a + c)
    };
    if cost_cap.is_finite() {
        while cost(&y, &z) > cost_cap + COST_TOL {
            if let Some(i) = by_m(&y) {
                y[i] = false;
            } else if let Some(k) = (0..n_ban).filter(|&k| z[k]).max_by(|&a, &b| {
                scn.station_cost(Station::Ban(a)).total_cmp(&scn.station_cost(Station::Ban(b))).then(ban_id(b).cmp(&ban_id(a)))
            }) {
                z[k] = false;
            } else {
                break;
            }
        }
    }

    // Step 1
    for (i, open) in y.iter_mut().enumerate() {
        if *open && !has_open_link(scn, &z, i) {
            *open = false;
        }
    }
    let slots = nb * z.iter().filter(|&&o| o).count();
    let mut open_sc = y.iter().filter(|&&o| o).count();
    while open_sc > slots {
        let i = by_m(&y).expect("open SCBS count exceeds slots");
        y[i] = false;
        open_sc -= 1;
    }
    let slack = |i: usize| scn.sc_links(i).iter().filter(|&&(k, _)| z[k]).count();
    let mut order: Vec<usize> = (0..n_sc).filter(|&i| y[i]).collect();
    order.sort_by_key(|&i| (slack(i), sc_id(i)));
    let mut assign: Vec<Option<usize>> = vec![None; n_sc];
    let mut fan: Vec<Vec<usize>> = vec![Vec::new(); n_ban];
    let mut visited = vec![false; n_ban];
    for i in order {
        if let Some(&(k, _)) = scn.sc_links_ranked(i).iter().find(|&&(k, _)| z[k] && fan[k].len() < nb) {
            fan[k].push(i);
            assign[i] = Some(k);
            continue;
        }
        visited.iter_mut().for_each(|v| *v = false);
        if !place(scn, &z, nb, i, &mut assign, &mut fan, &mut visited) {
            y[i] = false;
        }
    }

    // Step 2: reach lists run nearest first, so a prefix is the budget cut
    let mut st = CoverState::new(scn, &y, &z, &assign);
    for i in (0..n_sc).filter(|&i| y[i]) {
        let mut room = st.budget[i];
        for &l in scn.reach_local(i) {
            if room == 0 {
                break;
            }
            if relaxed_owner[l as usize] == i as u32 {
                st.claim(l, i);
                room -= 1;
            }
        }
    }
    for (l, &o) in relaxed_owner.iter().enumerate() {
        if o != NONE && o as usize >= n_sc && z[o as usize - n_sc] {
            st.claim(l as u32, o as usize);
        }
    }

    // Step 3
    for l in 0..scn.relevant_count() as u32 {
        if st.owner[l as usize] != NONE {
            continue;
        }
        let pick = scn
            .local_stations(l)
            .iter()
            .map(|&s| s as usize)
            .filter(|&s| st.budget[s] > 0 && st.has_slack(s))
            .min_by_key(|&s| (st.load[s], scn.site_id_of_index(s)));
        if let Some(s) = pick {
            st.claim(l, s);
        }
    }
    st.augment_all();
    (y, z, assign, st)
}

/// Find a slot for SCBS `i` by shifting assigned SCBSs between BANs.
fn place(
    scn: &Scenario,
    z: &[bool],
    nb: usize,
    i: usize,
    assign: &mut [Option<usize>],
    fan: &mut [Vec<usize>],
    visited: &mut [bool],
) -> bool {
    for &(k, _) in scn.sc_links(i) {
        if !z[k] || visited[k] {
            continue;
        }
        visited[k] = true;
        if fan[k].len() < nb {
            fan[k].push(i);
            assign[i] = Some(k);
            return true;
        }
        for pos in 0..fan[k].len() {
            let other = fan[k][pos];
            if place(scn, z, nb, other, assign, fan, visited) {
                fan[k][pos] = i;
                assign[i] = Some(k);
                return true;
            }
        }
    }
    false
}

/// Zero-multiplier relaxed coverage of `sel` with orphan SCBSs closed:
/// each relevant subarea goes to its open in-range station of lowest site
/// id. Returns the cleaned selection, the owners and each SCBS's `m_i`.
fn zero_relaxed(scn: &Scenario, sel: &Selection) -> (Selection, Vec<u32>, Vec<f64>) {
    let n_sc = scn.n_sc();
    let mut sel = sel.clone();
    for i in 0..n_sc {
        if sel.y[i] && !has_open_link(scn, &sel.z, i) {
            sel.y[i] = false;
        }
    }
    let mut owner = vec![NONE; scn.relevant_count()];
    let mut m = vec![0.0; n_sc];
    for (l, o) in owner.iter_mut().enumerate() {
        let best = scn
            .local_stations(l as u32)
            .iter()
            .map(|&s| s as usize)
            .find(|&s| is_open(&sel, n_sc, s));
        if let Some(s) = best {
            *o = s as u32;
            if s < n_sc {
                m[s] += 1.0;
            }
        }
    }
    (sel, owner, m)
}

/// Feasible deployment for the open sites of `sel`: the repair of the
/// zero-multiplier relaxed solution. Orphan SCBSs are closed first.
pub fn complete(scn: &Scenario, sel: &Selection) -> Deployment {
    let (sel, owner, m) = zero_relaxed(scn, sel);
    let (y, z, assign, st) = repair_core(scn, sel.y, sel.z, &owner, &m, f64::INFINITY);
    Deployment { y, z, sc_to_ban: assign, coverage: st.into_pairs() }
}

/// Selection and objectives of [`complete`] without materializing coverage.
pub fn complete_objective(scn: &Scenario, sel: &Selection) -> (Selection, ObjectiveVector) {
    let (sel, owner, m) = zero_relaxed(scn, sel);
    let (y, z, _, st) = repair_core(scn, sel.y, sel.z, &owner, &m, f64::INFINITY);
    let covered = st.covered();
    let sel = Selection { y, z };
    let obj = ObjectiveVector { cost: sel.cost(scn), uncovered: (scn.subarea_count() - covered) as u32 };
    (sel, obj)
}
