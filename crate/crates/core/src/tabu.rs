//! Single-level tabu search over site open/close/swap moves.
//!
//! The search walks over [`Selection`]s that keep every open SCBS within
//! backhaul range of an open BAN and the total cost under a cap. The value
//! being minimized is supplied by an [`Evaluate`] implementation.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Scenario, Selection, Station, COST_TOL};

/// A single neighborhood move. Closing a BAN also closes every SCBS left
/// without an open BAN in backhaul range; those closures are not part of
/// the move's tabu attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Open(Station),
    Close(Station),
    Swap { close: Station, open: Station },
}

impl Move {
    /// Sites whose flag the move flips by choice.
    pub fn flipped(&self) -> [Option<Station>; 2] {
        match *self {
            Move::Open(s) | Move::Close(s) => [Some(s), None],
            Move::Swap { close, open } => [Some(close), Some(open)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub mv: Move,
    pub selection: Selection,
}

/// Which site kinds a neighborhood may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub sc: bool,
    pub ban: bool,
}

impl Scope {
    pub const ALL: Scope = Scope { sc: true, ban: true };
    pub const SC: Scope = Scope { sc: true, ban: false };
    pub const BAN: Scope = Scope { sc: false, ban: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabuLimits {
    pub n_max: usize,
    pub t_div: usize,
    pub n_div: usize,
    pub n_swap: usize,
    /// Iterations a flipped site stays tabu; `None` means `7 + ⌈sites/10⌉`.
    pub tenure: Option<usize>,
}

impl Default for TabuLimits {
    fn default() -> Self {
        TabuLimits { n_max: 500, t_div: 25, n_div: 2, n_swap: 50, tenure: None }
    }
}

/// Default tenure for an instance with `sites` candidate sites.
pub fn default_tenure(sites: usize) -> usize {
    7 + sites.div_ceil(10)
}

impl TabuLimits {
    pub fn tenure_for(&self, sites: usize) -> usize {
        self.tenure.unwrap_or_else(|| default_tenure(sites))
    }
}

/// The value being minimized. `None` marks a selection the objective
/// refuses (it is then left out of the neighborhood).
pub trait Evaluate {
    fn evaluate(&mut self, sel: &Selection) -> Option<f64>;
}

impl<F: FnMut(&Selection) -> Option<f64>> Evaluate for F {
    fn evaluate(&mut self, sel: &Selection) -> Option<f64> {
        self(sel)
    }
}

/// Open SCBSs all have an open BAN in backhaul range.
pub fn is_admissible(scn: &Scenario, sel: &Selection, cap: f64) -> bool {
    sel.y.len() == scn.n_sc()
        && sel.z.len() == scn.n_ban()
        && sel.backhaul_reachable(scn)
        && sel.cost(scn) <= cap + COST_TOL
}

fn has_open_link(scn: &Scenario, z: &[bool], sc: usize) -> bool {
    scn.sc_links(sc).iter().any(|&(k, _)| z[k])
}

fn close_orphans(scn: &Scenario, sel: &mut Selection) {
    for i in 0..scn.n_sc() {
        if sel.y[i] && !has_open_link(scn, &sel.z, i) {
            sel.y[i] = false;
        }
    }
}

/// Every admissible single open, single close and (sampled) same-kind swap
/// of `sel` within `scope`, in that order. Swaps beyond `n_swap` are sampled
/// uniformly and kept in enumeration order.
pub fn neighborhood<R: Rng + ?Sized>(
    scn: &Scenario,
    sel: &Selection,
    cap: f64,
    scope: Scope,
    n_swap: usize,
    rng: &mut R,
) -> Vec<Candidate> {
    let base_cost = sel.cost(scn);
    let fits = |extra: f64| base_cost + extra <= cap + COST_TOL;
    let mut out = Vec::new();
    let stations = |sc: bool| -> Vec<Station> {
        if sc {
            (0..scn.n_sc()).map(Station::Sc).collect()
        } else {
            (0..scn.n_ban()).map(Station::Ban).collect()
        }
    };
    let mut kinds = Vec::new();
    if scope.sc {
        kinds.push(stations(true));
    }
    if scope.ban {
        kinds.push(stations(false));
    }

    for list in &kinds {
        for &st in list {
            if sel.is_open(st) || !fits(scn.station_cost(st)) {
                continue;
            }
            if let Station::Sc(i) = st {
                if !has_open_link(scn, &sel.z, i) {
                    continue;
                }
            }
            let mut next = sel.clone();
            next.set(st, true);
            out.push(Candidate { mv: Move::Open(st), selection: next });
        }
    }
    for list in &kinds {
        for &st in list {
            if !sel.is_open(st) {
                continue;
            }
            let mut next = sel.clone();
            next.set(st, false);
            if matches!(st, Station::Ban(_)) {
                close_orphans(scn, &mut next);
            }
            out.push(Candidate { mv: Move::Close(st), selection: next });
        }
    }

    let mut swaps = Vec::new();
    for list in &kinds {
        for &close in list.iter().filter(|&&s| sel.is_open(s)) {
            for &open in list.iter().filter(|&&s| !sel.is_open(s)) {
                if !fits(scn.station_cost(open) - scn.station_cost(close)) {
                    continue;
                }
                if let Station::Sc(i) = open {
                    if !has_open_link(scn, &sel.z, i) {
                        continue;
                    }
                }
                swaps.push((close, open));
            }
        }
    }
    let picked: Vec<usize> = if swaps.len() > n_swap {
        let mut idx = sample(rng, swaps.len(), n_swap).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..swaps.len()).collect()
    };
    for p in picked {
        let (close, open) = swaps[p];
        let mut next = sel.clone();
        next.set(close, false);
        next.set(open, true);
        if matches!(close, Station::Ban(_)) {
            close_orphans(scn, &mut next);
        }
        out.push(Candidate { mv: Move::Swap { close, open }, selection: next });
    }
    out
}

/// Search state of one tabu run.
#[derive(Debug, Clone)]
pub struct TabuState {
    pub current: Selection,
    pub current_value: f64,
    pub best: Selection,
    pub best_value: f64,
    /// Per station index: first iteration at which flipping it is allowed.
    pub expiry: Vec<usize>,
    pub iteration: usize,
    /// Per station index: how often the site was opened.
    pub deploy_counts: Vec<u32>,
    pub stall: usize,
    pub tenure: usize,
    pub diversifications: usize,
}

impl TabuState {
    pub fn new(scn: &Scenario, initial: Selection, value: f64, tenure: usize) -> Self {
        let mut deploy_counts = vec![0; scn.n_stations()];
        for (s, c) in deploy_counts.iter_mut().enumerate() {
            *c = initial.is_open(scn.station(s)) as u32;
        }
        TabuState {
            current: initial.clone(),
            current_value: value,
            best: initial,
            best_value: value,
            expiry: vec![0; scn.n_stations()],
            iteration: 0,
            deploy_counts,
            stall: 0,
            tenure,
            diversifications: 0,
        }
    }

    pub fn is_tabu(&self, scn: &Scenario, mv: &Move) -> bool {
        mv.flipped().iter().flatten().any(|&s| self.expiry[scn.station_index(s)] > self.iteration)
    }

    fn advance(&mut self, scn: &Scenario, next: Selection, value: f64, mv: Option<Move>) {
        self.iteration += 1;
        if let Some(mv) = mv {
            for s in mv.flipped().iter().flatten() {
                self.expiry[scn.station_index(*s)] = self.iteration + self.tenure;
            }
        }
        for s in 0..scn.n_stations() {
            let st = scn.station(s);
            if next.is_open(st) && !self.current.is_open(st) {
                self.deploy_counts[s] += 1;
            }
        }
        self.current = next;
        self.current_value = value;
    }
}

/// Open up to `n_div` closed sites with the lowest deploy counts (ties by
/// site id) that keep `sel` admissible under `cap`. BANs are tried before
/// the SCBSs they would enable only through the count ordering.
pub fn diversify(scn: &Scenario, sel: &Selection, counts: &[u32], n_div: usize, cap: f64) -> Option<Selection> {
    let mut order: Vec<usize> = (0..scn.n_stations()).filter(|&s| !sel.is_open(scn.station(s))).collect();
    order.sort_by_key(|&s| (counts[s], scn.station_id(scn.station(s))));
    let mut next = sel.clone();
    let mut cost = sel.cost(scn);
    let mut opened = 0;
    for s in order {
        if opened == n_div {
            break;
        }
        let st = scn.station(s);
        let c = scn.station_cost(st);
        if cost + c > cap + COST_TOL {
            continue;
        }
        if let Station::Sc(i) = st {
            if !has_open_link(scn, &next.z, i) {
                continue;
            }
        }
        next.set(st, true);
        cost += c;
        opened += 1;
    }
    (opened > 0).then_some(next)
}

/// One iteration: best candidate by value (ties by candidate order); accept
/// it when it beats the best so far even if tabu, else take the best
/// non-tabu candidate; diversify after `t_div` stalled iterations or when
/// every candidate is tabu.
pub fn tabu_step<E: Evaluate + ?Sized, R: Rng + ?Sized>(
    state: &mut TabuState,
    scn: &Scenario,
    eval: &mut E,
    cap: f64,
    limits: &TabuLimits,
    rng: &mut R,
) {
    let cands = neighborhood(scn, &state.current, cap, Scope::ALL, limits.n_swap, rng);
    let scored: Vec<(usize, f64)> =
        cands.iter().enumerate().filter_map(|(n, c)| eval.evaluate(&c.selection).map(|v| (n, v))).collect();
    let argmin = |it: &mut dyn Iterator<Item = &(usize, f64)>| {
        it.fold(None, |acc: Option<(usize, f64)>, &(n, v)| match acc {
            Some((_, bv)) if bv <= v => acc,
            _ => Some((n, v)),
        })
    };
    let overall = argmin(&mut scored.iter());
    let non_tabu = argmin(&mut scored.iter().filter(|(n, _)| !state.is_tabu(scn, &cands[*n].mv)));

    let mut chosen = None;
    if let Some((n, v)) = overall {
        if v < state.best_value {
            chosen = Some((n, v));
            state.best = cands[n].selection.clone();
            state.best_value = v;
            state.stall = 0;
        }
    }
    if chosen.is_none() {
        state.stall += 1;
        chosen = non_tabu;
    }

    if state.stall >= limits.t_div || chosen.is_none() {
        let from = &state.current;
        if let Some(div) = diversify(scn, from, &state.deploy_counts, limits.n_div, cap) {
            if let Some(v) = eval.evaluate(&div) {
                state.diversifications += 1;
                state.stall = 0;
                if v < state.best_value {
                    state.best = div.clone();
                    state.best_value = v;
                }
                state.advance(scn, div, v, None);
                return;
            }
        }
    }
    match chosen.or(overall) {
        Some((n, v)) => {
            let c = &cands[n];
            state.advance(scn, c.selection.clone(), v, Some(c.mv));
        }
        None => state.iteration += 1,
    }
}

#[derive(Debug, Clone)]
pub struct TabuOutcome {
    pub best: Selection,
    pub best_value: f64,
    pub iterations: usize,
    pub diversifications: usize,
}

/// Run [`tabu_step`] `limits.n_max` times from `initial`.
pub fn run_tabu<E: Evaluate + ?Sized, R: Rng + ?Sized>(
    scn: &Scenario,
    initial: Selection,
    eval: &mut E,
    cap: f64,
    limits: &TabuLimits,
    rng: &mut R,
) -> Result<TabuOutcome> {
    if !is_admissible(scn, &initial, cap) {
        return Err(Error::Infeasible("initial selection violates backhaul reachability or the cost cap".into()));
    }
    let v0 = eval
        .evaluate(&initial)
        .ok_or_else(|| Error::Infeasible("objective rejects the initial selection".into()))?;
    let mut state = TabuState::new(scn, initial, v0, limits.tenure_for(scn.n_stations()));
    for _ in 0..limits.n_max {
        tabu_step(&mut state, scn, eval, cap, limits, rng);
    }
    Ok(TabuOutcome {
        best: state.best,
        best_value: state.best_value,
        iterations: state.iteration,
        diversifications: state.diversifications,
    })
}
