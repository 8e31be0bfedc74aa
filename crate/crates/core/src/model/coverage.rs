use std::collections::VecDeque;

use super::{Scenario, Station, NONE};

/// Working coverage map over the scenario's relevant subareas.
///
/// Stations are addressed by station index, subareas by local index.
/// A station is usable while `budget > 0`; open BANs have unlimited budget.
#[derive(Debug, Clone)]
pub(crate) struct CoverState<'a> {
    scn: &'a Scenario,
    pub owner: Vec<u32>,
    pub load: Vec<u32>,
    pub budget: Vec<u32>,
}

impl<'a> CoverState<'a> {
    pub fn new(scn: &'a Scenario, y: &[bool], z: &[bool], sc_to_ban: &[Option<usize>]) -> Self {
        let n_sc = scn.n_sc();
        let mut budget = vec![0u32; scn.n_stations()];
        for i in 0..n_sc {
            if let (true, Some(k)) = (y[i], sc_to_ban[i]) {
                budget[i] = scn.budget(k, i).unwrap_or(0);
            }
        }
        for (k, &open) in z.iter().enumerate() {
            if open {
                budget[n_sc + k] = u32::MAX;
            }
        }
        CoverState { scn, owner: vec![NONE; scn.relevant_count()], load: vec![0; scn.n_stations()], budget }
    }

    pub fn claim(&mut self, local: u32, station: usize) {
        debug_assert_eq!(self.owner[local as usize], NONE);
        self.owner[local as usize] = station as u32;
        self.load[station] += 1;
    }

    pub fn has_slack(&self, station: usize) -> bool {
        self.load[station] < self.budget[station]
    }

    pub fn covered(&self) -> usize {
        self.owner.iter().filter(|&&o| o != NONE).count()
    }

    /// BANs claim every free subarea in range (ascending site id); SCBSs then
    /// claim nearest-first up to budget, the one with most free subareas in
    /// range going first (ties by site id).
    pub fn greedy(&mut self) {
        let scn = self.scn;
        let n_sc = scn.n_sc();
        let mut bans: Vec<usize> = (n_sc..scn.n_stations()).filter(|&s| self.budget[s] > 0).collect();
        bans.sort_by_key(|&s| scn.site_id_of_index(s));
        for s in bans {
            for &l in scn.reach_local(s) {
                if self.owner[l as usize] == NONE {
                    self.claim(l, s);
                }
            }
        }

        let mut pending: Vec<usize> = (0..n_sc).filter(|&s| self.budget[s] > 0).collect();
        while !pending.is_empty() {
            let residual = |s: usize| scn.reach_local(s).iter().filter(|&&l| self.owner[l as usize] == NONE).count();
            let (pos, _) = pending
                .iter()
                .enumerate()
                .max_by(|(_, &a), (_, &b)| {
                    residual(a).cmp(&residual(b)).then(scn.site_id_of_index(b).cmp(&scn.site_id_of_index(a)))
                })
                .expect("pending is non-empty");
            let s = pending.swap_remove(pos);
            for &l in scn.reach_local(s) {
                if !self.has_slack(s) {
                    break;
                }
                if self.owner[l as usize] == NONE {
                    self.claim(l, s);
                }
            }
        }
    }

    /// Grow coverage to the maximum for the current budgets by augmenting
    /// paths (subarea → station → subarea it owns → other station ...).
    pub fn augment_all(&mut self) {
        let scn = self.scn;
        let mut via: Vec<(u32, u32)> = vec![(NONE, NONE); scn.n_stations()];
        let mut seen = vec![false; scn.n_stations()];
        let mut queue = VecDeque::new();
        for start in 0..scn.relevant_count() as u32 {
            if self.owner[start as usize] != NONE {
                continue;
            }
            if !scn.local_stations(start).iter().any(|&s| self.budget[s as usize] > 0) {
                continue;
            }
            seen.iter_mut().for_each(|v| *v = false);
            queue.clear();
            for &s in scn.local_stations(start) {
                let s = s as usize;
                if self.budget[s] > 0 && !seen[s] {
                    seen[s] = true;
                    via[s] = (start, NONE);
                    queue.push_back(s);
                }
            }
            while let Some(t) = queue.pop_front() {
                if self.has_slack(t) {
                    self.apply_path(t, &via);
                    break;
                }
                for &a in scn.reach_local(t) {
                    if self.owner[a as usize] != t as u32 {
                        continue;
                    }
                    for &s in scn.local_stations(a) {
                        let s = s as usize;
                        if self.budget[s] > 0 && !seen[s] {
                            seen[s] = true;
                            via[s] = (a, t as u32);
                            queue.push_back(s);
                        }
                    }
                }
            }
        }
    }

    fn apply_path(&mut self, end: usize, via: &[(u32, u32)]) {
        let mut cur = end;
        loop {
            let (a, prev) = via[cur];
            if prev != NONE {
                self.load[prev as usize] -= 1;
            }
            self.owner[a as usize] = cur as u32;
            self.load[cur] += 1;
            if prev == NONE {
                break;
            }
            cur = prev as usize;
        }
    }

    pub fn into_pairs(self) -> Vec<(usize, Station)> {
        let scn = self.scn;
        let relevant = scn.relevant();
        let mut out: Vec<(usize, Station)> = self
            .owner
            .iter()
            .enumerate()
            .filter(|(_, &o)| o != NONE)
            .map(|(l, &o)| (relevant[l], scn.station(o as usize)))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Coverage for fixed open sites and backhaul assignment: the deterministic
/// greedy pass, then augmenting paths up to maximum coverage under the
/// per-SCBS budgets.
pub fn assign_coverage(
    scn: &Scenario,
    y: &[bool],
    z: &[bool],
    sc_to_ban: &[Option<usize>],
) -> Vec<(usize, Station)> {
    let mut st = CoverState::new(scn, y, z, sc_to_ban);
    st.greedy();
    st.augment_all();
    st.into_pairs()
}
