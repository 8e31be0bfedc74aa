use std::fmt;

use serde::Serialize;

use super::{Deployment, Scenario, Station, COST_TOL};

/// Constraint families of the deployment program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Constraint {
    /// Malformed deployment (wrong vector lengths, indices out of range).
    Structure,
    /// An SCBS covers only if deployed.
    ScOpen,
    /// A BAN covers only if deployed.
    BanOpen,
    /// An SCBS is backhauled only by a deployed BAN.
    BackhaulOpen,
    /// At most one covering station per subarea.
    SingleCover,
    /// Outage limit, enforced as the coverage-distance bound.
    Distance,
    /// At most `N_b` SCBSs per BAN.
    FanOut,
    /// Every deployed SCBS has exactly one backhaul link, others none.
    BackhaulNeeded,
    /// The assigned backhaul link must exist (be within range).
    BackhaulRange,
    /// Coverage of an SCBS within its link budget `N_ki`.
    Budget,
    /// Total cost within the cap.
    CostCap,
}

impl Constraint {
    pub fn label(self) -> &'static str {
        match self {
            Constraint::Structure => "structure",
            Constraint::ScOpen => "sc-open",
            Constraint::BanOpen => "ban-open",
            Constraint::BackhaulOpen => "backhaul-open",
            Constraint::SingleCover => "single-cover",
            Constraint::Distance => "distance",
            Constraint::FanOut => "fan-out",
            Constraint::BackhaulNeeded => "backhaul-needed",
            Constraint::BackhaulRange => "backhaul-range",
            Constraint::Budget => "budget",
            Constraint::CostCap => "cost-cap",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Site ids involved.
    pub sites: Vec<u32>,
    pub subarea: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Feasibility {
    pub violations: Vec<Violation>,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn cites(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }

    fn push(&mut self, constraint: Constraint, sites: Vec<u32>, subarea: Option<usize>, message: String) {
        self.violations.push(Violation { constraint, sites, subarea, message });
    }
}

/// Check every constraint of the program (and the cost cap when given).
pub fn check_feasible(dep: &Deployment, scn: &Scenario, cost_cap: Option<f64>) -> Feasibility {
    let mut out = Feasibility::default();
    let (n_sc, n_ban, s) = (scn.n_sc(), scn.n_ban(), scn.subarea_count());
    if dep.y.len() != n_sc || dep.z.len() != n_ban || dep.sc_to_ban.len() != n_sc {
        out.push(
            Constraint::Structure,
            vec![],
            None,
            format!(
                "expected {n_sc} SCBS flags, {n_ban} BAN flags and {n_sc} backhaul entries; got {}, {}, {}",
                dep.y.len(),
                dep.z.len(),
                dep.sc_to_ban.len()
            ),
        );
        return out;
    }

    let id = |st: Station| scn.station_id(st);
    let mut sc_load = vec![0u32; n_sc];
    let mut cover_count = vec![0u32; s];
    for &(j, st) in &dep.coverage {
        let valid = j < s
            && match st {
                Station::Sc(i) => i < n_sc,
                Station::Ban(k) => k < n_ban,
            };
        if !valid {
            out.push(Constraint::Structure, vec![], None, format!("coverage entry ({j}, {st:?}) out of range"));
            continue;
        }
        cover_count[j] += 1;
        match st {
            Station::Sc(i) => {
                sc_load[i] += 1;
                if !dep.y[i] {
                    out.push(Constraint::ScOpen, vec![id(st)], Some(j), format!("closed SCBS {} covers subarea {j}", id(st)));
                }
            }
            Station::Ban(k) => {
                if !dep.z[k] {
                    out.push(Constraint::BanOpen, vec![id(st)], Some(j), format!("closed BAN {} covers subarea {j}", id(st)));
                }
            }
        }
        let d = scn.distance(st, j);
        let r = scn.access_radius(st);
        if d > r {
            out.push(
                Constraint::Distance,
                vec![id(st)],
                Some(j),
                format!("site {} is {d:.2} m from subarea {j}, beyond {r:.2} m", id(st)),
            );
        }
    }
    for (j, &c) in cover_count.iter().enumerate() {
        if c > 1 {
            let sites = dep.coverage.iter().filter(|(jj, _)| *jj == j).map(|&(_, st)| id(st)).collect();
            out.push(Constraint::SingleCover, sites, Some(j), format!("subarea {j} covered {c} times"));
        }
    }

    let mut fan_out = vec![0usize; n_ban];
    for (i, &load) in sc_load.iter().enumerate() {
        let sc = Station::Sc(i);
        match (dep.y[i], dep.sc_to_ban[i]) {
            (true, None) => {
                out.push(Constraint::BackhaulNeeded, vec![id(sc)], None, format!("deployed SCBS {} has no backhaul", id(sc)));
            }
            (false, Some(_)) => {
                out.push(
                    Constraint::BackhaulNeeded,
                    vec![id(sc)],
                    None,
                    format!("undeployed SCBS {} holds a backhaul link", id(sc)),
                );
            }
            _ => {}
        }
        let mut budget = 0u32;
        if let Some(k) = dep.sc_to_ban[i] {
            if k >= n_ban {
                out.push(Constraint::Structure, vec![id(sc)], None, format!("SCBS {} assigned to BAN index {k}", id(sc)));
                continue;
            }
            fan_out[k] += 1;
            let ban = Station::Ban(k);
            if !dep.z[k] {
                out.push(
                    Constraint::BackhaulOpen,
                    vec![id(sc), id(ban)],
                    None,
                    format!("SCBS {} backhauled by closed BAN {}", id(sc), id(ban)),
                );
            }
            match scn.budget(k, i) {
                Some(n) => budget = n,
                None => out.push(
                    Constraint::BackhaulRange,
                    vec![id(sc), id(ban)],
                    None,
                    format!("no backhaul link between BAN {} and SCBS {}", id(ban), id(sc)),
                ),
            }
        }
        if load > budget {
            out.push(
                Constraint::Budget,
                vec![id(sc)],
                None,
                format!("SCBS {} covers {} subareas, budget {budget}", id(sc), load),
            );
        }
    }
    for (k, &n) in fan_out.iter().enumerate() {
        if n > scn.nb_max() {
            let ban = Station::Ban(k);
            out.push(
                Constraint::FanOut,
                vec![id(ban)],
                None,
                format!("BAN {} serves {n} SCBSs, limit {}", id(ban), scn.nb_max()),
            );
        }
    }

    if let Some(cap) = cost_cap {
        let cost = dep.selection().cost(scn);
        if cost > cap + COST_TOL {
            out.push(Constraint::CostCap, vec![], None, format!("cost {cost} exceeds cap {cap}"));
        }
    }
    out
}
