//! The two-objective deployment program: decision variables, objectives,
//! constraint checking and the coverage assignment for fixed open sites.

mod coverage;
mod feasibility;
mod scenario;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

pub use coverage::assign_coverage;
pub(crate) use coverage::CoverState;
pub use feasibility::{check_feasible, Constraint, Feasibility, Violation};
pub use scenario::Scenario;
pub(crate) use scenario::NONE;

/// Tolerance for cost comparisons against a cap.
pub const COST_TOL: f64 = 1e-9;

/// A base station candidate, by index into the instance's site lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Station {
    Sc(usize),
    Ban(usize),
}

/// Open/closed flags for every candidate site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Selection {
    pub y: Vec<bool>,
    pub z: Vec<bool>,
}

impl Selection {
    pub fn empty(scn: &Scenario) -> Self {
        Selection { y: vec![false; scn.n_sc()], z: vec![false; scn.n_ban()] }
    }

    pub fn is_open(&self, st: Station) -> bool {
        match st {
            Station::Sc(i) => self.y[i],
            Station::Ban(k) => self.z[k],
        }
    }

    pub fn set(&mut self, st: Station, open: bool) {
        match st {
            Station::Sc(i) => self.y[i] = open,
            Station::Ban(k) => self.z[k] = open,
        }
    }

    pub fn cost(&self, scn: &Scenario) -> f64 {
        let inst = scn.instance();
        let sc: f64 = self.y.iter().zip(&inst.sc_sites).filter(|(o, _)| **o).map(|(_, s)| s.cost).fold(0.0, |a, c| a + c);
        let ban: f64 = self.z.iter().zip(&inst.ban_sites).filter(|(o, _)| **o).map(|(_, s)| s.cost).fold(0.0, |a, c| a + c);
        sc + ban
    }

    pub fn open_sc(&self) -> impl Iterator<Item = usize> + '_ {
        self.y.iter().enumerate().filter(|(_, o)| **o).map(|(i, _)| i)
    }

    pub fn open_ban(&self) -> impl Iterator<Item = usize> + '_ {
        self.z.iter().enumerate().filter(|(_, o)| **o).map(|(k, _)| k)
    }

    /// Every open SCBS has a backhaul link to some open BAN.
    pub fn backhaul_reachable(&self, scn: &Scenario) -> bool {
        self.open_sc().all(|i| scn.sc_links(i).iter().any(|&(k, _)| self.z[k]))
    }
}

/// A complete solution: open sites, SCBS→BAN backhaul assignment and the
/// subarea coverage incidence `(subarea, station)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Deployment {
    pub y: Vec<bool>,
    pub z: Vec<bool>,
    /// BAN index serving each SCBS candidate (`None` when not backhauled).
    pub sc_to_ban: Vec<Option<usize>>,
    /// Coverage pairs sorted by subarea. A well-formed deployment lists each
    /// subarea at most once.
    pub coverage: Vec<(usize, Station)>,
}

impl Deployment {
    pub fn empty(scn: &Scenario) -> Self {
        Deployment {
            y: vec![false; scn.n_sc()],
            z: vec![false; scn.n_ban()],
            sc_to_ban: vec![None; scn.n_sc()],
            coverage: Vec::new(),
        }
    }

    pub fn selection(&self) -> Selection {
        Selection { y: self.y.clone(), z: self.z.clone() }
    }

    pub fn covered_by(&self, st: Station) -> impl Iterator<Item = usize> + '_ {
        self.coverage.iter().filter(move |(_, s)| *s == st).map(|(j, _)| *j)
    }

    pub fn covered_count(&self) -> usize {
        let mut last = None;
        let mut n = 0;
        for &(j, _) in &self.coverage {
            if last != Some(j) {
                n += 1;
                last = Some(j);
            }
        }
        n
    }

    pub fn objective(&self, scn: &Scenario) -> ObjectiveVector {
        ObjectiveVector {
            cost: self.selection().cost(scn),
            uncovered: (scn.subarea_count() - self.covered_count()) as u32,
        }
    }
}

/// `(f1, f2)`: deployment cost and number of uncovered subareas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub cost: f64,
    pub uncovered: u32,
}

impl ObjectiveVector {
    /// Weak in both objectives, strict in at least one.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        self.cost <= other.cost
            && self.uncovered <= other.uncovered
            && (self.cost < other.cost || self.uncovered < other.uncovered)
    }
}

/// Objectives of a deployment against its instance.
pub fn evaluate(deployment: &Deployment, instance: &Instance) -> Result<ObjectiveVector> {
    let (n_sc, n_ban) = (instance.sc_sites.len(), instance.ban_sites.len());
    if deployment.y.len() != n_sc || deployment.z.len() != n_ban || deployment.sc_to_ban.len() != n_sc {
        return Err(Error::SizeMismatch(format!(
            "deployment has {}/{} site flags for an instance with {n_sc} SCBS and {n_ban} BAN candidates",
            deployment.y.len(),
            deployment.z.len()
        )));
    }
    let s = instance.subarea_count();
    let mut seen = vec![false; s];
    for &(j, _) in &deployment.coverage {
        if j >= s {
            return Err(Error::SizeMismatch(format!("subarea {j} out of range (S = {s})")));
        }
        seen[j] = true;
    }
    let covered = seen.iter().filter(|c| **c).count();
    let cost = deployment.y.iter().zip(&instance.sc_sites).filter(|(o, _)| **o).map(|(_, s)| s.cost).fold(0.0, |a, c| a + c)
        + deployment.z.iter().zip(&instance.ban_sites).filter(|(o, _)| **o).map(|(_, s)| s.cost).fold(0.0, |a, c| a + c);
    Ok(ObjectiveVector { cost, uncovered: (s - covered) as u32 })
}
