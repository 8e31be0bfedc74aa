use crate::backhaul::{build_links, BackhaulLink, LinkTable};
use crate::error::Result;
use crate::instance::{subarea_centers, Instance};

use super::Station;

/// Sentinel for "no station" / "not a relevant subarea" in compact arrays.
pub(crate) const NONE: u32 = u32::MAX;

/// An instance together with every table derived from it: subarea centers,
/// coverage radii, access reach lists and backhaul links.
///
/// Only subareas within access range of at least one candidate can ever be
/// covered; the solver works on a compact ("local") numbering of those.
#[derive(Debug, Clone)]
pub struct Scenario {
    instance: Instance,
    links: LinkTable,
    centers: Vec<(f64, f64)>,
    /// Per station index: reachable subareas, nearest first (ties by index).
    reach: Vec<Vec<(usize, f64)>>,
    /// Per station index: the same list in local numbering.
    reach_local: Vec<Vec<u32>>,
    /// Per local subarea: stations in range, ascending site id.
    local_stations: Vec<Vec<u32>>,
    relevant: Vec<usize>,
    local_of: Vec<u32>,
    /// Per SCBS: (BAN index, n_ki) for every existing link, ascending BAN.
    sc_links: Vec<Vec<(usize, u32)>>,
    /// The same links, largest `n_ki` first (ties by BAN site id).
    sc_links_ranked: Vec<Vec<(usize, u32)>>,
    site_ids: Vec<u32>,
    costs: Vec<f64>,
}

impl Scenario {
    pub fn new(instance: Instance) -> Result<Self> {
        instance.validate()?;
        let links = build_links(&instance);
        let centers = subarea_centers(&instance.area);
        let n_sc = instance.sc_sites.len();

        let sites: Vec<_> = instance.sc_sites.iter().chain(&instance.ban_sites).collect();
        let radius = |s: usize| {
            if s < n_sc {
                links.sc_access_radius[s]
            } else {
                links.ban_access_radius[s - n_sc]
            }
        };

        let mut reach = Vec::with_capacity(sites.len());
        for (s, site) in sites.iter().enumerate() {
            let r = radius(s);
            let mut list: Vec<(usize, f64)> = centers
                .iter()
                .enumerate()
                .map(|(j, &(x, y))| (j, site.distance_to(x, y)))
                .filter(|&(_, d)| d <= r)
                .collect();
            list.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            reach.push(list);
        }

        let mut local_of = vec![NONE; centers.len()];
        let mut relevant = Vec::new();
        let mut touched: Vec<usize> = reach.iter().flatten().map(|&(j, _)| j).collect();
        touched.sort_unstable();
        touched.dedup();
        for j in touched {
            local_of[j] = relevant.len() as u32;
            relevant.push(j);
        }
        let reach_local: Vec<Vec<u32>> =
            reach.iter().map(|l| l.iter().map(|&(j, _)| local_of[j]).collect()).collect();
        let mut local_stations = vec![Vec::new(); relevant.len()];
        for (s, list) in reach_local.iter().enumerate() {
            for &l in list {
                local_stations[l as usize].push(s as u32);
            }
        }
        let site_ids: Vec<u32> = sites.iter().map(|s| s.id).collect();
        for list in &mut local_stations {
            list.sort_by_key(|&s| site_ids[s as usize]);
        }

        let sc_links: Vec<Vec<(usize, u32)>> = (0..n_sc)
            .map(|i| links.links_of_sc(i).map(|l| (l.ban, l.n_ki)).collect())
            .collect();
        let ban_id = |k: usize| instance.ban_sites[k].id;
        let sc_links_ranked = sc_links
            .iter()
            .map(|l| {
                let mut l = l.clone();
                l.sort_by(|a, b| b.1.cmp(&a.1).then(ban_id(a.0).cmp(&ban_id(b.0))));
                l
            })
            .collect();
        let costs = sites.iter().map(|s| s.cost).collect();

        Ok(Scenario {
            instance,
            links,
            centers,
            reach,
            reach_local,
            local_stations,
            relevant,
            local_of,
            sc_links,
            sc_links_ranked,
            site_ids,
            costs,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn links(&self) -> &LinkTable {
        &self.links
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn n_sc(&self) -> usize {
        self.instance.sc_sites.len()
    }

    pub fn n_ban(&self) -> usize {
        self.instance.ban_sites.len()
    }

    pub fn n_stations(&self) -> usize {
        self.site_ids.len()
    }

    pub fn subarea_count(&self) -> usize {
        self.centers.len()
    }

    pub fn nb_max(&self) -> usize {
        self.instance.nb_max as usize
    }

    pub fn station_index(&self, st: Station) -> usize {
        match st {
            Station::Sc(i) => i,
            Station::Ban(k) => self.n_sc() + k,
        }
    }

    pub fn station(&self, idx: usize) -> Station {
        if idx < self.n_sc() {
            Station::Sc(idx)
        } else {
            Station::Ban(idx - self.n_sc())
        }
    }

    pub fn station_id(&self, st: Station) -> u32 {
        self.site_ids[self.station_index(st)]
    }

    pub fn station_cost(&self, st: Station) -> f64 {
        self.costs[self.station_index(st)]
    }

    /// Subareas within access range of a station, nearest first.
    pub fn reach(&self, st: Station) -> &[(usize, f64)] {
        &self.reach[self.station_index(st)]
    }

    pub fn access_radius(&self, st: Station) -> f64 {
        match st {
            Station::Sc(i) => self.links.sc_access_radius[i],
            Station::Ban(k) => self.links.ban_access_radius[k],
        }
    }

    pub fn distance(&self, st: Station, subarea: usize) -> f64 {
        let site = match st {
            Station::Sc(i) => &self.instance.sc_sites[i],
            Station::Ban(k) => &self.instance.ban_sites[k],
        };
        let (x, y) = self.centers[subarea];
        site.distance_to(x, y)
    }

    /// `(BAN, n_ki)` for every backhaul link of SCBS `sc`.
    pub fn sc_links(&self, sc: usize) -> &[(usize, u32)] {
        &self.sc_links[sc]
    }

    pub fn budget(&self, ban: usize, sc: usize) -> Option<u32> {
        self.sc_links[sc].iter().find(|&&(k, _)| k == ban).map(|&(_, n)| n)
    }

    pub fn link(&self, ban: usize, sc: usize) -> Option<&BackhaulLink> {
        self.links.link(ban, sc)
    }

    pub(crate) fn relevant_count(&self) -> usize {
        self.relevant.len()
    }

    pub(crate) fn relevant(&self) -> &[usize] {
        &self.relevant
    }

    pub(crate) fn local_of(&self, subarea: usize) -> u32 {
        self.local_of[subarea]
    }

    pub(crate) fn reach_local(&self, station_idx: usize) -> &[u32] {
        &self.reach_local[station_idx]
    }

    pub(crate) fn local_stations(&self, local: u32) -> &[u32] {
        &self.local_stations[local as usize]
    }

    pub(crate) fn site_id_of_index(&self, idx: usize) -> u32 {
        self.site_ids[idx]
    }

    pub(crate) fn sc_links_ranked(&self, sc: usize) -> &[(usize, u32)] {
        &self.sc_links_ranked[sc]
    }
}
