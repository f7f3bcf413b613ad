//! Phase one: outlier creation and cluster rounding around min-radius clients.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CfcClasses, NaturalLp, CHECK_TOL, HALF_TOL};
use crate::error::{Error, Result};
use crate::instances::CflInstance;
use crate::invariants::CheckLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierClient {
    /// Column index (after the original clients).
    pub id: usize,
    pub host: usize,
    pub parent: usize,
    pub demand: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClusterKind {
    /// Centered at an original client; `facility` is rounded up.
    Regular { facility: usize, delta: f64 },
    /// Centered at an outlier; rounded in phase two.
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: usize,
    pub kind: ClusterKind,
    pub satellites: Vec<usize>,
    pub center_radius: f64,
    /// `D′ ∪ H′` when the center was chosen.
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Outliers { parent: usize, residual: f64, created: Vec<usize> },
    Cluster(Cluster),
    Dropped { client: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1State {
    pub n_d: usize,
    /// `x′` over original clients then outliers.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub x_star: Vec<Vec<f64>>,
    /// Dual radius per column.
    pub radius: Vec<f64>,
    pub facilities: BTreeSet<usize>,
    pub clients: BTreeSet<usize>,
    pub pending: BTreeSet<usize>,
    pub outliers: Vec<OutlierClient>,
    /// Demand relocated to outliers, per original client.
    pub residual: Vec<f64>,
    pub big: Vec<usize>,
    pub events: Vec<Event>,
    pub iterations: usize,
}

impl Phase1State {
    pub fn new(natural: &NaturalLp, classes: &CfcClasses) -> Self {
        let n_d = natural.duals.alpha.len();
        let n_f = natural.primal.y.len();
        Self {
            n_d,
            x: natural.primal.x.clone(),
            y: natural.primal.y.clone(),
            x_star: vec![vec![0.0; n_d]; n_f],
            radius: natural.duals.alpha.clone(),
            facilities: classes.small.iter().copied().collect(),
            clients: classes.small_only.iter().chain(&classes.mixed).copied().collect(),
            pending: BTreeSet::new(),
            outliers: Vec::new(),
            residual: vec![0.0; n_d],
            big: classes.big.clone(),
            events: Vec::new(),
            iterations: 0,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.radius.len()
    }

    /// `Σ_{i ∈ F′} x′_ij`
    pub fn open_mass(&self, j: usize) -> f64 {
        self.facilities.iter().map(|&i| self.x[i][j]).sum()
    }

    fn big_mass(&self, j: usize) -> f64 {
        self.big.iter().map(|&i| self.x[i][j]).sum()
    }

    fn zero_open(&mut self, j: usize) {
        for &i in &self.facilities {
            self.x[i][j] = 0.0;
        }
    }

    /// Relocates the residual demand of an eroded mixed client to outlier
    /// clients at its big facilities.
    pub fn create_outliers(&mut self, inst: &CflInstance, j: usize) -> Result<Vec<OutlierClient>> {
        let open = self.open_mass(j);
        if j >= self.n_d || !self.clients.contains(&j) || open >= 0.5 - HALF_TOL {
            return Err(Error::Contract(format!(
                "client {j} is not an eroded member of D′ (mass {open})"
            )));
        }
        let on_big = self.big_mass(j);
        let r = open.min(on_big);
        let mut created = Vec::new();
        if r > 1e-12 {
            let hosts: Vec<usize> = self.big.iter().copied().filter(|&w| self.x[w][j] > 0.0).collect();
            for w in hosts {
                let d = r * self.x[w][j] / on_big;
                let id = self.n_cols();
                for i in 0..self.x.len() {
                    let v = if self.facilities.contains(&i) { d * self.x[i][j] / open } else { 0.0 };
                    self.x[i].push(v);
                    self.x_star[i].push(0.0);
                }
                self.radius.push(self.radius[j] + inst.dist(w, j));
                let o = OutlierClient { id, host: w, parent: j, demand: d, radius: self.radius[id] };
                self.pending.insert(id);
                created.push(o);
            }
        }
        self.residual[j] = if created.is_empty() { 0.0 } else { r };
        self.zero_open(j);
        self.clients.remove(&j);
        self.outliers.extend(created.iter().cloned());
        self.events.push(Event::Outliers {
            parent: j,
            residual: self.residual[j],
            created: created.iter().map(|o| o.id).collect(),
        });
        Ok(created)
    }

    /// Rounds the facility of largest capacity near `j`, pulling a `δ`
    /// fraction of every other satellite into it.
    pub fn round_dprime_cluster(&mut self, inst: &CflInstance, j: usize, log: &mut CheckLog) -> Result<Cluster> {
        if !self.clients.contains(&j) {
            return Err(Error::Contract(format!("client {j} not in D′")));
        }
        let sats: Vec<usize> = self.facilities.iter().copied().filter(|&i| self.x[i][j] > 0.0).collect();
        let pick = *sats
            .iter()
            .min_by(|&&a, &&b| inst.capacity(b).total_cmp(&inst.capacity(a)).then(a.cmp(&b)))
            .ok_or_else(|| Error::InvariantViolation(format!("center {j} has no open neighbour")))?;
        let others: f64 = sats.iter().filter(|&&l| l != pick).map(|&l| self.y[l]).sum();
        if others <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "cluster at {j}: no satellite mass besides facility {pick}"
            )));
        }
        let delta = (0.5 - self.y[pick]) / others;
        log.le("delta_positive", -delta, 0.0, 0.0, || format!("center {j}"));
        log.le("delta_at_most_one", delta, 1.0, CHECK_TOL, || format!("center {j}"));
        if !(delta > 0.0 && delta <= 1.0 + CHECK_TOL) {
            return Err(Error::InvariantViolation(format!("cluster at {j}: delta {delta}")));
        }
        let delta = delta.min(1.0);
        let cols = self.n_cols();
        for &l in sats.iter().filter(|&&l| l != pick) {
            self.y[l] *= 1.0 - delta;
            for k in 0..cols {
                let moved = delta * self.x[l][k];
                self.x[l][k] -= moved;
                self.x_star[pick][k] += moved;
            }
        }
        for k in 0..cols {
            self.x_star[pick][k] += self.x[pick][k];
            self.x[pick][k] = 0.0;
        }
        let load: f64 = self.x_star[pick].iter().sum();
        log.le("rounded_half_load", load, inst.capacity(pick) / 2.0, CHECK_TOL, || {
            format!("facility {pick}")
        });
        // The center stays in D′ until its open mass drops below 1/2.
        self.facilities.remove(&pick);
        Ok(Cluster {
            center: j,
            kind: ClusterKind::Regular { facility: pick, delta },
            satellites: sats,
            center_radius: self.radius[j],
            candidates: Vec::new(),
        })
    }

    fn outlier_cluster(&mut self, j: usize) -> Cluster {
        let sats: Vec<usize> = self.facilities.iter().copied().filter(|&i| self.x[i][j] > 0.0).collect();
        for i in &sats {
            self.facilities.remove(i);
        }
        self.pending.remove(&j);
        Cluster {
            center: j,
            kind: ClusterKind::Outlier,
            satellites: sats,
            center_radius: self.radius[j],
            candidates: Vec::new(),
        }
    }

    /// Facilities rounded up by regular clusters.
    pub fn regular_facilities(&self) -> Vec<usize> {
        self.clusters()
            .filter_map(|c| match c.kind {
                ClusterKind::Regular { facility, .. } => Some(facility),
                ClusterKind::Outlier => None,
            })
            .collect()
    }

    /// Satellites of outlier clusters, with the cluster center per facility.
    pub fn outlier_satellites(&self) -> Vec<(usize, usize)> {
        self.clusters()
            .filter(|c| c.kind == ClusterKind::Outlier)
            .flat_map(|c| c.satellites.iter().map(move |&i| (i, c.center)))
            .collect()
    }

    pub fn clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.events.iter().filter_map(|e| match e {
            Event::Cluster(c) => Some(c),
            _ => None,
        })
    }

    fn check_constraints(&self, inst: &CflInstance, log: &mut CheckLog) {
        for &i in &self.facilities {
            let load: f64 = self.x[i].iter().sum();
            log.le("open_capacity_kept", load, inst.capacity(i) * self.y[i], CHECK_TOL, || {
                format!("facility {i}")
            });
            for &j in &self.clients {
                log.le("open_pair_bound_kept", self.x[i][j], self.y[i], CHECK_TOL, || {
                    format!("pair ({i},{j})")
                });
            }
        }
    }
}

pub fn run_phase1(
    inst: &CflInstance,
    natural: &NaturalLp,
    classes: &CfcClasses,
    log: &mut CheckLog,
) -> Result<Phase1State> {
    let mut st = Phase1State::new(natural, classes);
    st.check_constraints(inst, log);
    let mixed: BTreeSet<usize> = classes.mixed.iter().copied().collect();
    let small_only: BTreeSet<usize> = classes.small_only.iter().copied().collect();
    // Every regular or non-empty outlier cluster removes a facility; empty
    // outlier clusters remove only their center.
    let small = classes.small.len();
    let mut removing = 0;
    while !(st.clients.is_empty() && st.pending.is_empty()) {
        let eroded: Vec<usize> = st
            .clients
            .iter()
            .copied()
            .filter(|j| mixed.contains(j) && st.open_mass(*j) < 0.5 - HALF_TOL)
            .collect();
        for j in eroded {
            st.create_outliers(inst, j)?;
        }
        st.check_constraints(inst, log);
        let candidates: Vec<usize> = st.clients.iter().chain(&st.pending).copied().collect();
        let center = candidates
            .iter()
            .copied()
            .min_by(|&a, &b| st.radius[a].total_cmp(&st.radius[b]).then(a.cmp(&b)));
        let Some(j) = center else { break };
        if st.iterations > small + st.outliers.len() {
            return Err(Error::InvariantViolation("phase one did not terminate".into()));
        }
        st.iterations += 1;
        let cluster = if st.pending.contains(&j) {
            st.outlier_cluster(j)
        } else {
            st.round_dprime_cluster(inst, j, log)?
        };
        if !cluster.satellites.is_empty() {
            removing += 1;
        }
        st.events.push(Event::Cluster(Cluster { candidates, ..cluster }));
        let dropped: Vec<usize> = st
            .clients
            .iter()
            .copied()
            .filter(|k| small_only.contains(k) && st.open_mass(*k) < 0.5 - HALF_TOL)
            .collect();
        for k in dropped {
            st.zero_open(k);
            st.clients.remove(&k);
            st.events.push(Event::Dropped { client: k });
        }
        st.check_constraints(inst, log);
    }
    log.le("phase1_iterations", removing as f64, small as f64, 0.0, || "facility-removing iterations".into());
    Ok(st)
}
