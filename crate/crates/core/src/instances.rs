//! Instance model, validation, random generation and JSON I/O.
//!
//! The metric is stored densely over F ∪ D with facilities first, so the
//! distance between facility `i` and client `j` is `metric[i][n_f + j]`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for metric axioms.
pub const METRIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub open_cost: f64,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CflInstance {
    pub facilities: Vec<Facility>,
    pub n_clients: usize,
    pub metric: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cardinality_costs: bool,
}

impl CflInstance {
    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    /// Euclidean instance from planar points; facilities are
    /// `(position, open cost, capacity)`.
    pub fn from_points(facilities: &[((f64, f64), f64, u64)], clients: &[(f64, f64)]) -> Self {
        let pts: Vec<(f64, f64)> = facilities.iter().map(|f| f.0).chain(clients.iter().copied()).collect();
        let metric = pts
            .iter()
            .map(|a| pts.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
            .collect();
        CflInstance {
            facilities: facilities
                .iter()
                .map(|&(_, open_cost, capacity)| Facility { open_cost, capacity })
                .collect(),
            n_clients: clients.len(),
            metric,
            cardinality_costs: false,
        }
    }

    /// Distance between facility `i` and client `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric[i][self.facilities.len() + j]
    }

    /// Distance between facilities `i` and `k`.
    pub fn fac_dist(&self, i: usize, k: usize) -> f64 {
        self.metric[i][k]
    }

    pub fn open_cost(&self, i: usize) -> f64 {
        self.facilities[i].open_cost
    }

    pub fn capacity(&self, i: usize) -> f64 {
        self.facilities[i].capacity as f64
    }

    pub fn total_capacity(&self) -> u64 {
        self.facilities.iter().map(|f| f.capacity).sum()
    }

    /// Largest finite metric entry or opening cost, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        let m = self
            .metric
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        let o = self
            .facilities
            .iter()
            .fold(0.0f64, |a, f| a.max(f.open_cost.abs()));
        1.0 + m.max(o) * (1 + self.n_clients + self.facilities.len()) as f64
    }
}

/// Fractional multiplicity `y` and assignment `x`, indexed `x[i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

impl FractionalSolution {
    pub fn zeros(n_f: usize, n_d: usize) -> Self {
        FractionalSolution {
            y: vec![0.0; n_f],
            x: vec![vec![0.0; n_d]; n_f],
        }
    }

    /// Entries outside `[-tol, 1 + tol]` or non-finite.
    pub fn range_violations(&self, tol: f64) -> Vec<String> {
        let bad = |v: f64| !v.is_finite() || v < -tol || v > 1.0 + tol;
        let mut out = Vec::new();
        for (i, &v) in self.y.iter().enumerate() {
            if bad(v) {
                out.push(format!("y[{i}] = {v}"));
            }
        }
        for (i, row) in self.x.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if bad(v) {
                    out.push(format!("x[{i}][{j}] = {v}"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralSolution {
    /// Open facilities, ascending.
    pub open: Vec<usize>,
    /// Facility serving each client.
    pub assign: Vec<usize>,
}

impl IntegralSolution {
    pub fn to_fractional(&self, n_f: usize) -> FractionalSolution {
        let mut s = FractionalSolution::zeros(n_f, self.assign.len());
        for &i in &self.open {
            s.y[i] = 1.0;
        }
        for (j, &i) in self.assign.iter().enumerate() {
            s.x[i][j] = 1.0;
        }
        s
    }

    pub fn cost(&self, inst: &CflInstance) -> f64 {
        let open: f64 = self.open.iter().map(|&i| inst.open_cost(i)).sum();
        let conn: f64 = self
            .assign
            .iter()
            .enumerate()
            .map(|(j, &i)| inst.dist(i, j))
            .sum();
        open + conn
    }
}

/// ψ(x, y) = Σ o_i y_i + Σ c_ij x_ij.
pub fn cost(inst: &CflInstance, sol: &FractionalSolution) -> f64 {
    let mut total = 0.0;
    for i in 0..inst.n_facilities() {
        total += inst.open_cost(i) * sol.y[i];
        for j in 0..inst.n_clients {
            total += inst.dist(i, j) * sol.x[i][j];
        }
    }
    total
}

pub fn validate(inst: &CflInstance) -> Vec<String> {
    validate_with(inst, true)
}

/// Like [`validate`]; the O(n^3) triangle check can be skipped for large inputs.
pub fn validate_with(inst: &CflInstance, check_triangle: bool) -> Vec<String> {
    let mut out = Vec::new();
    let n_f = inst.n_facilities();
    let n = n_f + inst.n_clients;
    for (i, f) in inst.facilities.iter().enumerate() {
        if f.capacity < 1 {
            out.push(format!("facility {i}: capacity {} < 1", f.capacity));
        }
        if !f.open_cost.is_finite() || f.open_cost < 0.0 {
            out.push(format!("facility {i}: open cost {} not a nonnegative number", f.open_cost));
        }
        if inst.cardinality_costs && f.open_cost != 1.0 {
            out.push(format!(
                "facility {i}: open cost {} but cardinality_costs is set",
                f.open_cost
            ));
        }
    }
    if inst.metric.len() != n || inst.metric.iter().any(|r| r.len() != n) {
        out.push(format!("metric: expected a {n}x{n} matrix"));
        return out;
    }
    let m = &inst.metric;
    for a in 0..n {
        if m[a][a] != 0.0 {
            out.push(format!("metric: diagonal ({a},{a}) = {}", m[a][a]));
        }
        for b in 0..n {
            let v = m[a][b];
            if !v.is_finite() || v < 0.0 {
                out.push(format!("metric: entry ({a},{b}) = {v}"));
            }
            if b > a && (v - m[b][a]).abs() > METRIC_TOL {
                out.push(format!("metric: asymmetric pair ({a},{b})"));
            }
        }
    }
    if check_triangle {
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    if m[a][d] > m[a][b] + m[b][d] + METRIC_TOL {
                        out.push(format!(
                            "metric: triangle ({a},{b},{d}): {} + {} < {}",
                            m[a][b], m[b][d], m[a][d]
                        ));
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n_f: usize,
    pub n_d: usize,
    pub seed: u64,
    pub cost_range: (f64, f64),
    pub cap_range: (u64, u64),
    pub cardinality: bool,
}

impl GenParams {
    /// Defaults used by the bench harness: costs in [0.2, 1.5], capacities in [1, n_d].
    pub fn new(n_f: usize, n_d: usize, seed: u64) -> Self {
        GenParams {
            n_f,
            n_d,
            seed,
            cost_range: (0.2, 1.5),
            cap_range: (1, n_d.max(1) as u64),
            cardinality: false,
        }
    }

    pub fn cardinality(mut self, on: bool) -> Self {
        self.cardinality = on;
        self
    }
}

const MAX_CAPACITY_DRAWS: usize = 100_000;

/// Points uniform in the unit square from a seeded xoshiro256++ stream.
pub fn gen_euclidean(p: &GenParams) -> Result<CflInstance> {
    if p.n_f == 0 || p.n_d == 0 {
        return Err(Error::InfeasibleGenerator("need n_f >= 1 and n_d >= 1".into()));
    }
    let (clo, chi) = p.cost_range;
    let (ulo, uhi) = p.cap_range;
    if clo.is_nan() || chi.is_nan() || clo > chi || clo < 0.0 || ulo > uhi || ulo == 0 {
        return Err(Error::InfeasibleGenerator(format!(
            "bad ranges: cost {:?}, capacity {:?}",
            p.cost_range, p.cap_range
        )));
    }
    if uhi.saturating_mul(p.n_f as u64) < p.n_d as u64 {
        return Err(Error::InfeasibleGenerator(format!(
            "{} facilities of capacity <= {uhi} cannot serve {} clients",
            p.n_f, p.n_d
        )));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(p.seed);
    let n = p.n_f + p.n_d;
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let costs: Vec<f64> = (0..p.n_f)
        .map(|_| {
            let c = if chi > clo { rng.gen_range(clo..=chi) } else { clo };
            if p.cardinality {
                1.0
            } else {
                c
            }
        })
        .collect();
    let mut caps = Vec::new();
    for _ in 0..MAX_CAPACITY_DRAWS {
        caps = (0..p.n_f).map(|_| rng.gen_range(ulo..=uhi)).collect();
        if caps.iter().sum::<u64>() >= p.n_d as u64 {
            break;
        }
    }
    if caps.iter().sum::<u64>() < p.n_d as u64 {
        return Err(Error::InfeasibleGenerator(
            "capacity resampling did not reach total demand".into(),
        ));
    }
    let metric = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    if a == b {
                        0.0
                    } else {
                        let (dx, dy) = (pts[a].0 - pts[b].0, pts[a].1 - pts[b].1);
                        dx.hypot(dy)
                    }
                })
                .collect()
        })
        .collect();
    Ok(CflInstance {
        facilities: costs
            .into_iter()
            .zip(caps)
            .map(|(open_cost, capacity)| Facility { open_cost, capacity })
            .collect(),
        n_clients: p.n_d,
        metric,
        cardinality_costs: p.cardinality,
    })
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<CflInstance> {
    load_json(path)
}

pub fn save_instance(path: impl AsRef<Path>, inst: &CflInstance) -> Result<()> {
    save_json(path, inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n_f: usize, costs: &[f64], caps: &[u64], pos: &[f64]) -> CflInstance {
        let metric = pos
            .iter()
            .map(|a| pos.iter().map(|b| (a - b).abs()).collect())
            .collect();
        CflInstance {
            facilities: (0..n_f)
                .map(|i| Facility { open_cost: costs[i], capacity: caps[i] })
                .collect(),
            n_clients: pos.len() - n_f,
            metric,
            cardinality_costs: false,
        }
    }

    #[test]
    fn zero_metric_is_valid() {
        let inst = line(1, &[0.0], &[1], &[0.0, 0.0]);
        assert!(validate(&inst).is_empty());
    }

    #[test]
    fn triangle_violation_names_the_triple() {
        let mut inst = line(1, &[1.0], &[2], &[0.0, 0.0, 0.0]);
        inst.metric = vec![
            vec![0.0, 5.0, 10.0],
            vec![5.0, 0.0, 1.0],
            vec![10.0, 1.0, 0.0],
        ];
        let v = validate(&inst);
        assert!(v.iter().any(|s| s.contains("triangle (0,1,2)")), "{v:?}");
    }

    #[test]
    fn zero_capacity_reported() {
        let inst = line(1, &[1.0], &[0], &[0.0, 1.0]);
        assert!(validate(&inst).iter().any(|s| s.contains("capacity")));
    }

    #[test]
    fn cost_examples() {
        let inst = line(1, &[5.0], &[2], &[0.0, 1.0, -1.0]);
        let mut s = FractionalSolution::zeros(1, 2);
        assert_eq!(cost(&inst, &s), 0.0);
        s.y[0] = 1.0;
        s.x[0] = vec![1.0, 1.0];
        assert_eq!(cost(&inst, &s), 7.0);
        let inst = line(1, &[4.0], &[1], &[0.0, 2.0]);
        let s = FractionalSolution { y: vec![0.5], x: vec![vec![0.5]] };
        assert_eq!(cost(&inst, &s), 3.0);
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let p = GenParams::new(2, 3, 7);
        let a = gen_euclidean(&p).unwrap();
        let b = gen_euclidean(&p).unwrap();
        assert_eq!(a, b);
        assert!(validate(&a).is_empty());
        assert!(a.total_capacity() >= 3);
        let c = gen_euclidean(&GenParams::new(2, 3, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_rejects_impossible_capacity() {
        let mut p = GenParams::new(1, 5, 1);
        p.cap_range = (1, 1);
        assert!(matches!(gen_euclidean(&p), Err(Error::InfeasibleGenerator(_))));
    }

    #[test]
    fn cardinality_flag_sets_unit_costs() {
        let inst = gen_euclidean(&GenParams::new(3, 4, 2).cardinality(true)).unwrap();
        assert!(inst.facilities.iter().all(|f| f.open_cost == 1.0));
        assert!(validate(&inst).is_empty());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = gen_euclidean(&GenParams::new(3, 4, 11)).unwrap();
        save_instance(&path, &inst).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);

        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_instance(&path), Err(Error::Parse { .. })));

        let mut bad = inst.clone();
        bad.facilities[0].capacity = 0;
        save_instance(&path, &bad).unwrap();
        let back = load_instance(&path).unwrap();
        assert!(!validate(&back).is_empty());
    }
}
