//! Exact and heuristic solvers for one consolidation decision.
//!
//! Every solver works on the same decomposition of the objective. Writing
//! `a` for the normalized energy weight, the objective of a complete
//! assignment `h` is
//!
//! ```text
//! constant + sum_{p open} o_p + sum_{r open} rack_r + sum_v assign_v(h_v)
//! ```
//!
//! where `o_p` is the idle draw plus the per-PM gain minus, for PMs online in
//! `t`, the avoided stop cost, and `assign_v(p)` is the dynamic draw plus the
//! migration energy of putting `v` on `p`.
//!
//! [`solve_exact`] is a depth-first branch-and-bound in two phases: the
//! first finds the optimal value, the second walks assignments in
//! lexicographic order and stops at the first one within tolerance of it.
//! Search effort is bounded by a node budget derived from the time cap, so a
//! capped run returns the same incumbent on every machine.

use std::cmp::Reverse;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::costs::{
    objective_with_bounds, shutdown_cost_hours, Bounds, CostBreakdown, CostWeights,
    MigrationCostModel, ReliabilityParams,
};
use crate::domain::{DatacenterState, Placement, Resource};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest `|P|^|V|` [`solve_bruteforce`] accepts.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Search nodes charged per second of time cap.
pub const NODES_PER_SECOND: u64 = 1_000_000;

pub const DEFAULT_TIME_CAP: f64 = 300.0;

const UNASSIGNED: usize = usize::MAX;

/// Stands in for an infinite move cost; a power of two so sums stay exact.
const CLOSED_RACK_SENTINEL: f64 = 1_099_511_627_776.0;

fn default_time_cap() -> f64 {
    DEFAULT_TIME_CAP
}

/// Policy applied at each slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SolverChoice {
    Exact {
        #[serde(default = "default_time_cap")]
        time_cap: f64,
    },
    Greedy,
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Exact {
            time_cap: DEFAULT_TIME_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proof {
    /// Search completed: no placement scores lower.
    Optimal,
    /// Node budget ran out; best incumbent found so far.
    TimeCapped,
    /// Greedy construction, no search.
    Heuristic,
}

impl Proof {
    pub fn label(self) -> &'static str {
        match self {
            Proof::Optimal => "optimal",
            Proof::TimeCapped => "time-capped",
            Proof::Heuristic => "heuristic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub placement: Placement,
    pub objective: T,
    pub breakdown: CostBreakdown<T>,
    pub nodes_explored: u64,
    /// Seconds. The only field that varies between identical runs.
    pub wall_time: f64,
    pub proof: Proof,
}

/// Node budget standing in for a time cap of `time_cap` seconds.
pub fn node_budget(time_cap: f64) -> Result<u64> {
    if !(time_cap > 0.0) || !time_cap.is_finite() {
        return Err(Error::InvalidTimeCap);
    }
    Ok(((time_cap * NODES_PER_SECOND as f64).ceil() as u64).max(1))
}

/// The instance in decomposed form.
#[derive(Debug, Clone)]
pub struct Problem<'a, T> {
    dc: &'a DatacenterState<T>,
    bounds: Bounds<T>,
    open_cost: Vec<T>,
    rack_cost: Vec<T>,
    /// `assign[v * |P| + p]`.
    assign: Vec<T>,
    src: Vec<usize>,
    /// Cheapest assignment of each VM anywhere.
    stay_min: Vec<T>,
    /// Cheapest assignment of each VM away from its current host.
    move_min: Vec<T>,
    /// Cheapest assignment of each VM outside its current rack; a large
    /// sentinel when there is no other rack.
    out_min: Vec<T>,
    constant: T,
    /// `demand[k][v]` for the k-th packed resource.
    demand: Vec<Vec<T>>,
    capacity: Vec<Vec<T>>,
    /// PMs by decreasing capacity, per packed resource.
    cap_order: Vec<Vec<usize>>,
    /// PMs sharing a class are interchangeable.
    pm_class: Vec<usize>,
    vm_class: Vec<usize>,
    online: Vec<bool>,
    tol: T,
}

fn classes<K: PartialEq>(keys: &[K]) -> Vec<usize> {
    let mut class = vec![0; keys.len()];
    for i in 0..keys.len() {
        class[i] = (0..i).find(|&j| keys[j] == keys[i]).map_or(i, |j| class[j]);
    }
    class
}

impl<'a, T: Scalar> Problem<'a, T> {
    pub fn new(
        dc: &'a DatacenterState<T>,
        weights: &CostWeights<T>,
        params: &ReliabilityParams<T>,
        mig: &MigrationCostModel<T>,
    ) -> Result<Self> {
        weights.validate()?;
        params.validate()?;
        mig.validate(dc.n_pms())?;
        for &r in &dc.packed {
            let capacity: T = dc.pms.iter().map(|pm| pm.capacity.get(r)).sum();
            if dc.total_demand(r) > capacity {
                return Err(Error::Infeasible(format!(
                    "aggregate {r} demand exceeds datacenter capacity"
                )));
            }
        }
        let bounds = Bounds::compute(dc, &dc.current, weights, params, mig)?;
        let per = |w: T, ub: T| if ub > T::zero() { w / ub } else { T::zero() };
        let a = per(weights.alpha * weights.rho / T::of(1000.0), bounds.c_ene_ub);
        let b = per(weights.beta * weights.omega, bounds.c_rel_ub);
        let g = per(weights.gamma * weights.omega * weights.tau, bounds.g_rel_ub);
        let tau = weights.tau;
        let (n_vms, n_pms) = (dc.n_vms(), dc.n_pms());

        let online: Vec<bool> = (0..n_pms).map(|p| dc.current.is_active(p)).collect();
        let mut open_cost = Vec::with_capacity(n_pms);
        let mut constant = -T::of_usize(n_pms) * g;
        for (p, pm) in dc.pms.iter().enumerate() {
            let mut o = a * tau * pm.k_idle * pm.p_max + g;
            if online[p] {
                let theta_t = dc.load(&dc.current, p, Resource::Cpu) / pm.capacity.cpu;
                let stop = b * shutdown_cost_hours(pm, theta_t, params)?;
                o = o - stop;
                constant = constant + stop;
            }
            open_cost.push(o);
        }
        let rack_cost = dc.racks.iter().map(|r| a * tau * r.power()).collect();
        let mut assign = Vec::with_capacity(n_vms * n_pms);
        let mut src = Vec::with_capacity(n_vms);
        for (v, vm) in dc.vms.iter().enumerate() {
            let home = dc.current.host(v).ok_or_else(|| {
                Error::InvalidSpec(format!("VM {v} has no host in the current mapping"))
            })?;
            src.push(home);
            for pm in &dc.pms {
                let dynamic =
                    tau * (T::one() - pm.k_idle) * pm.p_max * vm.demand.cpu / pm.capacity.cpu;
                assign.push(a * (dynamic + mig.cost(vm, home, pm.id)));
            }
        }
        let row_min = |v: usize, skip: Option<usize>| {
            (0..n_pms)
                .filter(|&p| Some(p) != skip)
                .map(|p| assign[v * n_pms + p])
                .fold(T::infinity(), T::min)
        };
        let stay_min: Vec<T> = (0..n_vms).map(|v| row_min(v, None)).collect();
        let move_min = (0..n_vms)
            .map(|v| {
                if n_pms > 1 {
                    row_min(v, Some(src[v]))
                } else {
                    stay_min[v]
                }
            })
            .collect();
        let out_min = (0..n_vms)
            .map(|v| {
                let home_rack = dc.rack_of(src[v]);
                (0..n_pms)
                    .filter(|&p| dc.rack_of(p) != home_rack)
                    .map(|p| assign[v * n_pms + p])
                    .fold(T::infinity(), T::min)
                    .min(T::of(CLOSED_RACK_SENTINEL))
            })
            .collect();
        let demand: Vec<Vec<T>> = dc
            .packed
            .iter()
            .map(|&r| dc.vms.iter().map(|vm| vm.demand.get(r)).collect())
            .collect();
        let capacity: Vec<Vec<T>> = dc
            .packed
            .iter()
            .map(|&r| dc.pms.iter().map(|pm| pm.capacity.get(r)).collect())
            .collect();
        let cap_order = capacity
            .iter()
            .map(|caps| {
                let mut order: Vec<usize> = (0..n_pms).collect();
                order.sort_by(|&i, &j| {
                    caps[j]
                        .partial_cmp(&caps[i])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(i.cmp(&j))
                });
                order
            })
            .collect();
        let pm_keys: Vec<_> = (0..n_pms)
            .map(|p| {
                (
                    dc.rack_of(p),
                    open_cost[p],
                    capacity.iter().map(|c| c[p]).collect::<Vec<_>>(),
                    (0..n_vms)
                        .map(|v| assign[v * n_pms + p])
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let vm_keys: Vec<_> = (0..n_vms)
            .map(|v| {
                (
                    demand.iter().map(|d| d[v]).collect::<Vec<_>>(),
                    assign[v * n_pms..(v + 1) * n_pms].to_vec(),
                )
            })
            .collect();
        Ok(Self {
            dc,
            bounds,
            open_cost,
            rack_cost,
            assign,
            src,
            stay_min,
            move_min,
            out_min,
            constant,
            demand,
            capacity,
            cap_order,
            pm_class: classes(&pm_keys),
            vm_class: classes(&vm_keys),
            online,
            tol: T::tie_tolerance(),
        })
    }

    pub fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }

    fn n_vms(&self) -> usize {
        self.dc.n_vms()
    }

    fn n_pms(&self) -> usize {
        self.dc.n_pms()
    }

    fn assign_cost(&self, v: usize, p: usize) -> T {
        self.assign[v * self.n_pms() + p]
    }

    /// Objective of a complete assignment, or `None` if it overcommits a PM.
    pub fn value(&self, hosts: &[usize]) -> Option<T> {
        let mut s = Search::new(self, (0..self.n_vms()).collect());
        for (v, &p) in hosts.iter().enumerate() {
            if !s.fits(v, p) {
                return None;
            }
            s.apply(v, p);
        }
        Some(s.cost)
    }

    /// Lower bound on every completion of `partial`; `None` when no
    /// completion is capacity-feasible by the bound's own test.
    pub fn lower_bound(&self, partial: &[Option<usize>]) -> Option<T> {
        let mut s = Search::new(self, (0..self.n_vms()).collect());
        for (v, host) in partial.iter().enumerate() {
            if let Some(p) = *host {
                if !s.fits(v, p) {
                    return None;
                }
                s.apply(v, p);
            }
        }
        s.bound()
    }

    /// Fills `hosts` by moving every unassigned VM onto the open PM in `keep`
    /// with the lowest assignment cost.
    fn fill(&self, mut hosts: Vec<usize>, keep: &[bool]) -> Option<Vec<usize>> {
        let mut s = Search::new(self, (0..self.n_vms()).collect());
        for (v, &p) in hosts.iter().enumerate() {
            if p != UNASSIGNED {
                s.apply(v, p);
            }
        }
        let mut pending: Vec<usize> = (0..self.n_vms())
            .filter(|&v| hosts[v] == UNASSIGNED)
            .collect();
        pending.sort_by(|&u, &v| self.by_demand(u, v));
        for v in pending {
            let p = (0..self.n_pms())
                .filter(|&p| keep[p] && s.fits(v, p))
                .min_by(|&p, &q| {
                    self.assign_cost(v, p)
                        .partial_cmp(&self.assign_cost(v, q))
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(p.cmp(&q))
                })?;
            s.apply(v, p);
            hosts[v] = p;
        }
        Some(hosts)
    }

    /// Decreasing CPU demand, then index.
    fn by_demand(&self, u: usize, v: usize) -> std::cmp::Ordering {
        let (du, dv) = (self.dc.vms[u].demand.cpu, self.dc.vms[v].demand.cpu);
        dv.partial_cmp(&du)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(u.cmp(&v))
    }

    fn keep_set(&self, keep: &[bool]) -> Option<Vec<usize>> {
        let hosts = (0..self.n_vms())
            .map(|v| {
                let src = self.dc.current.host(v).expect("validated");
                if keep[src] {
                    src
                } else {
                    UNASSIGNED
                }
            })
            .collect();
        self.fill(hosts, keep)
    }

    fn candidates(&self) -> Vec<Vec<usize>> {
        let n_pms = self.n_pms();
        let mut out = Vec::new();
        let status_quo: Vec<usize> = (0..self.n_vms())
            .map(|v| self.dc.current.host(v).expect("validated"))
            .collect();
        out.push(status_quo);

        // First-fit decreasing over PMs online in t (most loaded first), then the rest.
        let cpu_load: Vec<T> = (0..n_pms)
            .map(|p| self.dc.load(&self.dc.current, p, Resource::Cpu))
            .collect();
        let mut pm_order: Vec<usize> = (0..n_pms).collect();
        pm_order.sort_by(|&p, &q| {
            self.online[q]
                .cmp(&self.online[p])
                .then(
                    cpu_load[q]
                        .partial_cmp(&cpu_load[p])
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
                .then(p.cmp(&q))
        });
        let mut vm_order: Vec<usize> = (0..self.n_vms()).collect();
        vm_order.sort_by(|&u, &v| self.by_demand(u, v));
        let mut s = Search::new(self, vm_order.clone());
        let mut ffd = vec![UNASSIGNED; self.n_vms()];
        let mut ok = true;
        for &v in &vm_order {
            match pm_order.iter().copied().find(|&p| s.fits(v, p)) {
                Some(p) => {
                    s.apply(v, p);
                    ffd[v] = p;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            out.push(ffd);
        }

        // Keep the k best online PMs, for two rankings and every k.
        let mut rack_load = vec![T::zero(); self.dc.n_racks()];
        for p in 0..n_pms {
            rack_load[self.dc.rack_of(p)] = rack_load[self.dc.rack_of(p)] + cpu_load[p];
        }
        let online: Vec<usize> = (0..n_pms).filter(|&p| self.online[p]).collect();
        let by_pm = |p: &usize, q: &usize| {
            cpu_load[*q]
                .partial_cmp(&cpu_load[*p])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(p.cmp(q))
        };
        let mut ranked_pm = online.clone();
        ranked_pm.sort_by(by_pm);
        let mut ranked_rack = online.clone();
        ranked_rack.sort_by(|p, q| {
            let (rp, rq) = (
                rack_load[self.dc.rack_of(*p)],
                rack_load[self.dc.rack_of(*q)],
            );
            rq.partial_cmp(&rp)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.dc.rack_of(*p).cmp(&self.dc.rack_of(*q)))
                .then(by_pm(p, q))
        });
        for ranking in [&ranked_pm, &ranked_rack] {
            for k in 1..=ranking.len() {
                let mut keep = vec![false; n_pms];
                for &p in &ranking[..k] {
                    keep[p] = true;
                }
                if let Some(h) = self.keep_set(&keep) {
                    out.push(h);
                }
            }
        }

        // PM sets chosen by the root cover bound, one per count.
        let root = Search::new(self, (0..self.n_vms()).collect());
        if let Some(k_min) = root.k_min() {
            for c in k_min.max(1)..=self.n_vms().min(n_pms) {
                if let Some(keep) = root.cover_set(c) {
                    if let Some(h) = self.keep_set(&keep) {
                        out.push(h);
                    }
                }
            }
        }
        out
    }

    /// Best heuristic assignment and its value.
    pub fn incumbent(&self) -> Option<(Vec<usize>, T)> {
        let mut best: Option<(Vec<usize>, T)> = None;
        let mut seen = Vec::new();
        for hosts in self.candidates() {
            if seen.contains(&hosts) {
                continue;
            }
            seen.push(hosts.clone());
            let Some(hosts) = self.improve(hosts) else {
                continue;
            };
            let Some(value) = self.value(&hosts) else {
                continue;
            };
            let better = match &best {
                None => true,
                Some((bh, bv)) => {
                    value < *bv - self.tol || ((value - *bv).abs() <= self.tol && hosts < *bh)
                }
            };
            if better {
                best = Some((hosts, value));
            }
        }
        best
    }

    /// Local search from a feasible assignment: single relocations, pairwise
    /// swaps, emptying a PM into the open ones and moving a PM's VMs onto a
    /// closed PM, each applied while it lowers the objective.
    fn improve(&self, hosts: Vec<usize>) -> Option<Vec<usize>> {
        let mut ls = Local::new(self, hosts)?;
        while ls.relocate() || ls.swap() || ls.empty() || ls.transfer() {}
        Some(ls.hosts)
    }
}

struct Local<'p, 'a, T> {
    pb: &'p Problem<'a, T>,
    hosts: Vec<usize>,
    load: Vec<Vec<T>>,
    count: Vec<usize>,
    rack_open: Vec<usize>,
}

impl<'p, 'a, T: Scalar> Local<'p, 'a, T> {
    fn new(pb: &'p Problem<'a, T>, hosts: Vec<usize>) -> Option<Self> {
        let mut ls = Self {
            pb,
            hosts: vec![UNASSIGNED; hosts.len()],
            load: vec![vec![T::zero(); pb.n_pms()]; pb.demand.len()],
            count: vec![0; pb.n_pms()],
            rack_open: vec![0; pb.dc.n_racks()],
        };
        for (v, &p) in hosts.iter().enumerate() {
            if p >= pb.n_pms() || !ls.fits(v, p) {
                return None;
            }
            ls.add(v, p);
        }
        Some(ls)
    }

    fn fits(&self, v: usize, p: usize) -> bool {
        (0..self.pb.demand.len())
            .all(|k| self.load[k][p] + self.pb.demand[k][v] <= self.pb.capacity[k][p])
    }

    fn add(&mut self, v: usize, p: usize) {
        for k in 0..self.pb.demand.len() {
            self.load[k][p] = self.load[k][p] + self.pb.demand[k][v];
        }
        if self.count[p] == 0 {
            self.rack_open[self.pb.dc.rack_of(p)] += 1;
        }
        self.count[p] += 1;
        self.hosts[v] = p;
    }

    fn remove(&mut self, v: usize) {
        let p = self.hosts[v];
        for k in 0..self.pb.demand.len() {
            self.load[k][p] = self.load[k][p] - self.pb.demand[k][v];
        }
        self.count[p] -= 1;
        if self.count[p] == 0 {
            self.rack_open[self.pb.dc.rack_of(p)] -= 1;
        }
        self.hosts[v] = UNASSIGNED;
    }

    /// Change in open and rack costs when `from` closes and `to` opens.
    fn status_delta(&self, from: Option<usize>, to: Option<usize>) -> T {
        let pb = self.pb;
        let mut d = T::zero();
        let mut racks = Vec::with_capacity(2);
        if let Some(p) = from {
            d = d - pb.open_cost[p];
            racks.push(pb.dc.rack_of(p));
        }
        if let Some(p) = to {
            d = d + pb.open_cost[p];
            racks.push(pb.dc.rack_of(p));
        }
        racks.dedup();
        for r in racks {
            let before = self.rack_open[r];
            let mut after = before;
            if from.is_some_and(|p| pb.dc.rack_of(p) == r) {
                after -= 1;
            }
            if to.is_some_and(|p| pb.dc.rack_of(p) == r) {
                after += 1;
            }
            if before == 0 && after > 0 {
                d = d + pb.rack_cost[r];
            } else if before > 0 && after == 0 {
                d = d - pb.rack_cost[r];
            }
        }
        d
    }

    fn relocate(&mut self) -> bool {
        let pb = self.pb;
        let mut improved = false;
        for v in 0..self.hosts.len() {
            let a = self.hosts[v];
            let closes = (self.count[a] == 1).then_some(a);
            let mut best: Option<(T, usize)> = None;
            for b in (0..pb.n_pms()).filter(|&b| b != a && self.fits(v, b)) {
                let opens = (self.count[b] == 0).then_some(b);
                let d =
                    pb.assign_cost(v, b) - pb.assign_cost(v, a) + self.status_delta(closes, opens);
                if d < -pb.tol && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, b));
                }
            }
            if let Some((_, b)) = best {
                self.remove(v);
                self.add(v, b);
                improved = true;
            }
        }
        improved
    }

    fn swap(&mut self) -> bool {
        let pb = self.pb;
        let n = self.hosts.len();
        let mut improved = false;
        for u in 0..n {
            for v in u + 1..n {
                let (a, b) = (self.hosts[u], self.hosts[v]);
                if a == b {
                    continue;
                }
                let d = pb.assign_cost(u, b) + pb.assign_cost(v, a)
                    - pb.assign_cost(u, a)
                    - pb.assign_cost(v, b);
                if d >= -pb.tol {
                    continue;
                }
                let fits = (0..pb.demand.len()).all(|k| {
                    let (du, dv) = (pb.demand[k][u], pb.demand[k][v]);
                    self.load[k][a] - du + dv <= pb.capacity[k][a]
                        && self.load[k][b] - dv + du <= pb.capacity[k][b]
                });
                if fits {
                    self.remove(u);
                    self.remove(v);
                    self.add(u, b);
                    self.add(v, a);
                    improved = true;
                }
            }
        }
        improved
    }

    fn vms_on(&self, p: usize) -> Vec<usize> {
        let mut vms: Vec<usize> = (0..self.hosts.len())
            .filter(|&v| self.hosts[v] == p)
            .collect();
        vms.sort_by(|&u, &v| self.pb.by_demand(u, v));
        vms
    }

    /// Closes one PM by moving each of its VMs to the cheapest open PM with room.
    fn empty(&mut self) -> bool {
        let pb = self.pb;
        let mut improved = false;
        for q in 0..pb.n_pms() {
            if self.count[q] == 0 {
                continue;
            }
            let vms = self.vms_on(q);
            let mut d = self.status_delta(Some(q), None);
            let mut moves = Vec::with_capacity(vms.len());
            for &v in &vms {
                self.remove(v);
            }
            for &v in &vms {
                let target = (0..pb.n_pms())
                    .filter(|&p| p != q && self.count[p] > 0 && self.fits(v, p))
                    .min_by(|&p, &r| {
                        pb.assign_cost(v, p)
                            .partial_cmp(&pb.assign_cost(v, r))
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(p.cmp(&r))
                    });
                let Some(p) = target else {
                    break;
                };
                d = d + pb.assign_cost(v, p) - pb.assign_cost(v, q);
                self.add(v, p);
                moves.push(v);
            }
            if moves.len() == vms.len() && d < -pb.tol {
                improved = true;
                continue;
            }
            for &v in &moves {
                self.remove(v);
            }
            for &v in &vms {
                self.add(v, q);
            }
        }
        improved
    }

    /// Moves every VM of an open PM onto one closed PM.
    fn transfer(&mut self) -> bool {
        let pb = self.pb;
        for q in 0..pb.n_pms() {
            if self.count[q] == 0 {
                continue;
            }
            let vms = self.vms_on(q);
            for b in 0..pb.n_pms() {
                if self.count[b] > 0 {
                    continue;
                }
                let fits = (0..pb.demand.len())
                    .all(|k| vms.iter().map(|&v| pb.demand[k][v]).sum::<T>() <= pb.capacity[k][b]);
                if !fits {
                    continue;
                }
                let moved: T = vms
                    .iter()
                    .map(|&v| pb.assign_cost(v, b) - pb.assign_cost(v, q))
                    .sum();
                let mut d = moved + pb.open_cost[b] - pb.open_cost[q];
                let (rq, rb) = (pb.dc.rack_of(q), pb.dc.rack_of(b));
                if rq != rb {
                    if self.rack_open[rq] == 1 {
                        d = d - pb.rack_cost[rq];
                    }
                    if self.rack_open[rb] == 0 {
                        d = d + pb.rack_cost[rb];
                    }
                }
                if d < -pb.tol {
                    for &v in &vms {
                        self.remove(v);
                        self.add(v, b);
                    }
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Find any assignment strictly better than the incumbent.
    Improve,
    /// Find the first assignment, in lexicographic order, within tolerance of the incumbent.
    Lex,
}

struct Undo<T> {
    cost: T,
    rack_move: T,
    rack_out: T,
    saving: T,
    load: [T; 3],
    rest_demand: [T; 3],
}

struct Search<'p, 'a, T> {
    pb: &'p Problem<'a, T>,
    order: Vec<usize>,
    /// Previous VM in `order` of the same class.
    prev_twin: Vec<Option<usize>>,
    hosts: Vec<usize>,
    /// `load[k][p]`.
    load: Vec<Vec<T>>,
    count: Vec<usize>,
    rack_open: Vec<usize>,
    cost: T,
    /// Move floor of the unassigned VMs of each rack while some PM of the rack is open.
    rack_move: Vec<T>,
    /// Move floor of the unassigned VMs of each rack while the rack is closed.
    rack_out: Vec<T>,
    /// `saving[p]`: move cost avoided by unassigned VMs of `p` if `p` stays open.
    saving: Vec<T>,
    rest_demand: [T; 3],
    n_rest: usize,
    nodes: u64,
    budget: u64,
    exhausted: bool,
    best: T,
    best_hosts: Option<Vec<usize>>,
    dp: Vec<T>,
    next_dp: Vec<T>,
    rack_costs: Vec<T>,
    scratch_pms: Vec<usize>,
}

impl<'p, 'a, T: Scalar> Search<'p, 'a, T> {
    fn new(pb: &'p Problem<'a, T>, order: Vec<usize>) -> Self {
        let n_vms = pb.n_vms();
        let mut prev_twin = vec![None; n_vms];
        let mut last_of_class: Vec<Option<usize>> = vec![None; n_vms];
        for &v in &order {
            let c = pb.vm_class[v];
            prev_twin[v] = last_of_class[c];
            last_of_class[c] = Some(v);
        }
        let mut saving = vec![T::zero(); pb.n_pms()];
        for v in 0..n_vms {
            saving[pb.src[v]] = saving[pb.src[v]] + (pb.move_min[v] - pb.stay_min[v]);
        }
        let mut rack_move = vec![T::zero(); pb.dc.n_racks()];
        let mut rack_out = vec![T::zero(); pb.dc.n_racks()];
        for v in 0..n_vms {
            let r = pb.dc.rack_of(pb.src[v]);
            rack_move[r] = rack_move[r] + pb.move_min[v];
            rack_out[r] = rack_out[r] + pb.out_min[v];
        }
        let mut rest_demand = [T::zero(); 3];
        for (k, d) in pb.demand.iter().enumerate() {
            rest_demand[k] = d.iter().copied().sum();
        }
        Self {
            pb,
            order,
            prev_twin,
            hosts: vec![UNASSIGNED; n_vms],
            load: vec![vec![T::zero(); pb.n_pms()]; pb.demand.len()],
            count: vec![0; pb.n_pms()],
            rack_open: vec![0; pb.dc.n_racks()],
            cost: pb.constant,
            rack_move,
            rack_out,
            saving,
            rest_demand,
            n_rest: n_vms,
            nodes: 0,
            budget: u64::MAX,
            exhausted: false,
            best: T::infinity(),
            best_hosts: None,
            dp: Vec::new(),
            next_dp: Vec::new(),
            rack_costs: Vec::new(),
            scratch_pms: Vec::new(),
        }
    }

    fn fits(&self, v: usize, p: usize) -> bool {
        (0..self.pb.demand.len())
            .all(|k| self.load[k][p] + self.pb.demand[k][v] <= self.pb.capacity[k][p])
    }

    fn apply(&mut self, v: usize, p: usize) -> Undo<T> {
        let mut undo = Undo {
            cost: self.cost,
            rack_move: self.rack_move[self.pb.dc.rack_of(self.pb.src[v])],
            rack_out: self.rack_out[self.pb.dc.rack_of(self.pb.src[v])],
            saving: self.saving[self.pb.src[v]],
            load: [T::zero(); 3],
            rest_demand: self.rest_demand,
        };
        for k in 0..self.pb.demand.len() {
            undo.load[k] = self.load[k][p];
            self.load[k][p] = self.load[k][p] + self.pb.demand[k][v];
            self.rest_demand[k] = self.rest_demand[k] - self.pb.demand[k][v];
        }
        if self.count[p] == 0 {
            self.cost = self.cost + self.pb.open_cost[p];
            let r = self.pb.dc.rack_of(p);
            if self.rack_open[r] == 0 {
                self.cost = self.cost + self.pb.rack_cost[r];
            }
            self.rack_open[r] += 1;
        }
        self.count[p] += 1;
        self.cost = self.cost + self.pb.assign_cost(v, p);
        let home = self.pb.src[v];
        let home_rack = self.pb.dc.rack_of(home);
        self.rack_move[home_rack] = self.rack_move[home_rack] - self.pb.move_min[v];
        self.rack_out[home_rack] = self.rack_out[home_rack] - self.pb.out_min[v];
        self.saving[home] = self.saving[home] - (self.pb.move_min[v] - self.pb.stay_min[v]);
        self.hosts[v] = p;
        self.n_rest -= 1;
        undo
    }

    fn undo(&mut self, v: usize, p: usize, undo: Undo<T>) {
        for k in 0..self.pb.demand.len() {
            self.load[k][p] = undo.load[k];
        }
        self.rest_demand = undo.rest_demand;
        self.count[p] -= 1;
        if self.count[p] == 0 {
            let r = self.pb.dc.rack_of(p);
            self.rack_open[r] -= 1;
        }
        self.cost = undo.cost;
        let home = self.pb.src[v];
        let home_rack = self.pb.dc.rack_of(home);
        self.rack_move[home_rack] = undo.rack_move;
        self.rack_out[home_rack] = undo.rack_out;
        self.saving[home] = undo.saving;
        self.hosts[v] = UNASSIGNED;
        self.n_rest += 1;
    }

    /// Fewest additional PMs whose capacity covers the unassigned demand.
    fn k_min(&self) -> Option<usize> {
        let mut k_min = 0;
        for k in 0..self.pb.demand.len() {
            let caps = &self.pb.capacity[k];
            let mut need = self.rest_demand[k];
            for (p, &cap) in caps.iter().enumerate() {
                if self.count[p] > 0 {
                    need = need - (cap - self.load[k][p]);
                }
            }
            let total: T = self.pb.demand[k].iter().copied().sum();
            let slack = self.pb.tol * total.max(T::one());
            if need <= slack {
                continue;
            }
            let mut covered = T::zero();
            let mut used = 0;
            for &p in &self.pb.cap_order[k] {
                if covered + slack >= need {
                    break;
                }
                if self.count[p] == 0 {
                    covered = covered + caps[p];
                    used += 1;
                }
            }
            if covered + slack < need {
                return None;
            }
            k_min = k_min.max(used);
        }
        Some(k_min)
    }

    /// Costs of opening `k = 0, 1, ..` more PMs of rack `r`, PMs taken by
    /// increasing net open cost, plus the move floor of the rack's
    /// unassigned VMs when the rack is still closed.
    fn rack_options(&self, r: usize, pms: &mut Vec<usize>, out: &mut Vec<T>) {
        pms.clear();
        pms.extend(
            self.pb.dc.racks[r]
                .pm_ids
                .iter()
                .copied()
                .filter(|&p| self.count[p] == 0),
        );
        let net = |p: usize| self.pb.open_cost[p] - self.saving[p];
        pms.sort_by(|&a, &b| {
            net(a)
                .partial_cmp(&net(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        out.clear();
        let mut acc = if self.rack_open[r] > 0 {
            out.push(T::zero());
            T::zero()
        } else {
            out.push(self.rack_out[r]);
            self.rack_move[r] + self.pb.rack_cost[r]
        };
        for &p in pms.iter() {
            acc = acc + net(p);
            out.push(acc);
        }
    }

    /// `dp[c]`: cheapest cost of opening `c` more PMs; returns the largest reachable `c`.
    fn cover_dp(&mut self) -> usize {
        let limit = self.n_rest.min(self.pb.n_pms());
        self.dp.clear();
        self.dp.resize(limit + 1, T::infinity());
        self.dp[0] = T::zero();
        let mut reach = 0;
        let mut pms = std::mem::take(&mut self.scratch_pms);
        let mut opts = std::mem::take(&mut self.rack_costs);
        for r in 0..self.pb.dc.n_racks() {
            self.rack_options(r, &mut pms, &mut opts);
            self.next_dp.clear();
            self.next_dp.resize(limit + 1, T::infinity());
            for c in 0..=reach {
                let base = self.dp[c];
                if !base.is_finite() {
                    continue;
                }
                for (k, &o) in opts.iter().enumerate().take(limit - c + 1) {
                    let cand = base + o;
                    if cand < self.next_dp[c + k] {
                        self.next_dp[c + k] = cand;
                    }
                }
            }
            reach = (reach + opts.len() - 1).min(limit);
            std::mem::swap(&mut self.dp, &mut self.next_dp);
        }
        self.scratch_pms = pms;
        self.rack_costs = opts;
        reach
    }

    fn bound(&mut self) -> Option<T> {
        if self.n_rest == 0 {
            return Some(self.cost);
        }
        let k_min = self.k_min()?;
        let reach = self.cover_dp();
        if k_min > reach {
            return None;
        }
        let cover = self.dp[k_min..=reach]
            .iter()
            .copied()
            .fold(T::infinity(), T::min);
        if !cover.is_finite() {
            return None;
        }
        let mut floor = T::zero();
        for r in 0..self.pb.dc.n_racks() {
            if self.rack_open[r] > 0 {
                floor = floor + self.rack_move[r];
            }
        }
        for p in 0..self.pb.n_pms() {
            if self.count[p] > 0 {
                floor = floor - self.saving[p];
            }
        }
        Some(self.cost + floor + cover)
    }

    /// PMs the cover relaxation opens when it must open exactly `c` more.
    fn cover_set(&self, c: usize) -> Option<Vec<bool>> {
        let n_racks = self.pb.dc.n_racks();
        let lists: Vec<(Vec<usize>, Vec<T>)> = (0..n_racks)
            .map(|r| {
                let (mut pms, mut opts) = (Vec::new(), Vec::new());
                self.rack_options(r, &mut pms, &mut opts);
                (pms, opts)
            })
            .collect();
        // table[r][u]: cheapest cost of racks r.. opening exactly u PMs.
        let mut table = vec![vec![T::infinity(); c + 1]; n_racks + 1];
        table[n_racks][0] = T::zero();
        for r in (0..n_racks).rev() {
            let opts = &lists[r].1;
            for used in 0..=c {
                table[r][used] = (0..opts.len().min(used + 1))
                    .map(|k| table[r + 1][used - k] + opts[k])
                    .fold(T::infinity(), T::min);
            }
        }
        if !table[0][c].is_finite() {
            return None;
        }
        let mut keep: Vec<bool> = (0..self.pb.n_pms()).map(|p| self.count[p] > 0).collect();
        let mut left = c;
        for r in 0..n_racks {
            let (pms, opts) = &lists[r];
            let k = (0..opts.len().min(left + 1))
                .find(|&k| table[r + 1][left - k] + opts[k] == table[r][left])
                .expect("traceback follows the table");
            for &p in &pms[..k] {
                keep[p] = true;
            }
            left -= k;
        }
        Some(keep)
    }

    fn children(&self, v: usize, mode: Mode) -> Vec<usize> {
        let n_pms = self.pb.n_pms();
        let min_host = self.prev_twin[v].map_or(0, |u| self.hosts[u]);
        let mut seen = vec![false; n_pms];
        let mut out = Vec::new();
        for p in 0..n_pms {
            if self.count[p] == 0 {
                let c = self.pb.pm_class[p];
                if seen[c] {
                    continue;
                }
                seen[c] = true;
            }
            if p >= min_host && self.fits(v, p) {
                out.push(p);
            }
        }
        if mode == Mode::Improve {
            let dc = self.pb.dc;
            out.sort_by_key(|&p| {
                (
                    !self.pb.online[p],
                    Reverse(self.rack_open[dc.rack_of(p)]),
                    p,
                )
            });
        }
        out
    }

    fn dfs(&mut self, depth: usize, mode: Mode) -> bool {
        if depth == self.order.len() {
            let accept = match mode {
                Mode::Improve => self.cost < self.best - self.pb.tol,
                Mode::Lex => self.cost <= self.best + self.pb.tol,
            };
            if accept {
                self.best = self.cost;
                self.best_hosts = Some(self.hosts.clone());
            }
            return mode == Mode::Lex && accept;
        }
        let v = self.order[depth];
        for p in self.children(v, mode) {
            if self.nodes >= self.budget {
                self.exhausted = true;
                return false;
            }
            self.nodes += 1;
            let undo = self.apply(v, p);
            let promising = match self.bound() {
                None => false,
                Some(lb) => match mode {
                    Mode::Improve => lb < self.best - self.pb.tol,
                    Mode::Lex => lb <= self.best + self.pb.tol,
                },
            };
            let done = promising && self.dfs(depth + 1, mode);
            self.undo(v, p, undo);
            if done || self.exhausted {
                return done;
            }
        }
        false
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    pb: &Problem<'_, T>,
    hosts: &[usize],
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
    nodes: u64,
    start: Instant,
    proof: Proof,
) -> Result<SolveResult<T>> {
    let dc = pb.dc;
    let placement = Placement::from_hosts(hosts, dc.n_pms())?;
    let (objective, breakdown) = objective_with_bounds(
        &dc.current,
        &placement,
        dc,
        weights,
        params,
        mig,
        &pb.bounds,
    )?;
    Ok(SolveResult {
        placement,
        objective,
        breakdown,
        nodes_explored: nodes,
        wall_time: start.elapsed().as_secs_f64(),
        proof,
    })
}

/// Best heuristic placement: status quo, first-fit decreasing over online
/// PMs and keep-set repackings, each refined by local search.
pub fn greedy_incumbent<T: Scalar>(
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
) -> Result<SolveResult<T>> {
    let start = Instant::now();
    let pb = Problem::new(dc, weights, params, mig)?;
    let (hosts, _) = pb
        .incumbent()
        .ok_or_else(|| Error::Infeasible("no heuristic placement fits".into()))?;
    finish(
        &pb,
        &hosts,
        weights,
        params,
        mig,
        0,
        start,
        Proof::Heuristic,
    )
}

/// Branch-and-bound with the node budget of `time_cap` seconds.
pub fn solve_exact<T: Scalar>(
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
    time_cap: f64,
) -> Result<SolveResult<T>> {
    solve_with_budget(dc, weights, params, mig, node_budget(time_cap)?)
}

/// Branch-and-bound exploring at most `budget` nodes per phase.
pub fn solve_with_budget<T: Scalar>(
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
    budget: u64,
) -> Result<SolveResult<T>> {
    let start = Instant::now();
    let pb = Problem::new(dc, weights, params, mig)?;
    let (incumbent, value) = pb
        .incumbent()
        .ok_or_else(|| Error::Infeasible("no placement fits".into()))?;

    let mut order: Vec<usize> = (0..dc.n_vms()).collect();
    order.sort_by(|&u, &v| pb.by_demand(u, v));
    let mut improve = Search::new(&pb, order);
    improve.budget = budget;
    improve.best = value;
    improve.dfs(0, Mode::Improve);
    let mut nodes = improve.nodes;
    let hosts = improve.best_hosts.take().unwrap_or(incumbent);
    if improve.exhausted {
        return finish(
            &pb,
            &hosts,
            weights,
            params,
            mig,
            nodes,
            start,
            Proof::TimeCapped,
        );
    }

    let mut lex = Search::new(&pb, (0..dc.n_vms()).collect());
    lex.budget = budget;
    lex.best = improve.best;
    lex.dfs(0, Mode::Lex);
    nodes += lex.nodes;
    let hosts = lex.best_hosts.unwrap_or(hosts);
    finish(
        &pb,
        &hosts,
        weights,
        params,
        mig,
        nodes,
        start,
        Proof::Optimal,
    )
}

/// Exhaustive enumeration scored with [`objective_with_bounds`]; ties go to
/// the lexicographically smallest host vector.
pub fn solve_bruteforce<T: Scalar>(
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
) -> Result<SolveResult<T>> {
    let start = Instant::now();
    let (n_vms, n_pms) = (dc.n_vms(), dc.n_pms());
    let assignments = (n_pms as f64).powi(n_vms as i32);
    if assignments > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            assignments,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    weights.validate()?;
    params.validate()?;
    mig.validate(n_pms)?;
    let bounds = Bounds::compute(dc, &dc.current, weights, params, mig)?;
    let score = |hosts: &[usize]| -> Result<Option<T>> {
        let next = Placement::from_hosts(hosts, n_pms)?;
        match objective_with_bounds(&dc.current, &next, dc, weights, params, mig, &bounds) {
            Ok((v, _)) => Ok(Some(v)),
            Err(Error::InvalidPlacement(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut best: Option<T> = None;
    let mut visited = 0u64;
    for_each_assignment(n_vms, n_pms, |hosts| {
        visited += 1;
        if let Some(v) = score(hosts)? {
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
        Ok(true)
    })?;
    let best = best.ok_or_else(|| Error::Infeasible("no assignment fits".into()))?;
    let tol = T::tie_tolerance();
    let mut chosen = None;
    for_each_assignment(n_vms, n_pms, |hosts| {
        if let Some(v) = score(hosts)? {
            if v <= best + tol {
                chosen = Some(hosts.to_vec());
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    let placement = Placement::from_hosts(&chosen.expect("minimum attained"), n_pms)?;
    let (objective, breakdown) =
        objective_with_bounds(&dc.current, &placement, dc, weights, params, mig, &bounds)?;
    Ok(SolveResult {
        placement,
        objective,
        breakdown,
        nodes_explored: visited,
        wall_time: start.elapsed().as_secs_f64(),
        proof: Proof::Optimal,
    })
}

/// Visits host vectors in lexicographic order until `f` returns `false`.
fn for_each_assignment(
    n_vms: usize,
    n_pms: usize,
    mut f: impl FnMut(&[usize]) -> Result<bool>,
) -> Result<()> {
    if n_pms == 0 && n_vms > 0 {
        return Ok(());
    }
    let mut hosts = vec![0; n_vms];
    loop {
        if !f(&hosts)? {
            return Ok(());
        }
        let mut i = n_vms;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            hosts[i] += 1;
            if hosts[i] < n_pms {
                break;
            }
            hosts[i] = 0;
        }
    }
}
