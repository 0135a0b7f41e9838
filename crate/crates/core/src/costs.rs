//! Energy and reliability cost model of a consolidation decision, the
//! upper bounds used to normalize each term, and the weighted objective.
//!
//! Energies are tracked in watt-hours; the electricity price applies after
//! conversion to kWh. Reliability costs are hours of lost MTTF priced by the
//! reliability utility `omega` (dollars per hour).

use serde::{Deserialize, Serialize};

use crate::domain::{
    flags_unchecked, validate_placement, DatacenterState, Placement, PmSpec, RackSpec, Resource,
    TransitionFlags, VmSpec,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Upper end of the cycle-count range the AFR fit is valid on.
pub const MAX_CYCLE_COUNT: u32 = 1600;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct CostWeights<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    /// Electricity price, dollars per kWh.
    pub rho: T,
    /// Reliability utility, dollars per hour of PM lifetime.
    pub omega: T,
    /// Slot length in hours.
    pub tau: T,
}

impl<T: Scalar> Default for CostWeights<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: T::one(),
            gamma: T::one(),
            rho: T::of(0.10),
            omega: utility_per_hour(T::of(5000.0), T::of(3.0), T::of(8760.0)),
            tau: T::of(0.5),
        }
    }
}

impl<T: Scalar> CostWeights<T> {
    pub fn with_factors(self, alpha: T, beta: T, gamma: T) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(w >= T::zero() && w <= T::one()) {
                return Err(Error::OutOfDomain {
                    what: name,
                    value: w.as_f64(),
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        for (name, v) in [("rho", self.rho), ("omega", self.omega), ("tau", self.tau)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Dollar cost of a machine spread over its expected lifetime in hours.
pub fn utility_per_hour<T: Scalar>(price: T, lifetime_years: T, hours_per_year: T) -> T {
    price / (lifetime_years * hours_per_year)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ReliabilityParams<T> {
    /// Quadratic AFR coefficient, scaled by 1e-5.
    pub delta: T,
    /// Linear AFR coefficient, scaled by 1e-4.
    pub varrho: T,
    /// Constant AFR term, scaled by 1e-4.
    pub varphi: T,
    /// Coffin-Manson exponent.
    pub q: T,
    /// Ambient temperature in kelvin.
    pub t_amb: T,
    pub mttf_hours: T,
    pub hours_per_year: T,
    /// Lower clamp for the AFR fit, failures per year.
    pub afr_floor: T,
}

impl<T: Scalar> Default for ReliabilityParams<T> {
    fn default() -> Self {
        Self {
            delta: T::of(1.51),
            varrho: T::of(1.09),
            varphi: T::of(1.19),
            q: T::of(2.35),
            t_amb: T::of(298.0),
            mttf_hours: T::of(3.0 * 8760.0),
            hours_per_year: T::of(8760.0),
            afr_floor: T::of(1e-6),
        }
    }
}

impl<T: Scalar> ReliabilityParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.afr_floor > T::zero()) {
            return Err(Error::InvalidSpec("afr_floor must be positive".into()));
        }
        if !(self.q > T::zero()) {
            return Err(Error::InvalidSpec(
                "Coffin-Manson exponent must be positive".into(),
            ));
        }
        if !(self.mttf_hours > T::zero()) || !(self.hours_per_year > T::zero()) {
            return Err(Error::InvalidSpec(
                "MTTF and hours per year must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Migration energy `kappa * mem_gb * hops(src, dst)` in watt-hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationCostModel<T> {
    /// Wh per GB per hop.
    pub kappa: T,
    /// Symmetric `|P| x |P|` hop matrix with a zero diagonal.
    pub distance: Vec<Vec<u8>>,
}

impl<T: Scalar> MigrationCostModel<T> {
    /// Hop distances of a fat-tree: 0 same PM, 1 same rack, 2 same pod, 3 across pods.
    pub fn fat_tree(dc: &DatacenterState<T>, kappa: T, racks_per_pod: usize) -> Self {
        let per_pod = racks_per_pod.max(1);
        let n = dc.n_pms();
        let distance = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let (rj, rk) = (dc.rack_of(j), dc.rack_of(k));
                        if j == k {
                            0
                        } else if rj == rk {
                            1
                        } else if rj / per_pod == rk / per_pod {
                            2
                        } else {
                            3
                        }
                    })
                    .collect()
            })
            .collect();
        Self { kappa, distance }
    }

    pub fn validate(&self, n_pms: usize) -> Result<()> {
        if self.distance.len() != n_pms || self.distance.iter().any(|r| r.len() != n_pms) {
            return Err(Error::DimensionMismatch {
                what: "migration distance matrix",
                expected: n_pms,
                actual: self.distance.len(),
            });
        }
        for j in 0..n_pms {
            if self.distance[j][j] != 0 {
                return Err(Error::InvalidSpec(format!(
                    "hop distance d({j},{j}) must be 0"
                )));
            }
            for k in 0..n_pms {
                if self.distance[j][k] != self.distance[k][j] || self.distance[j][k] > 3 {
                    return Err(Error::InvalidSpec(format!(
                        "hop distance d({j},{k}) must be symmetric and at most 3"
                    )));
                }
            }
        }
        if !(self.kappa >= T::zero()) {
            return Err(Error::InvalidSpec("kappa must be non-negative".into()));
        }
        Ok(())
    }

    /// Energy of moving `vm` from `src` to `dst`.
    pub fn cost(&self, vm: &VmSpec<T>, src: usize, dst: usize) -> T {
        self.kappa * vm.mem_gb * T::of(f64::from(self.distance[src][dst]))
    }

    pub fn max_hops(&self) -> u8 {
        self.distance.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Raw cost components of one consolidation decision plus its weighted value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CostBreakdown<T> {
    pub c_ene: T,
    pub c_rel: T,
    pub g_rel: T,
    pub pm_energy_wh: T,
    pub rack_energy_wh: T,
    pub mig_energy_wh: T,
    pub c_ene_hat: T,
    pub c_rel_hat: T,
    pub g_rel_hat: T,
    pub objective: T,
}

/// Normalization constants of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<T> {
    pub c_ene_ub: T,
    pub c_rel_ub: T,
    pub g_rel_ub: T,
    /// Fewest PMs able to hold the aggregate CPU demand.
    pub packing_floor: usize,
}

impl<T: Scalar> Bounds<T> {
    /// Bounds for a decision taken from `s_prev`.
    pub fn compute(
        dc: &DatacenterState<T>,
        s_prev: &Placement,
        weights: &CostWeights<T>,
        params: &ReliabilityParams<T>,
        mig: &MigrationCostModel<T>,
    ) -> Result<Self> {
        let rel = reliability_bounds_from(dc, s_prev, weights, params)?;
        Ok(Self {
            c_ene_ub: energy_upper_bound(dc, weights, mig),
            c_rel_ub: rel.c_rel_ub,
            g_rel_ub: rel.g_rel_ub,
            packing_floor: rel.packing_floor,
        })
    }
}

/// `value / bound`, defined as zero when the bound vanishes.
pub fn normalized<T: Scalar>(value: T, bound: T) -> T {
    if bound > T::zero() {
        value / bound
    } else {
        T::zero()
    }
}

fn wh_to_kwh<T: Scalar>(wh: T) -> T {
    wh / T::of(1000.0)
}

/// Linear power model: idle floor `k_idle * p_max` plus a utilization-proportional part.
pub fn pm_power<T: Scalar>(theta: T, pm: &PmSpec<T>) -> Result<T> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::OutOfDomain {
            what: "utilization",
            value: theta.as_f64(),
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(affine_power(theta, pm))
}

pub(crate) fn affine_power<T: Scalar>(theta: T, pm: &PmSpec<T>) -> T {
    pm.k_idle * pm.p_max + (T::one() - pm.k_idle) * pm.p_max * theta
}

/// Energy of `pm` over one slot; zero when it stays or goes offline.
pub fn pm_energy<T: Scalar>(
    pm: &PmSpec<T>,
    flags: &TransitionFlags,
    theta: T,
    tau: T,
) -> Result<T> {
    if flags.off_in_next(pm.id) {
        return Ok(T::zero());
    }
    Ok(tau * pm_power(theta, pm)?)
}

pub fn rack_energy<T: Scalar>(flags: &TransitionFlags, racks: &[RackSpec<T>], tau: T) -> T {
    racks
        .iter()
        .filter(|r| flags.y[r.id])
        .map(|r| tau * r.power())
        .sum()
}

pub fn migration_energy<T: Scalar>(
    s_prev: &Placement,
    s_next: &Placement,
    model: &MigrationCostModel<T>,
    vms: &[VmSpec<T>],
) -> T {
    vms.iter()
        .filter_map(|vm| {
            let src = s_prev.host(vm.id)?;
            let dst = s_next.host(vm.id)?;
            Some(model.cost(vm, src, dst))
        })
        .sum()
}

/// Energy components in watt-hours and their dollar cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCost<T> {
    pub pm_wh: T,
    pub rack_wh: T,
    pub mig_wh: T,
    pub dollars: T,
}

pub fn total_energy_cost<T: Scalar>(
    s_prev: &Placement,
    s_next: &Placement,
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    mig: &MigrationCostModel<T>,
) -> Result<EnergyCost<T>> {
    let flags = crate::domain::derive_transition_flags(s_prev, s_next, dc)?;
    energy_from_flags(s_prev, s_next, &flags, dc, weights, mig)
}

fn energy_from_flags<T: Scalar>(
    s_prev: &Placement,
    s_next: &Placement,
    flags: &TransitionFlags,
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    mig: &MigrationCostModel<T>,
) -> Result<EnergyCost<T>> {
    let mut pm_wh = T::zero();
    for pm in &dc.pms {
        let theta = dc.load(s_next, pm.id, Resource::Cpu) / pm.capacity.cpu;
        pm_wh = pm_wh + pm_energy(pm, flags, theta, weights.tau)?;
    }
    let rack_wh = rack_energy(flags, &dc.racks, weights.tau);
    let mig_wh = migration_energy(s_prev, s_next, mig, &dc.vms);
    Ok(EnergyCost {
        pm_wh,
        rack_wh,
        mig_wh,
        dollars: weights.rho * wh_to_kwh(pm_wh + rack_wh + mig_wh),
    })
}

fn raw_afr<T: Scalar>(f: T, params: &ReliabilityParams<T>) -> T {
    params.delta * T::of(1e-5) * f * f - params.varrho * T::of(1e-4) * f
        + params.varphi * T::of(1e-4)
}

/// Annual failure rate of a disk after `f` start/stop cycles, clamped at `afr_floor`.
pub fn afr<T: Scalar>(f: u32, params: &ReliabilityParams<T>) -> Result<T> {
    if f > MAX_CYCLE_COUNT {
        return Err(Error::OutOfDomain {
            what: "cycle count",
            value: f64::from(f),
            min: 0.0,
            max: f64::from(MAX_CYCLE_COUNT),
        });
    }
    Ok(raw_afr(T::of(f64::from(f)), params).max(params.afr_floor))
}

/// Hours of disk MTTF consumed by one more start/stop cycle at count `f`.
pub fn disk_cycle_cost<T: Scalar>(f: u32, params: &ReliabilityParams<T>) -> Result<T> {
    if f >= MAX_CYCLE_COUNT {
        return Err(Error::OutOfDomain {
            what: "cycle count",
            value: f64::from(f),
            min: 0.0,
            max: f64::from(MAX_CYCLE_COUNT - 1),
        });
    }
    let h = params.hours_per_year;
    let cost = h / afr(f, params)? - h / afr(f + 1, params)?;
    Ok(cost.max(T::zero()))
}

/// Hours of CPU MTTF consumed by one thermal cycle swinging from `t_amb` to `t_avg`.
pub fn cpu_cycle_cost<T: Scalar>(t_avg: T, params: &ReliabilityParams<T>) -> Result<T> {
    let swing = t_avg - params.t_amb;
    if !(swing > T::zero()) {
        return Err(Error::OutOfDomain {
            what: "average CPU temperature",
            value: t_avg.as_f64(),
            min: params.t_amb.as_f64(),
            max: f64::INFINITY,
        });
    }
    Ok(params.mttf_hours * swing.powf(-params.q))
}

/// Disk plus CPU cost, in hours, of shutting `pm` down after a slot at utilization `theta_t`.
pub fn shutdown_cost_hours<T: Scalar>(
    pm: &PmSpec<T>,
    theta_t: T,
    params: &ReliabilityParams<T>,
) -> Result<T> {
    Ok(
        disk_cycle_cost(pm.cycle_count, params)?
            + cpu_cycle_cost(pm.temp.average(theta_t), params)?,
    )
}

pub fn total_reliability_cost<T: Scalar>(
    flags: &TransitionFlags,
    s_prev: &Placement,
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
) -> Result<T> {
    let mut hours = T::zero();
    for pm in dc.pms.iter().filter(|pm| flags.f10[pm.id]) {
        let theta_t = dc.load(s_prev, pm.id, Resource::Cpu) / pm.capacity.cpu;
        hours = hours + shutdown_cost_hours(pm, theta_t, params)?;
    }
    Ok(weights.omega * hours)
}

pub fn reliability_gain<T: Scalar>(flags: &TransitionFlags, weights: &CostWeights<T>) -> T {
    weights.omega * weights.tau * T::of_usize(flags.off_count())
}

/// Energy cost ceiling: every rack powered, the VMs spread as evenly as
/// possible over all PMs, and every VM migrating over the longest path.
pub fn energy_upper_bound<T: Scalar>(
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    mig: &MigrationCostModel<T>,
) -> T {
    let racks_wh: T = dc.racks.iter().map(RackSpec::power).sum();
    let pm_max = max_pm_power(dc);
    let max_mem = dc.vms.iter().map(|v| v.mem_gb).fold(T::zero(), T::max);
    let mig_max = mig.kappa * max_mem * T::of(f64::from(mig.max_hops()));
    weights.rho * wh_to_kwh(weights.tau * (racks_wh + pm_max) + T::of_usize(dc.n_vms()) * mig_max)
}

/// Aggregate PM draw when `|V|` VMs are split `floor(|V|/|P|)` per PM with
/// `eps` PMs taking one more. Never below the all-on idle draw plus the
/// steepest slope applied to the whole CPU demand.
fn max_pm_power<T: Scalar>(dc: &DatacenterState<T>) -> T {
    let n_pms = dc.n_pms();
    if n_pms == 0 {
        return T::zero();
    }
    let n_vms = dc.n_vms();
    let per_pm = n_vms / n_pms;
    let eps = n_vms - per_pm * n_pms;
    let r_cpu = dc.vms.iter().map(|v| v.demand.cpu).fold(T::zero(), T::max);
    let slope = |pm: &PmSpec<T>| (T::one() - pm.k_idle) * pm.p_max / pm.capacity.cpu;
    let mut order: Vec<usize> = (0..n_pms).collect();
    order.sort_by(|&a, &b| {
        slope(&dc.pms[b])
            .partial_cmp(&slope(&dc.pms[a]))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let balanced: T = order
        .iter()
        .enumerate()
        .map(|(rank, &j)| {
            let count = per_pm + usize::from(rank < eps);
            let pm = &dc.pms[j];
            affine_power(T::of_usize(count) * r_cpu / pm.capacity.cpu, pm)
        })
        .sum();
    let idle: T = dc.pms.iter().map(|pm| pm.k_idle * pm.p_max).sum();
    let steepest = dc.pms.iter().map(slope).fold(T::zero(), T::max);
    balanced.max(idle + steepest * dc.total_demand(Resource::Cpu))
}

/// Fewest PMs whose combined CPU capacity covers the total CPU demand.
pub fn packing_floor<T: Scalar>(dc: &DatacenterState<T>) -> Result<usize> {
    let demand = dc.total_demand(Resource::Cpu);
    let mut caps: Vec<T> = dc.pms.iter().map(|pm| pm.capacity.cpu).collect();
    caps.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let slack = T::tie_tolerance() * demand.max(T::one());
    let mut covered = T::zero();
    for (k, cap) in caps.iter().enumerate() {
        if covered + slack >= demand {
            return Ok(k);
        }
        covered = covered + *cap;
    }
    if covered + slack >= demand {
        Ok(caps.len())
    } else {
        Err(Error::Infeasible(format!(
            "CPU demand {demand} exceeds total capacity {covered}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityBounds<T> {
    pub c_rel_ub: T,
    pub g_rel_ub: T,
    pub packing_floor: usize,
}

/// Ceilings on `C^rel` and `G^rel` for a decision taken from the current mapping.
pub fn reliability_bounds<T: Scalar>(
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
) -> Result<ReliabilityBounds<T>> {
    reliability_bounds_from(dc, &dc.current, weights, params)
}

fn reliability_bounds_from<T: Scalar>(
    dc: &DatacenterState<T>,
    s_prev: &Placement,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
) -> Result<ReliabilityBounds<T>> {
    let floor = packing_floor(dc)?;
    let can_stop = dc.n_pms() - floor;
    // At most `can_stop` PMs go offline; only PMs online in `t` pay a stop.
    let mut costs = Vec::new();
    for pm in &dc.pms {
        if s_prev.is_active(pm.id) {
            let theta_t = dc.load(s_prev, pm.id, Resource::Cpu) / pm.capacity.cpu;
            costs.push(shutdown_cost_hours(pm, theta_t, params)?);
        }
    }
    costs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let hours: T = costs.iter().take(can_stop).copied().sum();
    Ok(ReliabilityBounds {
        c_rel_ub: weights.omega * hours,
        g_rel_ub: T::of_usize(can_stop) * weights.omega * weights.tau,
        packing_floor: floor,
    })
}

/// Weighted, normalized cost of moving from `s_prev` to `s_next`.
pub fn objective<T: Scalar>(
    s_prev: &Placement,
    s_next: &Placement,
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
) -> Result<(T, CostBreakdown<T>)> {
    weights.validate()?;
    params.validate()?;
    mig.validate(dc.n_pms())?;
    let bounds = Bounds::compute(dc, s_prev, weights, params, mig)?;
    objective_with_bounds(s_prev, s_next, dc, weights, params, mig, &bounds)
}

/// [`objective`] with precomputed normalization constants.
pub fn objective_with_bounds<T: Scalar>(
    s_prev: &Placement,
    s_next: &Placement,
    dc: &DatacenterState<T>,
    weights: &CostWeights<T>,
    params: &ReliabilityParams<T>,
    mig: &MigrationCostModel<T>,
    bounds: &Bounds<T>,
) -> Result<(T, CostBreakdown<T>)> {
    for p in [s_prev, s_next] {
        let report = validate_placement(p, dc)?;
        if !report.is_valid() {
            return Err(Error::InvalidPlacement(report));
        }
    }
    let flags = flags_unchecked(s_prev, s_next, dc);
    let energy = energy_from_flags(s_prev, s_next, &flags, dc, weights, mig)?;
    let c_rel = total_reliability_cost(&flags, s_prev, dc, weights, params)?;
    let g_rel = reliability_gain(&flags, weights);
    let c_ene_hat = normalized(energy.dollars, bounds.c_ene_ub);
    let c_rel_hat = normalized(c_rel, bounds.c_rel_ub);
    let g_rel_hat = normalized(g_rel, bounds.g_rel_ub);
    let value = weights.alpha * c_ene_hat + weights.beta * c_rel_hat - weights.gamma * g_rel_hat;
    let breakdown = CostBreakdown {
        c_ene: energy.dollars,
        c_rel,
        g_rel,
        pm_energy_wh: energy.pm_wh,
        rack_energy_wh: energy.rack_wh,
        mig_energy_wh: energy.mig_wh,
        c_ene_hat,
        c_rel_hat,
        g_rel_hat,
        objective: value,
    };
    Ok((value, breakdown))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::derive_transition_flags;
    use crate::testkit::{eval_dc, eval_pm};
    use approx::assert_relative_eq;

    #[test]
    fn power_model_examples() {
        let pm = eval_pm(0, 0);
        assert_relative_eq!(pm_power(1.0, &pm).unwrap(), 300.0);
        assert_relative_eq!(pm_power(0.0, &pm).unwrap(), 210.0);
        assert_relative_eq!(pm_power(0.5, &pm).unwrap(), 255.0);
        assert!(pm_power(1.01, &pm).is_err());
        assert!(pm_power(-0.1, &pm).is_err());
    }

    #[test]
    fn pm_energy_examples() {
        // PM 0 online in both slots, PM 1 turns off, PM 2 stays off.
        let dc = eval_dc(&[0, 1], 4, 2);
        let next = Placement::from_hosts(&[0, 0], 4).unwrap();
        let flags = derive_transition_flags(&dc.current, &next, &dc).unwrap();
        assert_relative_eq!(pm_energy(&dc.pms[0], &flags, 0.5, 0.5).unwrap(), 127.5);
        assert_eq!(pm_energy(&dc.pms[1], &flags, 0.0, 0.5).unwrap(), 0.0);
        assert_eq!(pm_energy(&dc.pms[2], &flags, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn rack_energy_examples() {
        let dc = eval_dc(&[0, 4, 8], 12, 3);
        let flags = derive_transition_flags(&dc.current, &dc.current, &dc).unwrap();
        assert_relative_eq!(rack_energy(&flags, &dc.racks, 0.5), 1974.0);
        let one = TransitionFlags {
            y: vec![true, false, false],
            ..flags.clone()
        };
        assert_relative_eq!(rack_energy(&one, &dc.racks, 0.5), 658.0);
        let none = TransitionFlags {
            y: vec![false; 3],
            ..flags
        };
        assert_eq!(rack_energy(&none, &dc.racks, 0.5), 0.0);
    }

    #[test]
    fn migration_energy_examples() {
        let dc = eval_dc(&[0], 8, 4);
        let mig = MigrationCostModel::fat_tree(&dc, 10.0, 2);
        let stay = dc.current.clone();
        assert_eq!(migration_energy(&dc.current, &stay, &mig, &dc.vms), 0.0);
        let intra = Placement::from_hosts(&[1], 8).unwrap();
        assert_relative_eq!(
            migration_energy(&dc.current, &intra, &mig, &dc.vms),
            6.12,
            epsilon = 1e-12
        );
        let cross = Placement::from_hosts(&[7], 8).unwrap();
        assert_relative_eq!(
            migration_energy(&dc.current, &cross, &mig, &dc.vms),
            18.36,
            epsilon = 1e-12
        );
    }

    #[test]
    fn energy_cost_examples() {
        // One 1000-MIPS VM keeps PM 0 at theta 0.5; the second PM of the rack stays off.
        let mut dc = eval_dc(&[0], 2, 1);
        dc.vms[0].demand.cpu = 1000.0;
        let w = CostWeights::default();
        let mig = MigrationCostModel::fat_tree(&dc, 10.0, 2);
        let e = total_energy_cost(&dc.current, &dc.current, &dc, &w, &mig).unwrap();
        assert_relative_eq!(e.dollars, 0.07855, epsilon = 1e-12);
        let moved = Placement::from_hosts(&[1], 2).unwrap();
        let e = total_energy_cost(&dc.current, &moved, &dc, &w, &mig).unwrap();
        assert_relative_eq!(e.dollars, 0.07855 + 0.1 * 6.12 / 1000.0, epsilon = 1e-12);
        let mut none = eval_dc(&[], 2, 1);
        none.vms.clear();
        let e = total_energy_cost(&none.current, &none.current, &none, &w, &mig).unwrap();
        assert_eq!(e.dollars, 0.0);
    }

    #[test]
    fn afr_examples() {
        let p = ReliabilityParams::<f64>::default();
        assert_relative_eq!(afr(0, &p).unwrap(), 1.19e-4, max_relative = 1e-12);
        assert_relative_eq!(afr(100, &p).unwrap(), 0.140219, max_relative = 1e-12);
        assert_eq!(afr(4, &p).unwrap(), p.afr_floor);
        assert!(afr(1601, &p).is_err());
    }

    #[test]
    fn disk_cost_examples() {
        let p = ReliabilityParams::<f64>::default();
        assert_relative_eq!(
            disk_cycle_cost(100, &p).unwrap(),
            1.277e3,
            max_relative = 1e-3
        );
        assert_eq!(disk_cycle_cost(3, &p).unwrap(), 0.0);
        assert!(disk_cycle_cost(1000, &p).unwrap() < disk_cycle_cost(100, &p).unwrap());
        assert!(disk_cycle_cost(1600, &p).is_err());
    }

    #[test]
    fn cpu_cost_examples() {
        let p = ReliabilityParams::<f64>::default();
        assert_relative_eq!(
            cpu_cycle_cost(323.0, &p).unwrap(),
            13.6,
            max_relative = 5e-3
        );
        assert_relative_eq!(cpu_cycle_cost(299.0, &p).unwrap(), 26280.0);
        assert!(cpu_cycle_cost(330.0, &p).unwrap() < cpu_cycle_cost(320.0, &p).unwrap());
        assert!(cpu_cycle_cost(298.0, &p).is_err());
    }

    #[test]
    fn utility_worked_example() {
        assert_relative_eq!(
            utility_per_hour(5000.0, 3.0, 8760.0),
            0.1902,
            max_relative = 1e-3
        );
    }

    #[test]
    fn reliability_gain_examples() {
        let dc = eval_dc(&[0, 1, 2, 3], 4, 1);
        let w = CostWeights {
            omega: 0.1902,
            ..CostWeights::default()
        };
        let all_on = derive_transition_flags(&dc.current, &dc.current, &dc).unwrap();
        assert_eq!(reliability_gain(&all_on, &w), 0.0);
        let off = TransitionFlags {
            f10: vec![true; 4],
            ..all_on
        };
        assert_relative_eq!(reliability_gain(&off, &w), 0.3804, epsilon = 1e-12);
    }

    #[test]
    fn reliability_cost_of_one_stop() {
        // cycle count 100 with t_avg 323 K prices about 1277 h + 13.6 h.
        let mut dc = eval_dc(&[0, 1], 2, 1);
        dc.pms[0].cycle_count = 100;
        dc.pms[0].temp = crate::domain::TempModel {
            t_idle: 323.0,
            t_max: 323.0,
        };
        let w = CostWeights {
            omega: 0.1902,
            ..CostWeights::default()
        };
        let p = ReliabilityParams::default();
        let next = Placement::from_hosts(&[1, 1], 2).unwrap();
        let flags = derive_transition_flags(&dc.current, &next, &dc).unwrap();
        let c = total_reliability_cost(&flags, &dc.current, &dc, &w, &p).unwrap();
        assert_relative_eq!(c, 0.1902 * (1277.0 + 13.6), max_relative = 2e-3);
        let none = derive_transition_flags(&dc.current, &dc.current, &dc).unwrap();
        assert_eq!(
            total_reliability_cost(&none, &dc.current, &dc, &w, &p).unwrap(),
            0.0
        );
    }

    #[test]
    fn energy_bound_balanced_split() {
        // 3 VMs on 2 PMs: one PM carries two VMs (theta 0.5), the other one (0.25).
        let dc = eval_dc(&[0, 0, 1], 2, 1);
        let w = CostWeights::default();
        let mig = MigrationCostModel::fat_tree(&dc, 0.0, 2);
        let expected = 0.1 * 0.5 * (1316.0 + 255.0 + 232.5) / 1000.0;
        assert_relative_eq!(energy_upper_bound(&dc, &w, &mig), expected, epsilon = 1e-12);
    }

    #[test]
    fn energy_bound_without_vms() {
        let mut dc = eval_dc(&[], 4, 2);
        dc.vms.clear();
        let w = CostWeights::default();
        let mig = MigrationCostModel::fat_tree(&dc, 10.0, 2);
        let expected = 0.1 * 0.5 * (2.0 * 1316.0 + 4.0 * 210.0) / 1000.0;
        assert_relative_eq!(energy_upper_bound(&dc, &w, &mig), expected, epsilon = 1e-12);
    }

    #[test]
    fn packing_floor_of_evaluation_scenario() {
        let hosts: Vec<usize> = (0..52).map(|v| v % 32).collect();
        let dc = eval_dc(&hosts, 32, 8);
        let w = CostWeights {
            omega: 0.1902,
            ..CostWeights::default()
        };
        let rb = reliability_bounds(&dc, &w, &ReliabilityParams::default()).unwrap();
        assert_eq!(rb.packing_floor, 13);
        assert_relative_eq!(rb.g_rel_ub, 19.0 * 0.1902 * 0.5, epsilon = 1e-12);
        assert!(1.52 <= rb.g_rel_ub);
    }

    #[test]
    fn bounds_vanish_when_demand_fills_every_pm() {
        let dc = eval_dc(&[0, 0, 0, 0, 1, 1, 1, 1], 2, 1);
        let rb = reliability_bounds(&dc, &CostWeights::default(), &ReliabilityParams::default())
            .unwrap();
        assert_eq!(rb.packing_floor, 2);
        assert_eq!(rb.c_rel_ub, 0.0);
        assert_eq!(rb.g_rel_ub, 0.0);
    }

    #[test]
    fn infeasible_demand_is_an_error() {
        let mut dc = eval_dc(&[0, 1], 2, 1);
        dc.pms[1].capacity.cpu = 100.0;
        dc.vms[1].demand.cpu = 100.0;
        dc.vms[0].demand.cpu = 2000.0;
        dc.pms[0].capacity.cpu = 1900.0;
        assert!(matches!(packing_floor(&dc), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_weights_give_zero_objective() {
        let dc = eval_dc(&[0, 1, 2], 4, 2);
        let w = CostWeights::default().with_factors(0.0, 0.0, 0.0);
        let mig = MigrationCostModel::fat_tree(&dc, 10.0, 2);
        let next = Placement::from_hosts(&[3, 3, 3], 4).unwrap();
        let (v, _) = objective(
            &dc.current,
            &next,
            &dc,
            &w,
            &ReliabilityParams::default(),
            &mig,
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn gain_only_objective_is_at_least_minus_one() {
        let dc = eval_dc(&[0, 1, 2, 3], 4, 2);
        let w = CostWeights::default().with_factors(0.0, 0.0, 1.0);
        let mig = MigrationCostModel::fat_tree(&dc, 10.0, 2);
        let packed = Placement::from_hosts(&[0, 0, 0, 0], 4).unwrap();
        let (v, b) = objective(
            &dc.current,
            &packed,
            &dc,
            &w,
            &ReliabilityParams::default(),
            &mig,
        )
        .unwrap();
        assert_relative_eq!(v, -1.0, epsilon = 1e-12);
        assert_relative_eq!(v, -b.g_rel_hat);
    }

    #[test]
    fn single_precision_evaluates_the_same_formulas() {
        let p = ReliabilityParams::<f32>::default();
        assert!((afr(100, &p).unwrap() - 0.140219).abs() < 1e-6);
    }
}
