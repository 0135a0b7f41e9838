//! Datacenter data model: racks, physical machines, virtual machines and the
//! VM-to-PM mapping matrices for two consecutive time slots.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Resource dimension a VM consumes and a PM offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    /// MIPS.
    Cpu,
    /// MB.
    Ram,
    /// Mbps.
    Bw,
}

impl Resource {
    pub const ALL: [Resource; 3] = [Resource::Cpu, Resource::Ram, Resource::Bw];
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Cpu => "cpu",
            Resource::Ram => "ram",
            Resource::Bw => "bw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Resources<T> {
    pub cpu: T,
    pub ram: T,
    pub bw: T,
}

impl<T: Scalar> Resources<T> {
    pub fn new(cpu: T, ram: T, bw: T) -> Self {
        Self { cpu, ram, bw }
    }

    pub fn get(&self, r: Resource) -> T {
        match r {
            Resource::Cpu => self.cpu,
            Resource::Ram => self.ram,
            Resource::Bw => self.bw,
        }
    }
}

/// Affine utilization-to-temperature map of a PM's CPU, in kelvin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempModel<T> {
    pub t_idle: T,
    pub t_max: T,
}

impl<T: Scalar> TempModel<T> {
    /// Average CPU temperature at utilization `theta`.
    pub fn average(&self, theta: T) -> T {
        self.t_idle + (self.t_max - self.t_idle) * theta
    }
}

impl<T: Scalar> Default for TempModel<T> {
    fn default() -> Self {
        Self {
            t_idle: T::of(318.0),
            t_max: T::of(350.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmSpec<T> {
    pub id: usize,
    pub rack_id: usize,
    pub capacity: Resources<T>,
    /// Peak power draw in watts.
    pub p_max: T,
    /// Idle draw as a fraction of `p_max`.
    pub k_idle: T,
    /// Completed disk start/stop cycles.
    pub cycle_count: u32,
    pub temp: TempModel<T>,
}

impl<T: Scalar> PmSpec<T> {
    pub fn cpu_capacity(&self) -> T {
        self.capacity.cpu
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmSpec<T> {
    pub id: usize,
    pub demand: Resources<T>,
    /// Memory footprint moved by a live migration, in GB.
    pub mem_gb: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RackSpec<T> {
    pub id: usize,
    pub pm_ids: Vec<usize>,
    /// Top-of-rack switch draw in watts.
    pub tor_power: T,
    pub cooling_power: T,
}

impl<T: Scalar> RackSpec<T> {
    /// Draw of the rack infrastructure while any of its PMs is powered.
    pub fn power(&self) -> T {
        self.tor_power + self.cooling_power
    }
}

/// Binary VM-to-PM mapping matrix, row-major `|V| x |P|`.
///
/// A placement may be invalid (rows not summing to one); use
/// [`validate_placement`] before trusting [`Placement::host`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    n_vms: usize,
    n_pms: usize,
    cells: Vec<bool>,
}

impl Placement {
    pub fn empty(n_vms: usize, n_pms: usize) -> Self {
        Self {
            n_vms,
            n_pms,
            cells: vec![false; n_vms * n_pms],
        }
    }

    /// Builds the matrix from one host index per VM.
    pub fn from_hosts(hosts: &[usize], n_pms: usize) -> Result<Self> {
        let mut p = Self::empty(hosts.len(), n_pms);
        for (vm, &pm) in hosts.iter().enumerate() {
            if pm >= n_pms {
                return Err(Error::DimensionMismatch {
                    what: "host index",
                    expected: n_pms,
                    actual: pm,
                });
            }
            p.set(vm, pm, true);
        }
        Ok(p)
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_pms = rows.first().map_or(0, Vec::len);
        let mut p = Self::empty(rows.len(), n_pms);
        for (vm, row) in rows.iter().enumerate() {
            if row.len() != n_pms {
                return Err(Error::DimensionMismatch {
                    what: "placement row length",
                    expected: n_pms,
                    actual: row.len(),
                });
            }
            for (pm, &cell) in row.iter().enumerate() {
                p.set(vm, pm, cell != 0);
            }
        }
        Ok(p)
    }

    pub fn n_vms(&self) -> usize {
        self.n_vms
    }

    pub fn n_pms(&self) -> usize {
        self.n_pms
    }

    pub fn get(&self, vm: usize, pm: usize) -> bool {
        self.cells[vm * self.n_pms + pm]
    }

    pub fn set(&mut self, vm: usize, pm: usize, on: bool) {
        self.cells[vm * self.n_pms + pm] = on;
    }

    pub fn row(&self, vm: usize) -> &[bool] {
        &self.cells[vm * self.n_pms..(vm + 1) * self.n_pms]
    }

    /// Host of `vm` if its row has exactly one entry.
    pub fn host(&self, vm: usize) -> Option<usize> {
        let row = self.row(vm);
        let mut found = None;
        for (pm, &on) in row.iter().enumerate() {
            if on {
                if found.is_some() {
                    return None;
                }
                found = Some(pm);
            }
        }
        found
    }

    /// Host vector (the assignment vector used for lexicographic tie-breaks).
    pub fn hosts(&self) -> Option<Vec<usize>> {
        (0..self.n_vms).map(|vm| self.host(vm)).collect()
    }

    pub fn hosted_count(&self, pm: usize) -> usize {
        (0..self.n_vms).filter(|&vm| self.get(vm, pm)).count()
    }

    pub fn is_active(&self, pm: usize) -> bool {
        (0..self.n_vms).any(|vm| self.get(vm, pm))
    }

    /// Number of VMs whose host differs between `self` and `next`.
    pub fn migrations_to(&self, next: &Placement) -> usize {
        (0..self.n_vms.min(next.n_vms))
            .filter(|&vm| self.row(vm) != next.row(vm))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Unassigned {
        vm: usize,
    },
    MultiplyAssigned {
        vm: usize,
        hosts: usize,
    },
    Overcommitted {
        pm: usize,
        resource: Resource,
        demand: f64,
        capacity: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unassigned { vm } => write!(f, "VM {vm} unassigned"),
            Violation::MultiplyAssigned { vm, hosts } => {
                write!(f, "VM {vm} assigned to {hosts} PMs")
            }
            Violation::Overcommitted {
                pm,
                resource,
                demand,
                capacity,
            } => write!(f, "PM {pm} {resource} overcommitted: {demand} > {capacity}"),
        }
    }
}

/// Every violated row sum and capacity; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Per-PM and per-rack indicators derived from a pair of mappings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionFlags {
    /// Offline in `t` and `t+1`.
    pub f00: Vec<bool>,
    /// Online in `t`, offline in `t+1`.
    pub f10: Vec<bool>,
    /// PM hosts at least one VM in `t+1`.
    pub x: Vec<bool>,
    /// Rack has at least one active PM in `t+1`.
    pub y: Vec<bool>,
}

impl TransitionFlags {
    pub fn off_in_next(&self, pm: usize) -> bool {
        self.f00[pm] || self.f10[pm]
    }

    pub fn active_pms(&self) -> usize {
        self.x.iter().filter(|&&b| b).count()
    }

    pub fn active_racks(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }

    pub fn stopped_pms(&self) -> Vec<usize> {
        (0..self.f10.len()).filter(|&i| self.f10[i]).collect()
    }

    pub fn off_count(&self) -> usize {
        (0..self.f00.len()).filter(|&i| self.off_in_next(i)).count()
    }
}

/// State of a PM across one slot boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmTransition {
    OffOff,
    OffOn,
    OnOff,
    OnOn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatacenterState<T> {
    pub racks: Vec<RackSpec<T>>,
    pub pms: Vec<PmSpec<T>>,
    pub vms: Vec<VmSpec<T>>,
    /// Mapping `S'` in force during slot `t`.
    pub current: Placement,
    pub slot_index: u64,
    /// Resource types subject to the capacity constraint.
    pub packed: Vec<Resource>,
}

impl<T: Scalar> DatacenterState<T> {
    /// Default packing set: CPU and RAM.
    pub const DEFAULT_PACKED: [Resource; 2] = [Resource::Cpu, Resource::Ram];

    pub fn new(
        racks: Vec<RackSpec<T>>,
        pms: Vec<PmSpec<T>>,
        vms: Vec<VmSpec<T>>,
        current: Placement,
    ) -> Result<Self> {
        let dc = Self {
            racks,
            pms,
            vms,
            current,
            slot_index: 0,
            packed: Self::DEFAULT_PACKED.to_vec(),
        };
        dc.check()?;
        Ok(dc)
    }

    pub fn with_packed(mut self, packed: Vec<Resource>) -> Result<Self> {
        self.packed = packed;
        self.check()?;
        Ok(self)
    }

    /// Same layout and cycle counters with a new `S'`.
    pub fn with_current(&self, current: Placement) -> Result<Self> {
        let mut next = self.clone();
        next.current = current;
        let report = validate_placement(&next.current, &next)?;
        if !report.is_valid() {
            return Err(Error::InvalidPlacement(report));
        }
        Ok(next)
    }

    fn check(&self) -> Result<()> {
        for (i, rack) in self.racks.iter().enumerate() {
            if rack.id != i {
                return Err(Error::InvalidSpec(format!(
                    "rack at position {i} has id {}",
                    rack.id
                )));
            }
            if rack.pm_ids.is_empty() {
                return Err(Error::InvalidSpec(format!("rack {i} holds no PM")));
            }
        }
        let mut owner = vec![None; self.pms.len()];
        for rack in &self.racks {
            for &pm in &rack.pm_ids {
                let slot = owner.get_mut(pm).ok_or_else(|| {
                    Error::InvalidSpec(format!("rack {} lists unknown PM {pm}", rack.id))
                })?;
                if slot.is_some() {
                    return Err(Error::InvalidSpec(format!("PM {pm} listed in two racks")));
                }
                *slot = Some(rack.id);
            }
        }
        for (i, pm) in self.pms.iter().enumerate() {
            if pm.id != i {
                return Err(Error::InvalidSpec(format!(
                    "PM at position {i} has id {}",
                    pm.id
                )));
            }
            if owner[i] != Some(pm.rack_id) {
                return Err(Error::InvalidSpec(format!(
                    "PM {i} claims rack {} but is not listed there",
                    pm.rack_id
                )));
            }
            if !(pm.capacity.cpu > T::zero()) {
                return Err(Error::InvalidSpec(format!(
                    "PM {i} has non-positive CPU capacity"
                )));
            }
            if pm.k_idle < T::zero() || pm.k_idle > T::one() {
                return Err(Error::InvalidSpec(format!(
                    "PM {i} idle fraction outside [0, 1]"
                )));
            }
            if pm.p_max < T::zero() {
                return Err(Error::InvalidSpec(format!(
                    "PM {i} has negative peak power"
                )));
            }
            if pm.temp.t_idle > pm.temp.t_max {
                return Err(Error::InvalidSpec(format!(
                    "PM {i} idle temperature above max"
                )));
            }
        }
        for (i, vm) in self.vms.iter().enumerate() {
            if vm.id != i {
                return Err(Error::InvalidSpec(format!(
                    "VM at position {i} has id {}",
                    vm.id
                )));
            }
            if vm.mem_gb < T::zero() {
                return Err(Error::InvalidSpec(format!("VM {i} has negative memory")));
            }
            for r in Resource::ALL {
                let d = vm.demand.get(r);
                if d < T::zero() {
                    return Err(Error::InvalidSpec(format!(
                        "VM {i} has negative {r} demand"
                    )));
                }
                if self.packed.contains(&r) {
                    let max_cap = self
                        .pms
                        .iter()
                        .map(|p| p.capacity.get(r))
                        .fold(T::neg_infinity(), T::max);
                    if d > max_cap {
                        return Err(Error::InvalidSpec(format!(
                            "VM {i} {r} demand {d} exceeds every PM capacity"
                        )));
                    }
                }
            }
        }
        let report = validate_placement(&self.current, self)?;
        if !report.is_valid() {
            return Err(Error::InvalidPlacement(report));
        }
        Ok(())
    }

    pub fn n_vms(&self) -> usize {
        self.vms.len()
    }

    pub fn n_pms(&self) -> usize {
        self.pms.len()
    }

    pub fn n_racks(&self) -> usize {
        self.racks.len()
    }

    pub fn rack_of(&self, pm: usize) -> usize {
        self.pms[pm].rack_id
    }

    /// Sum of `resource` demand hosted on `pm` under `p`.
    pub fn load(&self, p: &Placement, pm: usize, resource: Resource) -> T {
        (0..p.n_vms())
            .filter(|&vm| p.get(vm, pm))
            .map(|vm| self.vms[vm].demand.get(resource))
            .sum()
    }

    pub fn total_demand(&self, resource: Resource) -> T {
        self.vms.iter().map(|v| v.demand.get(resource)).sum()
    }
}

fn check_dims<T: Scalar>(p: &Placement, dc: &DatacenterState<T>) -> Result<()> {
    if p.n_vms() != dc.n_vms() {
        return Err(Error::DimensionMismatch {
            what: "placement rows",
            expected: dc.n_vms(),
            actual: p.n_vms(),
        });
    }
    if p.n_pms() != dc.n_pms() {
        return Err(Error::DimensionMismatch {
            what: "placement columns",
            expected: dc.n_pms(),
            actual: p.n_pms(),
        });
    }
    Ok(())
}

/// Checks row sums and per-PM capacities of the packed resources.
pub fn validate_placement<T: Scalar>(
    p: &Placement,
    dc: &DatacenterState<T>,
) -> Result<ValidationReport> {
    check_dims(p, dc)?;
    let mut violations = Vec::new();
    for vm in 0..p.n_vms() {
        match p.row(vm).iter().filter(|&&b| b).count() {
            1 => {}
            0 => violations.push(Violation::Unassigned { vm }),
            hosts => violations.push(Violation::MultiplyAssigned { vm, hosts }),
        }
    }
    for pm in 0..p.n_pms() {
        for &r in &dc.packed {
            let demand = dc.load(p, pm, r);
            let capacity = dc.pms[pm].capacity.get(r);
            if demand > capacity {
                violations.push(Violation::Overcommitted {
                    pm,
                    resource: r,
                    demand: demand.as_f64(),
                    capacity: capacity.as_f64(),
                });
            }
        }
    }
    Ok(ValidationReport { violations })
}

fn ensure_valid<T: Scalar>(p: &Placement, dc: &DatacenterState<T>) -> Result<()> {
    let report = validate_placement(p, dc)?;
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidPlacement(report))
    }
}

/// Derives `F00`, `F10`, `X` and `Y` from `S'` and `S`.
pub fn derive_transition_flags<T: Scalar>(
    s_prev: &Placement,
    s_next: &Placement,
    dc: &DatacenterState<T>,
) -> Result<TransitionFlags> {
    ensure_valid(s_prev, dc)?;
    ensure_valid(s_next, dc)?;
    Ok(flags_unchecked(s_prev, s_next, dc))
}

pub(crate) fn flags_unchecked<T: Scalar>(
    s_prev: &Placement,
    s_next: &Placement,
    dc: &DatacenterState<T>,
) -> TransitionFlags {
    let n = dc.n_pms();
    let mut flags = TransitionFlags {
        f00: vec![false; n],
        f10: vec![false; n],
        x: vec![false; n],
        y: vec![false; dc.n_racks()],
    };
    for pm in 0..n {
        let was = s_prev.is_active(pm);
        let will = s_next.is_active(pm);
        flags.x[pm] = will;
        flags.f00[pm] = !was && !will;
        flags.f10[pm] = was && !will;
        if will {
            flags.y[dc.rack_of(pm)] = true;
        }
    }
    flags
}

pub fn pm_transition(s_prev: &Placement, s_next: &Placement, pm: usize) -> PmTransition {
    match (s_prev.is_active(pm), s_next.is_active(pm)) {
        (false, false) => PmTransition::OffOff,
        (false, true) => PmTransition::OffOn,
        (true, false) => PmTransition::OnOff,
        (true, true) => PmTransition::OnOn,
    }
}

/// CPU utilization `theta` of `pm_id` under `p`.
pub fn pm_utilization<T: Scalar>(
    p: &Placement,
    pm_id: usize,
    dc: &DatacenterState<T>,
) -> Result<T> {
    check_dims(p, dc)?;
    let pm = dc.pms.get(pm_id).ok_or(Error::DimensionMismatch {
        what: "PM index",
        expected: dc.n_pms(),
        actual: pm_id,
    })?;
    Ok(dc.load(p, pm_id, Resource::Cpu) / pm.capacity.cpu)
}
