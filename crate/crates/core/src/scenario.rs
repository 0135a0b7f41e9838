//! Scenario files: a TOML description of a homogeneous-layout datacenter,
//! its VM population, the cost weights and the solver to run each slot.
//!
//! ```toml
//! seed = 7
//! n_slots = 1
//!
//! [layout]
//! racks = 8
//! pms_per_rack = 4
//! racks_per_pod = 2
//! tor_power = 366.0
//! cooling_power = 950.0
//!
//! [pm]            # every field optional, defaults shown
//! cpu = 2000.0    # MIPS
//! ram = 10240.0   # MB
//! bw = 1000.0     # Mbps
//! p_max = 300.0   # W
//! k_idle = 0.7
//! t_idle = 318.0  # K
//! t_max = 350.0   # K
//! cycle_count = 0
//!
//! [[vms]]
//! count = 52
//! cpu = 500.0
//! ram = 612.0
//! mem_gb = 0.612
//!
//! [weights]       # alpha beta gamma rho omega tau
//! alpha = 1.0
//!
//! [reliability]   # delta varrho varphi q t_amb mttf_hours hours_per_year afr_floor
//!
//! [migration]
//! kappa = 10.0    # Wh per GB per hop
//!
//! [solver]
//! kind = "exact"  # or "greedy"
//! time_cap = 300.0
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::costs::{CostWeights, MigrationCostModel, ReliabilityParams};
use crate::domain::{
    DatacenterState, Placement, PmSpec, RackSpec, Resource, Resources, TempModel, VmSpec,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::SolverChoice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Layout<T> {
    pub racks: usize,
    pub pms_per_rack: usize,
    pub racks_per_pod: usize,
    pub tor_power: T,
    pub cooling_power: T,
}

impl<T: Scalar> Default for Layout<T> {
    fn default() -> Self {
        Self {
            racks: 8,
            pms_per_rack: 4,
            racks_per_pod: 2,
            tor_power: T::of(366.0),
            cooling_power: T::of(950.0),
        }
    }
}

impl<T: Scalar> Layout<T> {
    pub fn n_pms(&self) -> usize {
        self.racks * self.pms_per_rack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PmTemplate<T> {
    pub cpu: T,
    pub ram: T,
    pub bw: T,
    pub p_max: T,
    pub k_idle: T,
    pub t_idle: T,
    pub t_max: T,
    pub cycle_count: u32,
}

impl<T: Scalar> Default for PmTemplate<T> {
    fn default() -> Self {
        let temp = TempModel::<T>::default();
        Self {
            cpu: T::of(2000.0),
            ram: T::of(10240.0),
            bw: T::of(1000.0),
            p_max: T::of(300.0),
            k_idle: T::of(0.7),
            t_idle: temp.t_idle,
            t_max: temp.t_max,
            cycle_count: 0,
        }
    }
}

impl<T: Scalar> PmTemplate<T> {
    pub fn instantiate(&self, id: usize, rack_id: usize) -> PmSpec<T> {
        PmSpec {
            id,
            rack_id,
            capacity: Resources::new(self.cpu, self.ram, self.bw),
            p_max: self.p_max,
            k_idle: self.k_idle,
            cycle_count: self.cycle_count,
            temp: TempModel {
                t_idle: self.t_idle,
                t_max: self.t_max,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct VmGroup<T> {
    pub count: usize,
    pub cpu: T,
    pub ram: T,
    pub bw: T,
    pub mem_gb: T,
}

impl<T: Scalar> Default for VmGroup<T> {
    fn default() -> Self {
        Self {
            count: 1,
            cpu: T::of(500.0),
            ram: T::of(612.0),
            bw: T::zero(),
            mem_gb: T::of(0.612),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct MigrationSpec<T> {
    pub kappa: T,
}

impl<T: Scalar> Default for MigrationSpec<T> {
    fn default() -> Self {
        Self { kappa: T::of(10.0) }
    }
}

fn one() -> u64 {
    1
}

fn default_packed() -> Vec<Resource> {
    vec![Resource::Cpu, Resource::Ram]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Scenario<T> {
    pub seed: u64,
    #[serde(default = "one")]
    pub n_slots: u64,
    #[serde(default)]
    pub layout: Layout<T>,
    #[serde(default)]
    pub pm: PmTemplate<T>,
    pub vms: Vec<VmGroup<T>>,
    #[serde(default)]
    pub weights: CostWeights<T>,
    #[serde(default)]
    pub reliability: ReliabilityParams<T>,
    #[serde(default)]
    pub migration: MigrationSpec<T>,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default = "default_packed")]
    pub packed: Vec<Resource>,
}

/// Racks, PMs and VMs of a scenario.
pub type Parts<T> = (Vec<RackSpec<T>>, Vec<PmSpec<T>>, Vec<VmSpec<T>>);

impl<T: Scalar> Scenario<T> {
    /// Homogeneous evaluation setup: 2000-MIPS/10-GB/300-W PMs, racks of
    /// `pms_per_rack` with 366-W ToR and 950-W cooling, and 500-MIPS/612-MB VMs.
    pub fn homogeneous(racks: usize, pms_per_rack: usize, n_vms: usize, seed: u64) -> Self {
        Self {
            seed,
            n_slots: 1,
            layout: Layout {
                racks,
                pms_per_rack,
                ..Layout::default()
            },
            pm: PmTemplate::default(),
            vms: vec![VmGroup {
                count: n_vms,
                ..VmGroup::default()
            }],
            weights: CostWeights::default(),
            reliability: ReliabilityParams::default(),
            migration: MigrationSpec::default(),
            solver: SolverChoice::default(),
            packed: default_packed(),
        }
    }

    pub fn n_vms(&self) -> usize {
        self.vms.iter().map(|g| g.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layout.racks == 0 || self.layout.pms_per_rack == 0 {
            return Err(Error::Scenario(
                "layout needs at least one rack and one PM per rack".into(),
            ));
        }
        if self.layout.racks_per_pod == 0 {
            return Err(Error::Scenario("racks_per_pod must be positive".into()));
        }
        self.weights.validate()?;
        self.reliability.validate()?;
        if self.pm.t_idle <= self.reliability.t_amb {
            return Err(Error::Scenario(format!(
                "PM idle temperature {} must exceed ambient {}",
                self.pm.t_idle, self.reliability.t_amb
            )));
        }
        if let SolverChoice::Exact { time_cap } = self.solver {
            if !(time_cap > 0.0) {
                return Err(Error::InvalidTimeCap);
            }
        }
        Ok(())
    }

    /// Racks, PMs and VMs of the scenario, without a mapping.
    pub fn parts(&self) -> Parts<T> {
        let per = self.layout.pms_per_rack;
        let racks = (0..self.layout.racks)
            .map(|r| RackSpec {
                id: r,
                pm_ids: (r * per..(r + 1) * per).collect(),
                tor_power: self.layout.tor_power,
                cooling_power: self.layout.cooling_power,
            })
            .collect();
        let pms = (0..self.layout.n_pms())
            .map(|j| self.pm.instantiate(j, j / per))
            .collect();
        let vms = self
            .vms
            .iter()
            .flat_map(|g| std::iter::repeat_n(g, g.count))
            .enumerate()
            .map(|(id, g)| VmSpec {
                id,
                demand: Resources::new(g.cpu, g.ram, g.bw),
                mem_gb: g.mem_gb,
            })
            .collect();
        (racks, pms, vms)
    }

    /// Datacenter in slot 0 with VMs hosted on `hosts`.
    pub fn datacenter(&self, hosts: &[usize]) -> Result<DatacenterState<T>> {
        let (racks, pms, vms) = self.parts();
        let current = Placement::from_hosts(hosts, pms.len())?;
        DatacenterState::new(racks, pms, vms, current)?.with_packed(self.packed.clone())
    }

    pub fn migration_model(&self, dc: &DatacenterState<T>) -> MigrationCostModel<T> {
        MigrationCostModel::fat_tree(dc, self.migration.kappa, self.layout.racks_per_pod)
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario<f64>> {
    let scenario: Scenario<f64> =
        toml::from_str(text).map_err(|e| Error::Scenario(e.message().to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn scenario_to_toml(scenario: &Scenario<f64>) -> String {
    toml::to_string(scenario).expect("scenario serializes")
}

/// `vm_id,pm_id` rows with a header line.
pub fn placement_to_csv(p: &Placement) -> String {
    let mut out = String::from("vm_id,pm_id\n");
    for vm in 0..p.n_vms() {
        if let Some(pm) = p.host(vm) {
            let _ = writeln!(out, "{vm},{pm}");
        }
    }
    out
}

pub fn placement_from_csv(text: &str, n_vms: usize, n_pms: usize) -> Result<Placement> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut p = Placement::empty(n_vms, n_pms);
    for (line, record) in reader.deserialize::<(usize, usize)>().enumerate() {
        let (vm, pm) =
            record.map_err(|e| Error::Scenario(format!("placement row {}: {e}", line + 1)))?;
        if vm >= n_vms || pm >= n_pms {
            return Err(Error::Scenario(format!(
                "placement row {}: ({vm}, {pm}) outside {n_vms} VMs x {n_pms} PMs",
                line + 1
            )));
        }
        p.set(vm, pm, true);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
            seed = 7
            [layout]
            racks = 2
            pms_per_rack = 2
            [[vms]]
            count = 5
            [weights]
            alpha = 0.2
            [solver]
            kind = "greedy"
        "#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.n_vms(), 5);
        assert_eq!(s.weights.alpha, 0.2);
        assert_eq!(s.weights.tau, 0.5);
        assert_eq!(s.pm.cpu, 2000.0);
        assert_eq!(s.solver, SolverChoice::Greedy);
        assert_eq!(s.packed, vec![Resource::Cpu, Resource::Ram]);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = "seed = 1\nvms = []\nbogus = 3\n";
        assert!(matches!(parse_scenario(text), Err(Error::Scenario(_))));
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::<f64>::homogeneous(4, 4, 25, 3);
        let back = parse_scenario(&scenario_to_toml(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn placement_csv_round_trip() {
        let p = Placement::from_hosts(&[1, 1, 2, 2, 3], 4).unwrap();
        let text = placement_to_csv(&p);
        assert!(text.starts_with("vm_id,pm_id\n0,1\n"));
        assert_eq!(placement_from_csv(&text, 5, 4).unwrap(), p);
        assert!(placement_from_csv("vm_id,pm_id\n9,0\n", 5, 4).is_err());
    }

    #[test]
    fn ambient_above_idle_temperature_rejected() {
        let mut s = Scenario::<f64>::homogeneous(1, 2, 2, 0);
        s.pm.t_idle = 290.0;
        assert!(s.validate().is_err());
    }
}
