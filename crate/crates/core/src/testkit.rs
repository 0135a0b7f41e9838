use crate::costs::{CostWeights, MigrationCostModel, ReliabilityParams};
use crate::domain::{DatacenterState, Placement, PmSpec, RackSpec, Resources, TempModel, VmSpec};

/// 2000-MIPS, 10-GB, 300-W PM with a 70% idle floor.
pub fn eval_pm(id: usize, rack_id: usize) -> PmSpec<f64> {
    PmSpec {
        id,
        rack_id,
        capacity: Resources::new(2000.0, 10240.0, 1000.0),
        p_max: 300.0,
        k_idle: 0.7,
        cycle_count: 0,
        temp: TempModel::default(),
    }
}

/// `n_pms` PMs split evenly over `n_racks`, one 500-MIPS VM per entry of `hosts`.
pub fn eval_dc(hosts: &[usize], n_pms: usize, n_racks: usize) -> DatacenterState<f64> {
    let per = n_pms / n_racks;
    let racks = (0..n_racks)
        .map(|r| RackSpec {
            id: r,
            pm_ids: (r * per..(r + 1) * per).collect(),
            tor_power: 366.0,
            cooling_power: 950.0,
        })
        .collect();
    let pms = (0..n_pms).map(|j| eval_pm(j, j / per)).collect();
    let vms = (0..hosts.len())
        .map(|id| VmSpec {
            id,
            demand: Resources::new(500.0, 612.0, 0.0),
            mem_gb: 0.612,
        })
        .collect();
    let current = Placement::from_hosts(hosts, n_pms).unwrap();
    DatacenterState::new(racks, pms, vms, current).unwrap()
}

pub type Instance = (
    DatacenterState<f64>,
    CostWeights<f64>,
    ReliabilityParams<f64>,
    MigrationCostModel<f64>,
);

pub fn eval_problem(hosts: &[usize], n_pms: usize, n_racks: usize) -> Instance {
    let dc = eval_dc(hosts, n_pms, n_racks);
    let mig = MigrationCostModel::fat_tree(&dc, 10.0, 2);
    (
        dc,
        CostWeights::default(),
        ReliabilityParams::default(),
        mig,
    )
}
