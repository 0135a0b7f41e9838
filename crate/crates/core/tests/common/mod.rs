#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relcon_core::domain::TempModel;
use relcon_core::{
    CostWeights, DatacenterState, MigrationCostModel, Placement, PmSpec, RackSpec,
    ReliabilityParams, Resources, VmSpec,
};

pub struct Instance {
    pub dc: DatacenterState<f64>,
    pub weights: CostWeights<f64>,
    pub params: ReliabilityParams<f64>,
    pub mig: MigrationCostModel<f64>,
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    *xs.choose(rng).unwrap()
}

/// Random heterogeneous instance with at most `max_racks` racks, `max_pms`
/// PMs and `max_vms` VMs. Demands and capacities are dyadic so load sums are exact.
pub fn random_instance(seed: u64, max_racks: usize, max_pms: usize, max_vms: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_racks = rng.gen_range(1..=max_racks.min(max_pms));
    let n_pms = rng.gen_range(n_racks..=max_pms);
    let mut rack_of: Vec<usize> = (0..n_pms)
        .map(|j| {
            if j < n_racks {
                j
            } else {
                rng.gen_range(0..n_racks)
            }
        })
        .collect();
    rack_of.sort_unstable();
    let racks = (0..n_racks)
        .map(|r| RackSpec {
            id: r,
            pm_ids: (0..n_pms).filter(|&j| rack_of[j] == r).collect(),
            tor_power: pick(&mut rng, &[0.0, 183.0, 366.0]),
            cooling_power: pick(&mut rng, &[475.0, 950.0]),
        })
        .collect();
    let pms: Vec<PmSpec<f64>> = (0..n_pms)
        .map(|j| PmSpec {
            id: j,
            rack_id: rack_of[j],
            capacity: Resources::new(
                pick(&mut rng, &[1000.0, 1500.0, 2000.0]),
                pick(&mut rng, &[4096.0, 8192.0]),
                1000.0,
            ),
            p_max: pick(&mut rng, &[200.0, 250.0, 300.0]),
            k_idle: pick(&mut rng, &[0.5, 0.625, 0.75]),
            cycle_count: pick(&mut rng, &[0, 3, 50, 100, 400, 1000, 1599]),
            temp: TempModel {
                t_idle: pick(&mut rng, &[310.0, 318.0]),
                t_max: pick(&mut rng, &[340.0, 350.0]),
            },
        })
        .collect();
    let wanted = rng.gen_range(0..=max_vms);
    let mut vms = Vec::new();
    let mut hosts = Vec::new();
    let mut load = vec![(0.0, 0.0); n_pms];
    for _ in 0..wanted {
        let cpu = pick(&mut rng, &[250.0, 500.0, 750.0, 1000.0]);
        let ram = pick(&mut rng, &[512.0, 1024.0, 2048.0]);
        let fits: Vec<usize> = (0..n_pms)
            .filter(|&j| {
                load[j].0 + cpu <= pms[j].capacity.cpu && load[j].1 + ram <= pms[j].capacity.ram
            })
            .collect();
        let Some(&j) = fits.choose(&mut rng) else {
            continue;
        };
        load[j].0 += cpu;
        load[j].1 += ram;
        vms.push(VmSpec {
            id: vms.len(),
            demand: Resources::new(cpu, ram, 0.0),
            mem_gb: pick(&mut rng, &[0.5, 1.0, 2.0]),
        });
        hosts.push(j);
    }
    let current = Placement::from_hosts(&hosts, n_pms).unwrap();
    let dc = DatacenterState::new(racks, pms, vms, current).unwrap();
    let tenth = |rng: &mut ChaCha8Rng| f64::from(rng.gen_range(0..=10u8)) / 10.0;
    let weights = CostWeights {
        alpha: tenth(&mut rng),
        beta: tenth(&mut rng),
        gamma: tenth(&mut rng),
        rho: pick(&mut rng, &[0.05, 0.1, 0.2]),
        tau: pick(&mut rng, &[0.25, 0.5, 1.0]),
        ..CostWeights::default()
    };
    let mig =
        MigrationCostModel::fat_tree(&dc, pick(&mut rng, &[0.0, 5.0, 10.0]), rng.gen_range(1..=2));
    Instance {
        dc,
        weights,
        params: ReliabilityParams::default(),
        mig,
    }
}

/// Every host vector in lexicographic order.
pub fn all_host_vectors(n_vms: usize, n_pms: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n_vms {
        out = out
            .into_iter()
            .flat_map(|h| {
                (0..n_pms).map(move |p| {
                    let mut next = h.clone();
                    next.push(p);
                    next
                })
            })
            .collect();
    }
    out
}

/// Random capacity-feasible mapping of `dc`'s VMs, or `None` after a few failed draws.
pub fn random_valid_placement(dc: &DatacenterState<f64>, seed: u64) -> Option<Placement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let hosts: Vec<usize> = (0..dc.n_vms())
            .map(|_| rng.gen_range(0..dc.n_pms()))
            .collect();
        let p = Placement::from_hosts(&hosts, dc.n_pms()).unwrap();
        if relcon_core::validate_placement(&p, dc).unwrap().is_valid() {
            return Some(p);
        }
    }
    None
}
