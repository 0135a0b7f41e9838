//! Slot-by-slot simulation of the consolidation policy.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, whose output
//! stream is fixed by its specification and therefore identical on every
//! platform and release of the generator crate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::costs::CostBreakdown;
use crate::domain::{derive_transition_flags, DatacenterState, Placement};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::solver::{greedy_incumbent, solve_exact, Proof, SolveResult, SolverChoice};

/// Attempts at drawing a feasible random mapping before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotReport<T> {
    pub slot: u64,
    pub active_racks: usize,
    pub active_pms: usize,
    pub n_migrations: usize,
    pub c_ene: T,
    pub c_rel: T,
    pub g_rel: T,
    pub objective: T,
    pub breakdown: CostBreakdown<T>,
    pub proof: Proof,
    pub nodes_explored: u64,
    pub wall_time: f64,
    /// Mapping chosen for the next slot.
    pub placement: Placement,
    /// PMs shut down at the slot boundary.
    pub stopped: Vec<usize>,
}

/// Seeded random mapping respecting every packed capacity.
///
/// Each VM, in shuffled order, draws a PM uniformly at random; if it does
/// not fit there it goes to the first PM with room, scanning cyclically
/// from the drawn one. A VM with no room anywhere restarts the draw.
pub fn random_initial_placement<T: Scalar>(scenario: &Scenario<T>) -> Result<Placement> {
    let (_, pms, vms) = scenario.parts();
    let n_pms = pms.len();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    'attempt: for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut order: Vec<usize> = (0..vms.len()).collect();
        order.shuffle(&mut rng);
        let mut load = vec![vec![T::zero(); n_pms]; scenario.packed.len()];
        let mut hosts = vec![0; vms.len()];
        for v in order {
            let start = rng.gen_range(0..n_pms);
            let fits = |p: usize, load: &[Vec<T>]| {
                scenario
                    .packed
                    .iter()
                    .enumerate()
                    .all(|(k, &r)| load[k][p] + vms[v].demand.get(r) <= pms[p].capacity.get(r))
            };
            let Some(p) = (0..n_pms)
                .map(|i| (start + i) % n_pms)
                .find(|&p| fits(p, &load))
            else {
                continue 'attempt;
            };
            for (k, &r) in scenario.packed.iter().enumerate() {
                load[k][p] = load[k][p] + vms[v].demand.get(r);
            }
            hosts[v] = p;
        }
        return Placement::from_hosts(&hosts, n_pms);
    }
    Err(Error::Infeasible(format!(
        "no random placement fits after {MAX_PLACEMENT_ATTEMPTS} attempts"
    )))
}

/// Datacenter of `scenario` at slot 0 under its random initial mapping.
pub fn initial_state<T: Scalar>(scenario: &Scenario<T>) -> Result<DatacenterState<T>> {
    scenario.validate()?;
    let placement = random_initial_placement(scenario)?;
    let hosts = placement.hosts().expect("every VM placed");
    scenario.datacenter(&hosts)
}

fn solve<T: Scalar>(state: &DatacenterState<T>, scenario: &Scenario<T>) -> Result<SolveResult<T>> {
    let mig = scenario.migration_model(state);
    match scenario.solver {
        SolverChoice::Exact { time_cap } => solve_exact(
            state,
            &scenario.weights,
            &scenario.reliability,
            &mig,
            time_cap,
        ),
        SolverChoice::Greedy => {
            greedy_incumbent(state, &scenario.weights, &scenario.reliability, &mig)
        }
    }
}

/// Applies a chosen mapping: stopped PMs count one more cycle and `next`
/// becomes the mapping in force.
fn advance<T: Scalar>(
    state: &DatacenterState<T>,
    next: &Placement,
    stopped: &[usize],
) -> DatacenterState<T> {
    let mut out = state.clone();
    for &p in stopped {
        out.pms[p].cycle_count += 1;
    }
    out.current = next.clone();
    out.slot_index += 1;
    out
}

/// One consolidation decision at the start of slot `state.slot_index`.
pub fn step<T: Scalar>(
    state: &DatacenterState<T>,
    scenario: &Scenario<T>,
) -> Result<(DatacenterState<T>, SlotReport<T>)> {
    let result = solve(state, scenario)?;
    let flags = derive_transition_flags(&state.current, &result.placement, state)?;
    let stopped = flags.stopped_pms();
    let b = result.breakdown;
    let report = SlotReport {
        slot: state.slot_index,
        active_racks: flags.active_racks(),
        active_pms: flags.active_pms(),
        n_migrations: state.current.migrations_to(&result.placement),
        c_ene: b.c_ene,
        c_rel: b.c_rel,
        g_rel: b.g_rel,
        objective: result.objective,
        breakdown: b,
        proof: result.proof,
        nodes_explored: result.nodes_explored,
        wall_time: result.wall_time,
        placement: result.placement,
        stopped,
    };
    let next = advance(state, &report.placement, &report.stopped);
    Ok((next, report))
}

/// Runs `scenario.n_slots` decisions from its random initial mapping and
/// returns the final state with one report per slot.
pub fn simulate<T: Scalar>(
    scenario: &Scenario<T>,
) -> Result<(DatacenterState<T>, Vec<SlotReport<T>>)> {
    let mut state = initial_state(scenario)?;
    let mut reports = Vec::with_capacity(scenario.n_slots.min(1 << 16) as usize);
    for _ in 0..scenario.n_slots {
        let slot = state.slot_index;
        let (next, report) = step(&state, scenario).map_err(|e| Error::Slot {
            slot,
            source: Box::new(e),
        })?;
        state = next;
        reports.push(report);
    }
    Ok((state, reports))
}

pub fn run<T: Scalar>(scenario: &Scenario<T>) -> Result<Vec<SlotReport<T>>> {
    simulate(scenario).map(|(_, reports)| reports)
}

/// Rebuilds the state reached after `reports`, starting from `initial`.
pub fn replay<T: Scalar>(
    initial: &DatacenterState<T>,
    reports: &[SlotReport<T>],
) -> DatacenterState<T> {
    reports.iter().fold(initial.clone(), |state, r| {
        advance(&state, &r.placement, &r.stopped)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_placement;

    fn small(seed: u64) -> Scenario<f64> {
        let mut s = Scenario::homogeneous(2, 2, 5, seed);
        s.solver = SolverChoice::Exact { time_cap: 1.0 };
        s
    }

    #[test]
    fn same_seed_same_placement() {
        let s = Scenario::<f64>::homogeneous(8, 4, 52, 11);
        assert_eq!(
            random_initial_placement(&s).unwrap(),
            random_initial_placement(&s).unwrap()
        );
    }

    #[test]
    fn evaluation_population_always_fits() {
        for seed in 0..50 {
            let s = Scenario::<f64>::homogeneous(8, 4, 52, seed);
            let dc = initial_state(&s).unwrap();
            assert!(validate_placement(&dc.current, &dc).unwrap().is_valid());
        }
    }

    #[test]
    fn impossible_population_is_reported() {
        let s = Scenario::<f64>::homogeneous(1, 1, 5, 0);
        assert!(matches!(
            random_initial_placement(&s),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn zero_slots_give_no_reports() {
        let mut s = small(1);
        s.n_slots = 0;
        assert!(run(&s).unwrap().is_empty());
    }

    #[test]
    fn stop_increments_cycle_counter_once() {
        let s = small(3);
        let dc = initial_state(&s).unwrap();
        let (next, report) = step(&dc, &s).unwrap();
        for p in 0..dc.n_pms() {
            let expected = dc.pms[p].cycle_count + u32::from(report.stopped.contains(&p));
            assert_eq!(next.pms[p].cycle_count, expected);
        }
        assert_eq!(next.current, report.placement);
        assert_eq!(next.slot_index, 1);
    }

    #[test]
    fn replay_reconstructs_final_state() {
        let mut s = small(5);
        s.n_slots = 3;
        let initial = initial_state(&s).unwrap();
        let (last, reports) = simulate(&s).unwrap();
        assert_eq!(replay(&initial, &reports), last);
    }
}
