mod common;

use common::{all_host_vectors, random_instance};
use proptest::prelude::*;
use relcon_core::domain::pm_utilization;
use relcon_core::milp::{Family, VarKind};
use relcon_core::{
    build_model, costs, derive_transition_flags, export_lp, model_stats, solve_bruteforce,
    validate_placement, ModelStats, Placement,
};

const TOL: f64 = 1e-9;

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

/// Every 0/1 vector over the binaries, continuous variables filled from
/// their definitions.
fn binary_points(n_binary: usize, n_vars: usize) -> impl Iterator<Item = Vec<f64>> {
    (0u64..1 << n_binary).map(move |bits| {
        let mut values = vec![0.0; n_vars];
        for (i, v) in values.iter_mut().enumerate().take(n_binary) {
            *v = (bits >> i & 1) as f64;
        }
        values
    })
}

#[test]
fn feasible_binary_points_are_exactly_the_valid_placements() {
    let mut checked = 0;
    for seed in 0..400 {
        let inst = random_instance(seed, 2, 3, 2);
        let dc = &inst.dc;
        let model = build_model(dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        let nb = model.index.n_binary();
        if nb > 17 {
            continue;
        }
        checked += 1;
        let mut feasible = 0;
        let mut best = f64::INFINITY;
        for mut values in binary_points(nb, model.index.n_vars()) {
            model.complete_continuous(&mut values);
            if !model.violated(&values, TOL).is_empty() {
                continue;
            }
            feasible += 1;
            let next = model.decode(&values);
            assert!(
                validate_placement(&next, dc).unwrap().is_valid(),
                "seed {seed}"
            );
            let (full, b) = costs::objective(
                &dc.current,
                &next,
                dc,
                &inst.weights,
                &inst.params,
                &inst.mig,
            )
            .unwrap();
            let milp = model.objective_value(&values);
            assert!(rel_close(milp, full), "seed {seed}: {milp} vs {full}");
            assert!(
                rel_close(values[model.index.c_ene()], b.c_ene),
                "seed {seed}"
            );
            assert!(
                rel_close(values[model.index.c_rel()], b.c_rel),
                "seed {seed}"
            );
            assert!(
                rel_close(values[model.index.g_rel()], b.g_rel),
                "seed {seed}"
            );
            let flags = derive_transition_flags(&dc.current, &next, dc).unwrap();
            for (p, pm) in dc.pms.iter().enumerate() {
                let theta = pm_utilization(&next, p, dc).unwrap();
                let expected = costs::pm_energy(pm, &flags, theta, inst.weights.tau).unwrap();
                assert!(
                    rel_close(values[model.index.e_pm(p)], expected),
                    "seed {seed} pm {p}"
                );
            }
            best = best.min(milp);
        }
        let valid = all_host_vectors(dc.n_vms(), dc.n_pms())
            .into_iter()
            .filter(|h| {
                let p = Placement::from_hosts(h, dc.n_pms()).unwrap();
                validate_placement(&p, dc).unwrap().is_valid()
            })
            .count();
        assert_eq!(feasible, valid, "seed {seed}");
        let brute = solve_bruteforce(dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        assert!(rel_close(best, brute.objective), "seed {seed}");
    }
    assert!(checked >= 100, "only {checked} models enumerated");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn encoded_placements_are_feasible_and_priced(seed in any::<u64>(), pick in any::<u64>()) {
        let inst = random_instance(seed, 3, 6, 8);
        let dc = &inst.dc;
        let model = build_model(dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        let feasible: Vec<Vec<usize>> = all_host_vectors(dc.n_vms().min(4), dc.n_pms())
            .into_iter()
            .map(|mut h| {
                h.extend(dc.current.hosts().unwrap().into_iter().skip(h.len()));
                h
            })
            .filter(|h| validate_placement(&Placement::from_hosts(h, dc.n_pms()).unwrap(), dc).unwrap().is_valid())
            .collect();
        let hosts = &feasible[(pick % feasible.len() as u64) as usize];
        let next = Placement::from_hosts(hosts, dc.n_pms()).unwrap();
        let values = model.encode(dc, &next);
        prop_assert!(model.violated(&values, TOL).is_empty());
        prop_assert_eq!(model.decode(&values), next.clone());
        let (full, _) = costs::objective(&dc.current, &next, dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        prop_assert!(rel_close(model.objective_value(&values), full));
    }

    #[test]
    fn counts_follow_closed_form(seed in any::<u64>()) {
        let inst = random_instance(seed, 4, 10, 12);
        let dc = &inst.dc;
        let model = build_model(dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        let stats = model_stats(&model);
        prop_assert_eq!(stats, ModelStats::closed_form(dc.n_vms(), dc.n_pms(), dc.n_racks(), dc.packed.len()));
        prop_assert_eq!(stats.n_variables(), model.variables.len());
        let binaries = model.variables.iter().filter(|v| v.kind == VarKind::Binary).count();
        prop_assert_eq!(binaries, model.index.n_binary());
    }

    #[test]
    fn overcommitting_placement_is_cut(seed in any::<u64>()) {
        let inst = random_instance(seed, 2, 4, 10);
        let dc = &inst.dc;
        let model = build_model(dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        for p in 0..dc.n_pms() {
            let hosts = vec![p; dc.n_vms()];
            let next = Placement::from_hosts(&hosts, dc.n_pms()).unwrap();
            let valid = validate_placement(&next, dc).unwrap().is_valid();
            let values = model.encode(dc, &next);
            let capacity_ok = model
                .constraints_in(Family::Capacity)
                .all(|c| c.satisfied(&values, TOL));
            prop_assert_eq!(valid, capacity_ok);
        }
    }
}

#[test]
fn big_m_values_never_cut_a_placement() {
    for seed in 0..200 {
        let inst = random_instance(seed, 2, 4, 6);
        let dc = &inst.dc;
        let model = build_model(dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        assert_eq!(model.big_m.pm_activation, dc.n_vms() as f64);
        for (r, rack) in dc.racks.iter().enumerate() {
            assert_eq!(model.big_m.rack_activation[r], rack.pm_ids.len() as f64);
        }
        // Every VM on one PM and every PM of a rack in use reach the bounds.
        let worst: Vec<Vec<usize>> = all_host_vectors(dc.n_vms(), dc.n_pms());
        for hosts in worst {
            let next = Placement::from_hosts(&hosts, dc.n_pms()).unwrap();
            let values = model.encode(dc, &next);
            for c in model
                .constraints_in(Family::PmActivation)
                .chain(model.constraints_in(Family::RackActivation))
            {
                assert!(c.satisfied(&values, TOL), "seed {seed}: {}", c.name);
            }
        }
    }
}

#[test]
fn zero_weights_give_zero_objective_coefficients() {
    for seed in 0..50 {
        let mut inst = random_instance(seed, 3, 6, 8);
        inst.weights = inst.weights.with_factors(0.0, 0.0, 0.0);
        let model = build_model(&inst.dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        assert!(
            model.objective.iter().all(|&(_, c)| c == 0.0),
            "seed {seed}"
        );
        let lp = export_lp(&model);
        assert!(lp.contains("Minimize"));
    }
}

#[test]
fn export_is_deterministic() {
    for seed in 0..30 {
        let inst = random_instance(seed, 3, 6, 8);
        let a = export_lp(&build_model(&inst.dc, &inst.weights, &inst.params, &inst.mig).unwrap());
        let b = export_lp(&build_model(&inst.dc, &inst.weights, &inst.params, &inst.mig).unwrap());
        assert_eq!(a, b);
        assert!(a.ends_with("End\n"));
    }
}
