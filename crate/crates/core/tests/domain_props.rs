mod common;

use common::{random_instance, random_valid_placement};
use proptest::prelude::*;
use relcon_core::domain::{pm_transition, PmTransition};
use relcon_core::milp::Family;
use relcon_core::{build_model, derive_transition_flags};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn flags_encode_the_four_transitions(seed in any::<u64>(), draw in any::<u64>()) {
        let inst = random_instance(seed, 3, 8, 12);
        let dc = &inst.dc;
        let Some(next) = random_valid_placement(dc, draw) else { return Ok(()) };
        let flags = derive_transition_flags(&dc.current, &next, dc).unwrap();
        for p in 0..dc.n_pms() {
            let before = dc.current.is_active(p);
            let after = next.is_active(p);
            prop_assert!(!(flags.f00[p] && flags.f10[p]));
            prop_assert_eq!(flags.f00[p], !before && !after);
            prop_assert_eq!(flags.f10[p], before && !after);
            prop_assert_eq!(flags.x[p], after);
            prop_assert_eq!(!flags.x[p], flags.f00[p] || flags.f10[p]);
            let expected = match (before, after) {
                (false, false) => PmTransition::OffOff,
                (false, true) => PmTransition::OffOn,
                (true, false) => PmTransition::OnOff,
                (true, true) => PmTransition::OnOn,
            };
            prop_assert_eq!(pm_transition(&dc.current, &next, p), expected);
        }
        for (r, rack) in dc.racks.iter().enumerate() {
            prop_assert_eq!(flags.y[r], rack.pm_ids.iter().any(|&p| flags.x[p]));
        }
    }

    #[test]
    fn derived_flags_satisfy_the_structural_rows(seed in any::<u64>(), draw in any::<u64>()) {
        let inst = random_instance(seed, 3, 6, 8);
        let dc = &inst.dc;
        let Some(next) = random_valid_placement(dc, draw) else { return Ok(()) };
        let model = build_model(dc, &inst.weights, &inst.params, &inst.mig).unwrap();
        let values = model.encode(dc, &next);
        for family in [
            Family::OfflineCannotStop,
            Family::OnlineCannotStayOff,
            Family::HostOnlyIfOn,
            Family::OffOnlyIfEmpty,
            Family::PmActivation,
            Family::RackActivation,
        ] {
            for c in model.constraints_in(family) {
                prop_assert!(c.satisfied(&values, 1e-9), "{}", c.name);
            }
        }
    }

    #[test]
    fn identical_mappings_stop_nothing(seed in any::<u64>()) {
        let inst = random_instance(seed, 3, 8, 12);
        let dc = &inst.dc;
        let flags = derive_transition_flags(&dc.current, &dc.current, dc).unwrap();
        prop_assert!(flags.f10.iter().all(|&f| !f));
        prop_assert_eq!(dc.current.migrations_to(&dc.current), 0);
    }
}
