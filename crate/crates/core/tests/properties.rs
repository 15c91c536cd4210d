use std::collections::BTreeSet;

use bdenum::enumeration::{enum_query_with, EnumOptions, Strategy};
use bdenum::formula::{parse_formula, to_dnf, Query};
use bdenum::oracle::brute_force;
use bdenum::oracle::random::{random_instance, random_rel_instance, Profile};
use bdenum::qelim::{eliminate_all, eliminate_all_with, QeOptions};
use bdenum::reduction::{build_bijective, degree, enum_fo_deg};
use bdenum::structure::Elem;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn rows(s: &bdenum::structure::BijStructure, q: &Query, strategy: Strategy) -> Vec<Vec<Elem>> {
    let opts = EnumOptions {
        strategy,
        record_gaps: false,
    };
    enum_query_with(s, q, opts).unwrap().collect()
}

fn profile(size: usize, vars: usize) -> Profile {
    Profile {
        max_size: size,
        vars,
        ..Profile::default()
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn strategies_agree_with_oracle(seed in any::<u64>(), size in 1usize..8, vars in 1usize..4) {
        let inst = random_instance(seed, &profile(size, vars));
        let want = brute_force(&inst.query, &inst.structure).unwrap().tuples;
        for strategy in [Strategy::Lazy, Strategy::DisjointDnf] {
            let got = rows(&inst.structure, &inst.query, strategy);
            let set: BTreeSet<Vec<Elem>> = got.iter().cloned().collect();
            prop_assert_eq!(set.len(), got.len(), "duplicate tuples");
            prop_assert_eq!(&set, &want);
        }
    }

    #[test]
    fn unpruned_elimination_is_equivalent(seed in any::<u64>()) {
        let inst = random_instance(seed, &profile(5, 2));
        let free = inst.query.free.clone();
        let pruned = eliminate_all(&inst.query.formula).unwrap();
        let raw = eliminate_all_with(&inst.query.formula, QeOptions { prune: false }).unwrap();
        let a = brute_force(&Query::with_free(pruned, free.clone()), &inst.structure).unwrap();
        let b = brute_force(&Query::with_free(raw, free), &inst.structure).unwrap();
        prop_assert_eq!(a.tuples, b.tuples);
    }

    #[test]
    fn printed_formulas_reparse(seed in any::<u64>()) {
        let inst = random_instance(seed, &Profile::default());
        let sig = inst.structure.signature();
        let once = parse_formula(&inst.query.formula.to_string(), sig).unwrap();
        let twice = parse_formula(&once.formula.to_string(), sig).unwrap();
        prop_assert_eq!(&once.formula, &twice.formula);
        let a = brute_force(&inst.query, &inst.structure).unwrap().tuples;
        let b = brute_force(&Query::with_free(once.formula, inst.query.free.clone()), &inst.structure)
            .unwrap()
            .tuples;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn dnf_preserves_meaning(seed in any::<u64>()) {
        let inst = random_instance(seed, &profile(5, 2));
        let qf = eliminate_all(&inst.query.formula).unwrap();
        let dnf = to_dnf(&qf).unwrap().to_formula();
        let free = inst.query.free.clone();
        let a = brute_force(&Query::with_free(qf, free.clone()), &inst.structure).unwrap();
        let b = brute_force(&Query::with_free(dnf, free), &inst.structure).unwrap();
        prop_assert_eq!(a.tuples, b.tuples);
    }

}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn reduction_respects_degree(seed in 0u64..10_000) {
        let inst = random_rel_instance(seed, 5);
        let s = &inst.structure;
        let reduced = build_bijective(s).unwrap();
        prop_assert!(reduced.d >= degree(s).0);
        let want = brute_force(&inst.query, s).unwrap().tuples;
        match enum_fo_deg(&inst.query, s) {
            Ok(got) => prop_assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), want),
            Err(bdenum::Error::Resource(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
