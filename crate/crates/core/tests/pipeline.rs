use proptest::prelude::*;

use divratio::construct::{
    augment_params, balance_exponents, build_params, predicted_group_value, predicted_ratios,
    validate_params,
};
use divratio::genword::Decomposer;
use divratio::sieve::build_spf;
use divratio::witness::{ratio_at, scan_witnesses, ScanOptions};
use divratio::PosRational;

fn q(m: u64, n: u64) -> PosRational {
    PosRational::from_u64(m, n).unwrap()
}

#[test]
fn balanced_params_equalize_ratios() {
    let d = Decomposer::default();
    for (m, n) in [(1, 1), (2, 1), (1, 2), (3, 2), (4, 3), (16, 9), (5, 7)] {
        let target = q(m, n);
        let p = build_params(&target, &d).unwrap();
        let Ok(t) = predicted_ratios(&p) else {
            continue;
        };
        let aug = augment_params(&p, &balance_exponents(&t)).unwrap();
        validate_params(&aug).unwrap();
        let b = predicted_ratios(&aug).unwrap();
        assert_eq!(
            [b.ratio12, b.ratio23, b.ratio13],
            [target.clone(), target.clone(), target]
        );
    }
}

#[test]
fn witnesses_for_2_have_predicted_ratios() {
    let table = build_spf(1 << 20).unwrap();
    let p = build_params(&q(2, 1), &Decomposer::default()).unwrap();
    let scan = scan_witnesses(&p, 1, 5_000, Some(&table), ScanOptions::default()).unwrap();
    assert!(!scan.hits.is_empty());
    for h in &scan.hits {
        assert_eq!(ratio_at(h.n, None).unwrap(), h.predicted);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_value_matches_target(m in 1u64..200, n in 1u64..200) {
        let target = q(m, n);
        let p = build_params(&target, &Decomposer::default()).unwrap();
        prop_assert_eq!(validate_params(&p), Ok(()));
        prop_assert_eq!(predicted_group_value(&p).unwrap(), target);
    }
}
