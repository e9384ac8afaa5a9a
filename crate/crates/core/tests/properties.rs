use proptest::prelude::*;

use barrett_leakage::gadgets::{barrett_algebraic_eval, BarrettParams, WireGadget};
use barrett_leakage::modring::Modulus;
use barrett_leakage::pipeline::{compose, MaskingMode, PipelineSpec};
use barrett_leakage::preimage::{
    count_bruteforce, count_closedform, multiplicity_profile, support_gap_observed, support_gap_predicted_extended,
    CountPath, SecretScope,
};

/// `(q, s)` with the scope condition satisfied and `s` up to 40 bits past it.
fn params_in(max_q: u64) -> impl Strategy<Value = BarrettParams> {
    (1..=max_q, 0u32..40).prop_map(|(q, extra)| {
        let m = Modulus::new(q).unwrap();
        BarrettParams::new(m, m.ceil_log2() + extra)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn two_branch_law(p in params_in(1 << 20), xs in any::<u64>(), ms in any::<u64>()) {
        let q = p.modulus();
        let (x, m) = (q.reduce_u64(xs), q.reduce_u64(ms));
        let y = barrett_algebraic_eval(&p, x, m);
        let d = x - m;
        prop_assert!(y == d || y == d + p.offset());
        prop_assert_eq!(y == d, m.val() <= x.val());
    }

    #[test]
    fn closed_form_matches_enumeration(p in params_in(2048), xs in any::<u64>(), vs in any::<u64>()) {
        let q = p.modulus();
        let g = WireGadget::barrett(p);
        let (x, v) = (q.reduce_u64(xs), q.reduce_u64(vs));
        prop_assert_eq!(count_closedform(&p, x, v), count_bruteforce(&g, x, v));
    }

    #[test]
    fn profiles_conserve_masks(p in params_in(4096), xs in any::<u64>()) {
        let q = p.modulus();
        let g = WireGadget::barrett(p);
        let x = q.reduce_u64(xs);
        let fast = multiplicity_profile(&g, x, CountPath::Auto);
        let slow = multiplicity_profile(&g, x, CountPath::Oracle);
        prop_assert_eq!(&fast, &slow);
        prop_assert!(fast.within_trichotomy());
        prop_assert!(fast.conservation_holds());
        prop_assert_eq!(fast.zeros, fast.twos);
        prop_assert_eq!(fast.ones + 2 * fast.twos, q.get());
        prop_assert_eq!(support_gap_observed(&fast), support_gap_predicted_extended(&p, x));
    }

    #[test]
    fn sampled_secrets_are_a_subset(q in 2u64..1_000_000, n in 0usize..64, seed in any::<u64>()) {
        let m = Modulus::new(q).unwrap();
        let xs = SecretScope::Sampled { seed, n }.secrets(m);
        prop_assert_eq!(xs.len(), n.min(q as usize));
        prop_assert!(xs.windows(2).all(|w| w[0].val() < w[1].val()));
        prop_assert_eq!(&xs, &SecretScope::Sampled { seed, n }.secrets(m));
    }

    #[test]
    fn fresh_composition_respects_subset_bound(p in params_in(256), a in 0u8..2, b in 0u8..2) {
        let q = p.modulus();
        let stage = |barrett: u8| if barrett == 1 { WireGadget::barrett(p) } else { WireGadget::identity(q) };
        let spec = PipelineSpec::new(stage(a), stage(b), MaskingMode::Fresh).unwrap();
        let r = compose(&spec, &SecretScope::Exhaustive);
        prop_assert!(r.fresh_bound_holds);
        prop_assert!(r.pipeline_max_mult <= r.bound_fresh);
        prop_assert_eq!(r.pipeline_max_mult, r.wire1_max_mult.max(r.wire2_max_mult));
    }
}
