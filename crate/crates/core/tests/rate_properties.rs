use gdcert::freq::{certify_sector_noisy, certify_strongly_convex, rho_star_sector};
use gdcert::rates::{alpha_minus, alpha_plus, classify_regime, interior_rate, rho_gd, rho_gd_noisy};
use gdcert::{FunctionClass, ProblemSpec, RegimeKind};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = ProblemSpec> {
    (1.5f64..60.0, 0.02f64..1.95, 0.0f64..0.6).prop_map(|(kappa, frac, delta)| {
        let (m, l) = (1.0, kappa);
        ProblemSpec::new(m, l, frac / l, delta).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noise_never_helps(spec in spec_strategy()) {
        let clean = rho_gd(spec.m, spec.l, spec.alpha).unwrap();
        let noisy = rho_gd_noisy(&spec);
        prop_assert!(noisy >= clean - 1e-15);
        prop_assert!((noisy - (1.0 - (1.0 - spec.delta) * spec.alpha * spec.m)
            .max((1.0 + spec.delta) * spec.alpha * spec.l - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn thresholds_are_ordered(kappa in 1.5f64..200.0, t in 0.0f64..0.999) {
        // δ inside [0, 2/(κ+1))
        let delta = t * 2.0 / (kappa + 1.0);
        let (am, ap) = (alpha_minus(1.0, kappa, delta).unwrap(), alpha_plus(1.0, kappa, delta).unwrap());
        let opt = 2.0 / (kappa + 1.0);
        prop_assert!(am <= ap + 1e-15);
        prop_assert!(ap <= opt + 1e-15);
    }

    #[test]
    fn certified_rate_dominates_lower_bound(spec in spec_strategy()) {
        let sector = rho_star_sector(&spec).unwrap();
        prop_assert!(sector.rho >= rho_gd_noisy(&spec) - 1e-12);
        let regime = classify_regime(&spec, FunctionClass::Sector);
        let tol = if regime.kind.is_tight() { 1e-8 } else { 1e-6 };
        prop_assert!((sector.rho - regime.certified_rho).abs() <= tol * (1.0 + sector.rho),
            "{} vs {} ({:?})", sector.rho, regime.certified_rho, regime.kind);
    }

    #[test]
    fn strongly_convex_rate_is_no_worse(spec in spec_strategy()) {
        let sector = rho_star_sector(&spec).unwrap();
        if let Some(f) = certify_strongly_convex(&spec).unwrap() {
            prop_assert!(f.rho <= sector.rho + 1e-9);
            prop_assert!(f.rho >= rho_gd_noisy(&spec) - 1e-12);
        }
    }

    #[test]
    fn decision_is_monotone_in_rho(spec in spec_strategy(), bump in 1e-4f64..0.2) {
        let star = rho_star_sector(&spec).unwrap().rho;
        prop_assert!(certify_sector_noisy(&spec, star + bump).unwrap().is_some());
        if star > rho_gd_noisy(&spec) + 1e-6 {
            prop_assert!(certify_sector_noisy(&spec, star - 1e-6).unwrap().is_none());
        }
    }
}

#[test]
fn interior_rate_exceeds_lower_bound() {
    for kappa in [2.0, 10.0, 50.0] {
        for delta in [0.01, 0.05] {
            let (am, ap) = (alpha_minus(1.0, kappa, delta).unwrap(), alpha_plus(1.0, kappa, delta).unwrap());
            let s = ProblemSpec::new(1.0, kappa, 0.5 * (am.max(0.0) + ap), delta).unwrap();
            assert_eq!(classify_regime(&s, FunctionClass::Sector).kind, RegimeKind::Interior);
            assert!(interior_rate(&s).unwrap() > rho_gd_noisy(&s));
        }
    }
}
