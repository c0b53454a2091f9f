mod common;

use common::*;
use fusa_core::hw::{check_metric_targets, compute_hw_metrics, FmedaRow};
use fusa_core::{Asil, FailureRate};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partition_conserves_total(row in fmeda_row(0)) {
        check_partition_conservation(&row)?;
    }

    #[test]
    fn spfm_non_decreasing_in_dc_residual(rows in fmeda_rows(), pick in any::<usize>(), raise in 0.0f64..=1.0) {
        check_spfm_monotone(&rows, pick, raise)?;
    }

    #[test]
    fn lfm_non_decreasing_in_dc_latent(rows in fmeda_rows(), pick in any::<usize>(), raise in 0.0f64..=1.0) {
        check_lfm_monotone(&rows, pick, raise)?;
    }

    #[test]
    fn scaling_every_rate(rows in fmeda_rows(), k in 0.01f64..100.0) {
        let scaled: Vec<FmedaRow> = rows
            .iter()
            .map(|r| FmedaRow { lambda_total: FailureRate::per_hour(r.lambda_total.as_per_hour() * k).unwrap(), ..r.clone() })
            .collect();
        let a = compute_hw_metrics(&rows).unwrap();
        let b = compute_hw_metrics(&scaled).unwrap();
        prop_assert!((a.spfm.get() - b.spfm.get()).abs() <= 1e-12);
        prop_assert!((a.lfm.get() - b.lfm.get()).abs() <= 1e-12);
        prop_assert!(rel_err(b.pmhf.as_per_hour(), k * a.pmhf.as_per_hour()) <= 1e-12 || a.pmhf.as_per_hour() == 0.0);
    }

    #[test]
    fn row_order_does_not_matter(rows in fmeda_rows()) {
        let mut reversed = rows.clone();
        reversed.reverse();
        let a = compute_hw_metrics(&rows).unwrap();
        let b = compute_hw_metrics(&reversed).unwrap();
        prop_assert!((a.spfm.get() - b.spfm.get()).abs() <= 1e-15);
        prop_assert!((a.lfm.get() - b.lfm.get()).abs() <= 1e-15);
        prop_assert!(rel_err(b.pmhf.as_per_hour(), a.pmhf.as_per_hour()) <= 1e-15 || a.pmhf.as_per_hour() == 0.0);
    }

    #[test]
    fn metrics_stay_in_range(rows in fmeda_rows(), asil in prop::sample::select(Asil::ALL.to_vec())) {
        let m = compute_hw_metrics(&rows).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.spfm.get()) && (0.0..=1.0).contains(&m.lfm.get()));
        prop_assert!(m.pmhf.as_per_hour() >= 0.0);
        prop_assert_eq!(check_metric_targets(&m, asil).len(), 3);
    }
}
