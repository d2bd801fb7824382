use proptest::prelude::*;

use isoenergy::scanner::{
    component_count, critical_values_from_cloud, default_radius, linear_grid, sample_isoenergy, scan_h, ScanOptions,
    ScanReport, ScanStatus, DEFAULT_SVD_TOL, DEFAULT_TOL,
};
use isoenergy::system::NumericSystem;
use isoenergy::OrbitParams;

fn params(h: f64) -> OrbitParams {
    OrbitParams::new(1.0, 2.0, 0.5, h)
}

#[test]
fn scan_sees_the_level_split_and_roundtrips_through_json() {
    let opts = ScanOptions { samples: 5000, critical_values: false, ..Default::default() };
    let report = scan_h(&params(0.0), &[-3.0, 2.0, 3.5], &opts).unwrap();
    let counts: Vec<Option<usize>> = report.entries.iter().map(|e| e.components).collect();
    assert_eq!(report.entries[0].status, ScanStatus::EmptyLevelSet);
    assert_eq!(counts, vec![None, Some(1), Some(2)]);
    assert_eq!(report.count_changes, vec![0, 1]);
    assert!(report.entries[1..].iter().all(|e| e.max_residual.unwrap() <= 1e-9));
    let json = report.to_json();
    assert!(json.contains("\"schema\": 1"));
    assert_eq!(ScanReport::from_json(&json).unwrap(), report);
}

#[test]
fn critical_values_lie_in_the_range_of_k() {
    let cloud = sample_isoenergy(&params(1.0), 4000, 3, DEFAULT_TOL).unwrap();
    let sys = NumericSystem::shared();
    let ks: Vec<f64> = cloud.points.iter().map(|p| sys.values(p, 1.0)[3]).collect();
    let (lo, hi) = ks.iter().fold((f64::MAX, f64::MIN), |(a, b), &k| (a.min(k), b.max(k)));
    let crit = critical_values_from_cloud(&cloud, DEFAULT_SVD_TOL);
    assert!(!crit.is_empty(), "extreme values of K are always critical");
    assert!(crit.windows(2).all(|w| w[0] < w[1]));
    for k in crit {
        // refinement may move slightly past the sampled extremes
        assert!(k >= 0.0 && k >= lo - 0.1 * (hi - lo) && k <= hi + 0.1 * (hi - lo), "{k} outside [{lo}, {hi}]");
    }
}

#[test]
fn grid_endpoints_are_included() {
    assert_eq!(linear_grid(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn component_count_is_monotone_in_radius(seed in 0u64..1000, h in -1.0f64..3.0) {
        let cloud = sample_isoenergy(&params(h), 800, seed, DEFAULT_TOL).unwrap();
        let r = default_radius(&cloud);
        let counts: Vec<usize> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|f| component_count(&cloud, f * r)).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{:?}", counts);
        prop_assert!(cloud.max_residual() <= DEFAULT_TOL);
    }
}
