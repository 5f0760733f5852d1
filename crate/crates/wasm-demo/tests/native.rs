use nullstate_wasm::{green, kernel, table, TABLE_COLUMNS};

#[test]
fn table_at_kappa_six() {
    let t = table(6.0, 3).unwrap();
    assert_eq!(t.len(), 3 * TABLE_COLUMNS);
    assert_eq!(t[1], 0.0);
    assert!((t[3] - 1.0 / 3.0).abs() < 1e-15);
    assert!(table(9.0, 3).is_err());
}

#[test]
fn kernel_curve_is_positive_and_has_unit_mass_shape() {
    let c = kernel(1.0 / 3.0, 1.0 / 3.0, 0.5, 0.1, 99).unwrap();
    assert_eq!(c.len(), 198);
    assert!(c.chunks(2).all(|p| p[1] > 0.0));
    // peak near ρ for small t
    let peak = c.chunks(2).max_by(|a, b| a[1].total_cmp(&b[1])).unwrap()[0];
    assert!((peak - 0.5).abs() < 0.05);
    assert!(kernel(-2.0, 0.0, 0.5, 0.1, 10).is_err());
    assert!(kernel(0.5, 0.5, 0.5, 0.1, 1).is_err());
}

#[test]
fn green_vanishes_before_eps() {
    let c = green(6.0, 1.0 / 3.0, 0.4, 1.0, 0.5, 20).unwrap();
    assert!(c.chunks(2).all(|p| p[1] == 0.0));
    let c = green(6.0, 1.0 / 3.0, 0.4, 1.0, 2.0, 20).unwrap();
    assert!(c.chunks(2).any(|p| p[1] != 0.0));
}
