use lod_wasm::{basis_field, corrector_decay, multiscale_solve};

#[test]
fn basis_function_peaks_at_the_chosen_node() {
    let f = basis_field(2, 4, 1.0, 0.05, 0.5, 0.5).unwrap();
    let n = f.subdivisions();
    assert_eq!(n, 16);
    let values = f.values();
    assert_eq!(values.len(), 17 * 17);
    let centre = 8 * 17 + 8;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(values[centre], max);
    for i in 0..17 {
        assert_eq!(values[i], 0.0);
        assert_eq!(values[16 * 17 + i], 0.0);
    }
}

#[test]
fn decay_tails_shrink() {
    let d = corrector_decay(2, 4, 0.05, 0.3, 0.3).unwrap();
    let tails = d.tails();
    assert_eq!(*tails.last().unwrap(), 0.0);
    assert!(tails.windows(2).all(|w| w[1] <= w[0]), "{tails:?}");
    assert!(d.theta() < 1.0);
}

#[test]
fn solve_returns_nonpositive_solution() {
    let f = multiscale_solve(2, 4, 2.0, 0.05, false).unwrap();
    assert!(f.values().iter().all(|u| *u <= 1e-12));
    assert!(f.summary().contains("Newton iterations"));
}

#[test]
fn rejects_bad_levels() {
    assert!(multiscale_solve(4, 4, 1.0, 0.05, true).is_err());
    assert!(basis_field(2, 9, 1.0, 0.05, 0.5, 0.5).is_err());
}
