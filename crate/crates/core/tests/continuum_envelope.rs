use std::f64::consts::FRAC_PI_2;

use qwalk_core::{compare_exact_continuum, grover_coin, CoinSelector, Grid, WavePacketSpec};

fn regular_point_l1(sigma: f64) -> f64 {
    let c = grover_coin(2).unwrap();
    let spec = WavePacketSpec::gaussian(sigma, vec![FRAC_PI_2, FRAC_PI_2], CoinSelector::Branches(vec![1, 2]));
    compare_exact_continuum(&spec, &c, Grid::centered(vec![512, 512]).unwrap(), 160).unwrap().l1
}

#[test]
fn l1_error_falls_with_packet_width() {
    let l1: Vec<f64> = [5.0, 10.0, 20.0, 30.0].iter().map(|&s| regular_point_l1(s)).collect();
    assert!(l1.windows(2).all(|w| w[1] < w[0]), "{l1:?}");
}

#[test]
fn branch_probabilities_add_without_cross_terms() {
    let l1 = regular_point_l1(20.0);
    assert!(l1 <= 0.01, "L1 = {l1}");
}

#[test]
fn near_cone_carrier_spreads_transversely() {
    let c = grover_coin(2).unwrap();
    let k0 = vec![0.01 * std::f64::consts::PI; 2];
    let spec = WavePacketSpec::gaussian(20.0, k0, CoinSelector::Branches(vec![1, 2]));
    let r = compare_exact_continuum(&spec, &c, Grid::centered(vec![512, 512]).unwrap(), 100).unwrap();
    // Continuum and exact widths agree to leading order even in the strongly curved regime.
    assert!(r.width_ratio.iter().flatten().all(|w| (w - 1.0).abs() < 0.25), "{}", r.to_text());
}
