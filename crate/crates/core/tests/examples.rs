use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use approx::assert_abs_diff_eq;
use num_complex::Complex64;

use fieldlab::decoherence::{branch_truncate, branch_truncate_by_side_chain, measure_with_chain, EnvironmentModel};
use fieldlab::density::{
    argon_localization, boltzmann_entropy, index_labels, probability_density, thermal_density, DensityMatrix,
    StationaryModes, SystemState, ThermalConfig,
};
use fieldlab::detectors::{
    compton_channel, detector_amplitude, prepare_by_filter, DetectorSpec, FilterSpec, ModeFunctions, SpinPair,
    WhichPathSetup,
};
use fieldlab::fock::{FockState, Ket, ModeSet};
use fieldlab::wave::{plane_wave_basis, Grid1D, SlitGeometry, WeylPacket};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn one(m: usize) -> FockState {
    FockState::from_occupations([(m, 1)])
}

#[test]
fn detector_reads_vacuum_and_dead_detectors_as_zero() {
    let grid = Grid1D::new(0.0, 1.0, 16).unwrap();
    let f = ModeFunctions::new(plane_wave_basis(&grid, 3).unwrap().into_iter().enumerate()).unwrap();
    let modes = ModeSet::fermionic(["0", "1", "2"]);
    let det = DetectorSpec::new(5, [0, 1, 2]).unwrap();
    let photon = Ket::basis_state(&modes, one(1));
    assert_eq!(detector_amplitude(&det, &f, &photon).unwrap(), f.get(1).unwrap().value(5));
    assert_eq!(detector_amplitude(&det, &f, &Ket::vacuum(&modes)).unwrap(), c(0.0));
    let dead = det.uniform(c(0.0)).unwrap();
    assert_eq!(detector_amplitude(&dead, &f, &photon).unwrap(), c(0.0));
}

#[test]
fn compton_channel_leaves_vacuum_alone() {
    let geom = SlitGeometry::new(5.0, 1.0, 4.0 * PI, 1e4).unwrap();
    let plane = Grid1D::new(-5.0, 5.0, 201).unwrap();
    let screen = Grid1D::new(-0.3, 0.3, 101).unwrap();
    let setup = WhichPathSetup::standard(geom, plane, screen, 2.5).unwrap();
    let vac = Ket::vacuum(&setup.modes);
    assert_eq!(compton_channel(&vac, 2.5, &setup).unwrap(), vac);
}

#[test]
fn stern_gerlach_preparation() {
    let modes = ModeSet::fermionic(["a+", "a-"]);
    let f = FilterSpec::projection(SpinPair { up: 0, down: 1 });
    let up = Ket::basis_state(&modes, one(0));
    let down = Ket::basis_state(&modes, one(1));

    let p = prepare_by_filter(&[up.clone(), down.clone()], &f).unwrap();
    assert_eq!(p.rejected, 1);
    assert_eq!(p.transmitted.len(), 1);
    assert_eq!(p.transmitted[0].ket, up);

    let both = up.plus(&down).unwrap().scaled(c(FRAC_1_SQRT_2));
    let p = prepare_by_filter(&[both], &f).unwrap();
    assert_abs_diff_eq!(p.transmitted[0].survival, 0.5, epsilon = 1e-15);
    assert!(p.transmitted[0].ket.minus(&up).unwrap().norm_sqr() < 1e-28);

    let p = prepare_by_filter(&[], &f).unwrap();
    assert!(p.transmitted.is_empty() && p.rejected == 0);
}

#[test]
fn thermal_two_level_examples() {
    let t = 0.8;
    let rho = thermal_density(&ThermalConfig::new(t, vec![0.0, t * LN_2])).unwrap();
    assert_abs_diff_eq!(rho.get(0, 0).re, 2.0 / 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(rho.get(1, 1).re, 1.0 / 3.0, epsilon = 1e-14);
    let expected = (2.0 / 3.0) * (1.5f64).ln() + (1.0 / 3.0) * 3f64.ln();
    assert_abs_diff_eq!(boltzmann_entropy(&rho), expected, epsilon = 1e-9);

    let hot = thermal_density(&ThermalConfig::new(1e9, vec![0.0, 1.0, 2.5])).unwrap();
    for w in hot.diagonal_weights() {
        assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-6);
    }
}

#[test]
fn argon_length_scales() {
    let base = argon_localization(300.0, 39.948).unwrap();
    assert!((base.lambda_nm - 0.016).abs() < 5e-4 && base.below_atomic_size);
    let heavy = argon_localization(300.0, 4.0 * 39.948).unwrap();
    let hot = argon_localization(1200.0, 39.948).unwrap();
    assert_abs_diff_eq!(heavy.lambda_nm, 0.5 * base.lambda_nm, epsilon = 1e-15);
    assert_abs_diff_eq!(hot.lambda_nm, 0.5 * base.lambda_nm, epsilon = 1e-15);
}

#[test]
fn eigenstate_density_is_static() {
    let grid = Grid1D::new(0.0, 2.0, 50).unwrap();
    let modes = StationaryModes::new(plane_wave_basis(&grid, 2).unwrap(), vec![0.4, 1.9]).unwrap();
    let state = SystemState::Pure(vec![c(0.0), c(1.0)]);
    let p0 = probability_density(&modes, &state, 17, 0.0).unwrap();
    for k in 1..100 {
        let p = probability_density(&modes, &state, 17, 0.37 * k as f64).unwrap();
        assert_abs_diff_eq!(p, p0, epsilon = 1e-14);
    }
}

#[test]
fn truncation_matches_side_chain_trace() {
    let third = c(1.0 / 3f64.sqrt());
    let rho = DensityMatrix::pure(index_labels(3), &[third, third, third]).unwrap();
    let cut = branch_truncate(&rho, 2).unwrap();
    assert_eq!(cut.get(0, 2), c(0.0));
    assert_eq!(cut.get(1, 2), c(0.0));
    assert_eq!(cut.get(0, 1), rho.get(0, 1));
    let side = branch_truncate_by_side_chain(&rho, 2).unwrap();
    assert!(cut.max_abs_diff(&side) < 1e-14);

    let mut all = rho.clone();
    for j in 0..3 {
        all = branch_truncate(&all, j).unwrap();
    }
    assert_eq!(all.max_offdiagonal(), 0.0);
}

#[test]
fn measurement_examples() {
    let half = c(FRAC_1_SQRT_2);
    let pure = DensityMatrix::pure(index_labels(2), &[half, half]).unwrap();
    let out = measure_with_chain(&pure, &EnvironmentModel::Uniform { n: 30, c: 0.5 }, [1.0, 1.0]).unwrap();
    assert!(out.offdiagonal() <= 0.5 * 0.5f64.powi(30) * (1.0 + 1e-12));

    let diag = DensityMatrix::diagonal(index_labels(2), &[0.3, 0.7]).unwrap();
    for n in [0, 1, 7] {
        let out = measure_with_chain(&diag, &EnvironmentModel::Uniform { n, c: 0.9 }, [1.0, 1.0]).unwrap();
        assert_eq!(out.offdiagonal(), 0.0);
    }

    let once = measure_with_chain(&pure, &EnvironmentModel::Uniform { n: 1, c: 0.0 }, [1.0, 1.0]).unwrap();
    assert_eq!(once.offdiagonal(), 0.0);
}

#[test]
fn massive_packet_position_after_ten_time_units() {
    let packet = WeylPacket::new(1.25, 0.1, 1.0).unwrap();
    assert_abs_diff_eq!(packet.group_velocity(), 0.6, epsilon = 1e-15);
    let w = packet.normalize_on(&Grid1D::symmetric(400.0, 1.0).unwrap()).unwrap();
    assert!(w.peak_position(0.0).abs() < 1e-3);
    assert!((w.peak_position(10.0) - 6.0).abs() <= 0.2);
}
