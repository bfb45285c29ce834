//! Full rotating-frame matrix evolution against the adiabatic scalar surface.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use phasemod::hamiltonians::{diagonalize, scaled_coupling_rwa};
use phasemod::quantum::{init_gaussian, EvolutionMode, Propagator, SpatialGrid};
use phasemod::{DimensionlessParams, HamiltonianVariant};

#[test]
fn matrix_and_adiabatic_surface_agree_for_fast_carrier() {
    let d = DimensionlessParams::new(0.5, 200.0, 1.0, 0.5, 0.5).unwrap();
    let grid = SpatialGrid::new(256, 4.0 * PI).unwrap();
    let spp = 8192;
    let periods = 4;
    let xs = grid.positions();

    let scalar0 = init_gaussian(grid, 0.3, 0.0, 1.0, (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)), d.hbar_eff).unwrap();
    let mut matrix = scalar0.clone();
    for (i, &x) in xs.iter().enumerate() {
        let v = diagonalize(&scaled_coupling_rwa(x, 0.0, &d)).unit_column(0);
        let g = scalar0.minus[i];
        matrix.plus[i] = g * v[0];
        matrix.minus[i] = g * v[1];
    }
    let mut scalar = scalar0;

    let mut full = Propagator::new(grid, EvolutionMode::MatrixRot, d, TAU / spp as f64).unwrap();
    let mut adiabatic = Propagator::new(
        grid,
        EvolutionMode::Scalar(HamiltonianVariant::RwaAdiabaticSmallMinus),
        d,
        TAU / spp as f64,
    )
    .unwrap();

    // Averages over every step: at strobe times alone the counter-rotating term
    // is always in phase and biases the excited population by O(c / 2 gamma).
    let (mut pop_full, mut pop_adiabatic) = (0.0, 0.0);
    for _ in 0..periods * spp {
        full.split_step(&mut matrix).unwrap();
        adiabatic.split_step(&mut scalar).unwrap();
        pop_full += matrix.excited_population();
        // excited weight of the lower dressed state, (1 - a/r)/2, carried by the scalar packet
        for (i, &x) in xs.iter().enumerate() {
            let m = scaled_coupling_rwa(x, scalar.t, &d);
            pop_adiabatic += scalar.minus[i].norm_sqr() * 0.5 * (1.0 - m.a / m.half_gap()) * grid.dx();
        }
    }
    let rel_pop = (pop_full - pop_adiabatic).abs() / pop_adiabatic;
    assert!(rel_pop <= 0.05, "excited population {pop_full} vs {pop_adiabatic}");
    // the position density does not depend on the internal frame
    let (mean_full, var_full) = matrix.position_moments();
    let (mean_adiabatic, var_adiabatic) = scalar.position_moments();
    assert!((mean_full - mean_adiabatic).abs() <= 0.05 * mean_adiabatic.abs().max(1.0), "{mean_full} vs {mean_adiabatic}");
    assert!((var_full - var_adiabatic).abs() <= 0.05 * var_adiabatic, "{var_full} vs {var_adiabatic}");
}
