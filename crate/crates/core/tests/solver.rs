use ncfair_core::ncpoly::{make_variables, Polynomial, Word};
use ncfair_core::npa::{assemble_sdp, NcpopProblem, RelaxationOrder};
use ncfair_core::sdp::{
    solve, BlockEntry, LinearEquality, PsdBlock, SdpProblem, SolveStatus, SolverConfig,
};

fn x_poly(terms: &[(usize, f64)]) -> Polynomial {
    let v = make_variables(["x"]).unwrap();
    Polynomial::from_terms(
        &v,
        terms.iter().map(|&(d, c)| (Word::from_letters(vec![0; d]), c)),
    )
    .unwrap()
}

fn order(k: usize) -> RelaxationOrder {
    RelaxationOrder::new(k).unwrap()
}

#[test]
fn min_x_squared() {
    let r = assemble_sdp(&NcpopProblem::new(x_poly(&[(2, 1.0)])), order(1)).unwrap();
    let sol = solve(&r.sdp, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.objective_value.abs() < 1e-5, "{sol:?}");
    assert!(sol.values[1].abs() < 1e-3);
}

#[test]
fn min_shifted_square() {
    let p = x_poly(&[(2, 1.0), (1, -2.0), (0, 1.0)]);
    let r = assemble_sdp(&NcpopProblem::new(p), order(1)).unwrap();
    let sol = solve(&r.sdp, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.objective_value.abs() < 1e-5, "{sol:?}");
    assert!((sol.values[1] - 1.0).abs() < 1e-2);
}

#[test]
fn min_x_on_unit_interval() {
    let p = NcpopProblem::new(x_poly(&[(1, 1.0)])).with_inequality(x_poly(&[(0, 1.0), (2, -1.0)]));
    let r = assemble_sdp(&p, order(1)).unwrap();
    let sol = solve(&r.sdp, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective_value + 1.0).abs() < 1e-5, "{sol:?}");
}

#[test]
fn contradictory_equalities_are_infeasible() {
    let p = SdpProblem::new(
        1,
        vec![(0, 1.0)],
        vec![],
        vec![
            LinearEquality { coeffs: vec![(0, 1.0)], rhs: 1.0 },
            LinearEquality { coeffs: vec![(0, 1.0)], rhs: 2.0 },
        ],
        SdpProblem::default_names(1),
    )
    .unwrap();
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn negative_definite_constant_block_is_infeasible() {
    // [[-1, y],[y, -1]] can never be PSD.
    let p = SdpProblem::new(
        1,
        vec![(0, 1.0)],
        vec![PsdBlock {
            dim: 2,
            entries: vec![
                BlockEntry { row: 0, col: 0, constant: -1.0, coeffs: vec![] },
                BlockEntry { row: 0, col: 1, constant: 0.0, coeffs: vec![(0, 1.0)] },
                BlockEntry { row: 1, col: 1, constant: -1.0, coeffs: vec![] },
            ],
        }],
        vec![],
        SdpProblem::default_names(1),
    )
    .unwrap();
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible, "{sol:?}");
}

#[test]
fn unconstrained_linear_objective_is_unbounded() {
    let r = assemble_sdp(&NcpopProblem::new(x_poly(&[(1, 1.0)])), order(1)).unwrap();
    let sol = solve(&r.sdp, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded, "{sol:?}");
}

#[test]
fn solves_are_bitwise_deterministic() {
    let p = NcpopProblem::new(x_poly(&[(4, 1.0), (2, -3.0), (1, 1.0)]));
    let r = assemble_sdp(&p, order(2)).unwrap();
    let a = solve(&r.sdp, &SolverConfig::default()).unwrap();
    let b = solve(&r.sdp, &SolverConfig::default()).unwrap();
    assert_eq!(a.status, SolveStatus::Optimal, "{a:?}");
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.values), bits(&b.values));
}

#[test]
fn invalid_config_is_rejected() {
    let r = assemble_sdp(&NcpopProblem::new(x_poly(&[(2, 1.0)])), order(1)).unwrap();
    let cfg = SolverConfig { tolerance: 0.0, ..SolverConfig::default() };
    assert!(solve(&r.sdp, &cfg).is_err());
}
