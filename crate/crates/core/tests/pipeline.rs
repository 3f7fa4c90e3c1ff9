use blr_core::harness::{generate_problem, GridConfig};
use blr_core::sparse::{format_matrix_market, parse_matrix_market, vec_norm};
use blr_core::symbolic::analyse;
use blr_core::{factorize, AnalysisOptions, FactorOptions, OrderingKind, SparseMatrixCsc};
use proptest::prelude::*;

fn relative_residual(a: &SparseMatrixCsc, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).unwrap();
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    vec_norm(&r) / vec_norm(b)
}

fn grid_block(n_flux: usize, n_tht: usize, d: usize) -> SparseMatrixCsc {
    let grid = GridConfig {
        n_flux,
        n_tht,
        dofs_per_node: d,
        ..GridConfig::default()
    };
    generate_problem(&grid).unwrap().diag_blocks()[0].clone()
}

#[test]
fn nested_dissection_fill_close_to_minimum_degree() {
    let a = grid_block(16, 20, 1);
    let nd = analyse(
        &a,
        &AnalysisOptions {
            ordering: OrderingKind::GridNd { n_flux: 16, n_tht: 20 },
            ..AnalysisOptions::default()
        },
    )
    .unwrap();
    let amd = analyse(&a, &AnalysisOptions::default()).unwrap();
    let natural = analyse(
        &a,
        &AnalysisOptions {
            ordering: OrderingKind::Natural,
            ..AnalysisOptions::default()
        },
    )
    .unwrap();
    let (nd, amd, natural) = (nd.fill.nnz_l(), amd.fill.nnz_l(), natural.fill.nnz_l());
    assert!(nd as f64 <= 1.2 * amd as f64, "nd {nd} amd {amd}");
    assert!(amd < natural, "amd {amd} natural {natural}");
}

#[test]
fn matrix_market_roundtrip_then_solve() {
    let a = grid_block(6, 8, 2);
    let mut buf = Vec::new();
    format_matrix_market(&mut buf, &a).unwrap();
    let back = parse_matrix_market(buf.as_slice()).unwrap();
    assert_eq!(back, a);
    let an = analyse(&back, &AnalysisOptions { dofs_per_node: 2, ..AnalysisOptions::default() }).unwrap();
    let f = factorize(&back, &an, &FactorOptions::dense()).unwrap();
    let b: Vec<f64> = (0..a.n()).map(|i| (i as f64 * 0.37).sin()).collect();
    let x = f.solve(&b).unwrap();
    assert!(relative_residual(&a, &x, &b) < 1e-12);
}

#[test]
fn compressed_solve_error_tracks_epsilon() {
    let a = grid_block(32, 40, 4);
    let an = analyse(
        &a,
        &AnalysisOptions {
            ordering: OrderingKind::GridNd { n_flux: 32, n_tht: 40 },
            dofs_per_node: 4,
            ..AnalysisOptions::default()
        },
    )
    .unwrap();
    let b: Vec<f64> = (0..a.n()).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
    let mut last = 0.0;
    for eps in [1e-12, 1e-8, 1e-4] {
        let f = factorize(&a, &an, &FactorOptions::with_blr(eps)).unwrap();
        assert!(f.stats().compressed > 0);
        let res = relative_residual(&a, &f.solve(&b).unwrap(), &b);
        assert!(res < 100.0 * eps, "eps {eps}: residual {res}");
        assert!(res >= last * 0.5);
        last = res;
    }
}

fn random_matrix(n: usize, density: f64, seed: u64) -> SparseMatrixCsc {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for j in 0..n {
        t.push((j, j, 1.0 + rng.gen_range(0.0..1.0)));
        for i in 0..n {
            if i != j && rng.gen_bool(density) {
                t.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrixCsc::from_triplets(n, &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn direct_solve_residual(n in 2usize..80, density in 0.0f64..0.15, seed in any::<u64>(), fan_out in any::<bool>()) {
        let a = random_matrix(n, density, seed);
        let an = analyse(&a, &AnalysisOptions::default()).unwrap();
        let mut opts = FactorOptions::dense();
        if fan_out {
            opts.schedule = blr_core::Schedule::FanOut;
        }
        match factorize(&a, &an, &opts) {
            Ok(f) => {
                let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
                let x = f.solve(&b).unwrap();
                let res = relative_residual(&a, &x, &b);
                prop_assert!(res < 1e-9, "residual {}", res);
            }
            Err(e) => prop_assert!(e.is_singular()),
        }
    }

    #[test]
    fn lossless_compression_preserves_solution(n in 40usize..120, seed in any::<u64>()) {
        let a = random_matrix(n, 0.05, seed);
        let an = analyse(&a, &AnalysisOptions::default()).unwrap();
        let mut lossless = FactorOptions::with_blr(0.0);
        lossless.panel_min = 4;
        let (Ok(d), Ok(l)) = (factorize(&a, &an, &FactorOptions::dense()), factorize(&a, &an, &lossless)) else {
            return Ok(());
        };
        let b = vec![1.0; n];
        let (xd, xl) = (d.solve(&b).unwrap(), l.solve(&b).unwrap());
        let diff: Vec<f64> = xd.iter().zip(&xl).map(|(p, q)| p - q).collect();
        prop_assert!(vec_norm(&diff) <= 1e-10 * vec_norm(&xd));
        prop_assert!(l.ledger().factor_bytes <= d.ledger().factor_bytes);
    }
}
