mod common;

use cellca::ca::{
    chi2_distance_cols, chi2_distance_rows, decompose, fit_many, row_distance_matrix,
    verify_transition,
};
use cellca::diagnostics::{decompose_inertia, outlier_report, reorder_by_dimension};
use cellca::io::{read_table_str, write_table, ReadOptions, SolutionDocument};
use cellca::linalg::svd;
use cellca::reconstitution::{verify_elimination, InitRule};
use cellca::{
    fit_ca, fit_supplementary, reconstitute, CellSet, ContingencyTable, Error, Matrix,
    ReconstitutionConfig, Strategy as Exec, SupplementarySpec,
};
use proptest::prelude::*;

fn table(max_dim: usize, max_entry: u32) -> impl Strategy<Value = ContingencyTable> {
    sized_table(2, max_dim, max_entry)
}

fn sized_table(
    min_dim: usize,
    max_dim: usize,
    max_entry: u32,
) -> impl Strategy<Value = ContingencyTable> {
    (min_dim..=max_dim, min_dim..=max_dim)
        .prop_flat_map(move |(i, j)| {
            prop::collection::vec(0..=max_entry, i * j).prop_map(move |v| (i, j, v))
        })
        .prop_filter_map("positive margins", |(i, j, v)| {
            let x = Matrix::from_row_major(i, j, v.into_iter().map(f64::from).collect()).ok()?;
            ContingencyTable::unlabeled(x).ok()
        })
}

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(m, n)| {
        prop::collection::vec(-10.0f64..10.0, m * n)
            .prop_map(move |v| Matrix::from_row_major(m, n, v).unwrap())
    })
}

fn gram_error(m: &Matrix, cols: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..cols {
        for b in 0..cols {
            let dot: f64 = (0..m.rows()).map(|i| m[(i, a)] * m[(i, b)]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - want).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn svd_reconstructs_and_is_orthonormal(m in matrix()) {
        let f = svd(&m).unwrap();
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        prop_assert!(f.reconstruct().max_abs_diff(&m).unwrap() <= 1e-9 * scale.max(1.0));
        let k = f.sigma.len();
        prop_assert!(gram_error(&f.u, k) <= 1e-10);
        prop_assert!(gram_error(&f.v, k) <= 1e-10);
        prop_assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.sigma.iter().all(|&s| s >= 0.0));
        prop_assert_eq!(svd(&m).unwrap(), f);
    }

    #[test]
    fn svd_values_ignore_permutation(m in matrix()) {
        let rows: Vec<usize> = (0..m.rows()).rev().collect();
        let cols: Vec<usize> = (0..m.cols()).rev().collect();
        let a = svd(&m).unwrap().sigma;
        let b = svd(&m.select(&rows, &cols)).unwrap().sigma;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * a[0].max(1.0));
        }
    }

    #[test]
    fn solution_invariants(t in table(6, 9)) {
        let d = decompose(&t).unwrap();
        let sol = fit_ca(&t).unwrap();
        prop_assert!((d.p.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(sol.rank < t.n_rows().min(t.n_cols()));
        let sum_sq: f64 = sol.sigma.iter().chain(&sol.null_sigma).map(|s| s * s).sum();
        prop_assert!((sol.total_inertia - sum_sq).abs() <= 1e-10);
        prop_assert!(verify_transition(&sol, &d).unwrap() <= 1e-8);
        let biplot = sol.biplot_matrix();
        prop_assert!(biplot.max_abs_diff(&d.profile_residuals()).unwrap() <= 1e-8);
        for i in 0..t.n_rows() {
            for k in 0..sol.rank {
                prop_assert_eq!(sol.f[(i, k)], sol.phi[(i, k)] * sol.sigma[k]);
            }
        }
    }

    #[test]
    fn distances_are_metric_like(t in table(5, 6)) {
        let d = decompose(&t).unwrap();
        for i in 0..t.n_rows() {
            for i2 in 0..t.n_rows() {
                let a = chi2_distance_rows(&d, i, i2).unwrap();
                prop_assert!(a >= 0.0);
                prop_assert_eq!(a, chi2_distance_rows(&d, i2, i).unwrap());
            }
            prop_assert_eq!(chi2_distance_rows(&d, i, i).unwrap(), 0.0);
        }
        for j in 0..t.n_cols() {
            prop_assert_eq!(chi2_distance_cols(&d, j, j).unwrap(), 0.0);
        }
    }

    #[test]
    fn inertia_decomposition_sums(t in table(6, 9)) {
        let sol = fit_ca(&t).unwrap();
        let dec = decompose_inertia(&t, &sol).unwrap();
        for k in 0..sol.rank {
            let r: f64 = dec.row_contrib.column(k).iter().sum();
            let c: f64 = dec.col_contrib.column(k).iter().sum();
            prop_assert!((r - 1.0).abs() <= 1e-8 && (c - 1.0).abs() <= 1e-8);
            for i in 0..t.n_rows() {
                let via_inertia = dec.row_point_inertia[(i, k)] / (sol.sigma[k] * sol.sigma[k]);
                prop_assert!((dec.row_contrib[(i, k)] - via_inertia).abs() <= 1e-10);
            }
        }
        prop_assert!((dec.cell_inertia.sum() - dec.total_inertia).abs() <= 1e-10);
        let point_total = dec.row_point_inertia.sum();
        let null: f64 = sol.null_sigma.iter().map(|s| s * s).sum();
        prop_assert!((point_total + null - dec.total_inertia).abs() <= 1e-8);
    }

    #[test]
    fn report_is_scale_invariant(t in table(5, 9), n in 1usize..4) {
        let rep = |t: &ContingencyTable| {
            let sol = fit_ca(t).unwrap();
            let r = outlier_report(&decompose_inertia(t, &sol).unwrap(), n);
            let labels: Vec<_> = r.dimensions.iter()
                .map(|d| (
                    d.rows.iter().map(|p| p.index).collect::<Vec<_>>(),
                    d.cols.iter().map(|p| p.index).collect::<Vec<_>>(),
                ))
                .collect();
            let cells: Vec<_> = r.cells.iter().map(|c| (c.row_index, c.col_index)).collect();
            (labels, cells)
        };
        let scaled = t.with_entries(t.x().scale(7.0)).unwrap();
        prop_assert_eq!(rep(&t), rep(&scaled));
    }

    #[test]
    fn report_shares_in_unit_interval(t in table(6, 9)) {
        let sol = fit_ca(&t).unwrap();
        let r = outlier_report(&decompose_inertia(&t, &sol).unwrap(), 3);
        for d in &r.dimensions {
            for p in d.rows.iter().chain(&d.cols) {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&p.contribution));
            }
            prop_assert!(d.rows.windows(2).all(|w| w[0].contribution >= w[1].contribution - 1e-12));
        }
        for c in &r.cells {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c.share));
        }
    }

    #[test]
    fn reorder_is_a_permutation(t in table(6, 9)) {
        let sol = fit_ca(&t).unwrap();
        prop_assume!(sol.rank >= 1);
        let r = reorder_by_dimension(&t, &sol, 1).unwrap();
        let mut rm = r.row_margins();
        let mut tm = t.row_margins();
        rm.sort_by(f64::total_cmp);
        tm.sort_by(f64::total_cmp);
        prop_assert_eq!(rm, tm);
        let s2 = fit_ca(&r).unwrap();
        for (a, b) in s2.sigma.iter().zip(&sol.sigma) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn order_zero_fixed_point(t in table(6, 9), pick in any::<prop::sample::Index>()) {
        let cell = pick.index(t.n_rows() * t.n_cols());
        let cell = (cell / t.n_cols(), cell % t.n_cols());
        let Ok(cells) = CellSet::new(&t, [cell]) else { return Ok(()) };
        match reconstitute(&t, &cells, &ReconstitutionConfig::with_order(0)) {
            Ok(res) => {
                for i in 0..t.n_rows() {
                    for j in 0..t.n_cols() {
                        if (i, j) != cell {
                            prop_assert_eq!(res.table.x()[(i, j)].to_bits(), t.x()[(i, j)].to_bits());
                        }
                    }
                }
                prop_assert!(verify_elimination(&res, &cells, 0) <= 1e-7);
                let r = &res.solution;
                prop_assert!(r.inner_product(cell.0, cell.1, r.rank).abs() <= 1e-6);
                prop_assert_eq!(res.trace.len(), res.iterations_used);
            }
            Err(Error::DegenerateCellSet(_)) => {}
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn order_one_fixed_point(t in sized_table(3, 6, 9), pick in any::<prop::sample::Index>()) {
        let cell = pick.index(t.n_rows() * t.n_cols());
        let cell = (cell / t.n_cols(), cell % t.n_cols());
        let Ok(cells) = CellSet::new(&t, [cell]) else { return Ok(()) };
        let cfg = ReconstitutionConfig {
            negative_policy: cellca::NegativePolicy::Error,
            max_iterations: 2000,
            ..ReconstitutionConfig::with_order(1)
        };
        if let Ok(res) = reconstitute(&t, &cells, &cfg) {
            prop_assert!(verify_elimination(&res, &cells, 1) <= 10.0 * cfg.tolerance);
        }
    }

    #[test]
    fn idempotent_from_observed(t in table(5, 9), pick in any::<prop::sample::Index>()) {
        let cell = pick.index(t.n_rows() * t.n_cols());
        let cell = (cell / t.n_cols(), cell % t.n_cols());
        let Ok(cells) = CellSet::new(&t, [cell]) else { return Ok(()) };
        let Ok(first) = reconstitute(&t, &cells, &ReconstitutionConfig::with_order(0)) else {
            return Ok(());
        };
        let cfg = ReconstitutionConfig { init: InitRule::Observed, ..ReconstitutionConfig::with_order(0) };
        let again = reconstitute(&first.table, &cells, &cfg).unwrap();
        prop_assert!(again.iterations_used <= 2);
    }

    #[test]
    fn supplementary_projection(t in table(6, 9), w in 1.0f64..20.0) {
        prop_assume!(t.n_rows() >= 3);
        let last = t.n_rows() - 1;
        let label = t.row_labels()[last].clone();
        let Ok(s) = fit_supplementary(&t, &SupplementarySpec::new([label.clone()], Vec::<String>::new())) else {
            return Ok(());
        };
        let keep: Vec<usize> = (0..last).collect();
        let cols: Vec<usize> = (0..t.n_cols()).collect();
        let direct = fit_ca(&t.select(&keep, &cols).unwrap()).unwrap();
        prop_assert_eq!(&s.base, &direct);

        // scaling the supplementary row moves nothing
        let mut x = t.x().clone();
        for j in 0..t.n_cols() {
            x[(last, j)] *= w;
        }
        let scaled = fit_supplementary(&t.with_entries(x.clone()).unwrap(),
            &SupplementarySpec::new([label.clone()], Vec::<String>::new())).unwrap();
        for (a, b) in scaled.sup_row_coords[&label].iter().zip(&s.sup_row_coords[&label]) {
            prop_assert!((a - b).abs() <= 1e-12);
        }

        // the average profile projects to the origin
        let cm = direct.col_masses.clone();
        for j in 0..t.n_cols() {
            x[(last, j)] = cm[j] * 10.0;
        }
        let avg = fit_supplementary(&t.with_entries(x).unwrap(),
            &SupplementarySpec::new([label.clone()], Vec::<String>::new())).unwrap();
        prop_assert!(avg.sup_row_coords[&label].iter().all(|v| v.abs() <= 1e-8));
    }

    #[test]
    fn csv_and_document_round_trip(t in table(6, 50)) {
        let back = read_table_str(&write_table(&t), &ReadOptions::default()).unwrap();
        prop_assert_eq!(&back, &t);
        let sol = fit_ca(&t).unwrap();
        let doc = SolutionDocument::new(&t, &sol);
        let again = SolutionDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&again, &doc);
        prop_assert_eq!(again.solution().unwrap().phi, sol.phi);
    }

    #[test]
    fn strategies_agree(tables in prop::collection::vec(table(5, 9), 1..6)) {
        let a = fit_many(&tables, Exec::Sequential);
        let b = fit_many(&tables, Exec::Parallel);
        prop_assert_eq!(a, b);
        let d = decompose(&tables[0]).unwrap();
        prop_assert_eq!(
            row_distance_matrix(&d, Exec::Sequential),
            row_distance_matrix(&d, Exec::Parallel)
        );
    }
}
