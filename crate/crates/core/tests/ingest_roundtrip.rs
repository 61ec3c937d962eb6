use ndarray::Array2;
use proptest::prelude::*;

use qpcr_xai::ingest::{
    impute_undetermined, parse_ct_table, parse_labels, standardize, Class, CtMatrix, Orientation,
    IMPUTED_CT,
};

fn arb_matrix() -> impl Strategy<Value = CtMatrix> {
    (2usize..7, 1usize..6).prop_flat_map(|(s, g)| {
        (
            prop::collection::vec(prop::option::weighted(0.85, 15.0f64..40.0), s * g),
            prop::collection::vec(any::<bool>(), s),
        )
            .prop_map(move |(cells, flags)| {
                let values = Array2::from_shape_fn((s, g), |(i, j)| cells[i * g + j].unwrap_or(f64::NAN));
                let labels = flags
                    .into_iter()
                    .map(|f| if f { Class::Flight } else { Class::GroundControl })
                    .collect();
                CtMatrix::new(
                    (0..s).map(|i| format!("S{i}")).collect(),
                    (0..g).map(|j| format!("Gene{j}")).collect(),
                    values,
                    labels,
                )
                .unwrap()
            })
    })
}

fn genes_as_rows(m: &CtMatrix) -> String {
    let mut out = String::from("gene");
    for s in m.sample_ids() {
        out.push('\t');
        out.push_str(s);
    }
    out.push('\n');
    for (j, g) in m.gene_names().iter().enumerate() {
        out.push_str(g);
        for v in m.column(j) {
            out.push('\t');
            if v.is_nan() {
                out.push_str("undetermined");
            } else {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

fn same(a: &CtMatrix, b: &CtMatrix) -> bool {
    a.sample_ids() == b.sample_ids()
        && a.gene_names() == b.gene_names()
        && a.labels() == b.labels()
        && a.missing_mask() == b.missing_mask()
        && a.values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

proptest! {
    #[test]
    fn canonical_csv_round_trips(m in arb_matrix()) {
        let labels = parse_labels(&m.labels_csv()).unwrap();
        let back = parse_ct_table(&m.to_canonical_csv(), Orientation::SamplesAsRows, &labels).unwrap();
        prop_assert!(same(&m, &back));
        let transposed = parse_ct_table(&genes_as_rows(&m), Orientation::GenesAsRows, &labels).unwrap();
        prop_assert!(same(&m, &transposed));
    }

    #[test]
    fn imputation_fills_only_missing_cells(m in arb_matrix()) {
        let imputed = impute_undetermined(&m);
        prop_assert!(!imputed.has_unimputed());
        for ((a, b), missing) in m.values().iter().zip(imputed.values()).zip(m.missing_mask()) {
            if *missing {
                prop_assert_eq!(*b, IMPUTED_CT);
            } else {
                prop_assert_eq!(a, b);
            }
        }
        prop_assert_eq!(imputed.missing_mask(), m.missing_mask());
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_sd(m in arb_matrix()) {
        let x = standardize(&impute_undetermined(&m), None).unwrap();
        let n = x.n_samples() as f64;
        for col in x.values().columns() {
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!(sd.abs() < 1e-9 || (sd - 1.0).abs() < 1e-9);
        }
    }
}
