//! Dataset loading, standardization and the command-line front end.

mod common;

use std::fs;
use std::path::Path;

use common::soil_shaped;
use horseshoe_fusion::{cli, standardize, Dataset, Error, Matrix};
use proptest::prelude::*;

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn loads_a_twenty_by_sixteen_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("soil.csv");
    let ds = soil_shaped(3);
    ds.write_csv(&path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 16);
    let back = Dataset::<f64>::load_csv(&path).unwrap();
    assert_eq!((back.n(), back.p()), (20, 15));
    assert_eq!(back.y, ds.y);
    assert_eq!(back.x, ds.x);
    assert_eq!(back.column_names, ds.column_names);
}

#[test]
fn response_column_may_be_anywhere() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.csv");
    write(&path, "a,y\n1.5,2\n-3,4e-1\n");
    let ds = Dataset::<f64>::load_csv(&path).unwrap();
    assert_eq!((ds.n(), ds.p()), (2, 1));
    assert_eq!(ds.y, vec![2.0, 0.4]);
    assert_eq!(ds.x, Matrix::from_rows(&[vec![1.5], vec![-3.0]]).unwrap());
    assert_eq!(ds.column_names, vec!["a".to_string()]);
}

#[test]
fn missing_cells_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("na.csv", "y,a,b\n1,2,NA\n3,4,5\n"),
        ("empty.csv", "y,a\n1,\n2,3\n"),
        ("nan.csv", "y,a\n1,NaN\n2,3\n"),
        ("ragged.csv", "y,a\n1,2,3\n"),
        ("noy.csv", "a,b\n1,2\n"),
    ] {
        let path = dir.path().join(name);
        write(&path, text);
        let err = Dataset::<f64>::load_csv(&path).unwrap_err();
        assert!(matches!(err, Error::Data(_) | Error::Csv(_)), "{name}: {err:?}");
    }
}

#[test]
fn standardize_hand_example() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    let ds = Dataset::unnamed(vec![1.0, 1.0, 4.0], x, "hand").unwrap();
    let s = standardize(&ds).unwrap();
    let r = 1.5f64.sqrt();
    let col = s.data().x().column(0);
    for (a, b) in col.iter().zip([-r, 0.0, r]) {
        assert!((a - b).abs() < 1e-15, "{col:?}");
    }
    assert_eq!(s.data().y(), &[-1.0, -1.0, 2.0]);
    assert_eq!(s.y_mean, 2.0);
    assert!((s.col_scales[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

#[test]
fn constant_column_is_degenerate() {
    let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
    let ds = Dataset::new(vec![0.0, 1.0, 2.0], x, vec!["a".into(), "flat".into()], "t").unwrap();
    assert!(matches!(standardize(&ds), Err(Error::DegenerateColumn(c)) if c == "flat"));
}

fn raw_dataset() -> impl Strategy<Value = Dataset<f64>> {
    (3usize..12, 1usize..6).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(-50.0..50.0f64, n),
            prop::collection::vec(-100.0..100.0f64, n * p),
            prop::collection::vec(0.1..10.0f64, p),
        )
            .prop_map(move |(y, xs, stretch)| {
                let mut x = Matrix::from_row_major(n, p, xs).unwrap();
                for i in 0..n {
                    for j in 0..p {
                        x[(i, j)] *= stretch[j];
                    }
                }
                Dataset::unnamed(y, x, "prop").unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn standardized_columns_have_zero_mean_and_unit_scale(ds in raw_dataset()) {
        let s = standardize(&ds).unwrap();
        let n = ds.n() as f64;
        prop_assert!(s.data().y().iter().sum::<f64>().abs() < 1e-10 * n * 50.0);
        for j in 0..ds.p() {
            let c = s.data().x().column(j);
            prop_assert!(c.iter().sum::<f64>().abs() < 1e-10 * n);
            prop_assert!((c.iter().map(|v| v * v).sum::<f64>() - n).abs() < 1e-10 * n);
        }
    }

    #[test]
    fn standardization_is_idempotent(ds in raw_dataset()) {
        let s = standardize(&ds).unwrap();
        let again = Dataset::unnamed(s.data().y().to_vec(), s.data().x().clone(), "again").unwrap();
        let t = standardize(&again).unwrap();
        for (a, b) in t.data().x().as_slice().iter().zip(s.data().x().as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(t.y_mean.abs() < 1e-10);
        prop_assert!(t.col_scales.iter().all(|&c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn original_scale_round_trip(ds in raw_dataset(), seed in 0u64..1000) {
        let s = standardize(&ds).unwrap();
        let p = ds.p();
        let slopes: Vec<f64> = (0..p).map(|j| ((seed + j as u64) % 7) as f64 - 3.0).collect();
        let beta_std: Vec<f64> = slopes.iter().zip(&s.col_scales).map(|(b, c)| b * c).collect();
        let (back, intercept) = s.to_original_scale(&beta_std);
        for (a, b) in back.iter().zip(&slopes) {
            prop_assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
        for i in 0..ds.n() {
            let row = ds.x.row(i);
            let direct = intercept + row.iter().zip(&back).map(|(a, b)| a * b).sum::<f64>();
            let via = s.predict(&beta_std, row);
            prop_assert!((direct - via).abs() < 1e-9 * direct.abs().max(1.0));
            // the standardized design reproduces the same fitted value
            let std_fit = s.y_mean + s.data().x().row(i).iter().zip(&beta_std).map(|(a, b)| a * b).sum::<f64>();
            prop_assert!((std_fit - via).abs() < 1e-9 * via.abs().max(1.0));
        }
    }

    #[test]
    fn csv_write_load_identity(ds in raw_dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        ds.write_csv(&path).unwrap();
        let back = Dataset::<f64>::load_csv(&path).unwrap();
        prop_assert_eq!(back.y, ds.y);
        prop_assert_eq!(back.x, ds.x);
    }
}

fn run(args: &[&str]) -> i32 {
    let argv: Vec<String> = std::iter::once("hsfuse").chain(args.iter().copied()).map(String::from).collect();
    cli::run(&argv)
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let data = dir.path().join("d.csv");
    soil_shaped(5).write_csv(&data).unwrap();
    let data = data.to_str().unwrap();
    let bad = dir.path().join("bad.csv");
    write(&bad, "y,a\n1,NA\n");
    let bad = bad.to_str().unwrap();

    // usage and configuration errors
    assert_eq!(run(&[]), 2);
    assert_eq!(run(&["fit", "--model", "nope", "--input", data]), 2);
    assert_eq!(run(&["fit", "--model", "bfh", "--input", data, "--iters", "10", "--burnin", "20", "--out-dir", out]), 2);
    assert_eq!(run(&["fit", "--model", "bhh", "--input", data, "--iters", "10", "--burnin", "2", "--out-dir", out]), 2);
    assert_eq!(run(&["fit", "--model", "bfh", "--input", data, "--nu0=-1", "--out-dir", out]), 2);
    assert_eq!(run(&["fit", "--config", "/nonexistent/cfg.txt"]), 2);
    // data errors
    assert_eq!(run(&["fit", "--model", "bfh", "--input", "/nonexistent/d.csv", "--out-dir", out]), 3);
    assert_eq!(run(&["fit", "--model", "bfh", "--input", bad, "--out-dir", out]), 3);
    // success
    assert_eq!(run(&["fit", "--model", "bfh", "--input", data, "--iters", "60", "--burnin", "20", "--out-dir", out]), 0);
    assert!(Path::new(out).join("summary.csv").exists());
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    soil_shaped(6).write_csv(&data).unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let code = run(&[
        "fit",
        "--model",
        "bfl",
        "--input",
        data.to_str().unwrap(),
        "--iters",
        "80",
        "--burnin",
        "30",
        "--seed",
        "4",
        "--draws",
        "--out-dir",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let manifest = first.join("manifest.txt");
    let code = run(&["fit", "--config", manifest.to_str().unwrap(), "--out-dir", second.to_str().unwrap()]);
    assert_eq!(code, 0);
    for f in ["summary.csv", "draws.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}
