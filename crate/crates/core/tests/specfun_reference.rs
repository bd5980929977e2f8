//! Faddeeva values against tables produced by `data/faddeeva_reference.py`
//! (mpmath, 40 digits).

use qarrival::specfun::faddeeva_w;
use qarrival::{Complex64, Error};

enum Expected {
    Value(Complex64),
    Overflow,
}

fn load(name: &str) -> Vec<(Complex64, Expected)> {
    let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).expect("reference table");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let u = Complex64::new(f[0].parse().unwrap(), f[1].parse().unwrap());
            let e = if f[2] == "overflow" {
                Expected::Overflow
            } else {
                Expected::Value(Complex64::new(f[2].parse().unwrap(), f[3].parse().unwrap()))
            };
            (u, e)
        })
        .collect()
}

fn check(name: &str, tol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (u, expected) in load(name) {
        match expected {
            Expected::Overflow => {
                assert!(
                    matches!(faddeeva_w(u), Err(Error::Overflow(_))),
                    "expected overflow at {u}"
                );
            }
            Expected::Value(w) => {
                let got = faddeeva_w(u).unwrap_or_else(|e| panic!("{u}: {e}"));
                let err = (got - w).norm() / w.norm();
                assert!(err < tol, "u = {u}: got {got}, want {w}, rel err {err:e}");
                worst = worst.max(err);
            }
        }
    }
    worst
}

#[test]
fn polar_grid_both_half_planes() {
    let worst = check("faddeeva_reference.csv", 1e-10);
    eprintln!("worst relative error on polar grid: {worst:e}");
}

#[test]
fn near_real_axis_strip() {
    let worst = check("faddeeva_near_axis.csv", 1e-10);
    eprintln!("worst relative error near the real axis: {worst:e}");
}
