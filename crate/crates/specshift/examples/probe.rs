use specshift::circlefn::CircleFunction;
use specshift::doi::{
    haagerup_rep, loewner_kernel, ol_seminorm_lower_bound, schur_norm_lower_bound,
};
use specshift::linalg::{Complex64, UnitaryEigen};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

fn grid(n: usize) -> UnitaryEigen {
    let angles: Vec<f64> = (0..n)
        .map(|k| -PI + (k as f64 + 0.5) * TAU / n as f64)
        .collect();
    UnitaryEigen::from_angles(angles).unwrap()
}

fn main() {
    let f = CircleFunction::sawtooth();
    let mut bounds = Vec::new();
    for &d in &[16usize, 64, 256] {
        let t0 = Instant::now();
        let k = loewner_kernel(&f, &grid(d), &grid(d)).unwrap();
        let b = schur_norm_lower_bound(&k, 200, 0);
        bounds.push(b);
        println!("sawtooth schur bound({d}) = {b:.6}   [{:?}]", t0.elapsed());
    }
    println!("ratio 256/16 = {:.4}", bounds[2] / bounds[0]);
    for &n in &[1i64, 5, 8] {
        let t0 = Instant::now();
        let f = CircleFunction::monomial(n, Complex64::new(1.0, 0.0));
        let ol = ol_seminorm_lower_bound(&f, 32, 500, 0);
        let k = loewner_kernel(&f, &grid(32), &grid(32)).unwrap();
        let schur = schur_norm_lower_bound(&k, 500, 0);
        let upper = haagerup_rep(&f).unwrap().upper_bound();
        println!(
            "z^{n}: ol = {ol:.12}, schur = {schur:.12}, upper = {upper}   [{:?}]",
            t0.elapsed()
        );
    }
}
