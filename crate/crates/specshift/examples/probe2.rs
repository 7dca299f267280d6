use specshift::circlefn::CircleFunction;
use specshift::doi::{divided_difference, loewner_kernel};
use specshift::linalg::{cis, herm_eig, Complex64, ComplexMatrix, UnitaryEigen};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

fn grid(n: usize) -> UnitaryEigen {
    let angles: Vec<f64> = (0..n)
        .map(|k| -PI + (k as f64 + 0.5) * TAU / n as f64)
        .collect();
    UnitaryEigen::from_angles(angles).unwrap()
}

fn kernel_matrix(f: &CircleFunction, d: usize) -> ComplexMatrix {
    let g = grid(d);
    let k = loewner_kernel(f, &g, &g).unwrap();
    ComplexMatrix::from_fn(d, |i, j| k.at(i, j))
}

fn scaled(k: &ComplexMatrix, u: &[f64], v: &[f64]) -> ComplexMatrix {
    let d = k.dim();
    ComplexMatrix::from_fn(d, |i, j| k.at(i, j) * u[i] * v[j])
}

fn trace_norm_and_gradient(m: &ComplexMatrix) -> (f64, ComplexMatrix) {
    // M = U S V^*; trace norm = sum S; polar factor Z = U V^* = M (M^*M)^{-1/2}
    let gram = m.adjoint().mul(m);
    let eig = herm_eig(&gram).unwrap();
    let tn: f64 = eig.eigenvalues().iter().map(|&l| l.max(0.0).sqrt()).sum();
    let inv_sqrt: Vec<Complex64> = eig
        .eigenvalues()
        .iter()
        .map(|&l| {
            let s = l.max(0.0).sqrt();
            if s > 1e-14 {
                Complex64::new(1.0 / s, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let z = m.mul(&specshift::linalg::assemble(eig.vectors(), &inv_sqrt));
    (tn, z)
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

fn main() {
    let f = CircleFunction::sawtooth();
    for &d in &[16usize, 64, 256] {
        let t0 = Instant::now();
        let k = kernel_matrix(&f, d);
        let uniform = vec![1.0 / (d as f64).sqrt(); d];
        let mut center: Vec<f64> = (0..d)
            .map(|j| 1.0 / ((j as f64 - d as f64 / 2.0).abs() + 1.0).sqrt())
            .collect();
        normalize(&mut center);
        let mut wrap: Vec<f64> = (0..d)
            .map(|j| 1.0 / ((j + 1).min(d - j) as f64).sqrt())
            .collect();
        normalize(&mut wrap);

        for (name, u) in [("uniform", &uniform), ("center", &center), ("wrap", &wrap)] {
            let (tn, _) = trace_norm_and_gradient(&scaled(&k, u, u));
            println!("d={d} {name}: certificate {tn:.4}");
        }

        // Alternating ascent from the center profile (complex u, v allowed).
        let mut u: Vec<Complex64> = center.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut v = u.clone();
        let mut best = 0.0f64;
        for it in 0..12 {
            let m = ComplexMatrix::from_fn(d, |i, j| k.at(i, j) * u[i].conj() * v[j]);
            let (tn, z) = trace_norm_and_gradient(&m);
            if tn > best {
                best = tn;
            }
            // Gradient in u: c_i = sum_j conj(Z_ij) K_ij v_j ; u = c/||c||.
            let mut c: Vec<Complex64> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| z.at(i, j).conj() * k.at(i, j) * v[j])
                        .sum()
                })
                .collect();
            let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for x in c.iter_mut() {
                *x /= norm;
            }
            u = c.iter().map(|x| x.conj()).collect();
            // Gradient in v with the new u.
            let m = ComplexMatrix::from_fn(d, |i, j| k.at(i, j) * u[i].conj() * v[j]);
            let (_, z) = trace_norm_and_gradient(&m);
            let mut cv: Vec<Complex64> = (0..d)
                .map(|j| {
                    (0..d)
                        .map(|i| z.at(i, j) * k.at(i, j).conj() * u[i].conj().conj())
                        .sum::<Complex64>()
                        .conj()
                })
                .collect();
            let norm = cv.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for x in cv.iter_mut() {
                *x /= norm;
            }
            v = cv;
            if it % 4 == 3 {
                println!("d={d} ascent iter {it}: best {best:.4}");
            }
        }
        println!("d={d} ascent best = {best:.4}   [{:?}]", t0.elapsed());
        // Sanity: verify duality numerically at small d via random T.
        if d == 16 {
            let mut worst = 0.0f64;
            for trial in 0..2000u64 {
                let mut rng = specshift::random::seeded_rng(trial, 5);
                let t = ComplexMatrix::from_fn(d, |_, _| {
                    specshift::random::complex_gaussian(&mut rng)
                });
                let masked = ComplexMatrix::from_fn(d, |i, j| k.at(i, j) * t.at(i, j));
                let r = specshift::linalg::op_norm_lower(&masked)
                    / specshift::linalg::op_norm_lower(&t);
                worst = worst.max(r);
            }
            println!("d=16 random-T sup ratio over 2000 trials: {worst:.4} (must be <= true Schur norm, certificate {best:.4} must also be <= it... both lower bounds)");
        }
    }
    let _ = divided_difference(&f, cis(0.5), cis(0.7));
}
