//! Spectra of 3×3 real matrices via the characteristic cubic.
//!
//! One real root is taken from the closed-form solution and polished by
//! Newton's method, the cubic is deflated, and the remaining quadratic is
//! solved with the cancellation-free formula. The deflating root is the one
//! with the largest |p′|, so a double root is left to the quadratic, where a
//! rounding-level discriminant is recognised and the pair is returned intact.

use num_complex::Complex64;

pub type Mat3 = [[f64; 3]; 3];

/// Coefficients (c2, c1, c0) of λ³ + c2 λ² + c1 λ + c0 = det(λI − J).
pub fn char_poly(j: &Mat3) -> (f64, f64, f64) {
    let tr = j[0][0] + j[1][1] + j[2][2];
    let minors = j[0][0] * j[1][1] - j[0][1] * j[1][0] + j[0][0] * j[2][2] - j[0][2] * j[2][0]
        + j[1][1] * j[2][2]
        - j[1][2] * j[2][1];
    (-tr, minors, -det(j))
}

pub fn det(j: &Mat3) -> f64 {
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

/// |det(J − λI)| evaluated directly in complex arithmetic.
pub fn det_shifted(j: &Mat3, lambda: Complex64) -> f64 {
    let a = |r: usize, c: usize| {
        let v = Complex64::new(j[r][c], 0.0);
        if r == c {
            v - lambda
        } else {
            v
        }
    };
    let d = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    d.norm()
}

fn cubic_real_roots_closed_form(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    // Depressed cubic t³ + p t + q with λ = t − c2/3.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if p == 0.0 && q == 0.0 {
        return vec![-shift];
    }
    if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        vec![u + v - shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = if r == 0.0 {
            0.0
        } else {
            (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0)
        };
        let phi = arg.acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() - shift)
            .collect()
    }
}

fn newton_real(c2: f64, c1: f64, c0: f64, mut x: f64) -> f64 {
    let poly = |x: f64| ((x + c2) * x + c1) * x + c0;
    for _ in 0..8 {
        let fx = poly(x);
        let dfx = (3.0 * x + 2.0 * c2) * x + c1;
        if fx == 0.0 || dfx == 0.0 {
            break;
        }
        let nx = x - fx / dfx;
        if !nx.is_finite() || poly(nx).abs() >= fx.abs() {
            break;
        }
        x = nx;
    }
    x
}

fn newton_complex(c2: f64, c1: f64, c0: f64, z: Complex64) -> Complex64 {
    let poly = |z: Complex64| ((z + c2) * z + c1) * z + c0;
    let fz = poly(z);
    let dfz = (3.0 * z + 2.0 * c2) * z + c1;
    if dfz.norm() == 0.0 {
        return z;
    }
    let nz = z - fz / dfz;
    if nz.re.is_finite() && nz.im.is_finite() && poly(nz).norm() < fz.norm() {
        nz
    } else {
        z
    }
}

fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    // λ² + b λ + c
    let disc = b * b - 4.0 * c;
    // A discriminant at rounding level is a double root; taking its square
    // root would split the pair by about √ε.
    if disc.abs() <= 32.0 * f64::EPSILON * (b * b + 4.0 * c.abs()) {
        let r = Complex64::new(-b / 2.0, 0.0);
        return [r, r];
    }
    if disc >= 0.0 {
        let s = disc.sqrt();
        let q = -0.5 * (b + b.signum() * s);
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        let (r1, r2) = (q, c / q);
        [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(-b / 2.0, s / 2.0), Complex64::new(-b / 2.0, -s / 2.0)]
    }
}

/// Eigenvalues sorted by real part, then imaginary part.
pub fn eigenvalues(j: &Mat3) -> [Complex64; 3] {
    let (c2, c1, c0) = char_poly(j);
    let candidates = cubic_real_roots_closed_form(c2, c1, c0);
    let r = candidates
        .into_iter()
        .map(|x| newton_real(c2, c1, c0, x))
        .map(|x| (x, ((3.0 * x + 2.0 * c2) * x + c1).abs()))
        // Deflate by the best-separated root so a double root stays in the quadratic.
        .fold((f64::NAN, -1.0), |best, cand| if cand.1 > best.1 { cand } else { best })
        .0;
    // Deflate: λ³ + c2 λ² + c1 λ + c0 = (λ − r)(λ² + q1 λ + q0).
    let q1 = c2 + r;
    let q0 = c1 + r * q1;
    let [a, b] = quadratic_roots(q1, q0);
    let mut out = if a == b {
        [Complex64::new(r, 0.0), a, b]
    } else {
        [Complex64::new(r, 0.0), newton_complex(c2, c1, c0, a), newton_complex(c2, c1, c0, b)]
    };
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    out
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = norm(&a);
    // Fix the sign so the largest component is positive; keeps output stable.
    let mut idx = 0;
    for i in 1..3 {
        if a[i].abs() > a[idx].abs() {
            idx = i;
        }
    }
    let s = if a[idx] < 0.0 { -1.0 } else { 1.0 };
    [s * a[0] / n, s * a[1] / n, s * a[2] / n]
}

/// Orthonormal-ish basis of the null space of J − λI for real λ.
pub fn null_space(j: &Mat3, lambda: f64) -> Vec<[f64; 3]> {
    let mut a = *j;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, x| s.max(x.abs()))
        .max(1.0);
    let tol = 1e-9 * scale;
    let crosses = [cross(&a[0], &a[1]), cross(&a[0], &a[2]), cross(&a[1], &a[2])];
    let best = crosses
        .iter()
        .copied()
        .fold([0.0; 3], |b, c| if norm(&c) > norm(&b) { c } else { b });
    if norm(&best) > tol * scale {
        return vec![normalized(best)];
    }
    let row = a.iter().copied().fold([0.0; 3], |b, r| if norm(&r) > norm(&b) { r } else { b });
    if norm(&row) <= tol {
        return vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let mut k = 0;
    for i in 1..3 {
        if row[i].abs() < row[k].abs() {
            k = i;
        }
    }
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let u = normalized(cross(&row, &e));
    let w = normalized(cross(&row, &u));
    vec![u, w]
}

/// Eigenvectors for the real eigenvalues; `None` for complex eigenvalues and
/// for the missing directions of defective ones.
pub fn eigenvectors(j: &Mat3, values: &[Complex64; 3]) -> [Option<[f64; 3]>; 3] {
    let mut out = [None; 3];
    let mut i = 0;
    while i < 3 {
        let lam = values[i];
        if lam.im.abs() > 1e-12 * lam.norm().max(1.0) {
            i += 1;
            continue;
        }
        let mut cluster = vec![i];
        let mut k = i + 1;
        while k < 3 && (values[k] - lam).norm() <= 1e-9 * lam.norm().max(1.0) {
            cluster.push(k);
            k += 1;
        }
        let basis = null_space(j, lam.re);
        for (slot, v) in cluster.iter().zip(basis) {
            out[*slot] = Some(v);
        }
        i = k;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_roots(j: &Mat3, vals: &[Complex64; 3]) {
        for &l in vals {
            assert!(det_shifted(j, l) < 1e-10, "residual {} at {l}", det_shifted(j, l));
        }
    }

    #[test]
    fn diagonal() {
        let j = [[2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.5]];
        let v = eigenvalues(&j);
        assert_eq!(v.map(|c| c.re), [-1.0, 0.5, 2.0]);
        check_roots(&j, &v);
    }

    #[test]
    fn triangular_with_double_zero() {
        let j = [[0.0, 0.0, 0.0], [1.0, -1.5, 0.0], [0.0, 0.0, 0.0]];
        let v = eigenvalues(&j);
        assert_eq!(v.map(|c| c.re), [-1.5, 0.0, 0.0]);
        assert!(v.iter().all(|c| c.im == 0.0));
    }

    #[test]
    fn complex_pair() {
        // rotation block plus a real eigenvalue
        let j = [[0.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 3.0]];
        let v = eigenvalues(&j);
        check_roots(&j, &v);
        assert!((v[0].im.abs() - 2.0).abs() < 1e-12);
        assert!((v[2].re - 3.0).abs() < 1e-12);
        let vecs = eigenvectors(&j, &v);
        assert!(vecs[0].is_none() && vecs[1].is_none());
        assert_eq!(vecs[2], Some([0.0, 0.0, 1.0]));
    }

    #[test]
    fn double_root_is_not_split() {
        // Similar to diag(1, 1, 8/3) through a non-triangular change of basis.
        let j = [[1.0, 0.0, 0.0], [0.7, 8.0 / 3.0, 0.0], [0.0, -0.4, 1.0]];
        let v = eigenvalues(&j);
        assert!((v[0].re - 1.0).abs() < 1e-14 && (v[1].re - 1.0).abs() < 1e-14, "{v:?}");
        assert!((v[2].re - 8.0 / 3.0).abs() < 1e-14);
        let j = [[2.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.5, 0.3, 3.0]];
        let v = eigenvalues(&j);
        assert!((v[0].re - 1.0).abs() < 1e-14 && (v[1].re - 1.0).abs() < 1e-14, "{v:?}");
    }

    #[test]
    fn triple_root() {
        let j = [[0.0; 3]; 3];
        let v = eigenvalues(&j);
        assert!(v.iter().all(|c| c.norm() == 0.0));
        let vecs = eigenvectors(&j, &v);
        assert!(vecs.iter().all(|x| x.is_some()));
    }

    #[test]
    fn eigenvectors_solve_the_eigenproblem() {
        let j = [[-1.0, -1.0, 1.0], [0.0, 1.3, 0.0], [0.0, 0.0, 2.0]];
        let vals = eigenvalues(&j);
        let vecs = eigenvectors(&j, &vals);
        for (l, v) in vals.iter().zip(vecs) {
            let v = v.unwrap();
            for r in 0..3 {
                let jv: f64 = (0..3).map(|c| j[r][c] * v[c]).sum();
                assert!((jv - l.re * v[r]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn defective_block_reports_one_vector() {
        let j = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 5.0]];
        let vals = eigenvalues(&j);
        let vecs = eigenvectors(&j, &vals);
        assert_eq!(vecs.iter().filter(|v| v.is_some()).count(), 2);
    }

    proptest::proptest! {
        #[test]
        fn random_matrices_have_small_residuals(e in proptest::array::uniform9(-2.0f64..2.0)) {
            let j = [[e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]];
            let v = eigenvalues(&j);
            for &l in &v {
                proptest::prop_assert!(det_shifted(&j, l) < 1e-10);
            }
        }
    }
}
