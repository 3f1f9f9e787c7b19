//! Matrix exponential by scaling and squaring with a diagonal Padé core
//! (degrees 3, 5, 7, 9, 13 chosen from the 1-norm).

use nalgebra::DMatrix;

use super::{c, ComplexMatrix, C64};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!(),
    }
}

fn r(x: f64) -> C64 {
    c(x, 0.0)
}

fn pade_low(a: &DMatrix<C64>, m: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let b = pade_coefficients(m);
    let ident = DMatrix::<C64>::identity(n, n);
    let a2 = a * a;
    let mut powers = vec![ident.clone(), a2.clone()];
    for k in 2..=m / 2 {
        let next = &powers[k - 1] * &a2;
        powers.push(next);
    }
    let mut u_inner = DMatrix::<C64>::zeros(n, n);
    let mut v = DMatrix::<C64>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u_inner += p * r(b[2 * k + 1]);
        v += p * r(b[2 * k]);
    }
    (a * u_inner, v)
}

fn pade_13(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let b = pade_coefficients(13);
    let ident = DMatrix::<C64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * r(b[13]) + &a4 * r(b[11]) + &a2 * r(b[9]);
    let u_inner = &a6 * u_hi + &a6 * r(b[7]) + &a4 * r(b[5]) + &a2 * r(b[3]) + &ident * r(b[1]);
    let u = a * u_inner;
    let v_hi = &a6 * r(b[12]) + &a4 * r(b[10]) + &a2 * r(b[8]);
    let v = &a6 * v_hi + &a6 * r(b[6]) + &a4 * r(b[4]) + &a2 * r(b[2]) + &ident * r(b[0]);
    (u, v)
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn expm_raw(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite("matrix exponential input".into()));
    }
    if norm == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let (u, v, squarings) = match THETA.iter().find(|(_, th)| norm <= *th) {
        Some(&(m, _)) => {
            let (u, v) = pade_low(a, m);
            (u, v, 0)
        }
        None => {
            let s = ((norm / THETA_13).log2().ceil()).max(0.0) as i32;
            let scaled = a * r(0.5f64.powi(s));
            let (u, v) = pade_13(&scaled);
            (u, v, s)
        }
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut x = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Singular("Pade denominator".into()))?;
    for _ in 0..squarings {
        x = &x * &x;
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix exponential (overflow)".into()));
    }
    Ok(x)
}

/// e^{tA}.
pub fn matrix_exponential(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t} is not finite")));
    }
    let scaled = a.as_dmatrix() * r(t);
    expm_raw(&scaled).map(ComplexMatrix::wrap)
}

/// Fast repeated evaluation of e^{θA} for θ in [0, θ_max].
///
/// e^{θA} = e^{khA} e^{δA} with kh the nearest grid point; the grid factors are
/// exact exponentials and the remainder uses a Taylor polynomial whose
/// truncation error is below 1e-17 relative. Outside the range the direct
/// exponential is used.
pub struct ExponentialTable {
    a: ComplexMatrix,
    h: f64,
    grid: Vec<DMatrix<C64>>,
    taylor: Vec<DMatrix<C64>>,
}

const TABLE_CAP: usize = 1 << 14;

impl ExponentialTable {
    pub fn new(a: &ComplexMatrix, theta_max: f64) -> Result<Self> {
        let norm = a.one_norm();
        let theta_max = theta_max.max(0.0);
        let mut h = if norm > 0.0 { 0.25 / norm } else { theta_max.max(1.0) };
        if theta_max / h > TABLE_CAP as f64 {
            h = theta_max / TABLE_CAP as f64;
        }
        // Taylor order so that x^{q+1}/(q+1)! e^x < 1e-17 with x = h‖A‖/2.
        let x = 0.5 * h * norm;
        let mut q = 1usize;
        let mut term = x;
        while q < 60 && term * x / (q as f64 + 1.0) * x.exp() > 1e-17 {
            term *= x / (q as f64 + 1.0);
            q += 1;
        }
        q += 1;
        let k_max = (theta_max / h).ceil() as usize + 1;
        let mut grid = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            grid.push(expm_raw(&(a.as_dmatrix() * r(k as f64 * h)))?);
        }
        let n = a.dim();
        let mut taylor = Vec::with_capacity(q + 1);
        let mut p = DMatrix::<C64>::identity(n, n);
        taylor.push(p.clone());
        for j in 1..=q {
            p = &p * a.as_dmatrix() * r(1.0 / j as f64);
            taylor.push(p.clone());
        }
        Ok(Self { a: a.clone(), h, grid, taylor })
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn eval(&self, theta: f64) -> Result<ComplexMatrix> {
        if !(theta >= 0.0) {
            return Err(Error::InvalidParameter(format!("time {theta} must be >= 0")));
        }
        let k = (theta / self.h).round() as usize;
        if k >= self.grid.len() {
            return matrix_exponential(&self.a, theta);
        }
        let delta = theta - k as f64 * self.h;
        if delta == 0.0 {
            return Ok(ComplexMatrix::wrap(self.grid[k].clone()));
        }
        let n = self.a.dim();
        let mut poly = DMatrix::<C64>::zeros(n, n);
        let mut w = 1.0;
        for t in &self.taylor {
            poly.zip_apply(t, |p, x| *p += x * w);
            w *= delta;
        }
        Ok(ComplexMatrix::wrap(&self.grid[k] * poly))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{operator_norm, ONE, ZERO};
    use crate::testutil::{random_hermitian, random_matrix, rng};
    use nalgebra::DMatrix;

    #[test]
    fn zero_time_is_identity() {
        let mut g = rng(1);
        let a = random_matrix(&mut g, 4, 5.0);
        assert_eq!(matrix_exponential(&a, 0.0).unwrap(), ComplexMatrix::identity(4));
    }

    #[test]
    fn scalar_case() {
        let a = ComplexMatrix::from_real_diagonal(&[-1.0]);
        let e = matrix_exponential(&a, 1.0).unwrap();
        assert!((e[(0, 0)] - c((-1.0f64).exp(), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn nilpotent_is_truncated_taylor() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        for &t in &[0.3, 1.0, 7.5, 40.0] {
            let e = matrix_exponential(&a, t).unwrap();
            let expected = &ComplexMatrix::identity(2) + &a.scale_real(t);
            assert!(operator_norm(&(&e - &expected)) <= 1e-13 * (1.0 + t));
        }
    }

    #[test]
    fn hermitian_against_eigendecomposition() {
        let mut g = rng(9);
        for n in 1..7 {
            let h = random_hermitian(&mut g, n, 1.0);
            let nrm = operator_norm(&h);
            for &target in &[0.01, 1.0, 10.0, 40.0, 100.0] {
                let t = target / nrm;
                let eig = h.as_dmatrix().clone().symmetric_eigen();
                let d = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        c((t * eig.eigenvalues[i]).exp(), 0.0)
                    } else {
                        ZERO
                    }
                });
                let exact = ComplexMatrix::wrap(&eig.eigenvectors * d * eig.eigenvectors.adjoint());
                let e = matrix_exponential(&h, t).unwrap();
                let rel = operator_norm(&(&e - &exact)) / operator_norm(&exact);
                assert!(rel < 1e-12, "n={n} ‖tA‖={target} rel={rel:e}");
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        let a = ComplexMatrix::from_real_diagonal(&[1.0]);
        assert!(matches!(matrix_exponential(&a, 1000.0), Err(Error::NonFinite(_))));
        assert!(matrix_exponential(&a, f64::NAN).is_err());
    }

    #[test]
    fn table_matches_direct() {
        let mut g = rng(4);
        for &scale in &[0.1, 1.0, 6.0] {
            let a = random_matrix(&mut g, 5, scale);
            let table = ExponentialTable::new(&a, 12.0).unwrap();
            for &theta in &[0.0, 1e-3, 0.37, 2.0, 5.123, 11.9, 12.5, 30.0] {
                let direct = matrix_exponential(&a, theta).unwrap();
                let fast = table.eval(theta).unwrap();
                let err = operator_norm(&(&direct - &fast));
                assert!(err <= 1e-12 * (1.0 + operator_norm(&direct)), "scale={scale} θ={theta} err={err:e}");
            }
        }
        let z = ExponentialTable::new(&ComplexMatrix::zeros(2), 3.0).unwrap();
        assert_eq!(z.eval(2.0).unwrap()[(0, 0)], ONE);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn semigroup_law(seed in any::<u64>(), scale in 0.1f64..10.0, s in 0.0f64..10.0, t in 0.0f64..10.0) {
                let mut g = rng(seed);
                let mut a = random_matrix(&mut g, 4, 1.0);
                a = a.scale_real(scale / operator_norm(&a));
                let lhs = matrix_exponential(&a, s + t).unwrap();
                let rhs = &matrix_exponential(&a, s).unwrap() * &matrix_exponential(&a, t).unwrap();
                let err = operator_norm(&(&lhs - &rhs));
                prop_assert!(err <= 1e-10 * (1.0 + operator_norm(&lhs)), "err = {:e}", err);
            }
        }
    }
}
