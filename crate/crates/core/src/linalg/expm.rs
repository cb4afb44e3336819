//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham 2005).

use nalgebra::{ComplexField, DMatrix};

use crate::{Error, Result};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
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
];
const B13: [f64; 14] = [
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
];

/// `exp(a)` for a square real or complex matrix.
pub fn mat_exp<T>(a: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = super::ensure_square(a)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm1(a);
    let ident = DMatrix::<T>::identity(n, n);

    for (theta, coeffs) in [
        (THETA_3, &B3[..]),
        (THETA_5, &B5[..]),
        (THETA_7, &B7[..]),
        (THETA_9, &B9[..]),
    ] {
        if norm <= theta {
            let (u, v) = pade_low(a, coeffs, &ident);
            return Ok(solve_pade(u, v));
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * T::from_real(0.5_f64.powi(s));
    let (u, v) = pade13(&scaled, &ident);
    let mut x = solve_pade(u, v);
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

fn norm1<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scale<T: ComplexField<RealField = f64> + Copy>(m: &DMatrix<T>, c: f64) -> DMatrix<T> {
    m * T::from_real(c)
}

fn pade_low<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
    b: &[f64],
    ident: &DMatrix<T>,
) -> (DMatrix<T>, DMatrix<T>) {
    let a2 = a * a;
    // powers[k] = A^(2k)
    let mut powers = vec![ident.clone(), a2.clone()];
    let m = b.len() - 1;
    while powers.len() <= m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u = DMatrix::<T>::zeros(a.nrows(), a.ncols());
    let mut v = DMatrix::<T>::zeros(a.nrows(), a.ncols());
    for (k, p) in powers.iter().enumerate() {
        if 2 * k < m {
            u += scale(p, b[2 * k + 1]);
        }
        v += scale(p, b[2 * k]);
    }
    (a * u, v)
}

fn pade13<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
    ident: &DMatrix<T>,
) -> (DMatrix<T>, DMatrix<T>) {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]);
    let u = a
        * (&a6 * inner_u
            + scale(&a6, b[7])
            + scale(&a4, b[5])
            + scale(&a2, b[3])
            + scale(ident, b[1]));
    let inner_v = scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]);
    let v =
        &a6 * inner_v + scale(&a6, b[6]) + scale(&a4, b[4]) + scale(&a2, b[2]) + scale(ident, b[0]);
    (u, v)
}

fn solve_pade<T: ComplexField<RealField = f64> + Copy>(u: DMatrix<T>, v: DMatrix<T>) -> DMatrix<T> {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .expect("Pade denominator is nonsingular for the selected degree")
}
