//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13, chosen from the 1-norm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub(crate) fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(m)` for a square real matrix.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    assert!(m.is_square(), "expm needs a square matrix");
    let n = m.nrows();
    let norm = one_norm(m);
    if !norm.is_finite() {
        return Err(Error::Overflow { scaled_norm: norm });
    }
    if n == 0 || norm == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let ident = DMatrix::<f64>::identity(n, n);

    for &(deg, theta) in &THETA[..4] {
        if norm <= theta {
            let (u, v) = match deg {
                3 => low_order(m, &ident, &B3),
                5 => low_order(m, &ident, &B5),
                7 => low_order(m, &ident, &B7),
                _ => low_order(m, &ident, &B9),
            };
            return finish(u, v, 0, norm);
        }
    }

    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(Error::Overflow { scaled_norm: norm });
    }
    let scaled = m * 2f64.powi(-s);
    let (u, v) = order13(&scaled, &ident);
    finish(u, v, s as u32, norm)
}

fn low_order(a: &DMatrix<f64>, ident: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let a2 = a * a;
    let mut even = ident * b[0];
    let mut odd = ident * b[1];
    let mut power = ident.clone();
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        even += &power * b[2 * k];
        odd += &power * b[2 * k + 1];
    }
    (a * odd, even)
}

fn order13(a: &DMatrix<f64>, ident: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    (u, v)
}

fn finish(u: DMatrix<f64>, v: DMatrix<f64>, squarings: u32, norm: f64) -> Result<DMatrix<f64>> {
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Eigen("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Overflow { scaled_norm: norm });
        }
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow { scaled_norm: norm });
    }
    Ok(r)
}
