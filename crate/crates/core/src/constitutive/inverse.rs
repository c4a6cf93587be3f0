//! The rotated map F(v) = g(|v|)v + ζJv and its inverse X.
//!
//! Because v·Jv = 0, the magnitude s = |v| of the preimage solves a scalar
//! monotone equation. In the plane it is s·sqrt(g(s)² + ζ²) = |y| and v then
//! follows from the explicit inverse of gI + ζJ. In three dimensions the
//! scalar equation seeds a damped Newton iteration on the full system.

use super::law::LocalLaw;
use super::rotation::{AxisCross, PlaneRotation, SkewMap};
use super::ConstitutiveError;

/// Default relative tolerance on the vector residual.
pub const DEFAULT_TOL: f64 = 1e-10;

const SCALAR_MAX_ITER: usize = 200;
const NEWTON_MAX_ITER: usize = 60;

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// F(v) = g(|v|)v + zJv.
pub fn forward<const N: usize, J: SkewMap<N>>(law: &LocalLaw, j: &J, z: f64, v: [f64; N]) -> [f64; N] {
    let g = law.g(norm(&v));
    let jv = j.apply(v);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = g * v[i] + z * jv[i];
    }
    out
}

pub fn forward_2d(law: &LocalLaw, z: f64, v: [f64; 2]) -> [f64; 2] {
    forward(law, &PlaneRotation, z, v)
}

/// Root of a strictly increasing `f` on `[0, hi]` with `f(0) ≤ 0 ≤ f(hi)`.
///
/// Newton steps are taken when they stay inside the current bracket,
/// bisection otherwise. Converges in the relative sense: the returned root is
/// accurate to a few ulps even when it is tiny.
fn monotone_root(f: impl Fn(f64) -> (f64, f64), hi: f64) -> Result<f64, ConstitutiveError> {
    let (mut lo, mut hi) = (0.0f64, hi);
    let mut s = hi;
    let (mut fs, mut dfs) = f(s);
    if fs <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..SCALAR_MAX_ITER {
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let newton = s - fs / dfs;
        let next = if dfs.is_finite() && dfs > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - s).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        s = next;
        (fs, dfs) = f(s);
        if fs == 0.0 {
            return Ok(s);
        }
    }
    Err(ConstitutiveError::Convergence { residual: fs.abs(), iterations: SCALAR_MAX_ITER })
}

/// A priori upper bound for |v| given |F(v)| ≤ m: g(s)s ≤ m gives both
/// s ≤ m/a₀ and s ≤ (m/a_N)^{1/(1+ᾱ_N)}.
fn magnitude_bound(law: &LocalLaw, m: f64, zeta: f64) -> f64 {
    let linear = m / law.a0().hypot(zeta);
    let growth = (m / law.a_top()).powf(1.0 / (1.0 + law.deg_top()));
    linear.min(growth)
}

fn check_tol(tol: f64) -> Result<(), ConstitutiveError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(ConstitutiveError::InvalidInput(format!("tolerance must be positive, got {tol}")))
    }
}

fn check_rotation(zeta: f64) -> Result<(), ConstitutiveError> {
    if zeta >= 0.0 && zeta.is_finite() {
        Ok(())
    } else {
        Err(ConstitutiveError::InvalidInput(format!("rotation magnitude must be ≥ 0, got {zeta}")))
    }
}

/// Solves F(v) = y in the plane for rotation magnitude `zeta` ≥ 0.
pub fn invert_2d(law: &LocalLaw, zeta: f64, y: [f64; 2], tol: f64) -> Result<[f64; 2], ConstitutiveError> {
    check_tol(tol)?;
    check_rotation(zeta)?;
    let m = y[0].hypot(y[1]);
    if m == 0.0 {
        return Ok([0.0, 0.0]);
    }
    if !m.is_finite() {
        return Err(ConstitutiveError::InvalidInput(format!("non-finite argument {y:?}")));
    }
    let z2 = zeta * zeta;
    let s = monotone_root(
        |s| {
            let (g, dg) = law.g_and_dg(s);
            let q = (g * g + z2).sqrt();
            (s * q - m, q + s * g * dg / q)
        },
        magnitude_bound(law, m, zeta),
    )?;
    let g = law.g(s);
    let d = g * g + z2;
    // (gI + ζJ)⁻¹ = (gI − ζJ)/(g² + ζ²) since J² = −I.
    let v = [(g * y[0] + zeta * y[1]) / d, (g * y[1] - zeta * y[0]) / d];
    let fv = forward_2d(law, zeta, v);
    let residual = (fv[0] - y[0]).hypot(fv[1] - y[1]);
    if residual > tol * (1.0 + m) {
        return Err(ConstitutiveError::Convergence { residual, iterations: SCALAR_MAX_ITER });
    }
    Ok(v)
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        *o = det(mc) / d;
    }
    Some(out)
}

/// Solves F(v) = y with Jv = k̂ × v.
pub fn invert_3d(
    law: &LocalLaw,
    axis: &AxisCross,
    zeta: f64,
    y: [f64; 3],
    tol: f64,
) -> Result<[f64; 3], ConstitutiveError> {
    check_tol(tol)?;
    check_rotation(zeta)?;
    let m = norm(&y);
    if m == 0.0 {
        return Ok([0.0; 3]);
    }
    if !m.is_finite() {
        return Err(ConstitutiveError::InvalidInput(format!("non-finite argument {y:?}")));
    }
    let k = axis.axis();
    let along = dot3(y, k);
    let y_par = [along * k[0], along * k[1], along * k[2]];
    let y_perp = [y[0] - y_par[0], y[1] - y_par[1], y[2] - y_par[2]];
    let (p2, q2) = (along * along, dot3(y_perp, y_perp));
    let z2 = zeta * zeta;
    // |v(s)|² = |y_∥|²/g² + |y_⊥|²/(g² + ζ²) is nonincreasing in s.
    let s = monotone_root(
        |s| {
            let (g, dg) = law.g_and_dg(s);
            let (a, b) = (g * g, g * g + z2);
            let r = (p2 / a + q2 / b).sqrt();
            let dr = if r > 0.0 { -(p2 / (a * g) + q2 * g / (b * b)) * dg / r } else { 0.0 };
            (s - r, 1.0 - dr)
        },
        magnitude_bound(law, m, 0.0),
    )?;
    let g = law.g(s);
    let ky = axis.apply(y_perp);
    let d = g * g + z2;
    let mut v = [0.0; 3];
    for i in 0..3 {
        v[i] = y_par[i] / g + (g * y_perp[i] - zeta * ky[i]) / d;
    }

    let residual_of = |v: [f64; 3]| {
        let f = forward(law, axis, zeta, v);
        norm(&[f[0] - y[0], f[1] - y[1], f[2] - y[2]])
    };
    let target = tol * (1.0 + m);
    let mut res = residual_of(v);
    let mut iterations = 0;
    while res > target {
        if iterations == NEWTON_MAX_ITER {
            return Err(ConstitutiveError::Convergence { residual: res, iterations });
        }
        iterations += 1;
        // DF(v) = gI + (g'/|v|) v vᵀ + ζK.
        let sv = norm(&v);
        let (g, dg) = law.g_and_dg(sv);
        let c = if sv > 0.0 { dg / sv } else { 0.0 };
        let mut jac = [[0.0; 3]; 3];
        for (r, row) in jac.iter_mut().enumerate() {
            for (col, entry) in row.iter_mut().enumerate() {
                let e = [(col == 0) as u8 as f64, (col == 1) as u8 as f64, (col == 2) as u8 as f64];
                *entry = if r == col { g } else { 0.0 } + c * v[r] * v[col] + zeta * axis.apply(e)[r];
            }
        }
        let f = forward(law, axis, zeta, v);
        let rhs = [y[0] - f[0], y[1] - f[1], y[2] - f[2]];
        let Some(dv) = solve3(jac, rhs) else {
            return Err(ConstitutiveError::Convergence { residual: res, iterations });
        };
        let mut step = 1.0;
        loop {
            let trial = [v[0] + step * dv[0], v[1] + step * dv[1], v[2] + step * dv[2]];
            let r = residual_of(trial);
            if r < res || step < 1e-12 {
                v = trial;
                res = r;
                break;
            }
            step *= 0.5;
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g1ps() -> LocalLaw {
        LocalLaw::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn documented_values() {
        let l = g1ps();
        assert_eq!(forward_2d(&l, 1.0, [1.0, 0.0]), [2.0, 1.0]);
        assert_eq!(forward_2d(&l, 3.0, [0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(forward_2d(&l, 0.0, [0.5, 0.0]), [0.75, 0.0]);
        let v = invert_2d(&l, 0.0, [2.0, 0.0], DEFAULT_TOL).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1] == 0.0);
        // (1+s)s = 1 has root (√5−1)/2.
        let v = invert_2d(&l, 0.0, [1.0, 0.0], DEFAULT_TOL).unwrap();
        assert!((v[0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(invert_2d(&g1ps(), 0.0, [1.0, 0.0], 0.0).is_err());
        assert!(invert_2d(&g1ps(), -1.0, [1.0, 0.0], 1e-10).is_err());
    }

    #[test]
    fn extreme_magnitudes_invert() {
        let l = LocalLaw::new(vec![0.0, 0.3, 4.0], vec![1e-3, 5.0, 1e-2]).unwrap();
        for m in [1e-12, 1e-6, 1.0, 1e6, 1e9] {
            for zeta in [0.0, 1e-6, 1.0, 1e6] {
                let y = [0.6 * m, -0.8 * m];
                let v = invert_2d(&l, zeta, y, DEFAULT_TOL).unwrap();
                let f = forward_2d(&l, zeta, v);
                assert!((f[0] - y[0]).hypot(f[1] - y[1]) <= 1e-12 * (1.0 + m), "m={m} zeta={zeta}");
            }
        }
    }

    fn arb_law() -> impl Strategy<Value = LocalLaw> {
        (0.01f64..10.0, 0.0f64..10.0, 0.01f64..10.0, 0.05f64..2.0, 0.05f64..2.0)
            .prop_map(|(a0, a1, a2, d1, dd)| LocalLaw::new(vec![0.0, d1, d1 + dd], vec![a0, a1, a2]).unwrap())
    }

    fn log_uniform() -> impl Strategy<Value = f64> {
        (-6.0f64..6.0).prop_map(|e| 10f64.powf(e))
    }

    proptest! {
        #[test]
        fn planar_inverse_identity_and_oddness(
            law in arb_law(), zeta in log_uniform(), m in log_uniform(), angle in 0.0f64..6.3
        ) {
            let v = [m * angle.cos(), m * angle.sin()];
            let y = forward_2d(&law, zeta, v);
            let back = invert_2d(&law, zeta, y, DEFAULT_TOL).unwrap();
            prop_assert!((back[0] - v[0]).hypot(back[1] - v[1]) <= 1e-9 * (1.0 + m));
            let neg = invert_2d(&law, zeta, [-y[0], -y[1]], DEFAULT_TOL).unwrap();
            prop_assert!((neg[0] + back[0]).abs() <= 1e-12 * (1.0 + m));
            prop_assert!((neg[1] + back[1]).abs() <= 1e-12 * (1.0 + m));
            // |F(v)| = |v| sqrt(g² + z²).
            let g = law.g(m);
            let fm = y[0].hypot(y[1]);
            prop_assert!((fm - m * g.hypot(zeta)).abs() <= 1e-12 * fm.max(1.0));
        }

        #[test]
        fn planar_monotonicity(
            law in arb_law(), zeta in 0.0f64..10.0,
            v1 in prop::array::uniform2(-5.0f64..5.0), v2 in prop::array::uniform2(-5.0f64..5.0)
        ) {
            prop_assume!(v1 != v2);
            let f1 = forward_2d(&law, zeta, v1);
            let f2 = forward_2d(&law, zeta, v2);
            let inner = (f1[0] - f2[0]) * (v1[0] - v2[0]) + (f1[1] - f2[1]) * (v1[1] - v2[1]);
            prop_assert!(inner > 0.0);
        }

        #[test]
        fn spatial_inverse_identity(
            law in arb_law(), zeta in log_uniform(), m in log_uniform(),
            dir in prop::array::uniform3(-1.0f64..1.0), axis in prop::array::uniform3(-1.0f64..1.0)
        ) {
            let dn = norm(&dir);
            let an = norm(&axis);
            prop_assume!(dn > 1e-3 && an > 1e-3);
            let k = AxisCross::new([axis[0] / an, axis[1] / an, axis[2] / an]);
            prop_assume!(k.is_ok());
            let k = k.unwrap();
            let v = [m * dir[0] / dn, m * dir[1] / dn, m * dir[2] / dn];
            let y = forward(&law, &k, zeta, v);
            let back = invert_3d(&law, &k, zeta, y, DEFAULT_TOL).unwrap();
            let f = forward(&law, &k, zeta, back);
            let ym = norm(&y);
            prop_assert!(norm(&[f[0] - y[0], f[1] - y[1], f[2] - y[2]]) <= DEFAULT_TOL * (1.0 + ym));
            let neg = invert_3d(&law, &k, zeta, [-y[0], -y[1], -y[2]], DEFAULT_TOL).unwrap();
            prop_assert!(norm(&[neg[0] + back[0], neg[1] + back[1], neg[2] + back[2]]) <= 1e-9 * (1.0 + m));
        }
    }
}
