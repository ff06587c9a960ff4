//! Dormand-Prince 5(4) integrator for small fixed-size systems.

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("non-finite right-hand side at t = {t}")]
    NonFinite { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
}

/// Error control: component `i` is measured against `atol[i] + rtol * |y_i|`.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
    pub h_max: f64,
    pub h_init: f64,
}

/// What the step observer wants next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One Dormand-Prince step from `(t, y)` with slope `k1`.
/// Returns the fifth-order solution, its slope, and the embedded error.
pub fn step<const N: usize, F>(
    rhs: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Result<([f64; N], [f64; N], [f64; N]), OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut eval = |tt: f64, yy: &[f64; N]| {
        let d = rhs(tt, yy);
        if finite(&d) {
            Ok(d)
        } else {
            Err(OdeError::NonFinite { t: tt })
        }
    };
    let k2 = eval(t + C2 * h, &combo(y, h, &[(A21, k1)]))?;
    let k3 = eval(t + C3 * h, &combo(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = eval(t + C4 * h, &combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = eval(t + C5 * h, &combo(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = eval(
        t + h,
        &combo(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y5 = combo(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = eval(t + h, &y5)?;
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok((y5, k7, err))
}

/// Integrates from `t0` to `t1` (> `t0`). The observer sees every accepted
/// node `(t, y, y')`, starting with the initial one, and may stop early.
/// Returns the last accepted `(t, y)`.
pub fn integrate<const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: &Tolerance<N>,
    mut observe: O,
) -> Result<(f64, [f64; N]), OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N], &[f64; N]) -> Flow,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    if !finite(&k1) {
        return Err(OdeError::NonFinite { t });
    }
    if observe(t, &y, &k1) == Flow::Stop {
        return Ok((t, y));
    }
    let span = t1 - t0;
    let mut h = tol.h_init.min(tol.h_max).min(span);
    let h_min = 1e-14 * (t0.abs() + t1.abs()).max(1e-300);
    while t < t1 {
        let last = t + h >= t1;
        let hh = if last { t1 - t } else { h };
        let (yn, kn, err) = match step(&mut rhs, t, &y, &k1, hh) {
            Ok(v) => v,
            Err(e) => {
                if hh <= h_min {
                    return Err(e);
                }
                h = 0.25 * hh;
                continue;
            }
        };
        let mut acc = 0.0;
        for i in 0..N {
            let sc = tol.atol[i] + tol.rtol * y[i].abs().max(yn[i].abs());
            let r = err[i] / sc;
            acc += r * r;
        }
        let e = (acc / N as f64).sqrt();
        if e <= 1.0 {
            t = if last { t1 } else { t + hh };
            y = yn;
            k1 = kn;
            if observe(t, &y, &k1) == Flow::Stop {
                return Ok((t, y));
            }
            let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = (hh * fac).min(tol.h_max);
        } else {
            h = hh * (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(OdeError::StepUnderflow { t });
            }
        }
    }
    Ok((t, y))
}
