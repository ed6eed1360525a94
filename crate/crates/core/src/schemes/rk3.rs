use crate::error::Result;

use super::check_finite;

/// One Shu–Osher SSP-RK3 step:
///
/// ```text
/// u1 = u + dt L(u)
/// u2 = 3/4 u + 1/4 (u1 + dt L(u1))
/// u+ = 1/3 u + 2/3 (u2 + dt L(u2))
/// ```
///
/// Non-finite values after any stage abort with the stage number.
pub fn rk3_advance<const N: usize, F>(state: &mut [[f64; N]], dt: f64, mut rhs: F) -> Result<()>
where
    F: FnMut(&[[f64; N]]) -> Result<Vec<[f64; N]>>,
{
    let l0 = rhs(state)?;
    let u1: Vec<[f64; N]> = state
        .iter()
        .zip(&l0)
        .map(|(u, l)| std::array::from_fn(|k| u[k] + dt * l[k]))
        .collect();
    check_finite(&u1, 1)?;

    let l1 = rhs(&u1)?;
    let u2: Vec<[f64; N]> = state
        .iter()
        .zip(u1.iter().zip(&l1))
        .map(|(u, (v, l))| std::array::from_fn(|k| 0.75 * u[k] + 0.25 * (v[k] + dt * l[k])))
        .collect();
    check_finite(&u2, 2)?;

    let l2 = rhs(&u2)?;
    for (u, (v, l)) in state.iter_mut().zip(u2.iter().zip(&l2)) {
        for k in 0..N {
            u[k] = u[k] / 3.0 + 2.0 / 3.0 * (v[k] + dt * l[k]);
        }
    }
    check_finite(state, 3)
}
