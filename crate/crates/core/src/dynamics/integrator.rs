//! Dormand–Prince 5(4) with Hairer's continuous extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::operator::{CMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Replace ρ by (ρ + ρ†)/2 after every accepted step.
    pub hermitize_each_step: bool,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 1.0, hermitize_each_step: true, max_steps: 5_000_000 }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.rel_tol) {
            return Err(Error::InvalidParameter { name: "rel_tol", reason: format!("{} not in (0, 1)", self.rel_tol) });
        }
        if !in_unit(self.abs_tol) {
            return Err(Error::InvalidParameter { name: "abs_tol", reason: format!("{} not in (0, 1)", self.abs_tol) });
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter { name: "max_step", reason: format!("{} must be positive", self.max_step) });
        }
        Ok(())
    }
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Rhs<'a> {
    gen: &'a Generator,
    scratch: CMatrix,
}

impl Rhs<'_> {
    fn eval(&mut self, y: &CMatrix, out: &mut CMatrix) {
        self.gen.apply_into(y, out, &mut self.scratch);
    }
}

/// `out = y + h Σ a_i k_i`
fn combine(out: &mut CMatrix, y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) {
    let dst = out.as_mut_slice();
    dst.copy_from_slice(y.as_slice());
    for &(a, k) in terms {
        if a == 0.0 {
            continue;
        }
        let w = h * a;
        for (o, v) in dst.iter_mut().zip(k.as_slice()) {
            *o += v * w;
        }
    }
}

fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn rms(values: impl Iterator<Item = f64>, len: usize) -> f64 {
    (values.map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt()
}

fn initial_step(rhs: &mut Rhs, y0: &CMatrix, f0: &CMatrix, opts: &IntegratorOptions) -> f64 {
    let len = y0.len();
    let sc: Vec<f64> = y0.iter().map(|v| opts.abs_tol + opts.rel_tol * v.norm()).collect();
    let d0 = rms(y0.iter().zip(&sc).map(|(v, s)| v.norm() / s), len);
    let d1 = rms(f0.iter().zip(&sc).map(|(v, s)| v.norm() / s), len);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = y0.clone();
    combine(&mut y1, y0, h0, &[(1.0, f0)]);
    let mut f1 = CMatrix::zeros(y0.nrows(), y0.ncols());
    rhs.eval(&y1, &mut f1);
    let d2 = rms(f1.iter().zip(f0.iter()).zip(&sc).map(|((a, b), s)| (a - b).norm() / s), len) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Integrates `dy/dt = gen(y)` from `y(0) = y0` to `t_final`, calling `emit`
/// with the interpolated state at every record time.
pub(crate) fn integrate<F>(
    gen: &Generator,
    y0: CMatrix,
    t_final: f64,
    record_times: &[f64],
    opts: &IntegratorOptions,
    mut emit: F,
) -> Result<()>
where
    F: FnMut(f64, CMatrix) -> Result<()>,
{
    let (n, m) = (y0.nrows(), y0.ncols());
    let zeros = || CMatrix::zeros(n, m);
    let mut rhs = Rhs { gen, scratch: zeros() };
    let mut y = y0;
    let mut next = 0;
    while next < record_times.len() && record_times[next] <= 0.0 {
        emit(record_times[next], y.clone())?;
        next += 1;
    }

    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros());
    let (mut stage, mut y1) = (zeros(), zeros());
    rhs.eval(&y, &mut k1);
    let mut h = initial_step(&mut rhs, &y, &k1, opts);
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut rejected = false;

    while t < t_final {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::TooManySteps { t });
        }
        h = h.min(opts.max_step);
        let last = t + h >= t_final;
        if last {
            h = t_final - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(Error::StepSizeUnderflow { t });
        }

        combine(&mut stage, &y, h, &[(A21, &k1)]);
        rhs.eval(&stage, &mut k2);
        combine(&mut stage, &y, h, &[(A31, &k1), (A32, &k2)]);
        rhs.eval(&stage, &mut k3);
        combine(&mut stage, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        rhs.eval(&stage, &mut k4);
        combine(&mut stage, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        rhs.eval(&stage, &mut k5);
        combine(&mut stage, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        rhs.eval(&stage, &mut k6);
        combine(&mut y1, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        rhs.eval(&y1, &mut k7);

        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = opts.abs_tol + opts.rel_tol * y[i].norm().max(y1[i].norm());
            acc += (e.norm() / sc).powi(2);
        }
        let err = (acc / y.len().max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            rejected = true;
            continue;
        }

        if err <= 1.0 {
            let t_new = if last { t_final } else { t + h };
            if next < record_times.len() && record_times[next] <= t_new {
                let rc2 = &y1 - &y;
                let rc3 = &k1 * C64::new(h, 0.0) - &rc2;
                let rc4 = &rc2 - &k7 * C64::new(h, 0.0) - &rc3;
                let mut rc5 = zeros();
                combine(&mut rc5, &zeros(), h, &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)]);
                while next < record_times.len() && record_times[next] <= t_new {
                    let tr = record_times[next];
                    let mut out = if tr == t_new {
                        y1.clone()
                    } else {
                        let th = (tr - t) / h;
                        let th1 = 1.0 - th;
                        let inner = &rc4 + &rc5 * C64::new(th1, 0.0);
                        let inner = &rc3 + inner * C64::new(th, 0.0);
                        let inner = &rc2 + inner * C64::new(th1, 0.0);
                        &y + inner * C64::new(th, 0.0)
                    };
                    if opts.hermitize_each_step {
                        hermitize(&mut out);
                    }
                    emit(tr, out)?;
                    next += 1;
                }
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y1);
            if opts.hermitize_each_step {
                hermitize(&mut y);
            }
            std::mem::swap(&mut k1, &mut k7);
            let mut factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if rejected {
                factor = factor.min(1.0);
            }
            rejected = false;
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            rejected = true;
        }
    }
    while next < record_times.len() {
        emit(record_times[next], y.clone())?;
        next += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Generator;
    use crate::operator::{Op, Register};

    #[test]
    fn dense_output_is_fifth_order_accurate() {
        // Oracle: H = σ_z on one qubit rotates the coherence as e^{−2it}. Large
        // steps force interpolation between steps.
        let reg = Register::new(1, 0, false).unwrap();
        let g = Generator::from_parts(Op::new(crate::operator::pauli::z(), reg).unwrap(), vec![]).unwrap();
        let half = C64::new(0.5, 0.0);
        let y0 = CMatrix::from_element(2, 2, half);
        let times: Vec<f64> = (1..200).map(|k| 0.05 * k as f64 + 0.0123).collect();
        let opts = IntegratorOptions { rel_tol: 1e-10, abs_tol: 1e-12, ..Default::default() };
        let mut worst: f64 = 0.0;
        integrate(&g, y0, 10.0, &times, &opts, |t, y| {
            let expect = half * C64::new(0.0, -2.0 * t).exp();
            worst = worst.max((y[(0, 1)] - expect).norm());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn options_validation() {
        assert!(IntegratorOptions::default().validate().is_ok());
        assert!(IntegratorOptions { rel_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(IntegratorOptions { abs_tol: 1.5, ..Default::default() }.validate().is_err());
        assert!(IntegratorOptions { max_step: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn step_budget_is_reported() {
        let reg = Register::new(1, 0, false).unwrap();
        let g = Generator::from_parts(Op::new(crate::operator::pauli::z() * C64::new(50.0, 0.0), reg).unwrap(), vec![]).unwrap();
        let opts = IntegratorOptions { max_steps: 10, ..Default::default() };
        let y0 = CMatrix::from_element(2, 2, C64::new(0.5, 0.0));
        assert!(matches!(integrate(&g, y0, 10.0, &[], &opts, |_, _| Ok(())), Err(Error::TooManySteps { .. })));
    }
}
