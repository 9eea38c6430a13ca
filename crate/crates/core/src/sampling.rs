//! Sampling lower-bound oracle: execute the program in machine
//! arithmetic on rounded inputs and compare against a high-precision
//! reference at the corresponding real input, maximizing the observed
//! absolute error. Real inputs are drawn inside the rounding cell of a
//! random float, so the input-rounding component of the error is
//! exercised; for conditional programs a bisection probe hunts for real
//! inputs whose rounding flips the branch test.

use crate::expr::Expr;
use crate::interval::Interval;
use crate::program::ProgramSpec;
use crate::rational::{f64_to_rat, pow2, Rat};
use num::traits::{Signed, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("rejection sampling starved: acceptance rate below 1e-4")]
    RejectionSamplingStarved,
    #[error("unsupported precision {0} for machine execution (use 24 or 53)")]
    UnsupportedPrecision(u32),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub max_abs_error: Rat,
    pub samples_requested: usize,
    pub accepted: usize,
    pub boundary_probes: usize,
    pub seed: u64,
}

/// Reference enclosure with exact branch resolution: conditions are
/// polynomial and evaluated exactly, so the reference follows the true
/// real-arithmetic branch.
fn reference_eval(e: &Expr, env: &[Rat]) -> Result<Interval, SamplingError> {
    match e {
        Expr::IfThenElse(c, t, el) => {
            let cv = c
                .eval(env)
                .map_err(|er| SamplingError::Eval(er.to_string()))?;
            if !cv.is_negative() {
                reference_eval(t, env)
            } else {
                reference_eval(el, env)
            }
        }
        _ => {
            if e.contains_conditional() {
                let inlined = e.inline_lets();
                if let Expr::IfThenElse(..) = inlined {
                    return reference_eval(&inlined, env);
                }
                return Err(SamplingError::Eval(
                    "conditional below the top level".to_string(),
                ));
            }
            e.eval_enclosure(env)
                .map_err(|er| SamplingError::Eval(er.to_string()))
        }
    }
}

/// Distance from a point to an interval; zero inside. This is the sound
/// lower bound on |machine − exact| given only an enclosure of exact.
fn distance_to(enclosure: &Interval, v: &Rat) -> Rat {
    if v < &enclosure.lo {
        &enclosure.lo - v
    } else if v > &enclosure.hi {
        v - &enclosure.hi
    } else {
        Rat::zero()
    }
}

fn machine_value(
    spec: &ProgramSpec,
    precision: u32,
    point_f64: &[f64],
) -> Result<Rat, SamplingError> {
    let v = match precision {
        53 => spec.objective.eval_f64(point_f64),
        24 => {
            let p32: Vec<f32> = point_f64.iter().map(|&x| x as f32).collect();
            spec.objective.eval_f32(&p32) as f64
        }
        other => return Err(SamplingError::UnsupportedPrecision(other)),
    };
    if !v.is_finite() {
        return Err(SamplingError::Eval("non-finite machine value".to_string()));
    }
    f64_to_rat(v).ok_or_else(|| SamplingError::Eval("non-finite machine value".to_string()))
}

/// Record the observed error for machine inputs `floats` whose real
/// counterparts are `reals` (each real lies in its float's rounding cell).
fn observe(
    spec: &ProgramSpec,
    precision: u32,
    floats: &[f64],
    reals: &[Rat],
    best: &mut Rat,
) -> Result<(), SamplingError> {
    let machine = machine_value(spec, precision, floats)?;
    let reference = reference_eval(&spec.objective, reals)?;
    let d = distance_to(&reference, &machine);
    if d > *best {
        *best = d;
    }
    Ok(())
}

fn satisfies_constraints(spec: &ProgramSpec, point: &[Rat]) -> bool {
    spec.constraints
        .iter()
        .all(|g| g.eval(point).map(|v| !v.is_negative()).unwrap_or(false))
}

fn in_box(spec: &ProgramSpec, point: &[Rat]) -> bool {
    spec.domain
        .iter()
        .zip(point)
        .all(|(iv, x)| iv.contains(x))
}

pub fn sample_program(
    spec: &ProgramSpec,
    precision: u32,
    samples: usize,
    seed: u64,
) -> Result<SampleResult, SamplingError> {
    if precision != 24 && precision != 53 {
        return Err(SamplingError::UnsupportedPrecision(precision));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let lo: Vec<f64> = spec.domain.iter().map(|iv| iv.lo.to_f64().unwrap()).collect();
    let hi: Vec<f64> = spec.domain.iter().map(|iv| iv.hi.to_f64().unwrap()).collect();
    let n = spec.nvars;
    // real offset stays inside the rounding cell of the drawn float
    let half_cell_exp = if precision == 24 { -26i64 } else { -55i64 };
    let mut best = Rat::zero();
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let max_attempts = samples.saturating_mul(50).max(10_000);
    let mut boundary_seeds: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let is_conditional = spec.objective.contains_conditional();
    let mut last_sign: Option<(bool, Vec<f64>)> = None;

    while accepted < samples {
        attempts += 1;
        if attempts > max_attempts {
            if (accepted as f64) < 1e-4 * attempts as f64 {
                return Err(SamplingError::RejectionSamplingStarved);
            }
            break;
        }
        let floats: Vec<f64> = (0..n)
            .map(|i| {
                let u: f64 = rng.gen();
                let v = lo[i] + u * (hi[i] - lo[i]);
                if precision == 24 {
                    v as f32 as f64
                } else {
                    v
                }
            })
            .collect();
        // perturb into the rounding cell where the box permits it
        let reals: Vec<Rat> = floats
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let base = f64_to_rat(x).unwrap_or_else(Rat::zero);
                let mag = x.abs().max(1e-300);
                let delta_f: f64 = (rng.gen::<f64>() * 2.0 - 1.0) * mag;
                let delta = f64_to_rat(delta_f).unwrap_or_else(Rat::zero) * pow2(half_cell_exp);
                let candidate = &base + &delta;
                if spec.domain[i].contains(&candidate) {
                    candidate
                } else {
                    base
                }
            })
            .collect();
        if !satisfies_constraints(spec, &reals) {
            continue;
        }
        accepted += 1;
        observe(spec, precision, &floats, &reals, &mut best)?;
        if is_conditional && boundary_seeds.len() < 32 {
            if let Expr::IfThenElse(c, _, _) = &spec.objective {
                if let Ok(cv) = c.eval(&reals) {
                    let sign = !cv.is_negative();
                    if let Some((prev_sign, prev_pt)) = &last_sign {
                        if *prev_sign != sign {
                            boundary_seeds.push((prev_pt.clone(), floats.clone()));
                        }
                    }
                    last_sign = Some((sign, floats.clone()));
                }
            }
        }
    }

    // bisect toward the branch boundary, then probe reals just across it
    // inside the rounding cells of nearby floats
    let mut probes = 0usize;
    if let Expr::IfThenElse(c, _, _) = &spec.objective {
        let offsets: Vec<Rat> = vec![
            pow2(half_cell_exp - 3),
            -pow2(half_cell_exp - 3),
            pow2(half_cell_exp - 10),
            -pow2(half_cell_exp - 10),
        ];
        for (mut a, mut b) in boundary_seeds {
            let sign_at = |pt: &[f64]| -> Option<bool> {
                let pr: Vec<Rat> = pt.iter().map(|&x| f64_to_rat(x).unwrap_or_else(Rat::zero)).collect();
                c.eval(&pr).ok().map(|v| !v.is_negative())
            };
            let Some(mut a_sign) = sign_at(&a) else { continue };
            for _ in 0..90 {
                let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                match sign_at(&mid) {
                    Some(s) if s == a_sign => a = mid,
                    Some(_) => b = mid,
                    None => break,
                }
                // keep a_sign in sync in case a was replaced
                if let Some(s) = sign_at(&a) {
                    a_sign = s;
                }
            }
            for base in [&a, &b] {
                let base_rats: Vec<Rat> = base
                    .iter()
                    .map(|&x| f64_to_rat(x).unwrap_or_else(Rat::zero))
                    .collect();
                for off in &offsets {
                    for dim in 0..n {
                        let mut reals = base_rats.clone();
                        reals[dim] = &reals[dim] + off;
                        if !in_box(spec, &reals) || !satisfies_constraints(spec, &reals) {
                            continue;
                        }
                        probes += 1;
                        observe(spec, precision, base, &reals, &mut best)?;
                    }
                }
            }
        }
    }

    Ok(SampleResult {
        max_abs_error: best,
        samples_requested: samples,
        accepted,
        boundary_probes: probes,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::rational::rat_to_f64;

    #[test]
    fn constant_program_samples_zero() {
        let spec = parse_program("let box_c x = [(0, 1)];; let obj_c x = [(2, 0)];;").unwrap();
        let r = sample_program(&spec, 53, 100, 1).unwrap();
        assert!(r.max_abs_error.is_zero());
    }

    #[test]
    fn single_mul_error_on_the_eps_scale() {
        let spec =
            parse_program("let box_m x y = [(0, 1); (0, 1)];; let obj_m x y = [(x*y, 0)];;")
                .unwrap();
        let r = sample_program(&spec, 53, 2000, 7).unwrap();
        // one multiplication plus two input roundings of values ≤ 1:
        // the absolute error stays within ~3 eps and is visibly nonzero
        let eps = pow2(-53);
        assert!(r.max_abs_error > eps.clone() / crate::rational::rat_int(8));
        assert!(r.max_abs_error <= eps * crate::rational::rat_int(4));
    }

    #[test]
    fn deterministic_and_monotone_in_sample_count() {
        let spec = parse_program(
            "let box_k x y = [(1, 2); (1, 2)];; let obj_k x y = [((x + y) * (x - y) + x*x, 0)];;",
        )
        .unwrap();
        let a = sample_program(&spec, 53, 500, 42).unwrap();
        let b = sample_program(&spec, 53, 500, 42).unwrap();
        assert_eq!(a.max_abs_error, b.max_abs_error);
        let big = sample_program(&spec, 53, 2000, 42).unwrap();
        assert!(big.max_abs_error >= a.max_abs_error);
    }

    #[test]
    fn rejection_respects_constraints() {
        let src = "\
let box_r x y = [(0, 1); (0, 1)];;
let cstr_r x y = [x + y - 1];;
let obj_r x y = [(x*y, 0)];;";
        let spec = parse_program(src).unwrap();
        let r = sample_program(&spec, 53, 300, 3).unwrap();
        assert_eq!(r.accepted, 300);
    }

    #[test]
    fn starved_constraints_detected() {
        let src = "\
let box_s x y = [(0, 1); (0, 1)];;
let cstr_s x y = [x + y - 1.9999999];;
let obj_s x y = [(x*y, 0)];;";
        let spec = parse_program(src).unwrap();
        assert_eq!(
            sample_program(&spec, 53, 1000, 3),
            Err(SamplingError::RejectionSamplingStarved)
        );
    }

    #[test]
    fn conditional_boundary_probe_finds_discontinuity() {
        // if (x² − x ≥ 0) then 0.1x else x² + 2: the branch flip near
        // x = 1 yields |error| ≈ 2.9 when the real input rounds across
        // the boundary
        let src = "\
let box_c x = [(0, 10)];;
let obj_c x = [(if (x*x - x > 0) then x*0.1 else x*x+2, 0)];;";
        let spec = parse_program(src).unwrap();
        let r = sample_program(&spec, 53, 4000, 11).unwrap();
        let v = rat_to_f64(&r.max_abs_error);
        assert!(r.boundary_probes > 0);
        assert!(v > 1.8, "observed only {v}");
        assert!(v <= 2.91);
    }
}
