use fpsos::engine::{bound_program, AnalysisOptions};
use fpsos::parser::parse_program;
use fpsos::rational::{pow2, rat_to_f64};
use fpsos::rounding::{FpFormat, RoundingOptions};
use std::time::Instant;

fn main() {
    let src = "\
let box_kepler0 x1 x2 x3 x4 x5 x6 = [(4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36)];;
let obj_kepler0 x1 x2 x3 x4 x5 x6 = [(x2 * x5 + x3 * x6 - x2 * x3 - x5 * x6 + x1 * ( - x1 + x2 + x3 - x4 + x5 + x6), 0)];;";
    let spec = parse_program(src).unwrap();
    let eps = pow2(-24);
    for neg in [false, true] {
        let opts = AnalysisOptions {
            format: FpFormat::single(),
            rounding: RoundingOptions {
                input_rounding: false,
                constant_rounding: true,
                neg_error: neg,
                merge_products: false,
            },
            order: Some(2),
            ..Default::default()
        };
        let t0 = Instant::now();
        let res = bound_program(&spec, &opts).unwrap();
        println!(
            "neg_error={neg}: m={} bound/eps = {:.3} lin/eps = [{:.3}, {:.3}] rem/eps = {:.5} time {:?} fallbacks {:?}",
            res.error_vars,
            rat_to_f64(&(&res.bound / &eps)),
            rat_to_f64(&(&res.linear_part.lo / &eps)),
            rat_to_f64(&(&res.linear_part.hi / &eps)),
            rat_to_f64(&(&res.remainder.hi / &eps)),
            t0.elapsed(),
            res.fallbacks,
        );
    }
}
