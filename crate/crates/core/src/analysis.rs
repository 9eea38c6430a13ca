//! One-call analysis orchestration shared by the CLI and the Python
//! bindings: parse + validate + bound, with stable JSON reporting and a
//! reproducibility record of every effective option.

use crate::engine::{bound_program, AnalysisOptions, BoundResult, EngineError};
use crate::interval::Interval;
use crate::program::ProgramSpec;
use crate::rational::{rat_to_f64, to_decimal_string, Rat};
use crate::rounding::{FpFormat, RoundingOptions};
use serde::Serialize;
use std::time::Instant;

pub const JSON_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveFlags {
    pub precision_bits: u32,
    pub order: Option<usize>,
    pub input_rounding: bool,
    pub constant_rounding: bool,
    pub neg_error: bool,
    pub merge_errors: bool,
    pub subdivide_budget: usize,
    pub certify: bool,
    pub reduced_basis: bool,
    pub max_joint_errors: usize,
    pub solver: String,
}

#[derive(Debug)]
pub struct AnalysisResult {
    pub benchmark: String,
    pub bound: Rat,
    pub interval: Interval,
    pub order: usize,
    pub error_vars: usize,
    pub wall_ms: u128,
    pub fallbacks: Vec<String>,
    pub certificates: Vec<crate::certify::SosCertificate>,
    pub sampled_lower: Option<Rat>,
    pub flags: EffectiveFlags,
}

impl AnalysisResult {
    pub fn bound_f64(&self) -> f64 {
        rat_to_f64(&self.bound)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": JSON_SCHEMA_VERSION,
            "tool_version": crate::VERSION,
            "benchmark": self.benchmark,
            "bound": self.bound_f64(),
            "bound_exact": format!("{}", self.bound),
            "bound_decimal": to_decimal_string(&self.bound, 6),
            "interval": {
                "lo": rat_to_f64(&self.interval.lo),
                "hi": rat_to_f64(&self.interval.hi),
            },
            "order": self.order,
            "error_vars": self.error_vars,
            "wall_ms": self.wall_ms,
            "fallbacks": self.fallbacks,
            "certificates": self.certificates.len(),
            "sampled_lower": self.sampled_lower.as_ref().map(rat_to_f64),
            "flags": serde_json::to_value(&self.flags).unwrap(),
        })
    }
}

pub fn effective_flags(opts: &AnalysisOptions, solver: &str) -> EffectiveFlags {
    EffectiveFlags {
        precision_bits: opts.format.precision,
        order: opts.order,
        input_rounding: opts.rounding.input_rounding,
        constant_rounding: opts.rounding.constant_rounding,
        neg_error: opts.rounding.neg_error,
        merge_errors: opts.rounding.merge_products,
        subdivide_budget: opts.subdivide_budget,
        certify: opts.certify,
        reduced_basis: opts.reduced_basis,
        max_joint_errors: opts.max_joint_errors,
        solver: solver.to_string(),
    }
}

/// Auto-subdivision policy: small-dimensional programs are split, as the
/// reference tool does by default.
pub fn auto_budget(spec: &ProgramSpec) -> usize {
    match spec.nvars {
        0 | 1 => 8,
        2 => 4,
        _ => 1,
    }
}

pub fn analyze_spec(
    spec: &ProgramSpec,
    opts: &AnalysisOptions,
) -> Result<AnalysisResult, EngineError> {
    let t0 = Instant::now();
    let res: BoundResult = bound_program(spec, opts)?;
    Ok(AnalysisResult {
        benchmark: spec.name.clone(),
        bound: res.bound,
        interval: res.interval,
        order: res.order,
        error_vars: res.error_vars,
        wall_ms: t0.elapsed().as_millis(),
        fallbacks: res.fallbacks,
        certificates: res.certificates,
        sampled_lower: None,
        flags: effective_flags(opts, "embedded"),
    })
}

pub fn format_from_name(name: &str) -> Option<FpFormat> {
    match name {
        "single" => Some(FpFormat::single()),
        "double" => Some(FpFormat::double()),
        "quad" => Some(FpFormat::quad()),
        other => other.parse::<u32>().ok().filter(|&b| b >= 2).map(FpFormat::with_bits),
    }
}

pub fn default_options() -> AnalysisOptions {
    AnalysisOptions {
        rounding: RoundingOptions::default(),
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    #[test]
    fn json_is_stable_and_versioned() {
        let spec =
            parse_program("let box_j x = [(0, 1)];; let obj_j x = [(x*x, 0)];;").unwrap();
        let res = analyze_spec(&spec, &default_options()).unwrap();
        let j = res.to_json();
        assert_eq!(j["schema_version"], 1);
        assert!(j["bound"].as_f64().unwrap() > 0.0);
        assert_eq!(j["flags"]["precision_bits"], 53);
        assert!(j["tool_version"].as_str().unwrap().contains('.'));
    }

    #[test]
    fn precision_names() {
        assert_eq!(format_from_name("single").unwrap().precision, 24);
        assert_eq!(format_from_name("double").unwrap().precision, 53);
        assert_eq!(format_from_name("quad").unwrap().precision, 113);
        assert_eq!(format_from_name("30").unwrap().precision, 30);
        assert!(format_from_name("banana").is_none());
    }
}
