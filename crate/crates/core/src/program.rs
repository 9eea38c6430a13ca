//! Validated program specification: variables, input box, polynomial
//! preconditions, objective expression, target error bound and per-input
//! uncertainties.

use crate::expr::Expr;
use crate::interval::Interval;
use crate::rational::Rat;
use num::traits::Signed;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct ProgramSpec {
    pub name: String,
    /// number of input variables
    pub nvars: usize,
    pub var_names: Vec<String>,
    pub local_names: Vec<String>,
    /// inputs plus let-bound locals
    pub total_indices: usize,
    pub domain: Vec<Interval>,
    /// each entry g is interpreted as g(x) ≥ 0
    pub constraints: Vec<Expr>,
    pub objective: Expr,
    /// requested bound ε⁺; zero means "compute best"
    pub target_bound: Rat,
    /// per-variable relative uncertainty u_i ≥ 0
    pub uncertainties: Vec<Rat>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("empty box in dimension {0} (lo > hi)")]
    EmptyBox(usize),
    #[error("nested conditionals are not supported (depth {0})")]
    NestedConditional(usize),
    #[error("constraint {0} is not a polynomial")]
    NonPolynomialConstraint(usize),
    #[error("conditional test is not a polynomial")]
    NonPolynomialCondition,
    #[error("variable index x{0} out of range")]
    VariableOutOfRange(usize),
    #[error("negative uncertainty for variable {0}")]
    NegativeUncertainty(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub max_constraint_degree: u32,
    pub conditional_depth: usize,
    pub objective_is_polynomial: bool,
    pub box_widths: Vec<Rat>,
}

impl ProgramSpec {
    pub fn name_of(&self, idx: usize) -> String {
        if idx < self.nvars {
            self.var_names[idx].clone()
        } else if idx - self.nvars < self.local_names.len() {
            self.local_names[idx - self.nvars].clone()
        } else {
            format!("e{}", idx - self.total_indices + 1)
        }
    }

    pub fn validate(&self) -> Result<ValidationReport, ValidationError> {
        for (i, iv) in self.domain.iter().enumerate() {
            if iv.lo > iv.hi {
                return Err(ValidationError::EmptyBox(i));
            }
        }
        for (i, u) in self.uncertainties.iter().enumerate() {
            if u.is_negative() {
                return Err(ValidationError::NegativeUncertainty(i));
            }
        }
        let depth = self.objective.conditional_depth();
        if depth > 1 {
            return Err(ValidationError::NestedConditional(depth));
        }
        for v in self.objective.free_vars() {
            if v >= self.nvars {
                return Err(ValidationError::VariableOutOfRange(v));
            }
        }
        let mut max_deg = 0u32;
        for (i, g) in self.constraints.iter().enumerate() {
            let p = g
                .to_poly(self.total_indices)
                .map_err(|_| ValidationError::NonPolynomialConstraint(i))?;
            for v in p.var_occurrences() {
                if v >= self.nvars {
                    return Err(ValidationError::VariableOutOfRange(v));
                }
            }
            max_deg = max_deg.max(p.total_degree());
        }
        if let Expr::IfThenElse(cond, _, _) = &self.objective {
            if cond.to_poly(self.total_indices).is_err() {
                return Err(ValidationError::NonPolynomialCondition);
            }
        }
        let objective_is_polynomial = self.objective.to_poly(self.total_indices).is_ok();
        Ok(ValidationReport {
            max_constraint_degree: max_deg,
            conditional_depth: depth,
            objective_is_polynomial,
            box_widths: self.domain.iter().map(|iv| iv.width()).collect(),
        })
    }

    /// Render back into the input language. `parse(render(spec))` is
    /// structurally identical to `spec`.
    pub fn render_source(&self) -> String {
        let names = |i: usize| self.name_of(i);
        let mut out = String::new();
        let vars = self.var_names.join(" ");
        let fmt = |r: &Rat| {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                crate::expr::fmt_rat(r)
            }
        };
        out.push_str(&format!("let box_{} {} = [", self.name, vars));
        for (i, iv) in self.domain.iter().enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            out.push_str(&format!("({}, {})", fmt(&iv.lo), fmt(&iv.hi)));
        }
        out.push_str("];;\n");
        out.push_str(&format!(
            "let obj_{} {} = [({}, {})];;\n",
            self.name,
            vars,
            self.objective.pretty(&names),
            fmt(&self.target_bound)
        ));
        if !self.constraints.is_empty() {
            out.push_str(&format!("let cstr_{} {} = [", self.name, vars));
            for (i, g) in self.constraints.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                out.push_str(&g.pretty(&names));
            }
            out.push_str("];;\n");
        }
        if self.uncertainties.iter().any(|u| !num::traits::Zero::is_zero(u)) {
            out.push_str(&format!("let uncert_{} {} = [", self.name, vars));
            for (i, u) in self.uncertainties.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                out.push_str(&fmt(u));
            }
            out.push_str("];;\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::rational::rat_int;

    #[test]
    fn wellformed_benchmark_validates() {
        let src = "\
let box_k x1 x2 = [(4, 6.36); (4, 6.36)];;
let obj_k x1 x2 = [(x1 * x2, 0)];;";
        let rep = parse_program(src).unwrap().validate().unwrap();
        assert_eq!(rep.max_constraint_degree, 0);
        assert_eq!(rep.conditional_depth, 0);
        assert!(rep.objective_is_polynomial);
    }

    #[test]
    fn inverted_interval_rejected() {
        let spec = parse_program("let box_p x = [(1, 0)];; let obj_p x = [(x, 0)];;").unwrap();
        assert_eq!(spec.validate(), Err(ValidationError::EmptyBox(0)));
    }

    #[test]
    fn nested_conditional_rejected() {
        let src = "\
let box_p x = [(0, 1)];;
let obj_p x = [(if (x >= 0) then (if (x - 0.5 >= 0) then x else 0) else 1, 0)];;";
        let spec = parse_program(src).unwrap();
        assert!(matches!(
            spec.validate(),
            Err(ValidationError::NestedConditional(2))
        ));
    }

    #[test]
    fn render_is_reparseable() {
        let src = "\
let box_q x y = [(0, 1); (-2, 2)];;
let obj_q x y = [(x * y + 0.25, 0.5)];;
let cstr_q x y = [x + y - 1];;";
        let spec = parse_program(src).unwrap();
        let spec2 = parse_program(&spec.render_source()).unwrap();
        assert_eq!(spec.objective, spec2.objective);
        assert_eq!(spec.constraints, spec2.constraints);
        assert_eq!(spec.target_bound, spec2.target_bound);
        assert_eq!(spec2.domain[1].hi, rat_int(2));
    }
}
