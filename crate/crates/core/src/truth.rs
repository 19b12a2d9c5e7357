//! Brute-force truth oracle over the finite domain product.

use alloc::vec::Vec;

use crate::statement::{Limits, Relation, Statement};
use crate::term::EvalError;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TruthError {
    #[error("domain product {0} exceeds the bound {1}")]
    DomainTooLarge(u128, u128),
    #[error("integer overflow while evaluating")]
    Overflow,
}

pub(crate) fn holds(rel: &Relation, env: &dyn Fn(&str) -> Option<i128>) -> Result<bool, EvalError> {
    Ok(rel.kind.holds(rel.lhs.eval(&env)?, rel.rhs.eval(&env)?))
}

/// Number of assignments in the domain product, saturating.
pub fn domain_size(stmt: &Statement) -> u128 {
    stmt.vars.iter().fold(1u128, |acc, v| acc.saturating_mul(v.size()))
}

/// `true` iff every assignment satisfying all hypotheses satisfies the goal.
pub fn decide_truth(stmt: &Statement, limits: &Limits) -> Result<bool, TruthError> {
    let size = domain_size(stmt);
    if size > limits.max_assignments {
        return Err(TruthError::DomainTooLarge(size, limits.max_assignments));
    }
    let n = stmt.vars.len();
    let mut values: Vec<i64> = stmt.vars.iter().map(|v| v.lo).collect();
    loop {
        let env = |name: &str| stmt.vars.iter().position(|v| v.name == name).map(|i| values[i] as i128);
        let mut hyps_ok = true;
        for h in &stmt.hyps {
            if !holds(&h.rel, &env).map_err(|_| TruthError::Overflow)? {
                hyps_ok = false;
                break;
            }
        }
        if hyps_ok && !holds(&stmt.goal, &env).map_err(|_| TruthError::Overflow)? {
            return Ok(false);
        }
        // advance the odometer
        let mut i = 0;
        loop {
            if i == n {
                return Ok(true);
            }
            if values[i] < stmt.vars[i].hi {
                values[i] += 1;
                break;
            }
            values[i] = stmt.vars[i].lo;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_statement;

    fn truth(s: &str) -> bool {
        decide_truth(&parse_statement(s).unwrap(), &Limits::default()).unwrap()
    }

    #[test]
    fn documented_cases() {
        assert!(truth("thm (x:0..3) (h: x + 1 = 3) : 3 = x + 1"));
        assert!(truth("thm (x:0..3) (h: x + 1 = 3) : x = 2"));
        assert!(!truth("thm (x:0..3) () : x <= 2"));
    }

    #[test]
    fn vacuous_and_ground() {
        assert!(truth("thm v (x:0..3) (h: x = 9) : x = 0"));
        assert!(truth("thm g : 2 * 3 = 6"));
        assert!(!truth("thm g : 2 * 3 < 6"));
    }

    #[test]
    fn domain_bound() {
        let s = parse_statement("thm big (x:0..999) (y:0..999) (z:0..9) : x = x").unwrap();
        assert!(matches!(decide_truth(&s, &Limits::default()), Err(TruthError::DomainTooLarge(10_000_000, _))));
    }
}
