//! Expression trees shared by statement terms and rule patterns.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Identifier of a variable, hypothesis, theorem or rule.
pub type Ident = String;

/// Path from the root of a tree to one of its subterms. Binary nodes use
/// child indices `0`/`1`; unary nodes (`neg`, `^`) use `0`.
pub type Path = Vec<u8>;

/// Arithmetic tree over leaves `L`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node<L> {
    Leaf(L),
    Add(Box<Node<L>>, Box<Node<L>>),
    Sub(Box<Node<L>>, Box<Node<L>>),
    Mul(Box<Node<L>>, Box<Node<L>>),
    Neg(Box<Node<L>>),
    /// Power with a literal natural exponent.
    Pow(Box<Node<L>>, u8),
}

/// Leaf of a statement term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Lit(i64),
    Var(Ident),
}

pub type Term = Node<Atom>;

impl<L> Node<L> {
    pub fn add(a: Self, b: Self) -> Self {
        Node::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Self, b: Self) -> Self {
        Node::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Self, b: Self) -> Self {
        Node::Mul(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Self) -> Self {
        Node::Neg(Box::new(a))
    }

    pub fn pow(a: Self, e: u8) -> Self {
        Node::Pow(Box::new(a), e)
    }

    pub fn node_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => 1 + a.node_count() + b.node_count(),
            Node::Neg(a) | Node::Pow(a, _) => 1 + a.node_count(),
        }
    }

    /// Depth of the tree; a lone leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => 1 + a.depth().max(b.depth()),
            Node::Neg(a) | Node::Pow(a, _) => 1 + a.depth(),
        }
    }

    pub fn child(&self, index: u8) -> Option<&Node<L>> {
        match (self, index) {
            (Node::Add(a, _) | Node::Sub(a, _) | Node::Mul(a, _), 0) => Some(a),
            (Node::Add(_, b) | Node::Sub(_, b) | Node::Mul(_, b), 1) => Some(b),
            (Node::Neg(a) | Node::Pow(a, _), 0) => Some(a),
            _ => None,
        }
    }

    pub fn at(&self, path: &[u8]) -> Option<&Node<L>> {
        path.iter().try_fold(self, |node, &i| node.child(i))
    }

    /// All subterm positions in pre-order, root first.
    pub fn positions(&self) -> Vec<Path> {
        fn walk<L>(node: &Node<L>, prefix: &mut Path, out: &mut Vec<Path>) {
            out.push(prefix.clone());
            for i in 0..2u8 {
                if let Some(c) = node.child(i) {
                    prefix.push(i);
                    walk(c, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }
}

impl<L: Clone> Node<L> {
    /// Copy of `self` with the subterm at `path` replaced. `None` when the
    /// path does not address a subterm.
    pub fn replace_at(&self, path: &[u8], replacement: Node<L>) -> Option<Node<L>> {
        let Some((&first, rest)) = path.split_first() else {
            return Some(replacement);
        };
        let rebuilt = match (self, first) {
            (Node::Add(a, b), 0) => Node::Add(Box::new(a.replace_at(rest, replacement)?), b.clone()),
            (Node::Add(a, b), 1) => Node::Add(a.clone(), Box::new(b.replace_at(rest, replacement)?)),
            (Node::Sub(a, b), 0) => Node::Sub(Box::new(a.replace_at(rest, replacement)?), b.clone()),
            (Node::Sub(a, b), 1) => Node::Sub(a.clone(), Box::new(b.replace_at(rest, replacement)?)),
            (Node::Mul(a, b), 0) => Node::Mul(Box::new(a.replace_at(rest, replacement)?), b.clone()),
            (Node::Mul(a, b), 1) => Node::Mul(a.clone(), Box::new(b.replace_at(rest, replacement)?)),
            (Node::Neg(a), 0) => Node::Neg(Box::new(a.replace_at(rest, replacement)?)),
            (Node::Pow(a, e), 0) => Node::Pow(Box::new(a.replace_at(rest, replacement)?), *e),
            _ => return None,
        };
        Some(rebuilt)
    }
}

/// Evaluation failure: an unbound variable or integer overflow.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(Ident),
    #[error("integer overflow during evaluation")]
    Overflow,
}

impl Term {
    pub fn lit(v: i64) -> Term {
        Node::Leaf(Atom::Lit(v))
    }

    pub fn var(name: &str) -> Term {
        Node::Leaf(Atom::Var(name.into()))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Node::Leaf(Atom::Var(_)) => false,
            Node::Leaf(Atom::Lit(_)) => true,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => a.is_ground() && b.is_ground(),
            Node::Neg(a) | Node::Pow(a, _) => a.is_ground(),
        }
    }

    pub fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Node::Leaf(Atom::Var(v)) => {
                out.insert(v.as_str());
            }
            Node::Leaf(Atom::Lit(_)) => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Neg(a) | Node::Pow(a, _) => a.collect_vars(out),
        }
    }

    /// Evaluate under `env`, with checked 128-bit arithmetic.
    pub fn eval<F>(&self, env: &F) -> Result<i128, EvalError>
    where
        F: Fn(&str) -> Option<i128>,
    {
        match self {
            Node::Leaf(Atom::Lit(v)) => Ok(*v as i128),
            Node::Leaf(Atom::Var(name)) => env(name).ok_or_else(|| EvalError::Unbound(name.clone())),
            Node::Add(a, b) => a.eval(env)?.checked_add(b.eval(env)?).ok_or(EvalError::Overflow),
            Node::Sub(a, b) => a.eval(env)?.checked_sub(b.eval(env)?).ok_or(EvalError::Overflow),
            Node::Mul(a, b) => a.eval(env)?.checked_mul(b.eval(env)?).ok_or(EvalError::Overflow),
            Node::Neg(a) => a.eval(env)?.checked_neg().ok_or(EvalError::Overflow),
            Node::Pow(a, e) => a.eval(env)?.checked_pow(*e as u32).ok_or(EvalError::Overflow),
        }
    }

    pub fn eval_ground(&self) -> Result<i128, EvalError> {
        self.eval(&|_: &str| None)
    }

    /// Replace every maximal ground compound subterm by its value.
    /// Values outside `[min, max]` are an error.
    pub fn fold_constants(&self, min: i64, max: i64) -> Result<Term, EvalError> {
        if let Node::Leaf(_) = self {
            return Ok(self.clone());
        }
        if self.is_ground() {
            let v = self.eval_ground()?;
            if v < min as i128 || v > max as i128 {
                return Err(EvalError::Overflow);
            }
            return Ok(Term::lit(v as i64));
        }
        Ok(match self {
            Node::Add(a, b) => Node::add(a.fold_constants(min, max)?, b.fold_constants(min, max)?),
            Node::Sub(a, b) => Node::sub(a.fold_constants(min, max)?, b.fold_constants(min, max)?),
            Node::Mul(a, b) => Node::mul(a.fold_constants(min, max)?, b.fold_constants(min, max)?),
            Node::Neg(a) => Node::neg(a.fold_constants(min, max)?),
            Node::Pow(a, e) => Node::pow(a.fold_constants(min, max)?, *e),
            Node::Leaf(_) => unreachable!(),
        })
    }

    /// Largest literal magnitude and exponent used, for limit checks.
    pub(crate) fn literal_extremes(&self) -> (i64, i64, u8) {
        match self {
            Node::Leaf(Atom::Lit(v)) => (*v, *v, 0),
            Node::Leaf(Atom::Var(_)) => (i64::MAX, i64::MIN, 0),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                let (a0, a1, a2) = a.literal_extremes();
                let (b0, b1, b2) = b.literal_extremes();
                (a0.min(b0), a1.max(b1), a2.max(b2))
            }
            Node::Neg(a) => a.literal_extremes(),
            Node::Pow(a, e) => {
                let (a0, a1, a2) = a.literal_extremes();
                (a0, a1, a2.max(*e))
            }
        }
    }
}

/// Leaves that know how to print themselves and their printing precedence.
pub trait LeafDisplay {
    fn fmt_leaf(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result;
    /// Negative literals bind like a prefix operator.
    fn leaf_prec(&self) -> u8 {
        PREC_ATOM
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
pub(crate) const PREC_PREFIX: u8 = 3;
const PREC_POW: u8 = 4;
pub(crate) const PREC_ATOM: u8 = 5;

impl LeafDisplay for Atom {
    fn fmt_leaf(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Lit(v) => write!(f, "{v}"),
            Atom::Var(v) => f.write_str(v),
        }
    }

    fn leaf_prec(&self) -> u8 {
        match self {
            Atom::Lit(v) if *v < 0 => PREC_PREFIX,
            _ => PREC_ATOM,
        }
    }
}

/// Print with minimal parentheses; sums and products associate to the
/// left, so a right operand of equal precedence is parenthesized. The
/// output re-parses to the same tree.
pub(crate) fn fmt_node<L, F>(node: &Node<L>, min_prec: u8, f: &mut fmt::Formatter<'_>, leaf: &F) -> fmt::Result
where
    F: Fn(&L, &mut fmt::Formatter<'_>) -> fmt::Result,
    L: LeafDisplay,
{
    let prec = match node {
        Node::Leaf(l) => l.leaf_prec(),
        Node::Add(..) | Node::Sub(..) => PREC_SUM,
        Node::Mul(..) => PREC_PRODUCT,
        Node::Neg(_) => PREC_PREFIX,
        Node::Pow(..) => PREC_POW,
    };
    let paren = prec < min_prec;
    if paren {
        f.write_str("(")?;
    }
    match node {
        Node::Leaf(l) => leaf(l, f)?,
        Node::Add(a, b) => {
            fmt_node(a, PREC_SUM, f, leaf)?;
            f.write_str(" + ")?;
            fmt_node(b, PREC_PRODUCT, f, leaf)?;
        }
        Node::Sub(a, b) => {
            fmt_node(a, PREC_SUM, f, leaf)?;
            f.write_str(" - ")?;
            fmt_node(b, PREC_PRODUCT, f, leaf)?;
        }
        Node::Mul(a, b) => {
            fmt_node(a, PREC_PRODUCT, f, leaf)?;
            f.write_str(" * ")?;
            fmt_node(b, PREC_PREFIX, f, leaf)?;
        }
        Node::Neg(a) => {
            f.write_str("neg ")?;
            fmt_node(a, PREC_PREFIX, f, leaf)?;
        }
        Node::Pow(a, e) => {
            fmt_node(a, PREC_ATOM, f, leaf)?;
            write!(f, " ^ {e}")?;
        }
    }
    if paren {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(self, PREC_SUM, f, &|l: &Atom, f: &mut fmt::Formatter<'_>| l.fmt_leaf(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn x() -> Term {
        Term::var("x")
    }

    #[test]
    fn counts_and_depth() {
        let t = Term::add(x(), Term::mul(Term::lit(2), x()));
        assert_eq!(t.node_count(), 5);
        assert_eq!(t.depth(), 3);
        assert_eq!(Term::lit(3).depth(), 1);
    }

    #[test]
    fn positions_are_preorder() {
        let t = Term::add(x(), Term::neg(Term::lit(1)));
        let ps = t.positions();
        assert_eq!(ps, vec![vec![], vec![0], vec![1], vec![1, 0]]);
        assert_eq!(t.at(&[1, 0]), Some(&Term::lit(1)));
        assert_eq!(t.at(&[0, 0]), None);
    }

    #[test]
    fn replace_rebuilds_along_path() {
        let t = Term::add(x(), Term::lit(1));
        let r = t.replace_at(&[1], Term::lit(7)).unwrap();
        assert_eq!(r, Term::add(x(), Term::lit(7)));
        assert!(t.replace_at(&[2], Term::lit(0)).is_none());
    }

    #[test]
    fn printing_uses_minimal_parentheses() {
        let a = Term::add(Term::add(x(), Term::lit(1)), Term::lit(2));
        assert_eq!(a.to_string(), "x + 1 + 2");
        let b = Term::add(x(), Term::add(Term::lit(1), Term::lit(2)));
        assert_eq!(b.to_string(), "x + (1 + 2)");
        let c = Term::mul(Term::sub(x(), Term::lit(1)), Term::lit(-3));
        assert_eq!(c.to_string(), "(x - 1) * -3");
        let d = Term::pow(Term::lit(-3), 2);
        assert_eq!(d.to_string(), "(-3) ^ 2");
        let e = Term::neg(Term::pow(x(), 2));
        assert_eq!(e.to_string(), "neg x ^ 2");
        let g = Term::pow(Term::neg(x()), 2);
        assert_eq!(g.to_string(), "(neg x) ^ 2");
    }

    #[test]
    fn eval_and_fold() {
        let t = Term::add(Term::mul(Term::lit(2), Term::lit(3)), x());
        let env = |n: &str| (n == "x").then_some(4);
        assert_eq!(t.eval(&env), Ok(10));
        assert_eq!(t.fold_constants(-100, 100).unwrap(), Term::add(Term::lit(6), x()));
        let big = Term::pow(Term::pow(Term::pow(Term::lit(1_000_000), 4), 4), 4);
        assert_eq!(big.eval_ground(), Err(EvalError::Overflow));
        assert!(Term::mul(Term::lit(1000), Term::lit(1000)).fold_constants(-10, 10).is_err());
    }
}
