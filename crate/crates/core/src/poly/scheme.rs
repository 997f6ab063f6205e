//! Multivariate Horner evaluation plans.
//!
//! A polynomial is rewritten as `x_v^k * p1 + p0` where `x_v` is the
//! variable present in the most remaining terms and `k` is its smallest
//! exponent among those terms; `p1` and `p0` are factored recursively. The
//! resulting tree is flattened into a postfix program run on a small stack.

use super::Polynomial;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(C64),
    /// `top <- top * x_var^pow`
    MulPow { var: u32, pow: u32 },
    /// `inner <- pop; top <- top + inner * x_var^pow`
    MulPowAdd { var: u32, pow: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationScheme {
    nvars: usize,
    ops: Vec<Op>,
    depth: usize,
}

type Term = (C64, Vec<u32>);

impl EvaluationScheme {
    pub fn compile(poly: &Polynomial) -> Self {
        let terms: Vec<Term> = poly
            .terms()
            .iter()
            .map(|(c, m)| (*c, m.exponents().to_vec()))
            .collect();
        let mut ops = Vec::new();
        if terms.is_empty() {
            ops.push(Op::Const(C64::new(0.0, 0.0)));
        } else {
            emit(terms, poly.nvars(), &mut ops);
        }
        let depth = stack_depth(&ops);
        EvaluationScheme { nvars: poly.nvars(), ops, depth }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn stack_depth(&self) -> usize {
        self.depth
    }

    /// Number of instructions in the program.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Runs the program at `x`; `stack` is caller-owned scratch space.
    pub fn evaluate(&self, x: &[C64], stack: &mut Vec<C64>) -> C64 {
        stack.clear();
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::MulPow { var, pow } => {
                    let top = stack.last_mut().expect("scheme stack underflow");
                    *top *= power(x[var as usize], pow);
                }
                Op::MulPowAdd { var, pow } => {
                    let inner = stack.pop().expect("scheme stack underflow");
                    let top = stack.last_mut().expect("scheme stack underflow");
                    *top += inner * power(x[var as usize], pow);
                }
            }
        }
        stack.pop().expect("scheme produced no value")
    }
}

#[inline]
fn power(x: C64, k: u32) -> C64 {
    match k {
        1 => x,
        2 => x * x,
        _ => x.powu(k),
    }
}

/// Emits a program leaving the value of `terms` on the stack. `terms` is
/// nonempty.
fn emit(mut terms: Vec<Term>, nvars: usize, ops: &mut Vec<Op>) {
    // pick the variable occurring in the most terms
    let mut counts = vec![0usize; nvars];
    for (_, e) in &terms {
        for (v, &k) in e.iter().enumerate() {
            if k > 0 {
                counts[v] += 1;
            }
        }
    }
    let best = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)));
    let Some((var, _)) = best else {
        // only constants left; they were merged upstream but sum anyway
        let c = terms.iter().map(|(c, _)| *c).sum();
        ops.push(Op::Const(c));
        return;
    };
    let (with, rest): (Vec<Term>, Vec<Term>) = terms.drain(..).partition(|(_, e)| e[var] > 0);
    let pow = with.iter().map(|(_, e)| e[var]).min().expect("nonempty");
    let inner: Vec<Term> = with
        .into_iter()
        .map(|(c, mut e)| {
            e[var] -= pow;
            (c, e)
        })
        .collect();
    let var = var as u32;
    if rest.is_empty() {
        emit(inner, nvars, ops);
        ops.push(Op::MulPow { var, pow });
    } else {
        emit(rest, nvars, ops);
        emit(inner, nvars, ops);
        ops.push(Op::MulPowAdd { var, pow });
    }
}

fn stack_depth(ops: &[Op]) -> usize {
    let mut depth = 0usize;
    let mut max = 0usize;
    for op in ops {
        match op {
            Op::Const(_) => depth += 1,
            Op::MulPow { .. } => {}
            Op::MulPowAdd { .. } => depth -= 1,
        }
        max = max.max(depth);
    }
    max
}
