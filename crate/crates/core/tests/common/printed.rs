//! Hand-transcribed factorization conditions, in the expression grammar.
//!
//! Coordinates: a first-order slot `D(1,j)` acting on a coefficient is the
//! partial along `x_j` for `j <= n` and along `u^(j-n)` beyond. The source
//! writes `L(b[2,0,2])` in both two-variable scalar lists; no such symbol
//! exists, and `b[2,0,1]` is used instead.

use opfactor::conditions::{Domain, Shape, Template};
use opfactor::operator::Linearity;

pub type Printed = Vec<(String, String)>;

fn eq(lhs: impl Into<String>, rhs: impl Into<String>) -> (String, String) {
    (lhs.into(), rhs.into())
}

/// `L = b[1,1,1] d/dx1 + b[1,1,2] d/dx2`.
fn l_scalar(f: &str) -> String {
    format!("b[1,1,1]*d({f}, x1) + b[1,1,2]*d({f}, x2)")
}

/// `L_p = a[1,p,p,1,1] d/dx1 + a[1,p,p,1,2] d/dx2`.
fn l_p(p: usize, f: &str) -> String {
    format!("a[1,{p},{p},1,1]*d({f}, x1) + a[1,{p},{p},1,2]*d({f}, x2)")
}

fn linear_ode() -> Printed {
    vec![
        eq("g[2,1]", "b[1,1,1]*b[2,1,1]"),
        eq("g[1,1]", "b[1,0,1]*b[2,1,1] + b[1,1,1]*b[2,0,1] + b[1,1,1]*d(b[2,1,1], x1)"),
        eq("g[0,1]", "b[1,0,1]*b[2,0,1] + b[1,1,1]*d(b[2,0,1], x1)"),
    ]
}

fn linear_pde2() -> Printed {
    vec![
        eq("g[2,1]", "b[1,1,1]*b[2,1,1]"),
        eq("g[2,2] + g[2,3]", "b[1,1,2]*b[2,1,1] + b[1,1,1]*b[2,1,2]"),
        eq("g[2,4]", "b[1,1,2]*b[2,1,2]"),
        eq("g[1,1]", format!("b[1,0,1]*b[2,1,1] + b[1,1,1]*b[2,0,1] + {}", l_scalar("b[2,1,1]"))),
        eq("g[1,2]", format!("b[1,0,1]*b[2,1,2] + b[1,1,2]*b[2,0,1] + {}", l_scalar("b[2,1,2]"))),
        eq("g[0,1]", format!("b[1,0,1]*b[2,0,1] + {}", l_scalar("b[2,0,1]"))),
    ]
}

fn nonlinear_ode() -> Printed {
    vec![
        eq("g[2,1]", "b[1,1,1]*b[2,1,1]"),
        eq(
            "g[1,1]",
            "b[1,0,1]*b[2,1,1] + b[1,1,1]*b[2,0,1] + b[1,1,1]*d(b[2,1,1], x1) + b[1,1,1]*d(b[2,0,1], u)*u",
        ),
        eq("0", "b[1,1,1]*d(b[2,1,1], u)"),
        eq("g[0,1]", "b[1,0,1]*b[2,0,1] + b[1,1,1]*d(b[2,0,1], x1)"),
    ]
}

fn nonlinear_pde2() -> Printed {
    vec![
        eq("g[2,1]", "b[1,1,1]*b[2,1,1]"),
        eq("g[2,2] + g[2,3]", "b[1,1,2]*b[2,1,1] + b[1,1,1]*b[2,1,2]"),
        eq("g[2,4]", "b[1,1,2]*b[2,1,2]"),
        eq(
            "g[1,1]",
            format!(
                "b[1,0,1]*b[2,1,1] + b[1,1,1]*b[2,0,1] + {} + b[1,1,1]*d(b[2,0,1], u)*u",
                l_scalar("b[2,1,1]")
            ),
        ),
        eq(
            "g[1,2]",
            format!(
                "b[1,0,1]*b[2,1,2] + b[1,1,2]*b[2,0,1] + {} + b[1,1,2]*d(b[2,0,1], u)*u",
                l_scalar("b[2,1,2]")
            ),
        ),
        eq("g[0,1]", format!("b[1,0,1]*b[2,0,1] + {}", l_scalar("b[2,0,1]"))),
        eq("0", "b[1,1,2]*d(b[2,1,2], u)"),
        eq("0", "b[1,1,1]*d(b[2,1,1], u)"),
        eq("0", "b[1,1,1]*d(b[2,1,2], u) + b[1,1,2]*d(b[2,1,1], u)"),
    ]
}

/// `sum_l a[1,p,l,0,1] a[2,l,q,0,1]`.
fn coupling(m: usize, p: usize, q: usize) -> String {
    (1..=m).map(|l| format!("a[1,{p},{l},0,1]*a[2,{l},{q},0,1]")).collect::<Vec<_>>().join(" + ")
}

fn system(m: usize, nonlinear: bool, pde: bool) -> Printed {
    let mut out = Vec::new();
    // first-order partial of a coefficient
    let dx = |p: usize, f: &str| {
        if pde {
            l_p(p, f)
        } else {
            format!("a[1,{p},{p},1,1]*d({f}, x1)")
        }
    };
    let axes: &[usize] = if pde { &[1, 2] } else { &[1] };
    for p in 1..=m {
        for q in 1..=m {
            if p == q {
                out.push(eq(format!("f[{p},{p},0,1]"), format!("{} + {}", coupling(m, p, p), dx(p, &format!("a[2,{p},{p},0,1]")))));
                for &j in axes {
                    let mut rhs = format!(
                        "a[1,{p},{p},0,1]*a[2,{p},{p},1,{j}] + a[1,{p},{p},1,{j}]*a[2,{p},{p},0,1] + {}",
                        dx(p, &format!("a[2,{p},{p},1,{j}]"))
                    );
                    if nonlinear {
                        rhs += &format!(" + a[1,{p},{p},1,{j}]*d(a[2,{p},{p},0,1], u{p})*u{p}");
                    }
                    out.push(eq(format!("f[{p},{p},1,{j}]"), rhs));
                }
                out.push(eq(format!("f[{p},{p},2,1]"), format!("a[1,{p},{p},1,1]*a[2,{p},{p},1,1]")));
                if pde {
                    out.push(eq(
                        format!("f[{p},{p},2,2] + f[{p},{p},2,3]"),
                        format!("a[1,{p},{p},1,2]*a[2,{p},{p},1,1] + a[1,{p},{p},1,1]*a[2,{p},{p},1,2]"),
                    ));
                    out.push(eq(format!("f[{p},{p},2,4]"), format!("a[1,{p},{p},1,2]*a[2,{p},{p},1,2]")));
                }
                if nonlinear {
                    for h in (1..=m).filter(|&h| h != p) {
                        out.push(eq("0", format!("d(a[2,{p},{p},0,1], u{h})")));
                    }
                    for &j in axes {
                        for h in 1..=m {
                            out.push(eq("0", format!("d(a[2,{p},{p},1,{j}], u{h})")));
                        }
                    }
                }
            } else {
                out.push(eq(format!("f[{p},{q},0,1]"), format!("{} + {}", coupling(m, p, q), dx(p, &format!("a[2,{p},{q},0,1]")))));
                for &j in axes {
                    let mut rhs = format!("a[1,{p},{p},1,{j}]*a[2,{p},{q},0,1] + a[1,{p},{q},0,1]*a[2,{q},{q},1,{j}]");
                    if nonlinear {
                        rhs += &format!(" + a[1,{p},{p},1,{j}]*d(a[2,{p},{q},0,1], u{q})*u{q}");
                    }
                    out.push(eq(format!("f[{p},{q},1,{j}]"), rhs));
                }
                if nonlinear {
                    for h in (1..=m).filter(|&h| h != q) {
                        out.push(eq("0", format!("d(a[2,{p},{q},0,1], u{h})")));
                    }
                }
            }
        }
    }
    out
}

/// The printed list of a template; `m` only matters for systems.
pub fn printed(t: Template, m: usize) -> Printed {
    let nonlinear = t.linearity == Linearity::QuasiLinear;
    let pde = t.domain == Domain::Pde2;
    match (t.shape, nonlinear, pde) {
        (Shape::Scalar, false, false) => linear_ode(),
        (Shape::Scalar, false, true) => linear_pde2(),
        (Shape::Scalar, true, false) => nonlinear_ode(),
        (Shape::Scalar, true, true) => nonlinear_pde2(),
        (Shape::Matrix, _, _) => system(m, nonlinear, pde),
    }
}
