//! Canonical text form for expressions and assertions. Parentheses are
//! emitted only where precedence requires them, so re-parsing the output
//! reconstructs the same tree.

use crate::expr::Expr;
use crate::hdl::sva::SvaAssertion;

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    render_prec(e, 0, &mut out);
    out
}

pub fn render_assertion(a: &SvaAssertion) -> String {
    let mut out = String::new();
    if let Some(name) = &a.name {
        out.push_str(name);
        out.push_str(": ");
    }
    out.push_str("assert property (");
    if let Some(clk) = &a.clock {
        out.push_str(&format!("@({} {}) ", clk.edge.keyword(), clk.signal));
    }
    if let Some(d) = &a.disable {
        out.push_str(&format!("disable iff ({}) ", render_expr(d)));
    }
    // implication operands are parenthesized only when non-atomic, which
    // keeps simple identifier properties flat
    render_prec(&a.antecedent, 1, &mut out);
    out.push(' ');
    out.push_str(a.implication.symbol());
    out.push(' ');
    for d in &a.delays {
        out.push_str(&format!("##{} ", d));
    }
    render_prec(&a.consequent, 1, &mut out);
    out.push_str(");");
    out
}

const ATOM_PREC: u8 = 12;
const UNARY_PREC: u8 = 11;

fn prec_of(e: &Expr) -> u8 {
    match e {
        Expr::Ternary(..) => 0,
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(..) => UNARY_PREC,
        _ => ATOM_PREC,
    }
}

fn render_prec(e: &Expr, min_prec: u8, out: &mut String) {
    let wrap = prec_of(e) < min_prec;
    if wrap {
        out.push('(');
    }
    match e {
        Expr::Ident(name) => out.push_str(name),
        Expr::Const(c) => out.push_str(&c.to_string()),
        Expr::Unary(op, inner) => {
            out.push_str(op.symbol());
            // operand is forced to atom level so adjacent unary symbols
            // cannot fuse into a two-character operator (`&&`, `||`)
            render_prec(inner, ATOM_PREC, out);
        }
        Expr::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            render_prec(lhs, p, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            render_prec(rhs, p + 1, out);
        }
        Expr::Ternary(c, t, f) => {
            render_prec(c, 1, out);
            out.push_str(" ? ");
            render_prec(t, 1, out);
            out.push_str(" : ");
            render_prec(f, 1, out);
        }
        Expr::Concat(parts) => {
            out.push('{');
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_prec(p, 0, out);
            }
            out.push('}');
        }
        Expr::Index(base, i) => {
            render_prec(base, ATOM_PREC, out);
            out.push_str(&format!("[{}]", i));
        }
        Expr::Slice(base, hi, lo) => {
            render_prec(base, ATOM_PREC, out);
            out.push_str(&format!("[{}:{}]", hi, lo));
        }
        Expr::Past(inner, depth) => {
            if *depth == 1 {
                out.push_str(&format!("$past({})", render_expr(inner)));
            } else {
                out.push_str(&format!("$past({}, {})", render_expr(inner), depth));
            }
        }
        Expr::Sampled(f, inner) => {
            out.push_str(&format!("{}({})", f.name(), render_expr(inner)));
        }
    }
    if wrap {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BinaryOp, Const, UnaryOp};
    use crate::hdl::sva::parse_assertion;

    fn bin(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    #[test]
    fn minimal_parens() {
        let e = bin(
            BinaryOp::LogicAnd,
            Expr::ident("a"),
            bin(BinaryOp::LogicOr, Expr::ident("b"), Expr::ident("c")),
        );
        assert_eq!(render_expr(&e), "a && (b || c)");
        let e = bin(
            BinaryOp::LogicOr,
            bin(BinaryOp::LogicAnd, Expr::ident("a"), Expr::ident("b")),
            Expr::ident("c"),
        );
        assert_eq!(render_expr(&e), "a && b || c");
    }

    #[test]
    fn left_associativity_preserved() {
        // a - (b - c) must keep its parens; (a - b) - c must not
        let l = bin(
            BinaryOp::Sub,
            bin(BinaryOp::Sub, Expr::ident("a"), Expr::ident("b")),
            Expr::ident("c"),
        );
        assert_eq!(render_expr(&l), "a - b - c");
        let r = bin(
            BinaryOp::Sub,
            Expr::ident("a"),
            bin(BinaryOp::Sub, Expr::ident("b"), Expr::ident("c")),
        );
        assert_eq!(render_expr(&r), "a - (b - c)");
    }

    #[test]
    fn unary_operands_cannot_fuse() {
        let e = Expr::Unary(
            UnaryOp::ReduceAnd,
            Box::new(Expr::Unary(UnaryOp::ReduceAnd, Box::new(Expr::ident("x")))),
        );
        assert_eq!(render_expr(&e), "&(&x)");
    }

    #[test]
    fn consts_render_canonically() {
        assert_eq!(render_expr(&Expr::Const(Const::new(Some(3), 4))), "3'b100");
        assert_eq!(render_expr(&Expr::Const(Const::unsized_dec(7))), "7");
    }

    #[test]
    fn delay_chain_renders() {
        let a = parse_assertion("a |-> ##2 b").unwrap();
        assert!(render_assertion(&a).contains("##2"));
    }

    #[test]
    fn paper_forms_round_trip() {
        for text in [
            "assert property (@(posedge wb_clk_i) (wb_cyc_i && wb_stb_i) |-> wb_ack_o);",
            "(wb_adr_i == 3'b100) |-> ##1 (wb_dat_o == $past(txr))",
        ] {
            let a = parse_assertion(text).unwrap();
            let rendered = render_assertion(&a);
            let b = parse_assertion(&rendered).unwrap();
            assert_eq!(a, b, "round-trip mismatch for `{}` -> `{}`", text, rendered);
        }
    }

    #[test]
    fn labeled_disable_round_trip() {
        let a = parse_assertion(
            "chk: assert property (@(negedge clk) disable iff (rst || halt) $rose(req) |=> ##1 $past(gnt, 2) == 1'b1);",
        )
        .unwrap();
        let b = parse_assertion(&render_assertion(&a)).unwrap();
        assert_eq!(a, b);
    }
}
