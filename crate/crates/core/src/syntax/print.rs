//! Pretty printing in the surface syntax accepted by the parser.
//!
//! Parallel composition is left-associative, so only a parallel right
//! operand needs parentheses. Trailing `.0` continuations are omitted.

use std::fmt;

use super::Process;

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Process::Par(l, r) => {
                write!(f, "{l} | ")?;
                write_unary(f, r)
            }
            _ => write_unary(f, self),
        }
    }
}

fn write_unary(f: &mut fmt::Formatter<'_>, p: &Process) -> fmt::Result {
    match p {
        Process::Nil => f.write_str("0"),
        Process::Input { chan, binder, body } => {
            write!(f, "{chan}({binder})")?;
            write_cont(f, body)
        }
        Process::Output { chan, object, body } => {
            write!(f, "{chan}<{object}>")?;
            write_cont(f, body)
        }
        Process::Par(..) => write!(f, "({p})"),
        Process::Res { binder, body } => write!(f, "(nu {binder})({body})"),
        Process::Rep(body) => {
            f.write_str("!")?;
            write_unary(f, body)
        }
        Process::Success(body) => {
            f.write_str("w")?;
            write_cont(f, body)
        }
    }
}

fn write_cont(f: &mut fmt::Formatter<'_>, body: &Process) -> fmt::Result {
    if body.is_nil() {
        Ok(())
    } else {
        f.write_str(".")?;
        write_unary(f, body)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_observer;
    use super::*;

    #[test]
    fn omits_trailing_nil_and_brackets_right_parallel() {
        let p = Process::par(
            Process::output("a", "b", Process::Nil),
            Process::par(
                Process::Nil,
                Process::input("a", "x", Process::success(Process::Nil)),
            ),
        );
        assert_eq!(p.to_string(), "a<b> | (0 | a(x).w)");
        assert_eq!(parse_observer(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn prints_restriction_and_replication() {
        let p = parse_observer("(nu b)(b<y> | !b(x).b<x>)").unwrap();
        assert_eq!(p.to_string(), "(nu b)(b<y> | !b(x).b<x>)");
        let q = parse_observer("a(x).(b<x> | c<x>)").unwrap();
        assert_eq!(q.to_string(), "a(x).(b<x> | c<x>)");
    }
}
