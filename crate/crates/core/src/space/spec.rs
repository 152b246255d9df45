//! Space specification strings.
//!
//! ```text
//! space   := factor ("x" factor)*
//! factor  := "euclidean:" DIM
//!          | "hyperbolic:" DIM [",kappa=" REAL]
//!          | "spd:" N [",lambda=" REAL]
//! ```
//!
//! `DIM` and `N` are decimal integers, `REAL` is anything `f64::from_str`
//! accepts. Omitted `kappa` means 1, omitted `lambda` means `1/n`. Printing
//! always writes the scale with Rust's shortest round-trip formatting, so
//! `parse(print(s)) == s` bit for bit.

use crate::error::{Error, Result};
use crate::space::spd::SpdFactor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorSpec {
    Euclidean { dim: usize },
    Hyperbolic { dim: usize, kappa: f64 },
    Spd { n: usize, lambda: f64 },
}

fn parse_err(token: &str, message: impl Into<String>) -> Error {
    Error::Parse { token: token.to_string(), message: message.into() }
}

fn parse_uint(token: &str) -> Result<usize> {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(parse_err(token, "expected a decimal integer"));
    }
    token.parse().map_err(|_| parse_err(token, "integer out of range"))
}

fn parse_real(token: &str) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| parse_err(token, "expected a real number"))?;
    if !v.is_finite() {
        return Err(parse_err(token, "expected a finite number"));
    }
    Ok(v)
}

fn parse_scale(rest: Option<&str>, key: &str) -> Result<Option<f64>> {
    match rest {
        None => Ok(None),
        Some(kv) => {
            let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(kv, "expected key=value"))?;
            if k != key {
                return Err(parse_err(k, format!("expected `{key}`")));
            }
            parse_real(v).map(Some)
        }
    }
}

pub fn parse_factor(token: &str) -> Result<FactorSpec> {
    let (kind, args) = token
        .split_once(':')
        .ok_or_else(|| parse_err(token, "expected <kind>:<args>"))?;
    let (dim, rest) = match args.split_once(',') {
        Some((d, r)) => (d, Some(r)),
        None => (args, None),
    };
    match kind {
        "euclidean" => {
            if let Some(r) = rest {
                return Err(parse_err(r, "euclidean takes no parameters"));
            }
            Ok(FactorSpec::Euclidean { dim: parse_uint(dim)? })
        }
        "hyperbolic" => Ok(FactorSpec::Hyperbolic {
            dim: parse_uint(dim)?,
            kappa: parse_scale(rest, "kappa")?.unwrap_or(1.0),
        }),
        "spd" => {
            let n = parse_uint(dim)?;
            let lambda = match parse_scale(rest, "lambda")? {
                Some(l) => l,
                None if n > 0 => SpdFactor::default_lambda(n),
                None => return Err(parse_err(dim, "spd size must be positive")),
            };
            Ok(FactorSpec::Spd { n, lambda })
        }
        other => Err(parse_err(other, "unknown factor kind (euclidean, hyperbolic, spd)")),
    }
}

pub fn parse_space(s: &str) -> Result<Vec<FactorSpec>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(parse_err(s, "empty space specification"));
    }
    s.split('x').map(parse_factor).collect()
}

pub fn print_factor(f: &FactorSpec) -> String {
    match f {
        FactorSpec::Euclidean { dim } => format!("euclidean:{dim}"),
        FactorSpec::Hyperbolic { dim, kappa } => format!("hyperbolic:{dim},kappa={kappa}"),
        FactorSpec::Spd { n, lambda } => format!("spd:{n},lambda={lambda}"),
    }
}

pub fn print_space(specs: &[FactorSpec]) -> String {
    specs.iter().map(print_factor).collect::<Vec<_>>().join("x")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        assert_eq!(
            parse_space("hyperbolic:2,kappa=1xeuclidean:1").unwrap(),
            vec![FactorSpec::Hyperbolic { dim: 2, kappa: 1.0 }, FactorSpec::Euclidean { dim: 1 }]
        );
        assert_eq!(parse_space("spd:3").unwrap(), vec![FactorSpec::Spd { n: 3, lambda: 1.0 / 3.0 }]);
        assert_eq!(parse_space("spd:3,lambda=1").unwrap(), vec![FactorSpec::Spd { n: 3, lambda: 1.0 }]);
    }

    #[test]
    fn errors_name_the_token() {
        let e = parse_space("euclidean:3xsphere:2").unwrap_err();
        assert!(matches!(e, Error::Parse { ref token, .. } if token == "sphere"));
        let e = parse_space("hyperbolic:3,curv=1").unwrap_err();
        assert!(matches!(e, Error::Parse { ref token, .. } if token == "curv"));
        let e = parse_space("euclidean:-1").unwrap_err();
        assert!(matches!(e, Error::Parse { ref token, .. } if token == "-1"));
        assert!(parse_space("").is_err());
        assert!(parse_space("hyperbolic:2,kappa=inf").is_err());
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(
            dims in proptest::collection::vec((0u8..3, 1usize..6, 1e-6f64..1e6), 1..4)
        ) {
            let specs: Vec<FactorSpec> = dims
                .iter()
                .map(|&(k, d, s)| match k {
                    0 => FactorSpec::Euclidean { dim: d },
                    1 => FactorSpec::Hyperbolic { dim: d, kappa: s },
                    _ => FactorSpec::Spd { n: d, lambda: s },
                })
                .collect();
            let printed = print_space(&specs);
            prop_assert_eq!(parse_space(&printed).unwrap(), specs);
        }
    }
}
