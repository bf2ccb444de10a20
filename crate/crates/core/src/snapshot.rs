//! Plain-text field snapshots.
//!
//! ```text
//! dim n_1 [n_2] extent_1 [extent_2] a gamma lambda
//! value_0
//! value_1
//! ...
//! ```
//!
//! Node values follow the storage order of [`DiscreteField`]. Reals are
//! written in scientific notation with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fiber::ProblemParams;
use crate::space::{build_space, DiscreteField, DiscreteSpace, SpaceConfig};

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn encode_snapshot(field: &DiscreteField, params: &ProblemParams) -> String {
    let cfg = field.space().config();
    let mut out = String::with_capacity(24 * (field.values().len() + 1));
    let mut header: Vec<String> = vec![cfg.dim.to_string()];
    header.extend(cfg.n.iter().map(|n| n.to_string()));
    header.extend(cfg.extent.iter().map(|l| fmt_real(*l)));
    header.extend(
        [params.a, params.gamma, params.lambda]
            .iter()
            .map(|x| fmt_real(*x)),
    );
    out.push_str(&header.join(" "));
    out.push('\n');
    for v in field.values() {
        let _ = writeln!(out, "{}", fmt_real(*v));
    }
    out
}

/// A decoded snapshot: the space it lives in, the problem constants and the
/// field itself.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub space: Arc<DiscreteSpace>,
    pub params: ProblemParams,
    pub field: DiscreteField,
}

pub fn decode_snapshot(text: &str) -> Result<Snapshot> {
    let bad = |msg: String| Error::MalformedSnapshot(msg);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty snapshot".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let dim: usize = tokens
        .first()
        .ok_or_else(|| bad("missing dim".into()))?
        .parse()
        .map_err(|e| bad(format!("dim: {e}")))?;
    if dim != 1 && dim != 2 {
        return Err(bad(format!("dim must be 1 or 2, got {dim}")));
    }
    if tokens.len() != 1 + 2 * dim + 3 {
        return Err(bad(format!(
            "header has {} fields, expected {}",
            tokens.len(),
            1 + 2 * dim + 3
        )));
    }
    let real =
        |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))) };
    let n = tokens[1..=dim]
        .iter()
        .map(|s| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let extent = tokens[1 + dim..=2 * dim]
        .iter()
        .map(|s| real(s))
        .collect::<Result<Vec<_>>>()?;
    let a = real(tokens[2 * dim + 1])?;
    let gamma = real(tokens[2 * dim + 2])?;
    let lambda = real(tokens[2 * dim + 3])?;
    let params = ProblemParams::new(a, gamma, lambda).map_err(|e| bad(e.to_string()))?;
    let config = SpaceConfig {
        dim,
        extent,
        n,
        quadrature: Default::default(),
    };
    let space = build_space(config).map_err(|e| bad(e.to_string()))?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| real(l.trim()))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != space.unknowns() {
        return Err(bad(format!(
            "{} node values for {} unknowns",
            values.len(),
            space.unknowns()
        )));
    }
    let field = DiscreteField::from_values(&space, values).map_err(|e| bad(e.to_string()))?;
    Ok(Snapshot {
        space,
        params,
        field,
    })
}

pub fn write_snapshot(path: &Path, field: &DiscreteField, params: &ProblemParams) -> Result<()> {
    std::fs::write(path, encode_snapshot(field, params))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    decode_snapshot(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let space = build_space(SpaceConfig::rectangle(1.0, 2.0, 3, 4)).unwrap();
        let u = DiscreteField::half_sine(&space);
        let params = ProblemParams::new(1.0, 3.0, 0.25).unwrap();
        let text = encode_snapshot(&u, &params);
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("2 3 4 1.0000000000000000e0 2.0000000000000000e0 "));
        assert_eq!(text.lines().count(), 13);
    }

    #[test]
    fn malformed_inputs_rejected() {
        for text in [
            "",
            "3 4 1 1 3 0",
            "1 4 1 1 3",
            "1 4 1 1 3 0\n1\n2\n3",
            "1 4 1 1 5 0\n1\n2\n3\n4",
            "1 4 1 1 3 0\n1\n2\nx\n4",
        ] {
            assert!(matches!(
                decode_snapshot(text),
                Err(Error::MalformedSnapshot(_))
            ));
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            values in proptest::collection::vec(-1e6f64..1e6, 7),
            lambda in 0.0f64..10.0,
            gamma in 2.01f64..3.99,
        ) {
            let space = build_space(SpaceConfig::interval(1.3, 7)).unwrap();
            let u = DiscreteField::from_values(&space, values.clone()).unwrap();
            let params = ProblemParams::new(0.7, gamma, lambda).unwrap();
            let snap = decode_snapshot(&encode_snapshot(&u, &params)).unwrap();
            prop_assert_eq!(snap.params, params);
            prop_assert_eq!(snap.field.values(), &values[..]);
            prop_assert_eq!(snap.space.config(), space.config());
        }
    }
}
