//! Plain-text parameter checkpoints.
//!
//! ```text
//! forage-policy 1
//! layout ego8-v1
//! fov 11
//! body conv:32 pool conv:32 dense:128 lstm:128
//! params <n>
//! <one value per line>
//! ```

use std::fmt::Write as _;

use forage_core::CHANNEL_LAYOUT;

use crate::error::LearnError;
use crate::net::{Network, NetworkSpec};

const MAGIC: &str = "forage-policy 1";

pub fn write_checkpoint(net: &Network) -> String {
    let spec = net.spec();
    let mut out = String::with_capacity(net.param_count() * 24 + 128);
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "layout {CHANNEL_LAYOUT}");
    let _ = writeln!(out, "fov {}", spec.fov);
    let _ = writeln!(out, "body {}", spec.body_text());
    let _ = writeln!(out, "params {}", net.param_count());
    for p in &net.params {
        // Display for f64 is the shortest string that parses back exactly
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn read_checkpoint(text: &str) -> Result<Network, LearnError> {
    let err = |line: usize, msg: String| LearnError::Checkpoint { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header = |key: &str| -> Result<(usize, String), LearnError> {
        let (n, line) = lines.next().ok_or_else(|| err(0, format!("missing {key:?} line")))?;
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| err(n, format!("expected {key:?}, found {line:?}")))?;
        Ok((n, rest.trim().to_string()))
    };
    let (n, magic) = header("forage-policy")?;
    if magic != "1" {
        return Err(err(n, format!("unsupported version {magic:?}")));
    }
    let (n, layout) = header("layout")?;
    if layout != CHANNEL_LAYOUT {
        return Err(err(n, format!("channel layout {layout:?}, expected {CHANNEL_LAYOUT:?}")));
    }
    let (n, fov) = header("fov")?;
    let fov: usize = fov.parse().map_err(|_| err(n, format!("bad fov {fov:?}")))?;
    let (n, body) = header("body")?;
    let spec = NetworkSpec::parse_body(fov, &body).map_err(|e| err(n, e.to_string()))?;
    let (n, count) = header("params")?;
    let count: usize = count.parse().map_err(|_| err(n, format!("bad count {count:?}")))?;
    let mut params = Vec::with_capacity(count);
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        params.push(line.parse::<f64>().map_err(|_| err(n, format!("bad value {line:?}")))?);
    }
    if params.len() != count {
        return Err(err(0, format!("header says {count} parameters, found {}", params.len())));
    }
    Network::from_params(spec, params).map_err(|e| err(0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Network::init(NetworkSpec::micro(7), &mut rng).unwrap();
        for p in &mut net.params {
            *p += rng.gen_range(-1e-3..1e-3) * std::f64::consts::PI;
        }
        let back = read_checkpoint(&write_checkpoint(&net)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_foreign_layouts_and_truncation() {
        let net = Network::zeros(NetworkSpec::micro(5)).unwrap();
        let text = write_checkpoint(&net);
        let foreign = text.replace(CHANNEL_LAYOUT, "other-v9");
        assert!(matches!(read_checkpoint(&foreign), Err(LearnError::Checkpoint { line: 2, .. })));
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(read_checkpoint(&cut).is_err());
        assert!(read_checkpoint("forage-policy 2\n").is_err());
    }
}
