//! The cost model: per-row constants for scans, joins, streaming, and Bloom
//! filter application. The defaults reproduce the qualitative plan flips on
//! the bundled fixtures; everything can be overridden by a config file or
//! `BLOOMQO_COST_*` environment variables for sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    pub cpu_tuple_cost: f64,
    pub hash_build_cost: f64,
    pub hash_probe_cost: f64,
    pub nl_pair_cost: f64,
    pub sort_cost_factor: f64,
    pub stream_broadcast_cost: f64,
    pub stream_redistribute_cost: f64,
    /// k: cost per row of probing one Bloom filter. Must stay below
    /// hash_probe_cost or filtering could never pay off.
    pub bf_apply_cost: f64,
    pub bf_build_cost: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            cpu_tuple_cost: 1.0,
            hash_build_cost: 1.0,
            hash_probe_cost: 1.5,
            nl_pair_cost: 0.1,
            sort_cost_factor: 0.2,
            stream_broadcast_cost: 0.1,
            stream_redistribute_cost: 0.3,
            bf_apply_cost: 0.5,
            bf_build_cost: 0.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cpu_tuple_cost", self.cpu_tuple_cost),
            ("hash_build_cost", self.hash_build_cost),
            ("hash_probe_cost", self.hash_probe_cost),
            ("nl_pair_cost", self.nl_pair_cost),
            ("sort_cost_factor", self.sort_cost_factor),
            ("stream_broadcast_cost", self.stream_broadcast_cost),
            ("stream_redistribute_cost", self.stream_redistribute_cost),
            ("bf_apply_cost", self.bf_apply_cost),
            ("bf_build_cost", self.bf_build_cost),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        if self.bf_apply_cost >= self.hash_probe_cost {
            return Err(Error::InvalidConfig(format!(
                "bf_apply_cost ({}) must be less than hash_probe_cost ({})",
                self.bf_apply_cost, self.hash_probe_cost
            )));
        }
        Ok(())
    }

    pub fn load(text: &str) -> Result<CostParams> {
        let p: CostParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// Applies `BLOOMQO_COST_<FIELD>` overrides (e.g. BLOOMQO_COST_BF_APPLY_COST).
    pub fn apply_env(mut self) -> Result<CostParams> {
        let set = |field: &mut f64, name: &str| -> Result<()> {
            let var = format!("BLOOMQO_COST_{}", name.to_uppercase());
            if let Ok(v) = std::env::var(&var) {
                *field = v
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("{var}={v} is not a number")))?;
            }
            Ok(())
        };
        set(&mut self.cpu_tuple_cost, "cpu_tuple_cost")?;
        set(&mut self.hash_build_cost, "hash_build_cost")?;
        set(&mut self.hash_probe_cost, "hash_probe_cost")?;
        set(&mut self.nl_pair_cost, "nl_pair_cost")?;
        set(&mut self.sort_cost_factor, "sort_cost_factor")?;
        set(&mut self.stream_broadcast_cost, "stream_broadcast_cost")?;
        set(&mut self.stream_redistribute_cost, "stream_redistribute_cost")?;
        set(&mut self.bf_apply_cost, "bf_apply_cost")?;
        set(&mut self.bf_build_cost, "bf_build_cost")?;
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cost {
    pub total: f64,
    pub startup: f64,
}

impl Cost {
    pub fn new(total: f64, startup: f64) -> Cost {
        debug_assert!(startup <= total + 1e-9);
        Cost { total, startup }
    }

    pub fn add(self, other: Cost) -> Cost {
        Cost {
            total: self.total + other.total,
            startup: self.startup + other.startup,
        }
    }
}

/// Scan emission plus one Bloom probe per input row per applied filter.
pub fn scan_cost(rows_in: f64, applied_bfs: usize, p: &CostParams) -> Cost {
    let total = p.cpu_tuple_cost * rows_in + p.bf_apply_cost * rows_in * applied_bfs as f64;
    Cost::new(total, 0.0)
}

/// Local cost of one hash join (children excluded). Startup covers the
/// complete build phase: probing cannot begin before the table exists.
pub fn hash_join_cost(build_rows: f64, probe_rows: f64, p: &CostParams) -> Cost {
    let build = p.hash_build_cost * build_rows;
    Cost::new(build + p.hash_probe_cost * probe_rows, build)
}

pub fn nl_join_cost(outer_rows: f64, inner_rows: f64, p: &CostParams) -> Cost {
    Cost::new(p.nl_pair_cost * outer_rows * inner_rows, 0.0)
}

pub fn merge_join_cost(left_rows: f64, right_rows: f64, p: &CostParams) -> Cost {
    let sort = |r: f64| p.sort_cost_factor * r * (r.max(2.0)).log2();
    let total = sort(left_rows) + sort(right_rows)
        + p.cpu_tuple_cost * (left_rows + right_rows);
    Cost::new(total, sort(left_rows) + sort(right_rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    Broadcast,
    Redistribute,
}

pub fn stream_cost(kind: StreamKind, rows: f64, dop: usize, p: &CostParams) -> Cost {
    let total = match kind {
        StreamKind::Broadcast => p.stream_broadcast_cost * rows * dop as f64,
        StreamKind::Redistribute => p.stream_redistribute_cost * rows,
    };
    Cost::new(total, 0.0)
}

pub fn bf_build_cost(rows: f64, p: &CostParams) -> Cost {
    Cost::new(p.bf_build_cost * rows, p.bf_build_cost * rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        CostParams::default().validate().unwrap();
    }

    #[test]
    fn k_must_undercut_probe() {
        let p = CostParams {
            bf_apply_cost: 1.5,
            ..CostParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidConfig(_))));
        let p = CostParams {
            hash_build_cost: -1.0,
            ..CostParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn scan_cost_linear_in_filters() {
        let p = CostParams::default();
        let base = scan_cost(1000.0, 0, &p);
        let two = scan_cost(1000.0, 2, &p);
        assert_eq!(base.total, 1000.0);
        assert_eq!(two.total, 1000.0 + 2.0 * 1000.0 * p.bf_apply_cost);
        let big = scan_cost(600_000_000.0, 1, &p);
        assert_eq!(big.total - scan_cost(600_000_000.0, 0, &p).total, p.bf_apply_cost * 600_000_000.0);
    }

    #[test]
    fn hash_join_cost_shape() {
        let p = CostParams::default();
        let c = hash_join_cost(100.0, 1000.0, &p);
        assert_eq!(c.total, 100.0 * p.hash_build_cost + 1000.0 * p.hash_probe_cost);
        assert_eq!(c.startup, 100.0 * p.hash_build_cost);
        let c0 = hash_join_cost(0.0, 1000.0, &p);
        assert_eq!(c0.total, 1000.0 * p.hash_probe_cost);
    }

    #[test]
    fn stream_costs() {
        let p = CostParams::default();
        assert_eq!(
            stream_cost(StreamKind::Broadcast, 1000.0, 4, &p).total,
            1000.0 * 4.0 * p.stream_broadcast_cost
        );
        assert_eq!(
            stream_cost(StreamKind::Redistribute, 1000.0, 4, &p).total,
            1000.0 * p.stream_redistribute_cost
        );
    }

    #[test]
    fn env_overrides() {
        std::env::set_var("BLOOMQO_COST_BF_APPLY_COST", "0.25");
        let p = CostParams::default().apply_env().unwrap();
        assert_eq!(p.bf_apply_cost, 0.25);
        std::env::remove_var("BLOOMQO_COST_BF_APPLY_COST");
    }

    #[test]
    fn load_rejects_unknown_fields() {
        assert!(CostParams::load("{\"nope\": 1}").is_err());
        let p = CostParams::load("{\"bf_apply_cost\": 0.1}").unwrap();
        assert_eq!(p.bf_apply_cost, 0.1);
    }

    #[test]
    fn monotone_in_rows() {
        let p = CostParams::default();
        assert!(hash_join_cost(200.0, 1000.0, &p).total >= hash_join_cost(100.0, 1000.0, &p).total);
        assert!(scan_cost(2000.0, 1, &p).total >= scan_cost(1000.0, 1, &p).total);
        assert!(merge_join_cost(2000.0, 10.0, &p).total >= merge_join_cost(1000.0, 10.0, &p).total);
        assert!(nl_join_cost(20.0, 10.0, &p).total >= nl_join_cost(10.0, 10.0, &p).total);
    }
}
