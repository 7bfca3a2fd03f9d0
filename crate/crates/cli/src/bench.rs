use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;

use mpca_core::generate::{generate, GenConfig};
use mpca_core::Error;

use crate::dispatch::{solve, Algo};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Users,
    Channels,
}

/// Values of one size parameter: doubling from `start` up to `end`, or
/// stepping by `step` when given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub axis: Axis,
    pub start: usize,
    pub end: usize,
    pub step: Option<usize>,
}

impl Sweep {
    pub fn values(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = self.start;
        while x <= self.end {
            out.push(x);
            x = match self.step {
                Some(s) => x + s,
                None => x * 2,
            };
        }
        out
    }
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || {
            Error::InvalidArgument(format!(
                "expected N=a..b[:step] or M=a..b[:step], got {s:?}"
            ))
        };
        let (axis, range) = s.split_once('=').ok_or_else(bad)?;
        let axis = match axis.trim() {
            "N" => Axis::Channels,
            "M" => Axis::Users,
            _ => return Err(bad()),
        };
        let (range, step) = match range.split_once(':') {
            Some((r, st)) => (r, Some(st.trim().parse::<usize>().map_err(|_| bad())?)),
            None => (range, None),
        };
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let start: usize = a.trim().parse().map_err(|_| bad())?;
        let end: usize = b.trim().parse().map_err(|_| bad())?;
        if start == 0 || start > end || step == Some(0) {
            return Err(bad());
        }
        Ok(Sweep {
            axis,
            start,
            end,
            step,
        })
    }
}

pub struct Plan {
    pub algo: Algo,
    pub sweep: Sweep,
    pub users: usize,
    pub channels: usize,
    pub groups: usize,
    pub seeds: Range<u64>,
}

struct Cell {
    users: usize,
    channels: usize,
    seed: u64,
}

fn thread_cap() -> Option<usize> {
    std::env::var("MPCA_THREADS")
        .ok()?
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

/// Runs every (size, seed) cell, possibly in parallel, and writes CSV rows
/// in cell order.
pub fn run(plan: &Plan, out: &mut impl Write) -> anyhow::Result<()> {
    let cells: Vec<Cell> = plan
        .sweep
        .values()
        .into_iter()
        .flat_map(|x| {
            plan.seeds.clone().map(move |seed| match plan.sweep.axis {
                Axis::Channels => Cell {
                    users: plan.users,
                    channels: x,
                    seed,
                },
                Axis::Users => Cell {
                    users: x,
                    channels: plan.channels,
                    seed,
                },
            })
        })
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        pool = pool.num_threads(n);
    }
    let rows: Vec<Result<String, Error>> = pool.build()?.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let instance = generate(&GenConfig::new(c.users, c.channels, plan.groups, c.seed))?;
                let report = solve(&instance, plan.algo, None)?;
                Ok(format!(
                    "{},{},{},{},{},{},{}",
                    report.algorithm,
                    c.users,
                    c.channels,
                    plan.groups,
                    c.seed,
                    report.objective,
                    report.wall_time_s
                ))
            })
            .collect()
    });
    writeln!(out, "algo,M,N,K,seed,objective,wall_time_s")?;
    for row in rows {
        writeln!(out, "{}", row?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_and_stepped() {
        let s: Sweep = "N=128..1024".parse().unwrap();
        assert_eq!(s.values(), vec![128, 256, 512, 1024]);
        let s: Sweep = "M=2..9:3".parse().unwrap();
        assert_eq!(s.axis, Axis::Users);
        assert_eq!(s.values(), vec![2, 5, 8]);
        for bad in ["N=0..4", "N=5..4", "K=1..2", "N=1..4:0", "N=1-4"] {
            assert!(bad.parse::<Sweep>().is_err(), "{bad}");
        }
    }
}
