//! 3-SAT gadget instances.
//!
//! A CNF formula with `v` variables and `w` clauses becomes an instance with
//! `2v + w` users, all with rate target 1:
//!
//! - per variable, one super-channel and three literal channels for each
//!   polarity, plus two literal users (one per polarity);
//! - per clause, one clause user and one auxiliary channel.
//!
//! A literal user sees gain `g_s` on its variable's super-channel and `g_l`
//! on its own three literal channels. A clause user sees `g_c` on the literal
//! channels standing for its three literal occurrences and `g_a` on its
//! auxiliary channel. Everything else is `g_e`. At the optimum each literal
//! user takes either the super-channel or all three of its literal channels,
//! which encodes a truth assignment, and the clause users stay within a total
//! power of `w` exactly when the formula is satisfiable.
//!
//! The consecutive variant adds two dummy channels per variable and orders
//! the channels so that literal users need blocks of three and clause users
//! blocks of one.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, MpcaInstance, RateModel, SolveReport};
use crate::oracle::{solve_consecutive_exact, solve_subset_dp, MAX_SUBSET_CHANNELS};
use crate::waterfill::{waterfill_grouped, waterfill_power};

/// Slack added to the threshold when deciding satisfiability.
pub const DECISION_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn positive(var: usize) -> Self {
        Literal {
            var,
            negated: false,
        }
    }

    pub fn negative(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// `2 * var + negated`; indexes per-literal tables.
    pub fn index(self) -> usize {
        2 * self.var + self.negated as usize
    }

    /// Signed 1-based DIMACS form.
    pub fn dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn is_true_under(self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dimacs())
    }
}

/// 3-CNF where each literal occurs between one and three times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        if num_vars == 0 || clauses.is_empty() {
            return Err(Error::MalformedCnf(
                "need at least one variable and one clause".into(),
            ));
        }
        if let Some(l) = clauses.iter().flatten().find(|l| l.var >= num_vars) {
            return Err(Error::MalformedCnf(format!(
                "literal {l} refers to an undeclared variable"
            )));
        }
        let cnf = CnfFormula { num_vars, clauses };
        for var in 0..num_vars {
            for lit in [Literal::positive(var), Literal::negative(var)] {
                let count = cnf.occurrences(lit);
                if !(1..=3).contains(&count) {
                    return Err(Error::OccurrenceBoundViolated {
                        literal: lit.dimacs(),
                        count,
                    });
                }
            }
        }
        Ok(cnf)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    pub fn occurrences(&self, lit: Literal) -> usize {
        self.clauses.iter().flatten().filter(|&&l| l == lit).count()
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.is_true_under(assignment)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            out.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
        }
        out
    }
}

/// Reads DIMACS CNF text. Clauses may span lines; every clause must have
/// exactly three literals.
pub fn parse_dimacs(bytes: &[u8]) -> Result<CnfFormula> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        column: e.valid_up_to(),
        message: "input is not UTF-8".into(),
    })?;
    let parse_err = |line: usize, message: String| Error::Parse {
        line,
        column: 0,
        message,
    };
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if header.is_some() || fields.len() != 4 || fields[1] != "cnf" {
                return Err(parse_err(line_no, format!("bad problem line {line:?}")));
            }
            let v = fields[2]
                .parse()
                .map_err(|_| parse_err(line_no, "bad variable count".into()))?;
            let w = fields[3]
                .parse()
                .map_err(|_| parse_err(line_no, "bad clause count".into()))?;
            header = Some((v, w));
            continue;
        }
        let (num_vars, _) =
            header.ok_or_else(|| parse_err(line_no, "clause before problem line".into()))?;
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad literal {tok:?}")))?;
            if x == 0 {
                if current.len() != 3 {
                    return Err(Error::NotThreeSat {
                        clause: clauses.len() + 1,
                        len: current.len(),
                    });
                }
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = x.unsigned_abs() as usize;
            if var > num_vars {
                return Err(parse_err(
                    line_no,
                    format!("variable {var} exceeds declared {num_vars}"),
                ));
            }
            current.push(Literal {
                var: var - 1,
                negated: x < 0,
            });
        }
    }
    let (num_vars, num_clauses) =
        header.ok_or_else(|| parse_err(last_line, "missing problem line".into()))?;
    if !current.is_empty() {
        return Err(parse_err(
            last_line,
            "last clause is not terminated by 0".into(),
        ));
    }
    if clauses.len() != num_clauses {
        return Err(parse_err(
            last_line,
            format!(
                "problem line declares {num_clauses} clauses, found {}",
                clauses.len()
            ),
        ));
    }
    CnfFormula::new(
        num_vars,
        clauses.into_iter().map(|c| [c[0], c[1], c[2]]).collect(),
    )
}

/// Every well-formed formula with `v` variables and `w` clauses, taking
/// clauses as sorted literal multisets and the formula as a sorted clause
/// multiset.
pub fn enumerate_cnfs(v: usize, w: usize) -> Vec<CnfFormula> {
    let literals: Vec<Literal> = (0..v)
        .flat_map(|x| [Literal::positive(x), Literal::negative(x)])
        .collect();
    let mut clauses = Vec::new();
    for a in 0..literals.len() {
        for b in a..literals.len() {
            for c in b..literals.len() {
                clauses.push([literals[a], literals[b], literals[c]]);
            }
        }
    }
    let mut out = Vec::new();
    let mut picks = vec![0usize; w];
    if v == 0 || w == 0 {
        return out;
    }
    loop {
        let chosen = picks.iter().map(|&i| clauses[i]).collect();
        if let Ok(f) = CnfFormula::new(v, chosen) {
            out.push(f);
        }
        // next nondecreasing index vector
        let Some(pos) = (0..w).rev().find(|&i| picks[i] + 1 < clauses.len()) else {
            break;
        };
        let next = picks[pos] + 1;
        picks[pos..].iter_mut().for_each(|p| *p = next);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMode {
    /// `2v + w` users on `7v + w` channels, no allocation restriction.
    Unrestricted,
    /// `9v + w` channels with dummies; users take consecutive blocks.
    Consecutive,
}

/// Gain constants of the gadget for `w` clauses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GadgetGains {
    pub super_channel: f64,
    pub clause: f64,
    pub auxiliary: f64,
    pub literal: f64,
    pub epsilon: f64,
}

impl GadgetGains {
    pub fn for_clauses(w: usize) -> Self {
        let w = w as f64;
        let auxiliary = 1.0 / (0.9 * w + 0.1);
        GadgetGains {
            super_channel: 1.0,
            clause: 1.0,
            auxiliary,
            literal: auxiliary / 26.0,
            epsilon: 1.0 / (53.0 * w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChannelRole {
    Super { var: usize },
    Literal { literal: Literal, copy: usize },
    Auxiliary { clause: usize },
    Dummy { var: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UserRole {
    Literal(Literal),
    Clause(usize),
}

/// Which channel and user plays which part in a gadget instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionLayout {
    pub mode: ReductionMode,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub gains: GadgetGains,
    pub channel_roles: Vec<ChannelRole>,
    pub user_roles: Vec<UserRole>,
    /// Per variable.
    pub super_channels: Vec<usize>,
    /// Per literal index, the three copies in order.
    pub literal_channels: Vec<[usize; 3]>,
    /// Per clause.
    pub auxiliary_channels: Vec<usize>,
    /// Per clause and position, the literal channel standing for that
    /// occurrence.
    pub occurrence_channels: Vec<[usize; 3]>,
}

impl ReductionLayout {
    pub fn literal_user(&self, lit: Literal) -> usize {
        lit.index()
    }

    pub fn clause_user(&self, clause: usize) -> usize {
        2 * self.num_vars + clause
    }

    /// The four channels on which `user` sees more than `g_e`.
    pub fn valid_channels(&self, user: usize) -> [usize; 4] {
        match self.user_roles[user] {
            UserRole::Literal(lit) => {
                let c = self.literal_channels[lit.index()];
                [self.super_channels[lit.var], c[0], c[1], c[2]]
            }
            UserRole::Clause(j) => {
                let c = self.occurrence_channels[j];
                [c[0], c[1], c[2], self.auxiliary_channels[j]]
            }
        }
    }

    pub fn literal_users(&self) -> impl Iterator<Item = usize> + '_ {
        0..2 * self.num_vars
    }

    pub fn clause_users(&self) -> impl Iterator<Item = usize> + '_ {
        2 * self.num_vars..2 * self.num_vars + self.num_clauses
    }
}

fn build(cnf: &CnfFormula, mode: ReductionMode) -> Result<(MpcaInstance, ReductionLayout)> {
    let (v, w) = (cnf.num_vars(), cnf.num_clauses());
    let gains = GadgetGains::for_clauses(w);
    let mut channel_roles = Vec::new();
    let mut super_channels = Vec::with_capacity(v);
    for var in 0..v {
        super_channels.push(channel_roles.len());
        channel_roles.push(ChannelRole::Super { var });
        if mode == ReductionMode::Consecutive {
            channel_roles.push(ChannelRole::Dummy { var });
            channel_roles.push(ChannelRole::Dummy { var });
        }
    }
    let mut literal_channels = vec![[0; 3]; 2 * v];
    for var in 0..v {
        for lit in [Literal::positive(var), Literal::negative(var)] {
            for (copy, slot) in literal_channels[lit.index()].iter_mut().enumerate() {
                *slot = channel_roles.len();
                channel_roles.push(ChannelRole::Literal { literal: lit, copy });
            }
        }
    }
    let auxiliary_channels: Vec<usize> = (0..w)
        .map(|clause| {
            channel_roles.push(ChannelRole::Auxiliary { clause });
            channel_roles.len() - 1
        })
        .collect();
    // the t-th occurrence of a literal, in clause order, uses copy t
    let mut used = vec![0usize; 2 * v];
    let occurrence_channels: Vec<[usize; 3]> = cnf
        .clauses()
        .iter()
        .map(|clause| {
            clause.map(|lit| {
                let copy = used[lit.index()];
                used[lit.index()] += 1;
                literal_channels[lit.index()][copy]
            })
        })
        .collect();
    let user_roles: Vec<UserRole> = (0..v)
        .flat_map(|var| {
            [
                UserRole::Literal(Literal::positive(var)),
                UserRole::Literal(Literal::negative(var)),
            ]
        })
        .chain((0..w).map(UserRole::Clause))
        .collect();

    let layout = ReductionLayout {
        mode,
        num_vars: v,
        num_clauses: w,
        gains,
        channel_roles,
        user_roles,
        super_channels,
        literal_channels,
        auxiliary_channels,
        occurrence_channels,
    };
    let n = layout.channel_roles.len();
    let mut matrix = vec![vec![gains.epsilon; n]; layout.user_roles.len()];
    for (user, row) in matrix.iter_mut().enumerate() {
        match layout.user_roles[user] {
            UserRole::Literal(lit) => {
                row[layout.super_channels[lit.var]] = gains.super_channel;
                for c in layout.literal_channels[lit.index()] {
                    row[c] = gains.literal;
                }
            }
            UserRole::Clause(j) => {
                for c in layout.occurrence_channels[j] {
                    row[c] = gains.clause;
                }
                row[layout.auxiliary_channels[j]] = gains.auxiliary;
            }
        }
    }
    let users = matrix.len();
    let instance = MpcaInstance::new(RateModel::LogSnr, matrix, vec![1.0; users])?;
    Ok((instance, layout))
}

/// Gadget instance without allocation restrictions.
pub fn build_unrestricted(cnf: &CnfFormula) -> Result<(MpcaInstance, ReductionLayout)> {
    build(cnf, ReductionMode::Unrestricted)
}

/// Gadget instance with dummy channels, ordered for consecutive blocks;
/// also returns the block size of every user.
pub fn build_consecutive(cnf: &CnfFormula) -> Result<(MpcaInstance, ReductionLayout, Vec<usize>)> {
    let (instance, layout) = build(cnf, ReductionMode::Consecutive)?;
    let blocks = layout
        .user_roles
        .iter()
        .map(|r| match r {
            UserRole::Literal(_) => 3,
            UserRole::Clause(_) => 1,
        })
        .collect();
    Ok((instance, layout, blocks))
}

/// Total power of the literal users at a structured optimum: each variable
/// contributes one user on its super-channel and one on three literal
/// channels.
pub fn literal_power_constant(v: usize, w: usize) -> f64 {
    let (v, w) = (v as f64, w as f64);
    v + 78.0 * v * (2f64.powf(1.0 / 3.0) - 1.0) * (0.9 * w + 0.1)
}

/// Optimum power at or below which the formula is satisfiable.
pub fn sat_threshold(v: usize, w: usize) -> f64 {
    literal_power_constant(v, w) + w as f64
}

/// Optimal power of a literal user holding one, two or three of its literal
/// channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiteralPowerLevels {
    pub one: f64,
    pub two: f64,
    pub three: f64,
}

impl LiteralPowerLevels {
    pub fn for_gains(gains: &GadgetGains) -> Self {
        let p = |k| waterfill_grouped(RateModel::LogSnr, &[gains.literal], &[k], 1.0);
        LiteralPowerLevels {
            one: p(1),
            two: p(2),
            three: p(3),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SatDecision {
    pub mode: ReductionMode,
    pub satisfiable: bool,
    pub optimum: f64,
    pub threshold: f64,
    #[serde(skip)]
    pub report: SolveReport,
}

/// Solves the gadget instance exactly and compares the optimum with the
/// threshold.
pub fn decide_sat(cnf: &CnfFormula, mode: ReductionMode) -> Result<SatDecision> {
    let report = match mode {
        ReductionMode::Unrestricted => {
            let (instance, _) = build_unrestricted(cnf)?;
            solve_subset_dp(&instance)?
        }
        ReductionMode::Consecutive => {
            let (instance, _, blocks) = build_consecutive(cnf)?;
            solve_consecutive_exact(&instance, &blocks)?
        }
    };
    let threshold = sat_threshold(cnf.num_vars(), cnf.num_clauses());
    Ok(SatDecision {
        mode,
        satisfiable: report.objective <= threshold + DECISION_MARGIN,
        optimum: report.objective,
        threshold,
        report,
    })
}

/// Detaches every zero-rate channel from its owner. Power is unchanged.
pub fn canonicalize_optimum(allocation: &Allocation) -> Allocation {
    let mut out = allocation.clone();
    let idle: Vec<usize> = (0..out.num_channels())
        .filter(|&n| out.owner(n).is_some() && out.rates()[n] == 0.0)
        .collect();
    out.release(idle);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetReport {
    pub checks: Vec<LemmaCheck>,
}

impl GadgetReport {
    pub fn passed(&self, name: &str) -> Option<bool> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const CHECK_VALID_CHANNELS: &str = "no-invalid-channel";
pub const CHECK_LITERAL_STRUCTURE: &str = "literal-structure";
pub const CHECK_CONSTANT_CHAIN: &str = "constant-chain";
pub const CHECK_LITERAL_POWER: &str = "literal-power";
pub const CHECK_CLAUSE_POWER: &str = "clause-power-bound";

/// Structural checks on a canonical optimum of an unrestricted gadget
/// instance. Failures are reported, not raised.
pub fn check_gadget_lemmas(layout: &ReductionLayout, optimum: &Allocation) -> GadgetReport {
    let mut checks = Vec::new();
    let active = |n: usize| optimum.rates()[n] > 0.0;

    let stray: Vec<String> = (0..optimum.num_channels())
        .filter(|&n| active(n))
        .filter_map(|n| {
            let m = optimum.owner(n)?;
            (!layout.valid_channels(m).contains(&n)).then(|| format!("user {m} on channel {n}"))
        })
        .collect();
    checks.push(LemmaCheck {
        name: CHECK_VALID_CHANNELS,
        passed: stray.is_empty(),
        detail: if stray.is_empty() {
            "ok".into()
        } else {
            stray.join(", ")
        },
    });

    let mut mixed = Vec::new();
    for user in layout.literal_users() {
        let UserRole::Literal(lit) = layout.user_roles[user] else {
            unreachable!()
        };
        let mut used: Vec<usize> = optimum
            .channels_of(user)
            .into_iter()
            .filter(|&n| active(n))
            .collect();
        used.sort_unstable();
        let on_super = used == [layout.super_channels[lit.var]];
        let on_literals = used == layout.literal_channels[lit.index()];
        if !(on_super || on_literals) {
            mixed.push(format!("literal {lit} uses {used:?}"));
        }
    }
    checks.push(LemmaCheck {
        name: CHECK_LITERAL_STRUCTURE,
        passed: mixed.is_empty(),
        detail: if mixed.is_empty() {
            "ok".into()
        } else {
            mixed.join(", ")
        },
    });

    let g = layout.gains;
    let f = LiteralPowerLevels::for_gains(&g);
    let chain = f.one > f.two
        && f.two > f.three
        && f.two - f.three > 0.04 / g.literal
        && 0.04 / g.literal > 1.0 / g.auxiliary;
    checks.push(LemmaCheck {
        name: CHECK_CONSTANT_CHAIN,
        passed: chain,
        detail: format!(
            "f1={:.6} f2={:.6} f3={:.6} f2-f3={:.6} 0.04/g_l={:.6} 1/g_a={:.6}",
            f.one,
            f.two,
            f.three,
            f.two - f.three,
            0.04 / g.literal,
            1.0 / g.auxiliary
        ),
    });

    let literal_power: f64 = layout.literal_users().map(|m| optimum.user_power(m)).sum();
    let expected = literal_power_constant(layout.num_vars, layout.num_clauses);
    checks.push(LemmaCheck {
        name: CHECK_LITERAL_POWER,
        passed: (literal_power - expected).abs() <= 1e-9,
        detail: format!("literal users spend {literal_power:.12}, expected {expected:.12}"),
    });

    let clause_power: f64 = layout.clause_users().map(|m| optimum.user_power(m)).sum();
    let w = layout.num_clauses as f64;
    checks.push(LemmaCheck {
        name: CHECK_CLAUSE_POWER,
        passed: clause_power <= w + 1e-9,
        detail: format!("clause users spend {clause_power:.12}, bound {w}"),
    });
    GadgetReport { checks }
}

/// Best solution in which every literal user takes either its super-channel
/// or all three literal channels, and clause users are solved exactly over
/// the remaining channels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuredOptimum {
    pub value: f64,
    pub assignment: Vec<bool>,
    pub literal_power: f64,
    pub clause_power: f64,
}

pub fn structured_optimum(
    instance: &MpcaInstance,
    layout: &ReductionLayout,
) -> Result<StructuredOptimum> {
    let v = layout.num_vars;
    let remaining_count = instance.num_channels() - 4 * v;
    if remaining_count > MAX_SUBSET_CHANNELS || v >= 24 {
        return Err(Error::InstanceTooLarge(format!(
            "structured search over {v} variables and {remaining_count} free channels"
        )));
    }
    let clause_users: Vec<usize> = layout.clause_users().collect();
    let mut best: Option<StructuredOptimum> = None;
    for bits in 0u32..(1 << v) {
        let assignment: Vec<bool> = (0..v).map(|i| bits >> i & 1 == 1).collect();
        let mut taken = vec![false; instance.num_channels()];
        let mut literal_power = 0.0;
        for (var, &value) in assignment.iter().enumerate() {
            // the true literal's channels stay free for the clauses
            let (on_super, on_literals) = if value {
                (Literal::positive(var), Literal::negative(var))
            } else {
                (Literal::negative(var), Literal::positive(var))
            };
            let s = layout.super_channels[var];
            taken[s] = true;
            literal_power += waterfill_power(
                RateModel::LogSnr,
                &[instance.gain(layout.literal_user(on_super), s)],
                1.0,
            );
            let chans = layout.literal_channels[on_literals.index()];
            let user = layout.literal_user(on_literals);
            let gains: Vec<f64> = chans.iter().map(|&c| instance.gain(user, c)).collect();
            chans.iter().for_each(|&c| taken[c] = true);
            literal_power += waterfill_power(RateModel::LogSnr, &gains, 1.0);
        }
        let free: Vec<usize> = (0..instance.num_channels())
            .filter(|&n| !taken[n])
            .collect();
        let clause_power = solve_subset_dp(&instance.restrict(&clause_users, &free)?)?.objective;
        let value = literal_power + clause_power;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(StructuredOptimum {
                value,
                assignment,
                literal_power,
                clause_power,
            });
        }
    }
    Ok(best.expect("at least one assignment"))
}
