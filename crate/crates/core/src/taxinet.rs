//! TaxiNet case-study models: discretization of the continuous state, the
//! controller, the airplane dynamics with the two safety properties encoded as
//! error transitions, and perception abstractions.
//!
//! Heading bins are coded 1 (left), 0 (centre), 2 (right); the signed heading
//! of a code is -1, 0, +1 respectively. Commands are `cmd[0]` (straight),
//! `cmd[1]` (turn left, heading -1) and `cmd[2]` (turn right, heading +1).

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::action::Action;
use crate::assume::{InterfaceAlphabet, Tag};
use crate::lts::{compose, Lts, LtsBuilder, StateId};

/// Heading codes ordered from the leftmost bin to the rightmost.
pub const HE_CODES_LEFT_TO_RIGHT: [u32; 3] = [1, 0, 2];

/// A real interval with explicit endpoint openness and the endpoint text used
/// when rendering it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    lo_text: String,
    hi_text: String,
}

impl Interval {
    fn new(lo: (f64, &str), hi: (f64, &str), lo_closed: bool, hi_closed: bool) -> Self {
        Interval {
            lo: lo.0,
            hi: hi.0,
            lo_closed,
            hi_closed,
            lo_text: lo.1.to_string(),
            hi_text: hi.1.to_string(),
        }
    }

    fn numeric(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Interval::new((lo, &fmt_endpoint(lo)), (hi, &fmt_endpoint(hi)), lo_closed, hi_closed)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn midpoint(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo_text,
            self.hi_text,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

fn fmt_endpoint(x: f64) -> String {
    let s = format!("{:.2}", (x * 100.0).round() / 100.0);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Discretization of cross-track error (metres) and heading error (degrees).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretizationConfig {
    pub max_cte: u32,
    /// Bin `i` is the interval for `cte` index `i`.
    pub cte_bins: Vec<Interval>,
    /// Indexed by heading code.
    pub he_bins: [Interval; 3],
}

impl DiscretizationConfig {
    /// `m + 1` cte bins over [-8, 8]. For `m = 2` the bin edges are ±2.7;
    /// otherwise bins have width 16/(m+1). Bins left of the centre bin are
    /// closed on the left, bins right of it closed on the right, and the
    /// centre bin is closed; the centre bin is the lower middle one.
    pub fn new(max_cte: u32) -> Self {
        assert!(max_cte >= 1, "at least two cte bins are needed");
        let he_bins = [
            Interval::new((-11.67, "-11.67"), (11.66, "11.66"), true, true),
            Interval::new((-35.0, "-35"), (-11.67, "-11.67"), true, false),
            Interval::new((11.66, "11.66"), (35.0, "35.0"), false, true),
        ];
        let cte_bins = if max_cte == 2 {
            vec![
                Interval::new((-8.0, "-8"), (-2.7, "-2.7"), true, false),
                Interval::new((-2.7, "-2.7"), (2.7, "2.7"), true, true),
                Interval::new((2.7, "2.7"), (8.0, "8"), true, false),
            ]
        } else {
            let n = f64::from(max_cte + 1);
            let center = max_cte / 2;
            (0..=max_cte)
                .map(|i| {
                    let lo = -8.0 + 16.0 * f64::from(i) / n;
                    let hi = -8.0 + 16.0 * f64::from(i + 1) / n;
                    Interval::numeric(lo, hi, i <= center, i >= center)
                })
                .collect()
        };
        DiscretizationConfig {
            max_cte,
            cte_bins,
            he_bins,
        }
    }

    pub fn center(&self) -> u32 {
        self.max_cte / 2
    }

    pub fn num_states(&self) -> usize {
        3 * (self.max_cte as usize + 1)
    }

    /// All system states, cte-major.
    pub fn states(&self) -> impl Iterator<Item = SystemState> {
        let m = self.max_cte;
        (0..=m).flat_map(|cte| (0..3).map(move |he| SystemState { cte, he }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SystemState {
    pub cte: u32,
    pub he: u32,
}

impl SystemState {
    pub fn act(self) -> Action {
        Action::indexed("act", [self.cte, self.he])
    }

    pub fn est(self) -> Action {
        Action::indexed("est", [self.cte, self.he])
    }

    /// The state named by an `act[c][h]` or `est[c][h]` label.
    pub fn of_action(a: &Action) -> Option<SystemState> {
        match a.indices() {
            &[cte, he] if he < 3 => Some(SystemState { cte, he }),
            _ => None,
        }
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}][{}]", self.cte, self.he)
    }
}

pub fn signed_heading(code: u32) -> i64 {
    match code {
        1 => -1,
        2 => 1,
        _ => 0,
    }
}

pub fn heading_code(signed: i64) -> u32 {
    match signed {
        -1 => 1,
        1 => 2,
        _ => 0,
    }
}

/// Heading change caused by a command.
pub fn command_delta(cmd: u32) -> i64 {
    match cmd {
        1 => -1,
        2 => 1,
        _ => 0,
    }
}

/// Controller law: steer so that the estimated deviation (cte offset from
/// the centre bin plus signed heading) returns to zero.
pub fn command_for(cfg: &DiscretizationConfig, est: SystemState) -> u32 {
    let dev = i64::from(est.cte) - i64::from(cfg.center()) + signed_heading(est.he);
    match dev.signum() {
        0 => 0,
        1 => 1,
        _ => 2,
    }
}

/// Outcome of applying a command to an actual state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    Next(SystemState),
    Overturn,
    OffTaxiway,
}

pub fn update(cfg: &DiscretizationConfig, s: SystemState, cmd: u32) -> Update {
    let nh = signed_heading(s.he) + command_delta(cmd);
    if nh.abs() > 1 {
        return Update::Overturn;
    }
    let nc = i64::from(s.cte) + nh;
    if nc < 0 || nc > i64::from(cfg.max_cte) {
        return Update::OffTaxiway;
    }
    Update::Next(SystemState {
        cte: nc as u32,
        he: heading_code(nh),
    })
}

#[derive(Debug, Error, PartialEq)]
pub enum DiscretizeError {
    #[error("cte {0} m is outside every bin")]
    CteOutOfRange(f64),
    #[error("he {0} deg is outside every bin")]
    HeOutOfRange(f64),
}

/// First bin (left to right) containing each coordinate.
pub fn discretize(cte_m: f64, he_deg: f64, cfg: &DiscretizationConfig) -> Result<SystemState, DiscretizeError> {
    let cte = cfg
        .cte_bins
        .iter()
        .position(|b| b.contains(cte_m))
        .ok_or(DiscretizeError::CteOutOfRange(cte_m))? as u32;
    let he = HE_CODES_LEFT_TO_RIGHT
        .into_iter()
        .find(|&c| cfg.he_bins[c as usize].contains(he_deg))
        .ok_or(DiscretizeError::HeOutOfRange(he_deg))?;
    Ok(SystemState { cte, he })
}

fn turn() -> Action {
    Action::new("turn")
}

fn cmd(k: u32) -> Action {
    Action::indexed("cmd", [k])
}

pub fn overturn() -> Action {
    Action::new("overturn")
}

pub fn offtaxiway() -> Action {
    Action::new("offtaxiway")
}

/// `turn`, then any estimate, then the command chosen for it.
pub fn gen_controller(cfg: &DiscretizationConfig) -> Lts {
    let mut b = LtsBuilder::new();
    let c0 = b.add_state();
    let c1 = b.add_state();
    b.set_initial(c0);
    b.add(c0, &turn(), c1);
    for e in cfg.states() {
        let dec = b.add_state();
        b.add(c1, &e.est(), dec);
        b.add(dec, &cmd(command_for(cfg, e)), c0);
    }
    b.build().expect("controller is well formed")
}

/// Emits the initial actual, then repeatedly synchronizes on `turn`, reads a
/// command and emits the updated actual, or errs when the update leaves the
/// taxiway or over-rotates.
pub fn gen_dynamics(cfg: &DiscretizationConfig) -> Lts {
    let mut b = LtsBuilder::new();
    for s in cfg.states() {
        b.declare(s.act());
    }
    let init = b.add_state();
    b.set_initial(init);
    let n = cfg.num_states() as StateId;
    let idx = |s: SystemState| s.cte * 3 + s.he;
    // D[s] = base + idx, D1[s] = base + n + idx, U[s][k] = base + 2n + 3 idx + k
    let base = b.num_states();
    for _ in 0..5 * n {
        b.add_state();
    }
    let d = |s: SystemState| base + idx(s);
    let d1 = |s: SystemState| base + n + idx(s);
    let u = |s: SystemState, k: u32| base + 2 * n + 3 * idx(s) + k;
    let start = SystemState {
        cte: cfg.center(),
        he: 0,
    };
    b.add(init, &start.act(), d(start));
    for s in cfg.states() {
        b.add(d(s), &turn(), d1(s));
        for k in 0..3 {
            b.add(d1(s), &cmd(k), u(s, k));
            match update(cfg, s, k) {
                Update::Next(t) => b.add(u(s, k), &t.act(), d(t)),
                Update::Overturn => {
                    let e = b.err();
                    b.add(u(s, k), &overturn(), e)
                }
                Update::OffTaxiway => {
                    let e = b.err();
                    b.add(u(s, k), &offtaxiway(), e)
                }
            }
        }
    }
    b.build().expect("dynamics is well formed").trim()
}

/// `act[s]` followed by `est[s]` for every `s`.
pub fn perfect_perception(cfg: &DiscretizationConfig) -> Lts {
    perception(cfg, |s| vec![s])
}

/// `act[s]` followed by any estimate.
pub fn worst_perception(cfg: &DiscretizationConfig) -> Lts {
    let all: Vec<SystemState> = cfg.states().collect();
    perception(cfg, move |_| all.clone())
}

/// Perception abstraction with a per-actual set of possible estimates.
pub fn perception(cfg: &DiscretizationConfig, estimates: impl Fn(SystemState) -> Vec<SystemState>) -> Lts {
    let mut b = LtsBuilder::new();
    let p0 = b.add_state();
    b.set_initial(p0);
    for s in cfg.states() {
        let wait = b.add_state();
        b.add(p0, &s.act(), wait);
        for e in estimates(s) {
            b.add(wait, &e.est(), p0);
        }
    }
    b.build().expect("perception is well formed")
}

/// `Controller ∥ Dynamics`.
pub fn m1(cfg: &DiscretizationConfig) -> Lts {
    compose(&gen_controller(cfg), &gen_dynamics(cfg))
}

pub fn est_alphabet(cfg: &DiscretizationConfig) -> InterfaceAlphabet {
    InterfaceAlphabet::new().with(cfg.states().map(SystemState::est), Tag::Estimate)
}

pub fn est_act_alphabet(cfg: &DiscretizationConfig) -> InterfaceAlphabet {
    est_alphabet(cfg).with(cfg.states().map(SystemState::act), Tag::Actual)
}

/// FSP source defining `Controller`, `Dynamics`, `Perfect`, `Worst` and the
/// composite `M1`; elaborates to the same models as the generators above.
pub fn fsp_source(cfg: &DiscretizationConfig) -> String {
    let m = cfg.max_cte;
    let c = cfg.center();
    let signed = |v: &str| format!("(({v} == 2) - ({v} == 1))");
    let dev = format!("(e - Center + {})", signed("h"));
    let nh = format!("({} + (k == 2) - (k == 1))", signed("h"));
    let code = format!("({nh} == 0 ? 0 : ({nh} < 0 ? 1 : 2))");
    format!(
        "// TaxiNet closed loop, MaxCTE = {m}
const MaxCTE = {m}
const Center = {c}
range CTE = 0..MaxCTE
range HE = 0..2
range CMD = 0..2

// heading codes: 0 straight, 1 left, 2 right
Controller = (turn -> Read),
Read = (est[e:CTE][h:HE] -> Decide[e][h]),
Decide[e:CTE][h:HE] = (cmd[{dev} == 0 ? 0 : ({dev} > 0 ? 1 : 2)] -> Controller).

Dynamics = (act[Center][0] -> D[Center][0]),
D[c:CTE][h:HE] = (turn -> Steer[c][h]),
Steer[c:CTE][h:HE] = (cmd[k:CMD] -> Update[c][h][k]),
Update[c:CTE][h:HE][k:CMD] =
    ( when ({nh} < -1 || {nh} > 1) overturn -> ERROR
    | when ({nh} >= -1 && {nh} <= 1 && (c + {nh} < 0 || c + {nh} > MaxCTE)) offtaxiway -> ERROR
    | when ({nh} >= -1 && {nh} <= 1 && c + {nh} >= 0 && c + {nh} <= MaxCTE)
        act[c + {nh}][{code}] -> D[c + {nh}][{code}]
    ) +{{act[CTE][HE]}}.

Perfect = (act[c:CTE][h:HE] -> Echo[c][h]),
Echo[c:CTE][h:HE] = (est[c][h] -> Perfect).

Worst = (act[c:CTE][h:HE] -> Any[c][h]),
Any[c:CTE][h:HE] = (est[CTE][HE] -> Worst).

||M1 = (Controller || Dynamics).
"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsp;
    use crate::lts::is_isomorphic;

    #[test]
    fn discretization_examples() {
        let cfg = DiscretizationConfig::new(2);
        assert_eq!(discretize(0.0, 0.0, &cfg).unwrap(), SystemState { cte: 1, he: 0 });
        assert_eq!(discretize(5.0, 20.0, &cfg).unwrap(), SystemState { cte: 2, he: 2 });
        assert_eq!(discretize(-5.0, -20.0, &cfg).unwrap(), SystemState { cte: 0, he: 1 });
        assert!(matches!(
            discretize(9.0, 0.0, &cfg),
            Err(DiscretizeError::CteOutOfRange(_))
        ));
        assert!(matches!(
            discretize(0.0, -40.0, &cfg),
            Err(DiscretizeError::HeOutOfRange(_))
        ));
    }

    #[test]
    fn m2_bin_text() {
        let cfg = DiscretizationConfig::new(2);
        let bins: Vec<String> = cfg.cte_bins.iter().map(|b| b.to_string()).collect();
        assert_eq!(bins, ["[-8,-2.7)", "[-2.7,2.7]", "[2.7,8)"]);
        assert_eq!(cfg.he_bins[1].to_string(), "[-35,-11.67)");
        assert_eq!(cfg.he_bins[0].to_string(), "[-11.67,11.66]");
        assert_eq!(cfg.he_bins[2].to_string(), "(11.66,35.0]");
    }

    #[test]
    fn uniform_bins_for_other_m() {
        let cfg = DiscretizationConfig::new(4);
        let bins: Vec<String> = cfg.cte_bins.iter().map(|b| b.to_string()).collect();
        assert_eq!(bins, ["[-8,-4.8)", "[-4.8,-1.6)", "[-1.6,1.6]", "(1.6,4.8]", "(4.8,8]"]);
        let odd = DiscretizationConfig::new(3);
        assert_eq!(odd.center(), 1);
        assert_eq!(odd.cte_bins[1].to_string(), "[-4,0]");
    }

    #[test]
    fn controller_alphabet_and_openness() {
        let cfg = DiscretizationConfig::new(2);
        let c = gen_controller(&cfg);
        let est = c.alphabet().iter().filter(|a| a.base() == "est").count();
        let cmd = c.alphabet().iter().filter(|a| a.base() == "cmd").count();
        assert_eq!((est, cmd), (9, 3));
        let reading: Vec<_> = c
            .states()
            .filter(|&s| c.successors(s).iter().any(|&(l, _)| c.label_name(l).starts_with("est")))
            .collect();
        assert_eq!(reading.len(), 1);
        assert_eq!(c.successors(reading[0]).len(), 9);
    }

    #[test]
    fn dynamics_starts_centered() {
        let cfg = DiscretizationConfig::new(2);
        let d = gen_dynamics(&cfg);
        let init = d.successors(d.initial());
        assert_eq!(init.len(), 1);
        assert_eq!(d.label_name(init[0].0), "act[1][0]");
    }

    #[test]
    fn m1_size_for_m2() {
        let m = m1(&DiscretizationConfig::new(2));
        assert_eq!(m.num_non_err_states(), 99);
        assert_eq!(m.num_transitions(), 155);
    }

    #[test]
    fn perception_pairs() {
        let cfg = DiscretizationConfig::new(2);
        let p = perfect_perception(&cfg);
        let w = worst_perception(&cfg);
        let pairs = |l: &Lts| {
            l.transitions()
                .filter(|&(_, l2, _)| l.label_name(l2).starts_with("est"))
                .count()
        };
        assert_eq!(pairs(&p), 9);
        assert_eq!(pairs(&w), 81);
    }

    #[test]
    fn fsp_source_matches_generators() {
        for m in [1, 2, 3, 4] {
            let cfg = DiscretizationConfig::new(m);
            let all = fsp::parse(&fsp_source(&cfg)).unwrap();
            let get = |n: &str| all.iter().find(|(k, _)| k == n).unwrap().1.clone();
            assert!(
                is_isomorphic(&get("Controller"), &gen_controller(&cfg)),
                "controller m={m}"
            );
            assert!(is_isomorphic(&get("Dynamics"), &gen_dynamics(&cfg)), "dynamics m={m}");
            assert!(is_isomorphic(&get("Perfect"), &perfect_perception(&cfg)));
            assert!(is_isomorphic(&get("Worst"), &worst_perception(&cfg)));
            assert!(is_isomorphic(&get("M1"), &m1(&cfg)));
        }
    }
}
