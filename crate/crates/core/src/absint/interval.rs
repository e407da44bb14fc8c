//! Non-wrapping integer intervals. Any operation that may leave the range of
//! its type yields the full range of that type.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{BinOp, ScalarType, UnOp};
use crate::semantics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Three-valued truth of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Interval {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn constant(v: i64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn top(t: ScalarType) -> Interval {
        Interval { lo: t.min(), hi: t.max() }
    }

    pub const ZERO: Interval = Interval { lo: 0, hi: 0 };
    pub const BOOL: Interval = Interval { lo: 0, hi: 1 };

    pub fn singleton(self) -> Option<i64> {
        (self.lo == self.hi).then_some(self.lo)
    }

    pub fn contains(self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn includes(self, o: Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn join(self, o: Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn meet(self, o: Interval) -> Option<Interval> {
        let (lo, hi) = (self.lo.max(o.lo), self.hi.min(o.hi));
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn truth(self) -> Truth {
        if self == Interval::ZERO {
            Truth::False
        } else if self.contains(0) {
            Truth::Unknown
        } else {
            Truth::True
        }
    }

    fn from_truth(t: Truth) -> Interval {
        match t {
            Truth::True => Interval::constant(1),
            Truth::False => Interval::ZERO,
            Truth::Unknown => Interval::BOOL,
        }
    }

    /// `[lo, hi]` if it fits in `t`, else the full range.
    fn fit(lo: i128, hi: i128, t: ScalarType) -> Interval {
        if lo >= t.min() as i128 && hi <= t.max() as i128 {
            Interval { lo: lo as i64, hi: hi as i64 }
        } else {
            Interval::top(t)
        }
    }

    pub fn clamp(self, t: ScalarType) -> Interval {
        Interval { lo: self.lo.max(t.min()), hi: self.hi.min(t.max()) }
    }

    /// Standard widening with thresholds; `thresholds` is sorted.
    pub fn widen(self, new: Interval, t: ScalarType, thresholds: &[i64]) -> Interval {
        let lo = if new.lo < self.lo {
            thresholds.iter().rev().copied().find(|&c| c <= new.lo && c >= t.min()).unwrap_or(t.min())
        } else {
            self.lo
        };
        let hi = if new.hi > self.hi {
            thresholds.iter().copied().find(|&c| c >= new.hi && c <= t.max()).unwrap_or(t.max())
        } else {
            self.hi
        };
        Interval { lo, hi }
    }
}

pub fn cast(to: ScalarType, a: Interval) -> Interval {
    if let Some(v) = a.singleton() {
        return Interval::constant(semantics::cast(to, v));
    }
    Interval::fit(a.lo as i128, a.hi as i128, to)
}

pub fn unop(op: UnOp, t: ScalarType, a: Interval) -> Interval {
    if let Some(v) = a.singleton() {
        return Interval::constant(semantics::unop(op, t, v));
    }
    match op {
        UnOp::Neg => Interval::fit(-(a.hi as i128), -(a.lo as i128), t),
        UnOp::Not => Interval::from_truth(match a.truth() {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }),
        UnOp::BitNot => {
            if t.signed() {
                Interval::new(-a.hi - 1, -a.lo - 1)
            } else {
                Interval::new(t.max() - a.hi, t.max() - a.lo)
            }
        }
    }
}

/// Smallest `2^k - 1` that is at least `v` (for `v >= 0`).
fn ones_above(v: i64) -> i64 {
    let mut m: i64 = 0;
    while m < v {
        m = m * 2 + 1;
    }
    m
}

/// Evaluate a binary operator whose operands have type `t`.
pub fn binop(op: BinOp, t: ScalarType, a: Interval, b: Interval) -> Interval {
    if let (Some(x), Some(y)) = (a.singleton(), b.singleton()) {
        return Interval::constant(semantics::binop(op, t, x, y));
    }
    let (alo, ahi, blo, bhi) = (a.lo as i128, a.hi as i128, b.lo as i128, b.hi as i128);
    let nonneg = a.lo >= 0 && b.lo >= 0;
    match op {
        BinOp::Add => Interval::fit(alo + blo, ahi + bhi, t),
        BinOp::Sub => Interval::fit(alo - bhi, ahi - blo, t),
        BinOp::Mul => {
            let c = [alo * blo, alo * bhi, ahi * blo, ahi * bhi];
            Interval::fit(*c.iter().min().unwrap(), *c.iter().max().unwrap(), t)
        }
        BinOp::Div => {
            let mag = a.lo.unsigned_abs().max(a.hi.unsigned_abs()) as i128;
            if b.contains(0) {
                // the quotient is 0 or has magnitude at most |a|
                let r = if a.lo >= 0 && b.lo >= 0 { (0, ahi) } else { (-mag, mag) };
                return Interval::fit(r.0, r.1, t);
            }
            let mut c = vec![];
            for y in [blo, bhi, -1, 1] {
                if b.contains(y as i64) {
                    c.push(alo / y);
                    c.push(ahi / y);
                }
            }
            Interval::fit(*c.iter().min().unwrap(), *c.iter().max().unwrap(), t)
        }
        BinOp::Rem => {
            let bmax = b.lo.unsigned_abs().max(b.hi.unsigned_abs()) as i128;
            let r = if bmax == 0 {
                a
            } else if a.lo >= 0 {
                Interval::fit(0, ahi.min(bmax - 1), t)
            } else if a.hi <= 0 {
                Interval::fit(alo.max(-(bmax - 1)), 0, t)
            } else {
                Interval::fit(alo.max(-(bmax - 1)), ahi.min(bmax - 1), t)
            };
            if b.contains(0) {
                r.join(a)
            } else {
                r
            }
        }
        BinOp::And => {
            if nonneg {
                Interval::new(0, a.hi.min(b.hi))
            } else if a.lo >= 0 {
                Interval::new(0, a.hi)
            } else if b.lo >= 0 {
                Interval::new(0, b.hi)
            } else {
                Interval::top(t)
            }
        }
        BinOp::Or => {
            if nonneg {
                Interval::new(a.lo.max(b.lo), ones_above(a.hi.max(b.hi)))
            } else {
                Interval::top(t)
            }
        }
        BinOp::Xor => {
            if b == Interval::ZERO {
                a
            } else if a == Interval::ZERO {
                b
            } else if nonneg {
                Interval::new(0, ones_above(a.hi.max(b.hi)))
            } else {
                Interval::top(t)
            }
        }
        BinOp::Shl => {
            if a.lo >= 0 && b.lo >= 0 && b.hi < t.bits() as i64 {
                Interval::fit(alo << blo, ahi << bhi, t)
            } else {
                Interval::top(t)
            }
        }
        BinOp::Shr => {
            if a.lo >= 0 && b.lo >= 0 && b.hi < t.bits() as i64 {
                Interval::new(a.lo >> b.hi, a.hi >> b.lo)
            } else if a.lo >= 0 {
                Interval::new(0, a.hi)
            } else {
                Interval::new(a.lo.min(-1), a.hi.max(0))
            }
        }
        BinOp::Eq => Interval::from_truth(if a.meet(b).is_none() { Truth::False } else { Truth::Unknown }),
        BinOp::Ne => Interval::from_truth(if a.meet(b).is_none() { Truth::True } else { Truth::Unknown }),
        BinOp::Lt => Interval::from_truth(order(a.hi < b.lo, a.lo >= b.hi)),
        BinOp::Le => Interval::from_truth(order(a.hi <= b.lo, a.lo > b.hi)),
        BinOp::Gt => Interval::from_truth(order(a.lo > b.hi, a.hi <= b.lo)),
        BinOp::Ge => Interval::from_truth(order(a.lo >= b.hi, a.hi < b.lo)),
        BinOp::LogAnd => Interval::from_truth(match (a.truth(), b.truth()) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }),
        BinOp::LogOr => Interval::from_truth(match (a.truth(), b.truth()) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }),
    }
}

fn order(always: bool, never: bool) -> Truth {
    if always {
        Truth::True
    } else if never {
        Truth::False
    } else {
        Truth::Unknown
    }
}

/// Narrow `a` and `b` under the assumption `a op b` holds.
/// `None` when the comparison cannot hold.
pub fn refine_cmp(op: BinOp, a: Interval, b: Interval) -> Option<(Interval, Interval)> {
    match op {
        BinOp::Lt => {
            let na = Interval { lo: a.lo, hi: a.hi.min(b.hi.saturating_sub(1)) };
            let nb = Interval { lo: b.lo.max(a.lo.saturating_add(1)), hi: b.hi };
            (na.lo <= na.hi && nb.lo <= nb.hi).then_some((na, nb))
        }
        BinOp::Le => {
            let na = Interval { lo: a.lo, hi: a.hi.min(b.hi) };
            let nb = Interval { lo: b.lo.max(a.lo), hi: b.hi };
            (na.lo <= na.hi && nb.lo <= nb.hi).then_some((na, nb))
        }
        BinOp::Gt => refine_cmp(BinOp::Lt, b, a).map(|(y, x)| (x, y)),
        BinOp::Ge => refine_cmp(BinOp::Le, b, a).map(|(y, x)| (x, y)),
        BinOp::Eq => a.meet(b).map(|m| (m, m)),
        BinOp::Ne => {
            let trim = |x: Interval, y: Interval| -> Option<Interval> {
                match y.singleton() {
                    Some(v) if x.singleton() == Some(v) => None,
                    Some(v) if x.lo == v => Some(Interval { lo: v + 1, hi: x.hi }),
                    Some(v) if x.hi == v => Some(Interval { lo: x.lo, hi: v - 1 }),
                    _ => Some(x),
                }
            };
            Some((trim(a, b)?, trim(b, a)?))
        }
        _ => Some((a, b)),
    }
}
