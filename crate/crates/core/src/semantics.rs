//! Arithmetic shared by the concrete interpreter, the term evaluator and the
//! bit-blaster. Values are carried as sign-correct `i64` within the range of
//! their scalar type.

use crate::frontend::ast::{BinOp, ScalarType, UnOp};

pub fn truthy(v: i64) -> bool {
    v != 0
}

pub fn cast(to: ScalarType, v: i64) -> i64 {
    to.wrap(v as i128)
}

/// Evaluate a unary operator. `ty` is the operand type; `!` produces a `u8`.
pub fn unop(op: UnOp, ty: ScalarType, a: i64) -> i64 {
    match op {
        UnOp::Neg => ty.wrap(-(a as i128)),
        UnOp::Not => (a == 0) as i64,
        UnOp::BitNot => ty.from_raw(!ty.to_raw(a)),
    }
}

/// Evaluate a binary operator on operands of type `ty`.
///
/// Division by zero yields 0, remainder by zero yields the dividend, and a
/// shift by at least the bit width shifts every bit out.
pub fn binop(op: BinOp, ty: ScalarType, a: i64, b: i64) -> i64 {
    let (x, y) = (a as i128, b as i128);
    match op {
        BinOp::Add => ty.wrap(x + y),
        BinOp::Sub => ty.wrap(x - y),
        BinOp::Mul => ty.wrap(x * y),
        BinOp::Div => {
            if y == 0 {
                0
            } else {
                ty.wrap(x / y)
            }
        }
        BinOp::Rem => {
            if y == 0 {
                a
            } else {
                ty.wrap(x % y)
            }
        }
        BinOp::And => ty.from_raw(ty.to_raw(a) & ty.to_raw(b)),
        BinOp::Or => ty.from_raw(ty.to_raw(a) | ty.to_raw(b)),
        BinOp::Xor => ty.from_raw(ty.to_raw(a) ^ ty.to_raw(b)),
        BinOp::Shl => {
            let amt = ty.to_raw(b);
            if amt >= ty.bits() as u64 {
                0
            } else {
                ty.from_raw(ty.to_raw(a) << amt)
            }
        }
        BinOp::Shr => {
            let amt = ty.to_raw(b);
            if ty.signed() {
                if amt >= ty.bits() as u64 {
                    if a < 0 {
                        -1
                    } else {
                        0
                    }
                } else {
                    a >> amt
                }
            } else if amt >= ty.bits() as u64 {
                0
            } else {
                ty.from_raw(ty.to_raw(a) >> amt)
            }
        }
        BinOp::Eq => (a == b) as i64,
        BinOp::Ne => (a != b) as i64,
        BinOp::Lt => (a < b) as i64,
        BinOp::Le => (a <= b) as i64,
        BinOp::Gt => (a > b) as i64,
        BinOp::Ge => (a >= b) as i64,
        BinOp::LogAnd => (a != 0 && b != 0) as i64,
        BinOp::LogOr => (a != 0 || b != 0) as i64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraparound() {
        assert_eq!(binop(BinOp::Add, ScalarType::U8, 255, 1), 0);
        assert_eq!(binop(BinOp::Add, ScalarType::I8, 127, 1), -128);
        assert_eq!(binop(BinOp::Mul, ScalarType::U32, 0xffff_ffff, 2), 0xffff_fffe);
        assert_eq!(unop(UnOp::Neg, ScalarType::I32, i32::MIN as i64), i32::MIN as i64);
        assert_eq!(binop(BinOp::Div, ScalarType::I32, i32::MIN as i64, -1), i32::MIN as i64);
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(binop(BinOp::Div, ScalarType::U32, 7, 0), 0);
        assert_eq!(binop(BinOp::Rem, ScalarType::I16, -7, 0), -7);
        assert_eq!(binop(BinOp::Rem, ScalarType::I16, -7, 2), -1);
    }

    #[test]
    fn xor_is_bitwise_at_width() {
        assert_eq!(binop(BinOp::Xor, ScalarType::I8, -1, 1), -2);
        assert_eq!(binop(BinOp::Xor, ScalarType::U8, 0, 0xff), 0xff);
        assert_eq!(binop(BinOp::Xor, ScalarType::U32, 4, 1), 5);
    }

    #[test]
    fn shifts() {
        assert_eq!(binop(BinOp::Shl, ScalarType::U8, 1, 8), 0);
        assert_eq!(binop(BinOp::Shr, ScalarType::I8, -128, 9), -1);
        assert_eq!(binop(BinOp::Shr, ScalarType::I8, -128, 1), -64);
        assert_eq!(binop(BinOp::Shr, ScalarType::U8, 0x80, 7), 1);
    }
}
