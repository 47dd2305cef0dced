use std::fmt;
use std::ops::Add;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Parity {
    #[default]
    Even,
    Odd,
}

impl Parity {
    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn from_odd(odd: bool) -> Parity {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    /// Koszul sign `(-1)^(self * other)`.
    pub fn koszul(self, other: Parity) -> i32 {
        if self.is_odd() && other.is_odd() {
            -1
        } else {
            1
        }
    }
}

impl Add for Parity {
    type Output = Parity;
    fn add(self, rhs: Parity) -> Parity {
        Parity::from_odd(self.is_odd() != rhs.is_odd())
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Parity, ghost number and antifield number of a homogeneous element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Grading {
    pub parity: Parity,
    pub ghost: i32,
    pub antifield: u32,
}

impl Grading {
    pub const ZERO: Grading = Grading { parity: Parity::Even, ghost: 0, antifield: 0 };

    pub fn new(parity: Parity, ghost: i32, antifield: u32) -> Self {
        Grading { parity, ghost, antifield }
    }

    /// Grading of `self^k`; negative powers are only meaningful for degree-zero gradings.
    pub fn pow(self, k: i32) -> Grading {
        Grading {
            parity: Parity::from_odd(self.parity.is_odd() && k.rem_euclid(2) == 1),
            ghost: self.ghost * k,
            antifield: (self.antifield as i64 * k as i64).max(0) as u32,
        }
    }

    /// Grading of the BV antifield of a generator with this grading.
    pub fn antifield_of(self) -> Grading {
        Grading {
            parity: self.parity.flip(),
            ghost: -self.ghost - 1,
            antifield: if self.ghost > 0 { self.ghost as u32 + 1 } else { 1 },
        }
    }

    /// Shift applied by an odd bracket of degree one: ghost number +1, parity flipped.
    pub fn bracket_shift(self) -> Grading {
        Grading { parity: self.parity.flip(), ghost: self.ghost + 1, antifield: self.antifield }
    }

    pub fn is_even(self) -> bool {
        !self.parity.is_odd()
    }
}

impl Add for Grading {
    type Output = Grading;
    fn add(self, rhs: Grading) -> Grading {
        Grading {
            parity: self.parity + rhs.parity,
            ghost: self.ghost + rhs.ghost,
            antifield: self.antifield + rhs.antifield,
        }
    }
}

impl fmt::Display for Grading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, gh={}, afn={})", self.parity, self.ghost, self.antifield)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antifield_grading_convention() {
        let field = Grading::new(Parity::Even, 0, 0);
        assert_eq!(field.antifield_of(), Grading::new(Parity::Odd, -1, 1));
        let ghost = Grading::new(Parity::Odd, 1, 0);
        assert_eq!(ghost.antifield_of(), Grading::new(Parity::Even, -2, 2));
    }

    #[test]
    fn sum_is_componentwise() {
        let c = Grading::new(Parity::Odd, 1, 0);
        assert_eq!(c + c, Grading::new(Parity::Even, 2, 0));
        assert_eq!(c.pow(3), Grading::new(Parity::Odd, 3, 0));
    }
}
