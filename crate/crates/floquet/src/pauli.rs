//! Binary-symplectic Pauli operators and a stabilizer tableau for mixed states.
//!
//! A [`PauliString`] stores `i^k X^x Z^z`. Hermitian operators carry
//! `k ≡ #Y (mod 2)`, which `Display` turns back into the familiar
//! `±{I,X,Y,Z}^N` form.

use crate::error::{Error, Result};
use crate::gf2::{Bits, Span};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    pub x: Bits,
    pub z: Bits,
    /// Exponent of `i`, mod 4.
    pub phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            x: Bits::zeros(n),
            z: Bits::zeros(n),
            phase: 0,
        }
    }

    /// Hermitian Pauli with the same letter on each listed qubit.
    pub fn uniform(n: usize, p: Pauli, qubits: impl IntoIterator<Item = usize>) -> Self {
        let mut s = PauliString::identity(n);
        for q in qubits {
            let cur = s.get(q);
            let (a, b) = cur.bits();
            let (c, d) = p.bits();
            s.set(q, Pauli::from_bits(a ^ c, b ^ d));
        }
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x.get(q), self.z.get(q))
    }

    /// Overwrite qubit `q`, keeping the operator Hermitian with the same sign.
    pub fn set(&mut self, q: usize, p: Pauli) {
        let sign = self.sign();
        let (x, z) = p.bits();
        self.x.set(q, x);
        self.z.set(q, z);
        self.phase = ((self.y_count() + if sign { 2 } else { 0 }) % 4) as u8;
    }

    fn y_count(&self) -> u32 {
        self.x.and_count(&self.z)
    }

    /// Whether the Hermitian form carries a minus sign (only meaningful for
    /// Hermitian strings).
    pub fn sign(&self) -> bool {
        (self.phase as u32 + 4 - self.y_count() % 4) % 4 == 2
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase as u32 + 4 - self.y_count() % 4) % 2 == 0
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) % 4;
    }

    pub fn negated(&self) -> Self {
        let mut s = self.clone();
        s.negate();
        s
    }

    /// Same operator with a `+` sign.
    pub fn unsigned(&self) -> Self {
        let mut s = self.clone();
        s.phase = (self.y_count() % 4) as u8;
        s
    }

    pub fn weight(&self) -> usize {
        self.x.or(&self.z).count_ones() as usize
    }

    pub fn support(&self) -> Vec<usize> {
        self.x.or(&self.z).ones().collect()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Symplectic vector `(x | z)`.
    pub fn symplectic(&self) -> Bits {
        self.x.concat(&self.z)
    }

    pub fn from_symplectic(v: &Bits) -> Self {
        let n = v.len() / 2;
        let mut s = PauliString {
            x: v.slice(0, n),
            z: v.slice(n, n),
            phase: 0,
        };
        s.phase = (s.y_count() % 4) as u8;
        s
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        (self.x.and_count(&other.z) + self.z.and_count(&other.x)) % 2 == 0
    }

    pub fn try_commutes(&self, other: &PauliString) -> Result<bool> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::SizeMismatch(self.num_qubits(), other.num_qubits()));
        }
        Ok(self.commutes(other))
    }

    /// Group product `self · other`.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        let cross = self.z.and_count(&other.x);
        PauliString {
            x: self.x.xor(&other.x),
            z: self.z.xor(&other.z),
            phase: ((self.phase as u32 + other.phase as u32 + 2 * cross) % 4) as u8,
        }
    }

    pub fn try_mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::SizeMismatch(self.num_qubits(), other.num_qubits()));
        }
        Ok(self.mul(other))
    }

    pub fn mul_assign(&mut self, other: &PauliString) {
        let cross = self.z.and_count(&other.x);
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
        self.phase = ((self.phase as u32 + other.phase as u32 + 2 * cross) % 4) as u8;
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        PauliString {
            x: self.x.concat(&other.x),
            z: self.z.concat(&other.z),
            phase: (self.phase + other.phase) % 4,
        }
    }

    /// Place this operator on a register of `n` qubits starting at `offset`.
    pub fn embed(&self, n: usize, offset: usize) -> PauliString {
        let mut out = PauliString::identity(n);
        for q in self.x.ones() {
            out.x.set(offset + q, true);
        }
        for q in self.z.ones() {
            out.z.set(offset + q, true);
        }
        out.phase = self.phase;
        out
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = (self.phase as u32 + 4 - self.y_count() % 4) % 4;
        let prefix = ["+", "+i", "-", "-i"][k as usize];
        write!(f, "{prefix}")?;
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.get(q).letter())?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (k, body) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else {
            (0, s)
        };
        let mut p = PauliString::identity(body.len());
        for (q, c) in body.chars().enumerate() {
            let l = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(Error::InvalidArgument(format!("bad Pauli letter {c:?}"))),
            };
            let (x, z) = l.bits();
            p.x.set(q, x);
            p.z.set(q, z);
        }
        p.phase = ((p.y_count() + k) % 4) as u8;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomePolicy {
    Random,
    ForcePlus,
    ForceMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureResult {
    /// `+1` or `-1`.
    pub outcome: i8,
    pub deterministic: bool,
}

/// Stabilizer group of a (possibly mixed) state plus tracked logicals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizerTableau {
    n: usize,
    generators: Vec<PauliString>,
    logicals: Vec<(String, PauliString)>,
}

impl StabilizerTableau {
    /// Maximally mixed state: no generators.
    pub fn maximally_mixed(n: usize) -> Self {
        StabilizerTableau {
            n,
            generators: Vec::new(),
            logicals: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn logicals(&self) -> &[(String, PauliString)] {
        &self.logicals
    }

    pub fn logical(&self, label: &str) -> Option<&PauliString> {
        self.logicals.iter().find(|(l, _)| l == label).map(|(_, p)| p)
    }

    /// Start tracking an operator; it must commute with every generator.
    pub fn track(&mut self, label: impl Into<String>, op: PauliString) -> Result<()> {
        if op.num_qubits() != self.n {
            return Err(Error::SizeMismatch(self.n, op.num_qubits()));
        }
        if self.generators.iter().any(|g| !g.commutes(&op)) {
            return Err(Error::InvalidArgument(
                "tracked operator must commute with the stabilizer group".into(),
            ));
        }
        self.logicals.push((label.into(), op));
        Ok(())
    }

    pub fn untrack(&mut self, label: &str) -> Option<PauliString> {
        let i = self.logicals.iter().position(|(l, _)| l == label)?;
        Some(self.logicals.remove(i).1)
    }

    fn span(&self) -> Span {
        let mut s = Span::new(2 * self.n, self.generators.len().max(1));
        for g in &self.generators {
            s.insert(&g.symplectic());
        }
        s
    }

    /// Signed group element equal to `op` up to sign, if `op` is in the group
    /// up to sign.
    pub fn group_element(&self, op: &PauliString) -> Option<PauliString> {
        let combo = self.span().express(&op.symplectic())?;
        let mut acc = PauliString::identity(self.n);
        for i in combo.ones() {
            acc.mul_assign(&self.generators[i]);
        }
        Some(acc)
    }

    /// Whether `op` belongs to the group, ignoring signs.
    pub fn contains_unsigned(&self, op: &PauliString) -> bool {
        self.span().contains(&op.symplectic())
    }

    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        op: &PauliString,
        policy: OutcomePolicy,
        rng: &mut R,
    ) -> Result<MeasureResult> {
        if op.num_qubits() != self.n {
            return Err(Error::SizeMismatch(self.n, op.num_qubits()));
        }
        if !op.is_hermitian() {
            return Err(Error::InvalidArgument("measured operator must be Hermitian".into()));
        }
        let draw = |rng: &mut R| -> i8 {
            match policy {
                OutcomePolicy::Random => {
                    if rng.gen::<bool>() {
                        1
                    } else {
                        -1
                    }
                }
                OutcomePolicy::ForcePlus => 1,
                OutcomePolicy::ForceMinus => -1,
            }
        };
        let anti: Vec<usize> = (0..self.generators.len())
            .filter(|&i| !self.generators[i].commutes(op))
            .collect();
        if let Some(&p) = anti.first() {
            let pivot = self.generators[p].clone();
            for &j in &anti[1..] {
                self.generators[j].mul_assign(&pivot);
            }
            for (_, l) in self.logicals.iter_mut() {
                if !l.commutes(op) {
                    l.mul_assign(&pivot);
                }
            }
            let outcome = draw(rng);
            let mut new = op.unsigned();
            if outcome < 0 {
                new.negate();
            }
            self.generators[p] = new;
            return Ok(MeasureResult {
                outcome,
                deterministic: false,
            });
        }
        if let Some(g) = self.group_element(op) {
            let outcome = if g.sign() == op.sign() { 1 } else { -1 };
            let forced = match policy {
                OutcomePolicy::Random => None,
                OutcomePolicy::ForcePlus => Some(1),
                OutcomePolicy::ForceMinus => Some(-1),
            };
            if let Some(f) = forced {
                if f != outcome {
                    return Err(Error::ForcedOutcomeConflict { forced: f, actual: outcome });
                }
            }
            return Ok(MeasureResult {
                outcome,
                deterministic: true,
            });
        }
        if let Some((label, _)) = self.logicals.iter().find(|(_, l)| !l.commutes(op)) {
            return Err(Error::LogicalMeasured(label.clone()));
        }
        let outcome = draw(rng);
        let mut new = op.unsigned();
        if outcome < 0 {
            new.negate();
        }
        self.generators.push(new);
        Ok(MeasureResult {
            outcome,
            deterministic: false,
        })
    }

    /// Apply a Pauli frame: conjugating by `e` flips the sign of every
    /// generator and tracked logical that anticommutes with it.
    pub fn apply_pauli(&mut self, e: &PauliString) {
        for g in self.generators.iter_mut() {
            if !g.commutes(e) {
                g.negate();
            }
        }
        for (_, l) in self.logicals.iter_mut() {
            if !l.commutes(e) {
                l.negate();
            }
        }
    }

    /// Number of encoded qubits, `n - rank`, when every generator is Hermitian
    /// and the group contains no `-I`.
    pub fn num_logical_qubits(&self) -> usize {
        self.n - self.generators.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn basic_algebra() {
        let x = ps("X");
        let z = ps("Z");
        assert_eq!(x.mul(&z).to_string(), "-iY");
        assert_eq!(z.mul(&x).to_string(), "+iY");
        assert!(!x.commutes(&z));
        let a = ps("-XYZI");
        assert_eq!(a.mul(&PauliString::identity(4)), a);
        assert!(a.mul(&a).is_identity_up_to_phase());
        assert_eq!(a.mul(&a).phase, 0);
        assert_eq!(a.to_string(), "-XYZI");
        assert_eq!(a.weight(), 3);
    }

    #[test]
    fn measurement_cases() {
        let mut rng = rand::thread_rng();
        let mut t = StabilizerTableau::maximally_mixed(2);
        let r = t.measure(&ps("ZZ"), OutcomePolicy::ForcePlus, &mut rng).unwrap();
        assert!(!r.deterministic);
        let r = t.measure(&ps("ZZ"), OutcomePolicy::Random, &mut rng).unwrap();
        assert_eq!((r.outcome, r.deterministic), (1, true));
        let r = t.measure(&ps("-ZZ"), OutcomePolicy::Random, &mut rng).unwrap();
        assert_eq!(r.outcome, -1);
        assert!(t.measure(&ps("ZZ"), OutcomePolicy::ForceMinus, &mut rng).is_err());
        t.track("xx", ps("XX")).unwrap();
        t.measure(&ps("XI"), OutcomePolicy::ForcePlus, &mut rng).unwrap();
        assert!(t.contains_unsigned(&ps("XI")));
        assert!(!t.contains_unsigned(&ps("ZZ")));
        assert!(t.logical("xx").unwrap().commutes(&ps("XI")));
        let mut u = StabilizerTableau::maximally_mixed(1);
        u.track("z", ps("Z")).unwrap();
        assert!(matches!(
            u.measure(&ps("X"), OutcomePolicy::Random, &mut rng),
            Err(Error::LogicalMeasured(_))
        ));
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        (proptest::collection::vec(0u8..4, n), 0u8..4).prop_map(|(v, k)| {
            let mut p = PauliString::identity(v.len());
            for (q, &c) in v.iter().enumerate() {
                p.x.set(q, c & 1 == 1);
                p.z.set(q, c & 2 == 2);
            }
            p.phase = k;
            p
        })
    }

    proptest! {
        #[test]
        fn commutation_symmetric(a in arb_pauli(9), b in arb_pauli(9)) {
            prop_assert_eq!(a.commutes(&b), b.commutes(&a));
            let ab = a.mul(&b);
            let ba = b.mul(&a);
            let same = ab == ba;
            prop_assert_eq!(same, a.commutes(&b));
        }

        #[test]
        fn associative(a in arb_pauli(7), b in arb_pauli(7), c in arb_pauli(7)) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }

        #[test]
        fn display_roundtrip(a in arb_pauli(6)) {
            let s = a.to_string();
            prop_assert_eq!(s.parse::<PauliString>().unwrap(), a);
        }
    }
}
