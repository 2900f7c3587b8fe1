use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Qubit sector, fixed by the occupation of the left Majorana-pair fermion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParityBlock {
    /// `0_L`: ground state `|0_L, 0_R, N, n0⟩`.
    Zero,
    /// `1_L`: ground state `|1_L, 1_R, N, n0 − 1⟩`.
    One,
}

impl ParityBlock {
    pub const BOTH: [ParityBlock; 2] = [ParityBlock::Zero, ParityBlock::One];

    pub fn parity_l(self) -> u8 {
        match self {
            ParityBlock::Zero => 0,
            ParityBlock::One => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ParityBlock::Zero => "0L",
            ParityBlock::One => "1L",
        }
    }

    pub fn other(self) -> Self {
        match self {
            ParityBlock::Zero => ParityBlock::One,
            ParityBlock::One => ParityBlock::Zero,
        }
    }
}

impl fmt::Display for ParityBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockMode {
    Single(ParityBlock),
    Both,
}

impl BlockMode {
    pub fn blocks(self) -> Vec<ParityBlock> {
        match self {
            BlockMode::Single(b) => vec![b],
            BlockMode::Both => ParityBlock::BOTH.to_vec(),
        }
    }
}

/// Which island charge states are kept, as offsets from the reference charge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChargeMode {
    /// `N, N+1, N−1`: valid near an even gate charge.
    Three,
    /// `N, N+1, N−1, N+2`: gate charge offsets `δ ∈ [0, 1]`.
    Four,
    /// `N, N+1, N−1, N−2`: the mirror image of [`ChargeMode::Four`] for `δ ∈ [−1, 0)`.
    FourBelow,
    /// Only the island ground state; the basis of the effective dot model.
    GroundOnly,
}

impl ChargeMode {
    pub fn island_offsets(self) -> &'static [i8] {
        match self {
            ChargeMode::Three => &[0, 1, -1],
            ChargeMode::Four => &[0, 1, -1, 2],
            ChargeMode::FourBelow => &[0, 1, -1, -2],
            ChargeMode::GroundOnly => &[0],
        }
    }

    /// Four-charge window containing the four lowest charging energies for
    /// a gate-charge offset `delta = n_g − N_ref`.
    pub fn four_for_offset(delta: f64) -> Self {
        if delta >= 0.0 {
            ChargeMode::Four
        } else {
            ChargeMode::FourBelow
        }
    }
}

/// Labeled product state `|p_L, p_R, N + dN, n0 + n_cp⟩ ⊗ |n1, n2⟩`.
///
/// The reference charges are even, `N_ref = 2 n0_ref`; only offsets are stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub parity_l: u8,
    pub parity_r: u8,
    pub dn: i8,
    pub n_cp: i8,
    pub dot1: u8,
    pub dot2: u8,
}

impl BasisState {
    /// Island state of `block` with charge offset `dn`, dots empty.
    pub fn island(block: ParityBlock, dn: i8) -> Self {
        let parity_l = block.parity_l();
        let parity_r = (dn - parity_l as i8).rem_euclid(2) as u8;
        let n_cp = (dn - parity_l as i8 - parity_r as i8) / 2;
        Self {
            parity_l,
            parity_r,
            dn,
            n_cp,
            dot1: 0,
            dot2: 0,
        }
    }

    pub fn with_dots(mut self, dot1: u8, dot2: u8) -> Self {
        self.dot1 = dot1;
        self.dot2 = dot2;
        self
    }

    pub fn block(&self) -> ParityBlock {
        if self.parity_l == 0 {
            ParityBlock::Zero
        } else {
            ParityBlock::One
        }
    }

    /// Island charge equals twice the Cooper-pair count plus the
    /// quasiparticle occupations.
    pub fn is_charge_consistent(&self) -> bool {
        self.dn == 2 * self.n_cp + self.parity_l as i8 + self.parity_r as i8
    }

    /// Island charge offset plus both dot occupations.
    pub fn total_charge(&self) -> i32 {
        self.dn as i32 + self.dot1 as i32 + self.dot2 as i32
    }

    pub fn label(&self) -> String {
        format!(
            "|{}L,{}R,N{:+},n0{:+}>|{},{}>",
            self.parity_l, self.parity_r, self.dn, self.n_cp, self.dot1, self.dot2
        )
    }
}

pub const DOT_STATES: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Ordered basis: block-major (`0_L` first), then island state in the order
/// of [`ChargeMode::island_offsets`], then dot state `|0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩`.
///
/// Index `k` inside block `0_L` and index `k` inside block `1_L` share the
/// island charge offset and the dot occupations; this is the pairing used
/// for qubit coherences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    states: Vec<BasisState>,
    block_mode: BlockMode,
    charge_mode: ChargeMode,
}

impl BasisSet {
    pub fn new(block_mode: BlockMode, charge_mode: ChargeMode) -> Self {
        let mut states = Vec::new();
        for block in block_mode.blocks() {
            for &dn in charge_mode.island_offsets() {
                let island = BasisState::island(block, dn);
                for (n1, n2) in DOT_STATES {
                    states.push(island.with_dots(n1, n2));
                }
            }
        }
        Self {
            states,
            block_mode,
            charge_mode,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn block_mode(&self) -> BlockMode {
        self.block_mode
    }

    pub fn charge_mode(&self) -> ChargeMode {
        self.charge_mode
    }

    pub fn block_dim(&self) -> usize {
        4 * self.charge_mode.island_offsets().len()
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Index range occupied by `block`, if present.
    pub fn block_range(&self, block: ParityBlock) -> Option<Range<usize>> {
        let d = self.block_dim();
        match self.block_mode {
            BlockMode::Single(b) if b == block => Some(0..d),
            BlockMode::Single(_) => None,
            BlockMode::Both => match block {
                ParityBlock::Zero => Some(0..d),
                ParityBlock::One => Some(d..2 * d),
            },
        }
    }

    /// Index of the island ground state with both dots empty.
    pub fn ground_empty_index(&self, block: ParityBlock) -> Option<usize> {
        self.index_of(&BasisState::island(block, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn dimensions() {
        assert_eq!(
            BasisSet::new(BlockMode::Single(ParityBlock::Zero), ChargeMode::Three).dim(),
            12
        );
        assert_eq!(BasisSet::new(BlockMode::Both, ChargeMode::Three).dim(), 24);
        assert_eq!(
            BasisSet::new(BlockMode::Single(ParityBlock::Zero), ChargeMode::Four).dim(),
            16
        );
        assert_eq!(BasisSet::new(BlockMode::Both, ChargeMode::Four).dim(), 32);
        assert_eq!(
            BasisSet::new(BlockMode::Single(ParityBlock::One), ChargeMode::GroundOnly).dim(),
            4
        );
    }

    #[test]
    fn island_states_match_block_tables() {
        let zero: Vec<_> = [0, 1, -1, 2]
            .iter()
            .map(|&d| BasisState::island(ParityBlock::Zero, d))
            .collect();
        let expect_zero = [(0, 0, 0), (1, 1, 0), (1, -1, -1), (0, 2, 1)];
        for (s, (pr, dn, ncp)) in zero.iter().zip(expect_zero) {
            assert_eq!((s.parity_r, s.dn, s.n_cp), (pr, dn, ncp));
        }
        let one: Vec<_> = [0, 1, -1]
            .iter()
            .map(|&d| BasisState::island(ParityBlock::One, d))
            .collect();
        let expect_one = [(1, 0, -1), (0, 1, 0), (0, -1, -1)];
        for (s, (pr, dn, ncp)) in one.iter().zip(expect_one) {
            assert_eq!((s.parity_r, s.dn, s.n_cp), (pr, dn, ncp));
        }
    }

    #[test]
    fn states_distinct_and_consistent() {
        for mode in [ChargeMode::Three, ChargeMode::Four, ChargeMode::FourBelow] {
            let b = BasisSet::new(BlockMode::Both, mode);
            let set: HashSet<_> = b.states().iter().collect();
            assert_eq!(set.len(), b.dim());
            assert!(b.states().iter().all(BasisState::is_charge_consistent));
        }
    }

    #[test]
    fn pairing_across_blocks() {
        let b = BasisSet::new(BlockMode::Both, ChargeMode::Three);
        let r0 = b.block_range(ParityBlock::Zero).unwrap();
        let r1 = b.block_range(ParityBlock::One).unwrap();
        for (i, j) in r0.zip(r1) {
            let (s, t) = (b.states()[i], b.states()[j]);
            assert_eq!((s.dn, s.dot1, s.dot2), (t.dn, t.dot1, t.dot2));
            assert_ne!(s.parity_l, t.parity_l);
        }
    }

    #[test]
    fn ground_index() {
        let b = BasisSet::new(BlockMode::Both, ChargeMode::Three);
        assert_eq!(b.ground_empty_index(ParityBlock::Zero), Some(0));
        assert_eq!(b.ground_empty_index(ParityBlock::One), Some(12));
    }
}
