//! Reduction of a freshly factored pencil to a single rotation sequence.

use crate::pencil::{FactoredPencil, Link, Recorder, Transit};

/// Chases every sequence except the leftmost one out of the chain.
///
/// Rotations are removed row by row; within a row, sequences are emptied
/// from the right. Each removed rotation travels left until it fuses at the
/// bottom, wrapping around by similarity whenever it reaches the outer left.
pub fn reduce<R: Recorder + ?Sized>(p: &mut FactoredPencil, rec: &mut R) {
    let n = p.n();
    let count = p.sequences.len();
    for row in 0..n.saturating_sub(1) {
        for j in (1..count).rev() {
            if p.sequences[j].is_empty() {
                continue;
            }
            debug_assert_eq!(p.sequences[j].first_index(), row);
            let g = p.sequences[j].pop_front();
            let pos = p.layout.iter().position(|l| *l == Link::Sequence(j)).expect("sequence in layout");
            let mut transit = p.carry_left(pos, g);
            while let Transit::Emerged(g) = transit {
                transit = match p.sweep(g, rec) {
                    Some(h) => Transit::Emerged(h),
                    None => Transit::Fused,
                };
            }
        }
    }
    p.compact();
}

/// Turnover bound `2·d²·k³` for a full reduction.
pub fn turnover_bound(d: usize, k: usize) -> u64 {
    2 * (d * d) as u64 * (k * k * k) as u64
}
