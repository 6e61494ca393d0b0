//! The different linear-system shapes one supernova graph encodes: for each
//! choice of part placed at ∞ (plus the generic reading with every part
//! finite) the graph describes connections on a bundle whose rank is the sum
//! of the core dimensions away from the ∞ part.

use crate::graph::SupernovaGraph;
use crate::root::RootVector;
use serde::Serialize;

/// One way to read the graph as meromorphic connections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LaxReading {
    /// which part sits at ∞ (`None` = the generic reading, ∞ unoccupied)
    pub part_at_infinity: Option<usize>,
    /// rank of the bundle: Σ of core dims outside the ∞ part
    pub rank: usize,
    /// number of finite simple poles (the times of the ∞ part)
    pub finite_simple_poles: usize,
    /// pole order at z = ∞ (1 = Fuchsian, 2 = Poincaré rank one, 3 = rank two)
    pub infinity_pole_order: usize,
}

impl LaxReading {
    /// Total number of poles including ∞ when it actually carries one.
    pub fn pole_count(&self) -> usize {
        self.finite_simple_poles + usize::from(self.infinity_pole_order > 0)
    }
}

/// Enumerate every reading of the graph with core dimensions from `d`
/// (vectors are over the full canonical node order; only core entries
/// contribute to ranks). Rank-zero readings are skipped.
pub fn lax_readings(graph: &SupernovaGraph, d: &RootVector) -> Vec<LaxReading> {
    let k = graph.part_count();
    let core_total: i64 = (0..graph.core_node_count()).map(|i| d.0[i]).collect::<Vec<_>>().iter().sum();
    let part_sum = |j: usize| -> i64 { graph.part_nodes(j).iter().map(|&i| d.0[i]).sum() };
    let mut out = Vec::new();
    for j in 0..k {
        let rank = core_total - part_sum(j);
        if rank <= 0 {
            continue;
        }
        // the remaining k−1 parts sit at finite points: with at least two of
        // them the leading coefficient A is regular at ∞ (order-3 pole);
        // with exactly one, A is scalar and removable so the pole order at
        // ∞ is 2 — or 1 when that part carries a single time.
        let others = k - 1;
        let infinity_pole_order = if others >= 2 {
            3
        } else if others == 1 {
            let other = (0..k).find(|&l| l != j).expect("k >= 2 here");
            if graph.part_nodes(other).len() >= 2 {
                2
            } else {
                1
            }
        } else {
            0
        };
        out.push(LaxReading {
            part_at_infinity: Some(j),
            rank: rank as usize,
            finite_simple_poles: graph.part_nodes(j).len(),
            infinity_pole_order,
        });
    }
    // generic reading: nothing at ∞
    if core_total > 0 {
        let infinity_pole_order = if k >= 2 {
            3
        } else {
            // a single part: A is scalar and removable, d(zT) leaves an
            // order-2 pole as soon as the part has at least two times
            if graph.part_nodes(0).len() >= 2 {
                2
            } else {
                1
            }
        };
        out.push(LaxReading {
            part_at_infinity: None,
            rank: core_total as usize,
            finite_simple_poles: 0,
            infinity_pole_order,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SupernovaGraph;

    #[test]
    fn affine_d4_has_three_readings() {
        // core (1, 3): part 0 = centre (dim 2), part 1 = three feet (dim 1
        // each); the fourth foot is a leg of length 1 on the centre
        let g = SupernovaGraph::build(&[1, 3], &[1, 0, 0, 0]).unwrap();
        let d = RootVector(vec![2, 1, 1, 1, 1]);
        let readings = lax_readings(&g, &d);
        assert_eq!(readings.len(), 3);
        // feet at ∞: rank 2 Fuchsian with 3 finite + 1 infinite simple pole
        let feet = readings
            .iter()
            .find(|r| r.part_at_infinity == Some(1))
            .unwrap();
        assert_eq!(feet.rank, 2);
        assert_eq!(feet.finite_simple_poles, 3);
        assert_eq!(feet.infinity_pole_order, 1);
        assert_eq!(feet.pole_count(), 4);
        // centre at ∞: rank 3 with one simple pole and an irregular one
        let centre = readings
            .iter()
            .find(|r| r.part_at_infinity == Some(0))
            .unwrap();
        assert_eq!(centre.rank, 3);
        assert_eq!(centre.finite_simple_poles, 1);
        assert_eq!(centre.infinity_pole_order, 2);
        // generic: rank 5, single order-3 pole
        let generic = readings.iter().find(|r| r.part_at_infinity.is_none()).unwrap();
        assert_eq!(generic.rank, 5);
        assert_eq!(generic.finite_simple_poles, 0);
        assert_eq!(generic.infinity_pole_order, 3);
    }

    #[test]
    fn single_part_core_has_one_reading() {
        let g = SupernovaGraph::build(&[3], &[0, 0, 0]).unwrap();
        let d = RootVector(vec![1, 1, 1]);
        let readings = lax_readings(&g, &d);
        assert_eq!(readings.len(), 1);
        assert!(readings[0].part_at_infinity.is_none());
        assert_eq!(readings[0].rank, 3);
    }

    #[test]
    fn interval_readings() {
        // two-part core: the two one-sided readings plus the generic one
        let g = SupernovaGraph::build(&[2, 3], &[0; 5]).unwrap();
        let d = RootVector(vec![1, 1, 1, 1, 1]);
        let readings = lax_readings(&g, &d);
        assert_eq!(readings.len(), 3);
        assert_eq!(
            readings
                .iter()
                .filter_map(|r| r.part_at_infinity.map(|_| r.rank))
                .collect::<Vec<_>>(),
            vec![3, 2]
        );
    }

    #[test]
    fn zero_rank_readings_skipped() {
        let g = SupernovaGraph::build(&[1, 1], &[0, 0]).unwrap();
        let d = RootVector(vec![2, 0]);
        let readings = lax_readings(&g, &d);
        // placing part 0 at ∞ leaves rank 0: dropped
        assert_eq!(readings.len(), 2);
    }
}
