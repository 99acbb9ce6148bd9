//! Bundled example tables.

use crate::io::{read_table_str, ReadOptions};
use crate::table::ContingencyTable;

const CAR: &str = include_str!("../data/car.csv");
const OCEAN: &str = include_str!("../data/ocean.csv");

/// Brand by attribute counts from a car-perception survey, 39x7.
pub fn car() -> ContingencyTable {
    read_table_str(CAR, &ReadOptions::default()).expect("bundled car table parses")
}

/// Document by descriptor incidences from an ocean-plastic literature
/// review, 81x21.
pub fn ocean() -> ContingencyTable {
    read_table_str(OCEAN, &ReadOptions::default()).expect("bundled ocean table parses")
}

fn small(rows: &[[f64; 4]]) -> ContingencyTable {
    ContingencyTable::from_rows(rows).expect("bundled table is valid")
}

/// Row 2 and column b form their own block.
pub fn block_diagonal() -> ContingencyTable {
    small(&[
        [1.0, 0.0, 3.0, 4.0],
        [0.0, 2.0, 0.0, 0.0],
        [2.0, 0.0, 5.0, 1.0],
        [4.0, 0.0, 6.0, 1.0],
    ])
}

/// Nearly block diagonal at a larger scale.
pub fn approx_block_diagonal() -> ContingencyTable {
    small(&[
        [100.0, 2.0, 300.0, 400.0],
        [2.0, 100.0, 1.0, 4.0],
        [200.0, 3.0, 500.0, 100.0],
        [400.0, 2.0, 600.0, 100.0],
    ])
}

/// A single large cell at (2, b).
pub fn large_value() -> ContingencyTable {
    small(&[
        [1.0, 2.0, 3.0, 4.0],
        [2.0, 100.0, 1.0, 4.0],
        [2.0, 3.0, 5.0, 1.0],
        [4.0, 2.0, 6.0, 1.0],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shapes() {
        let c = car();
        assert_eq!((c.n_rows(), c.n_cols()), (39, 7));
        assert_eq!(c.grand_total(), 11713.0);
        let o = ocean();
        assert_eq!((o.n_rows(), o.n_cols()), (81, 21));
        assert_eq!(o.grand_total(), 312.0);
        assert_eq!(block_diagonal().grand_total(), 29.0);
    }
}
