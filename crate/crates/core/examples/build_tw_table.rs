//! Regenerates the Tracy-Widom GUE CDF table shipped in data/tw_gue_cdf.csv.
//!
//! Run from the crate directory:
//!   cargo run --release -p polymer-core --example build_tw_table

use polymer_core::dist::tw::{default_grid, tw2_build_checked};

fn main() {
    let grid = default_grid();
    let (table, max_diff) =
        tw2_build_checked(64, 16.0, &grid, 1e-8).expect("refinement check failed");
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/tw_gue_cdf.csv");
    std::fs::write(path, table.to_csv()).expect("write table");
    println!("wrote {path}; 40-vs-80 max node change {max_diff:.3e}");
}
