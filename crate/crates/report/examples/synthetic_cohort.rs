//! Writes a synthetic cohort in the source file's format.
//!
//! cargo run --release --example synthetic_cohort -- <path> [rows] [seed]

use std::fs::File;
use std::io::BufWriter;

use cardio_core::ingest::write_csv;
use cardio_report::synthetic::synthetic_cohort;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .ok_or("usage: synthetic_cohort <path> [rows] [seed]")?;
    let rows: usize = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(70_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let records = synthetic_cohort(rows, seed);
    write_csv(&records, b';', BufWriter::new(File::create(&path)?))?;
    println!("wrote {rows} rows to {path}");
    Ok(())
}
