//! Generate the desk suite, round-trip one split through the binary format
//! and print a CSV preview.

use pro_ood::datasets::{decode_dataset, encode_dataset, to_csv, DeskPreset, Split};

fn main() -> pro_ood::Result<()> {
    let data = DeskPreset::default().generate(7)?;
    let bytes = encode_dataset(&data.train);
    let back = decode_dataset(&bytes, Split::Train)?;
    println!("train: {} rows, D={}, C={}, {} bytes", back.len(), back.dim(), back.class_count, bytes.len());
    assert_eq!(back, data.train);
    for set in &data.suite.ood {
        println!("{:<8} {:<4} {} rows", set.name, set.group.as_str(), set.data.len());
    }
    for line in to_csv(&back).lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
