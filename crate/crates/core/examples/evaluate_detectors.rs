//! Every registered detector on the desk suite with default settings.

use pro_ood::datasets::DeskPreset;
use pro_ood::eval::DetectorParams;
use pro_ood::experiment::{all_detector_names, desk_train_config, evaluate, resolve_detectors};
use pro_ood::model::train;

fn main() -> pro_ood::Result<()> {
    let data = DeskPreset::default().generate(7)?;
    let net = train(&data.train, &desk_train_config(7))?.net;
    let specs = resolve_detectors(&all_detector_names(), &DetectorParams::default(), &[], None, net.class_count())?;
    let report = evaluate(&net, &specs, &data.suite)?;
    println!("FPR@95 / AUROC in percent");
    print!("{}", report.to_table());
    Ok(())
}
