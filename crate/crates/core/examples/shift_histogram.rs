//! One-step MSP shifts on IND versus each OOD set.

use pro_ood::analysis::{shift_histogram, Binning, SampleSet};
use pro_ood::datasets::DeskPreset;
use pro_ood::experiment::desk_train_config;
use pro_ood::model::train;
use pro_ood::pro::NetScore;
use pro_ood::scores::ScoreFn;

fn main() -> pro_ood::Result<()> {
    let data = DeskPreset::default().generate(7)?;
    let net = train(&data.train, &desk_train_config(7))?.net;
    let field = NetScore::new(&net, ScoreFn::Msp)?;
    let ind = SampleSet { name: "ind", x: &data.suite.ind_test.x };
    let ood: Vec<SampleSet> = data.suite.ood.iter().map(|s| SampleSet { name: &s.name, x: &s.data.x }).collect();
    for h in shift_histogram(&field, ind, &ood, &[0.001, 0.01, 0.1], Binning::Probability)? {
        println!("ε = {}", h.eps);
        for s in std::iter::once(&h.ind).chain(&h.ood) {
            println!("  {:<8} mean shift {:>10.6}  positive {:>4}", s.set, s.mean(), s.positive_count());
        }
    }
    Ok(())
}
