//! Validation search for PRO-MSP over ε and K, then test metrics of the
//! winner against plain MSP.

use pro_ood::datasets::DeskPreset;
use pro_ood::eval::{sweep, DetectorSpec, SweepGrid};
use pro_ood::experiment::{desk_train_config, evaluate};
use pro_ood::model::train;
use pro_ood::scores::ScoreFn;

fn main() -> pro_ood::Result<()> {
    let data = DeskPreset::default().generate(7)?;
    let net = train(&data.train, &desk_train_config(7))?.net;
    let result = sweep(&net, ScoreFn::Msp, &SweepGrid::default(), &data.ind_val.x, &data.suite.ood_val.x)?;
    print!("{}", result.to_csv());
    println!("best: {:?} (validation AUROC {:.4})", result.best.hyper(), result.best_auroc);
    let specs = [DetectorSpec::Base { score: ScoreFn::Msp }, result.best];
    print!("{}", evaluate(&net, &specs, &data.suite)?.to_table());
    Ok(())
}
