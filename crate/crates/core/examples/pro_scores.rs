//! PRO trajectory, ODIN-direction score and Δz for an IND and an OOD sample.

use pro_ood::datasets::DeskPreset;
use pro_ood::experiment::desk_train_config;
use pro_ood::model::train;
use pro_ood::pro::{delta_z, odin_preprocess_score, pro_score, NetScore, ProConfig};
use pro_ood::scores::ScoreFn;
use pro_ood::tensor::Tensor;

fn main() -> pro_ood::Result<()> {
    let data = DeskPreset::default().generate(7)?;
    let net = train(&data.train, &desk_train_config(7))?.net;
    let field = NetScore::new(&net, ScoreFn::Msp)?;
    let cfg = ProConfig::new(0.05, 7);
    let samples = [
        ("ind", data.suite.ind_test.x.row(0)),
        ("shifted", data.suite.ood[0].data.x.row(0)),
        ("ring", data.suite.ood[1].data.x.row(0)),
    ];
    for (name, row) in samples {
        let x = Tensor::vector(row.to_vec())?;
        let (g_star, traj) = pro_score(&field, &x, &cfg)?;
        println!("{name}");
        println!("  trajectory {:?}", traj.scores.iter().map(|s| format!("{s:.5}")).collect::<Vec<_>>());
        println!("  PRO-MSP {g_star:.5}  ODIN {:.5}  Δz {:.5}", odin_preprocess_score(&field, &x, 0.05)?, delta_z(&field, &x, 0.05)?);
    }
    Ok(())
}
