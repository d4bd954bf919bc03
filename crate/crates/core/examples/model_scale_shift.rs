//! One-step MSP shift against class count: blobs with C ∈ {2, 10, 100},
//! one adversarially trained model each.

use pro_ood::analysis::{shift_histogram, Binning, SampleSet};
use pro_ood::datasets::{BlobSpec, DeskPreset};
use pro_ood::experiment::desk_train_config;
use pro_ood::model::train;
use pro_ood::pro::NetScore;
use pro_ood::scores::ScoreFn;

fn main() -> pro_ood::Result<()> {
    for classes in [2usize, 10, 100] {
        let preset = DeskPreset {
            blobs: BlobSpec { classes, dim: 16, margin: 6.0 },
            train_per_class: (1000 / classes).max(10),
            val_per_class: (400 / classes).max(4),
            test_per_class: (1000 / classes).max(10),
            ..DeskPreset::default()
        };
        let data = preset.generate(7)?;
        let mut cfg = desk_train_config(7);
        cfg.hidden = vec![64, 64];
        let net = train(&data.train, &cfg)?.net;
        let field = NetScore::new(&net, ScoreFn::Msp)?;
        let ind = SampleSet { name: "ind", x: &data.suite.ind_test.x };
        let ood = [SampleSet { name: "shifted", x: &data.suite.ood[0].data.x }];
        let h = &shift_histogram(&field, ind, &ood, &[0.01], Binning::Probability)?[0];
        println!(
            "C={classes:<3} mean MSP shift: IND {:.6}  shifted {:.6}",
            h.ind.mean(),
            h.ood[0].mean()
        );
    }
    Ok(())
}
