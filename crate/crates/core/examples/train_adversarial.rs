//! Standard versus PGD adversarial training on the desk blobs.

use pro_ood::datasets::DeskPreset;
use pro_ood::experiment::desk_train_config;
use pro_ood::model::{pgd_attack, train, TrainMode};

fn main() -> pro_ood::Result<()> {
    let data = DeskPreset::default().generate(7)?;
    let test = &data.suite.ind_test;
    let labels = test.class_indices()?;
    for adversarial in [false, true] {
        let mut cfg = desk_train_config(7);
        if !adversarial {
            cfg.mode = TrainMode::Standard;
        }
        let out = train(&data.train, &cfg)?;
        let attacked = pgd_attack(&out.net, &test.x, &labels, 0.5, 10, 0.1)?;
        println!(
            "{:<12} final loss {:.4}  clean acc {:.3}  PGD(ε=0.5) acc {:.3}",
            if adversarial { "adversarial" } else { "standard" },
            out.final_loss,
            out.net.accuracy(&test.x, &labels)?,
            out.net.accuracy(&attacked, &labels)?,
        );
    }
    Ok(())
}
