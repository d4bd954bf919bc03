//! Perturbed-confidence lower bounds on standard and adversarially trained
//! desk models.

use pro_ood::analysis::{claim1_check, entropy_bound};
use pro_ood::datasets::DeskPreset;
use pro_ood::experiment::desk_train_config;
use pro_ood::model::{train, TrainMode};

fn main() -> pro_ood::Result<()> {
    let data = DeskPreset::default().generate(7)?;
    for adversarial in [false, true] {
        let mut cfg = desk_train_config(7);
        if !adversarial {
            cfg.mode = TrainMode::Standard;
        }
        let net = train(&data.train, &cfg)?.net;
        println!("{}", if adversarial { "adversarial" } else { "standard" });
        for eps in [0.0, 0.1, 0.5] {
            let r = claim1_check(&net, &data.suite.ind_test, eps, 5)?;
            let h = entropy_bound(r.e_hat, net.class_count())
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|_| "n/a".into());
            println!(
                "  ε={eps:<4} E_hat {:.4}  mean min MSP {:.4}  exp(-E_hat) {:.4}  holds {}  entropy bound {h}",
                r.e_hat, r.mean_min_msp, r.bound, r.holds
            );
        }
    }
    Ok(())
}
