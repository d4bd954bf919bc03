//! Input gradient of every score on a small MLP, checked against central
//! finite differences.

use pro_ood::model::{Activation, Classifier};
use pro_ood::pro::{NetScore, ScoreField};
use pro_ood::scores::ScoreFn;
use pro_ood::tensor::Tensor;

fn main() -> pro_ood::Result<()> {
    let net = Classifier::mlp(&[6, 16, 16, 5], Activation::Tanh, 3)?;
    let x = Tensor::vector(vec![0.3, -1.2, 0.7, 0.0, 2.1, -0.4])?;
    let h = 1e-5;
    for score in [
        ScoreFn::Msp,
        ScoreFn::MspT { t: 10.0 },
        ScoreFn::Ent,
        ScoreFn::Gen { gamma: 0.1, m: 5 },
        ScoreFn::Ebo { t: 1.0 },
    ] {
        let field = NetScore::new(&net, score)?;
        let (g, grad) = field.score_and_grad(&x)?;
        let mut worst = 0.0f64;
        for i in 0..x.len() {
            let shifted = |d: f64| {
                let mut v = x.data().to_vec();
                v[i] += d;
                field.score(&Tensor::vector(v)?).map(|s| s[0])
            };
            let fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);
            let rel = (fd - grad.data()[i]).abs() / fd.abs().max(grad.data()[i].abs()).max(1e-8);
            worst = worst.max(rel);
        }
        println!("{:<6} g(x) = {:>12.8}  max rel err vs FD = {worst:.2e}", score.name(), g[0]);
    }
    Ok(())
}
