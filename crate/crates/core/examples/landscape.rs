//! MSP landscape on a random plane around an IND and a far-OOD sample,
//! written as CSV and SVG into a directory (default: `landscape_out`).

use pro_ood::analysis::{landscape, svg};
use pro_ood::datasets::DeskPreset;
use pro_ood::experiment::desk_train_config;
use pro_ood::model::train;
use pro_ood::pro::NetScore;
use pro_ood::scores::ScoreFn;
use pro_ood::tensor::Tensor;

fn main() -> pro_ood::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "landscape_out".into());
    std::fs::create_dir_all(&out).map_err(|e| pro_ood::Error::Io { path: out.clone().into(), source: e })?;
    let data = DeskPreset::default().generate(7)?;
    let net = train(&data.train, &desk_train_config(7))?.net;
    let field = NetScore::new(&net, ScoreFn::Msp)?;
    for (name, x) in [("ind", &data.suite.ind_test.x), ("ring", &data.suite.ood[1].data.x)] {
        let grid = landscape(&field, &Tensor::vector(x.row(0).to_vec())?, 2.0, 41, 0)?;
        let (lo, hi) = grid.z.iter().flatten().fold((1.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        println!("{name}: center {:.5}, min {lo:.5}, max {hi:.5}", grid.center());
        for (file, body) in [
            (format!("{out}/landscape_{name}.csv"), grid.to_csv()),
            (format!("{out}/landscape_{name}.svg"), svg::landscape_svg(&grid)),
        ] {
            std::fs::write(&file, body).map_err(|e| pro_ood::Error::Io { path: file.into(), source: e })?;
        }
    }
    Ok(())
}
