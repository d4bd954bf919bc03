//! Full desk run into a directory (default: `desk_run`).

use pro_ood::experiment::{run_pipeline, PipelineConfig};

fn main() -> pro_ood::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "desk_run".into());
    let start = std::time::Instant::now();
    let run = run_pipeline(&PipelineConfig::desk(7), &out)?;
    print!("{}", run.report.to_table());
    let s = &run.summary;
    println!("test accuracy {:.3}, tuned PRO-MSP ε {}", s.test_accuracy, s.tuned_msp_eps);
    for r in &s.robustness {
        println!("Δz {:<8} IND {:.6}  OOD {:.6}", r.set, r.mean_dz_ind, r.mean_dz_ood);
    }
    println!("{} files in {out}, {:.1?}", run.files.len(), start.elapsed());
    Ok(())
}
