use anyhow::Context;
use lecseg_core::metrics::format_table;

use super::eval::EvalFile;
use super::Ctx;
use crate::cli::ReportArgs;
use crate::exit::require;

pub fn run(ctx: Ctx, args: ReportArgs) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for path in &args.eval {
        let bytes = std::fs::read(require(path)?)?;
        let file: EvalFile = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing {}", path.display()))?;
        rows.push((file.name, file.mean));
    }
    let table = format_table(&rows, args.bs_k);
    ctx.out_dir(&[])?;
    std::fs::write(ctx.out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}
