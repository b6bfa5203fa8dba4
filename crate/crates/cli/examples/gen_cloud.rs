//! Generates an irregular node cloud by jittering the interior of a regular
//! grid, keeping the boundary ring exact. The output is a plain cloud file
//! suitable for `--cloud` or the `irregular` preset:
//!
//! ```text
//! cargo run -p chemogfd-cli --example gen_cloud -- \
//!     --n 19 --jitter 0.3 --seed 7 --out clouds/irregular-361.txt
//! ```
//!
//! The same seed always reproduces the identical file.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

use chemogfd::geometry::save_cloud;
use chemogfd_cli::generate_jittered_cloud;

#[derive(Parser)]
#[command(about = "Generate a jittered irregular node cloud")]
struct Args {
    /// Nodes per side of the underlying grid.
    #[arg(long, default_value_t = 19)]
    n: usize,

    /// Maximum interior displacement, in grid cells per axis.
    #[arg(long, default_value_t = 0.3)]
    jitter: f64,

    /// Seed for the displacement stream.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let cloud = generate_jittered_cloud(args.n, args.jitter, args.seed)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    save_cloud(&cloud, &args.out)?;
    // Prepend a provenance header so the file documents itself; `#` lines
    // are comments to the parser.
    let body = fs::read_to_string(&args.out)?;
    let header = format!(
        "# irregular node cloud: {0}×{0} grid, interior jittered by ±{1} cells, seed {2}\n\
         # regenerate: cargo run -p chemogfd-cli --example gen_cloud -- \
         --n {0} --jitter {1} --seed {2} --out <path>\n",
        args.n, args.jitter, args.seed
    );
    fs::write(&args.out, header + &body)?;
    println!(
        "wrote {} ({} nodes, {} boundary)",
        args.out.display(),
        cloud.len(),
        cloud.count_kind(chemogfd::geometry::NodeKind::Boundary)
    );
    Ok(())
}
