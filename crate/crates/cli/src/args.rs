use std::path::PathBuf;

use clap::{Parser, Subcommand};
use isofold::ilp::Format;
use isofold::Rational;

/// Fold one metric graph onto another with a uniform scale factor.
///
/// Graph arguments are files in the graph text format or one of the names
/// tetrahedron, cube, octahedron, dodecahedron, icosahedron.
#[derive(Debug, Parser)]
#[command(name = "isofold", version)]
pub struct Cli {
    /// Structured output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a Platonic solid or the table of published bounds.
    Catalog {
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        table: bool,
    },
    /// Lower bound on the optimal scale.
    Bounds { src: String, dst: String },
    /// Shortest walk covering every edge.
    Postman {
        dst: String,
        /// Open walk instead of a closed tour.
        #[arg(long)]
        open: bool,
        /// Also print the optimal scale for a cycle (or path, with --open)
        /// source of this length.
        #[arg(long)]
        source_length: Option<Rational>,
    },
    /// Grid search for a folding.
    Solve {
        src: String,
        dst: String,
        /// Decide this scale instead of minimizing.
        #[arg(long)]
        alpha: Option<Rational>,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long)]
        scale_max: Option<Rational>,
        /// Seconds.
        #[arg(long, env = "ISOFOLD_TIME", default_value_t = 600)]
        time: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a certificate.
    Verify { src: String, dst: String, cert: PathBuf },
    /// Re-solve the continuous part of a certificate exactly.
    Refine {
        src: String,
        dst: String,
        cert: PathBuf,
        /// Auxiliary points per target edge; defaults to the source vertex count.
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local improvement by partial re-search and refinement.
    Improve {
        src: String,
        dst: String,
        #[arg(long, default_value_t = 12)]
        rounds: usize,
        /// Fraction of placements kept fixed per round.
        #[arg(long, default_value = "1/2")]
        rho: Rational,
        /// Accepted worsening relative to the current solution.
        #[arg(long, default_value = "1/20")]
        eps: Rational,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        q_start: usize,
        #[arg(long, default_value_t = 4)]
        q_max: usize,
        /// Seconds per round.
        #[arg(long, env = "ISOFOLD_TIME", default_value_t = 600)]
        time: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the mixed integer model.
    ExportIlp {
        src: String,
        dst: String,
        /// Auxiliary points per target edge; defaults to the source vertex count.
        #[arg(long)]
        c: Option<usize>,
        /// Scale cap; defaults to the target edge count.
        #[arg(long)]
        alpha: Option<Rational>,
        #[arg(long, default_value = "lp")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the set-cover reduction.
    Gadget {
        instance: PathBuf,
        /// Anchor count; defaults to 4|C|+1.
        #[arg(long)]
        a: Option<usize>,
        /// Emit the variant with split edges and doubled anchors.
        #[arg(long)]
        dp: bool,
        /// Write `<prefix>.source.graph` and `<prefix>.target.graph`.
        #[arg(long)]
        out_prefix: Option<PathBuf>,
    },
}
