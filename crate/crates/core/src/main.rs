use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use sparse_corr::bench::{format_rows, scaling_sweep};
use sparse_corr::encoder::{encode, EncoderConfig};
use sparse_corr::estimator::EstimatorConfig;
use sparse_corr::io::image_io::{read_gray, read_mask, write_gray, write_mask};
use sparse_corr::io::{
    census_features, flow_to_color, read_features, read_flo, read_volume, write_features,
    write_flo, write_matches, write_motion, write_volume,
};
use sparse_corr::knn::{topk_search_with, KnnConfig};
use sparse_corr::memory::{memory_report, table4a_text, VolumeVariant};
use sparse_corr::metrics::{endpoint_error, f1_all};
use sparse_corr::pipeline::{estimate_from_images, PipelineConfig};
use sparse_corr::synth::{translated_pair, PairSpec};
use sparse_corr::volume::build_sparse_with;

/// Sparse top-k correlation volumes for dense matching.
#[derive(Parser)]
#[command(name = "scv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact top-k search between two feature files; writes an SKM1 match table.
    Knn {
        #[arg(long)]
        f1: PathBuf,
        #[arg(long)]
        f2: PathBuf,
        #[arg(short = 'k', default_value_t = 8)]
        k: usize,
        /// Multiplier applied to every inner product.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a sparse correlation volume (SCV1).
    Build {
        #[arg(long)]
        f1: PathBuf,
        #[arg(long)]
        f2: PathBuf,
        #[arg(short = 'k', default_value_t = 8)]
        k: usize,
        /// Resolution divisor recorded in the volume header.
        #[arg(long, default_value_t = 1)]
        divisor: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a sparse volume into a motion tensor (SMT1).
    Encode {
        #[arg(long)]
        vol: PathBuf,
        #[arg(short = 'r', default_value_t = 3)]
        radius: usize,
        #[arg(short = 'L', default_value_t = 5)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Census descriptors of a grayscale image (SFM1).
    Features {
        #[arg(long)]
        img: PathBuf,
        #[arg(long, default_value_t = 2)]
        patch_radius: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate flow between two images and write a .flo file.
    Estimate {
        #[arg(long)]
        img1: PathBuf,
        #[arg(long)]
        img2: PathBuf,
        #[arg(short = 'k', default_value_t = 8)]
        k: usize,
        #[arg(short = 'N', default_value_t = 8)]
        iterations: usize,
        #[arg(short = 'r', default_value_t = 3)]
        radius: usize,
        #[arg(short = 'L', default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f32,
        #[arg(long, default_value_t = 2)]
        patch_radius: usize,
        /// Downsampling factor applied before feature extraction.
        #[arg(long, default_value_t = 1)]
        divisor: usize,
        #[arg(long)]
        out: PathBuf,
        /// Optional colour visualisation (PNG).
        #[arg(long)]
        viz: Option<PathBuf>,
    },
    /// Print EPE and F1-all of a flow against ground truth.
    Eval {
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Validity mask PNG; non-zero pixels are evaluated.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Element count and memory of a correlation volume.
    MemoryReport {
        #[arg(long, default_value_t = 436)]
        height: usize,
        #[arg(long, default_value_t = 1024)]
        width: usize,
        #[arg(long, default_value_t = 4)]
        divisor: usize,
        #[arg(short = 'k', default_value_t = 8)]
        k: usize,
        #[arg(long)]
        dense: bool,
        /// Print the dense/k=8/32/128 rows at 1/4 and 1/8 for 436x1024.
        #[arg(long)]
        table4a: bool,
    },
    /// Time top-k search and encoding over a sweep of square sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "16,24,32,48")]
        sizes: Vec<usize>,
        #[arg(short = 'k', default_value_t = 8)]
        k: usize,
        #[arg(short = 'c', long, default_value_t = 32)]
        channels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic translated image pair with ground truth.
    Synth {
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
        tx: i32,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        ty: i32,
        #[arg(long, default_value_t = 0.0)]
        noise: f32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Knn {
            f1,
            f2,
            k,
            scale,
            out,
        } => {
            let (a, b) = load_pair(&f1, &f2)?;
            let m = topk_search_with(&a, &b, &KnnConfig { k, scale })?;
            write_matches(&m, &out)?;
            println!(
                "{}x{} source pixels, k={k}: {} matches -> {}",
                m.height(),
                m.width(),
                m.all_indices().len(),
                out.display()
            );
        }
        Command::Build {
            f1,
            f2,
            k,
            divisor,
            out,
        } => {
            let (a, b) = load_pair(&f1, &f2)?;
            let vol = build_sparse_with(&a, &b, &KnnConfig::with_k(k))?.with_divisor(divisor)?;
            write_volume(&vol, &out)?;
            println!(
                "{}x{}x{k}: {} elements -> {}",
                vol.height(),
                vol.width(),
                vol.element_count(),
                out.display()
            );
        }
        Command::Encode {
            vol,
            radius,
            levels,
            out,
        } => {
            let v = read_volume(&vol).with_context(|| format!("reading {}", vol.display()))?;
            let cfg = EncoderConfig::new(levels, radius)?;
            let m = encode(&v, &cfg)?;
            write_motion(&m, &out)?;
            println!(
                "{}x{}x{} motion tensor -> {}",
                m.height(),
                m.width(),
                m.channels(),
                out.display()
            );
        }
        Command::Features {
            img,
            patch_radius,
            out,
        } => {
            let gray = read_gray(&img).with_context(|| format!("reading {}", img.display()))?;
            let f = census_features(&gray, patch_radius)?;
            write_features(&f, &out)?;
            println!(
                "{}x{}x{} features -> {}",
                f.height(),
                f.width(),
                f.channels(),
                out.display()
            );
        }
        Command::Estimate {
            img1,
            img2,
            k,
            iterations,
            radius,
            levels,
            temperature,
            patch_radius,
            divisor,
            out,
            viz,
        } => {
            let a = read_gray(&img1).with_context(|| format!("reading {}", img1.display()))?;
            let b = read_gray(&img2).with_context(|| format!("reading {}", img2.display()))?;
            let cfg = PipelineConfig {
                patch_radius,
                divisor,
                estimator: EstimatorConfig {
                    iterations,
                    k,
                    encoder: EncoderConfig::new(levels, radius)?,
                    temperature,
                },
            };
            let result = estimate_from_images(&a, &b, &cfg)?;
            write_flo(&result.flow, &out)?;
            if let Some(path) = viz {
                flow_to_color(&result.flow, None).save(&path)?;
            }
            println!(
                "{}x{} flow after {iterations} iterations -> {}",
                result.flow.height(),
                result.flow.width(),
                out.display()
            );
        }
        Command::Eval { flow, gt, mask } => {
            let f = read_flo(&flow).with_context(|| format!("reading {}", flow.display()))?;
            let mut g = read_flo(&gt).with_context(|| format!("reading {}", gt.display()))?;
            if let Some(path) = mask {
                let (h, w, valid) = read_mask(&path)?;
                if (h, w) != g.dims() {
                    bail!(
                        "mask is {h}x{w}, ground truth is {}x{}",
                        g.height(),
                        g.width()
                    );
                }
                let combined = valid
                    .iter()
                    .enumerate()
                    .map(|(i, v)| *v && g.is_valid(i))
                    .collect();
                g = g.with_mask(combined)?;
            }
            println!(
                "EPE {:.3}, F1-all {:.2}%",
                endpoint_error(&f, &g)?,
                f1_all(&f, &g)?
            );
        }
        Command::MemoryReport {
            height,
            width,
            divisor,
            k,
            dense,
            table4a,
        } => {
            if table4a {
                print!("{}", table4a_text());
            } else {
                let variant = if dense {
                    VolumeVariant::Dense
                } else {
                    VolumeVariant::TopK(k)
                };
                println!(
                    "{}",
                    memory_report(height, width, divisor, variant)?.summary_line()
                );
            }
        }
        Command::Bench {
            sizes,
            k,
            channels,
            seed,
        } => {
            if sizes.is_empty() || sizes.contains(&0) {
                bail!("sizes must be positive");
            }
            let rows = scaling_sweep(&sizes, k, channels, seed)?;
            print!("{}", format_rows(&rows));
            if let Some(bad) = rows.iter().find(|r| !r.element_law_holds()) {
                bail!(
                    "side {}: stored {} elements, expected {}",
                    bad.side,
                    bad.stored_elements,
                    bad.expected_elements
                );
            }
        }
        Command::Synth {
            height,
            width,
            tx,
            ty,
            noise,
            seed,
            out_dir,
        } => {
            let spec = PairSpec {
                noise,
                ..PairSpec::new(height, width, (tx, ty), seed)
            };
            let pair = translated_pair(&spec)?;
            std::fs::create_dir_all(&out_dir)?;
            write_gray(&pair.first, out_dir.join("a.png"))?;
            write_gray(&pair.second, out_dir.join("b.png"))?;
            write_flo(
                &pair.ground_truth.clone().without_mask(),
                out_dir.join("gt.flo"),
            )?;
            let mask = pair
                .ground_truth
                .mask()
                .expect("synthetic pairs carry a mask");
            write_mask(height, width, mask, out_dir.join("mask.png"))?;
            println!(
                "wrote a.png, b.png, gt.flo, mask.png to {}",
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn load_pair(
    f1: &PathBuf,
    f2: &PathBuf,
) -> Result<(sparse_corr::FeatureMap, sparse_corr::FeatureMap)> {
    let a = read_features(f1).with_context(|| format!("reading {}", f1.display()))?;
    let b = read_features(f2).with_context(|| format!("reading {}", f2.display()))?;
    Ok((a, b))
}
