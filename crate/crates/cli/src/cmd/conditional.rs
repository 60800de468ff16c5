use std::fs;
use std::path::PathBuf;

use clap::Args;
use durascale_core::conditional::{conditional_profile, normalized_pairs, ConditionalProfile};
use durascale_core::densities::DEFAULT_BINS_PER_DECADE;
use serde::{Deserialize, Serialize};

use crate::artifacts::{write_atomic, RunManifest};
use crate::cmd::ingest::load_tape;
use crate::error::CliError;
use crate::series::ClassArg;

#[derive(Debug, Args)]
pub struct ConditionalArgs {
    /// Trade tape CSV; pairs need within-session adjacency, which only the
    /// tape carries, so this command re-extracts rather than reading
    /// series artifacts
    #[arg(long)]
    pub tape: PathBuf,
    /// `default` for the double session, or a session CSV file
    #[arg(long, default_value = "default")]
    pub calendar: String,
    /// Which trade class to condition on
    #[arg(long, value_enum, default_value_t = ClassArg::All)]
    pub class: ClassArg,
    #[arg(long, default_value_t = DEFAULT_BINS_PER_DECADE)]
    pub bins_per_decade: u32,
    /// Log-spaced bins over the preceding duration for the mean profile
    #[arg(long, default_value_t = 20)]
    pub g0_bins: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// The JSON half of the profile artifact; curves land in CSVs beside it.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileFile {
    pub class: String,
    pub bins_per_decade: u32,
    pub g0_bins: usize,
    pub n_pairs: usize,
    pub quintile_edges: [f64; 4],
    pub group_sizes: [usize; 5],
    pub grand_mean: f64,
}

fn z_curve_csv(curve: &[durascale_core::conditional::ZPoint]) -> String {
    let mut out = String::from("bin_center,z,n_top,n_ref\n");
    for p in curve {
        out.push_str(&format!("{},{},{},{}\n", p.center, p.z, p.count_top, p.count_ref));
    }
    out
}

fn mean_conditional_csv(profile: &ConditionalProfile) -> String {
    let mut out = String::from("g0_center,mean_next,n_pairs,low_confidence\n");
    for b in &profile.mean_conditional.bins {
        out.push_str(&format!(
            "{},{},{},{}\n",
            b.g0_center, b.mean_g, b.n_pairs, b.low_confidence
        ));
    }
    out
}

pub fn run(args: &ConditionalArgs) -> Result<(), CliError> {
    if args.bins_per_decade == 0 {
        return Err(CliError::Usage("--bins-per-decade must be at least 1".into()));
    }
    let mut manifest = RunManifest::new(
        "conditional",
        serde_json::json!({
            "tape": args.tape.display().to_string(),
            "calendar": args.calendar,
            "class": format!("{:?}", args.class),
            "bins_per_decade": args.bins_per_decade,
            "g0_bins": args.g0_bins,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.bins_per_decade = Some(args.bins_per_decade);
    let (tape, calendar) = load_tape(&args.tape, &args.calendar, &mut manifest)?;
    let series = durascale_core::tape::extract_durations(&tape, args.class.filter(), &calendar);
    let pairs = normalized_pairs(&series).map_err(|e| CliError::Data(e.to_string()))?;
    let profile = conditional_profile(&pairs, args.bins_per_decade, args.g0_bins)
        .map_err(|e| CliError::Data(e.to_string()))?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    let head = ProfileFile {
        class: format!("{:?}", args.class.filter()),
        bins_per_decade: args.bins_per_decade,
        g0_bins: args.g0_bins,
        n_pairs: profile.n_pairs,
        quintile_edges: profile.quintile_edges,
        group_sizes: profile.group_sizes,
        grand_mean: profile.mean_conditional.grand_mean,
    };
    let body = serde_json::to_string_pretty(&head).expect("profile serializes") + "\n";
    write_atomic(&args.out.join("profile.json"), body.as_bytes())?;
    manifest.outputs.push("profile.json".into());

    for (i, density) in profile.conditional_densities.iter().enumerate() {
        let name = format!("conditional_density_q{}.csv", i + 1);
        write_atomic(&args.out.join(&name), density.to_csv().as_bytes())?;
        manifest.outputs.push(name);
    }
    for (i, curve) in profile.z_curves.iter().enumerate() {
        let name = format!("z_q{}.csv", i + 1);
        write_atomic(&args.out.join(&name), z_curve_csv(curve).as_bytes())?;
        manifest.outputs.push(name);
    }
    write_atomic(
        &args.out.join("mean_conditional.csv"),
        mean_conditional_csv(&profile).as_bytes(),
    )?;
    manifest.outputs.push("mean_conditional.csv".into());
    manifest.write(&args.out)
}
