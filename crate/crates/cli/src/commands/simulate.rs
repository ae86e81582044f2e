use std::fs::File;
use std::io::{BufWriter, Write};

use tubelink::io::{write_detections, write_ground_truth};
use tubelink::simulator::{corrupt, generate_scenario, single_label_videos, NoiseSpec};

use super::create_dir;
use crate::args::SimulateArgs;
use crate::Exit;

/// Writes `appearance.jsonl`, `gt.json` and, with `--flow`, `flow.jsonl`.
pub fn run(args: &SimulateArgs) -> anyhow::Result<()> {
    if args.classes == 0 || args.videos == 0 || args.instances == 0 {
        anyhow::bail!(Exit::bad_input(
            "--classes, --videos and --instances must be positive"
        ));
    }
    let specs = single_label_videos(
        args.classes,
        args.videos,
        args.instances,
        args.frames,
        args.latest_start,
        args.seed,
    );
    let mut ground_truth = Vec::new();
    let mut appearance = Vec::new();
    let mut flow = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let scenario = generate_scenario(spec).map_err(|e| Exit::bad_input(e.to_string()))?;
        let noise = NoiseSpec {
            drop_prob: args.drop,
            box_jitter: args.jitter,
            false_positive_rate: args.fp_rate,
            score_noise_std: args.score_noise,
            ..NoiseSpec::none(args.classes, spec.width, spec.height)
        };
        let seed = args.seed.wrapping_add(1000 + 2 * i as u64);
        appearance.extend(
            corrupt(&scenario.frames, &noise, seed).map_err(|e| Exit::bad_input(e.to_string()))?,
        );
        if args.flow {
            flow.extend(corrupt(&scenario.frames, &noise, seed + 1)?);
        }
        ground_truth.extend(scenario.ground_truth);
    }

    create_dir(&args.out)?;
    let mut w = BufWriter::new(File::create(args.out.join("appearance.jsonl"))?);
    write_detections(&mut w, &appearance)?;
    w.flush()?;
    if args.flow {
        let mut w = BufWriter::new(File::create(args.out.join("flow.jsonl"))?);
        write_detections(&mut w, &flow)?;
        w.flush()?;
    }
    let mut w = BufWriter::new(File::create(args.out.join("gt.json"))?);
    write_ground_truth(&mut w, &ground_truth)?;
    w.flush()?;
    Ok(())
}
