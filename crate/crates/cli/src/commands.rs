use std::fs;
use std::path::Path;

use terraslope_core::correction::{correct as apply_kernel, fit_scale, GaussianKernel};
use terraslope_core::metrics::evaluate;
use terraslope_core::partition::{equal_partition, pixel_range, slope_guided_partition};
use terraslope_core::raster::{encode_ascii_grid, encode_pgm, read_ascii_grid};
use terraslope_core::simulate::{ablation_report, generate_terrain, padded_range, run_pipeline};
use terraslope_core::slope::{slope_direction_map, slope_factor_map, slope_map};
use terraslope_core::HeightGrid;

use crate::config::{GroundTruth, SimConfig};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;
use crate::{
    CorrectArgs, DirectionArgs, EvalArgs, PartitionArgs, RenderArgs, SimulateArgs, SlopeArgs,
};

fn read(path: &Path) -> CliResult<HeightGrid> {
    Ok(read_ascii_grid(path)?)
}

fn check_range(lo: f64, hi: f64) -> CliResult<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "render range needs lo < hi, got [{lo}, {hi}]"
        )))
    }
}

pub fn slope(args: SlopeArgs) -> CliResult<()> {
    if let Some(r) = &args.pgm {
        check_range(r[0], r[1])?;
    }
    let grid = read(&args.input)?;
    let slope = slope_map(&grid);
    let dirs = slope_direction_map(&grid).to_height_grid(grid.cell_size())?;

    let mut out = Outputs::default();
    let slope_path = args
        .slope_out
        .clone()
        .unwrap_or_else(|| args.out_dir.join("slope.asc"));
    out.add(slope_path, encode_ascii_grid(&slope));
    out.add(args.out_dir.join("direction.asc"), encode_ascii_grid(&dirs));
    if let Some(r) = &args.pgm {
        out.add(
            args.out_dir.join("slope.pgm"),
            encode_pgm(&slope, r[0], r[1])?,
        );
        out.add(
            args.out_dir.join("direction.pgm"),
            encode_pgm(&dirs, 0.0, 8.0)?,
        );
    }
    out.commit()
}

pub fn direction(args: DirectionArgs) -> CliResult<()> {
    let grid = read(&args.input)?;
    let dirs = slope_direction_map(&grid).to_height_grid(grid.cell_size())?;
    let mut out = Outputs::default();
    out.add(&args.out, encode_ascii_grid(&dirs));
    if let Some(pgm) = &args.pgm {
        out.add(pgm, encode_pgm(&dirs, 0.0, 8.0)?);
    }
    out.commit()
}

pub fn partition(args: PartitionArgs) -> CliResult<()> {
    if args.planes < 2 {
        return Err(CliError::Validation(format!(
            "--planes must be at least 2, got {}",
            args.planes
        )));
    }
    let height = read(&args.height)?;
    let sigma = match &args.sigma {
        Some(p) => read(p)?,
        None => height.map_valid(|_, _| 0.0)?,
    };
    let ranges = pixel_range(&height, &sigma, args.sigma_floor)?;
    let planes = if args.equal {
        equal_partition(&ranges, args.planes)?
    } else {
        slope_guided_partition(&height, &ranges, &slope_factor_map(&height), args.planes)?
    };
    let mut out = Outputs::default();
    for k in 0..planes.plane_count() {
        out.add(
            args.out_dir.join(format!("plane_{k:03}.asc")),
            encode_ascii_grid(&planes.plane_grid(k)?),
        );
    }
    out.commit()?;
    println!("planes={}", planes.plane_count());
    println!("max_spacing={:.6}", planes.max_spacing_overall());
    Ok(())
}

pub fn correct(args: CorrectArgs) -> CliResult<()> {
    let grid = read(&args.input)?;
    let kernel = match &args.fit_target {
        Some(target) => fit_scale(&grid, &read(target)?)?,
        None => GaussianKernel::new(args.scale)?,
    };
    let mut out = Outputs::default();
    out.add(&args.out, encode_ascii_grid(&apply_kernel(&grid, &kernel)));
    out.commit()?;
    if args.fit_target.is_some() {
        println!("scale={:.6}", kernel.scale());
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    let report = evaluate(&read(&args.est)?, &read(&args.gt)?, &args.thresholds)?;
    if let Some(csv) = &args.csv {
        let mut out = Outputs::default();
        out.add(csv, report.to_csv());
        out.commit()?;
    }
    print!("{}", report.to_text());
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let config = SimConfig::parse(&text)?;
    let gt = match &config.ground_truth {
        GroundTruth::Synthetic { spec, cell_size } => {
            let g = generate_terrain(spec)?;
            HeightGrid::new(g.rows(), g.cols(), *cell_size, g.values().to_vec())?
        }
        GroundTruth::File(path) => {
            let path = match args.config.parent() {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            read(&path)?
        }
    };
    let range = padded_range(&gt, config.range_margin)?;
    let result = run_pipeline(&gt, range, &config.stages, config.seed)?;

    let mut out = Outputs::default();
    let dir = &args.out_dir;
    out.add(dir.join("gt.asc"), encode_ascii_grid(&gt));
    out.add(dir.join("gt.pgm"), encode_pgm(&gt, range.0, range.1)?);
    for (name, bytes) in result.artifacts(range)? {
        out.add(dir.join(name), bytes);
    }
    out.add(dir.join("report.csv"), result.report_csv());
    out.add(dir.join("report.txt"), result.report_text());
    if args.ablation {
        let table = ablation_report(&gt, range, &config.stages, &config.ablation_seeds)?;
        out.add(dir.join("ablation.csv"), table.to_csv());
    }
    out.commit()?;
    print!("{}", result.report_text());
    Ok(())
}

pub fn render(args: RenderArgs) -> CliResult<()> {
    let grid = read(&args.input)?;
    let (vmin, vmax) = grid.valid_range().unwrap_or((0.0, 1.0));
    let lo = args.lo.unwrap_or(vmin);
    let mut hi = args.hi.unwrap_or(vmax);
    if args.hi.is_none() && hi <= lo {
        hi = lo + 1.0;
    }
    check_range(lo, hi)?;
    let mut out = Outputs::default();
    out.add(&args.out, encode_pgm(&grid, lo, hi)?);
    out.commit()
}
