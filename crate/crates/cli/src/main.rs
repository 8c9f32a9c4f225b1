use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;

use swapfill::fmap::load_fmap;
use swapfill::image::MaskFormat;
use swapfill::metrics::evaluate;
use swapfill::pipeline::{inpaint_multiscale_traced, style_transfer};
use swapfill::{
    downsample_mask, rasterize_hole, Error, ErrorClass, FeatureMask, FeatureSpec, HoleSpec, Image, InpaintConfig,
    Mask, Matcher,
};

#[derive(Parser)]
#[command(name = "swapfill", version, about = "Exemplar-based inpainting by feature patch swapping")]
struct Cli {
    /// Worker threads (default: all cores). Does not change results.
    #[arg(long, global = true, env = "SWAPFILL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fill the hole of an image.
    Inpaint(InpaintArgs),
    /// Run the patch matcher on a feature map and write the assignment as JSON.
    Match(MatchArgs),
    /// Compare two images (mean l1 in percent, SSIM, optional hole SSIM).
    Metrics(MetricsArgs),
    /// Rasterize a hole specification into a PGM or PNG mask.
    MakeMask(MakeMaskArgs),
    /// Re-render a content image with patches from a style image.
    Style(StyleArgs),
}

#[derive(Args)]
#[group(id = "hole", required = true, multiple = false)]
struct HoleSource {
    /// Mask image, white = hole.
    #[arg(long, group = "hole")]
    mask: Option<PathBuf>,
    /// Centered square hole of side N.
    #[arg(long, value_name = "N", group = "hole")]
    center_hole: Option<usize>,
    /// Random rectangles, MIN,MAX,COUNT.
    #[arg(long, value_name = "MIN,MAX,COUNT", group = "hole")]
    random_holes: Option<String>,
}

#[derive(Args)]
struct InpaintArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    hole: HoleSource,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 2)]
    scales: usize,
    #[arg(long, default_value_t = Matcher::Conv)]
    matcher: Matcher,
    /// `builtin` or `fmap:PATH`.
    #[arg(long, default_value = "builtin")]
    features: FeatureArg,
    #[arg(long, default_value_t = 3)]
    patch_size: usize,
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    /// Blend band width in pixels.
    #[arg(long, default_value_t = 4)]
    blend: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the coarse fill that fed the finest scale.
    #[arg(long)]
    dump_coarse: Option<PathBuf>,
    /// Write the finest-scale patch assignment as JSON.
    #[arg(long)]
    dump_assignment: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    fmap: PathBuf,
    /// Hole mask at feature-grid or image resolution.
    #[arg(long)]
    fmask: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = Matcher::Conv)]
    matcher: Matcher,
    #[arg(long, default_value_t = 3)]
    patch_size: usize,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct MakeMaskArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// center:N, rect:Y,X,H,W or random:MIN,MAX,COUNT.
    #[arg(long)]
    spec: HoleSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StyleArgs {
    #[arg(long)]
    content: PathBuf,
    #[arg(long)]
    style: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 3)]
    patch_size: usize,
    #[arg(long, default_value = "builtin")]
    features: FeatureArg,
}

#[derive(Clone, Debug)]
enum FeatureArg {
    Builtin,
    Fmap(PathBuf),
}

impl FromStr for FeatureArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "builtin" => Ok(FeatureArg::Builtin),
            Some(("fmap", path)) if !path.is_empty() => Ok(FeatureArg::Fmap(path.into())),
            _ => Err(format!("expected `builtin` or `fmap:PATH`, got `{s}`")),
        }
    }
}

impl FeatureArg {
    fn spec(&self) -> FeatureSpec {
        match self {
            FeatureArg::Builtin => FeatureSpec::default(),
            FeatureArg::Fmap(path) => FeatureSpec::external(path),
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Engine(e) => match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Geometry => 3,
            },
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Output staged in a temp file next to its destination and renamed into
/// place only once every output of the command is ready.
struct Staged {
    files: Vec<(tempfile::NamedTempFile, PathBuf)>,
}

impl Staged {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, path: &Path, bytes: &[u8]) -> Outcome {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let io = |source| Failure::Engine(Error::Io { offset: 0, source });
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn commit(self) -> Outcome {
        for (tmp, path) in self.files {
            tmp.persist(&path)
                .map_err(|e| Failure::Engine(Error::Io { offset: 0, source: e.error }))?;
            info!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn json(value: &impl serde::Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

fn hole_mask(hole: &HoleSource, height: usize, width: usize, seed: u64) -> Outcome<Mask> {
    if let Some(path) = &hole.mask {
        let mask = Mask::load(path)?;
        if mask.dims() != (height, width) {
            return Err(Error::Shape(format!("mask is {:?} but image is {:?}", mask.dims(), (height, width))).into());
        }
        return Ok(mask);
    }
    let spec = match (&hole.center_hole, &hole.random_holes) {
        (Some(n), _) => HoleSpec::Center(*n),
        (None, Some(r)) => format!("random:{r}").parse::<HoleSpec>()?,
        (None, None) => unreachable!("clap requires one hole source"),
    };
    Ok(rasterize_hole(spec, height, width, seed)?)
}

fn inpaint(args: &InpaintArgs) -> Outcome {
    let image = Image::load(&args.input)?;
    let (h, w) = image.dims();
    let mask = hole_mask(&args.hole, h, w, args.seed)?;
    let cfg = InpaintConfig {
        patch_size: args.patch_size,
        scales: args.scales,
        matcher: args.matcher,
        features: args.features.spec(),
        blend_width: args.blend,
        iterations: args.iterations,
        seed: args.seed,
        ..InpaintConfig::default()
    };
    let (out, trace) = inpaint_multiscale_traced(&image, &mask, &cfg)?;
    for s in &trace.scales {
        info!("scale {}x{}: {} hole pixels, {} queries", s.height, s.width, s.hole_pixels, s.queries);
    }

    let mut staged = Staged::new();
    staged.add(&args.output, &out.encode_png()?)?;
    if let Some(path) = &args.dump_coarse {
        let coarse = trace.coarse.as_ref().unwrap_or(&image);
        staged.add(path, &coarse.encode_png()?)?;
    }
    if let Some(path) = &args.dump_assignment {
        staged.add(path, &json(&trace.assignment))?;
    }
    staged.commit()
}

fn run_match(args: &MatchArgs) -> Outcome {
    let map = load_fmap(&args.fmap)?;
    let mask = Mask::load(&args.fmask)?;
    let fmask = if mask.dims() == (map.height(), map.width()) {
        FeatureMask::from_fn(map.height(), map.width(), |y, x| mask.get(y, x))
    } else {
        downsample_mask(&mask, map.stride(), map.height(), map.width())?
    };
    let assignment = args.matcher.run(&map, &fmask, args.patch_size)?;
    info!("{} queries matched", assignment.len());
    let mut staged = Staged::new();
    staged.add(&args.out, &json(&assignment))?;
    staged.commit()
}

fn metrics(args: &MetricsArgs) -> Outcome {
    let a = Image::load(&args.a)?;
    let b = Image::load(&args.b)?;
    let mask = args.mask.as_ref().map(Mask::load).transpose()?;
    let report = evaluate(&a, &b, mask.as_ref())?;
    println!("{}", serde_json::to_string(&report).expect("serializable"));
    Ok(())
}

fn make_mask(args: &MakeMaskArgs) -> Outcome {
    let mask = rasterize_hole(args.spec, args.height, args.width, args.seed)?;
    let mut staged = Staged::new();
    staged.add(&args.out, &mask.encode(MaskFormat::from_path(&args.out))?)?;
    staged.commit()
}

fn style(args: &StyleArgs) -> Outcome {
    let content = Image::load(&args.content)?;
    let style_image = Image::load(&args.style)?;
    let cfg = InpaintConfig {
        patch_size: args.patch_size,
        features: args.features.spec(),
        ..InpaintConfig::default()
    };
    let out = style_transfer(&content, &style_image, &cfg)?;
    let mut staged = Staged::new();
    staged.add(&args.output, &out.encode_png()?)?;
    staged.commit()
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Inpaint(a) => inpaint(a),
        Command::Match(a) => run_match(a),
        Command::Metrics(a) => metrics(a),
        Command::MakeMask(a) => make_mask(a),
        Command::Style(a) => style(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
