use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use genre_nb::correlation::{compute_correlation, GenreCorrelationMatrix};
use genre_nb::dataset::{self, canonical, Dataset};
use genre_nb::evaluation::{
    cell_seed, classify, mix, split, CorrelationSource, EvaluationReport, Evaluator, SplitSpec,
    Verdict,
};
use genre_nb::model::{train_preference_model, FeatureVector, PreferenceModel};

use crate::config::RunConfig;
use crate::plot::{self, Curve, PlotBackend};
use crate::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
fn write_atomically(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> genre_nb::Result<()>,
) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let mut out = create(&tmp)?;
    body(&mut out).map_err(CliError::lib(&tmp))?;
    out.flush().map_err(|e| CliError::io(&tmp, e))?;
    drop(out);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn load_dataset(config: &RunConfig) -> Result<(PathBuf, Dataset), CliError> {
    let path = config.dataset_path();
    let ds = canonical::read(open(&path)?).map_err(CliError::lib(&path))?;
    Ok((path, ds))
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or_else(|| {
        CliError::Usage(format!(
            "--{flag} (or `{flag}` in the config file) is required"
        ))
    })
}

fn preamble(config: &RunConfig, command: &str) -> Vec<String> {
    let mut lines = config.provenance();
    lines.insert(0, format!("command {command}"));
    lines
}

pub fn ingest(config: &RunConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let data = required(&config.data, "data")?;
    let items = required(&config.items, "items")?;
    let names = match &config.genres {
        Some(path) => Some(dataset::parse_genre_names(open(path)?).map_err(CliError::lib(path))?),
        None => None,
    };
    let events = dataset::parse_ratings(open(data)?).map_err(CliError::lib(data))?;
    let genres = dataset::parse_items(open(items)?, names).map_err(CliError::lib(items))?;
    let ds = Dataset::new(events, genres)?;
    let report = ds.validate();

    let out = out.unwrap_or_else(|| config.out.join("dataset.tsv"));
    write_atomically(&out, |w| {
        canonical::write_annotated(&ds, w, &preamble(config, "ingest"))
    })?;

    println!("{}", report.summary());
    println!("minimum ratings per user: {}", report.min_ratings_per_user);
    println!(
        "unknown-only movies excluded: {}",
        report.unknown_only_movies
    );
    for a in &report.anomalies {
        println!("anomaly: {a}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub struct TrainRequest {
    pub movies: Option<Vec<u32>>,
    pub train_fraction: Option<f64>,
    pub out: Option<PathBuf>,
    pub export_matrices: bool,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

pub fn train(config: &RunConfig, req: TrainRequest) -> Result<(), CliError> {
    let (_, ds) = load_dataset(config)?;
    let labeled = ds.genres.labeled_movies();
    for &rating in &config.ratings {
        let movies = match (&req.movies, req.train_fraction) {
            (Some(m), _) => m.clone(),
            (None, Some(f)) => {
                let spec = SplitSpec {
                    train_fraction: f,
                    seed: cell_seed(config.seed, rating, f),
                    repetition: 0,
                };
                split(&labeled, &spec)?.train
            }
            (None, None) => labeled.clone(),
        };
        let matrix = ds.indicator(rating);
        let model = train_preference_model(&matrix, &ds.genres, &movies, &config.train_options())?;

        let path = match &req.out {
            Some(p) if config.ratings.len() == 1 => p.clone(),
            Some(p) => with_suffix(p, &format!(".r{rating}")),
            None => config.out.join(format!("model.r{rating}.txt")),
        };
        let mut comments = preamble(config, "train");
        if let Some(f) = req.train_fraction {
            comments.push(format!("train_fraction {f}"));
        }
        write_atomically(&path, |w| model.write_annotated(w, &comments))?;
        println!(
            "rating {rating}: trained on {} movies, wrote {}",
            model.training_movies(),
            path.display()
        );
        if !model.empty_genres().is_empty() {
            let names: Vec<&str> = model
                .empty_genres()
                .iter()
                .map(|&g| model.genre_names()[g].as_str())
                .collect();
            println!(
                "rating {rating}: no training movie for {}",
                names.join(", ")
            );
        }

        if req.export_matrices {
            let users = with_suffix(&path, ".user_prob").with_extension("csv");
            write_atomically(&users, |w| model.write_user_prob_csv(w))?;
            let likes = with_suffix(&path, ".movie_loglik").with_extension("csv");
            write_atomically(&likes, |w| {
                model.write_movie_likelihood_csv(&matrix, &labeled, w)
            })?;
            println!(
                "rating {rating}: wrote {} and {}",
                users.display(),
                likes.display()
            );
        }
    }
    Ok(())
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn predict(
    config: &RunConfig,
    model_path: &Path,
    movies: Option<Vec<u32>>,
    csv: bool,
) -> Result<(), CliError> {
    let model = PreferenceModel::read(open(model_path)?).map_err(CliError::lib(model_path))?;
    let (ds_path, ds) = load_dataset(config)?;
    if model.num_users() != ds.num_users() {
        return Err(CliError::Lib {
            path: Some(ds_path),
            source: genre_nb::Error::Contract(format!(
                "model was trained on {} users, dataset has {}",
                model.num_users(),
                ds.num_users()
            )),
        });
    }
    if model.genre_names() != ds.genres.genre_names() {
        return Err(
            genre_nb::Error::Contract("model and dataset genres differ".to_string()).into(),
        );
    }
    let labeled = ds.genres.labeled_movies();
    let correlation: Option<GenreCorrelationMatrix> = if labeled.is_empty() {
        None
    } else {
        Some(compute_correlation(&ds.genres, &labeled, config.estimator)?)
    };
    let matrix = ds.indicator(model.rating());
    let movies = movies.unwrap_or_else(|| (1..=ds.num_movies() as u32).collect());
    let names = model.genre_names();

    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let w = |e: std::io::Error| CliError::io(Path::new("<stdout>"), e);
    if csv {
        write!(out, "movie,predicted,posterior,verdict").map_err(w)?;
        for n in names {
            write!(out, ",{}", csv_quote(&format!("p_{n}"))).map_err(w)?;
        }
        writeln!(out).map_err(w)?;
    }
    let mut failures = 0;
    for &movie in &movies {
        if movie == 0 || movie as usize > ds.num_movies() {
            failures += 1;
            out.flush().map_err(w)?;
            eprintln!("movie {movie}: unknown movie");
            continue;
        }
        let features = FeatureVector::from_matrix(&matrix, movie);
        let post = model.posterior(&features)?;
        let g = post.argmax();
        let verdict = match (ds.genres.genres_of(movie), &correlation) {
            (Ok(truth), Some(c)) if !truth.is_empty() => {
                match classify(c, g, truth, config.threshold)? {
                    Verdict::Exact => "exact",
                    Verdict::Similar => "similar",
                    Verdict::Wrong => "wrong",
                }
            }
            _ => "unlabeled",
        };
        if csv {
            write!(
                out,
                "{movie},{},{:.6},{verdict}",
                csv_quote(&names[g]),
                post.probabilities[g]
            )
            .map_err(w)?;
            for p in &post.probabilities {
                write!(out, ",{p:.6}").map_err(w)?;
            }
            writeln!(out).map_err(w)?;
        } else {
            let title = ds.genres.title(movie).unwrap_or("");
            let truth = ds
                .genres
                .genres_of(movie)
                .map(|t| {
                    t.iter()
                        .map(|&i| names[i].as_str())
                        .collect::<Vec<_>>()
                        .join("|")
                })
                .unwrap_or_default();
            writeln!(
                out,
                "movie {movie} {title}: {} {:.4} [{verdict}] true={truth} rated_by={}",
                names[g],
                post.probabilities[g],
                features.rated_users().len()
            )
            .map_err(w)?;
            let dist: Vec<String> = names
                .iter()
                .zip(&post.probabilities)
                .map(|(n, p)| format!("{n}={p:.4}"))
                .collect();
            writeln!(out, "  posterior {}", dist.join(" ")).map_err(w)?;
        }
    }
    out.flush().map_err(w)?;
    if failures > 0 && failures == movies.len() {
        return Err(CliError::AllFailed(format!(
            "none of the {failures} requested movie(s) could be predicted"
        )));
    }
    Ok(())
}

pub fn evaluate(config: &RunConfig, runs: bool, backend: &dyn PlotBackend) -> Result<(), CliError> {
    let (_, ds) = load_dataset(config)?;
    let evaluator = Evaluator::new(&ds, config.eval_options())?;
    let dir = &config.out;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let pre = preamble(config, "evaluate");
    let report_path = dir.join("report.csv");
    let runs_path = dir.join("runs.csv");

    let mut report = EvaluationReport {
        master_seed: config.seed,
        repetitions: config.repetitions,
        cells: Vec::new(),
        runs: Vec::new(),
    };
    println!("rating  fraction  exact            with similar");
    for &rating in &config.ratings {
        let part = evaluator.learning_curve(
            &[rating],
            &config.fractions,
            config.repetitions,
            config.seed,
        )?;
        for c in &part.cells {
            println!(
                "{rating:>6}  {:>8}  {:5.1}% ± {:4.1}   {:5.1}% ± {:4.1}",
                c.train_fraction,
                100.0 * c.exact_mean,
                100.0 * c.exact_std,
                100.0 * c.similar_mean,
                100.0 * c.similar_std
            );
        }
        report.cells.extend(part.cells);
        report.runs.extend(part.runs);
        // rewritten after every rating so an interrupted run keeps what is done
        write_atomically(&report_path, |w| report.write_csv(w, &pre))?;
        if runs {
            write_atomically(&runs_path, |w| report.write_runs_csv(w, &pre))?;
        }
    }

    for &rating in &config.ratings {
        let mut cells: Vec<_> = report.cells.iter().filter(|c| c.rating == rating).collect();
        cells.sort_by(|a, b| a.train_fraction.total_cmp(&b.train_fraction));
        let curve = Curve {
            title: format!("rating {rating}: accuracy vs training fraction"),
            cells,
        };
        plot::emit(backend, dir, &format!("curve_r{rating}"), &curve, &pre)
            .map_err(|e| CliError::io(dir, e))?;
    }
    println!("wrote {}", report_path.display());
    Ok(())
}

pub fn correlate(
    config: &RunConfig,
    train_fraction: f64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let (_, ds) = load_dataset(config)?;
    let labeled = ds.genres.labeled_movies();
    let mut pre = preamble(config, "correlate");
    let movies = match config.correlation_source {
        CorrelationSource::Full => labeled,
        CorrelationSource::Training => {
            pre.push(format!("train_fraction {train_fraction}"));
            let spec = SplitSpec {
                train_fraction,
                seed: mix(config.seed, (train_fraction * 1e6).round() as u64),
                repetition: 0,
            };
            split(&labeled, &spec)?.train
        }
    };
    let matrix = compute_correlation(&ds.genres, &movies, config.estimator)?;
    let path = out.unwrap_or_else(|| config.out.join("correlation.csv"));
    write_atomically(&path, |w| {
        for line in &pre {
            writeln!(w, "# {line}")?;
        }
        matrix.write_csv(w)
    })?;
    println!(
        "{}x{} correlation over {} movies, wrote {}",
        matrix.size(),
        matrix.size(),
        movies.len(),
        path.display()
    );
    Ok(())
}
