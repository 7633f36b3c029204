use clap::Parser;
use std::path::PathBuf;
use std::sync::Mutex;
use twistor_cli::runner::{self, RunOverrides};
use twistor_cli::scenario::{Scenario, SCHEMA_VERSION};
use twistor_cli::catalog;

/// Harmonic bundle toolkit: runs scenario files and built-in catalog
/// entries, writing JSON reports and CSV convergence tables.
#[derive(Parser, Debug)]
#[command(name = "twistor", version, about)]
struct Cli {
    /// Scenario JSON file to run.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Run one built-in catalog entry by name.
    #[arg(long, value_name = "NAME")]
    catalog_entry: Option<String>,

    /// Print the built-in catalog and exit.
    #[arg(long)]
    list_catalog: bool,

    /// Run every built-in catalog entry.
    #[arg(long)]
    run_catalog: bool,

    /// Output directory for reports.
    #[arg(long, value_name = "DIR", default_value = "reports")]
    out: PathBuf,

    /// Override the residual tolerance.
    #[arg(long, value_name = "X")]
    tol_residual: Option<f64>,

    /// Override the quadrature grid as radial,angular orders.
    #[arg(long, value_name = "R,A", value_parser = parse_grid)]
    grid: Option<[usize; 2]>,

    /// Override the scenario seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Number of worker threads for catalog runs.
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected R,A but got {s:?}"));
    }
    let r = parts[0].trim().parse::<usize>().map_err(|e| e.to_string())?;
    let a = parts[1].trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok([r, a])
}

enum RunStatus {
    Pass,
    Fail,
    InputError(String),
}

fn run_one(scenario: &Scenario, stem: &str, cli: &Cli, overrides: &RunOverrides) -> RunStatus {
    let resolved = match runner::resolve(scenario, overrides) {
        Ok(r) => r,
        Err(e) => return RunStatus::InputError(e.0),
    };
    let report = match runner::execute(&resolved) {
        Ok(r) => r,
        Err(e) => return RunStatus::InputError(e.0),
    };
    match runner::write_report(&report, &cli.out, stem) {
        Ok(_) => {}
        Err(e) => return RunStatus::InputError(format!("writing report for {stem}: {e}")),
    }
    if report.pass {
        RunStatus::Pass
    } else {
        RunStatus::Fail
    }
}

fn catalog_scenario(name: &str) -> Scenario {
    let mut s = Scenario {
        schema_version: SCHEMA_VERSION,
        task: None,
        catalog_ref: Some(name.to_string()),
        seed: None,
        grid: None,
        tolerances: None,
        inputs: Default::default(),
    };
    s.task = None;
    s
}

fn main() {
    let cli = Cli::parse();
    let overrides = RunOverrides {
        tol_residual: cli.tol_residual,
        grid: cli.grid,
        seed: cli.seed,
    };

    if cli.list_catalog {
        let all = catalog::entries();
        for e in &all {
            println!("{:<32} {}", e.name, e.description);
        }
        println!("{} entries", all.len());
        return;
    }

    let mut statuses: Vec<(String, RunStatus)> = Vec::new();

    if let Some(path) = &cli.scenario {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario")
            .to_string();
        let status = match std::fs::read_to_string(path) {
            Ok(text) => match serde_json::from_str::<Scenario>(&text) {
                Ok(s) => run_one(&s, &stem, &cli, &overrides),
                Err(e) => RunStatus::InputError(format!("{}: {e}", path.display())),
            },
            Err(e) => RunStatus::InputError(format!("{}: {e}", path.display())),
        };
        statuses.push((stem, status));
    }

    if let Some(name) = &cli.catalog_entry {
        let status = run_one(&catalog_scenario(name), name, &cli, &overrides);
        statuses.push((name.clone(), status));
    }

    if cli.run_catalog {
        let entries = catalog::entries();
        let jobs = cli.jobs.max(1).min(entries.len().max(1));
        let mut slots: Vec<Option<RunStatus>> = Vec::new();
        slots.resize_with(entries.len(), || None);
        let next = Mutex::new(0usize);
        let slots = Mutex::new(slots);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let idx = {
                        let mut guard = next.lock().unwrap();
                        let idx = *guard;
                        if idx >= entries.len() {
                            break;
                        }
                        *guard += 1;
                        idx
                    };
                    let name = &entries[idx].name;
                    let status = run_one(&catalog_scenario(name), name, &cli, &overrides);
                    slots.lock().unwrap()[idx] = Some(status);
                });
            }
        });
        for (e, slot) in entries.iter().zip(slots.into_inner().unwrap()) {
            let status = slot.unwrap_or_else(|| {
                RunStatus::InputError(format!("{} never ran", e.name))
            });
            statuses.push((e.name.clone(), status));
        }
    }

    if statuses.is_empty() {
        eprintln!("nothing to do: pass --scenario, --catalog-entry, --run-catalog, or --list-catalog");
        std::process::exit(2);
    }

    let mut code = 0;
    for (name, status) in &statuses {
        match status {
            RunStatus::Pass => println!("{name}: pass"),
            RunStatus::Fail => {
                println!("{name}: fail");
                if code == 0 {
                    code = 1;
                }
            }
            RunStatus::InputError(msg) => {
                eprintln!("{name}: error: {msg}");
                code = 2;
            }
        }
    }
    std::process::exit(code);
}
