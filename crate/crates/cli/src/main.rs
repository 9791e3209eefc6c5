//! `amrkit`: the k-mer phenotype prediction pipeline as one executable.

mod args;
mod commands;
mod config;

use std::fs;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;

fn fail(e: &amrkit::Error) -> ExitCode {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", e.code());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let mut cli_command = Cli::command();
    let matches = match cli_command.try_get_matches_from_mut(argv) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let command = cli.command;
    let threads = command.common().threads;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("global thread pool is configured once");
    }
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let sub_command = cli_command
        .find_subcommand(name)
        .expect("matched subcommand exists");
    let manifest = config::manifest(sub_command, sub);
    let result = commands::run(&command).and_then(|()| {
        let path = command
            .common()
            .out_dir
            .join(format!("{}.manifest", command.name()));
        fs::write(path, manifest).map_err(amrkit::Error::from)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
