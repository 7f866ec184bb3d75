mod args;
mod commands;

use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{}", e);
            std::process::exit(0);
        }
        Err(e) => {
            eprint!("{}", e);
            std::process::exit(commands::USAGE);
        }
    };
    let json = cli.json;
    match commands::run(cli.command) {
        Ok(out) => {
            if json {
                let mut value = out.json;
                value["schema"] = serde_json::json!(commands::SCHEMA);
                println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            } else {
                print!("{}", out.human);
            }
            std::process::exit(out.code);
        }
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(commands::USAGE);
        }
    }
}
