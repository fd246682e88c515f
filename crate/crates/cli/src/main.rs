use clap::Parser;
use tailindex_cli::args::Cli;

fn main() {
    match tailindex_cli::run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
