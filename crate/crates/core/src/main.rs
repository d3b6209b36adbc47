use std::process::ExitCode;
use wmstat::harness::{self, USAGE};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h") {
        println!("{USAGE}");
        return if args.is_empty() { ExitCode::from(2) } else { ExitCode::SUCCESS };
    }
    let result = harness::parse_args(&args).and_then(|cfg| {
        let table = harness::run(&cfg)?;
        if cfg.out.is_none() {
            print!("{}", table.to_csv());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wmstat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
