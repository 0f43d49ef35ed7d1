use std::io;

fn main() {
    let code = simpson_symplectic::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
