use std::io::Write;

fn main() {
    let mut out = std::io::stdout().lock();
    let code = ergo_cli::dispatch(std::env::args_os(), &mut std::io::stdin().lock(), &mut out, &mut std::io::stderr());
    let _ = out.flush();
    std::process::exit(code);
}
