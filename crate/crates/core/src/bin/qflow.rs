fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = std::env::var_os("QFLOW_OUT").map(std::path::PathBuf::from);
    std::process::exit(qflow::cli::main_with(&args, out));
}
