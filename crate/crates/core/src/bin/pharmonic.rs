fn main() {
    let status = pharmonic::cli::run(std::env::args_os());
    std::process::exit(status as i32);
}
