fn main() {
    match metricforge_cli::run(std::env::args_os()) {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit);
        }
    }
}
