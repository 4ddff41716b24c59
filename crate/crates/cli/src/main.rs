fn main() {
    std::process::exit(minosc::app::run_from_args());
}
