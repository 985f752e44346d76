fn main() {
    std::process::exit(plaquemesh::cli::main())
}
