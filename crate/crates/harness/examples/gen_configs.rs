fn main() {
    for profile in ["desk", "paper"] {
        let cfg = harness::config::ExperimentConfig::preset(
            profile,
            7,
            std::path::PathBuf::from("runs"),
        )
        .unwrap();
        cfg.save(std::path::Path::new(&format!("configs/{profile}.json"))).unwrap();
    }
    println!("configs written");
}
