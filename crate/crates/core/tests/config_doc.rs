use campanato_core::experiment::ExperimentConfig;

#[test]
fn config_reference_page_matches_the_defaults() {
    let page = include_str!("../../../docs/CONFIG.md");
    let body = page.split("```toml\n").nth(1).and_then(|rest| rest.split("```").next()).expect("toml block");
    assert_eq!(body, ExperimentConfig::reference(), "run scripts/gen-config-doc.sh");
    assert_eq!(ExperimentConfig::from_toml(body).unwrap(), ExperimentConfig::default());
}
