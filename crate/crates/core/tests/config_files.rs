//! The published schema and sample configs stay in sync with the loader.

use std::collections::BTreeSet;

use polyglot_forge::mixer::plan_mix_with;
use polyglot_forge::pipeline::{Overrides, PipelineConfig};
use serde_json::Value;

const ROOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");

fn read_json(rel: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(format!("{ROOT}/{rel}")).unwrap()).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn schema_properties_match_config_fields() {
    let schema = read_json("schema/pipeline-config.schema.json");
    let defaults = serde_json::to_value(PipelineConfig::default()).unwrap();
    let props = &schema["properties"];
    assert_eq!(keys(props), keys(&defaults));
    for section in ["clean", "code_rules", "detect", "chunk", "mix"] {
        assert_eq!(
            keys(&props[section]["properties"]),
            keys(&defaults[section]),
            "{section}"
        );
    }
    let bucket = &schema["$defs"]["bucket"]["properties"];
    assert_eq!(keys(bucket), keys(&defaults["code_rules"]["popular"]));
}

#[test]
fn schema_defaults_match_code_defaults() {
    let schema = read_json("schema/pipeline-config.schema.json");
    let defaults = serde_json::to_value(PipelineConfig::default()).unwrap();
    for section in ["clean", "detect", "chunk"] {
        for (k, spec) in schema["properties"][section]["properties"].as_object().unwrap() {
            assert_eq!(spec["default"], defaults[section][k], "{section}.{k}");
        }
    }
    for k in ["seed", "threads", "output_dir"] {
        assert_eq!(schema["properties"][k]["default"], defaults[k], "{k}");
    }
}

#[test]
fn reference_mix_config_loads() {
    let text = std::fs::read_to_string(format!("{ROOT}/configs/reference-mix.json")).unwrap();
    let cfg = PipelineConfig::load(Some(&text), &Overrides::default()).unwrap();
    assert_eq!(cfg.mix.rows.len(), 24);
    let plan = plan_mix_with(&cfg.mix.rows, cfg.mix.policy).unwrap();
    assert_eq!(plan.discrepancies.len(), 1);
}
