//! Regenerates `fixtures/reference_norms.json` from the multi-start oracle.
//!
//! cargo run --release -p projnorm --example reference_norms > fixtures/reference_norms.json

use projnorm::states::StateSpec;
use projnorm::verify::{multi_start_oracle, ReferenceNorm, ORACLE_STARTS};
use projnorm::{Field, FitConfig64, FitMode, Tensor64};

const ORACLE_SEED: u64 = 1000;

fn main() {
    let mut out = Vec::new();
    for name in ["ghz", "w", "psi_b"] {
        for field in [Field::Real, Field::Complex] {
            let target: Tensor64 = StateSpec::new(name, field).build().expect("named state");
            let config = FitConfig64 {
                seed: ORACLE_SEED,
                field: Some(field),
                ..FitConfig64::default()
            };
            let o = multi_start_oracle(&target, ORACLE_STARTS, 2, &config, FitMode::General)
                .expect("oracle run");
            let converged = o.runs.iter().filter(|r| r.converged).count();
            eprintln!(
                "{name:<6} {field:<7} norm={:.9} rank={} seed={} converged={converged}/{}",
                o.norm,
                o.rank,
                o.seed,
                o.runs.len()
            );
            out.push(ReferenceNorm {
                state: name.to_string(),
                field,
                norm: o.norm,
                rank: o.rank,
                oracle_seed: o.seed,
                n_starts: ORACLE_STARTS,
            });
        }
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializable")
    );
}
