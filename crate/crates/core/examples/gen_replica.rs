// SPDX-License-Identifier: Apache-2.0

//! Prints the fixture scenario: `cargo run --example gen_replica > fixtures/tv_replica.scenario`.

fn main() {
    let sc = spectra_lab::replica::scenario(&spectra_lab::replica::ReplicaOptions::default());
    print!("{}", sc.to_text());
}
