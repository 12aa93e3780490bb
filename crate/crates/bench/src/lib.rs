//! Fixtures shared by the benchmarks in `benches/`.

use mstl_core::datasets::{generate_naval, generate_synthetic, Dataset, NavalGeometry};
use mstl_core::network::{init_params, ArchConfig, DataStats, ModelParams};

pub fn naval(per_class: usize) -> Dataset {
    generate_naval([per_class; 3], 1, &NavalGeometry::default()).expect("naval generation")
}

pub fn synthetic(per_class: usize) -> Dataset {
    generate_synthetic(per_class, 1).expect("synthetic generation")
}

/// Freshly initialized network sized for `data`.
pub fn params_for(data: &Dataset, attributes: usize, templates: usize) -> ModelParams {
    let stats = DataStats::from_signals(data.signals()).expect("nonempty data");
    let mut arch = ArchConfig::new(attributes, data.dim().expect("nonempty data"), data.signal_len().expect("nonempty data"));
    arch.templates = templates;
    arch.scale = stats.scale();
    init_params(&arch, 0, Some(&stats)).expect("valid config")
}
