//! Dataset generation: ingestion of clips and posed scenes, paired-sample
//! synthesis with manifests and a verification pass, and corpus quality
//! reports comparing simulated against real artifacts.

mod config;
mod dataset;
mod ingest;
mod report;

pub use config::{DatasetConfig, SourceSpec, DEFAULT_HOLDOUT_EVERY};
pub use dataset::{
    augment_global_offsets, build_dataset, collect_triplets, init_global_pool, resolve_threads, translate,
    verify_dataset, verify_sample, BuildReport, Manifest, ManifestHeader, ManifestLine, PairedSample, MANIFEST_FILE,
    SAMPLES_DIR, THREADS_ENV,
};
pub use ingest::{
    holdout_indices, ingest_posed_scene, ingest_triplets, list_images, load_posed_scene, PosedScene, Triplet,
    TripletSource,
};
pub use report::{
    compare_stats, corpus_stats, find_images, gradient_magnitudes, local_variances, quality_report,
    quality_report_images, wasserstein1, CorpusStats, Distances, Histogram, QualityReport, ReportConfig,
};
