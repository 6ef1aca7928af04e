"""PCA-based dataset harmonization and segmentation evaluation for breast
ultrasound imaging.

The package covers the full loop: PNG ingestion into flat data matrices,
per-dataset PCA fitting and reconstruction, segmentation quality metrics,
paired and Welch t statistics, and the orchestration of a many-dataset
cross-evaluation experiment driven by file manifests.
"""

__version__ = "0.1.0"
