"""
Pipeline package: dataset manifest, provenance records and the stage runner.
"""

from src.pipeline.manifest import DatasetManifest, ManifestItem, read_manifest, sigma_label, write_manifest
from src.pipeline.provenance import file_sha256, record_provenance
from src.pipeline.stages import STAGES, HazardPipeline, run_seeds, write_report

__all__ = [
    'DatasetManifest', 'ManifestItem', 'read_manifest', 'sigma_label', 'write_manifest',
    'file_sha256', 'record_provenance',
    'STAGES', 'HazardPipeline', 'run_seeds', 'write_report',
]
