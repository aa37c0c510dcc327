"""Hyperspectral data pipeline"""

from data.hsi_cube import IGNORE_LABEL, HsiCube
from data.patches import PatchSet, extract_patches, reassemble_patches, split_patches
from data.pca import PcaModel, pca_apply, pca_fit, pca_inverse
from data.synthetic import synth_scene

__all__ = [
    "IGNORE_LABEL",
    "HsiCube",
    "PatchSet",
    "extract_patches",
    "reassemble_patches",
    "split_patches",
    "PcaModel",
    "pca_apply",
    "pca_fit",
    "pca_inverse",
    "synth_scene",
]
