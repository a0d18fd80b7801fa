"""Monotonic implicit field mapping for LiDAR scans.

Thin wrapper over the C++ core. The heavy lifting (sampling, latent octree,
decoder, training, meshing, metrics) happens in the `_mifmap` extension; this
package re-exports the operations with a stable import path.
"""

try:
    # Installed layout: the extension lives inside the package.
    from ._mifmap import (  # type: ignore  # noqa: F401
        default_config_json,
        evaluate,
        evaluate_checkpoint,
        loss_eikonal,
        loss_mono,
        loss_sign,
        loss_surface,
        marching_cubes,
        mesh,
        morton_decode,
        morton_encode,
        nearest_distances,
        pipeline,
        pipeline_scans,
        preprocess,
        scene_sdf,
        sigmoid_alpha,
        simulate,
        train,
        voxel_downsample,
    )
except ImportError:
    # Build-tree layout: extension on PYTHONPATH next to the package.
    from _mifmap import (  # noqa: F401
        default_config_json,
        evaluate,
        evaluate_checkpoint,
        loss_eikonal,
        loss_mono,
        loss_sign,
        loss_surface,
        marching_cubes,
        mesh,
        morton_decode,
        morton_encode,
        nearest_distances,
        pipeline,
        pipeline_scans,
        preprocess,
        scene_sdf,
        sigmoid_alpha,
        simulate,
        train,
        voxel_downsample,
    )

__all__ = [
    "default_config_json",
    "evaluate",
    "evaluate_checkpoint",
    "loss_eikonal",
    "loss_mono",
    "loss_sign",
    "loss_surface",
    "marching_cubes",
    "mesh",
    "morton_decode",
    "morton_encode",
    "nearest_distances",
    "pipeline",
    "pipeline_scans",
    "preprocess",
    "scene_sdf",
    "sigmoid_alpha",
    "simulate",
    "train",
    "voxel_downsample",
]
