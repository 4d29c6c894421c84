"""Synthetic handwritten text generation and recognition.

Images are (height, width) uint8 numpy arrays. Ink masks use non-zero for
ink; gray images are dark ink on a light ground.
"""

from ._synthhw import (
    SynthhwError,
    count_components,
    data_dir,
    distort,
    generate,
    phog,
    rasterize,
    read_manifest,
    render,
    run_experiment,
    skeletonize,
    split_zones,
    to_gray,
    vectorize,
    window_features,
)

__all__ = [
    "SynthhwError",
    "count_components",
    "data_dir",
    "distort",
    "generate",
    "phog",
    "rasterize",
    "read_manifest",
    "render",
    "run_experiment",
    "skeletonize",
    "split_zones",
    "to_gray",
    "vectorize",
    "window_features",
]
