"""Python access to the dragan C++ core."""

from ._dragan import (
    CheckpointError,
    ManifestError,
    Model,
    background_psnr,
    default_config,
    generate_dataset,
    gradcheck,
    load_image,
    make_mask,
    parse_config,
    read_manifest,
    residual_attention,
    save_image,
)

__all__ = [
    "CheckpointError",
    "ManifestError",
    "Model",
    "background_psnr",
    "default_config",
    "generate_dataset",
    "gradcheck",
    "load_image",
    "make_mask",
    "parse_config",
    "read_manifest",
    "residual_attention",
    "save_image",
]
