"""Python bindings for the tongue-image diagnostic pipeline."""

import json
import os

from . import _core
from ._core import (
    DegeneracyError,
    DetectionError,
    DomainError,
    IoError,
    ShapeError,
    SvmModel,
    TongueError,
    ValidationError,
    crop_margins,
    detect_quad,
    fit_affine,
    invert_affine,
    kl_divergence,
    load_image,
    metrics,
    mutual_information,
    reference_quad,
    register_image,
    renyi_entropy,
    resize,
    save_image,
    select_layer,
    shannon_entropy,
    split_regions,
    svm_train,
    synth_generate,
    warp,
)


def run_pipeline(config, out, base_dir=None):
    """Runs the full pipeline and returns the report as a dict.

    `config` is a dict or a path to a JSON file; relative paths inside it
    resolve against the file's directory (or `base_dir`).
    """
    if isinstance(config, (str, os.PathLike)):
        path = os.fspath(config)
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        base_dir = base_dir or os.path.dirname(os.path.abspath(path))
    else:
        doc = config
    text = _core.run_pipeline_json(json.dumps(doc), os.fspath(base_dir or os.getcwd()), os.fspath(out))
    return json.loads(text)

