"""Voronoi-based surface reconstruction from unsigned distance fields.

Thin wrapper around the native ``_voroudf`` module. When the package is not
installed as a wheel, ``VOROUDF_MODULE_DIR`` may point at a build tree that
contains the compiled module.
"""

import json as _json
import os as _os
import sys as _sys

_module_dir = _os.environ.get("VOROUDF_MODULE_DIR")
if _module_dir and _module_dir not in _sys.path:
    _sys.path.insert(0, _module_dir)

from _voroudf import (  # noqa: E402
    Field,
    ReconConfig,
    VoroudfError,
    euler_characteristic,
    evaluate as _evaluate_json,
    field_from_json,
    mesh_field,
    preset_field,
    preset_locus,
    preset_names,
    read_mesh,
    reconstruct as _reconstruct_raw,
    solid_tet_count,
    write_mesh,
)

__all__ = [
    "Field",
    "ReconConfig",
    "VoroudfError",
    "euler_characteristic",
    "evaluate",
    "field_from_json",
    "mesh_field",
    "preset_field",
    "preset_locus",
    "preset_names",
    "read_mesh",
    "reconstruct",
    "solid_tet_count",
    "write_mesh",
]


def reconstruct(field, config=None):
    """Run the full pipeline; returns (vertices, faces, manifest dict)."""
    if config is None:
        config = ReconConfig()
    vertices, faces, manifest = _reconstruct_raw(field, config)
    return vertices, faces, _json.loads(manifest)


def evaluate(mesh_a, mesh_b, **kwargs):
    """Metric report for two (vertices, faces) pairs, as a dict."""
    va, fa = mesh_a
    vb, fb = mesh_b
    return _json.loads(_evaluate_json(va, fa, vb, fb, **kwargs))
