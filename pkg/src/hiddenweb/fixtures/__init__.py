"""Synthetic hidden-web book shops served over loopback, with known ground truth."""

from .manifest import (ManifestError, SiteManifest, SiteSpec, default_manifest,
                       default_manifest_path, load_manifest)
from .server import FixtureServer, RequestLog, filter_rows, serve

__all__ = [
    "FixtureServer", "ManifestError", "RequestLog", "SiteManifest", "SiteSpec",
    "default_manifest", "default_manifest_path", "filter_rows", "load_manifest", "serve",
]
