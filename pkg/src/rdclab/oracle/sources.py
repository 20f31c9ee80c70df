"""Plain-text description files for tiny discrete sources.

Same flat ``key = value`` convention as the run configs; matrix rows are
separated by ';'. Example::

    px = 0.5 0.5
    label.digit = 0.9 0.1 ; 0.2 0.8
    delta = 0 1 ; 1 0

Any number of ``label.<name>`` keys is allowed (one per label variable).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..datamodel import DiscreteSource, parse_kv

__all__ = ["parse_source_text", "parse_source_file"]


def _parse_matrix(value: str) -> np.ndarray:
    rows = [
        [float(tok) for tok in row.split()]
        for row in value.split(";")
        if row.strip()
    ]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"ragged matrix rows in {value!r}")
    return np.array(rows)


def parse_source_text(text: str) -> DiscreteSource:
    kv = parse_kv(text)
    if "px" not in kv or "delta" not in kv:
        raise ValueError("source description needs 'px' and 'delta' keys")
    px = _parse_matrix(kv["px"]).ravel()
    delta = _parse_matrix(kv["delta"])
    labels = tuple(
        _parse_matrix(v) for k, v in sorted(kv.items()) if k.startswith("label.")
    )
    return DiscreteSource(px=px, label_channels=labels, delta=delta)


def parse_source_file(path: str | Path) -> DiscreteSource:
    return parse_source_text(Path(path).read_text())
