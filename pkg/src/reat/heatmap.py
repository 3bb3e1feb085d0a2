"""Self-contained HTML heatmaps for attribution results.

Positive scores render green, negative red; intensity is |score| divided by
the largest |score| anywhere in the document, so a lone strong span saturates
and an all-zero document stays neutral.  Output bytes are deterministic for
identical inputs (fixed float formatting, no timestamps, no external assets).
"""

from __future__ import annotations

import html
from typing import Sequence

from .chunking import HierarchicalAttribution
from .decompose import AttributionResult

__all__ = ["render_heatmap"]

_POSITIVE_RGB = "0,153,0"
_NEGATIVE_RGB = "204,0,0"

_PAGE = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>attribution heatmap</title>
<style>
body {{ font-family: monospace; margin: 1.5em; }}
td, th {{ padding: 4px 8px; text-align: left; vertical-align: top; }}
th {{ color: #555; }}
span.unit {{ display: inline-block; padding: 2px 5px; margin: 2px; border: 1px solid #ddd; }}
</style>
</head>
<body>
<table>
{rows}</table>
</body>
</html>
"""


def _cell(text: str, score: float, normalizer: float) -> str:
    if normalizer > 0.0 and score != 0.0:
        rgb = _POSITIVE_RGB if score > 0.0 else _NEGATIVE_RGB
        style = f"background-color:rgba({rgb},{abs(score) / normalizer:.3f});"
    else:
        style = ""
    return (
        f'<span class="unit" style="{style}" title="{score:+.6g}">'
        f"{html.escape(text, quote=True)}</span>"
    )


def _row(label: str, result: AttributionResult, tokens: Sequence[str], normalizer: float) -> str:
    cells = "".join(
        _cell(" ".join(tokens[s.q - 1 : s.r]), float(score), normalizer)
        for s, score in zip(result.spans, result.scores)
    )
    return f"<tr><th>{html.escape(label, quote=True)}</th><td>{cells}</td></tr>\n"


def render_heatmap(
    result: AttributionResult | HierarchicalAttribution,
    tokens: Sequence[str] | None = None,
) -> bytes:
    """Render one attribution (or a word/phrase/clause stack) to HTML bytes.

    ``tokens`` is required for a bare AttributionResult; a hierarchical
    result carries its own token sequence.
    """
    if isinstance(result, HierarchicalAttribution):
        rows = list(result.levels())
        tokens = result.tokens
    else:
        if tokens is None:
            raise ValueError("tokens are required to render an AttributionResult")
        rows = [(result.method, result)]
    normalizer = max(
        (abs(float(s)) for _, res in rows for s in res.scores),
        default=0.0,
    )
    body = "".join(_row(label, res, tokens, normalizer) for label, res in rows)
    return _PAGE.format(rows=body).encode("utf-8")
