"""
Reporting - CSV/JSON Emission and Console Summaries

Data goes to stdout or --out files and is byte-identical across identical
runs (17 significant digits, sorted JSON keys). Human-facing banners and
tables go to stderr.
"""

import dataclasses
import json
import math
import re
import sys
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from tabulate import tabulate

FLOAT_FORMAT = "%.17g"
_FLOAT_TAG = "__float17__"
_TAGGED = re.compile(rf'"{_FLOAT_TAG}([^"]*)"')


def to_plain(obj: Any) -> Any:
    """Convert numpy values, arrays, tuples, DataFrames and dataclasses to JSON-ready types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, pd.DataFrame):
        return [to_plain(row) for row in obj.to_dict(orient="records")]
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _tag_floats(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return f"{_FLOAT_TAG}{obj:.17g}"
    return obj


def to_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits, non-finite as strings."""
    text = json.dumps(_tag_floats(to_plain(obj)), sort_keys=True, indent=2, ensure_ascii=False)
    return _TAGGED.sub(lambda m: m.group(1), text) + "\n"


def to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def emit(text: str, out: Optional[str] = None) -> None:
    """Write to the --out path, or stdout."""
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def banner(title: str, subtitle: str = "") -> None:
    width = 59
    lines = ["╔" + "═" * width + "╗", f"║  {title:<{width - 2}}║"]
    if subtitle:
        lines.append(f"║  {subtitle:<{width - 2}}║")
    lines.append("╚" + "═" * width + "╝")
    print("\n".join(lines), file=sys.stderr)


def section(title: str) -> None:
    print("\n" + "=" * 50, file=sys.stderr)
    print(title, file=sys.stderr)
    print("=" * 50, file=sys.stderr)


def status(ok: Optional[bool], message: str) -> None:
    """✓ for success, ⚠️ for a soft warning (None), ❌ for failure."""
    mark = "✓" if ok else ("⚠️ " if ok is None else "❌")
    print(f"{mark} {message}", file=sys.stderr)


def summary_table(rows: Iterable[Sequence[Any]], headers: Sequence[str]) -> str:
    return tabulate(list(rows), headers=list(headers), floatfmt=".6g", tablefmt="simple")


def print_table(rows: Iterable[Sequence[Any]], headers: Sequence[str]) -> None:
    print(summary_table(rows, headers), file=sys.stderr)
