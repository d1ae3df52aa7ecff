"""Experiment directories: JSON-lines, CSV and metadata written atomically."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from hyplab import __version__


def _clean(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def config_digest(config: dict) -> str:
    payload = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ExperimentWriter:
    """Collects records for one experiment and writes them under ``out``."""

    def __init__(self, out: str | Path | None, experiment: str, config: dict, seed: int | None):
        self.out = Path(out) if out else None
        self.experiment = experiment
        self.config = config
        self.digest = config_digest(config)
        self.seed = seed
        self.records: list[dict] = []
        self.started = datetime.now(timezone.utc).isoformat()

    def provenance(self) -> dict:
        return {"tool_version": __version__, "config_digest": self.digest, "seed": self.seed}

    def add(self, record: dict) -> dict:
        rec = {**self.provenance(), **_clean(record)}
        self.records.append(rec)
        return rec

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        if self.out is None:
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        atomic_write(self.out / name, buf.getvalue())

    def write_json(self, name: str, obj: dict) -> None:
        if self.out is not None:
            atomic_write(self.out / name, json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")

    def finish(self, status: int) -> None:
        if self.out is None:
            return
        atomic_write(self.out / f"{self.experiment}.jsonl", self.jsonl())
        self.write_json(
            "metadata.json",
            {
                "experiment": self.experiment,
                "started": self.started,
                "finished": datetime.now(timezone.utc).isoformat(),
                "exit_status": status,
                "config": self.config,
                **self.provenance(),
            },
        )

    def svg_path(self, name: str) -> Path | None:
        return None if self.out is None else self.out / name


def save_svg(fig, path: Path) -> None:
    buf = io.StringIO()
    fig.savefig(buf, format="svg")
    atomic_write(path, buf.getvalue())
