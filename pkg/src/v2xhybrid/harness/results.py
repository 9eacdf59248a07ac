"""Result records and their CSV / JSON persistence."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

COLUMNS = ("scenario", "trial", "snr_db", "user", "metric", "value", "seed")

#: ``user`` / ``trial`` value used by aggregate records.
AGGREGATE = -1


@dataclass(frozen=True)
class ResultRecord:
    scenario: str
    trial: int
    snr_db: float
    user: int
    metric: str
    value: float
    seed: int

    @property
    def key(self):
        return (self.scenario, self.trial, self.snr_db, self.user, self.metric)


def _coerce(row: dict) -> ResultRecord:
    return ResultRecord(
        scenario=row["scenario"], trial=int(row["trial"]), snr_db=float(row["snr_db"]),
        user=int(row["user"]), metric=row["metric"], value=float(row["value"]),
        seed=int(row["seed"]),
    )


def write_results(records, path, format: str = "csv") -> Path:
    path = Path(path)
    if format == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            for r in records:
                # repr keeps full float precision
                writer.writerow([r.scenario, r.trial, repr(float(r.snr_db)), r.user, r.metric,
                                 repr(float(r.value)), r.seed])
    elif format == "json":
        path.write_text(json.dumps([asdict(r) for r in records], indent=1) + "\n",
                        encoding="utf-8")
    else:
        raise ValueError(f"unknown format {format!r}")
    return path


def read_results(path, format: str | None = None) -> list[ResultRecord]:
    path = Path(path)
    format = format or ("json" if path.suffix == ".json" else "csv")
    if format == "json":
        return [_coerce(row) for row in json.loads(path.read_text(encoding="utf-8"))]
    with path.open(newline="", encoding="utf-8") as fh:
        return [_coerce(row) for row in csv.DictReader(fh)]


assert tuple(f.name for f in fields(ResultRecord)) == COLUMNS
