"""CSV/JSON writers.  CSV: header line, units line, then rows in full precision."""

from __future__ import annotations

import csv
import json
import math
import os


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


class Table:
    def __init__(self, columns, units, metadata):
        if len(columns) != len(units):
            raise ValueError("need one unit per column")
        self.columns = list(columns) + ["config_hash", "master_seed"]
        self.units = list(units) + ["", ""]
        self.metadata = dict(metadata)
        self.rows = []

    def add(self, *values):
        if len(values) != len(self.columns) - 2:
            raise ValueError(f"expected {len(self.columns) - 2} values, got {len(values)}")
        self.rows.append([float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v
                          for v in values]
                         + [self.metadata["config_hash"], self.metadata["master_seed"]])

    def write(self, directory, name, fmt="csv"):
        """Write ``name.csv`` (csv format) and ``name.json``; returns the written paths."""
        os.makedirs(directory, exist_ok=True)
        paths = []
        if fmt == "csv":
            path = os.path.join(directory, name + ".csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(self.columns)
                w.writerow(self.units)
                for row in self.rows:
                    w.writerow([_cell(v) for v in row])
            paths.append(path)
        path = os.path.join(directory, name + ".json")
        doc = {
            "metadata": self.metadata,
            "columns": self.columns,
            "units": self.units,
            "rows": [{c: _json_value(v) for c, v in zip(self.columns, row)} for row in self.rows],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
        paths.append(path)
        return paths


def read_csv(path):
    """Inverse of the CSV writer: ``(columns, units, rows as dicts of strings)``."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        columns = next(r)
        units = next(r)
        rows = [dict(zip(columns, row)) for row in r]
    return columns, units, rows
