"""Fixed float formatting shared by all writers."""
from __future__ import annotations

import csv


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_summary(path, items) -> None:
    """``key = value`` lines, in the given order."""
    with open(path, "w") as fh:
        for key, value in items:
            if isinstance(value, bool):
                value = "pass" if value else "fail"
            elif isinstance(value, (int,)) and not isinstance(value, bool):
                value = str(value)
            elif isinstance(value, float):
                value = fmt(value)
            fh.write(f"{key} = {value}\n")
