import csv


def fmt(v) -> str:
    """Fixed 17-significant-digit formatting so reruns are byte-identical."""
    return format(float(v), ".17g")


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
