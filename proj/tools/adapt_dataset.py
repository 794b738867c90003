#!/usr/bin/env python3
"""Convert an external double-auction export into the four corpus CSV files.

Columns are renamed according to a JSON mapping. A mapping entry is either a
source column name or a list of names whose values are joined with '-'
(useful for building market ids from session and group columns).
"""
import argparse
import csv
import json
import sys
from pathlib import Path

HEADERS = {
    "events": ["market_id", "round", "time", "actor_id", "side", "price"],
    "deals": ["market_id", "round", "time", "buyer_id", "seller_id", "price", "buyer_price", "seller_price"],
    "valuations": ["market_id", "actor_id", "side", "reservation_value"],
    "treatments": ["market_id", "feedback_setting", "price_rule"],
}

DEFAULT_MAPPING = {
    "events": {
        "file": "orders.csv",
        "columns": {"market_id": ["session", "group"], "round": "round", "time": "time",
                    "actor_id": "player", "side": "role", "price": "price"},
    },
    "deals": {
        "file": "deals.csv",
        "columns": {"market_id": ["session", "group"], "round": "round", "time": "time",
                    "buyer_id": "buyer", "seller_id": "seller", "price": "price",
                    "buyer_price": "bid", "seller_price": "ask"},
    },
    "valuations": {
        "file": "valuations.csv",
        "columns": {"market_id": ["session", "group"], "actor_id": "player", "side": "role",
                    "reservation_value": "value"},
    },
    "treatments": {
        "file": "groups.csv",
        "columns": {"market_id": ["session", "group"], "feedback_setting": "feedback",
                    "price_rule": "pricing"},
    },
    "values": {
        "side": {"buyer": "B", "seller": "S"},
        "feedback_setting": {"black box": "BlackBox", "full": "Full", "same": "Same", "other": "Other"},
        "price_rule": {"first": "First", "random": "Random", "mmk": "MMK"},
    },
}


def extract(row, spec, line, path):
    names = spec if isinstance(spec, list) else [spec]
    parts = []
    for name in names:
        if name not in row:
            sys.exit(f"{path}:{line}: missing column '{name}'")
        parts.append(row[name].strip())
    return "-".join(parts)


def translate(value, table, column, line, path):
    if not table:
        return value
    for key, out in table.items():
        if value.lower() == key.lower():
            return out
    if value in table.values():
        return value
    sys.exit(f"{path}:{line}: unmapped {column} value '{value}'")


def convert(name, section, values, src, dst):
    path = src / section["file"]
    if not path.exists():
        if name == "valuations":
            return 0
        sys.exit(f"missing input file {path}")
    rows = []
    seen = set()
    with path.open(newline="", encoding="utf-8-sig") as f:
        for line, row in enumerate(csv.DictReader(f), start=2):
            out = []
            for column in HEADERS[name]:
                value = extract(row, section["columns"][column], line, path)
                out.append(translate(value, values.get(column), column, line, path))
            if name == "treatments":
                if out[0] in seen:
                    continue
                seen.add(out[0])
            rows.append(out)
    if name in ("events", "deals"):
        rows.sort(key=lambda r: (r[0], int(r[1]), float(r[2])))
    with (dst / f"{name}.csv").open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HEADERS[name])
        writer.writerows(rows)
    return len(rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mapping", type=Path)
    parser.add_argument("--src", type=Path)
    parser.add_argument("--dst", type=Path)
    parser.add_argument("--print-default-mapping", action="store_true")
    args = parser.parse_args()

    if args.print_default_mapping:
        json.dump(DEFAULT_MAPPING, sys.stdout, indent=2)
        print()
        return
    if not args.src or not args.dst:
        parser.error("--src and --dst are required")

    mapping = json.loads(args.mapping.read_text()) if args.mapping else DEFAULT_MAPPING
    values = mapping.get("values", {})
    args.dst.mkdir(parents=True, exist_ok=True)
    for name in HEADERS:
        n = convert(name, mapping[name], values, args.src, args.dst)
        print(f"{name}: {n} rows")


if __name__ == "__main__":
    main()
