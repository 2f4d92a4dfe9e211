#!/usr/bin/env python3
"""Regenerate the retail fixture schema and data SQL files.

The files are deterministic (seeded RNG) and written in the dialect subset
both sqlite and PostgreSQL accept, so the same scripts load into either
backend for differential testing. Run from the repo root:

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import random
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "slowforge" / "fixtures"

REGIONS = ["north", "south", "east", "west"]
SEGMENTS = ["consumer", "corporate", "home_office"]
CATEGORIES = ["grocery", "electronics", "clothing", "garden", "toys", "books"]
STATUSES = ["placed", "shipped", "delivered", "returned"]

N_STORES = 8
N_CUSTOMERS = 120
N_PRODUCTS = 60
N_ORDERS = 600
N_ITEMS = 1800

SCHEMA = """\
-- Retail fixture schema (loads into sqlite and PostgreSQL unchanged).
CREATE TABLE stores (
    store_id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    region TEXT NOT NULL
);

CREATE TABLE customers (
    customer_id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    region TEXT NOT NULL,
    segment TEXT NOT NULL,
    signup_date TEXT NOT NULL
);

CREATE TABLE products (
    product_id INTEGER PRIMARY KEY,
    name TEXT NOT NULL,
    category TEXT NOT NULL,
    price DOUBLE PRECISION NOT NULL
);

CREATE TABLE orders (
    order_id INTEGER PRIMARY KEY,
    customer_id INTEGER NOT NULL,
    store_id INTEGER NOT NULL,
    order_date TEXT NOT NULL,
    status TEXT NOT NULL,
    total DOUBLE PRECISION NOT NULL
);

CREATE TABLE order_items (
    item_id INTEGER PRIMARY KEY,
    order_id INTEGER NOT NULL,
    product_id INTEGER NOT NULL,
    quantity INTEGER NOT NULL,
    unit_price DOUBLE PRECISION NOT NULL
);
"""


def esc(s: str) -> str:
    return s.replace("'", "''")


def main() -> None:
    rng = random.Random(920_417)
    lines: list[str] = ["-- Deterministic retail fixture data. Regenerate via tools/make_fixtures.py."]

    for sid in range(1, N_STORES + 1):
        region = REGIONS[(sid - 1) % len(REGIONS)]
        lines.append(
            f"INSERT INTO stores VALUES ({sid}, 'store_{sid:02d}', '{region}');"
        )

    for cid in range(1, N_CUSTOMERS + 1):
        region = rng.choice(REGIONS)
        segment = rng.choice(SEGMENTS)
        year = rng.randint(2018, 2023)
        month = rng.randint(1, 12)
        day = rng.randint(1, 28)
        lines.append(
            f"INSERT INTO customers VALUES ({cid}, 'customer_{cid:04d}', "
            f"'{region}', '{segment}', '{year}-{month:02d}-{day:02d}');"
        )

    prices: dict[int, float] = {}
    for pid in range(1, N_PRODUCTS + 1):
        category = rng.choice(CATEGORIES)
        price = round(rng.uniform(1.0, 400.0), 2)
        prices[pid] = price
        lines.append(
            f"INSERT INTO products VALUES ({pid}, 'product_{pid:03d}', "
            f"'{category}', {price});"
        )

    order_totals: dict[int, float] = {}
    item_rows: list[tuple[int, int, int, int, float]] = []
    item_id = 0
    for oid in range(1, N_ORDERS + 1):
        for _ in range(rng.randint(1, 5)):
            if item_id >= N_ITEMS:
                break
            item_id += 1
            pid = rng.randint(1, N_PRODUCTS)
            qty = rng.randint(1, 6)
            unit = prices[pid]
            item_rows.append((item_id, oid, pid, qty, unit))
            order_totals[oid] = round(order_totals.get(oid, 0.0) + qty * unit, 2)

    for oid in range(1, N_ORDERS + 1):
        cid = rng.randint(1, N_CUSTOMERS)
        sid = rng.randint(1, N_STORES)
        year = rng.randint(2021, 2024)
        month = rng.randint(1, 12)
        day = rng.randint(1, 28)
        status = rng.choice(STATUSES)
        total = order_totals.get(oid, 0.0)
        lines.append(
            f"INSERT INTO orders VALUES ({oid}, {cid}, {sid}, "
            f"'{year}-{month:02d}-{day:02d}', '{status}', {total});"
        )

    for item_id, oid, pid, qty, unit in item_rows:
        lines.append(
            f"INSERT INTO order_items VALUES ({item_id}, {oid}, {pid}, {qty}, {unit});"
        )

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / "schema.sql").write_text(SCHEMA)
    (OUT_DIR / "data.sql").write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT_DIR / 'schema.sql'} and {OUT_DIR / 'data.sql'} ({len(lines)} statements)")


if __name__ == "__main__":
    main()
