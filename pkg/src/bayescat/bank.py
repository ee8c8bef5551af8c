"""Item banks: construction, file I/O, and validation.

Bank files are either a JSON array of {"id", "difficulty"} objects or a CSV
with header ``id,difficulty``. Ids must be unique non-empty strings and
difficulties finite (and inside the declared difficulty bounds when given).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import BankError, DomainError
from .irt import ThetaBounds

__all__ = [
    "Item",
    "ItemBank",
    "make_dense_bank",
    "load_bank",
    "parse_bank_text",
    "bank_problems",
]


@dataclass(frozen=True)
class Item:
    id: str
    difficulty: float
    available: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise DomainError(f"item id must be a non-empty string, got {self.id!r}")
        if not math.isfinite(self.difficulty):
            raise DomainError(f"item difficulty must be finite, got {self.difficulty}")

    def sort_key(self) -> tuple[float, str]:
        return (self.difficulty, self.id)


class ItemBank:
    """A pool of items, optionally consumed as they are administered."""

    def __init__(
        self,
        items: Iterable[Item],
        consume_on_use: bool = False,
        difficulty_bounds: ThetaBounds | None = None,
    ) -> None:
        items = list(items)
        problems = bank_problems(
            [{"id": it.id, "difficulty": it.difficulty} for it in items],
            difficulty_bounds,
        )
        if problems:
            raise BankError("; ".join(problems))
        self.consume_on_use = consume_on_use
        self.difficulty_bounds = difficulty_bounds
        self._items: dict[str, Item] = {
            it.id: it for it in sorted(items, key=Item.sort_key)
        }
        # Selection caches per-grid likelihood matrices here, keyed by grid.
        self.cache: dict = {}

    def __len__(self) -> int:
        return len(self._items)

    @property
    def items(self) -> tuple[Item, ...]:
        return tuple(self._items.values())

    def item(self, item_id: str) -> Item:
        try:
            return self._items[item_id]
        except KeyError:
            raise BankError(f"unknown item id {item_id!r}") from None

    def available_items(self) -> list[Item]:
        """Available items in deterministic (difficulty, id) order."""
        return [it for it in self._items.values() if it.available]

    @property
    def n_available(self) -> int:
        return sum(1 for it in self._items.values() if it.available)

    def mark_used(self, item_id: str) -> None:
        """Consume an item if the bank is consuming; no-op otherwise."""
        it = self.item(item_id)
        if self.consume_on_use:
            self._items[item_id] = replace(it, available=False)

    def clone(self) -> "ItemBank":
        """Fresh bank with every item available again.

        Clones share the likelihood-matrix cache: cached values depend only
        on the item set and grid, not on availability.
        """
        fresh = ItemBank(
            [replace(it, available=True) for it in self._items.values()],
            consume_on_use=self.consume_on_use,
            difficulty_bounds=self.difficulty_bounds,
        )
        fresh.cache = self.cache
        return fresh

    def to_records(self) -> list[dict]:
        return [
            {"id": it.id, "difficulty": it.difficulty} for it in self._items.values()
        ]


def make_dense_bank(
    lower: float = -6.0,
    upper: float = 6.0,
    step: float = 0.05,
    consume_on_use: bool = False,
) -> ItemBank:
    """Evenly spaced synthetic bank covering [lower, upper] inclusive."""
    if not (math.isfinite(lower) and math.isfinite(upper) and lower < upper):
        raise BankError(f"invalid dense bank range [{lower}, {upper}]")
    if not (math.isfinite(step) and step > 0):
        raise BankError(f"dense bank step must be positive, got {step}")
    count = round((upper - lower) / step) + 1
    width = len(str(count - 1))
    items = []
    for i in range(count):
        difficulty = lower + (upper - lower) * i / (count - 1)
        items.append(Item(id=f"d{i:0{width}d}", difficulty=difficulty))
    return ItemBank(items, consume_on_use=consume_on_use)


def bank_problems(
    records: Sequence[dict], bounds: ThetaBounds | None = None
) -> list[str]:
    """All validation problems in a list of {id, difficulty} records."""
    problems: list[str] = []
    seen: set[str] = set()
    for i, rec in enumerate(records):
        item_id = rec.get("id")
        difficulty = rec.get("difficulty")
        where = f"record {i}"
        if not isinstance(item_id, str) or not item_id:
            problems.append(f"{where}: id must be a non-empty string")
        elif item_id in seen:
            problems.append(f"{where}: duplicate id {item_id!r}")
        else:
            seen.add(item_id)
            where = f"item {item_id!r}"
        if not isinstance(difficulty, (int, float)) or isinstance(difficulty, bool):
            problems.append(f"{where}: difficulty must be a number")
        elif not math.isfinite(difficulty):
            problems.append(f"{where}: difficulty must be finite, got {difficulty}")
        elif bounds is not None and not (bounds.lower <= difficulty <= bounds.upper):
            problems.append(
                f"{where}: difficulty {difficulty} outside [{bounds.lower}, {bounds.upper}]"
            )
    return problems


def _parse_json_bank(text: str) -> list[dict]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BankError(f"bank file is not valid JSON: {exc}") from None
    if not isinstance(data, list):
        raise BankError("JSON bank must be an array of {id, difficulty} objects")
    records = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise BankError(f"record {i}: expected an object, got {type(entry).__name__}")
        records.append({"id": entry.get("id"), "difficulty": entry.get("difficulty")})
    return records


def _parse_csv_bank(text: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows or [c.strip() for c in rows[0]] != ["id", "difficulty"]:
        raise BankError("CSV bank must start with header 'id,difficulty'")
    records = []
    for row in rows[1:]:
        if len(row) != 2:
            records.append({"id": None, "difficulty": None})
            continue
        item_id = row[0].strip()
        try:
            difficulty: float | None = float(row[1])
        except ValueError:
            difficulty = None
        records.append({"id": item_id, "difficulty": difficulty})
    return records


def parse_bank_text(text: str, fmt: str) -> list[dict]:
    """Parse bank file text ('json' or 'csv') into raw records."""
    if fmt == "json":
        return _parse_json_bank(text)
    if fmt == "csv":
        return _parse_csv_bank(text)
    raise BankError(f"unknown bank format {fmt!r}")


def load_bank(
    path: str | Path,
    consume_on_use: bool = False,
    difficulty_bounds: ThetaBounds | None = None,
) -> ItemBank:
    """Load and validate a bank file; raises BankError listing every problem."""
    path = Path(path)
    fmt = "csv" if path.suffix.lower() == ".csv" else "json"
    records = parse_bank_text(path.read_text(), fmt)
    problems = bank_problems(records, difficulty_bounds)
    if problems:
        raise BankError("; ".join(problems))
    items = [Item(id=r["id"], difficulty=float(r["difficulty"])) for r in records]
    return ItemBank(
        items, consume_on_use=consume_on_use, difficulty_bounds=difficulty_bounds
    )
