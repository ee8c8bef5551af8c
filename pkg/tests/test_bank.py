"""Item bank construction, parsing, validation, and consumption."""

import json

import numpy as np
import pytest

from bayescat.bank import (
    Item,
    ItemBank,
    bank_problems,
    load_bank,
    make_dense_bank,
    parse_bank_text,
)
from bayescat.errors import BankError, DomainError
from bayescat.irt import ThetaBounds


def test_items_sorted_by_difficulty_then_id():
    bank = ItemBank(
        [
            Item(id="b", difficulty=1.0),
            Item(id="a", difficulty=1.0),
            Item(id="c", difficulty=-2.0),
        ]
    )
    assert [it.id for it in bank.items] == ["c", "a", "b"]


def test_item_lookup_and_unknown_id():
    bank = ItemBank([Item(id="x", difficulty=0.0)])
    assert bank.item("x").difficulty == 0.0
    with pytest.raises(BankError):
        bank.item("y")


def test_item_validation():
    with pytest.raises(DomainError):
        Item(id="bad", difficulty=float("nan"))
    with pytest.raises(DomainError):
        Item(id="", difficulty=0.0)


def test_duplicate_ids_rejected():
    with pytest.raises(BankError, match="duplicate"):
        ItemBank([Item(id="x", difficulty=0.0), Item(id="x", difficulty=1.0)])


def test_difficulty_bounds_enforced():
    with pytest.raises(BankError, match="outside"):
        ItemBank(
            [Item(id="x", difficulty=9.0)],
            difficulty_bounds=ThetaBounds(-6.0, 6.0),
        )


def test_consumption_only_when_consuming():
    consuming = ItemBank([Item(id="x", difficulty=0.0)], consume_on_use=True)
    consuming.mark_used("x")
    assert consuming.n_available == 0
    durable = ItemBank([Item(id="x", difficulty=0.0)], consume_on_use=False)
    durable.mark_used("x")
    assert durable.n_available == 1


def test_clone_restores_availability_and_shares_cache():
    bank = ItemBank(
        [Item(id="a", difficulty=-1.0), Item(id="b", difficulty=1.0)],
        consume_on_use=True,
    )
    bank.cache["probe"] = {"x": 1}
    bank.mark_used("a")
    twin = bank.clone()
    assert twin.n_available == 2
    assert bank.n_available == 1
    assert twin.cache is bank.cache


def test_dense_bank_endpoints_and_spacing():
    bank = make_dense_bank(-6.0, 6.0, 0.05)
    diffs = np.array([it.difficulty for it in bank.items])
    assert len(bank) == 241
    assert diffs[0] == -6.0 and diffs[-1] == 6.0
    assert np.max(np.abs(np.diff(diffs) - 0.05)) < 1e-12
    # Ids sort in the same order as difficulties (zero-padded).
    assert [it.id for it in bank.items] == sorted(it.id for it in bank.items)


def test_dense_bank_validation():
    with pytest.raises(BankError):
        make_dense_bank(2.0, -2.0, 0.1)
    with pytest.raises(BankError):
        make_dense_bank(-2.0, 2.0, 0.0)


def test_parse_json_bank(tmp_path):
    path = tmp_path / "bank.json"
    path.write_text(json.dumps([{"id": "a", "difficulty": -0.5}, {"id": "b", "difficulty": 2}]))
    bank = load_bank(path)
    assert [it.id for it in bank.items] == ["a", "b"]
    assert bank.item("b").difficulty == 2.0


def test_parse_csv_bank(tmp_path):
    path = tmp_path / "bank.csv"
    path.write_text("id,difficulty\nfoo,-1.25\nbar,0.75\n")
    bank = load_bank(path)
    assert bank.item("foo").difficulty == -1.25
    assert bank.item("bar").difficulty == 0.75


def test_csv_requires_exact_header(tmp_path):
    path = tmp_path / "bank.csv"
    path.write_text("identifier,b\nfoo,1\n")
    with pytest.raises(BankError, match="header"):
        load_bank(path)


def test_json_bank_must_be_array(tmp_path):
    path = tmp_path / "bank.json"
    path.write_text('{"id": "a"}')
    with pytest.raises(BankError, match="array"):
        load_bank(path)


def test_load_reports_every_problem_at_once(tmp_path):
    records = [
        {"id": "a", "difficulty": 0.0},
        {"id": "a", "difficulty": 99.0},
        {"id": "", "difficulty": "x"},
    ]
    path = tmp_path / "bank.json"
    path.write_text(json.dumps(records))
    with pytest.raises(BankError) as err:
        load_bank(path, difficulty_bounds=ThetaBounds(-6.0, 6.0))
    message = str(err.value)
    assert "duplicate" in message
    assert "outside" in message
    assert "non-empty string" in message


def test_bank_problems_collects_rich_record_issues():
    problems = bank_problems(
        [
            {"id": "ok", "difficulty": 1.0},
            {"id": None, "difficulty": float("inf")},
            {"id": "far", "difficulty": -50.0},
        ],
        bounds=ThetaBounds(-6.0, 6.0),
    )
    assert len(problems) == 3


def test_parse_bank_text_dispatch():
    records = parse_bank_text('[{"id": "q", "difficulty": 1.5}]', "json")
    assert records == [{"id": "q", "difficulty": 1.5}]
    with pytest.raises(BankError):
        parse_bank_text("anything", "yaml")
