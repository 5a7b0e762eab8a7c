"""Bundled example models."""

from __future__ import annotations

from importlib import resources
from typing import List

from pgclabs.ast import Loop
from pgclabs.syntax import parse_model, parse_predicate_file


def _file(name: str):
    return resources.files("pgclabs").joinpath("models", name)


def names() -> List[str]:
    return sorted(p.name[:-5] for p in resources.files("pgclabs").joinpath("models").iterdir()
                  if p.name.endswith(".pgcl"))


def source(name: str) -> str:
    return _file(name + ".pgcl").read_text()


def load(name: str):
    return parse_model(source(name))


def predicates(name: str) -> list:
    return parse_predicate_file(_file(name + ".preds").read_text())


def loop_models() -> List[str]:
    """Corpus models of the form ``do G -> Body od``."""
    return [n for n in names() if isinstance(load(n).program, Loop)]
