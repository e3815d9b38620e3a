"""Reduced cohomology of the invariant complex for a few backends.

    python scripts/cohomology_table.py --out runs/cohomology.json
"""
from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from gengeo.backends import (
    InvariantTorusBackend,
    LieGroupBackend,
    abelian_structure_constants,
    su2_structure_constants,
    volume_three_form,
)
from gengeo.laplace_cohomology import ce_cohomology, h1_phib, invariant_complex, pseudo_cohomology_check, reduced_cohomology


@dataclass
class Row:
    name: str
    reduced: list[int]
    h1_parallel_route: int
    pseudo_h1: int
    laplacian_h1: int
    chevalley_eilenberg: list[int] | None = None


@dataclass
class Config:
    flux: float = 1.0
    out: Path = Path("runs/cohomology.json")


def backends(cfg: Config):
    yield "T2", InvariantTorusBackend(n=2)
    yield "T3", InvariantTorusBackend(n=3)
    yield "T3 vol", InvariantTorusBackend(n=3, gamma0=volume_three_form(cfg.flux))
    yield "su2", LieGroupBackend(n=3, c=su2_structure_constants())
    yield "R3 abelian", LieGroupBackend(n=3, c=abelian_structure_constants(3), g0=np.eye(3))


def run(cfg: Config) -> list[Row]:
    rows = []
    for name, bk in backends(cfg):
        cx = invariant_complex(bk)
        chk, lap, _ = pseudo_cohomology_check(bk, cx)
        ce = ce_cohomology(bk.c) if isinstance(bk, LieGroupBackend) else None
        rows.append(Row(name, reduced_cohomology(bk, cx), h1_phib(bk)[0], chk, lap, ce))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--flux", type=float, default=Config.flux)
    ap.add_argument("--out", type=Path, default=Config.out)
    a = ap.parse_args()
    cfg = Config(a.flux, a.out)

    rows = run(cfg)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    cfg.out.write_text(json.dumps([asdict(r) for r in rows], indent=2) + "\n")
    for r in rows:
        ce = "" if r.chevalley_eilenberg is None else f"  CE {r.chevalley_eilenberg}"
        print(f"{r.name:<11s} {r.reduced}  h1={r.h1_parallel_route} pseudo={r.pseudo_h1}/{r.laplacian_h1}{ce}")


if __name__ == "__main__":
    main()
