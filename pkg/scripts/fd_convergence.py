"""Chart identity residuals against the finite-difference step.

    python scripts/fd_convergence.py --hs 0.04 0.02 0.01 0.005

With the fourth-order stencil every halving of h should cut the residuals by about 16
until round-off takes over.
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gengeo.backends import chart_from_catalogue
from gengeo.curvature import classical_bianchi_residuals, double_switch, phib_route_gap


@dataclass
class Config:
    metric: str = "trig"
    two_form: str = "trig"
    three_form: str = "volume"
    point: tuple[float, float, float] = (0.13, 0.41, 0.77)
    hs: list[float] = field(default_factory=lambda: [0.04, 0.02, 0.01, 0.005])
    order: int = 4
    out: Path = Path("runs/fd_convergence.csv")


def residuals(cfg: Config, h: float) -> dict:
    bk = chart_from_catalogue(3, metric=cfg.metric, two_form=cfg.two_form, three_form=cfg.three_form, h=h, order=cfg.order)
    p = np.asarray(cfg.point)
    return {
        "h": h,
        "blocks": phib_route_gap(bk, p)[1],
        "double_switch": double_switch(bk, p),
        "differential_bianchi": classical_bianchi_residuals(bk, p)[1],
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hs", type=float, nargs="+", default=None)
    ap.add_argument("--order", type=int, default=Config.order)
    ap.add_argument("--out", type=Path, default=Config.out)
    a = ap.parse_args()
    cfg = Config(hs=a.hs or Config().hs, order=a.order, out=a.out)

    rows = [residuals(cfg, h) for h in cfg.hs]
    keys = [k for k in rows[0] if k != "h"]
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    with open(cfg.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print("h        " + "  ".join(f"{k:>22s}" for k in keys))
    for i, r in enumerate(rows):
        cells = []
        for k in keys:
            ratio = rows[i - 1][k] / r[k] if i else float("nan")
            cells.append(f"{r[k]:.3e} (x{ratio:5.1f})")
        print(f"{r['h']:<8g} " + "  ".join(f"{c:>22s}" for c in cells))


if __name__ == "__main__":
    main()
