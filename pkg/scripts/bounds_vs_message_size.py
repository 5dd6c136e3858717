"""Exact outage against the new and classic bounds as the message size grows.

Five blocks at S = 2 with every block at 0.8 P.
"""
import numpy as np

from _common import parser, save, table
from harqgp import ScenarioConfig
from harqgp.cli import cmd_bounds


def main():
    ap = parser(__doc__)
    ap.add_argument("--snr", type=float, default=2.0)
    ap.add_argument("--power-ratio", type=float, default=0.8)
    args = ap.parse_args()
    cfg = ScenarioConfig(5, [1.0] * 5, args.snr, 1.0, 1.0, 1e-5, 3.0, grid_points=args.grid_points)
    ts = np.arange(0.5, 8.01, 0.5)
    header, rows = cmd_bounds(cfg, [args.power_ratio] * 5, ts)
    save("bounds_vs_message_size", args.out, cfg, header, rows)
    keep = [0] + [header.index(f"{k}_{n}") for k in ("exact", "new", "classic") for n in (1, 5)]
    table([header[i] for i in keep], [[r[i] for i in keep] for r in rows])


if __name__ == "__main__":
    main()
