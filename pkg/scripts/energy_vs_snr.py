"""Exact expected energy of the three strategies across S.

Point-to-point, three-receiver broadcast, and four-antenna receive diversity,
at the reference setting (N = 5, t = 4, eps = 1e-5, delta = 3).
"""
from _common import parser, save, table
from harqgp import reference_scenario
from harqgp.cli import SweepSpec, _floats, cmd_sweep


def main():
    ap = parser(__doc__)
    ap.add_argument("--snr-values", default="4:50:2")
    ap.add_argument("--trials", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    snrs = _floats(args.snr_values)
    variants = {
        "siso": reference_scenario(10.0, grid_points=args.grid_points),
        "broadcast3": reference_scenario(10.0, receivers=3, grid_points=args.grid_points),
        "diversity4": reference_scenario(10.0, antennas=4, grid_points=args.grid_points),
    }
    header, rows = None, []
    for name, cfg in variants.items():
        spec = SweepSpec("snr", tuple(snrs), ("max_power", "gp_classic", "gp_new"))
        h, r = cmd_sweep(cfg, spec, trials=args.trials, workers=args.workers)
        header = ["scenario"] + h
        rows += [[name] + row for row in r]
    save("energy_vs_snr", args.out, variants["siso"], header, rows)
    cols = [0, 1, 2, 5]
    table([header[i] for i in cols], [[r[i] if r[i] is not None else "-" for i in cols] for r in rows])


if __name__ == "__main__":
    main()
