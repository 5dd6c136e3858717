"""Exact expected energy of the GP methods as the latency target is relaxed.

Four-antenna receive diversity at S = 6.
"""
from _common import parser, save, table
from harqgp import reference_scenario
from harqgp.cli import SweepSpec, _floats, cmd_sweep


def main():
    ap = parser(__doc__)
    ap.add_argument("--snr", type=float, default=6.0)
    ap.add_argument("--antennas", type=int, default=4)
    ap.add_argument("--delta-values", default="1.1,1.2,1.3,1.5,1.75,2,2.5,3,4,5")
    args = ap.parse_args()
    cfg = reference_scenario(args.snr, antennas=args.antennas, grid_points=args.grid_points)
    spec = SweepSpec("latency_target", tuple(_floats(args.delta_values)), ("gp_classic", "gp_new"))
    header, rows = cmd_sweep(cfg, spec)
    save("energy_vs_latency", args.out, cfg, header, rows)
    cols = [0, 1, 2, 4, 5]
    table([header[i] for i in cols], [[r[i] if r[i] is not None else "-" for i in cols] for r in rows])


if __name__ == "__main__":
    main()
