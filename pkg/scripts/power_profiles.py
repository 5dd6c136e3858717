"""Optimized per-block powers of both GP methods at a few values of S."""
from _common import parser, save, table
from harqgp import optimize, reference_scenario
from harqgp.gpsolve import Status


def main():
    ap = parser(__doc__)
    ap.add_argument("--snr-values", default="8,20,30,50")
    args = ap.parse_args()
    snrs = [float(v) for v in args.snr_values.split(",")]
    cfg0 = reference_scenario(snrs[0], grid_points=args.grid_points)
    header = ["snr", "method", "status"] + [f"p_{n}" for n in range(1, cfg0.n_blocks + 1)]
    rows = []
    for s in snrs:
        cfg = cfg0.with_(snr=s)
        for m in ("gp_classic", "gp_new"):
            rep = optimize(cfg, m)
            powers = list(rep.schedule.powers) if rep.status is Status.OPTIMAL else [None] * cfg.n_blocks
            rows.append([s, m, rep.status.value] + powers)
    save("power_profiles", args.out, cfg0, header, rows)
    table(header, [[v if v is not None else "-" for v in r] for r in rows])


if __name__ == "__main__":
    main()
