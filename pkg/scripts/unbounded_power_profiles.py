"""Per-block powers with the power cap and latency constraint removed.

The final block is pinned by the tight outage constraint; the ratio p_N / p_1
is compared with the closed form L_1 / ((1+e)^(N-1) Q_{N-1} L_N).
"""
import math

from _common import parser, save, table
from harqgp import new_bound_coefficients, optimize, reference_scenario
from harqgp.gpsolve import kkt_check_unconstrained


def main():
    ap = parser(__doc__)
    ap.add_argument("--snr-values", default="8,20,50")
    args = ap.parse_args()
    cfg0 = reference_scenario(8.0, grid_points=args.grid_points)
    N = cfg0.n_blocks
    header = ["snr"] + [f"p_{n}" for n in range(1, N + 1)] + ["ratio_db", "ratio_rel_error", "max_kkt_residual"]
    rows = []
    for s in (float(v) for v in args.snr_values.split(",")):
        cfg = cfg0.with_(snr=s)
        rep = optimize(cfg, "gp_new", unconstrained=True)
        p = rep.schedule.powers
        chk = kkt_check_unconstrained(cfg, new_bound_coefficients(cfg), p)
        rows.append([s] + list(p) + [10 * math.log10(p[-1] / p[0]), chk.ratio_error,
                                     float(abs(chk.residuals).max())])
    save("unbounded_power_profiles", args.out, cfg0, header, rows)
    table(header, rows)


if __name__ == "__main__":
    main()
