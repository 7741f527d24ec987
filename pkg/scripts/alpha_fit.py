"""Fit t_net to the published alpha_min table and show which rows a single t_net can explain.

alpha_min = t_net ** (1/K), so log(t_net) = K * log(alpha_min) for every row.
Each row therefore implies its own t_net; rows that agree share one.
"""

import math

from aomrlm.experiment import PUBLISHED_ALPHA, ALPHA_TOLERANCE, alpha_table, format_alpha_table


def main():
    print(f"{'K':>5}  {'published':>9}  implied log2(t_net)")
    for k, value in sorted(PUBLISHED_ALPHA.items()):
        print(f"{k:>5}  {value:>9.3f}  {k * math.log2(value):8.2f}")

    # best integer power of two over the K >= 30 rows
    best = min(range(-60, -20), key=lambda e: max(abs((2.0**e) ** (1 / k) - v) for k, v in PUBLISHED_ALPHA.items() if k >= 30))
    print(f"\nbest t_net = 2^{best}")
    print(format_alpha_table(alpha_table(2.0**best, sorted(PUBLISHED_ALPHA))))
    for k in (10, 20):
        needed = k * math.log2(PUBLISHED_ALPHA[k])
        print(f"K={k} would need t_net = 2^{needed:.1f}, outside the +/-{ALPHA_TOLERANCE} band for the other rows")


if __name__ == "__main__":
    main()
