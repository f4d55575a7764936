"""How the minimal admissible block size grows as the target shrinks.

Prints k*(v) = min{k : k delta_k <= v} for a geometric profile (growth is
logarithmic in 1/v, so k*/ln(1/v) stabilizes) and a polynomial profile
(power-law growth, so k* * v^{1/(decay-1)} stabilizes instead).
"""

from weakdev.harness import ratio_spread, run_blocksize_asymptotics


def show(family: str, c: float, decay: float, targets) -> None:
    rows = run_blocksize_asymptotics(family, targets, c=c, decay=decay)
    print(f"# {family}: k delta_k = c {'decay^k' if family == 'geometric' else 'k^(1-decay)'}"
          f" with c={c:g}, decay={decay:g}")
    for r in rows:
        print(f"  v={r.target:.1e}  k*={r.k_star:>8d}  normalized ratio={r.ratio:.6f}")
    print(f"  ratio spread (max/min): {ratio_spread(rows):.4f}")


def main() -> None:
    decades = [10.0**-e for e in range(2, 9)]
    show("geometric", 4.0 / 9.0, 0.5, decades)
    show("polynomial", 1.0, 3.0, decades)


if __name__ == "__main__":
    main()
