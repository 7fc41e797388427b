"""Independent reference computations.

Nothing here imports the package; everything is plain python (``math``,
``fractions``, ``itertools``).  ``compute_all`` produces the values frozen in
``oracle_values.json``; ``python3 tests/oracles.py`` rewrites that file.
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from pathlib import Path

FROZEN = Path(__file__).with_name("oracle_values.json")


def power_iteration_radius(matrix, iters: int = 500) -> float:
    n = len(matrix)
    v = [1.0] * n
    lam = 0.0
    for _ in range(iters):
        w = [sum(matrix[i][j] * v[j] for j in range(n)) for i in range(n)]
        lam = max(abs(x) for x in w)
        v = [x / lam for x in w]
    return lam


def avoiding_words_mass(forbidden: list[str], n: int) -> Fraction:
    """Lebesgue mass of points whose first ``n`` iterates avoid the forbidden cylinders.

    Every forbidden word has the same length ``d``; a binary word of length
    ``n + d - 1`` survives when none of its windows starting at ``0..n-1``
    is forbidden.
    """
    d = len(forbidden[0])
    length = n + d - 1
    bad = set(forbidden)
    count = 0
    for w in itertools.product("01", repeat=length):
        s = "".join(w)
        if all(s[j:j + d] not in bad for j in range(n)):
            count += 1
    return Fraction(count, 2 ** length)


def first_return_counts(max_tau: int) -> dict[int, tuple[int, Fraction]]:
    """Counts and total length of first-return cylinders to ``[0, 1/2)`` under doubling."""
    out = {}
    for tau in range(1, max_tau + 1):
        count = 0
        for w in itertools.product((0, 1), repeat=tau + 1):
            if w[0] == 0 and w[tau] == 0 and all(w[j] == 1 for j in range(1, tau)):
                count += 1
        out[tau] = (count, Fraction(count, 2 ** (tau + 1)))
    return out


def generating_root(counts: dict[int, int], lo: float = 0.0, hi: float = 5.0) -> float:
    """Root ``p`` of ``sum N(tau) exp(-p tau) = 1`` by bisection."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = sum(c * math.exp(-mid * t) for t, c in counts.items())
        lo, hi = (mid, hi) if s > 1 else (lo, mid)
    return 0.5 * (lo + hi)


def two_symbol_periodic(c1: float, c2: float, n_max: int):
    """Exact ``Z_n`` through symbol 1 and the log-ratio estimator."""
    z = [(math.exp(c1) + math.exp(c2)) ** (n - 1) * math.exp(c1) for n in range(1, n_max + 1)]
    ratios = [math.log(z[0])] + [math.log(z[k] / z[k - 1]) for k in range(1, n_max)]
    return z, ratios


def quadratic_hyperbolic_times(a: float, x0: float, n_max: int, sigma: float,
                               eps: float) -> list[int]:
    """Brute force over every ``(n, k)`` pair for ``x -> a - x^2``, critical point 0."""
    orbit = [x0]
    for _ in range(n_max):
        orbit.append(a - orbit[-1] ** 2)
    b = 1.0 / 3.0
    out = []
    for n in range(1, n_max + 1):
        good = True
        for k in range(1, n + 1):
            prod = 1.0
            for i in range(n - k, n):
                prod *= abs(2.0 * orbit[i])
            if prod == 0 or 1.0 / prod > sigma ** k * (1 + 1e-12):
                good = False
                break
            d = abs(orbit[n - k])
            dt = d if d < eps else 1.0
            if dt < sigma ** (b * k):
                good = False
                break
        if good:
            out.append(n)
    return out


def compute_all() -> dict:
    golden = (1 + math.sqrt(5)) / 2
    rad = power_iteration_radius([[1, 1], [1, 0]])
    fr = first_return_counts(12)
    kac = sum(float(t * length) for t, (_, length) in fr.items()) / 0.5
    _, ratios = two_symbol_periodic(0.0, -1.0, 12)
    return {
        "golden_radius": rad,
        "golden_escape_rate": math.log(2) - math.log(rad),
        "golden_closed_form": math.log(2) - math.log(golden),
        "golden_masses": [float(avoiding_words_mass(["11"], n)) for n in range(1, 11)],
        "half_hole_masses": [float(avoiding_words_mass(["0"], n)) for n in range(1, 11)],
        "quarter_hole_masses": [float(avoiding_words_mass(["01"], n)) for n in range(1, 11)],
        "first_return_counts": {str(t): c for t, (c, _) in fr.items()},
        "first_return_lengths": {str(t): float(length) for t, (_, length) in fr.items()},
        "kac_sum_tau_12": kac,
        "first_return_entropy_root": generating_root({t: c for t, (c, _) in fr.items()}
                                                     | {t: 1 for t in range(13, 80)}),
        "kac_series": sum(n * 2.0 ** -n for n in range(1, 200)),
        "induced_entropy_series": sum(2.0 ** -n * n * math.log(2) for n in range(1, 200)),
        "two_symbol_pressure": math.log(1 + math.exp(-1)),
        "two_symbol_ratios": ratios,
        "pressure_line": {f"{t:g}": (1 - t) * math.log(2) for t in (-2.0, -1.0, -0.5, 0.5, 1.0)},
        "quadratic_times_x03": quadratic_hyperbolic_times(2.0, 0.3, 30, 0.9, 0.1),
        "t0_doubling": math.log(2) / -math.log(2),
        "t0_ternary": math.log(3) / -math.log(3),
        "preball_lengths_doubling_delta01": [0.2 * 2.0 ** -n for n in range(1, 8)],
    }


def frozen() -> dict:
    return json.loads(FROZEN.read_text())


if __name__ == "__main__":
    FROZEN.write_text(json.dumps(compute_all(), indent=1, sort_keys=True) + "\n")
    print(f"wrote {FROZEN}")
