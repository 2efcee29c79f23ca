"""Random problem generators shared by the test modules."""

from __future__ import annotations

import math

import numpy as np

from resonance.linear import PeriodicSystem, adjoint_fundamental, tune_to_resonance

TWO_PI = 2 * math.pi
MAX_CONDITION = 1e3


def trig_term(rng: np.random.Generator, scale: float = 0.4) -> str:
    """Random ``c0 + c1 cos(k t) + s1 sin(k t)`` with ``k`` in {1, 2}."""
    c0, c1, s1 = (float(v) for v in rng.normal(0.0, scale, 3))
    k = int(rng.integers(1, 3))
    return f"{c0!r} + {c1!r}*cos({k}*t) + {s1!r}*sin({k}*t)"


def random_matrix_strings(rng, n: int, scale: float = 0.4) -> list[list[str]]:
    return [[trig_term(rng, scale) for _ in range(n)] for _ in range(n)]


def random_system(rng, n: int, scale: float = 0.4, forced: bool = True) -> PeriodicSystem:
    forcing = [trig_term(rng, scale) for _ in range(n)] if forced else None
    return PeriodicSystem.from_strings(random_matrix_strings(rng, n, scale), forcing, TWO_PI)


def shifted_family(matrix: list[list[str]], forcing):
    """``κ -> M - κ I``: every multiplier of ``Z(p)`` scales by ``e^{κ p}``."""
    def family(kappa: float) -> PeriodicSystem:
        return PeriodicSystem.from_strings(_shift(matrix, kappa), forcing, TWO_PI)

    return family


def manufactured_forcing(rng, matrix: list[list[str]]) -> tuple[list[str], list[str]]:
    """Forcing ``q = y' - M y`` for a random trigonometric ``y``; returns ``(q, y)``."""
    n = len(matrix)
    ys, dys = [], []
    for _ in range(n):
        c0, c1, s1 = (float(v) for v in rng.normal(0.0, 1.0, 3))
        ys.append(f"({c0!r} + {c1!r}*cos(t) + {s1!r}*sin(t))")
        dys.append(f"({-c1!r}*sin(t) + {s1!r}*cos(t))")
    q = []
    for i in range(n):
        terms = " + ".join(f"({matrix[i][j]})*{ys[j]}" for j in range(n))
        q.append(f"{dys[i]} - ({terms})")
    return q, ys


def _shift(matrix: list[list[str]], kappa: float) -> list[list[str]]:
    return [[f"({c}) - {kappa!r}" if i == j else c for j, c in enumerate(row)]
            for i, row in enumerate(matrix)]


def resonant_system(rng, n: int, solvable: bool | None = None, scale: float = 0.4):
    """Tune ``M0 - κI`` so that 1 is a multiplier; returns ``(system, kappa)``.

    A positive real multiplier ``ζ`` of the adjoint monodromy, well separated
    in modulus from the others, is moved to 1 near ``κ* = -ln ζ / p``;
    ``tune_to_resonance`` locates it from a bracket.  Draws whose monodromy
    has condition number above ``MAX_CONDITION`` are rejected, since products
    like ``Z^T X`` cannot then be checked to an absolute 1e-9.  ``solvable`` selects a
    manufactured forcing (True), a random one (False) or none (None).
    """
    while True:
        m0 = random_matrix_strings(rng, n, scale)
        base = PeriodicSystem.from_strings(m0, None, TWO_PI)
        zp = adjoint_fundamental(base, TWO_PI, 1e-12)
        if np.linalg.cond(zp) > MAX_CONDITION:
            continue  # the κ shift rescales Z(p) and leaves this unchanged
        zeta = np.linalg.eigvals(zp)
        for z in zeta:
            if abs(z.imag) > 1e-9 or z.real <= 1e-6:
                continue
            others = [abs(w) for w in zeta if abs(w - z) > 1e-9]
            if all(abs(math.log(z.real) - math.log(o)) > 0.2 for o in others if o > 0):
                zr = z.real
                break
        else:
            continue
        kstar = -math.log(zr) / TWO_PI
        forcing = [trig_term(rng, 1.0) for _ in range(n)] if solvable is False else None
        res = tune_to_resonance(shifted_family(m0, forcing), (kstar - 0.05, kstar + 0.05))
        if not solvable:
            return res.system, res.kappa
        tuned = _shift(m0, res.kappa)
        q, _ = manufactured_forcing(rng, tuned)
        return PeriodicSystem.from_strings(tuned, q, TWO_PI), res.kappa
