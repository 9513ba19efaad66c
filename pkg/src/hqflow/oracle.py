"""Independent brute-force references for the symmetric-function calculus.

Deliberately slow and simple: sigma values come from literal subset
enumeration and derivative matrices from central finite differences of
eigenvalues obtained with numpy's eigvalsh.  Nothing here shares code
with the fast paths in `symmfunc`, so agreement between the two is a
meaningful check.

Samplers draw eigenvalue lists uniformly from the box [-1, 3]^n and
keep those inside the Garding cone; the box is biased toward
admissibility while still producing sign-mixed spectra, which the cone
lemmas need.  Acceptance rates at k = n/2 run roughly 40-80% for the
plain cone test, 10-40% with a negative-entry filter, and a few percent
with the pinch filter; samplers give up after 1e6 rejections.
"""

import itertools
import math

import numpy as np

__all__ = [
    "sigma_brute", "sigma_brute_rows", "in_gamma_brute",
    "log_quotient_brute", "fij_fd",
    "sample_gamma_k", "sample_gamma_k_batch", "sample_arrowhead",
]

_MAX_N = 12
_MAX_REJECT = 10**6
_BOX_LO, _BOX_HI = -1.0, 3.0


def sigma_brute(lam, m):
    """m-th elementary symmetric polynomial by literal subset enumeration."""
    lam = tuple(float(v) for v in lam)
    n = len(lam)
    if n > _MAX_N:
        raise ValueError(f"brute-force sigma limited to n <= {_MAX_N}, got {n}")
    if not 0 <= m <= n:
        raise ValueError(f"order m={m} out of range for n={n}")
    total = 0.0
    for subset in itertools.combinations(lam, m):
        total += math.prod(subset)
    return total


def sigma_brute_rows(rows, m):
    """sigma_m of each row of a 2-D array; the same enumeration as
    sigma_brute, vectorized across samples only."""
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[1]
    if n > _MAX_N:
        raise ValueError(f"brute-force sigma limited to n <= {_MAX_N}, got {n}")
    if not 0 <= m <= n:
        raise ValueError(f"order m={m} out of range for n={n}")
    if m == 0:
        return np.ones(rows.shape[0])
    idx = np.array(list(itertools.combinations(range(n), m)))
    return rows[:, idx].prod(axis=2).sum(axis=1)


def in_gamma_brute(lam, k):
    """Garding cone test using only brute-force sigma values."""
    return all(sigma_brute(lam, i) > 0.0 for i in range(1, k + 1))


def log_quotient_brute(A, k, l):
    """log(sigma_k/sigma_l)(lambda(A)) via numpy eigenvalues and brute sigma."""
    lam = np.linalg.eigvalsh(np.asarray(A, dtype=float))
    num = sigma_brute(lam, k)
    den = sigma_brute(lam, l)
    if num <= 0.0 or den <= 0.0:
        raise ValueError("matrix is not admissible for the quotient")
    return math.log(num / den)


def _rows_in_gamma(rows, k):
    """Boolean mask of rows inside Gamma_k, by brute sigma."""
    ok = np.ones(rows.shape[0], dtype=bool)
    for i in range(1, k + 1):
        ok &= sigma_brute_rows(rows, i) > 0.0
    return ok


def fij_fd(A, k, l, h=1e-6, h_min=1e-12):
    """Central-difference derivative matrix of log(sigma_k/sigma_l).

    Off-diagonal entries perturb a_ij and a_ji by h/2 each (the two
    entries are treated as independent variables, so the symmetric
    perturbation advances the pair derivative by h); diagonal entries
    perturb by the full h.  If a perturbed matrix leaves Gamma_k the
    step is halved, down to h_min.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if not in_gamma_brute(np.linalg.eigvalsh(A), k):
        raise ValueError("base matrix is not admissible")
    F = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 0.5
            step = h
            while True:
                try:
                    plus = log_quotient_brute(A + step * E, k, l)
                    minus = log_quotient_brute(A - step * E, k, l)
                    break
                except ValueError:
                    step *= 0.5
                    if step < h_min:
                        raise ValueError(
                            "perturbation cannot stay in Gamma_k above "
                            f"h_min={h_min}") from None
            F[i, j] = F[j, i] = (plus - minus) / (2.0 * step)
    return F


def _apply_filters(rows, min_negative, pinch):
    """Constraint filters; returns a list of eigenvalue vectors.

    Default output order is descending.  With min_negative the order is
    ascending so the designated first entry is the negative one.  With
    pinch=(delta, eps) the output is (lam_1, rest descending) where
    lam_1 is the smallest positive entry satisfying the pinch
    inequalities against the remaining entries.
    """
    out = []
    for row in rows:
        if min_negative:
            lam = np.sort(row)
            if lam[0] >= 0.0:
                continue
            out.append(lam)
        elif pinch is not None:
            delta, eps = pinch
            chosen = None
            for i in np.argsort(row):
                first = row[i]
                if first <= 0.0:
                    continue
                rest = np.delete(row, i)
                if rest.min() >= 0.0:
                    break
                if first >= delta * rest.max() and -rest.min() >= eps * first:
                    chosen = np.concatenate(([first], np.sort(rest)[::-1]))
                    break
            if chosen is None:
                continue
            out.append(chosen)
        else:
            out.append(np.sort(row)[::-1])
    return out


def sample_gamma_k(n, k, rng, min_negative=False, pinch=None):
    """One eigenvalue list from Gamma_k by rejection sampling.

    Entries are uniform in [-1, 3]; acceptance uses only brute-force
    sigma values.  `min_negative` additionally requires a negative
    minimum entry; `pinch`=(delta, eps) applies the two-sided pinch
    filter (needs a positive designated entry and a negative minimum).
    """
    return sample_gamma_k_batch(n, k, rng, 1,
                                min_negative=min_negative, pinch=pinch)[0]


def sample_gamma_k_batch(n, k, rng, count, min_negative=False, pinch=None,
                         chunk=512):
    """`count` eigenvalue lists from Gamma_k; see sample_gamma_k."""
    if n > _MAX_N:
        raise ValueError(f"sampling limited to n <= {_MAX_N}, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"cone order k={k} out of range for n={n}")
    accepted = []
    rejected = 0
    while len(accepted) < count:
        rows = rng.uniform(_BOX_LO, _BOX_HI, size=(chunk, n))
        rows = rows[_rows_in_gamma(rows, k)]
        kept = _apply_filters(rows, min_negative, pinch)
        rejected += chunk - len(kept)
        if rejected > _MAX_REJECT:
            raise ValueError("sampling constraint too tight: "
                             f"{rejected} rejections without {count} accepts")
        accepted.extend(kept)
    return np.array(accepted[:count])


def sample_arrowhead(n, k, rng, max_tries=_MAX_REJECT):
    """Symmetric matrix with a negative (1,1) entry, an otherwise diagonal
    lower-right block, arbitrary first row, and spectrum in Gamma_k."""
    for _ in range(max_tries):
        A = np.zeros((n, n))
        A[np.arange(1, n), np.arange(1, n)] = rng.uniform(0.0, 3.0, n - 1)
        A[0, 0] = -rng.uniform(0.05, 1.0)
        A[0, 1:] = A[1:, 0] = rng.uniform(-1.0, 1.0, n - 1)
        lam = np.linalg.eigvalsh(A)
        if in_gamma_brute(lam, k):
            return A
    raise ValueError("sampling constraint too tight for arrowhead matrices")
