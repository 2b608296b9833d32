"""Equivariant quantum channels T(A) = P_k (A x I) P_k*.

The grade-k intertwiner P_k acts on monomials as
P_k(z^m w^n) = c_{m,n} zeta^{m+n-k}, and the whole channel reduces to exact
finite sums over the orthonormal-basis coupling coefficients

    w^{(p)}_{m,n} = c_{m,n} ||zeta^p|| / (||z^m|| ||w^n||),   m + n = p + k,

which satisfy sum_n (w^{(p)})^2 = 1 (P_k P_k* = I).  No quadrature enters the
channel; everything is log-domain-assembled products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .bergman import TruncatedOperator, log_monomial_norm_sq
from .specfun import log_channel_constant_sq, validate_weight

__all__ = [
    "ChannelParams",
    "ProjectionCoefficients",
    "SpectrumWindowError",
    "projection_coefficients",
    "pk_star_vector",
    "isometry_weights",
    "apply_channel",
    "diagonal_response",
    "diagonal_output_spectrum",
    "response_tail_bound",
    "output_trace_interval",
    "functional_trace",
    "sqrt_series_coefficient",
    "sqrt_series_coefficients",
]

SPECTRUM_SLACK = 1e-9


class SpectrumWindowError(ValueError):
    """A Hermitian spectrum left the window [-slack, 1 + slack]."""


@dataclass(frozen=True)
class ChannelParams:
    """Parameters of T: weight mu input, weight nu tensor factor, grade k."""

    mu: float
    nu: float
    k: int
    output_degree: int | None = None

    def __post_init__(self):
        validate_weight(self.mu)
        validate_weight(self.nu)
        if self.k < 0 or self.k != int(self.k):
            raise ValueError("k must be a natural number")

    @property
    def target_weight(self) -> float:
        return self.mu + self.nu + 2 * self.k

    @property
    def trace_factor(self) -> float:
        """Tr T(A) / Tr A = (mu + nu + 2k - 1)/(mu - 1)."""
        return (self.mu + self.nu + 2 * self.k - 1.0) / (self.mu - 1.0)

    def default_output_degree(self) -> int:
        if self.output_degree is not None:
            return self.output_degree
        return max(int(4 * (self.nu + self.k)), 512)


def _derivative_sum(params: ChannelParams, m, n):
    """S(m,n) = sum_j (-1)^{k-j} binom(k,j) (m)_j^fall (n)_{k-j}^fall / ((mu)_j (nu)_{k-j}).

    c_{m,n} = C * S(m,n), signed so that the adjoint sends the constant to
    +C (z-w)^k (the integral-form convention; the derivative and integral
    forms of the intertwiner differ by (-1)^k and only this sign makes them
    mutually adjoint).  Vectorized over broadcast m, n arrays; k is small, the
    falling factorials are short products, and no cancellation trouble arises
    because successive terms drop by ~n per order.
    """
    mu, nu, k = params.mu, params.nu, params.k
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    total = np.zeros(np.broadcast(m, n).shape)
    for j in range(k + 1):
        fall_m = np.ones_like(total)
        for i in range(j):
            fall_m = fall_m * (m - i)
        fall_n = np.ones_like(total)
        for i in range(k - j):
            fall_n = fall_n * (n - i)
        denom = math.exp(
            gammaln(mu + j) - gammaln(mu) + gammaln(nu + k - j) - gammaln(nu)
        )
        coeff = (-1.0) ** (k - j) * math.comb(k, j) / denom
        term = coeff * fall_m * fall_n
        # derivative terms vanish outside 0 <= j <= m, k-j <= n
        term = np.where((m >= j) & (n >= k - j), term, 0.0)
        total = total + term
    return total


@dataclass(frozen=True)
class ProjectionCoefficients:
    """Graded action P_k(z^m w^n) = c_{m,n} zeta^{m+n-k} for m+n <= max_grade+k."""

    params: ChannelParams
    max_grade: int
    values: np.ndarray  # values[m, n], zero where m + n < k

    def __getitem__(self, mn) -> float:
        m, n = mn
        return float(self.values[m, n])


def projection_coefficients(
    params: ChannelParams, max_grade: int
) -> ProjectionCoefficients:
    """All c_{m,n} with m + n <= max_grade + k."""
    if max_grade < params.k:
        raise ValueError("max_grade must be >= k")
    top = max_grade + params.k
    m = np.arange(top + 1)[:, None]
    n = np.arange(top + 1)[None, :]
    const = math.exp(0.5 * log_channel_constant_sq(params.mu, params.nu, params.k))
    vals = const * _derivative_sum(params, m, n)
    vals = np.where(m + n < params.k, 0.0, vals)
    vals = np.where(m + n > top, 0.0, vals)
    return ProjectionCoefficients(params, max_grade, vals)


def isometry_weights(params: ChannelParams, p: int, n=None) -> np.ndarray:
    """Orthonormal coupling weights w^{(p)}_{m,n} over m + n = p + k.

    Defaults to the full row n = 0..p+k; pass ``n`` (array) to select entries.
    The full row has unit square sum.
    """
    mu, nu, k = params.mu, params.nu, params.k
    s = params.target_weight
    if n is None:
        n = np.arange(p + k + 1)
    n = np.asarray(n)
    m = p + k - n
    S = _derivative_sum(params, m, n)
    log_c = 0.5 * log_channel_constant_sq(mu, nu, k)
    log_scale = 0.5 * (
        log_monomial_norm_sq(s, p)
        - log_monomial_norm_sq(mu, m)
        - log_monomial_norm_sq(nu, n)
    )
    with np.errstate(divide="ignore"):
        out = np.sign(S) * np.exp(log_c + np.log(np.abs(S), where=S != 0,
                                                 out=np.full_like(S, -np.inf)) + log_scale)
    return np.where((m >= 0) & (n >= 0), out, 0.0)


def pk_star_vector(params: ChannelParams, p: int) -> list[tuple[int, int, float]]:
    """Monomial expansion of P_k* zeta^p: complete list over m + n = p + k.

    Coefficients are c_{m,n} ||zeta^p||^2 / (||z^m||^2 ||w^n||^2); the list is
    finite and untruncated.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    mu, nu, k = params.mu, params.nu, params.k
    s = params.target_weight
    out = []
    for n in range(p + k + 1):
        m = p + k - n
        S = float(_derivative_sum(params, m, n))
        if S == 0.0:
            continue
        log_mag = (
            0.5 * log_channel_constant_sq(mu, nu, k)
            + math.log(abs(S))
            + log_monomial_norm_sq(s, p)
            - log_monomial_norm_sq(mu, m)
            - log_monomial_norm_sq(nu, n)
        )
        out.append((m, n, math.copysign(math.exp(log_mag), S)))
    return out


def _weight_grid(params: ChannelParams, p_max: int, m_max: int) -> np.ndarray:
    """V[p, m] = w^{(p)}_{m, p+k-m} for 0 <= p <= p_max, 0 <= m <= m_max."""
    mu, nu, k = params.mu, params.nu, params.k
    s = params.target_weight
    ps = np.arange(p_max + 1)[:, None]
    ms = np.arange(m_max + 1)[None, :]
    ns = ps + k - ms
    valid = ns >= 0
    ns_safe = np.where(valid, ns, 0)
    S = _derivative_sum(params, ms, ns_safe)
    log_scale = 0.5 * (
        log_monomial_norm_sq(s, ps)
        - log_monomial_norm_sq(mu, ms)
        - log_monomial_norm_sq(nu, ns_safe)
    )
    with np.errstate(divide="ignore"):
        log_S = np.log(np.abs(S), where=S != 0, out=np.full_like(S, -np.inf))
    V = np.sign(S) * np.exp(
        0.5 * log_channel_constant_sq(mu, nu, k) + log_S + log_scale
    )
    return np.where(valid, V, 0.0)


def apply_channel(A: TruncatedOperator, params: ChannelParams) -> TruncatedOperator:
    """T(A) = P_k (A x I) P_k* on H_{mu+nu+2k}, by exact finite sums.

    Entry (q, p) of the output is sum_m V[p, m] A[m - (p-q), m] V[q, m - (p-q)];
    grade conservation makes the sum band-limited by A's bandwidth, so the cost
    is O(L * bandwidth * support).  Hermiticity propagates exactly (the
    coupling weights are real).
    """
    if A.weight != params.mu:
        raise ValueError(
            f"operator lives at weight {A.weight}, channel expects mu={params.mu}"
        )
    L = params.default_output_degree()
    k = params.k
    d = A.degree
    nz_rows, nz_cols = np.nonzero(np.abs(A.matrix) > 0)
    out = np.zeros((L + 1, L + 1), dtype=complex)
    if len(nz_rows) == 0:
        return TruncatedOperator(params.target_weight, out, hermitian=A.hermitian)
    m_top = min(d, L + k)
    V = _weight_grid(params, L, m_top)
    offsets = np.unique(nz_cols - nz_rows)  # off = m - m' = p - q
    if A.hermitian:
        offsets = offsets[offsets >= 0]  # mirror the lower triangle exactly
    for off in offsets.tolist():
        m_lo, m_hi = max(0, off), min(m_top, d + off)
        if m_lo > m_hi:
            continue
        ms = np.arange(m_lo, m_hi + 1)
        diag = A.matrix[ms - off, ms]  # entries with m - m' = off
        if not np.any(np.abs(diag) > 0):
            continue
        base = np.arange(L + 1 - abs(off))
        ps, qs = (base + off, base) if off >= 0 else (base, base - off)
        # entry (q, p) = sum_m V[p, m] A[m - off, m] V[q, m - off]
        block = (V[ps][:, ms] * V[qs][:, ms - off]) @ diag
        out[qs, ps] = block
        if A.hermitian and off > 0:
            out[ps, qs] = np.conj(block)
    return TruncatedOperator(params.target_weight, out, hermitian=A.hermitian)


def diagonal_response(params: ChannelParams, m: int, p) -> np.ndarray:
    """Diagonal of T(e_m e_m*): exact eigenvalue-like entries lambda_p(m).

    lambda_p(m) = (w^{(p)}_{m, p+k-m})^2, nonzero for p >= m - k; the output of
    the channel on a diagonal input is exactly diagonal (grade conservation).
    Vectorized over an array of output indices ``p``.
    """
    p = np.asarray(p)
    n = p + params.k - m
    mu, nu, k = params.mu, params.nu, params.k
    s = params.target_weight
    valid = n >= 0
    n_safe = np.where(valid, n, 0)
    S = _derivative_sum(params, m, n_safe)
    log_scale = (
        log_monomial_norm_sq(s, p)
        - log_monomial_norm_sq(mu, m)
        - log_monomial_norm_sq(nu, n_safe)
    )
    with np.errstate(divide="ignore"):
        log_S2 = 2.0 * np.log(np.abs(S), where=S != 0, out=np.full_like(S, -np.inf))
    lam = np.exp(log_channel_constant_sq(mu, nu, k) + log_S2 + log_scale)
    return np.where(valid, lam, 0.0)


def diagonal_output_spectrum(params: ChannelParams, diag, cut: int) -> np.ndarray:
    """Output diagonal of T(A) for a diagonal input A, entries p = 0..cut.

    For diagonal A the output is exactly diagonal (grade conservation), so
    this is its full spectrum up to the cut — no matrix is materialized,
    which matters for weight sweeps where cut ~ 64 nu.
    """
    diag = np.asarray(diag, dtype=float)
    ps = np.arange(cut + 1)
    out = np.zeros(cut + 1)
    for m in range(diag.size):
        if diag[m] != 0.0:
            out += diag[m] * diagonal_response(params, m, ps)
    return out


def response_tail_bound(params: ChannelParams, m: int, cut: int) -> float:
    """Rigorous upper bound on sum_{p > cut} lambda_p(m) for integer weights.

    Uses the exact finite-product forms of the norm ratios:
    n!/(nu)_n <= (nu-1)!/(n+1)^{nu-1} and p!/(s)_p <= (s-1)!/(p+1)^{s-1},
    a triangle bound on the derivative sum evaluated at the tail start, and
    the integral test on (p+1)^{-mu}.
    """
    mu, nu, k = params.mu, params.nu, params.k
    if mu != int(mu) or nu != int(nu):
        raise ValueError("rigorous tail bound requires integer weights")
    mu_i, nu_i = int(mu), int(nu)
    s = mu_i + nu_i + 2 * k
    n0 = cut + 1 + k - m
    if n0 <= 0:
        raise ValueError("cut must put the whole tail at n >= 1")
    # |S(m,n)| <= n^k * D(n0) for n >= n0 (each term's n-power bounded, then
    # the leftover n^{-j} factors evaluated at the smallest tail n)
    D = 0.0
    for j in range(k + 1):
        fall_m = 1.0
        for i in range(j):
            fall_m *= max(m - i, 0)
        denom = math.exp(
            gammaln(mu + j) - gammaln(mu) + gammaln(nu + k - j) - gammaln(nu)
        )
        D += math.comb(k, j) * fall_m / (denom * n0**j)
    if D == 0.0:
        return 0.0
    # (nu)_n/n! <= (n + nu - 1)^{nu-1}/(nu-1)! and n <= p + k:
    # lambda_p(m) <= E (p+1)^{-mu}; ratio suprema over p >= p0 clamp at 1
    p0 = cut + 1
    growth = max(1.0, (p0 + k + nu_i - 1 - m) / (p0 + 1)) ** (nu_i - 1) * max(
        1.0, (p0 + k - m) / (p0 + 1)
    ) ** (2 * k)
    logE = (
        log_channel_constant_sq(mu, nu, k)
        + 2.0 * math.log(D)
        + (gammaln(mu + m) - gammaln(mu) - gammaln(m + 1))
        + gammaln(s) - gammaln(nu_i)
        + math.log(growth)
    )
    # sum_{p > cut} (p+1)^{-mu} <= integral_cut^inf (x+1)^{-mu} dx
    log_tail = logE + (1.0 - mu) * math.log(cut + 1.0) - math.log(mu - 1.0)
    return math.exp(log_tail)


def output_trace_interval(
    A: TruncatedOperator, params: ChannelParams, cut: int, extend_to: int | None = None
) -> tuple[float, float, float]:
    """(truncated trace at ``cut``, tail estimate, rigorous tail bound).

    The trace of T(A) beyond the cut depends only on A's diagonal (grade
    conservation).  The estimate sums the exact diagonal response up to
    ``extend_to`` (default 100 * cut) and adds the rigorous remainder bound;
    the bound alone brackets: trace_cut <= Tr T(A) <= trace_cut + bound for
    PSD A.
    """
    if A.weight != params.mu:
        raise ValueError("weight mismatch")
    extend_to = extend_to or 100 * cut
    diag = np.real(np.diag(A.matrix))
    ps_head = np.arange(cut + 1)
    ps_tail = np.arange(cut + 1, extend_to + 1)
    trace_cut = 0.0
    tail_est = 0.0
    tail_bound = 0.0
    for m in range(A.degree + 1):
        if diag[m] == 0.0:
            continue
        trace_cut += diag[m] * float(np.sum(diagonal_response(params, m, ps_head)))
        tail_sum = float(np.sum(diagonal_response(params, m, ps_tail)))
        tail_est += diag[m] * (tail_sum + response_tail_bound(params, m, extend_to))
        tail_bound += diag[m] * response_tail_bound(params, m, cut)
    return trace_cut, tail_est, tail_bound


def functional_trace(B: TruncatedOperator, psi) -> float:
    """Tr psi(B) for a polynomial psi with psi(0) = 0.

    ``psi`` is the ascending coefficient list [0, a1, a2, ...].  B must be
    Hermitian with spectrum in [-1e-9, 1 + 1e-9] (clamped to [0, 1] before
    evaluation); a spectrum outside the window raises
    :class:`SpectrumWindowError` since the channel is a complete contraction.
    Exactly diagonal matrices use their diagonal as the spectrum; everything
    else goes through a Hermitian eigendecomposition.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.size == 0 or psi[0] != 0.0:
        raise ValueError("psi must be a polynomial with psi(0) = 0")
    if not B.hermitian:
        raise ValueError("functional calculus requires a Hermitian operator")
    off = B.matrix - np.diag(np.diag(B.matrix))
    if np.all(off == 0):
        eigs = np.real(np.diag(B.matrix))
    else:
        eigs = np.linalg.eigvalsh(B.matrix)
    if eigs.min() < -SPECTRUM_SLACK or eigs.max() > 1.0 + SPECTRUM_SLACK:
        raise SpectrumWindowError(
            f"spectrum [{eigs.min():.3e}, {eigs.max():.3e}] outside "
            f"[-{SPECTRUM_SLACK}, 1+{SPECTRUM_SLACK}]"
        )
    eigs = np.clip(eigs, 0.0, 1.0)
    total = 0.0
    power = eigs.copy()
    for a in psi[1:]:
        if a != 0.0:
            total += a * float(np.sum(power))
        power = power * eigs
    return total


def sqrt_series_coefficient(i: int) -> float:
    """Coefficient (1/2)_{i-1} / (2 i!) of the boundary-flattened sqrt series.

    These are the positive weights with x = sum_i coeff_i (1 - (1-x^2)^i) on
    [0, 1]; they sum to 1 and decay like i^{-3/2}.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    return math.exp(
        gammaln(i - 0.5) - gammaln(0.5) - math.log(2.0) - gammaln(i + 1.0)
    )


def sqrt_series_coefficients(count: int) -> np.ndarray:
    """First ``count`` coefficients, i = 1..count, vectorized."""
    i = np.arange(1, count + 1, dtype=float)
    return np.exp(gammaln(i - 0.5) - gammaln(0.5) - math.log(2.0) - gammaln(i + 1.0))
