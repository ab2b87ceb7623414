"""Coarray-domain MUSIC estimators.

The virtual observation z (length 2 * mv - 1) is rearranged into an
mv x mv augmented covariance in one of two ways: direct rearrangement
into a Toeplitz-like matrix, or spatial smoothing over the mv coarray
subarrays. Both share the same noise subspace on exact data, so MUSIC
applied to either yields the same asymptotic behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    'AugmentedCovariance', 'DoaEstimate',
    'subarray_select', 'gamma_stack', 'augment_direct',
    'augment_spatial_smoothing', 'noise_subspace', 'music_spectrum',
    'estimate_doas', 'run_music', 'default_grid',
]

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0

# Grid steering matrices keyed by (mv, step, d0 / wavelength); entries
# are read-only and shared across trials.
_GRID_CACHE = {}


@dataclass(frozen=True)
class AugmentedCovariance:
    """An mv x mv coarray covariance with its construction tag."""

    rv: np.ndarray
    mv: int
    kind: str


@dataclass(frozen=True)
class DoaEstimate:
    """MUSIC estimation outcome.

    Attributes:
        angles: Estimated DOAs in radians, ascending. Holds fewer than
            the requested number of entries when ``resolved`` is False.
        resolved: True when the spectrum produced the requested number
            of peaks.
        refined: Per-angle flag, True where sub-grid refinement
            succeeded (False entries fall back to the best grid or
            search point).
        grid: Spectrum grid angles, present on request.
        spectrum: Pseudo-spectrum values over ``grid``, present on
            request.
    """

    angles: np.ndarray
    resolved: bool
    refined: np.ndarray
    grid: np.ndarray = None
    spectrum: np.ndarray = None


def subarray_select(z, i, mv):
    """The i-th coarray subarray z_i (1-based i as is conventional).

    Subarray i selects entries i .. i + mv - 1 of z when entries are
    numbered from 1, i.e. lags i - mv .. i - 1.
    """
    z = np.asarray(z)
    if z.shape[0] != 2 * mv - 1:
        raise ValueError(f'z must have length {2 * mv - 1}, got {z.shape[0]}')
    if not 1 <= i <= mv:
        raise ValueError(f'subarray index must be in 1..{mv}, got {i}')
    return z[i - 1:i - 1 + mv]


def gamma_stack(mv):
    """Dense stacking matrix Gamma with vec(Rv1) = Gamma @ z.

    Block b (zero-based, b = 0 .. mv - 1) of the result selects
    subarray mv - b, so columns of the direct augmentation appear in
    the vec order of :func:`augment_direct`.
    """
    gamma = np.zeros((mv * mv, 2 * mv - 1))
    for b in range(mv):
        for j in range(mv):
            gamma[b * mv + j, mv - 1 - b + j] = 1.0
    gamma.setflags(write=False)
    return gamma


def augment_direct(z, mv):
    """Direct augmentation: column c of Rv1 is subarray mv - c.

    With zero-based columns, ``Rv1[:, c] = z[mv - 1 - c : 2 * mv - 1 - c]``,
    so ``Rv1[a, c] = z[mv - 1 + a - c]`` depends on a - c only. On an
    exact conjugate-symmetric z the result is Hermitian Toeplitz.
    """
    z = np.asarray(z)
    if z.shape[0] != 2 * mv - 1:
        raise ValueError(f'z must have length {2 * mv - 1}, got {z.shape[0]}')
    idx = np.arange(mv)[:, None] + (mv - 1 - np.arange(mv))[None, :]
    return AugmentedCovariance(rv=z[idx], mv=mv, kind='direct')


def augment_spatial_smoothing(z, mv):
    """Spatially smoothed augmentation Rv2 = sum_i z_i z_i^H / mv.

    Always positive semidefinite. On an exact model z it equals
    Rv1 @ Rv1 / mv, so it shares eigenvectors with the direct
    augmentation.
    """
    z = np.asarray(z)
    if z.shape[0] != 2 * mv - 1:
        raise ValueError(f'z must have length {2 * mv - 1}, got {z.shape[0]}')
    cols = z[np.arange(mv)[:, None] + np.arange(mv)[None, :]]
    rv = cols @ cols.conj().T / mv
    rv = 0.5 * (rv + rv.conj().T)
    return AugmentedCovariance(rv=rv, mv=mv, kind='spatial_smoothing')


def noise_subspace(rv, k):
    """Orthonormal noise-subspace basis of an augmented covariance.

    Eigenvalues are sorted ascending by algebraic value and the first
    mv - k eigenvectors form the basis; this matches the smallest-
    eigenvalue convention and needs no detection logic. Sample direct
    augmentations may be indefinite, which is fine here.

    Args:
        rv: Hermitian mv x mv matrix or an :class:`AugmentedCovariance`.
        k: Number of sources, 1 <= k < mv.

    Returns:
        Complex mv x (mv - k) matrix with orthonormal columns.
    """
    if isinstance(rv, AugmentedCovariance):
        rv = rv.rv
    rv = np.asarray(rv)
    mv = rv.shape[0]
    if not 1 <= k < mv:
        raise ValueError(f'need 1 <= k < mv = {mv}, got k = {k}')
    _, vecs = np.linalg.eigh(rv)
    return vecs[:, :mv - k]


def _virtual_steering(mv, phi):
    """Virtual-ULA response at phase phi: exp(j * l * phi), l = 0..mv-1."""
    return np.exp(1j * np.outer(np.arange(mv), phi))


def _grid_matrix(mv, step, ratio):
    """Cached grid angles and steering matrix for the virtual ULA."""
    key = (mv, float(step), float(ratio))
    hit = _GRID_CACHE.get(key)
    if hit is None:
        grid = np.arange(-np.pi / 2 + step, np.pi / 2, step)
        a = _virtual_steering(mv, 2.0 * np.pi * ratio * np.sin(grid))
        grid.setflags(write=False)
        a.setflags(write=False)
        hit = (grid, a)
        _GRID_CACHE[key] = hit
    return hit


def music_spectrum(en, grid, d0=0.5, wavelength=1.0):
    """MUSIC pseudo-spectrum 1 / (a^H E_n E_n^H a) over a grid.

    Args:
        en: Noise-subspace basis, mv x (mv - k).
        grid: Angles in radians.
        d0: Virtual-ULA spacing.
        wavelength: Carrier wavelength.

    Returns:
        Strictly positive spectrum values, one per grid angle.
    """
    en = np.asarray(en)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    phi = 2.0 * np.pi * (d0 / wavelength) * np.sin(grid)
    a = _virtual_steering(en.shape[0], phi)
    d = np.sum(np.abs(en.conj().T @ a) ** 2, axis=0)
    return 1.0 / np.maximum(d, np.finfo(float).tiny)


def _null_power(en, theta, rate):
    """Noise-subspace energy a(theta)^H E_n E_n^H a(theta)."""
    a = np.exp(1j * rate * np.sin(theta) * np.arange(en.shape[0]))
    e = en.conj().T @ a
    return float(np.real(e @ e.conj()))


def _parabola_vertex(x_mid, h, y0, y1, y2):
    """Vertex of the parabola through (x_mid - h, y0), (x_mid, y1), (x_mid + h, y2)."""
    den = y0 - 2.0 * y1 + y2
    if den <= 0:
        return None
    vertex = x_mid - 0.5 * h * (y2 - y0) / den
    if abs(vertex - x_mid) > h:
        return None
    return vertex


def _refine_peak(dfun, theta, step, d_left, d_mid, d_right, iters):
    """Sub-grid peak refinement inside one grid cell.

    Quadratic interpolation on the grid triple seeds the candidate,
    then a golden-section search over the cell with a final parabolic
    fit polishes it. Returns (angle, refined_flag).
    """
    candidates = [(d_mid, theta)]
    vertex = _parabola_vertex(theta, step, d_left, d_mid, d_right)
    if vertex is not None:
        candidates.append((dfun(vertex), vertex))
    a, b = theta - step, theta + step
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = dfun(c), dfun(d)
    for _ in range(max(int(iters), 0)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = dfun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = dfun(d)
    candidates.append((fc, c))
    candidates.append((fd, d))
    mid, h = 0.5 * (a + b), 0.5 * (b - a)
    if h > 0:
        y0, y1, y2 = dfun(mid - h), dfun(mid), dfun(mid + h)
        candidates.append((y1, mid))
        polish = _parabola_vertex(mid, h, y0, y1, y2)
        if polish is not None:
            candidates.append((dfun(polish), polish))
    best_val, best_theta = min(candidates, key=lambda it: (it[0], it[1]))
    return best_theta, best_theta != theta


def _find_peaks(d):
    """Indices of interior local minima of the null power d."""
    left = d[1:-1] < d[:-2]
    right = d[1:-1] <= d[2:]
    return np.nonzero(left & right)[0] + 1


def default_grid(grid_step=np.deg2rad(0.1)):
    """The default search grid over (-pi/2, pi/2) at the given step."""
    return np.arange(-np.pi / 2 + grid_step, np.pi / 2, grid_step)


def estimate_doas(rv, k, grid_step=np.deg2rad(0.1), refine_iters=5,
                  d0=0.5, wavelength=1.0, return_spectrum=False):
    """Grid MUSIC with sub-grid refinement on an augmented covariance.

    Peaks are interior local maxima of the pseudo-spectrum; the k
    largest are kept (ties broken toward the larger spectrum value,
    then the smaller angle) and each is refined within its grid cell.
    When fewer than k local maxima exist the estimate is returned with
    ``resolved=False`` and the peaks that were found.

    Args:
        rv: mv x mv augmented covariance or :class:`AugmentedCovariance`.
        k: Number of sources to estimate, 1 <= k < mv.
        grid_step: Grid spacing in radians.
        refine_iters: Golden-section iterations per peak.
        d0: Virtual-ULA spacing.
        wavelength: Carrier wavelength.
        return_spectrum: Attach the grid and spectrum to the result.

    Returns:
        A :class:`DoaEstimate` with ascending angles.
    """
    if isinstance(rv, AugmentedCovariance):
        rv = rv.rv
    rv = np.asarray(rv)
    mv = rv.shape[0]
    en = noise_subspace(rv, k)
    ratio = d0 / wavelength
    rate = 2.0 * np.pi * ratio
    grid, a_grid = _grid_matrix(mv, grid_step, ratio)
    d = np.sum(np.abs(en.conj().T @ a_grid) ** 2, axis=0)
    peaks = _find_peaks(d)
    order = np.lexsort((grid[peaks], d[peaks]))
    kept = peaks[order[:k]]
    resolved = kept.shape[0] == k

    dfun = lambda theta: _null_power(en, theta, rate)
    angles = np.empty(kept.shape[0])
    refined = np.empty(kept.shape[0], dtype=bool)
    for j, idx in enumerate(kept):
        angles[j], refined[j] = _refine_peak(
            dfun, grid[idx], grid_step, d[idx - 1], d[idx], d[idx + 1],
            refine_iters)
    order = np.argsort(angles)
    est = DoaEstimate(
        angles=angles[order], resolved=resolved, refined=refined[order],
        grid=grid if return_spectrum else None,
        spectrum=1.0 / np.maximum(d, np.finfo(float).tiny)
        if return_spectrum else None)
    return est


def run_music(z, mv, k, method='ss', **kwargs):
    """Augment a virtual observation and run MUSIC on it.

    Args:
        z: Virtual observation of length 2 * mv - 1.
        mv: Virtual-ULA size.
        k: Number of sources.
        method: ``'ss'`` for spatial smoothing, ``'da'`` for direct
            augmentation.
        **kwargs: Passed through to :func:`estimate_doas`.

    Returns:
        A :class:`DoaEstimate`.
    """
    if method == 'ss':
        aug = augment_spatial_smoothing(z, mv)
    elif method == 'da':
        aug = augment_direct(z, mv)
    else:
        raise ValueError(f"method must be 'ss' or 'da', got {method!r}")
    return estimate_doas(aug, k, **kwargs)
