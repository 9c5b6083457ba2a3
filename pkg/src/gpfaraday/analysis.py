"""Pattern diagnostics on snapshots: integrated profiles, Fourier side peaks,
power spectra, polar Bessel-mode decomposition, (n_r, l) labeling, growth
fitting and the subharmonic-response check.

Transform conventions: the 1D spectrum is F(k) = dx * DFT(profile) so that
integral dk |F|^2 = 2*pi*dx*sum(profile^2) (Parseval); the 2D decomposition is
P_l(k) = sqrt(k/2/pi) * integral dphi dr r ns(r,phi) J_l(k r) exp(-i l phi).
"""

import math
from dataclasses import dataclass, field as dfield

import numpy as np
import scipy.fft as sfft
from scipy.ndimage import map_coordinates
from scipy.special import jv


class AnalysisError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# 1D profiles and spectra


@dataclass
class Profile1D:
    x: np.ndarray        # um
    values: np.ndarray
    kind: str            # "delta_n" | "spin"


def integrated_axis_profile(density, grid):
    """Integrate a density over all transverse axes (trapezoid), leaving the
    first-axis profile; 1D input is returned as is."""
    out = np.asarray(density, dtype=float)
    for axis in range(grid.dims - 1, 0, -1):
        out = np.trapezoid(out, dx=grid.spacings[axis], axis=axis)
    return out


def integrate_profile(fld, kind, tf_profile=None):
    """Integrated 1D profile of a snapshot: total-density deviation from the
    stored Thomas-Fermi equilibrium ("delta_n") or spin density ("spin")."""
    from .model import densities

    if kind not in ("delta_n", "spin"):
        raise AnalysisError(f"unknown profile kind {kind!r}")
    dens = densities(fld)
    if kind == "spin":
        values = integrated_axis_profile(dens.spin, fld.grid)
    else:
        if tf_profile is None:
            raise AnalysisError("delta_n profile requires the equilibrium "
                                "Thomas-Fermi reference profile")
        values = integrated_axis_profile(dens.total, fld.grid) - np.asarray(tf_profile)
    return Profile1D(x=fld.grid.axis(0), values=values, kind=kind)


def profile_spectrum(profile_values, dx):
    """(k, F) with F = dx * DFT, k in um^-1 (FFT layout)."""
    values = np.asarray(profile_values, dtype=float)
    k = 2.0 * np.pi * sfft.fftfreq(len(values), d=dx)
    return k, dx * sfft.fft(values)


def profile_power(profile_values, dx):
    """Parseval-consistent integral dk |F|^2 over all k."""
    values = np.asarray(profile_values, dtype=float)
    n = len(values)
    f = dx * sfft.fft(values)
    dk = 2.0 * np.pi / (n * dx)
    return float(np.sum(np.abs(f) ** 2) * dk)


def power_spectrum_1d(profile):
    """Integrated power of a Profile1D."""
    dx = float(profile.x[1] - profile.x[0])
    return profile_power(profile.values, dx)


@dataclass
class SidePeaks:
    found: bool
    k_peak: float = math.nan    # um^-1
    amplitude: float = math.nan
    width: float = math.nan     # FWHM, um^-1


def side_peaks(profile, k_min=None, floor_factor=3.0):
    """Locate the dominant finite-k spectral peak of a real profile.

    Excludes |k| < k_min (default: four spectral bins; pass 2*pi/L_TF to mask
    the trap scale); the peak is refined by quadratic interpolation on the
    log magnitude and measured by its full width at half maximum. Returns
    found=False when no peak clears floor_factor times the median floor.
    """
    values = np.asarray(profile.values, dtype=float)
    if len(values) < 64:
        raise AnalysisError(f"profile too short for peak extraction ({len(values)} < 64)")
    dx = float(profile.x[1] - profile.x[0])
    k, f = profile_spectrum(values, dx)
    mag = np.abs(f)
    dk = k[1] - k[0]
    if k_min is None:
        k_min = 4.0 * dk

    half = slice(1, len(values) // 2)          # positive-k half, real input
    kp, mp = k[half], mag[half]
    mask = kp >= k_min
    if not mask.any():
        raise AnalysisError("k_min excludes the whole spectrum")
    floor = float(np.median(mp[mask]))
    idx = np.flatnonzero(mask)[np.argmax(mp[mask])]
    if mp[idx] < floor_factor * max(floor, 1e-300):
        return SidePeaks(found=False)

    # quadratic refinement on log magnitude
    if 0 < idx < len(kp) - 1 and mp[idx - 1] > 0 and mp[idx + 1] > 0:
        lm, l0, lp = np.log(mp[idx - 1]), np.log(mp[idx]), np.log(mp[idx + 1])
        denom = lm - 2.0 * l0 + lp
        delta = 0.5 * (lm - lp) / denom if denom != 0 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
    else:
        delta = 0.0
    k_peak = float(kp[idx] + delta * dk)
    amp = float(mp[idx])

    half_max = 0.5 * mp[idx]
    left = idx
    while left > 0 and mp[left] > half_max:
        left -= 1
    right = idx
    while right < len(mp) - 1 and mp[right] > half_max:
        right += 1

    def cross(i0, i1):
        if mp[i1] == mp[i0]:
            return kp[i1]
        frac = (half_max - mp[i0]) / (mp[i1] - mp[i0])
        return kp[i0] + frac * (kp[i1] - kp[i0])

    width = float(cross(right - 1, right) - cross(left + 1, left)) if right > left + 1 \
        else float(dk)
    return SidePeaks(found=True, k_peak=k_peak, amplitude=amp, width=abs(width))


# ---------------------------------------------------------------------------
# Polar resampling and Bessel-angular decomposition


def polar_resample(values2d, grid, n_r=None, n_phi=256, r_max=None):
    """Bilinear resample of a cartesian 2D field onto an (r, phi) lattice.

    Returns (r, phi, polar[n_r, n_phi]); points outside the box read zero.
    """
    values2d = np.asarray(values2d, dtype=float)
    if values2d.ndim != 2:
        raise AnalysisError("polar_resample needs a 2D field")
    if n_r is None:
        n_r = grid.points[0] // 2
    if r_max is None:
        r_max = min(grid.extents)
    r = np.linspace(0.0, r_max, n_r)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    xx = np.outer(r, np.cos(phi))
    yy = np.outer(r, np.sin(phi))
    ix = (xx + grid.extents[0]) / grid.spacings[0]
    iy = (yy + grid.extents[1]) / grid.spacings[1]
    polar = map_coordinates(values2d, [ix, iy], order=1, mode="constant", cval=0.0)
    return r, phi, polar


_BASIS_CACHE = {}


def _bessel_basis(l_values, k_grid, r_grid):
    """J_l(k r) matrices with trapezoid weights folded in, cached."""
    key = (tuple(l_values), len(k_grid), float(k_grid[-1]), len(r_grid), float(r_grid[-1]))
    hit = _BASIS_CACHE.get(key)
    if hit is not None:
        return hit
    dr = r_grid[1] - r_grid[0]
    w = np.full(len(r_grid), dr)
    w[0] = w[-1] = 0.5 * dr
    kr = np.outer(k_grid, r_grid)
    mats = {l: jv(l, kr) * (w * r_grid) for l in l_values}
    if len(_BASIS_CACHE) > 8:
        _BASIS_CACHE.clear()
    _BASIS_CACHE[key] = mats
    return mats


@dataclass
class SpectralDecomposition:
    mode: str            # "fourier1d" | "bessel2d"
    l: np.ndarray        # angular orders (fourier1d: [0])
    k: np.ndarray        # um^-1
    coeffs: np.ndarray   # complex, shape (len(l), len(k))
    warnings: list = dfield(default_factory=list)

    def power_per_l(self):
        """integral dk |P_l|^2 for each angular order."""
        return np.trapezoid(np.abs(self.coeffs) ** 2, x=self.k, axis=1)

    def total_power(self):
        return float(np.sum(self.power_per_l()))


def angular_projections(values2d, grid, l_max, n_r=None, n_phi=256, r_max=None):
    """A_l(r) = integral dphi values(r, phi) exp(-i l phi) for l = 0..l_max."""
    r, phi, polar = polar_resample(values2d, grid, n_r=n_r, n_phi=n_phi, r_max=r_max)
    dphi = 2.0 * np.pi / len(phi)
    proj = sfft.fft(polar, axis=1) * dphi       # forward sign matches exp(-i l phi)
    return r, proj[:, : l_max + 1].T            # (l, r)


def bessel_decompose(values2d, grid, l_max=10, k_max=1.5, n_k=128,
                     n_r=None, n_phi=256, r_max=None):
    """Decompose an integrated 2D spin density into Bessel-angular modes
    P_l(k) = sqrt(k/2pi) integral dphi dr r n J_l(k r) exp(-i l phi)."""
    r, proj = angular_projections(values2d, grid, l_max, n_r=n_r, n_phi=n_phi, r_max=r_max)
    l_values = np.arange(l_max + 1)
    k_grid = np.linspace(0.0, k_max, n_k)
    basis = _bessel_basis(tuple(l_values), k_grid, r)
    coeffs = np.empty((l_max + 1, n_k), dtype=complex)
    for l in l_values:
        coeffs[l] = basis[l] @ proj[l]
    coeffs *= np.sqrt(k_grid / (2.0 * np.pi))
    out = SpectralDecomposition(mode="bessel2d", l=l_values, k=k_grid, coeffs=coeffs)
    power = out.power_per_l()
    if len(power) > 1 and np.argmax(power) == l_max and power[l_max] > 0:
        out.warnings.append(
            f"dominant angular power sits at the l_max = {l_max} boundary; "
            "raise l_max to resolve the pattern")
    return out


def bessel_total_power(values2d, grid, l_max=10, k_max=1.5, n_k=128,
                       n_r=None, n_phi=256, r_max=None):
    """sum_l integral dk |P_l|^2, the 2D pattern-intensity observable."""
    return bessel_decompose(values2d, grid, l_max=l_max, k_max=k_max, n_k=n_k,
                            n_r=n_r, n_phi=n_phi, r_max=r_max).total_power()


# ---------------------------------------------------------------------------
# Mode labeling


@dataclass
class ModeLabel:
    l: int
    n_r: int
    confidence: float
    low_confidence: bool = False


def _count_radial_nodes(a_of_r, r, r_limit, rel_floor=0.05):
    """Sign changes of the phase-aligned projection inside r < r_limit,
    ignoring excursions below rel_floor of the peak (boundary noise)."""
    sel = r < r_limit
    a = np.asarray(a_of_r)[sel]
    if a.size == 0 or not np.any(np.abs(a) > 0):
        return 0
    a = a * np.exp(-1j * np.angle(a[np.argmax(np.abs(a))]))
    re = a.real
    floor = rel_floor * np.max(np.abs(re))
    signs = np.sign(re[np.abs(re) > floor])
    return int(np.sum(signs[1:] != signs[:-1]))


def label_mode(decomp, values2d, grid, tf_radius, n_phi=256):
    """(l, n_r) label of a decomposed pattern.

    l maximizes the per-order power; n_r counts sign changes of the l-projected
    radial profile inside the Thomas-Fermi radius; confidence is the dominant
    order's share of the total power (flagged low below 0.5).
    """
    if decomp.mode != "bessel2d":
        raise AnalysisError("label_mode expects a bessel2d decomposition")
    power = decomp.power_per_l()
    total = float(np.sum(power))
    if total <= 0:
        return ModeLabel(l=0, n_r=0, confidence=0.0, low_confidence=True)
    l_star = int(np.argmax(power))
    confidence = float(power[l_star] / total)
    r, proj = angular_projections(values2d, grid, l_star, n_phi=n_phi)
    n_r = _count_radial_nodes(proj[l_star], r, tf_radius)
    return ModeLabel(l=l_star, n_r=n_r, confidence=confidence,
                     low_confidence=confidence < 0.5)


# ---------------------------------------------------------------------------
# Growth and saturation


@dataclass
class GrowthReport:
    t_onset: float        # ms
    rate: float           # 1/ms, exponential fit slope of log power
    t_peak: float         # ms
    saturation_value: float
    triggered: bool = True


def growth_report(times, values, threshold=10.0):
    """Onset/rate/peak of a power time series.

    Onset: first sample above threshold x the initial median (median of the
    leading 5% of samples); rate: least-squares slope of log(values) between
    onset and peak; peak: global maximum. A series that never triggers is
    returned with rate 0 and triggered=False.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 50:
        raise AnalysisError(f"growth_report needs >= 50 samples, got {len(times)}")
    n_base = max(5, len(values) // 20)
    baseline = float(np.median(values[:n_base]))
    above = np.flatnonzero(values > threshold * baseline)
    if len(above) == 0:
        return GrowthReport(t_onset=times[-1], rate=0.0, t_peak=times[-1],
                            saturation_value=float(values[-1]), triggered=False)
    onset = int(above[0])
    peak = int(np.argmax(values))
    if peak < onset:
        peak = onset
    seg = slice(onset, peak + 1)
    if peak - onset >= 2 and np.all(values[seg] > 0):
        rate = float(np.polyfit(times[seg], np.log(values[seg]), 1)[0])
    else:
        rate = 0.0
    return GrowthReport(t_onset=float(times[onset]), rate=rate,
                        t_peak=float(times[peak]),
                        saturation_value=float(values[peak]))


# ---------------------------------------------------------------------------
# Subharmonic response


def mode_amplitude(values2d, grid, l, k_star, n_phi=256):
    """Complex amplitude of the (l, k_star) pattern component:
    integral dphi dr r n(r,phi) J_l(k_star r) exp(-i l phi)."""
    r, proj = angular_projections(values2d, grid, l, n_phi=n_phi)
    dr = r[1] - r[0]
    w = np.full(len(r), dr)
    w[0] = w[-1] = 0.5 * dr
    return complex(np.sum(proj[l] * jv(l, k_star * r) * r * w))


@dataclass
class SubharmonicResult:
    ratio: float            # response period / modulation period
    phase_advance: float    # mean |arg B(t+T) - arg B(t)|, rad
    spectrum_freq: float    # dominant temporal frequency of the signed amplitude, rad/ms
    n_periods: float


def subharmonic_check(times, amplitudes, omega_m):
    """Period ratio of a pattern's oscillation to the drive.

    times must sample at a stride dividing the modulation period and span at
    least two periods. The ratio comes from the mean angular-phase advance per
    period (2*pi / advance); the dominant temporal frequency of the signed
    amplitude (Hann window, parabolic peak interpolation) is reported as a
    cross-check: omega_m/2 for a subharmonic pattern.
    """
    times = np.asarray(times, dtype=float)
    amps = np.asarray(amplitudes, dtype=complex)
    period = 2.0 * np.pi / omega_m
    span = times[-1] - times[0]
    if span < 2.0 * period * (1 - 1e-9):
        raise AnalysisError(f"need >= 2 modulation periods, got {span / period:.2f}")
    dt = times[1] - times[0]
    per_steps = period / dt
    if abs(per_steps - round(per_steps)) > 1e-6 * per_steps:
        raise AnalysisError("snapshot stride does not divide the modulation period")
    m = int(round(per_steps))

    # phase advance between samples exactly one period apart
    pairs = amps[m:] * np.conj(amps[:-m])
    weights = np.abs(pairs)
    good = weights > 0.05 * np.max(weights) if np.max(weights) > 0 else weights >= 0
    if not np.any(good):
        raise AnalysisError("mode amplitude too small to track the phase")
    advances = np.abs(np.angle(pairs[good]))
    if np.std(advances) > 0.5:
        raise AnalysisError(
            f"inconsistent phase advance (std {np.std(advances):.2f} rad); "
            "pattern confidence too low for the subharmonic check")
    adv = float(np.average(advances, weights=weights[good]))
    adv_folded = adv if adv > 1e-3 else 2.0 * np.pi   # harmonic: repeats each period
    ratio = 2.0 * np.pi / adv_folded

    # temporal spectrum of the signed (phase-aligned) amplitude
    ref = np.angle(amps[np.argmax(np.abs(amps))])
    signed = (amps * np.exp(-1j * ref)).real
    signed = signed - signed.mean()
    win = np.hanning(len(signed))
    spec = np.abs(sfft.rfft(signed * win))
    freqs = 2.0 * np.pi * sfft.rfftfreq(len(signed), d=dt)
    i = int(np.argmax(spec[1:])) + 1
    if 0 < i < len(spec) - 1 and spec[i - 1] > 0 and spec[i + 1] > 0:
        lm, l0, lp = np.log(spec[i - 1]), np.log(spec[i]), np.log(spec[i + 1])
        denom = lm - 2 * l0 + lp
        shift = 0.5 * (lm - lp) / denom if denom != 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    spectrum_freq = float(freqs[i] + shift * (freqs[1] - freqs[0]))

    return SubharmonicResult(ratio=ratio, phase_advance=adv,
                             spectrum_freq=spectrum_freq,
                             n_periods=span / period)
