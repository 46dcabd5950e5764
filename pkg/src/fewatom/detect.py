"""Step detection on photon-count traces.

calibrate() locates the equally spaced count levels (atom number comb) in the
trace histogram and refines background and per-atom spacing by a global
regression. detect() rounds each bin to its nearest level, applies two
structural corrections (single-bin excursions are noise-suppressed only at low
SNR, and down-down transition bins are folded into two-atom steps), and emits
number-changing events at bin boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks

from .markov import EventLog, KIND_LOAD, KIND_LOSS1, KIND_LOSS2
from .trace import FluorescenceTrace


class CalibrationError(RuntimeError):
    """Histogram does not show at least two resolvable occupancy levels."""


class DetectionQualityError(RuntimeError):
    """Trace SNR too low for reliable level assignment."""


@dataclass
class Calibration:
    """Count-to-atom-number map: counts = bin_width*(bg_rate + per_atom_rate*N)."""

    per_atom_rate: float  # counts/s per atom
    bg_rate: float  # counts/s
    per_atom_err: float
    bg_err: float
    n_levels: int  # distinct levels used in the fit


@dataclass
class DetectionReport:
    """Quality metrics of one detection pass."""

    n_bins: int
    n_events: int
    snr: float  # level separation over shot noise at the brightest common level
    spike_bins: int  # isolated single-bin excursions suppressed
    merged_bins: int  # one-bin transition dwells folded into a two-atom step
    pair_bumps: int  # sub-threshold bumps recovered as quick load/loss pairs
    ambiguous_bins: int  # boundaries with |dN| > 2 needing local re-vote
    event_rate: float  # detected events/s
    coincidence_probability: float  # chance two events share one bin at that rate


def coincidence_probability(event_rate: float, bin_width: float) -> float:
    """Probability that a bin holding one event holds at least another: 1 - exp(-r*w)."""
    if event_rate < 0 or bin_width <= 0:
        raise ValueError("event_rate >= 0 and bin_width > 0 required")
    return 1.0 - float(np.exp(-event_rate * bin_width))


def calibrate(trace: FluorescenceTrace) -> Calibration:
    """Estimate bg_rate and per_atom_rate from the count histogram comb.

    Peaks of the smoothed histogram give candidate levels; the median spacing
    seeds an assignment of every bin to an integer level, and a linear
    regression counts = a + b*N refines both parameters with standard errors.
    """
    counts = trace.counts
    if len(counts) < 10:
        raise CalibrationError("trace too short to calibrate")
    hist = np.bincount(counts)
    sigma = max(1.0, np.sqrt(max(float(np.median(counts)), 1.0)) / 2.0)
    smooth = gaussian_filter1d(hist.astype(float), sigma)
    min_height = smooth.max() * 0.005
    min_dist = max(2, int(2.0 * sigma))
    peaks, _ = find_peaks(smooth, height=min_height, distance=min_dist,
                          prominence=min_height)
    if len(peaks) < 2:
        raise CalibrationError(f"found {len(peaks)} count level(s); need at least 2")
    spacing = float(np.median(np.diff(np.sort(peaks))))
    base = float(peaks.min())

    # assign each bin to the comb and refine by a global regression
    n_hat = np.round((counts - base) / spacing).astype(np.int64)
    n_hat = np.clip(n_hat, 0, None)
    if len(np.unique(n_hat)) < 2:
        raise CalibrationError("level assignment collapsed onto a single level")
    coef, cov = _linfit(n_hat.astype(float), counts.astype(float))
    a, b = coef
    if b <= 0:
        raise CalibrationError("non-positive comb spacing after refinement")
    w = trace.bin_width
    return Calibration(per_atom_rate=b / w, bg_rate=max(a, 0.0) / w,
                       per_atom_err=float(np.sqrt(cov[1, 1])) / w,
                       bg_err=float(np.sqrt(cov[0, 0])) / w,
                       n_levels=len(np.unique(n_hat)))


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """OLS for y = a + b x returning coefficients and their covariance."""
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    dof = max(len(x) - 2, 1)
    resid = y - design @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(design.T @ design)
    return coef, cov


# Above this SNR a single-bin level excursion cannot plausibly be shot noise
# (it would need a > 4.5 sigma count fluctuation), so it is kept as a genuine
# quick load/loss pair instead of being median-suppressed.
SPIKE_KEEP_SNR = 9.0

# Residual threshold, in shot-noise sigma of the local level, above which a
# flat-stretch bin is read back as a quick load/loss pair.
BUMP_NSIGMA = 4.5


def detect(trace: FluorescenceTrace, cal: Calibration,
           min_snr: float = 5.0) -> tuple[EventLog, DetectionReport]:
    """Recover the event log from a trace.

    Events sit at bin boundaries: dN=+1 load, -1 one-atom loss, -2 two-atom
    loss. A dN=+2 boundary becomes two loads inside the bin, and jumps with
    |dN| > 2 are re-voted with a local median and counted as ambiguous.
    Raises DetectionQualityError when the level separation over shot noise at
    the typical occupancy falls below min_snr.
    """
    w = trace.bin_width
    spacing = cal.per_atom_rate * w
    offset = cal.bg_rate * w
    if spacing <= 0:
        raise ValueError("calibration has non-positive per-atom rate")
    n_hat = np.round((trace.counts - offset) / spacing).astype(np.int64)
    n_hat = np.clip(n_hat, 0, None)

    n_typ = float(np.percentile(n_hat, 99.5))
    noise = np.sqrt(max(offset + spacing * max(n_typ, 1.0), 1.0))
    snr = float(spacing / noise)
    if snr < min_snr:
        raise DetectionQualityError(
            f"level separation / shot noise = {snr:.2f} below minimum {min_snr:.2f}")

    # One-bin excursions that return to the surrounding level: below
    # SPIKE_KEEP_SNR these are suppressed as noise; above it shot noise cannot
    # reach the next level and every such excursion is a real load+loss (or
    # loss+load) pair, so it is left in place.
    spikes = 0
    if len(n_hat) >= 3 and snr < SPIKE_KEEP_SNR:
        mask = (n_hat[1:-1] != n_hat[:-2]) & (n_hat[2:] == n_hat[:-2])
        spikes = int(mask.sum())
        if spikes:
            idx = np.nonzero(mask)[0] + 1
            n_hat[idx] = n_hat[idx - 1]

    # A two-atom loss mid-bin leaves one transition bin at the intermediate
    # level, which would read as two consecutive one-atom losses. Fold the
    # down-down one-bin dwell back into a single -2 step; genuine one-atom
    # losses one bin apart are rarer than this artifact by roughly the event
    # rate times the bin width.
    merged = 0
    nu = (trace.counts - offset) / spacing
    for i in range(1, len(n_hat) - 1):
        if n_hat[i] - n_hat[i - 1] == -1 and n_hat[i + 1] - n_hat[i] == -1:
            # park the transition bin on whichever side its mean count favors,
            # otherwise dwell time is systematically pushed to the upper level
            upper = n_hat[i - 1]
            n_hat[i] = upper if nu[i] >= upper - 1.0 else n_hat[i + 1]
            merged += 1

    # re-vote implausible jumps with the local median
    ambiguous = 0
    bad = np.nonzero(np.abs(np.diff(n_hat)) > 2)[0]
    for i in bad:
        ambiguous += 1
        lo = max(i - 1, 0)
        hi = min(i + 3, len(n_hat))
        n_hat[i + 1] = int(np.median(n_hat[lo:hi]))

    times, kinds, befores = _events_from_levels(n_hat, w)
    bumps = 0
    if snr >= SPIKE_KEEP_SNR:
        bt, bk, bb, bumps = _bump_pairs(trace.counts, n_hat, offset, spacing, w)
        if bumps:
            times += bt
            kinds += bk
            befores += bb
            order = np.argsort(times, kind="stable")
            times = [times[i] for i in order]
            kinds = [kinds[i] for i in order]
            befores = [befores[i] for i in order]

    log = EventLog(
        times=np.asarray(times, dtype=np.float64),
        kinds=np.asarray(kinds, dtype=np.int8),
        n_before=np.asarray(befores, dtype=np.int64),
        n0=int(n_hat[0]) if len(n_hat) else 0,
        duration=len(n_hat) * w,
        seed=trace.seed)
    n_events = len(log.times)
    rate = n_events / trace.duration if trace.duration > 0 else 0.0
    report = DetectionReport(
        n_bins=len(trace.counts), n_events=n_events, snr=snr,
        spike_bins=spikes, merged_bins=merged, pair_bumps=bumps,
        ambiguous_bins=ambiguous, event_rate=rate,
        coincidence_probability=coincidence_probability(rate, w))
    return log, report


def _events_from_levels(n_hat: np.ndarray,
                        bin_width: float) -> tuple[list, list, list]:
    """Boundary events (times, kinds, n_before) of a per-bin level sequence."""
    times: list[float] = []
    kinds: list[int] = []
    befores: list[int] = []
    deltas = np.diff(n_hat)
    for i in np.nonzero(deltas)[0]:
        d = int(deltas[i])
        t = float((i + 1) * bin_width)
        n_prev = int(n_hat[i])
        if d == 1:
            times.append(t); kinds.append(KIND_LOAD); befores.append(n_prev)
        elif d == -1:
            times.append(t); kinds.append(KIND_LOSS1); befores.append(n_prev)
        elif d == -2:
            times.append(t); kinds.append(KIND_LOSS2); befores.append(n_prev)
        elif d == 2:
            # two loads sharing a bin; keep strict time ordering
            times.append(t - bin_width / 2); kinds.append(KIND_LOAD); befores.append(n_prev)
            times.append(t); kinds.append(KIND_LOAD); befores.append(n_prev + 1)
        elif d > 0:
            # residual multi-step change after the re-vote: unfold into unit steps
            for j in range(d):
                times.append(t - bin_width + (j + 1) * bin_width / d)
                kinds.append(KIND_LOAD)
                befores.append(n_prev + j)
        else:
            # downward jump: unfold into the fewest-event composition,
            # two-atom steps first
            k2, k1 = divmod(-d, 2)
            steps = [KIND_LOSS2] * k2 + [KIND_LOSS1] * k1
            n = n_prev
            for j, kind in enumerate(steps):
                times.append(t - bin_width + (j + 1) * bin_width / len(steps))
                kinds.append(kind)
                befores.append(n)
                n -= 2 if kind == KIND_LOSS2 else 1
    return times, kinds, befores


def _bump_pairs(counts: np.ndarray, n_hat: np.ndarray, offset: float,
                spacing: float, bin_width: float,
                thresh: float = BUMP_NSIGMA) -> tuple[list, list, list, int]:
    """Quick load/loss pairs too short to flip any bin's rounded level.

    A pair contained in a level-N stretch leaves one or two adjacent bins
    whose counts sit between levels. Bins deviating from their assigned level
    by more than `thresh` standard deviations (without reaching the rounding
    midpoint, or they would have flipped) are read back as one pair: up-bump
    load-then-loss, down-bump loss-then-load.
    """
    times: list[float] = []
    kinds: list[int] = []
    befores: list[int] = []
    if len(n_hat) < 3:
        return times, kinds, befores, 0
    resid = (counts - offset) / spacing - n_hat
    sig = np.sqrt(np.maximum(offset + spacing * np.maximum(n_hat, 0), 1.0)) / spacing
    strong = np.zeros(len(n_hat), dtype=bool)
    strong[1:-1] = (n_hat[1:-1] == n_hat[:-2]) & (n_hat[1:-1] == n_hat[2:])
    strong &= np.abs(resid) > thresh * sig
    # a downward bump at level 0 has no loss to pair with a load
    strong &= ~((n_hat == 0) & (resid < 0))
    idx = np.nonzero(strong)[0]
    n_pairs = 0
    j = 0
    w = bin_width
    while j < len(idx):
        i = idx[j]
        k = j
        while (k + 1 < len(idx) and idx[k + 1] == idx[k] + 1
               and (resid[idx[k + 1]] > 0) == (resid[i] > 0)):
            k += 1
        last = idx[k]
        lvl = int(n_hat[i])
        if i == last:
            t1, t2 = i * w + w / 3.0, i * w + 2.0 * w / 3.0
        else:
            t1, t2 = i * w + w / 2.0, last * w + w / 2.0
        if resid[i] > 0:
            times += [t1, t2]
            kinds += [KIND_LOAD, KIND_LOSS1]
            befores += [lvl, lvl + 1]
        else:
            times += [t1, t2]
            kinds += [KIND_LOSS1, KIND_LOAD]
            befores += [lvl, lvl - 1]
        n_pairs += 1
        j = k + 1
    return times, kinds, befores, n_pairs
