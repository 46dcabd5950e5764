"""Rate estimation from event logs and suppression-curve fits.

tabulate() reduces an event log to per-occupancy dwell times and event counts.
fit_rates() extracts the load rate, the one-atom loss terms bg*N + b1*N(N-1),
and the two-atom loss term b2*N(N-1) by weighted least squares on the
per-occupancy rates. fit_repump_decay() fits the shielding curve
y = offset + amplitude*exp(-s0/scale) used to infer temperatures and to
extrapolate the unshielded two-atom loss coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import erfc

import numpy as np
from scipy.optimize import least_squares

from .constants import CESIUM, PhysConstants
from .detect import BUMP_NSIGMA, Calibration
from .markov import EventLog, KIND_LOAD, KIND_LOSS1, KIND_LOSS2


class DegenerateDataError(RuntimeError):
    """Too few populated occupancy levels to identify the rate model."""


class ConvergenceError(RuntimeError):
    """Nonlinear fit failed to converge."""


@dataclass
class EventRateTable:
    """Dwell time and event counts per occupancy level."""

    n: np.ndarray  # occupancy levels, 0..n_max
    occupancy_s: np.ndarray  # total time spent at each level
    n_load: np.ndarray
    n_loss1: np.ndarray
    n_loss2: np.ndarray

    def rate(self, kind: str) -> np.ndarray:
        counts = getattr(self, f"n_{kind}")
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.occupancy_s > 0, counts / self.occupancy_s, np.nan)
        return r

    def rate_err(self, kind: str) -> np.ndarray:
        """Poisson rate uncertainty, max(sqrt(c), 1)/T so zero counts still bound."""
        counts = getattr(self, f"n_{kind}")
        with np.errstate(divide="ignore", invalid="ignore"):
            e = np.where(self.occupancy_s > 0,
                         np.maximum(np.sqrt(counts), 1.0) / self.occupancy_s, np.nan)
        return e


def tabulate(log: EventLog) -> EventRateTable:
    """Accumulate per-occupancy dwell times and event counts from a log."""
    t_break, levels = log.staircase()
    dwell = np.diff(np.append(t_break, log.duration))
    n_max = int(levels.max()) if len(levels) else 0
    if len(log.n_before):
        n_max = max(n_max, int(log.n_before.max()))
    occ = np.zeros(n_max + 1)
    np.add.at(occ, levels, dwell)
    loads = np.zeros(n_max + 1)
    loss1 = np.zeros(n_max + 1)
    loss2 = np.zeros(n_max + 1)
    for kind, acc in ((KIND_LOAD, loads), (KIND_LOSS1, loss1), (KIND_LOSS2, loss2)):
        sel = log.n_before[log.kinds == kind]
        np.add.at(acc, sel, 1.0)
    return EventRateTable(n=np.arange(n_max + 1), occupancy_s=occ,
                          n_load=loads, n_loss1=loss1, n_loss2=loss2)


# Geometric acceptances, in bins, for the pair-confusion modes of level
# rounding. Obtained by integrating the rounding, transition-bin, and bump
# rules over event phases (deterministic quadrature reproduces these rationals
# to 4 digits). Two one-atom losses closer than about a bin fuse into a read
# of one two-atom loss; a load within the same window of a two-atom loss
# swallows it into a read of one one-atom loss; a load/loss1 pair that flips
# no bin cancels entirely unless its residual clears the bump threshold, which
# leaves an acceptance of theta + theta^2/2 per event order at threshold
# theta (in atoms).
PAIR_FUSE_BINS = 1.5
PAIR_SWALLOW_BINS = 1.625
# chance a flat bin's shot noise alone clears the two-sided bump threshold
BUMP_FP_PER_BIN = float(erfc(BUMP_NSIGMA / np.sqrt(2.0)))


def correct_coincidences(table: EventRateTable, bin_width: float,
                         calibration: Calibration | None = None,
                         ) -> EventRateTable:
    """First-order pile-up correction of a table read from binned detection.

    Expectation transfers, all computable from the observed table:

    * fuse: quick loss1 pairs read as one loss2. Expected count at occupancy N
      is r1(N) * r1(N-1) * PAIR_FUSE_BINS * w * occupancy(N); moved from loss2
      back to two one-atom losses (one at N, one at N-1).
    * swallow: a load next to a loss2 reads as one loss1. Expected count is
      r2(N) * R * PAIR_SWALLOW_BINS * w * occupancy(N); the loss2 and the load
      are restored and the spurious loss1 at N removed.
    * cancel (needs `calibration` for the shot-noise scale): a load/loss1 pair
      below the bump threshold theta(N) vanishes; the lost load and loss1 are
      restored with acceptance theta + theta^2/2 per order. The bump pass also
      fires on bare noise in BUMP_FP_PER_BIN of flat bins, adding a spurious
      load/loss1 pair that is subtracted here. Both assume the high-SNR
      detection path where the bump pass ran.

    Without the transfers the quadratic loss coefficients read several percent
    low at typical occupancies and the linear term correspondingly high.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    occ = table.occupancy_s
    total = float(occ.sum())
    load_rate = float(table.n_load.sum()) / total if total > 0 else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(occ > 0, table.n_loss1 / occ, 0.0)
        r2 = np.where(occ > 0, table.n_loss2 / occ, 0.0)

    fuse = np.zeros_like(occ)
    fuse[1:] = r1[1:] * r1[:-1] * PAIR_FUSE_BINS * bin_width * occ[1:]
    fuse = np.minimum(fuse, table.n_loss2)  # cannot restore more than was read

    swallow = r2 * load_rate * PAIR_SWALLOW_BINS * bin_width * occ

    loss1 = table.n_loss1 + fuse - swallow
    loss1[:-1] += fuse[1:]
    loads = table.n_load + swallow
    loss2 = table.n_loss2 - fuse + swallow

    if calibration is not None:
        s_w = calibration.per_atom_rate * bin_width
        o_w = calibration.bg_rate * bin_width
        if s_w <= 0:
            raise ValueError("calibration has non-positive per-atom rate")
        # same noise floor as the detection bump pass
        lvl = np.maximum(table.n.astype(float), 0.0)
        sig = np.sqrt(np.maximum(o_w + s_w * lvl, 1.0)) / s_w
        theta = np.minimum(BUMP_NSIGMA * sig, 0.5)
        k_half = (theta + 0.5 * theta**2) * bin_width * load_rate
        # load-first pair at N eats a load(N) and a loss1(N+1)
        f_up = occ * k_half * np.append(r1[1:], 0.0)
        # loss1-first pair at N eats a loss1(N) and a load(N-1)
        f_dn = occ * k_half * r1
        loads += f_up
        loads[:-1] += f_dn[1:]
        loss1 += f_dn
        loss1[1:] += f_up[:-1]
        # noise-only bump pairs: a spurious load booked at the stretch level
        # and a spurious loss1 booked one level up. The top row has no
        # matching loss1 row, so it stays uncorrected.
        fp = BUMP_FP_PER_BIN * occ / bin_width
        loads[:-1] -= fp[:-1]
        loss1[1:] -= fp[:-1]

    return EventRateTable(n=table.n.copy(), occupancy_s=occ.copy(),
                          n_load=np.maximum(loads, 0.0),
                          n_loss1=np.maximum(loss1, 0.0),
                          n_loss2=np.maximum(loss2, 0.0))


@dataclass
class FitResult:
    load_rate: float
    load_rate_err: float
    bg_rate: float  # one-atom background loss rate per atom
    bg_rate_err: float
    b1: float  # one-atom collisional coefficient of N(N-1)
    b1_err: float
    b2_event: float  # two-atom event coefficient of N(N-1)
    b2_event_err: float
    chi2: float
    dof: int
    clipped: tuple[str, ...] = field(default_factory=tuple)

    @property
    def bg_lifetime(self) -> float:
        return 1.0 / self.bg_rate if self.bg_rate > 0 else np.inf

    @property
    def bg_lifetime_err(self) -> float:
        return self.bg_rate_err / self.bg_rate**2 if self.bg_rate > 0 else np.inf

    @property
    def beta2_over_v(self) -> float:
        """Two-atom atom-loss flux coefficient, 2*b2 (atoms per pair event)."""
        return 2.0 * self.b2_event

    @property
    def beta2_over_v_err(self) -> float:
        return 2.0 * self.b2_event_err

    @property
    def beta_total_over_v(self) -> float:
        """Total collisional atom-loss flux coefficient b1 + 2*b2."""
        return self.b1 + 2.0 * self.b2_event

    @property
    def beta_total_over_v_err(self) -> float:
        return float(np.hypot(self.b1_err, 2.0 * self.b2_event_err))


def _wls(design: np.ndarray, y: np.ndarray, sigma: np.ndarray):
    """Weighted least squares; returns (coef, cov, chi2)."""
    a = design / sigma[:, None]
    b = y / sigma
    ata = a.T @ a
    cov = np.linalg.inv(ata)
    coef = cov @ (a.T @ b)
    chi2 = float(np.sum((b - a @ coef) ** 2))
    return coef, cov, chi2


def fit_rates(table: EventRateTable,
              coincidence_width: float | None = None,
              calibration: Calibration | None = None) -> FitResult:
    """Fit the occupancy dependence of the three event channels.

    load: constant R. loss1: bg*N + b1*N(N-1). loss2: b2*N(N-1). Coefficients
    driven negative by noise are clipped to zero and flagged. Pass the trace
    bin width as coincidence_width (plus the calibration, when at hand) when
    the table comes from binned detection to apply the pile-up corrections;
    leave both None for exact logs.
    """
    if coincidence_width is not None:
        table = correct_coincidences(table, coincidence_width, calibration)
    pop = table.occupancy_s > 0
    n = table.n

    sel = pop
    if sel.sum() < 1:
        raise DegenerateDataError("no populated occupancy levels")
    r = table.rate("load")[sel]
    e = table.rate_err("load")[sel]
    wmean, werr = weighted_mean(r, e)
    chi2 = float(np.sum(((r - wmean) / e) ** 2))
    dof = int(sel.sum()) - 1

    sel1 = pop & (n >= 1)
    if sel1.sum() < 2:
        raise DegenerateDataError(
            f"{int(sel1.sum())} populated level(s) with N >= 1; need 2 to "
            "separate background and one-atom collisional loss")
    x1 = n[sel1].astype(float)
    design1 = np.column_stack([x1, x1 * (x1 - 1.0)])
    coef1, cov1, chi2_1 = _wls(design1, table.rate("loss1")[sel1],
                               table.rate_err("loss1")[sel1])
    chi2 += chi2_1
    dof += int(sel1.sum()) - 2

    sel2 = pop & (n >= 2)
    if sel2.sum() < 1:
        raise DegenerateDataError("no populated levels with N >= 2 for pair loss")
    x2 = n[sel2].astype(float)
    design2 = (x2 * (x2 - 1.0))[:, None]
    coef2, cov2, chi2_2 = _wls(design2, table.rate("loss2")[sel2],
                               table.rate_err("loss2")[sel2])
    chi2 += chi2_2
    dof += int(sel2.sum()) - 1

    clipped = []
    bg, b1 = float(coef1[0]), float(coef1[1])
    b2 = float(coef2[0])
    if bg < 0:
        bg = 0.0
        clipped.append("bg_rate")
    if b1 < 0:
        b1 = 0.0
        clipped.append("b1")
    if b2 < 0:
        b2 = 0.0
        clipped.append("b2_event")
    return FitResult(
        load_rate=float(wmean), load_rate_err=float(werr),
        bg_rate=bg, bg_rate_err=float(np.sqrt(cov1[0, 0])),
        b1=b1, b1_err=float(np.sqrt(cov1[1, 1])),
        b2_event=b2, b2_event_err=float(np.sqrt(cov2[0, 0])),
        chi2=chi2, dof=max(dof, 0), clipped=tuple(clipped))


@dataclass
class SuppressionFit:
    """Parameters of y = offset + amplitude * exp(-s0/scale)."""

    offset: float
    offset_err: float
    amplitude: float
    amplitude_err: float
    scale: float  # the saturation constant A
    scale_err: float
    chi2: float
    dof: int


def fit_repump_decay(s0: np.ndarray, y: np.ndarray,
                     sigma: np.ndarray | None = None) -> SuppressionFit:
    """Fit the shielding decay y(s0) = offset + amplitude*exp(-s0/scale)."""
    s0 = np.asarray(s0, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(s0) < 4:
        raise DegenerateDataError("need at least 4 points for the 3-parameter fit")
    if sigma is None:
        sigma = np.full_like(y, max(float(np.std(y)), 1e-300))
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")

    # seed from the high-s0 tail (offset) and a log-linear slope
    order = np.argsort(s0)
    tail = y[order][-max(len(y) // 4, 1):]
    c0 = float(np.mean(tail))
    amp0 = max(float(np.max(y) - c0), 1e-300)
    pos = y - c0 > amp0 * 1e-3
    if pos.sum() >= 2:
        slope = np.polyfit(s0[pos], np.log(y[pos] - c0), 1)[0]
        a0 = -1.0 / slope if slope < 0 else float(np.ptp(s0))
    else:
        a0 = float(np.ptp(s0))
    a0 = max(a0, 1e-6)

    def resid(p):
        return (p[0] + p[1] * np.exp(-s0 / p[2]) - y) / sigma

    res = least_squares(resid, x0=[max(c0, 0.0), amp0, a0],
                        bounds=([0.0, 0.0, 1e-9], [np.inf, np.inf, np.inf]),
                        method="trf")
    if not res.success:
        raise ConvergenceError(f"suppression fit failed: {res.message}")
    chi2 = float(2.0 * res.cost)
    dof = len(y) - 3
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("singular curvature at the fit optimum") from exc
    if dof > 0:
        cov = cov * max(chi2 / dof, 1.0)
    err = np.sqrt(np.diag(cov))
    return SuppressionFit(offset=float(res.x[0]), offset_err=float(err[0]),
                          amplitude=float(res.x[1]), amplitude_err=float(err[1]),
                          scale=float(res.x[2]), scale_err=float(err[2]),
                          chi2=chi2, dof=dof)


def infer_temperature(scale: float, pc: PhysConstants = CESIUM) -> float:
    """Invert A = 1 + (T/T_D)^2/2 to the sample temperature in kelvin."""
    if scale <= 1.0:
        raise ValueError(f"saturation constant {scale} must exceed 1")
    return pc.doppler_temp * np.sqrt(2.0 * (scale - 1.0))


def extrapolate_beta_hcc(fit: SuppressionFit, volume_cm3: float,
                         r0_m: float | None = None,
                         dr0_m: float = 2e-6) -> tuple[float, float]:
    """Unshielded two-atom coefficient amplitude*V with volume-error propagation.

    The effective volume scales as r0^3, so a trap-size uncertainty dr0
    contributes a relative volume error of 3*dr0/r0.
    """
    if volume_cm3 <= 0:
        raise ValueError("volume must be positive")
    beta = fit.amplitude * volume_cm3
    var = (fit.amplitude_err * volume_cm3) ** 2
    if r0_m is not None:
        if r0_m <= 0 or dr0_m < 0:
            raise ValueError("r0 must be positive and dr0 non-negative")
        var += (fit.amplitude * volume_cm3 * 3.0 * dr0_m / r0_m) ** 2
    return float(beta), float(np.sqrt(var))


def weighted_mean(values: np.ndarray, errors: np.ndarray) -> tuple[float, float]:
    """Inverse-variance weighted mean and its standard error."""
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(values) == 0:
        raise ValueError("empty input")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive")
    w = 1.0 / errors**2
    mean = float(np.sum(w * values) / np.sum(w))
    return mean, float(1.0 / np.sqrt(np.sum(w)))
