"""Attack-impact metrics computed from a RunLog or its daily.csv form.

Conventions: the day axis is 1-based and inclusive on both ends of any
(lo, hi) range; the attack-window mean ratio uses raw TSTT while peak
and recovery checks use the smoothed series (smoothing is a reporting
device and never feeds the dynamics).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

DEFAULT_WINDOW = (51, 100)
DEFAULT_BASELINE = (30, 50)
TIA_NOISE_FLOOR = 0.005


def rolling_mean(series, window_days: int) -> np.ndarray:
    """Trailing mean: entry t averages the last min(window, t+1) values."""
    if window_days < 1:
        raise ValueError("window must be at least 1")
    x = np.asarray(series, dtype=float)
    csum = np.cumsum(x)
    out = np.empty_like(x)
    n = x.size
    w = int(window_days)
    for t in range(n):
        lo = max(0, t - w + 1)
        out[t] = (csum[t] - (csum[lo - 1] if lo > 0 else 0.0)) / (t - lo + 1)
    return out


def _day_indices(days: np.ndarray, lo: int, hi: int) -> np.ndarray:
    sel = (days >= lo) & (days <= hi)
    if sel.sum() != hi - lo + 1:
        raise ValueError(f"day range [{lo}, {hi}] not fully covered by the log")
    return sel


def poatt_aw(tstt, window=DEFAULT_WINDOW, baseline=DEFAULT_BASELINE,
             days=None) -> float:
    """Mean TSTT over the attack window divided by the pre-attack mean."""
    x = np.asarray(tstt, dtype=float)
    d = np.arange(1, x.size + 1) if days is None else np.asarray(days)
    num = float(np.mean(x[_day_indices(d, *window)]))
    den = float(np.mean(x[_day_indices(d, *baseline)]))
    return num / den


def tia(poatt_fix: float, poatt_dyn: float,
        noise_floor: float = TIA_NOISE_FLOOR):
    """Trust-induced attenuation; None when the fixed-trust impact is in the noise."""
    excess_fix = poatt_fix - 1.0
    if excess_fix <= noise_floor:
        return None
    return 1.0 - (poatt_dyn - 1.0) / excess_fix


@dataclass
class RecoveryReport:
    trust_recovery: int | None        # days after attack end, share-weighted trust
    tstt_recovery: int | None
    hidden_window: int | None
    per_class: dict                   # class name -> days after attack end | None
    class_averaged: float | None      # mean of per-class recovery days
    last_trust_ratio: float
    last_tstt_ratio: float


def _first_crossing(days, values, start_day, predicate):
    for i in range(len(days)):
        if days[i] < start_day:
            continue
        if predicate(values[i]):
            return int(days[i] - start_day)
    return None


def recovery_times(log, attack_end_day: int, trust_frac: float = 0.95,
                   tstt_band: float = 0.02, shares=None,
                   baseline=DEFAULT_BASELINE) -> RecoveryReport:
    """Days (counted from the attack's last day, inclusive) until recovery.

    Trust recovers when mean trust regains ``trust_frac`` of its
    pre-attack level; TSTT recovers when the smoothed series re-enters
    a ``tstt_band`` margin above its pre-attack mean. The hidden window
    is the gap between the two.
    """
    days = np.asarray(log.day)
    n_classes = log.trust.shape[1]
    if shares is None:
        w = np.full(n_classes, 1.0 / n_classes)
    else:
        w = np.asarray(shares, dtype=float)
        w = w / w.sum()
    base_sel = _day_indices(days, *baseline)

    mean_trust = log.trust @ w
    t_pre = float(np.mean(mean_trust[base_sel]))
    t_thresh = trust_frac * t_pre
    trust_rec = _first_crossing(days, mean_trust, attack_end_day,
                                lambda v: v >= t_thresh)

    smoothed = np.asarray(log.tstt_smoothed)
    base_tstt = float(np.mean(smoothed[base_sel]))
    tstt_thresh = (1.0 + tstt_band) * base_tstt
    tstt_rec = _first_crossing(days, smoothed, attack_end_day,
                               lambda v: v <= tstt_thresh)

    per_class = {}
    for k, name in enumerate(log.class_names):
        pre_k = float(np.mean(log.trust[base_sel, k]))
        per_class[name] = _first_crossing(
            days, log.trust[:, k], attack_end_day,
            lambda v, thr=trust_frac * pre_k: v >= thr)
    if all(v is not None for v in per_class.values()) and per_class:
        class_avg = float(np.mean([v for v in per_class.values()]))
    else:
        class_avg = None

    hidden = (trust_rec - tstt_rec
              if trust_rec is not None and tstt_rec is not None else None)
    return RecoveryReport(
        trust_recovery=trust_rec, tstt_recovery=tstt_rec, hidden_window=hidden,
        per_class=per_class, class_averaged=class_avg,
        last_trust_ratio=float(mean_trust[-1] / t_pre) if t_pre > 0 else np.inf,
        last_tstt_ratio=float(smoothed[-1] / base_tstt) if base_tstt > 0 else np.inf,
    )


def eta(log, D: int):
    """Mean squared decay of effective attack strength over the first D attack days.

    Returns None when no positive-strength day exists (no attack or zero
    compliance on day one).
    """
    if D < 1:
        raise ValueError("D must be at least 1")
    s = np.asarray(log.strength, dtype=float)
    positive = np.nonzero(s > 0.0)[0]
    if positive.size == 0:
        return None
    start = int(positive[0])
    if start + D > s.size:
        raise ValueError(f"log too short for D={D} attack days")
    ratios = s[start:start + D] / s[start]
    return float(np.mean(ratios ** 2))


@dataclass
class MetricReport:
    poatt_aw: float
    poatt_peak: float
    tia: float | None
    trust_recovery_day: int | None
    trust_recovery_by_class: dict
    trust_recovery_classavg: float | None
    tstt_recovery_day: int | None
    hidden_window_days: int | None
    eta: float | None
    eta_days: int
    last_trust_ratio: float
    last_tstt_ratio: float

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["trust_recovery_by_class"] = dict(self.trust_recovery_by_class)
        return out


def compute_report(log, window=DEFAULT_WINDOW, baseline=DEFAULT_BASELINE,
                   shares=None, trust_frac: float = 0.95,
                   tstt_band: float = 0.02, fixed_log=None,
                   noise_floor: float = TIA_NOISE_FLOOR,
                   eta_days: int | None = None) -> MetricReport:
    """All scalar metrics for one run; pass the paired fixed-trust run for TIA."""
    days = np.asarray(log.day)
    aw = poatt_aw(log.tstt, window=window, baseline=baseline, days=days)
    smoothed = np.asarray(log.tstt_smoothed)
    base_sel = _day_indices(days, *baseline)
    win_sel = _day_indices(days, *window)
    peak = float(np.max(smoothed[win_sel]) / np.mean(smoothed[base_sel]))
    attenuation = None
    if fixed_log is not None:
        aw_fix = poatt_aw(fixed_log.tstt, window=window, baseline=baseline,
                          days=np.asarray(fixed_log.day))
        attenuation = tia(aw_fix, aw, noise_floor)
    rec = recovery_times(log, attack_end_day=window[1], trust_frac=trust_frac,
                         tstt_band=tstt_band, shares=shares, baseline=baseline)
    d_eta = eta_days if eta_days is not None else window[1] - window[0] + 1
    try:
        eta_val = eta(log, d_eta)
    except ValueError:
        eta_val = None
    return MetricReport(
        poatt_aw=aw, poatt_peak=peak, tia=attenuation,
        trust_recovery_day=rec.trust_recovery,
        trust_recovery_by_class=rec.per_class,
        trust_recovery_classavg=rec.class_averaged,
        tstt_recovery_day=rec.tstt_recovery,
        hidden_window_days=rec.hidden_window,
        eta=eta_val, eta_days=d_eta,
        last_trust_ratio=rec.last_trust_ratio,
        last_tstt_ratio=rec.last_tstt_ratio,
    )


def write_summary(report: MetricReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def sweep_row(report: MetricReport) -> dict:
    """Flatten a MetricReport for one sweep.csv row."""
    row = {
        "poatt_aw": report.poatt_aw,
        "poatt_peak": report.poatt_peak,
        "tia": report.tia,
        "trust_recovery_day": report.trust_recovery_day,
        "tstt_recovery_day": report.tstt_recovery_day,
        "hidden_window_days": report.hidden_window_days,
        "eta": report.eta,
    }
    for name, val in report.trust_recovery_by_class.items():
        row[f"trust_recovery_{name}"] = val
    return row


def write_sweep_csv(path, rows: list, field_order: list) -> None:
    """rows: list of dicts; missing keys and None render as empty cells."""

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(field_order)]
    for row in rows:
        lines.append(",".join(cell(row.get(k)) for k in field_order))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
