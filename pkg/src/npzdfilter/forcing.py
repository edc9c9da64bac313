"""Daily forcing series: file ingestion and a synthetic climatology.

The model is driven by five daily exogenous records: mixed layer depth,
its rate of change, mixed-layer temperature, sub-surface PAR and the
DIN concentration below the mixed layer. Real series are read from CSV;
when no data are available, a smooth sub-arctic style climatology with
deep winter mixing and a shallow warm summer layer can be synthesized.
"""

from __future__ import annotations

import csv
import datetime
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .model import ForcingRecord

FORCING_HEADER = ["date", "mld_m", "temp_c", "par", "bcn"]

YEAR_DAYS = 365  # climatology period; leap days are not modelled


@dataclass(frozen=True)
class ForcingSeries:
    """Consecutive daily records anchored to a calendar date."""

    start_date: datetime.date
    mld: np.ndarray
    psi: np.ndarray
    temp: np.ndarray
    par: np.ndarray
    bcn: np.ndarray

    def __post_init__(self):
        n = len(self.mld)
        for name in ("psi", "temp", "par", "bcn"):
            if len(getattr(self, name)) != n:
                raise DataError("forcing columns must have equal length")
        if n == 0:
            raise DataError("forcing series is empty")
        if np.any(self.mld <= 0):
            raise DataError("mixed layer depth must be > 0")
        if np.any(self.par < 0) or np.any(self.bcn < 0):
            raise DataError("par and bcn must be >= 0")

    def __len__(self):
        return len(self.mld)

    def record(self, day: int) -> ForcingRecord:
        return ForcingRecord(mld=float(self.mld[day]), psi=float(self.psi[day]),
                             temp=float(self.temp[day]), par=float(self.par[day]),
                             bcn=float(self.bcn[day]))

    def date(self, day: int) -> datetime.date:
        return self.start_date + datetime.timedelta(days=day)

    def slice(self, start: int, n_days: int) -> "ForcingSeries":
        if start < 0 or start + n_days > len(self):
            raise DataError("slice outside the forcing span")
        sl = slice(start, start + n_days)
        return ForcingSeries(start_date=self.date(start), mld=self.mld[sl],
                             psi=self.psi[sl], temp=self.temp[sl],
                             par=self.par[sl], bcn=self.bcn[sl])

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(FORCING_HEADER + ["psi"])
            for i in range(len(self)):
                writer.writerow([self.date(i).isoformat(), repr(float(self.mld[i])),
                                 repr(float(self.temp[i])), repr(float(self.par[i])),
                                 repr(float(self.bcn[i])), repr(float(self.psi[i]))])


def derive_psi(mld: np.ndarray) -> np.ndarray:
    """d(MLD)/dt by centered differences, one-sided at the ends."""
    mld = np.asarray(mld, dtype=float)
    psi = np.empty_like(mld)
    if len(mld) == 1:
        psi[0] = 0.0
        return psi
    psi[0] = mld[1] - mld[0]
    psi[-1] = mld[-1] - mld[-2]
    if len(mld) > 2:
        psi[1:-1] = (mld[2:] - mld[:-2]) / 2.0
    return psi


def load_forcing(path) -> ForcingSeries:
    """Read a forcing CSV; header date,mld_m,temp_c,par,bcn with an
    optional trailing psi column. Days must be strictly consecutive.
    """
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header == FORCING_HEADER:
            has_psi = False
        elif header == FORCING_HEADER + ["psi"]:
            has_psi = True
        else:
            raise DataError(f"{path}:1: expected header {','.join(FORCING_HEADER)}"
                            f"[,psi], got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            expected = 6 if has_psi else 5
            if len(row) != expected:
                raise DataError(f"{path}:{lineno}: expected {expected} fields, "
                                f"got {len(row)}")
            try:
                date = datetime.date.fromisoformat(row[0].strip())
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            rows.append((lineno, date, values))
    if not rows:
        raise DataError(f"{path}: no data rows")
    for (l1, d1, _), (l2, d2, _) in zip(rows, rows[1:]):
        gap = (d2 - d1).days
        if gap == 0 or gap < 0:
            raise DataError(f"{path}:{l2}: dates must be strictly increasing "
                            f"({d1} then {d2})")
        if gap > 1:
            raise DataError(f"{path}:{l2}: gap in daily series between {d1} "
                            f"and {d2}")
    mld = np.array([v[0] for _, _, v in rows])
    temp = np.array([v[1] for _, _, v in rows])
    par = np.array([v[2] for _, _, v in rows])
    bcn = np.array([v[3] for _, _, v in rows])
    for lineno, _, v in rows:
        if v[0] <= 0:
            raise DataError(f"{path}:{lineno}: mld must be > 0")
        if v[2] < 0 or v[3] < 0:
            raise DataError(f"{path}:{lineno}: par and bcn must be >= 0")
    psi = np.array([v[4] for _, _, v in rows]) if has_psi else derive_psi(mld)
    return ForcingSeries(start_date=rows[0][1], mld=mld, psi=psi, temp=temp,
                         par=par, bcn=bcn)


@dataclass(frozen=True)
class ClimatologyParams:
    """Shape of the synthetic seasonal cycle (sub-arctic defaults).

    The mixed layer peaks in late winter and is shallowest in late
    summer; temperature runs half a year out of phase with it; PAR peaks
    at the solstice; the boundary DIN is nearly constant with a mild
    winter maximum.
    """

    mld_max: float = 100.0
    mld_min: float = 30.0
    mld_peak_doy: int = 45
    temp_min: float = 6.0
    temp_max: float = 14.0
    par_min: float = 3.0
    par_max: float = 45.0
    par_peak_doy: int = 172
    bcn_mean: float = 16.0
    bcn_amplitude: float = 1.5


def _cyc(doy, peak_doy):
    return np.cos(2.0 * math.pi * (doy - peak_doy) / YEAR_DAYS)


def synth_climatology(n_days: int = YEAR_DAYS, start: str = "1971-01-01",
                      params: ClimatologyParams = None) -> ForcingSeries:
    """Periodic synthetic forcing evaluated day by day.

    The rate of change of the mixed layer is the centered difference of
    the periodic depth cycle, so it sums to exactly zero over any whole
    year.
    """
    p = params if params is not None else ClimatologyParams()
    start_date = datetime.date.fromisoformat(start)
    offset = (start_date - datetime.date(start_date.year, 1, 1)).days
    doy = (offset + np.arange(n_days)) % YEAR_DAYS

    def mld_of(d):
        mid = (p.mld_max + p.mld_min) / 2.0
        amp = (p.mld_max - p.mld_min) / 2.0
        return mid + amp * _cyc(d, p.mld_peak_doy)

    mld = mld_of(doy)
    psi = (mld_of((doy + 1) % YEAR_DAYS) - mld_of((doy - 1) % YEAR_DAYS)) / 2.0
    t_mid = (p.temp_max + p.temp_min) / 2.0
    t_amp = (p.temp_max - p.temp_min) / 2.0
    temp = t_mid - t_amp * _cyc(doy, p.mld_peak_doy)
    e_mid = (p.par_max + p.par_min) / 2.0
    e_amp = (p.par_max - p.par_min) / 2.0
    par = e_mid + e_amp * _cyc(doy, p.par_peak_doy)
    bcn = p.bcn_mean + p.bcn_amplitude * _cyc(doy, p.mld_peak_doy)
    return ForcingSeries(start_date=start_date, mld=mld, psi=psi, temp=temp,
                         par=par, bcn=bcn)
