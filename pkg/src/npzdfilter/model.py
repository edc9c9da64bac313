"""Mixed-layer NPZD dynamics.

Four nitrogen pools — dissolved inorganic nitrogen (DIN), phytoplankton,
zooplankton and detritus, all in mg N m^-3 — evolve inside a single
mixed-layer box. Local reactions (growth, grazing, mortality,
remineralization) conserve total nitrogen exactly; exchange with the
water below the mixed layer and detrital sinking move nitrogen in and
out of the box. Plankton growth adapts to light, nutrient and
temperature, and yields a chlorophyll-a diagnostic that links the
phytoplankton nitrogen pool to what is actually measured in the field.

All functions here are pure and accept scalars or broadcastable numpy
arrays; none of them hold state or touch an RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationError

# Canonical ordering of the time-varying community processes.
BGC_COMPONENTS = ("gmax", "lam", "rn", "an", "iz", "clz", "ez", "rd", "mq")

# Max N:C ratio fixed from the 16:106 molar Redfield composition,
# converted to a mass ratio with atomic weights N=14.007, C=12.011.
CHI_MAX_REDFIELD = (16.0 * 14.007) / (106.0 * 12.011)


@dataclass(frozen=True)
class StateVector:
    """Prognostic pools, mg N m^-3: DIN, phytoplankton, zooplankton, detritus."""

    n: float
    p: float
    z: float
    d: float

    def __post_init__(self):
        arr = self.as_array()
        if not np.all(np.isfinite(arr)):
            raise DomainError("state vector components must be finite")
        if np.any(arr < 0):
            raise DomainError("state vector components must be >= 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.n, self.p, self.z, self.d], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "StateVector":
        n, p, z, d = np.asarray(arr, dtype=float)
        return cls(n=float(n), p=float(p), z=float(z), d=float(d))


@dataclass(frozen=True)
class BgcVector:
    """Community ecophysiological processes, one value per `BGC_COMPONENTS` slot.

    gmax : max C-specific growth rate (d^-1)
    lam  : max Chla:C ratio (mg Chla mg C^-1)
    rn   : min:max N:C ratio (dimensionless, in (0,1))
    an   : max specific N affinity (mg N^-1 m^3 d^-1)
    iz   : max zooplankton ingestion (d^-1)
    clz  : max clearance rate (m^3 mg N^-1 d^-1)
    ez   : zooplankton growth efficiency (dimensionless, in (0,1))
    rd   : detrital remineralization rate (d^-1)
    mq   : quadratic zooplankton mortality ((mg N m^-3)^-1 d^-1)
    """

    gmax: float
    lam: float
    rn: float
    an: float
    iz: float
    clz: float
    ez: float
    rd: float
    mq: float

    def __post_init__(self):
        arr = self.as_array()
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise DomainError("community processes must be finite and > 0")
        if self.ez >= 1.0:
            raise DomainError("growth efficiency ez must be < 1")
        if self.rn >= 1.0:
            raise DomainError("N:C ratio bound rn must be < 1")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in BGC_COMPONENTS], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "BgcVector":
        vals = np.asarray(arr, dtype=float)
        return cls(**{k: float(v) for k, v in zip(BGC_COMPONENTS, vals)})


@dataclass(frozen=True)
class StaticParams:
    """Parameters held constant within a model run.

    k_w, a_ch, s_d, f_d are subject to inference elsewhere; the rest are
    prescribed constants. Defaults for q10, t_ref, upsilon and kappa are
    configuration choices, not literature values.
    """

    k_w: float  # water light attenuation (m^-1)
    a_ch: float  # Chla-specific attenuation (m^2 mg Chla^-1)
    s_d: float  # detrital sinking rate (m d^-1)
    f_d: float  # fraction of zooplankton waste routed to detritus
    q10: float = 2.0  # rate multiplier per 10 degC
    t_ref: float = 10.0  # reference temperature (degC)
    upsilon: float = 1.0  # grazing exponent (1 = hyperbolic response)
    chi_max: float = CHI_MAX_REDFIELD  # max N:C ratio (mg N mg C^-1)
    q_yield: float = 1200.0  # max quantum yield (mg C mol photons^-1)
    kappa: float = 0.1  # background mixing (m d^-1)
    dt: float = 1.0  # outer time step (d)

    def __post_init__(self):
        for name in ("k_w", "a_ch", "q10", "t_ref", "chi_max", "q_yield", "dt"):
            if not getattr(self, name) > 0:
                raise DomainError(f"static parameter {name} must be > 0")
        # s_d and kappa may be exactly zero: that closes the box, which the
        # conservation checks rely on.
        if self.s_d < 0 or self.kappa < 0:
            raise DomainError("s_d and kappa must be >= 0")
        if not 0.0 <= self.f_d <= 1.0:
            raise DomainError("f_d must lie in [0, 1]")
        if self.upsilon < 1.0:
            raise DomainError("grazing exponent upsilon must be >= 1")

    @property
    def alpha(self) -> float:
        """Initial slope of the photosynthesis-irradiance curve, a_ch * q_yield."""
        return self.a_ch * self.q_yield


@dataclass(frozen=True)
class ForcingRecord:
    """Exogenous drivers for one day.

    mld  : mixed layer depth (m)
    psi  : d(MLD)/dt (m d^-1)
    temp : mixed-layer temperature (degC)
    par  : mean daily PAR just below the surface (mol photons m^-2 d^-1)
    bcn  : DIN concentration below the mixed layer (mg N m^-3)
    """

    mld: float
    psi: float
    temp: float
    par: float
    bcn: float

    def __post_init__(self):
        if not self.mld > 0:
            raise DomainError("mixed layer depth must be > 0")
        if self.bcn < 0 or self.par < 0:
            raise DomainError("par and bcn must be >= 0")


@dataclass(frozen=True)
class GrowthDiagnostics:
    """Derived growth quantities at a single state."""

    tc: float  # temperature correction
    e: float  # mixed-layer mean irradiance
    h_e: float  # light limitation, [0, 1)
    h_n: float  # nutrient limitation, [0, 1)
    g: float  # realized specific growth rate (d^-1)
    chi: float  # N:C ratio (mg N mg C^-1)
    lam: float  # Chla:C ratio (mg Chla mg C^-1)
    chla: float  # chlorophyll-a concentration (mg Chla m^-3)


def temp_correction(temp, q10, t_ref):
    """Multiplicative rate correction q10 ** ((temp - t_ref) / 10)."""
    temp = np.asarray(temp, dtype=float)
    if not np.all(np.isfinite(temp)):
        raise DomainError("temperature must be finite")
    if not q10 > 0:
        raise DomainError("q10 must be > 0")
    return q10 ** ((temp - t_ref) / 10.0)


def light_field(par, k_w, a_ch, chla, mld):
    """Mean irradiance over a mixed layer of depth `mld`.

    Exponential decay with total attenuation k_w + a_ch * chla integrated
    over depth gives E = par * (1 - exp(-Kz)) / Kz with
    Kz = (k_w + a_ch * chla) * mld. The Kz -> 0 limit is par itself.
    """
    chla = np.asarray(chla, dtype=float)
    if np.any(chla < 0):
        raise DomainError("chlorophyll concentration must be >= 0")
    if np.any(np.asarray(mld) <= 0):
        raise DomainError("mixed layer depth must be > 0")
    kz = (k_w + a_ch * chla) * mld
    # -expm1(-kz)/kz is accurate for small kz; only kz == 0 needs the limit.
    safe = np.where(kz == 0.0, 1.0, kz)
    frac = np.where(kz == 0.0, 1.0, -np.expm1(-safe) / safe)
    return par * frac


def growth_limits(e, n, tc, gmax, lam_max, a_n, alpha):
    """Light and nutrient limitation factors (h_e, h_n), both in [0, 1).

    alpha is the product of the Chla-specific attenuation and the max
    quantum yield (see StaticParams.alpha).
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise DomainError("DIN concentration must be >= 0")
    if np.any(np.asarray(gmax) <= 0):
        raise DomainError("gmax must be > 0")
    h_e = -np.expm1(-alpha * lam_max * np.asarray(e, dtype=float) / gmax)
    h_n = n / ((gmax * tc / a_n) + n)
    return h_e, h_n


def growth_rate(tc, gmax, h_e, h_n):
    """Realized specific growth rate tc*gmax*h_e*h_n/(h_e+h_n), 0 when both vanish."""
    h_e = np.asarray(h_e, dtype=float)
    h_n = np.asarray(h_n, dtype=float)
    denom = h_e + h_n
    safe = np.where(denom == 0.0, 1.0, denom)
    return np.where(denom == 0.0, 0.0, tc * gmax * h_e * h_n / safe)


def composition(h_e, h_n, tc, p, lam_max, chi_max, r_n):
    """Phytoplankton N:C ratio and chlorophyll-a concentration.

    chi interpolates between r_n*chi_max (nutrient-starved) and chi_max
    (light-starved); chla converts phytoplankton nitrogen to pigment.
    When h_e + h_n = 0 the convention is chi = chi_max*(1+r_n)/2 and
    chla = 0.
    """
    h_e = np.asarray(h_e, dtype=float)
    h_n = np.asarray(h_n, dtype=float)
    denom = h_e + h_n
    safe = np.where(denom == 0.0, 1.0, denom)
    chi = np.where(denom == 0.0,
                   chi_max * (1.0 + r_n) / 2.0,
                   chi_max * (h_e * r_n + h_n) / safe)
    denom2 = r_n * h_e + h_n
    safe2 = np.where(denom2 == 0.0, 1.0, denom2)
    chla = np.where(denom2 == 0.0,
                    0.0,
                    np.asarray(p, dtype=float) * (lam_max / chi_max) * h_n * tc / safe2)
    return chi, chla


def grazing_rate(p, tc, i_z, cl_z, upsilon=1.0):
    """Specific grazing rate; saturating functional response in prey density."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise DomainError("phytoplankton concentration must be >= 0")
    if np.any(np.asarray(i_z) <= 0):
        raise DomainError("max ingestion rate i_z must be > 0")
    a = cl_z * p / i_z
    a_pow = a if upsilon == 1.0 else a ** upsilon
    return tc * i_z * a_pow / (1.0 + a_pow)


def mortality_rate(z, tc, m_q):
    """Specific zooplankton mortality tc*m_q*Z (density dependent)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("zooplankton concentration must be >= 0")
    return tc * m_q * z


def remin_rate(tc, r_d):
    """Detrital remineralization rate tc*r_d."""
    return tc * r_d


def reaction_terms(x, g, gr, m, r, e_z, f_d):
    """Local source/sink terms (mg N m^-3 d^-1) for the four pools.

    Returns an array shaped like (..., 4) in (N, P, Z, D) order. The four
    components sum to zero: every unit of nitrogen leaving one pool
    enters another.
    """
    x = np.asarray(x, dtype=float)
    n, p, z, d = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    dp = g * p - gr * z
    dz = e_z * gr * z - m * z
    dd = (1.0 - e_z) * f_d * gr * z + m * z - r * d
    dn = -g * p + (1.0 - e_z) * (1.0 - f_d) * gr * z + r * d
    return np.stack(np.broadcast_arrays(dn, dp, dz, dd), axis=-1)


def transport_terms(x, forcing: ForcingRecord, kappa, s_d):
    """Exchange across the mixed-layer base plus detrital sinking.

    Entrainment (deepening, psi > 0) and background mixing dilute P and D
    and relax DIN toward the below-layer concentration; detachment
    (shoaling, psi < 0) concentrates zooplankton, which are assumed to
    stay in the layer while P, D and N are left behind.
    """
    x = np.asarray(x, dtype=float)
    n, p, z, d = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    mld, psi = forcing.mld, forcing.psi
    ex = (kappa + max(psi, 0.0)) / mld
    dp = ex * (0.0 - p)
    dz = (psi / mld) * (0.0 - z)
    dd = -s_d * d / mld + ex * (0.0 - d)
    dn = ex * (forcing.bcn - n)
    return np.stack(np.broadcast_arrays(dn, dp, dz, dd), axis=-1)


def growth_diagnostics(x, b, forcing: ForcingRecord, params: StaticParams,
                       chla_atten=0.0) -> GrowthDiagnostics:
    """Evaluate the growth submodel at a single state.

    `chla_atten` is the chlorophyll concentration used for light
    attenuation; self-shading is evaluated with the previous day's
    chlorophyll rather than solved implicitly.
    """
    x = np.asarray(x, dtype=float) if not isinstance(x, StateVector) else x.as_array()
    b = np.asarray(b, dtype=float) if not isinstance(b, BgcVector) else b.as_array()
    n, p = float(x[0]), float(x[1])
    gmax, lam_max, r_n, a_n = b[0], b[1], b[2], b[3]
    tc = float(temp_correction(forcing.temp, params.q10, params.t_ref))
    e = float(light_field(forcing.par, params.k_w, params.a_ch, chla_atten, forcing.mld))
    h_e, h_n = growth_limits(e, n, tc, gmax, lam_max, a_n, params.alpha)
    h_e, h_n = float(h_e), float(h_n)
    g = float(growth_rate(tc, gmax, h_e, h_n))
    chi, chla = composition(h_e, h_n, tc, p, lam_max, params.chi_max, r_n)
    lam = lam_max * tc * h_n / (h_e + h_n) if h_e + h_n > 0 else 0.0
    return GrowthDiagnostics(tc=tc, e=e, h_e=h_e, h_n=h_n, g=g,
                             chi=float(chi), lam=float(lam), chla=float(chla))


def step(x, b, forcing: ForcingRecord, params: StaticParams,
         chla_atten=0.0, n_sub=24):
    """Advance the state one day by explicit Euler sub-stepping.

    Temperature, irradiance (hence the light limitation) and the
    remineralization rate are fixed over the day; nutrient limitation,
    grazing, mortality and the transport terms are re-evaluated at each
    of the `n_sub` substeps. Components pushed below zero are clipped
    and the deficit is charged to the DIN pool so that the nitrogen
    budget still closes.

    Returns
    -------
    (x_new, diag) : (ndarray of shape (4,), GrowthDiagnostics)
        End-of-day state and diagnostics evaluated at the start-of-day
        state.
    """
    x = x.as_array() if isinstance(x, StateVector) else np.array(x, dtype=float)
    b = b.as_array() if isinstance(b, BgcVector) else np.asarray(b, dtype=float)
    diag = growth_diagnostics(x, b, forcing, params, chla_atten=chla_atten)
    gmax, lam_max, r_n, a_n, i_z, cl_z, e_z, r_d, m_q = b
    tc, h_e = diag.tc, diag.h_e
    r = remin_rate(tc, r_d)
    h = params.dt / n_sub
    n, p, z, d = x
    for s in range(n_sub):
        h_n = n / ((gmax * tc / a_n) + n)
        state = np.array([n, p, z, d])
        dx = reaction_terms(state,
                            g=float(growth_rate(tc, gmax, h_e, h_n)),
                            gr=float(grazing_rate(p, tc, i_z, cl_z, params.upsilon)),
                            m=float(mortality_rate(z, tc, m_q)),
                            r=r, e_z=e_z, f_d=params.f_d)
        dx = dx + transport_terms(state, forcing, params.kappa, params.s_d)
        n, p, z, d = state + h * dx
        if p < 0.0:
            n += p
            p = 0.0
        if z < 0.0:
            n += z
            z = 0.0
        if d < 0.0:
            n += d
            d = 0.0
        if n < 0.0:
            n = 0.0
        if not (np.isfinite(n) and np.isfinite(p) and np.isfinite(z) and np.isfinite(d)):
            raise IntegrationError(f"non-finite state at substep {s}", step=s)
    return np.array([n, p, z, d]), diag
