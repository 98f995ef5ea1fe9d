"""Experiment configuration, seeded Monte-Carlo BER sweeps and validation.

The sweep is deterministic: every random draw comes from a stream derived
from the root seed and the (realization, SNR point, scheme, purpose)
coordinates, so results are byte-identical for a given config regardless
of execution order or thread count.  Channel realizations are shared
across schemes and SNR points (paired comparisons), while data, noise and
CSI-error draws are independent per point.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, channel, equalizer, modem
from .channel import FrameGrid, load_profile
from .linalg import (CircularBandedMatrix, OutOfStripeError, UnitaryOperator,
                     band_solve)
from .modem import DataGrid, Scheme, qam_demap, qam_map

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "derive_grid",
    "BerRow",
    "BerReport",
    "run_ber_sweep",
    "CheckResult",
    "ValidationReport",
    "run_validation",
]

LIGHT_SPEED = 3.0e8
THEORY_SIZE_LIMIT = 4096  # dense eigendecomposition gate for theory curves


class ConfigError(ValueError):
    """Configuration file problem, with the offending key path."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _take(data: dict, section: str, known: dict):
    """Pop known keys with defaults; reject unknown keys with their path."""
    unknown = set(data) - set(known)
    if unknown:
        where = f"{section}." if section else ""
        raise ConfigError(f"unknown key(s): "
                          f"{', '.join(sorted(where + k for k in unknown))}")
    return {k: data.get(k, default) for k, default in known.items()}


@dataclass
class GridSpec:
    m: int = 64
    n: int = 16
    d_r_s: float | None = None
    bandwidth_hz: float | None = None
    subcarrier_spacing_hz: float | None = None
    f_r_hz: float | None = None
    l_cp: int | None = None


@dataclass
class TrialsSpec:
    max_realizations: int = 200
    target_bit_errors: int | None = 200


@dataclass
class EqualizerSpec:
    domain: str = "frequency"
    banded: bool = True
    stripe_k: int | None = None
    stripe_energy_tol: float = 1e-3
    one_tap_baseline: bool = False
    one_tap_tracking: bool = False


@dataclass
class DopplerSpec:
    mode: str = "continuous"
    f_max_hz: float | None = None
    v_max_kmh: float | None = None
    carrier_frequency_hz: float | None = None


@dataclass
class CsiSpec:
    enabled: bool = False
    c: float = 1.0


@dataclass
class ExperimentConfig:
    """Full description of one BER sweep."""

    grid: GridSpec = field(default_factory=GridSpec)
    profile: str = "tdl_d"
    profile_dir: str | None = None
    schemes: list[Scheme] = field(default_factory=lambda: list(Scheme))
    snr_start_db: float = 0.0
    snr_stop_db: float = 16.0
    snr_step_db: float = 2.0
    trials: TrialsSpec = field(default_factory=TrialsSpec)
    qam_k: int = 1
    equalizer: EqualizerSpec = field(default_factory=EqualizerSpec)
    doppler: DopplerSpec = field(default_factory=DopplerSpec)
    imperfect_csi: CsiSpec = field(default_factory=CsiSpec)
    propagation: str = "matrix"
    theory: bool = True
    seed: int = 0
    output: str | None = None
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        top = _take(data, "", {
            "grid": {}, "profile": "tdl_d", "profile_dir": None,
            "schemes": [s.value for s in Scheme],
            "snr_db": {}, "trials": {}, "qam_k": 1, "equalizer": {},
            "doppler": {}, "imperfect_csi": {}, "propagation": "matrix",
            "theory": True, "seed": 0, "output": None, "threads": 1,
        })
        grid = GridSpec(**_take(top["grid"], "grid", {
            "m": 64, "n": 16, "d_r_s": None, "bandwidth_hz": None,
            "subcarrier_spacing_hz": None, "f_r_hz": None, "l_cp": None}))
        snr = _take(top["snr_db"], "snr_db",
                    {"start": 0.0, "stop": 16.0, "step": 2.0})
        trials = TrialsSpec(**_take(top["trials"], "trials", {
            "max_realizations": 200, "target_bit_errors": 200}))
        eq = EqualizerSpec(**_take(top["equalizer"], "equalizer", {
            "domain": "frequency", "banded": True, "stripe_k": None,
            "stripe_energy_tol": 1e-3, "one_tap_baseline": False,
            "one_tap_tracking": False}))
        dop = DopplerSpec(**_take(top["doppler"], "doppler", {
            "mode": "continuous", "f_max_hz": None, "v_max_kmh": None,
            "carrier_frequency_hz": None}))
        csi = CsiSpec(**_take(top["imperfect_csi"], "imperfect_csi",
                              {"enabled": False, "c": 1.0}))
        schemes = [Scheme.parse(s) for s in top["schemes"]]
        cfg = cls(grid=grid, profile=top["profile"],
                  profile_dir=top["profile_dir"], schemes=schemes,
                  snr_start_db=float(snr["start"]),
                  snr_stop_db=float(snr["stop"]),
                  snr_step_db=float(snr["step"]), trials=trials,
                  qam_k=int(top["qam_k"]), equalizer=eq, doppler=dop,
                  imperfect_csi=csi, propagation=top["propagation"],
                  theory=bool(top["theory"]), seed=int(top["seed"]),
                  output=top["output"], threads=int(top["threads"]))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def validate(self) -> None:
        if self.qam_k < 1:
            raise ConfigError("qam_k must be >= 1")
        if self.snr_step_db <= 0:
            raise ConfigError("snr_db.step must be positive")
        if self.snr_stop_db < self.snr_start_db:
            raise ConfigError("snr_db.stop must be >= snr_db.start")
        if self.propagation not in ("matrix", "waveform"):
            raise ConfigError("propagation must be 'matrix' or 'waveform'")
        if self.equalizer.domain not in ("frequency", "time"):
            raise ConfigError("equalizer.domain must be 'frequency' or 'time'")
        if self.doppler.mode not in ("continuous", "on_grid"):
            raise ConfigError("doppler.mode must be 'continuous' or 'on_grid'")
        if self.trials.max_realizations < 1:
            raise ConfigError("trials.max_realizations must be >= 1")
        if not self.schemes:
            raise ConfigError("schemes list is empty")

    def snr_points_db(self) -> np.ndarray:
        count = int(math.floor(
            (self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9)) + 1
        return self.snr_start_db + self.snr_step_db * np.arange(count)

    def f_max(self) -> float:
        d = self.doppler
        if d.f_max_hz is not None:
            if d.v_max_kmh is not None or d.carrier_frequency_hz is not None:
                # both styles given: require agreement
                if d.v_max_kmh is None or d.carrier_frequency_hz is None:
                    raise ConfigError(
                        "doppler: give f_max_hz or both v_max_kmh and "
                        "carrier_frequency_hz")
                derived = (d.carrier_frequency_hz * d.v_max_kmh / 3.6
                           / LIGHT_SPEED)
                if abs(derived - d.f_max_hz) > 1e-6 * max(d.f_max_hz, 1.0):
                    raise ConfigError(
                        f"doppler over-specified: f_max_hz={d.f_max_hz} "
                        f"conflicts with derived {derived:.6g}")
            return float(d.f_max_hz)
        if d.v_max_kmh is None or d.carrier_frequency_hz is None:
            raise ConfigError("doppler: give f_max_hz or both v_max_kmh and "
                              "carrier_frequency_hz")
        return float(d.carrier_frequency_hz * d.v_max_kmh / 3.6 / LIGHT_SPEED)

    def canonical(self) -> dict:
        """JSON-stable dict for hashing into the report header."""
        return {
            "grid": vars(self.grid).copy(),
            "profile": self.profile,
            "schemes": [s.value for s in self.schemes],
            "snr_db": {"start": self.snr_start_db, "stop": self.snr_stop_db,
                       "step": self.snr_step_db},
            "trials": vars(self.trials).copy(),
            "qam_k": self.qam_k,
            "equalizer": vars(self.equalizer).copy(),
            "doppler": vars(self.doppler).copy(),
            "imperfect_csi": vars(self.imperfect_csi).copy(),
            "propagation": self.propagation,
            "theory": self.theory,
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def derive_grid(config: ExperimentConfig) -> FrameGrid:
    """Resolve the frame grid from the config and the profile's delay spread.

    Accepts any consistent subset of sampling-rate descriptions
    (``d_r_s``, ``bandwidth_hz``, ``subcarrier_spacing_hz``, ``f_r_hz``);
    conflicting over-specification is an error.
    """
    g = config.grid
    if g.m < 1 or g.n < 1:
        raise ConfigError("grid.m and grid.n must be positive")
    candidates: list[tuple[str, float]] = []
    if g.d_r_s is not None:
        candidates.append(("grid.d_r_s", float(g.d_r_s)))
    if g.bandwidth_hz is not None:
        candidates.append(("grid.bandwidth_hz", 1.0 / float(g.bandwidth_hz)))
    if g.subcarrier_spacing_hz is not None:
        candidates.append(("grid.subcarrier_spacing_hz",
                           1.0 / (g.m * float(g.subcarrier_spacing_hz))))
    if g.f_r_hz is not None:
        candidates.append(("grid.f_r_hz",
                           1.0 / (g.m * g.n * float(g.f_r_hz))))
    if not candidates:
        raise ConfigError("grid needs one of d_r_s, bandwidth_hz, "
                          "subcarrier_spacing_hz or f_r_hz")
    d_r = candidates[0][1]
    for name, value in candidates[1:]:
        if abs(value - d_r) > 1e-9 * d_r:
            raise ConfigError(
                f"{name} conflicts with {candidates[0][0]} "
                f"(d_r {value:.9e} vs {d_r:.9e})")
    profile = load_profile(config.profile, config.profile_dir)
    return FrameGrid.create(M=g.m, N=g.n, d_r=d_r, L_cp=g.l_cp,
                            f_max=config.f_max(), d_max=profile.d_max)


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------

def _stream(seed: int, *key) -> np.random.Generator:
    parts = []
    for item in key:
        if isinstance(item, str):
            digest = hashlib.sha256(item.encode()).digest()
            parts.append(int.from_bytes(digest[:4], "little"))
        else:
            parts.append(int(item))
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=tuple(parts)))


# ---------------------------------------------------------------------------
# BER report
# ---------------------------------------------------------------------------

@dataclass
class BerRow:
    scheme: str
    snr_db: float
    ber_simulated: float
    ber_theoretical: float
    bit_errors: int
    bits_total: int
    realizations: int
    ci_95: float


@dataclass
class BerReport:
    rows: list[BerRow]
    config_hash: str
    seed: int

    CSV_HEADER = ("scheme,snr_db,ber_simulated,ber_theoretical,"
                  "bit_errors,bits_total,realizations,ci_95")

    def to_csv(self, path: str | Path | None = None) -> str:
        lines = [f"# fastfade-ber v1 config_sha256={self.config_hash} "
                 f"seed={self.seed}", self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.scheme},{r.snr_db:.6g},{r.ber_simulated:.10e},"
                f"{r.ber_theoretical:.10e},{r.bit_errors},{r.bits_total},"
                f"{r.realizations},{r.ci_95:.10e}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        return text

    def row(self, scheme: str, snr_db: float) -> BerRow:
        for r in self.rows:
            if r.scheme == scheme and abs(r.snr_db - snr_db) < 1e-9:
                return r
        raise KeyError(f"no row for ({scheme}, {snr_db})")


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@dataclass
class _PointAcc:
    errors: int = 0
    bits: int = 0
    realizations: int = 0
    theory: list[float] = field(default_factory=list)


def _simulate_point(config, grid, scheme, paths, ops, gamma, point_idx,
                    realization, one_tap: bool):
    """One (scheme, SNR point, realization) pass; returns error/bit counts."""
    qam_k = config.qam_k
    bits_per_frame = 2 * qam_k * grid.size
    rng_data = _stream(config.seed, "data", realization, point_idx,
                       scheme.value)
    bits = rng_data.integers(0, 2, size=bits_per_frame)
    data = DataGrid.from_vec(qam_map(bits, qam_k), grid.M, grid.N)
    tx = modem.modulate(scheme, data, grid)
    noise_var = 1.0 / gamma

    if config.propagation == "waveform":
        rng_noise = _stream(config.seed, "noise", realization, point_idx,
                            scheme.value)
        burst = channel.propagate_waveform(paths, grid, tx.burst, rng_noise,
                                           noise_var)
        rx_frames = modem.split_burst(scheme, burst, grid)
    else:
        rng_noise = _stream(config.seed, "noise", realization, point_idx,
                            scheme.value)
        rx_frames = []
        for i, frame in enumerate(tx.frames):
            size = len(frame)
            offset = 0 if scheme is Scheme.OTFS \
                else i * (grid.M + grid.L_cp)
            clean = channel.apply_delay_time(paths, grid, frame, size=size,
                                             time_offset=offset)
            noise = (rng_noise.standard_normal(size)
                     + 1j * rng_noise.standard_normal(size))
            rx_frames.append(clean + np.sqrt(noise_var / 2.0) * noise)

    eq_ops = ops
    if config.imperfect_csi.enabled:
        rng_csi = _stream(config.seed, "csi", realization, point_idx,
                          scheme.value)
        eq_ops = equalizer.ChannelOperators(
            scheme=scheme, grid=grid,
            freq=[channel.perturb_channel(h, gamma, config.imperfect_csi.c,
                                          rng_csi) for h in ops.freq]
            if ops.freq is not None else None,
            time=[channel.perturb_channel(h, gamma, config.imperfect_csi.c,
                                          rng_csi) for h in ops.time]
            if ops.time is not None else None)

    cfg = equalizer.EqualizerConfig(
        gamma_in=gamma, domain=config.equalizer.domain,
        banded=config.equalizer.banded, stripe_k=config.equalizer.stripe_k,
        one_tap=one_tap,
        one_tap_tracking=config.equalizer.one_tap_tracking)
    result = equalizer.equalize_frame(scheme, eq_ops, rx_frames, cfg)
    bits_hat = qam_demap(result.y.vec, qam_k)
    errors = int(np.count_nonzero(bits_hat != bits))
    return errors, bits_per_frame


def run_ber_sweep(config: ExperimentConfig) -> BerReport:
    """Run the configured Monte-Carlo BER sweep and return the report.

    Per (scheme, SNR point): draw a channel realization, modulate random
    bits, propagate through the discrete channel (matrix model by default,
    sample-domain waveform when configured), add calibrated noise,
    equalize (optionally with perturbed CSI and the one-tap baseline) and
    accumulate bit errors.  Points stop early once the target error count
    is reached; everything is deterministic in the root seed.
    """
    config.validate()
    profile = load_profile(config.profile, config.profile_dir)
    grid = derive_grid(config)
    f_max = config.f_max()
    snr_db = config.snr_points_db()
    gammas = 10.0 ** (snr_db / 10.0)
    theory_on = config.theory and grid.size <= THEORY_SIZE_LIMIT

    labels = []
    for scheme in config.schemes:
        labels.append((scheme, False))
        if config.equalizer.one_tap_baseline:
            labels.append((scheme, True))
    acc: dict[tuple, _PointAcc] = {
        (scheme, one_tap, pi): _PointAcc()
        for scheme, one_tap in labels for pi in range(len(snr_db))}

    target = config.trials.target_bit_errors

    def point_active(key) -> bool:
        a = acc[key]
        if a.realizations >= config.trials.max_realizations:
            return False
        return target is None or a.errors < target

    executor = ThreadPoolExecutor(max_workers=config.threads) \
        if config.threads > 1 else None
    try:
        for realization in range(config.trials.max_realizations):
            work = [(scheme, one_tap, pi)
                    for (scheme, one_tap, pi) in acc
                    if point_active((scheme, one_tap, pi))]
            if not work:
                break
            rng_ch = _stream(config.seed, "channel", realization)
            paths = channel.tdl_realization(
                profile, grid, f_max, rng_ch,
                doppler_mode=config.doppler.mode,
                on_grid_delays=(config.propagation == "waveform"))
            needed = {scheme for scheme, _, _ in work}
            ops = {scheme: equalizer.build_channel_operators(
                paths, grid, scheme, domain=config.equalizer.domain,
                banded=config.equalizer.banded,
                stripe_k=config.equalizer.stripe_k,
                energy_tol=config.equalizer.stripe_energy_tol)
                for scheme in needed}
            spectra = {}
            if theory_on:
                mmse_schemes = {scheme for scheme, one_tap, _ in work
                                if not one_tap}
                spectra = {scheme: analysis.scheme_spectra(paths, grid, scheme)
                           for scheme in mmse_schemes}

            def run_one(key):
                scheme, one_tap, pi = key
                return _simulate_point(config, grid, scheme, paths,
                                       ops[scheme], gammas[pi], pi,
                                       realization, one_tap)

            if executor is not None:
                results = list(executor.map(run_one, work))
            else:
                results = [run_one(key) for key in work]
            for key, (errors, bits) in zip(work, results):
                a = acc[key]
                a.errors += errors
                a.bits += bits
                a.realizations += 1
                scheme, one_tap, pi = key
                if theory_on and not one_tap:
                    snr_grid = analysis.snr_grid_from_spectra(
                        spectra[scheme], grid, scheme, gammas[pi])
                    a.theory.append(
                        analysis.theoretical_ber(snr_grid, config.qam_k))
    finally:
        if executor is not None:
            executor.shutdown()

    rows = []
    for scheme, one_tap in labels:
        name = scheme.value + ("-onetap" if one_tap else "")
        for pi, db in enumerate(snr_db):
            a = acc[(scheme, one_tap, pi)]
            ber = a.errors / a.bits if a.bits else math.nan
            theory = float(np.mean(a.theory)) if a.theory else math.nan
            ci = 1.96 * math.sqrt(max(ber * (1.0 - ber), 0.0) / a.bits) \
                if a.bits else math.nan
            rows.append(BerRow(scheme=name, snr_db=float(db),
                               ber_simulated=ber, ber_theoretical=theory,
                               bit_errors=a.errors, bits_total=a.bits,
                               realizations=a.realizations, ci_95=ci))
    report = BerReport(rows=rows, config_hash=config.config_hash(),
                       seed=config.seed)
    if config.output:
        report.to_csv(config.output)
    return report


# ---------------------------------------------------------------------------
# validation suite
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}"
                 for c in self.checks]
        verdict = "all checks passed" if self.passed else "FAILURES present"
        return "\n".join(lines + [verdict])


def _random_paths(rng, grid, on_grid=False, count=3) -> channel.PathSet:
    n = grid.size
    gains = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) \
        / np.sqrt(2 * count)
    if on_grid:
        delays = rng.integers(0, max(grid.L_max, 1) + 1, count) * grid.d_r
        dopplers = rng.integers(-grid.K_max, grid.K_max + 1, count) * grid.f_r
    else:
        delays = rng.uniform(0, max(grid.L_max, 1)) * grid.d_r * \
            rng.uniform(0, 1, count)
        dopplers = rng.uniform(-grid.K_max, grid.K_max, count) * grid.f_r
    return channel.PathSet(
        channel.ChannelPath(g, d, nu)
        for g, d, nu in zip(gains, delays, dopplers))


def _dense_hnu(paths, grid) -> np.ndarray:
    ch = channel.freq_doppler_samples(paths, grid)
    samples = ch.dense()
    n = grid.size
    m = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    return samples[k, (m - k) % n]


def run_validation(seed: int = 0, m: int = 8, n: int = 4,
                   noise_samples: int = 1_000_000) -> ValidationReport:
    """Run the cross-module consistency suite at desk scale."""
    rng = np.random.default_rng(seed)
    grid = FrameGrid(M=m, N=n, d_r=1e-6, f_r=1.0 / (m * n * 1e-6),
                     L_cp=3, K_max=2, L_max=3)
    nn = grid.size
    fmat = UnitaryOperator.dft(nn).densify()
    checks = []

    def check(name):
        def deco(fn):
            try:
                detail = fn()
                checks.append(CheckResult(name, True, detail))
            except AssertionError as exc:
                checks.append(CheckResult(name, False, str(exc)))
            return fn
        return deco

    @check("dft_similarity")
    def _():
        worst = 0.0
        for _ in range(5):
            paths = _random_paths(rng, grid, on_grid=False)
            ht = channel.build_Ht(channel.delay_time_samples(paths, grid))
            hnu = _dense_hnu(paths, grid)
            err = (np.linalg.norm(fmat @ ht @ fmat.conj().T - hnu)
                   / np.linalg.norm(hnu))
            worst = max(worst, err)
        assert worst <= 1e-9, f"relative error {worst:.2e}"
        return f"max relative error {worst:.2e}"

    @check("delay_time_2d_transform")
    def _():
        paths = _random_paths(rng, grid)
        ht = channel.delay_time_samples(paths, grid).samples
        hnu = channel.freq_doppler_samples(paths, grid).dense()
        ii = np.arange(nn)
        dft = np.exp(-2j * np.pi * np.outer(ii, ii) / nn)
        two_d = dft @ ht @ (dft / nn).T
        err = np.linalg.norm(two_d - hnu) / np.linalg.norm(hnu)
        assert err <= 1e-9, f"relative error {err:.2e}"
        return f"relative error {err:.2e}"

    @check("static_channel_degeneration")
    def _():
        paths = channel.PathSet([channel.ChannelPath(0.8, 0.0, 0.0),
                                 channel.ChannelPath(0.5, 2 * grid.d_r, 0.0)])
        ht = channel.build_Ht(channel.delay_time_samples(paths, grid))
        for row in range(1, nn):
            assert np.allclose(ht[row], np.roll(ht[0], row), atol=1e-12), \
                "delay-time matrix is not circulant for a static channel"
        hnu = _dense_hnu(paths, grid)
        off_diag = hnu - np.diag(np.diag(hnu))
        assert np.max(np.abs(off_diag)) <= 1e-12, "static channel not diagonal"
        return "circulant in time, diagonal in frequency"

    @check("stripe_exactness")
    def _():
        paths = _random_paths(rng, grid, on_grid=True)
        banded = channel.build_Hnu(channel.freq_doppler_samples(paths, grid),
                                   grid.K_max)
        assert banded.discarded_energy_fraction <= 1e-12, \
            f"discarded {banded.discarded_energy_fraction:.2e}"
        moving = channel.PathSet([channel.ChannelPath(
            1.0, 0.0, grid.K_max * grid.f_r)])
        try:
            channel.build_Hnu(channel.freq_doppler_samples(moving, grid), 0)
            raise AssertionError("stripe_k=0 accepted a moving channel")
        except OutOfStripeError:
            pass
        return "zero out-of-stripe energy; under-declared stripe rejected"

    @check("mmse_domain_equivalence")
    def _():
        worst_s, worst_t = 0.0, 0.0
        for _ in range(5):
            paths = _random_paths(rng, grid)
            ht = channel.build_Ht(channel.delay_time_samples(paths, grid))
            hnu = _dense_hnu(paths, grid)
            r = rng.standard_normal(nn) + 1j * rng.standard_normal(nn)
            gamma = 8.0
            s_time = equalizer.mmse_time(ht, r, gamma)
            big_r = np.fft.fft(r, norm="ortho")
            s_freq = np.fft.ifft(equalizer.mmse_freq_dense(hnu, big_r, gamma),
                                 norm="ortho")
            worst_s = max(worst_s, np.linalg.norm(s_time - s_freq)
                          / np.linalg.norm(s_time))
            mse_t = nn - np.trace(ht.conj().T @ np.linalg.solve(
                ht @ ht.conj().T + np.eye(nn) / gamma, ht)).real
            mse_f = nn - np.trace(hnu.conj().T @ np.linalg.solve(
                hnu @ hnu.conj().T + np.eye(nn) / gamma, hnu)).real
            worst_t = max(worst_t, abs(mse_t - mse_f) / abs(mse_t))
        assert worst_s <= 1e-8, f"estimate mismatch {worst_s:.2e}"
        assert worst_t <= 1e-9, f"trace mismatch {worst_t:.2e}"
        return f"estimates {worst_s:.2e}, traces {worst_t:.2e}"

    @check("banded_solver_oracle")
    def _():
        worst = 0.0
        for _ in range(10):
            size = int(rng.integers(8, 48))
            k = int(rng.integers(0, min(4, (size - 1) // 2) + 1))
            mat = CircularBandedMatrix(size, k, k)
            mat.diags[:] = (rng.standard_normal(mat.diags.shape)
                            + 1j * rng.standard_normal(mat.diags.shape))
            mat.diags[k] += 3.0 * (2 * k + 1)
            b = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            x = band_solve(mat, b)
            ref = np.linalg.solve(mat.densify(), b)
            worst = max(worst, np.linalg.norm(x - ref) / np.linalg.norm(ref))
        assert worst <= 1e-9, f"relative error {worst:.2e}"
        return f"max relative error {worst:.2e}"

    @check("output_snr_dual_form")
    def _():
        worst = 0.0
        paths = _random_paths(rng, grid)
        for scheme in Scheme:
            mats = modem.scheme_time_matrices(paths, grid, scheme)
            v = modem.modulation_operator(scheme, grid)
            for ht in mats:
                direct = analysis.output_snr_direct(ht, v, 5.0)
                eigen, _ = analysis.output_snr_eigen(ht, v, 5.0)
                worst = max(worst, float(np.max(
                    np.abs(direct - eigen) / np.maximum(np.abs(eigen), 1e-30))))
        assert worst <= 1e-8, f"relative deviation {worst:.2e}"
        return f"max relative deviation {worst:.2e}"

    @check("waveform_vs_matrix_model")
    def _():
        worst = 0.0
        for _ in range(5):
            paths = _random_paths(rng, grid, on_grid=True)
            s = rng.standard_normal(nn) + 1j * rng.standard_normal(nn)
            burst = np.concatenate([s[-grid.L_cp:], s])
            rx = channel.propagate_waveform(paths, grid, burst,
                                            rng, 0.0)[grid.L_cp:]
            ht = channel.build_Ht(channel.delay_time_samples(paths, grid))
            ref = ht @ s
            worst = max(worst, np.linalg.norm(rx - ref) / np.linalg.norm(ref))
        assert worst <= 1e-9, f"relative error {worst:.2e}"
        return f"max relative residual {worst:.2e}"

    @check("unitarity")
    def _():
        ops = [UnitaryOperator.dft(nn), UnitaryOperator.idft(nn),
               UnitaryOperator.identity(nn),
               UnitaryOperator.kron_idft_eye(m, n),
               UnitaryOperator.block_idft(m, n)]
        worst = 0.0
        for op in ops:
            x = rng.standard_normal(nn) + 1j * rng.standard_normal(nn)
            err = np.linalg.norm(op.adjoint().apply(op.apply(x)) - x) \
                / np.linalg.norm(x)
            worst = max(worst, err)
        assert worst <= 1e-12, f"round-trip error {worst:.2e}"
        return f"max round-trip error {worst:.2e}"

    @check("modem_roundtrip")
    def _():
        for scheme in Scheme:
            bits = rng.integers(0, 2, 2 * nn)
            data = DataGrid.from_vec(qam_map(bits, 1), grid.M, grid.N)
            tx = modem.modulate(scheme, data, grid)
            rx = modem.demodulate(scheme, tx.frames, grid)
            back = qam_demap(rx.vec, 1)
            assert np.array_equal(back, bits), f"{scheme.value} round trip"
        return "bits in equal bits out for all schemes"

    @check("noise_calibration")
    def _():
        gamma = 10.0 ** 0.6
        rng_n = np.random.default_rng(seed + 1)
        total = noise_samples
        sym = qam_map(rng_n.integers(0, 2, 2 * total), 1)
        noise = np.sqrt(1.0 / gamma / 2.0) * (
            rng_n.standard_normal(total) + 1j * rng_n.standard_normal(total))
        measured = 10 * np.log10(np.mean(np.abs(sym) ** 2)
                                 / np.mean(np.abs(noise) ** 2))
        assert abs(measured - 6.0) <= 0.1, f"measured {measured:.3f} dB"
        return f"empirical SNR {measured:.3f} dB vs configured 6.000 dB"

    return ValidationReport(checks=checks)
