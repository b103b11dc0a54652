"""Declarative experiments: config parsing, trial execution and CSV output."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .amp import run_amp
from .denoise import DENOISER_MODES, make_denoiser
from .errors import ConfigError, NumericDivergenceError, ParameterError
from .linmodel import MODEL_KINDS, SignalModel, make_system
from .se import DEFAULT_MC_SAMPLES, MIN_MC_SAMPLES, predicted_estimate_mse, se_path

REQUIRED_KEYS = ("model", "n", "delta", "sigma_w", "trials")
OPTIONAL_KEYS = {
    "iterations": 15,
    "seed": 0,
    "se_mc_samples": None,
    "lambda_mode": "se",
    "denoiser_mode": "conditional",
    "onsager": True,
    "stop_tol": None,
    "out": None,
}
MODEL_KEYS = {
    "GG": ("sigma_x", "sigma"),
    "BG": ("epsilon", "sigma"),
    "BlockSparse": ("K", "sigma"),
    "BernoulliSep": ("K", "sigma"),
}
LAMBDA_MODES = ("se", "empirical")


@dataclass(frozen=True)
class ExperimentConfig:
    model: SignalModel
    n: int
    delta: float
    sigma_w: float
    trials: int
    iterations: int = 15
    seed: int = 0
    se_mc_samples: int | None = None
    lambda_mode: str = "se"
    denoiser_mode: str = "conditional"
    onsager: bool = True
    stop_tol: float | None = None
    out: str | None = None

    @property
    def m(self):
        return int(round(self.n * self.delta))

    @property
    def realized_delta(self):
        return self.m / self.n

    def to_dict(self):
        d = {k: getattr(self, k) for k in REQUIRED_KEYS[1:] + tuple(OPTIONAL_KEYS)}
        d["model"] = self.model.params()
        return d


def _number(raw, key, kind=float, low=None, low_open=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{key} must be a number, got {raw!r}", key=key)
    if kind is int and int(raw) != raw:
        raise ConfigError(f"{key} must be an integer, got {raw!r}", key=key)
    value = kind(raw)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", key=key)
    if low is not None and (value <= low if low_open else value < low):
        bound = ">" if low_open else ">="
        raise ConfigError(f"{key} must be {bound} {low}, got {raw!r}", key=key)
    return value


def _parse_model(raw):
    if not isinstance(raw, dict):
        raise ConfigError("model must be a mapping", key="model")
    kind = raw.get("type")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model.type must be one of {MODEL_KINDS}, got {kind!r}", key="model.type")
    expected = MODEL_KEYS[kind]
    for key in raw:
        if key != "type" and key not in expected:
            raise ConfigError(f"unexpected key for {kind} model: {key}", key=f"model.{key}")
    for key in expected:
        if key not in raw:
            raise ConfigError(f"missing key model.{key}", key=f"model.{key}")
    params = {}
    for key in expected:
        if key == "K":
            params[key] = _number(raw[key], "model.K", int, low=1)
        elif key == "epsilon":
            params[key] = _number(raw[key], "model.epsilon", low=0, low_open=True)
            if params[key] > 1:
                raise ConfigError("model.epsilon must be <= 1", key="model.epsilon")
        else:
            params[key] = _number(raw[key], f"model.{key}", low=0, low_open=True)
    return SignalModel(kind, **params)


def config_from_dict(raw):
    """Validate a raw mapping and build an :class:`ExperimentConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    for key in raw:
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ConfigError(f"unexpected key: {key}", key=key)
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing key: {key}", key=key)
    vals = dict(OPTIONAL_KEYS)
    vals.update(raw)

    model = _parse_model(vals["model"])
    n = _number(vals["n"], "n", int, low=1)
    delta = _number(vals["delta"], "delta", low=0, low_open=True)
    sigma_w = _number(vals["sigma_w"], "sigma_w", low=0)
    trials = _number(vals["trials"], "trials", int, low=1)
    iterations = _number(vals["iterations"], "iterations", int, low=1)
    seed = _number(vals["seed"], "seed", int, low=0)
    mc = vals["se_mc_samples"]
    if mc is not None:
        mc = _number(mc, "se_mc_samples", int, low=MIN_MC_SAMPLES)
    if vals["lambda_mode"] not in LAMBDA_MODES:
        raise ConfigError(f"lambda_mode must be one of {LAMBDA_MODES}", key="lambda_mode")
    mode = vals["denoiser_mode"]
    if mode not in DENOISER_MODES:
        raise ConfigError(f"denoiser_mode must be one of {DENOISER_MODES}", key="denoiser_mode")
    if mode != "conditional" and model.kind not in ("BlockSparse", "BernoulliSep"):
        raise ConfigError(f"denoiser_mode {mode!r} needs a BlockSparse or BernoulliSep model", key="denoiser_mode")
    if not isinstance(vals["onsager"], bool):
        raise ConfigError("onsager must be true or false", key="onsager")
    stop_tol = vals["stop_tol"]
    if stop_tol is not None:
        stop_tol = _number(stop_tol, "stop_tol", low=0, low_open=True)
    out = vals["out"]
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a string path prefix", key="out")

    cfg = ExperimentConfig(
        model=model, n=n, delta=delta, sigma_w=sigma_w, trials=trials, iterations=iterations,
        seed=seed, se_mc_samples=mc, lambda_mode=vals["lambda_mode"], denoiser_mode=mode,
        onsager=vals["onsager"], stop_tol=stop_tol, out=out,
    )
    if cfg.m < 1:
        raise ConfigError(f"n * delta rounds to m={cfg.m}; need m >= 1", key="delta")
    if model.kind == "BlockSparse" and n % model.K:
        raise ConfigError(f"n={n} is not divisible by K={model.K}", key="n")
    return cfg


def parse_config(path):
    """Read and validate a JSON experiment file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def shipped_configs():
    """Names of the configs bundled with the package."""
    root = resources.files("ampsi") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def shipped_config(name):
    root = resources.files("ampsi") / "configs"
    with resources.as_file(root / f"{name}.json") as path:
        return parse_config(path)


@dataclass
class TrialReport:
    """Per-trial and aggregated results of one experiment.

    Row ``k`` (``iter = k + 1``) refers to the estimate ``x^{k+1}``, produced
    from pseudo-data with effective noise ``lambda_k``.
    """

    config: ExperimentConfig
    se: object
    mse: np.ndarray
    pseudo_mse: np.ndarray
    lambdas: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def trials(self):
        return self.mse.shape[0]

    @property
    def iterations(self):
        return self.mse.shape[1]

    @property
    def mean_mse(self):
        return self.mse.mean(axis=0)

    @property
    def stderr_mse(self):
        if self.trials < 2:
            return np.full(self.iterations, np.nan)
        return self.mse.std(axis=0, ddof=1) / math.sqrt(self.trials)

    @property
    def mean_pseudo_mse(self):
        return self.pseudo_mse.mean(axis=0)

    @property
    def se_lambda_sq(self):
        """``lambda_{k+1}^2`` matching each aggregate row."""
        return self.se.lambda_sq[1 : self.iterations + 1]

    @property
    def predicted_mse(self):
        return predicted_estimate_mse(self.se)[: self.iterations]

    def tracking_deviation(self):
        """``|mean empirical MSE - SE prediction| / SE prediction`` per row."""
        pred = self.predicted_mse
        return np.abs(self.mean_mse - pred) / pred

    def pseudo_deviation(self):
        """Relative gap between pseudo-data MSE and ``lambda_k^2``."""
        target = self.se.lambda_sq[: self.iterations]
        return np.abs(self.mean_pseudo_mse - target) / target


def _trial_streams(seed, trials):
    root = np.random.SeedSequence(seed)
    se_seq, *trial_seqs = root.spawn(trials + 1)
    return np.random.default_rng(se_seq), trial_seqs


def _run_trial(cfg, index, seq, denoiser, path):
    rng_matrix, rng_signal, rng_noise = (np.random.default_rng(s) for s in seq.spawn(3))
    system = make_system(cfg.model, cfg.n, cfg.m, cfg.sigma_w, rng_matrix, rng_signal, rng_noise)
    lambdas = path if cfg.lambda_mode == "se" else None
    try:
        traj = run_amp(system, denoiser, lambdas, cfg.iterations, onsager=cfg.onsager, stop_tol=cfg.stop_tol)
    except NumericDivergenceError as exc:
        raise NumericDivergenceError(f"trial {index}: {exc}", iteration=exc.iteration, trial=index) from exc
    return traj


def compute_se(cfg, rng=None):
    denoiser = make_denoiser(cfg.model, cfg.denoiser_mode)
    matched = cfg.denoiser_mode == "conditional" or (
        cfg.denoiser_mode == "block" and cfg.model.kind == "BlockSparse"
    )
    mc = cfg.se_mc_samples or DEFAULT_MC_SAMPLES[cfg.model.kind]
    if rng is None:
        rng, _ = _trial_streams(cfg.seed, 0)
    return se_path(
        cfg.model, cfg.realized_delta, cfg.sigma_w, cfg.iterations, mc, rng,
        denoiser=None if matched else denoiser,
    )


def run_experiment(cfg, workers=1):
    """Compute the SE path once and run ``cfg.trials`` independent AMP runs."""
    se_rng, trial_seqs = _trial_streams(cfg.seed, cfg.trials)
    path = compute_se(cfg, se_rng)
    denoiser = make_denoiser(cfg.model, cfg.denoiser_mode)
    jobs = list(enumerate(trial_seqs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(lambda j: _run_trial(cfg, j[0], j[1], denoiser, path), jobs))
    else:
        trajs = [_run_trial(cfg, i, s, denoiser, path) for i, s in jobs]
    T = min(len(t) for t in trajs)
    return TrialReport(
        config=cfg,
        se=path,
        mse=np.array([t.mse_estimate[:T] for t in trajs]),
        pseudo_mse=np.array([t.mse_pseudo[:T] for t in trajs]),
        lambdas=np.array([t.lambdas[:T] for t in trajs]),
    )


TRIALS_HEADER = ("trial", "iter", "mse", "pseudo_mse", "lambda")
SE_HEADER = ("iter", "lambda_sq", "pred_mse", "emp_mean_mse", "emp_stderr")
SE_PATH_HEADER = ("iter", "lambda_sq", "pred_mse", "std_error")


def fmt(value):
    return f"{float(value):.12g}"


def _write_rows(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def emit_csv(report, prefix):
    """Write ``<prefix>.trials.csv`` and ``<prefix>.se.csv``; returns both paths."""
    prefix = str(prefix)
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    trial_rows = [
        (i, k + 1, fmt(report.mse[i, k]), fmt(report.pseudo_mse[i, k]), fmt(report.lambdas[i, k]))
        for i in range(report.trials)
        for k in range(report.iterations)
    ]
    se_rows = [
        (k + 1, fmt(lsq), fmt(pred), fmt(mean), fmt(err))
        for k, (lsq, pred, mean, err) in enumerate(
            zip(report.se_lambda_sq, report.predicted_mse, report.mean_mse, report.stderr_mse)
        )
    ]
    return (
        _write_rows(prefix + ".trials.csv", TRIALS_HEADER, trial_rows),
        _write_rows(prefix + ".se.csv", SE_HEADER, se_rows),
    )


def emit_se_csv(path, out):
    """SE path only: one row per ``t = 0..T``; ``pred_mse`` is the MSE of ``x^t``."""
    pred = path.delta * (path.lambda_sq - path.sigma_w**2)
    rows = [(t, fmt(l), fmt(p), fmt(e)) for t, (l, p, e) in enumerate(zip(path.lambda_sq, pred, path.std_errors))]
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    return _write_rows(out, SE_PATH_HEADER, rows)


def read_csv(path):
    """Load an emitted CSV as ``{column: np.ndarray}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


# -- denoiser self-check ------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.max_error <= self.tolerance)


@dataclass
class CheckReport:
    model: SignalModel
    results: list

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def lines(self):
        out = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            out.append(f"{status}  {r.name:<34s} max_err={r.max_error:.3e}  tol={r.tolerance:.1e}")
        out.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return out


def conditioned_block_inputs(rng, count, K, lam, sigma, spread=1.5):
    """Block inputs whose softmax logits ``a/lam^2 + b/sigma^2`` have O(1) spread.

    Central differences of a saturated softmax lose all precision to
    rounding, so derivative checks sample where the Jacobian is resolvable.
    """
    a = lam * lam * rng.normal(0, spread, (count, K))
    b = sigma * sigma * rng.normal(0, spread, (count, K))
    return a, b


def conditioned_bernoulli_inputs(rng, count, lam, sigma, spread=2.0):
    """Scalar inputs around the ``a = b = 1/2`` decision point, logit spread O(1)."""
    a = 0.5 + lam * lam * rng.normal(0, spread, count)
    b = 0.5 + sigma * sigma * rng.normal(0, spread, count)
    return a, b


def _fd_step(a):
    return 1e-5 * np.maximum(1.0, np.abs(a))


def _rel(x, ref):
    return float(np.max(np.abs(x - ref) / np.abs(ref)))


def denoise_check(model, grid=None, lams=None, denoiser=None, n_random=200, seed=0):
    """Compare a model's denoiser with the oracle and finite differences.

    ``grid`` is the set of values taken by both ``a`` and ``b``; ``lams`` the
    noise levels.  ``denoiser`` overrides the model's own (for negative
    controls).
    """
    from . import oracle

    d = denoiser or make_denoiser(model)
    rng = np.random.default_rng(seed)
    results = []
    sigma = model.sigma

    if model.kind == "BlockSparse":
        lams = lams or [0.3, 1.0]
        K = model.K
        worst_oracle = worst_fd = 0.0
        for lam in lams:
            a, b = conditioned_block_inputs(rng, n_random, K, lam, sigma)
            est, _ = d.evaluate(a.ravel(), b.ravel(), lam)
            ref = np.array([oracle.enum_block_posterior(ai, bi, lam, sigma) for ai, bi in zip(a, b)])
            worst_oracle = max(worst_oracle, float(np.max(np.abs(est - ref.ravel()))))
            for ai, bi in zip(a[:20], b[:20]):
                div = d.divergence(ai, bi, lam)
                trace = 0.0
                for i in range(K):
                    h = float(_fd_step(ai[i]))
                    up, dn = ai.copy(), ai.copy()
                    up[i] += h
                    dn[i] -= h
                    trace += (d.apply(up, bi, lam)[i] - d.apply(dn, bi, lam)[i]) / (2 * h)
                worst_fd = max(worst_fd, abs(div - trace) / abs(trace))
        results.append(CheckResult(f"enumeration oracle (K={K})", worst_oracle, 1e-12))
        results.append(CheckResult("divergence vs finite differences", worst_fd, 1e-6))
        return CheckReport(model, results)

    if model.kind == "GG":
        grid = np.arange(-3.0, 4.0) if grid is None else np.asarray(grid, dtype=float)
        lams = lams or [0.1, 1.0]
        tol = 1e-8

        def ref(a, b, lam):
            return oracle.quad_posterior_mean("gaussian", a, b, lam, sigma, sigma_x=model.sigma_x)
    elif model.kind == "BG":
        grid = np.arange(-2.0, 3.0) if grid is None else np.asarray(grid, dtype=float)
        lams = lams or [0.5]
        tol = 1e-6

        def ref(a, b, lam):
            return oracle.quad_posterior_mean("bernoulli_gaussian", a, b, lam, sigma, epsilon=model.epsilon)
    else:
        grid = np.linspace(-1.0, 2.0, 7) if grid is None else np.asarray(grid, dtype=float)
        lams = lams or [0.3]
        tol = 1e-12

        def ref(a, b, lam):
            return oracle.bernoulli_posterior(a, b, lam, sigma, model.K)

    A, B = (g.ravel() for g in np.meshgrid(grid, grid, indexing="ij"))
    worst_oracle = worst_fd = 0.0
    for lam in lams:
        est = d.apply(A, B, lam)
        expected = np.array([ref(a, b, lam) for a, b in zip(A, B)])
        worst_oracle = max(worst_oracle, float(np.max(np.abs(est - expected))))
        if model.kind == "BernoulliSep":
            a, b = conditioned_bernoulli_inputs(rng, n_random, lam, sigma)
        else:
            a = rng.normal(0, 2, n_random)
            b = rng.normal(0, 2, n_random)
        h = _fd_step(a)
        fd = (d.apply(a + h, b, lam) - d.apply(a - h, b, lam)) / (2 * h)
        analytic = np.array([d.divergence(a[i : i + 1], b[i : i + 1], lam) for i in range(n_random)])
        worst_fd = max(worst_fd, _rel(analytic, fd))
    results.append(CheckResult(f"{model.kind} oracle over grid", worst_oracle, tol))
    results.append(CheckResult("derivative vs finite differences", worst_fd, 1e-5))
    return CheckReport(model, results)
