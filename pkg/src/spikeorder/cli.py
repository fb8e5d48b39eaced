"""Command-line surface: calibrate, estimate, simulate, report, limits.

Exit codes: 0 on success, 2 on configuration or ingestion errors, 3 on
numerical failures.  With ``--json``, stdout carries one JSON object per
line for machine consumption.
"""

import configparser
import json
import os
import sys

import click

from . import rmt
from .calibration import calibrate_ridge, py_constant
from .errors import ConfigurationError, NumericalError, SpikeOrderError
from .estimators import (
    EstimatorConfig,
    loglog_rate,
    lwy_estimator,
    py_estimator,
    tvacle,
    vacle,
    wy_estimator,
)
from .harness import (
    ESTIMATOR_NAMES,
    EstimatorSetting,
    ExperimentConfig,
    GridPoint,
    run_experiment,
    summarize,
)
from .spectra import AutocovModel, FisherModel, PopulationModel, ingest_spectrum

FAMILIES = ("population", "fisher", "autocov")


def _cache_dir(value):
    if value:
        return value
    return os.environ.get("SPIKEORDER_CACHE",
                          os.path.join(os.path.expanduser("~"), ".cache", "spikeorder"))


def _fail(exc):
    code = 3 if isinstance(exc, NumericalError) else 2
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _emit(payload: dict, as_json: bool):
    if as_json:
        click.echo(json.dumps(payload))
    else:
        for key, val in payload.items():
            click.echo(f"{key} = {val}")


@click.group()
def main():
    """Order determination for large-dimensional spiked models."""


@main.command()
@click.option("--kind", type=click.Choice(FAMILIES), required=True)
@click.option("--p", type=int, required=True)
@click.option("--n", type=int, default=None)
@click.option("--t", "t_", type=int, default=None)
@click.option("--reps", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--cache-dir", default=None, help="defaults to $SPIKEORDER_CACHE")
@click.option("--force", is_flag=True, help="recompute even on a cache hit")
@click.option("--json", "as_json", is_flag=True)
def calibrate(kind, p, n, t_, reps, seed, workers, cache_dir, force, as_json):
    """Pure-noise ridge calibration; caches and prints the derived ridges."""
    cache = _cache_dir(cache_dir)
    try:
        result = calibrate_ridge(kind, p=p, n=n, T=t_, reps=reps, seed=seed,
                                 workers=workers, cache_dir=cache, force=force)
    except SpikeOrderError as exc:
        _fail(exc)
    _emit({"kind": kind, "p": p, "n": n, "T": t_, "reps": reps, "seed": seed,
           "m_pn": result.m_pn, "c1": result.c1, "c2": result.c2,
           "c3a": result.c3a, "c3b": result.c3b, "d_t_lwy": result.d_t_lwy,
           "clamped": list(result.clamped), "cache_dir": cache}, as_json)


def _family_edge(family, p, n, t_, sigma2):
    if family == "population":
        return (1.0 + (p / n) ** 0.5) ** 2
    if family == "fisher":
        return rmt.FisherLaw(c=p / n, y=p / t_, sigma2=1.0).upper_edge
    return rmt.AutocovLaw(y=p / t_).b1


@main.command()
@click.argument("spectrum", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(ESTIMATOR_NAMES), required=True)
@click.option("--family", type=click.Choice(FAMILIES), required=True)
@click.option("--n", type=int, default=None, help="sample size behind the spectrum")
@click.option("--t", "t_", type=int, default=None, help="secondary sample size (T)")
@click.option("--sigma2", default="1.0",
              help="noise scale: a positive float or 'estimated' (population only)")
@click.option("--tau", type=float, default=None, help="default 0.5 (0.8 for fisher)")
@click.option("--bound", "L", type=int, default=20, show_default=True, help="search bound L")
@click.option("--c-n", type=float, default=None,
              help="ridge; calibrated from pure noise when omitted")
@click.option("--k1", type=float, default=5.0, show_default=True)
@click.option("--k2", type=float, default=5.0, show_default=True)
@click.option("--d-t", type=float, default=None, help="lwy ratio tolerance")
@click.option("--py-c", type=float, default=None, help="py constant C override")
@click.option("--py-start-index", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--column", default=None, help="CSV column holding the eigenvalues")
@click.option("--cal-reps", type=int, default=500, show_default=True)
@click.option("--cal-seed", type=int, default=7, show_default=True)
@click.option("--cache-dir", default=None)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
              help="write the ratio trace as JSON")
@click.option("--plot-data", type=click.Path(dir_okay=False), default=None,
              help="write (i, r_i, tau) rows as CSV for the ratio panel")
@click.option("--json", "as_json", is_flag=True)
def estimate(spectrum, method, family, n, t_, sigma2, tau, L, c_n, k1, k2, d_t,
             py_c, py_start_index, column, cal_reps, cal_seed, cache_dir,
             trace_path, plot_data, as_json):
    """Estimate the order of an ingested spectrum file."""
    try:
        _run_estimate(spectrum, method, family, n, t_, sigma2, tau, L, c_n, k1,
                      k2, d_t, py_c, py_start_index, column, cal_reps, cal_seed,
                      cache_dir, trace_path, plot_data, as_json)
    except SpikeOrderError as exc:
        _fail(exc)


def _run_estimate(spectrum, method, family, n, t_, sigma2, tau, L, c_n, k1, k2,
                  d_t, py_c, py_start_index, column, cal_reps, cal_seed,
                  cache_dir, trace_path, plot_data, as_json):
    if family == "population":
        if n is None:
            raise ConfigurationError("population spectra need --n")
        scale_power, spec_T = 1, None
    elif family == "fisher":
        if n is None or t_ is None:
            raise ConfigurationError("fisher spectra need --n and --t")
        scale_power, spec_T = 1, t_
    else:
        if t_ is None:
            raise ConfigurationError("autocov spectra need --t")
        scale_power, spec_T = 2, t_
        n = n if n is not None else t_

    spec = ingest_spectrum(spectrum, n=n, T=spec_T, scale_power=scale_power,
                           column=column)
    p = spec.p
    if sigma2 == "estimated":
        sigma2_val = "estimated"
    else:
        try:
            sigma2_val = float(sigma2)
        except ValueError:
            raise ConfigurationError(
                f"--sigma2 must be a float or 'estimated', got {sigma2!r}"
            ) from None
    tau_val = tau if tau is not None else (0.8 if family == "fisher" else 0.5)

    trace = None
    if method in ("vacle", "tvacle"):
        if c_n is None:
            kind = family
            calib = calibrate_ridge(kind, p=p, n=n, T=t_, reps=cal_reps,
                                    seed=cal_seed, cache_dir=_cache_dir(cache_dir))
            ridge = {"vacle": "c1", "tvacle": "c3a" if family == "fisher" else "c2"}[method]
            c_n = calib.ridge(ridge)
        cfg = EstimatorConfig(
            c_n=c_n, tau=tau_val, L=L, sigma2=sigma2_val,
            e=_family_edge(family, p, n, t_, sigma2_val) if method == "tvacle" else None,
            k1=k1, k2=k2,
        )
        q_hat, trace = (tvacle if method == "tvacle" else vacle)(spec, cfg)
    elif method == "py":
        if family != "population" and n is None:
            raise ConfigurationError("py needs --n")
        s2 = sigma2_val
        if s2 == "estimated":
            from .calibration import estimate_sigma2
            s2 = estimate_sigma2(spec)
        C = py_c if py_c is not None else py_constant(p / n).value
        q_hat = py_estimator(spec, s2, C, L=L, start_index=py_start_index).q_hat
    elif method == "lwy":
        if d_t is None:
            calib = calibrate_ridge(family, p=p, n=n, T=t_, reps=cal_reps,
                                    seed=cal_seed, cache_dir=_cache_dir(cache_dir))
            d_t = calib.d_t_lwy
        q_hat = lwy_estimator(spec, d_t, L=L).q_hat
    else:  # wy
        if family != "fisher":
            raise ConfigurationError("the wy estimator applies to fisher spectra only")
        s2 = 1.0 if sigma2_val == "estimated" else sigma2_val
        edge = rmt.FisherLaw(c=p / n, y=p / t_, sigma2=s2).upper_edge
        q_hat = wy_estimator(spec, edge, loglog_rate(p))

    if trace_path and trace is not None:
        with open(trace_path, "w") as fh:
            fh.write(trace.to_json())
    if plot_data and trace is not None:
        with open(plot_data, "w") as fh:
            fh.write("i,ratio,tau\n")
            for i, r in enumerate(trace.ratios, start=1):
                fh.write(f"{i},{r!r},{trace.tau!r}\n")

    if as_json:
        payload = {"method": method, "family": family, "p": p, "q_hat": int(q_hat)}
        click.echo(json.dumps(payload))
    else:
        click.echo(f"q_hat = {int(q_hat)}")


# configuration file schema: section -> allowed keys
_CONFIG_KEYS = {
    "model": {"kind", "spikes", "sigma2", "alpha", "noise_diag", "theta",
              "gamma", "burn_in"},
    "harness": {"grid", "reps", "seed", "estimators", "sigma2_mode"},
    "calibration": {"reps", "seed"},
    "estimator": {"tau", "l", "k1", "k2", "d_t", "py_c", "py_start_index"},
    "io": {"out", "trace"},
}


def _floats(text):
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_grid(text):
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        kv = {}
        for tok in chunk.replace(",", " ").split():
            key, _, val = tok.partition(":")
            if key not in ("p", "n", "T", "t") or not val:
                raise ConfigurationError(f"bad grid token {tok!r} (use p:.. n:.. T:..)")
            kv["T" if key in ("T", "t") else key] = int(val)
        if "p" not in kv:
            raise ConfigurationError(f"grid entry {chunk!r} lacks p")
        points.append(GridPoint(p=kv["p"], n=kv.get("n"), T=kv.get("T")))
    if not points:
        raise ConfigurationError("grid is empty")
    return tuple(points)


def _parse_estimators(text, overrides):
    settings = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, ridge = chunk.partition(":")
        settings.append(EstimatorSetting(
            name=name, ridge=ridge or None,
            tau=overrides.get("tau"), L=overrides.get("l", 20),
            k1=overrides.get("k1", 5.0), k2=overrides.get("k2", 5.0),
            d_t=overrides.get("d_t"), py_C=overrides.get("py_c"),
            py_start_index=overrides.get("py_start_index", 0),
        ))
    if not settings:
        raise ConfigurationError("estimator list is empty")
    return tuple(settings)


def load_experiment_config(path, seed=None, reps=None, out=None):
    """Parse the sectioned key=value experiment file, applying overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in _CONFIG_KEYS:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _CONFIG_KEYS[section]:
                raise ConfigurationError(f"unknown config key {section}.{key}")

    har = parser["harness"] if parser.has_section("harness") else {}
    grid = _parse_grid(har.get("grid", ""))
    first = grid[0]

    model_sec = parser["model"] if parser.has_section("model") else {}
    kind = model_sec.get("kind")
    if kind not in FAMILIES:
        raise ConfigurationError(f"model.kind must be one of {FAMILIES}, got {kind!r}")
    sigma2 = float(model_sec.get("sigma2", "1.0"))
    if kind == "population":
        if first.n is None:
            raise ConfigurationError("population grid entries need p and n")
        model = PopulationModel(p=first.p, n=first.n,
                                spikes=_floats(model_sec.get("spikes", "")),
                                sigma2=sigma2)
    elif kind == "fisher":
        if first.n is None or first.T is None:
            raise ConfigurationError("fisher grid entries need p, n and T")
        model = FisherModel(p=first.p, n=first.n, T=first.T,
                            alpha=_floats(model_sec.get("alpha", "")),
                            sigma2=sigma2,
                            noise_diag=_floats(model_sec.get("noise_diag", "1 2")))
    else:
        if first.T is None:
            raise ConfigurationError("autocov grid entries need p and T")
        model = AutocovModel(p=first.p, T=first.T,
                             theta=_floats(model_sec.get("theta", "")),
                             gamma_diag=_floats(model_sec.get("gamma", "")),
                             sigma2=sigma2,
                             burn_in=int(model_sec.get("burn_in", "1000")))
    est_over = {}
    if parser.has_section("estimator"):
        sec = parser["estimator"]
        for key in ("tau", "k1", "k2", "d_t", "py_c"):
            if key in sec:
                est_over[key] = float(sec[key])
        if "l" in sec:
            est_over["l"] = int(sec["l"])
        if "py_start_index" in sec:
            est_over["py_start_index"] = int(sec["py_start_index"])

    cal = parser["calibration"] if parser.has_section("calibration") else {}
    io = parser["io"] if parser.has_section("io") else {}

    cfg = ExperimentConfig(
        model_id=os.path.splitext(os.path.basename(path))[0],
        model=model,
        grid=grid,
        estimators=_parse_estimators(har.get("estimators", ""), est_over),
        reps=reps if reps is not None else int(har.get("reps", "200")),
        seed=seed if seed is not None else int(har.get("seed", "0")),
        sigma2_mode=har.get("sigma2_mode", "known"),
        calibration_reps=int(cal.get("reps", "500")),
        calibration_seed=int(cal.get("seed", "7")),
    )
    out_path = out if out is not None else io.get("out")
    want_trace = io.get("trace", "false").strip().lower() in ("1", "true", "yes")
    return cfg, out_path, want_trace


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--seed", type=int, default=None, help="override harness.seed")
@click.option("--reps", type=int, default=None, help="override harness.reps")
@click.option("--out", default=None, help="override io.out (CSV path)")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--trace", "want_trace", is_flag=True,
              help="also write the JSON mirror with full ratio traces")
@click.option("--cache-dir", default=None)
def simulate(config_path, seed, reps, out, workers, want_trace, cache_dir):
    """Run a Monte-Carlo experiment described by a config file."""
    try:
        cfg, out_path, cfg_trace = load_experiment_config(config_path, seed=seed,
                                                          reps=reps, out=out)
        keep = want_trace or cfg_trace
        result = run_experiment(cfg, workers=workers,
                                cache_dir=_cache_dir(cache_dir),
                                keep_traces=keep)
    except SpikeOrderError as exc:
        _fail(exc)
    csv_text = summarize(result.reports)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(csv_text)
        click.echo(f"wrote {out_path}")
        if keep:
            json_path = os.path.splitext(out_path)[0] + ".json"
            with open(json_path, "w") as fh:
                fh.write(result.to_json())
            click.echo(f"wrote {json_path}")
    else:
        click.echo(csv_text, nl=False)
    for r in result.reports:
        if r.partial:
            click.echo(f"warning: partial grid point p={r.p}: {r.error}", err=True)


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSON mirror produced by simulate")
@click.option("--format", "fmt", type=click.Choice(("csv", "json")), default="csv",
              show_default=True)
@click.option("--out", default=None)
def report(in_path, fmt, out):
    """Re-render stored experiment results as CSV or JSON."""
    from .harness import SimulationReport
    try:
        with open(in_path) as fh:
            payload = json.load(fh)
        reports = [SimulationReport(**{**r, "distribution": tuple(r["distribution"])})
                   for r in payload["reports"]]
    except (KeyError, TypeError, ValueError) as exc:
        _fail(ConfigurationError(f"bad report file {in_path}: {exc}"))
    text = summarize(reports) if fmt == "csv" else json.dumps(payload["reports"])
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--family", type=click.Choice(FAMILIES), required=True)
@click.option("--c", type=float, default=None, help="aspect ratio p/n")
@click.option("--y", type=float, default=None, help="aspect ratio p/T")
@click.option("--sigma2", type=float, default=1.0, show_default=True)
@click.option("--spikes", default=None, help="comma list of population spikes")
@click.option("--theta", default=None, help="comma list of VAR(1) coefficients")
@click.option("--gamma", default=None, help="innovation variances (default 2 each)")
@click.option("--json", "as_json", is_flag=True)
def limits(family, c, y, sigma2, spikes, theta, gamma, as_json):
    """Print edges, identifiability thresholds, spike maps and factor limits."""
    try:
        payload = _compute_limits(family, c, y, sigma2, spikes, theta, gamma)
    except SpikeOrderError as exc:
        _fail(exc)
    _emit(payload, as_json)


def _compute_limits(family, c, y, sigma2, spikes, theta, gamma):
    if family == "population":
        if c is None:
            raise ConfigurationError("population limits need --c")
        law = rmt.MpLaw(c=c, sigma2=sigma2)
        payload = {
            "family": family, "c": c, "sigma2": sigma2,
            "lower_edge": law.lower_edge, "upper_edge": law.upper_edge,
            "spike_threshold": rmt.pop_spike_threshold(c, sigma2),
            "atom_at_zero": law.atom_at_zero,
        }
        if spikes:
            vals = _floats(spikes)
            payload["spike_limits"] = [
                rmt.pop_spike_map(s, c, sigma2) for s in vals
            ]
            payload["identifiable"] = rmt.pop_identifiable_count(vals, c, sigma2)
        return payload
    if family == "fisher":
        if c is None or y is None:
            raise ConfigurationError("fisher limits need --c and --y")
        law = rmt.FisherLaw(c=c, y=y, sigma2=sigma2)
        payload = {
            "family": family, "c": c, "y": y, "sigma2": sigma2,
            "lower_edge": law.lower_edge, "upper_edge": law.upper_edge,
            "spike_threshold": law.spike_threshold,
        }
        if spikes:
            vals = _floats(spikes)
            payload["spike_limits"] = [rmt.fisher_spike_map(s, law) for s in vals]
            payload["identifiable"] = rmt.fisher_identifiable_count(vals, law)
        return payload
    if y is None:
        raise ConfigurationError("autocov limits need --y")
    law = rmt.AutocovLaw(y=y, sigma2=sigma2)
    payload = {
        "family": family, "y": y, "sigma2": sigma2,
        "a1": law.a1, "b1": law.b1,
        # one-sided limit approximated just outside the edge; the second
        # value gauges the sensitivity of that approximation
        "t_edge_limit": rmt.autocov_t_edge_limit(law),
        "t_edge_limit_eps1e5": rmt.autocov_t_edge_limit(law, eps=1e-5),
        "atom_at_zero": law.atom_at_zero,
    }
    if theta:
        thetas = _floats(theta)
        gammas = _floats(gamma) if gamma else (2.0,) * len(thetas)
        model = AutocovModel(p=len(thetas) + 2, T=3, theta=thetas, gamma_diag=gammas,
                             sigma2=sigma2)
        lims, idents = [], 0
        for sig in model.signatures:
            fl = rmt.autocov_factor_limit(sig, law)
            lims.append(fl.value)
            idents += int(fl.identifiable)
        payload["factor_limits"] = lims
        payload["identifiable"] = idents
    return payload


if __name__ == "__main__":
    main()
