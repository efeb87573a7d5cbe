"""Command-line entry point.

Subcommands: estimate, simulate, bench-slopes, bench-runtime,
certify-constants, landscape.  Exit codes: 0 success, 1 estimation failure,
2 bad input (including unknown flags).  Numeric output is serialized with 17
significant digits so cross-run diffs are meaningful; ``MUSIC_SEED`` seeds
any command that draws noise.
"""
from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from .constants import CertificationInput, certify, report_lines
from .errors import EstimationError
from .estimator import (
    EstimatorConfig,
    FixedIterations,
    GradientTermination,
    full_pipeline,
)
from .harness import (
    default_signal,
    log_spaced_m,
    run_slope_matrix,
    runtime_benchmark,
    write_runtime_outputs,
    write_slope_outputs,
)
from .landscape import LandscapeHandle
from .noise import GaussianDiagonal, draw
from .signal import (
    SampleVector,
    SignalParams,
    load_samples,
    save_params,
    save_samples,
    synthesize,
)
from .subspace import (
    adaptive_spectrum,
    detect_sparsity,
    toeplitz,
    toeplitz_estimator,
)

_SEED_ENV = "MUSIC_SEED"


def _json_text(obj, level: int = 0) -> str:
    """JSON with every float printed to 17 significant digits."""
    pad = "  " * level
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return f"{x:.17g}"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = [_json_text(v, level + 1) for v in obj]
        if not items:
            return "[]"
        inner = ",\n".join(f"{pad}  {it}" for it in items)
        return f"[\n{inner}\n{pad}]"
    if isinstance(obj, dict):
        items = [f"{pad}  {json.dumps(str(k))}: {_json_text(v, level + 1)}"
                 for k, v in obj.items()]
        if not items:
            return "{}"
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    raise ValueError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: str, obj) -> None:
    with open(path, "w") as f:
        f.write(_json_text(obj) + "\n")


def _run(body):
    """Run a command body with the documented exit-code mapping."""
    try:
        body()
    except click.ClickException:
        raise
    except EstimationError as err:
        stage = f" [stage: {err.stage}]" if err.stage else ""
        click.echo(f"estimation error{stage}: {err}", err=True)
        sys.exit(1)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        click.echo(f"input error: {err}", err=True)
        sys.exit(2)


def _parse_floats(text: str) -> list:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _config_from_sources(config_path, gamma, alpha, spacing, step,
                         fixed_n, epsilon, n_min, n_max) -> EstimatorConfig:
    """Assemble the estimator configuration: flags > file > defaults."""
    fields: dict = {}
    policy = None
    if config_path:
        with open(config_path) as f:
            blob = json.load(f)
        if not isinstance(blob, dict):
            raise ValueError("config file must hold a JSON object")
        for key in ("gamma", "alpha", "grid_spacing", "step"):
            if blob.get(key) is not None:
                fields[key] = float(blob[key])
        pol = blob.get("policy")
        if pol is not None:
            kind = pol.get("kind")
            if kind == "fixed":
                n = pol.get("n")
                policy = FixedIterations(n=int(n) if n is not None else None)
            elif kind == "termination":
                policy = GradientTermination(
                    epsilon=float(pol["epsilon"]),
                    n_min=int(pol.get("n_min", 31)),
                    n_max=int(pol.get("n_max", 300)),
                )
            else:
                raise ValueError(f"unknown policy kind: {kind!r}")
    for key, val in (("gamma", gamma), ("alpha", alpha),
                     ("grid_spacing", spacing), ("step", step)):
        if val is not None:
            fields[key] = val
    if epsilon is not None:
        base = policy if isinstance(policy, GradientTermination) else None
        policy = GradientTermination(
            epsilon=epsilon,
            n_min=n_min if n_min is not None
            else (base.n_min if base else 31),
            n_max=n_max if n_max is not None
            else (base.n_max if base else 300),
        )
    elif fixed_n is not None:
        policy = FixedIterations(n=fixed_n)
    if policy is not None:
        fields["policy"] = policy
    return EstimatorConfig(**fields)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Spectral estimation by gradient descent on the subspace landscape."""


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Samples CSV (columns k,re,im).")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON config overlay (flags take precedence).")
@click.option("--s", "known_s", type=int, default=None,
              help="Known sparsity; skips detection.")
@click.option("--output", default="result.json", show_default=True,
              help="Result JSON path.")
@click.option("--gamma", type=float, default=None,
              help="Detection threshold (default 0.0525).")
@click.option("--alpha", type=float, default=None,
              help="Acceptance threshold (default 0.529).")
@click.option("--spacing", type=float, default=None,
              help="Coarse grid spacing (default 1/(2m)).")
@click.option("--step", type=float, default=None,
              help="Descent step (default 6/m^2).")
@click.option("--fixed-n", type=int, default=None,
              help="Run exactly n descent steps per cluster.")
@click.option("--epsilon", type=float, default=None,
              help="Terminate when |q'| <= epsilon*m (within [n-min, n-max]).")
@click.option("--n-min", type=int, default=None)
@click.option("--n-max", type=int, default=None)
def estimate(input_path, config_path, known_s, output, gamma, alpha, spacing,
             step, fixed_n, epsilon, n_min, n_max):
    """Estimate frequencies and amplitudes from a samples CSV."""

    def body():
        samples = load_samples(input_path)
        config = _config_from_sources(config_path, gamma, alpha, spacing,
                                      step, fixed_n, epsilon, n_min, n_max)
        result = full_pipeline(samples, config=config, known_s=known_s)
        _write_json(output, {
            "m": samples.m,
            "s_hat": result.s_hat,
            "frequencies": list(result.frequencies),
            "amplitudes_re": list(np.real(result.amplitudes)),
            "amplitudes_im": list(np.imag(result.amplitudes)),
            "iterations": list(result.iterations),
            "flagged": list(result.flagged),
            "singular_values": list(result.singular_values),
            "theta_plugin": result.theta_plugin,
            "auto_iterations": result.auto_iterations,
            "coarse_evals": result.coarse_evals,
            "gradient_evals": result.gradient_evals,
            "stage_seconds": result.stage_seconds,
        })
        freqs = ", ".join(f"{x:.17g}" for x in result.frequencies)
        click.echo(f"s_hat={result.s_hat} frequencies=[{freqs}]")
        click.echo(f"wrote {output}")

    _run(body)


@main.command()
@click.option("--m", required=True, type=int, help="Bandwidth parameter.")
@click.option("--sigma", type=float, default=0.1, show_default=True)
@click.option("--r", type=float, default=0.0, show_default=True,
              help="Covariance tilt exponent.")
@click.option("--seed", type=int, default=0, envvar=_SEED_ENV,
              show_default=True)
@click.option("--trial", type=int, default=0, show_default=True,
              help="Noise stream index under the seed.")
@click.option("--output", default="samples.csv", show_default=True)
@click.option("--truth", default="truth.json", show_default=True)
@click.option("--frequencies", default="0.5,2.0,4.0", show_default=True,
              help="Comma-separated ground-truth frequencies.")
@click.option("--phases", default="0.0,2.1,4.3", show_default=True,
              help="Comma-separated amplitude phases (unit moduli).")
def simulate(m, sigma, r, seed, trial, output, truth, frequencies, phases):
    """Write noisy samples and their ground truth for a synthetic signal."""

    def body():
        freqs = _parse_floats(frequencies)
        phis = _parse_floats(phases)
        if len(freqs) != len(phis):
            raise ValueError("frequencies and phases must have equal length")
        params = SignalParams(frequencies=np.asarray(freqs),
                              amplitudes=np.exp(1j * np.asarray(phis)))
        clean = synthesize(params, m)
        eta = draw(GaussianDiagonal(sigma=sigma, r=r), m, seed, trial)
        noisy = SampleVector(m=m, values=clean.values + eta.values)
        save_samples(noisy, output)
        save_params(params, truth)
        click.echo(f"wrote {output} (m={m}, sigma={sigma:g}, r={r:g}, "
                   f"seed={seed}, trial={trial}) and {truth}")

    _run(body)


@main.command("bench-slopes")
@click.option("--spec", "spec_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON experiment description (flags take precedence).")
@click.option("--out", default="results.csv", show_default=True,
              help="Per-trial CSV; summary.csv and plot_slopes.py go beside it.")
@click.option("--sigma", type=float, default=None)
@click.option("--r-values", default=None,
              help="Comma-separated covariance exponents.")
@click.option("--m-min", type=int, default=None)
@click.option("--m-max", type=int, default=None)
@click.option("--m-count", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--percentile", type=float, default=None)
@click.option("--seed", type=int, default=None, envvar=_SEED_ENV)
@click.option("--threads", type=int, default=1, show_default=True)
def bench_slopes(spec_path, out, sigma, r_values, m_min, m_max, m_count,
                 trials, percentile, seed, threads):
    """Error-rate benchmark: percentile errors and log-log slopes per r."""

    def body():
        cfg = {"sigma": 0.1, "r_values": (-0.25, 0.0, 0.25), "m_min": 100,
               "m_max": 3162, "m_count": 5, "m_values": None, "trials": 50,
               "percentile": 90.0, "seed": 0}
        if spec_path:
            with open(spec_path) as f:
                blob = json.load(f)
            for key in cfg:
                if key in blob and blob[key] is not None:
                    cfg[key] = blob[key]
        for key, val in (("sigma", sigma), ("m_min", m_min),
                         ("m_max", m_max), ("m_count", m_count),
                         ("trials", trials), ("percentile", percentile),
                         ("seed", seed)):
            if val is not None:
                cfg[key] = val
        if r_values is not None:
            cfg["r_values"] = tuple(_parse_floats(r_values))
        ms = tuple(int(v) for v in cfg["m_values"]) if cfg["m_values"] \
            else log_spaced_m(int(cfg["m_min"]), int(cfg["m_max"]),
                              int(cfg["m_count"]))
        matrix = run_slope_matrix(
            sigma=float(cfg["sigma"]), r_values=tuple(cfg["r_values"]),
            m_values=ms, trials=int(cfg["trials"]),
            percentile=float(cfg["percentile"]), seed=int(cfg["seed"]),
            threads=threads,
        )
        paths = write_slope_outputs(matrix, out)
        for r, fs, as_ in matrix.slope_rows():
            fs_txt = "skipped" if fs is None else f"{fs:+.3f}"
            as_txt = "skipped" if as_ is None else f"{as_:+.3f}"
            click.echo(f"r={r:+.2f}: frequency slope {fs_txt} "
                       f"(target {r - 1.5:+.2f}), amplitude slope {as_txt} "
                       f"(target {r - 0.5:+.2f})")
        click.echo(f"wrote {paths['results']}, {paths['summary']}, "
                   f"{paths['plot']}")

    _run(body)


@main.command("bench-runtime")
@click.option("--m", type=int, default=1000, show_default=True)
@click.option("--sigma", type=float, default=0.01, show_default=True)
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, envvar=_SEED_ENV,
              show_default=True)
@click.option("--spacing", type=float, default=None,
              help="Classical grid spacing (default 0.1*sigma*m^{-3/2}).")
@click.option("--out", default="runtime.csv", show_default=True)
def bench_runtime(m, sigma, trials, seed, spacing, out):
    """Wall-time comparison of the gradient and classical searches."""

    def body():
        report = runtime_benchmark(m=m, sigma=sigma, trials=trials, seed=seed,
                                   classical_spacing=spacing)
        paths = write_runtime_outputs(report, out)
        click.echo(f"worst-case seconds: svd {report.worst_svd:.4f}, "
                   f"gradient {report.worst_gradient:.4f}, "
                   f"classical {report.worst_classical:.4f}")
        click.echo(f"speedup (classical/gradient): {report.speedup:.1f}x")
        click.echo(f"eval ratio measured {report.measured_ratio:.1f} vs "
                   f"predicted {report.predicted_ratio:.1f}")
        click.echo(f"wrote {paths['table']}, {paths['summary']}, "
                   f"{paths['plot']}")

    _run(body)


@main.command("certify-constants")
@click.option("--m0", type=int, default=100, show_default=True)
@click.option("--beta", type=float, default=4.0, show_default=True)
@click.option("--theta", type=float, default=0.01, show_default=True)
@click.option("--r", type=float, default=7.0, show_default=True)
@click.option("--json", "json_path", default=None,
              help="Also write the raw report as JSON.")
def certify_constants(m0, beta, theta, r, json_path):
    """Recompute the landscape constants and check every condition."""

    def body():
        report = certify(CertificationInput(m0=m0, beta=beta, theta_max=theta,
                                            r=r))
        for line in report_lines(report):
            click.echo(line)
        if json_path:
            _write_json(json_path, {
                "input": {"m0": m0, "beta": beta, "theta_max": theta, "r": r},
                "coupling": report.coupling,
                "c0": report.c0,
                "c1": report.c1,
                "side_conditions": {
                    name: {"value": c.value, "passed": c.passed}
                    for name, c in report.side_conditions.items()
                },
                "constants": {
                    name: {"raw": c.raw, "displayed": c.displayed,
                           "kind": c.kind, "target": c.target,
                           "passed": c.passed}
                    for name, c in report.constants.items()
                },
                "overall_pass": report.overall_pass,
            })
            click.echo(f"wrote {json_path}")
        if not report.overall_pass:
            sys.exit(1)

    _run(body)


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Samples CSV (columns k,re,im).")
@click.option("--s", "known_s", type=int, default=None,
              help="Subspace dimension; detected when omitted.")
@click.option("--gamma", type=float, default=0.0525, show_default=True)
@click.option("--points", type=int, default=4096, show_default=True,
              help="Uniform grid size over [0, 2pi).")
@click.option("--output", default="landscape.csv", show_default=True)
def landscape(input_path, known_s, gamma, points, output):
    """Dump (t, q, q', q'') of the sample landscape on a uniform grid."""

    def body():
        if points < 1:
            raise ValueError("points must be positive")
        samples = load_samples(input_path)
        T = toeplitz(samples)
        spectrum = adaptive_spectrum(T, gamma)
        s = known_s if known_s is not None \
            else detect_sparsity(spectrum, gamma)
        handle = LandscapeHandle(toeplitz_estimator(T, s, spectrum))
        spacing = 2.0 * np.pi / points
        q = handle.values_uniform(0.0, spacing, points)
        with open(output, "w") as f:
            f.write("t,q,dq,d2q\n")
            chunk = 8192
            for start in range(0, points, chunk):
                stop = min(start + chunk, points)
                t = spacing * np.arange(start, stop)
                dq = handle.grad(t)
                d2q = handle.second(t)
                for i in range(stop - start):
                    f.write(f"{t[i]:.17g},{q[start + i]:.17g},"
                            f"{dq[i]:.17g},{d2q[i]:.17g}\n")
        click.echo(f"wrote {output} (s={s}, {points} points)")

    _run(body)


if __name__ == "__main__":
    main()
