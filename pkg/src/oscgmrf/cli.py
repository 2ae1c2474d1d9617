"""Command-line front end: mesh -> build -> sample -> corr/spectra -> fit -> predict.

Every subcommand reads one INI run file (see :mod:`oscgmrf.config`) and
writes fixed-name outputs into a directory, so identical configs produce
byte-identical files.  Exit codes: 0 success, 2 configuration or input
validation error, 3 numeric failure (non-SPD precision, pole, fit that did
not converge), 4 output I/O error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig, load_config, model_section
from .errors import ConfigError, InvalidInputError, NumericError, OutOfDomainError
from .fem import assemble, write_matrix_market
from .inference import fit_map, predict
from .models import classify_fields
from .observations import interpolation_matrix, make_observations, read_observation_csv
from .precision import system_precision
from .sampler import sample
from .spectra import lattice_correlations, system_spectra
from .util import atomic_write, fmt

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _outpath(args, name: str) -> str:
    return os.path.join(args.out, name)


def _write_rows(path: str, header: list[str], rows) -> None:
    with atomic_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _load_observations(cfg: RunConfig, mesh):
    coords, fidx, values = read_observation_csv(cfg.observation_file())
    qn1, qn2 = cfg.noise_precision()
    qn = np.where(fidx == 1, qn1, qn2)
    return make_observations(mesh, coords, fidx, values, qn)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_mesh(cfg: RunConfig, args) -> int:
    mesh = cfg.mesh()
    path = _outpath(args, "mesh.txt")
    mesh.save(path)
    print(f"mesh: {mesh.vertices.shape[0]} vertices, {mesh.triangles.shape[0]} triangles -> {path}")
    return EXIT_OK


def cmd_build(cfg: RunConfig, args) -> int:
    mesh = cfg.mesh()
    model = cfg.model()
    gmrf = system_precision(assemble(mesh), model)
    path = _outpath(args, "precision.mtx")
    write_matrix_market(path, gmrf.Q)
    labels = classify_fields(model)
    print(f"precision: {gmrf.size}x{gmrf.size}, {gmrf.Q.nnz} stored entries -> {path}")
    print(f"fields: x1 {labels[0]}, x2 {labels[1]}")
    return EXIT_OK


def _draws_rows(mesh, batch):
    n = mesh.vertices.shape[0]
    for fi in (1, 2):
        block = batch.field(fi)
        for v in range(n):
            x, y = mesh.vertices[v]
            yield [fi, v, fmt(x), fmt(y)] + [fmt(val) for val in block[:, v]]


def _write_correlation(path: str, curve) -> None:
    rows = [
        [fmt(d), int(c), fmt(r11), fmt(r22), fmt(r12)]
        for d, c, r11, r22, r12 in zip(
            curve.distance, curve.counts, curve.rho11, curve.rho22, curve.rho12
        )
    ]
    _write_rows(path, ["distance", "count", "rho11", "rho22", "rho12"], rows)


def cmd_sample(cfg: RunConfig, args) -> int:
    mesh = cfg.mesh()
    model = cfg.model()
    gmrf = system_precision(assemble(mesh), model)
    seed = args.seed if args.seed is not None else cfg.seed()
    count = cfg.draw_count()
    batch = sample(gmrf, count=count, seed=seed,
                   ordering=cfg.ordering(), threads=args.threads)
    header = ["field_index", "vertex", "x", "y"] + [f"draw_{i}" for i in range(count)]
    draws_path = _outpath(args, "draws.csv")
    _write_rows(draws_path, header, _draws_rows(mesh, batch))
    curve = lattice_correlations(gmrf, mesh, ordering=cfg.ordering(),
                                 **cfg.correlation_params())
    corr_path = _outpath(args, "correlation.csv")
    _write_correlation(corr_path, curve)
    print(f"sampled {count} draws (seed {seed}) -> {draws_path}")
    print(f"lattice correlations ({curve.distance.size} bins) -> {corr_path}")
    return EXIT_OK


def cmd_corr(cfg: RunConfig, args) -> int:
    mesh = cfg.mesh()
    gmrf = system_precision(assemble(mesh), cfg.model())
    curve = lattice_correlations(gmrf, mesh, ordering=cfg.ordering(),
                                 **cfg.correlation_params())
    path = _outpath(args, "correlation.csv")
    _write_correlation(path, curve)
    print(f"lattice correlations ({curve.distance.size} bins) -> {path}")
    return EXIT_OK


def cmd_spectra(cfg: RunConfig, args) -> int:
    model = cfg.model()
    k_max, k_count = cfg.spectra_params()
    k = np.linspace(0.0, k_max, k_count)
    spec = system_spectra(model, k)
    rows = [
        [fmt(ki), fmt(s11.real), fmt(s12.real), fmt(s21.real), fmt(s22.real)]
        for ki, s11, s12, s21, s22 in zip(k, spec.s11, spec.s12, spec.s21, spec.s22)
    ]
    path = _outpath(args, "spectra.csv")
    _write_rows(path, ["k", "s11", "s12", "s21", "s22"], rows)
    print(f"spectral densities on {k_count} wavenumbers in [0, {k_max}] -> {path}")
    return EXIT_OK


def _write_predictions(path: str, coords, fidx, mean, sd) -> None:
    rows = [
        [int(f), fmt(x), fmt(y), fmt(m), fmt(s)]
        for (x, y), f, m, s in zip(coords, fidx, mean, sd)
    ]
    _write_rows(path, ["field_index", "x", "y", "mean", "sd"], rows)


def _predict_at_targets(cfg: RunConfig, args, mesh, fem, model, obs) -> str:
    coords, fidx, _ = read_observation_csv(cfg.target_file(), with_values=False)
    A = interpolation_matrix(mesh, coords, fidx)
    mean, sd = predict(model, fem, obs, A, ordering=cfg.ordering())
    path = _outpath(args, "prediction.csv")
    _write_predictions(path, coords, fidx, mean, sd)
    return path


def cmd_fit(cfg: RunConfig, args) -> int:
    mesh = cfg.mesh()
    fem = assemble(mesh)
    obs = _load_observations(cfg, mesh)
    result = fit_map(fem, obs, cfg.model(), priors=cfg.priors(),
                     options=cfg.fit_options())
    rows = [
        [name, fmt(result.estimates[name]), fmt(result.stderr[name])]
        for name in result.estimates
    ]
    fit_path = _outpath(args, "fit.csv")
    _write_rows(fit_path, ["parameter", "estimate", "stderr"], rows)
    model_path = _outpath(args, "fitted_model.ini")
    with atomic_write(model_path) as fh:
        fh.write(model_section(result.model))
    for line in result.summary_lines():
        print(line)
    print(f"report -> {fit_path}; fitted model -> {model_path}")
    if cfg.target_file() is not None:
        pred_path = _predict_at_targets(cfg, args, mesh, fem, result.model, obs)
        print(f"predictions -> {pred_path}")
    if not result.converged:
        print(f"fit did not converge: {result.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_predict(cfg: RunConfig, args) -> int:
    if cfg.target_file() is None:
        raise ConfigError("[predict] is missing required option 'targets'")
    mesh = cfg.mesh()
    fem = assemble(mesh)
    obs = _load_observations(cfg, mesh)
    path = _predict_at_targets(cfg, args, mesh, fem, cfg.model(), obs)
    print(f"predictions -> {path}")
    return EXIT_OK


_COMMANDS = {
    "mesh": cmd_mesh,
    "build": cmd_build,
    "sample": cmd_sample,
    "corr": cmd_corr,
    "spectra": cmd_spectra,
    "fit": cmd_fit,
    "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscgmrf",
        description="Bivariate fields with oscillating covariances on sparse precisions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "mesh": "build the triangulation and write it to a file",
        "build": "assemble the joint precision matrix (Matrix Market)",
        "sample": "draw field realizations and the lattice correlation curve",
        "corr": "write the lattice correlation curve only",
        "spectra": "tabulate the spectral densities on a wavenumber grid",
        "fit": "maximum-a-posteriori fit of the hyperparameters",
        "predict": "conditional mean and sd at target points",
    }
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", "-c", required=True, help="run file (INI)")
        p.add_argument("--out", "-o", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the seed in the config")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sampling")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return args.func(cfg, args)
    except (ConfigError, InvalidInputError, OutOfDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
