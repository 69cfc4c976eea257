"""Command-line harness.

Subcommands: ``gen-data``, ``run``, ``verify``, ``render`` and ``replay``.
Every command writes a JSON manifest that ``replay`` can re-execute.

Exit codes: 0 success, 2 verification failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import AnalyticalSpec, gen_analytical, gen_dataset, gen_sample, parse_mix
from .ddrm import (ConfigurationError, DdrmConfig, ExternalDenoiser, IdentityDenoiser,
                   SpectralPriorDenoiser, ddrm_forward, ddrm_inverse, verify_marginal_property)
from .fd import fd_eigenvalues, fd_inverse_estimate, fd_laplacian, fd_poisson_solve
from .grid import GridSpec, mae
from .greens import verify_thm2_mc, verify_thm3_bound_mc
from .io import read_pdds_arrays, write_pdds, write_pgm
from .noise import (BridgeSpec, bridge_variance, make_schedule, sample_bridge_coeffs,
                    sample_iid_gaussian)
from .report import Report
from .spectral import (dst_forward, dst_inverse, eigenvalues, evaluate_series,
                       spectral_laplacian, spectral_poisson_solve)

log = logging.getLogger("poisson_ddrm")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG = 0, 2, 3
CSV_COLUMNS = ("method", "problem", "sample_index", "mae")
VERIFY_TARGETS = ("thm2", "thm3", "prop-marginal-forward", "prop-marginal-inverse", "bridge", "eigen")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# -- manifests ---------------------------------------------------------------

def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(path, argv, args, outputs, records=(), started=None, extra=None) -> Path:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config": config,
        "seed": config.get("seed"),
        "version": __version__,
        "started": started or _now(),
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
        "records": list(records),
    }
    if extra:
        manifest.update(extra)
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, default=str))
    return path


# -- gen-data ----------------------------------------------------------------

def cmd_gen_data(args, argv):
    started = _now()
    mix = parse_mix(args.mix)
    pairs = gen_dataset(args.count, mix, args.seed, GridSpec(args.n), split=args.split)
    out = write_pdds(args.out, pairs)
    kinds = {}
    for p in pairs:
        kinds[p.provenance] = kinds.get(p.provenance, 0) + 1
    write_manifest(args.manifest or str(out) + ".manifest.json", argv, args, [out], started=started,
                   extra={"provenance_counts": kinds})
    log.info("wrote %d pairs to %s", len(pairs), out)
    return EXIT_OK


# -- run ---------------------------------------------------------------------

def _observe(F, U, args, grid):
    """Apply measurement noise to the conditioning channel when requested."""
    if not args.observe_noise:
        return F, U
    F, U = F.copy(), U.copy()
    bridge = BridgeSpec.constant(grid, args.sigma_nm)
    for i in range(len(F)):
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 7, i]))
        if args.problem == "forward":
            F[i] += sample_iid_gaussian(grid, args.sigma_f, rng)
        else:
            U[i] += dst_inverse(sample_bridge_coeffs(grid, bridge, rng))
    return F, U


def _make_denoiser(args):
    name = args.denoiser
    if args.method == "dry" or name == "identity":
        return IdentityDenoiser()
    if name == "spectral-prior":
        if not args.train_dataset:
            raise ConfigurationError("--denoiser spectral-prior needs --train-dataset")
        return SpectralPriorDenoiser.fit(read_pdds_arrays(_existing(args.train_dataset)))
    if name.startswith("external:"):
        return ExternalDenoiser(name.split(":", 1)[1])
    raise ConfigurationError(f"unknown denoiser {name!r}")


def _existing(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"dataset not found: {p}")
    return p


def predict_batch(args, F, U, denoiser=None, start=0):
    """Predictions of the unknown channel for one batch."""
    if args.method == "fd":
        return fd_poisson_solve(F) if args.problem == "forward" else fd_inverse_estimate(U)
    if args.method == "spectral":
        return spectral_poisson_solve(F) if args.problem == "forward" else spectral_laplacian(U)
    eta, eta_b = args.eta, args.eta_b
    preset = DdrmConfig.default_forward() if args.problem == "forward" else DdrmConfig.default_inverse()
    cfg = DdrmConfig(eta=preset.eta if eta is None else eta,
                     eta_b=preset.eta_b if eta_b is None else eta_b,
                     sigma_f=args.sigma_f, sigma_nm=args.sigma_nm,
                     schedule=make_schedule(args.T, args.sigma_min, args.sigma_max), seed=args.seed)
    keys = list(range(start, start + len(F)))
    if args.problem == "forward":
        out, _ = ddrm_forward(F, denoiser, cfg, sample_index=keys)
    else:
        out, _ = ddrm_inverse(U, denoiser, cfg, sample_index=keys)
    return out


def cmd_run(args, argv):
    started = _now()
    F_true, U_true = read_pdds_arrays(_existing(args.dataset))
    if args.limit:
        F_true, U_true = F_true[: args.limit], U_true[: args.limit]
    grid = GridSpec(F_true.shape[-1])
    F_obs, U_obs = _observe(F_true, U_true, args, grid)
    denoiser = _make_denoiser(args) if args.method in ("ddrm", "dry") else None
    preds = []
    try:
        for s in range(0, len(F_obs), args.batch):
            preds.append(predict_batch(args, F_obs[s:s + args.batch], U_obs[s:s + args.batch],
                                       denoiser, start=s))
    finally:
        if isinstance(denoiser, ExternalDenoiser):
            denoiser.close()
    pred = np.concatenate(preds)
    target = U_true if args.problem == "forward" else F_true
    per_sample = np.atleast_1d(mae(pred, target))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    label = f"{args.method}-{args.problem}"
    csv_path = out_dir / f"{label}.csv"
    csv_path.write_text(format_csv(args.method, args.problem, per_sample))
    outputs = [csv_path]
    if args.save_predictions:
        p = out_dir / f"{label}-predictions.npy"
        np.save(p, pred)
        outputs.append(p)
    for k in range(min(args.figures, len(pred))):
        outputs.append(_run_figure(out_dir / f"{label}-{k:04d}.png", args.problem, F_obs[k],
                                   U_obs[k], pred[k], target[k]))
    record = {"method": label, "mae": float(per_sample.mean()), "sample_count": int(len(per_sample))}
    write_manifest(out_dir / f"{label}.manifest.json", argv, args, outputs, [record], started)
    print(f"{label}: batch MAE {record['mae']:.6e} over {record['sample_count']} samples")
    return EXIT_OK


def format_csv(method, problem, per_sample) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for i, v in enumerate(per_sample):
        w.writerow([method, problem, i, repr(float(v))])
    w.writerow([method, problem, "all", repr(float(np.mean(per_sample)))])
    return buf.getvalue()


def _run_figure(path, problem, f_obs, u_obs, pred, target):
    from .plotting import save_triptych

    if problem == "forward":
        panels = [("true u", target), ("estimated u", pred), ("f (given)", f_obs)]
    else:
        panels = [("u (given)", u_obs), ("estimated f", pred), ("true f", target)]
    return save_triptych(path, panels)


# -- verify ------------------------------------------------------------------

def verify_eigen(grid: GridSpec, tol: float = 1e-10, chunk: int = 512) -> Report:
    """Eigenrelation residuals of both Laplacians over every mode."""
    N = grid.n_interior
    lam = eigenvalues(grid)
    mu = fd_eigenvalues(grid)
    modes = [(n, m) for n in range(N) for m in range(N)]
    worst = {"spectral": (0.0, None), "fd": (0.0, None)}
    worst_max = {"spectral": 0.0, "fd": 0.0}
    for s in range(0, len(modes), chunk):
        block = modes[s:s + chunk]
        C = np.zeros((len(block), N, N))
        for k, (n, m) in enumerate(block):
            C[k, n, m] = 1.0
        S = dst_inverse(C)
        ln = np.array([lam[n, m] for n, m in block])[:, None, None]
        mn = np.array([mu[n, m] for n, m in block])[:, None, None]
        for name, res in (("spectral", spectral_laplacian(S) - ln * S), ("fd", fd_laplacian(S) - mn * S)):
            m_abs = np.mean(np.abs(res), axis=(1, 2))
            k = int(np.argmax(m_abs))
            if m_abs[k] >= worst[name][0]:
                worst[name] = (float(m_abs[k]), (block[k][0] + 1, block[k][1] + 1))
            worst_max[name] = max(worst_max[name], float(np.max(np.abs(res))))
    report = Report("eigen", info={"N": N, "modes": len(modes), "tol": tol})
    for name in ("spectral", "fd"):
        report.add(f"{name}-eigenrelation", worst[name][0] < tol, worst_mae=worst[name][0],
                   worst_mode=worst[name][1], worst_max_abs=worst_max[name])
    return report


BRIDGE_SPOT_MODES = ((1, 1), (1, 2), (2, 1), (3, 4), (5, 5), (8, 8), (16, 3), (32, 32), (1, 64), (64, 64))


def verify_bridge(grid: GridSpec, sigma: float = 1e-6, draws: int = 10_000, seed: int = 0,
                  modes=BRIDGE_SPOT_MODES, chunk: int = 1000) -> Report:
    """Centre-point variance and per-mode coefficient variances of the bridge noise."""
    from .noise import sample_brownian_bridge

    spec = BridgeSpec.constant(grid, sigma)
    rng = np.random.default_rng(seed)
    idx = np.array(modes) - 1
    centre = np.empty(draws)
    coeffs = np.empty((draws, len(modes)))
    for s in range(0, draws, chunk):
        b = min(chunk, draws - s)
        z = sample_brownian_bridge(grid, spec, rng, size=b)
        c = dst_forward(z)
        coeffs[s:s + b] = c[:, idx[:, 0], idx[:, 1]]
        centre[s:s + b] = evaluate_series(c, 0.5, 0.5)
    theory = float(bridge_variance(spec, 0.5, 0.5))
    emp = float(centre.var(ddof=1))
    report = Report("bridge", info={"sigma": sigma, "draws": draws, "seed": seed})
    report.add("centre-variance", abs(emp / theory - 1) <= 0.05, empirical=emp, theory=theory,
               odd_mode_count_theory=1024 * sigma**2 if grid.n_interior == 64 else None,
               rel_error=emp / theory - 1)
    var = coeffs.var(axis=0, ddof=1)
    se = sigma**2 * np.sqrt(2.0 / (draws - 1))
    for k, (n, m) in enumerate(modes):
        report.add(f"mode({n},{m})", abs(var[k] - sigma**2) <= 3 * se, empirical=var[k],
                   expected=sigma**2, se=se)
    return report


def marginal_config(chain: str, seed: int) -> DdrmConfig:
    """Settings that put the spot-check modes on both sides of the branch threshold."""
    if chain == "forward":
        return DdrmConfig(eta=0.5, eta_b=0.7, sigma_f=10.0, seed=seed)
    return DdrmConfig(eta=0.5, eta_b=0.7, sigma_nm=2e-5, seed=seed)


def cmd_verify(args, argv):
    started = _now()
    grid = GridSpec(args.n)
    t = args.target
    if t == "eigen":
        report = verify_eigen(grid)
    elif t == "bridge":
        report = verify_bridge(grid, args.sigma_nm, args.draws, args.seed)
    elif t == "thm3":
        report = verify_thm3_bound_mc(args.sigma_f, draws=args.draws, seed=args.seed, grid=grid,
                                      modes=[m for m in ((1, 1), (1, 64), (64, 64), (8, 8), (3, 4))
                                             if max(m) <= grid.n_interior])
    elif t == "thm2":
        pair = gen_analytical(AnalyticalSpec("type1", 1, 1), grid)
        report = verify_thm2_mc(pair, args.sigma_f, args.draws, seed=args.seed)
    else:
        chain = t.rsplit("-", 1)[1]
        truth = gen_sample(0, {"nn": 1.0}, args.seed, grid, split="test")
        modes = [m for m in ((1, 1), (3, 4), (8, 8), (1, 64), (64, 64)) if max(m) <= grid.n_interior]
        steps = [100, 50, 1]
        report = verify_marginal_property(chain, marginal_config(chain, args.seed), truth,
                                          args.draws, modes=modes, steps=steps)
    out = Path(args.out or f"verify-{t}.json")
    out.write_text(json.dumps(report.to_dict(), indent=2))
    for line in report.summary_lines():
        print(line)
    write_manifest(str(out) + ".manifest.json", argv, args, [out],
                   [{"target": t, "passed": report.passed}], started)
    return EXIT_OK if report.passed else EXIT_VERIFY


# -- render ------------------------------------------------------------------

def cmd_render(args, argv):
    started = _now()
    if args.dataset:
        F, U = read_pdds_arrays(_existing(args.dataset))
        field = (U if args.channel == "u" else F)[args.index]
    else:
        arr = np.load(_existing(args.npy))
        field = arr[args.index] if arr.ndim == 3 else arr
    out = Path(args.out)
    write_pgm(out, field)
    outputs = [out, Path(str(out) + ".json")]
    if args.png:
        from .plotting import save_heatmap

        outputs.append(save_heatmap(out.with_suffix(".png"), field, args.title))
    write_manifest(str(out) + ".manifest.json", argv, args, outputs, started=started)
    return EXIT_OK


# -- replay ------------------------------------------------------------------

def cmd_replay(args, argv):
    manifest = json.loads(Path(_existing(args.manifest)).read_text())
    replay_argv = manifest["argv"]
    if replay_argv and replay_argv[0] == "replay":
        raise ConfigurationError("refusing to replay a replay manifest")
    return main(replay_argv)


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="poisson-ddrm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate a PDDS dataset")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--mix", default="nn", help='e.g. "nn" or "type1=0.5,nn=0.5"')
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=int, default=64, help="interior points per axis")
    g.add_argument("--split", choices=("train", "test"), default="train")
    g.add_argument("--out", required=True)
    g.add_argument("--manifest")
    g.set_defaults(func=cmd_gen_data)

    r = sub.add_parser("run", help="solve the forward or inverse problem over a dataset")
    r.add_argument("--problem", choices=("forward", "inverse"), required=True)
    r.add_argument("--method", choices=("ddrm", "dry", "fd", "spectral"), required=True)
    r.add_argument("--dataset", required=True)
    r.add_argument("--denoiser", default="spectral-prior",
                   help="identity | spectral-prior | external:<path>")
    r.add_argument("--train-dataset", help="PDDS file used to fit the spectral-prior denoiser")
    r.add_argument("--eta", type=float)
    r.add_argument("--eta-b", type=float)
    r.add_argument("--sigma-f", type=float, default=1e-6)
    r.add_argument("--sigma-nm", type=float, default=1e-6)
    r.add_argument("--T", type=int, default=100)
    r.add_argument("--sigma-min", type=float, default=0.01)
    r.add_argument("--sigma-max", type=float, default=2.0)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--observe-noise", action="store_true",
                   help="add measurement noise to the conditioning channel before solving")
    r.add_argument("--batch", type=int, default=256)
    r.add_argument("--limit", type=int, default=0, help="use only the first LIMIT samples")
    r.add_argument("--figures", type=int, default=0, help="write heatmap figures for the first K samples")
    r.add_argument("--save-predictions", action="store_true")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="Monte-Carlo and exactness checks")
    v.add_argument("--target", choices=VERIFY_TARGETS, required=True)
    v.add_argument("--draws", type=int, default=10_000)
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--n", type=int, default=64)
    v.add_argument("--sigma-f", type=float, default=1.0)
    v.add_argument("--sigma-nm", type=float, default=1e-6)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("render", help="export a field as a 16-bit PGM heatmap")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset")
    src.add_argument("--npy")
    d.add_argument("--index", type=int, default=0)
    d.add_argument("--channel", choices=("u", "f"), default="u")
    d.add_argument("--out", required=True)
    d.add_argument("--png", action="store_true", help="also write a matplotlib heatmap")
    d.add_argument("--title")
    d.set_defaults(func=cmd_render)

    rp = sub.add_parser("replay", help="re-run a command from its manifest")
    rp.add_argument("manifest")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except (ConfigurationError, ValueError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
