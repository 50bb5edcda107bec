"""Command-line experiment driver.

Every command accepts ``--config FILE``, ``--seed`` and ``--workers``. A
config file is INI-style; the section named after the command (``gen``,
``train``, ``theory.injectivity``, ...) supplies defaults for the
command's flags, keyed by flag name with dashes or underscores. Flags on
the command line override the file. Unknown sections or keys are errors.

Outputs go to ``--out``, else ``$DECLIP_OUTPUT_DIR``, else the current
directory. Errors print ``error: <code>: <message>`` and exit with 1.
"""

import argparse
import configparser
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import baseline_hqs, experiments, theory_lab, trainer
from .datasets import (ConeSpec, SubspaceSpec, digit_fixture, gen_cone, gen_subspace_dataset,
                       haar_orthogonal, split)
from .errors import (ConfigError, DeclipError, InvalidArgumentError, InvalidInputError,
                     MissingGroundTruthError)
from .forward_ops import ClipSpec, clip
from .losses import GroupSampler, LossConfig
from .metrics import sdr
from .network import MLPConfig, init_params

OUTPUT_ENV = "DECLIP_OUTPUT_DIR"


# ---------------------------------------------------------------------------
# file helpers


def _out_dir(args):
    d = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _matrix_csv(M, prefix):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{prefix}_{j}" for j in range(M.shape[1])])
    for row in M:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _read_matrix(path, prefix):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidArgumentError(f"{path}: empty file")
    header = rows[0]
    if header != [f"{prefix}_{j}" for j in range(len(header))]:
        raise InvalidArgumentError(f"{path}: header must be {prefix}_0,...")
    try:
        M = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as e:
        raise InvalidInputError(f"{path}: {e}")
    if M.ndim != 2 or M.shape[1] != len(header):
        raise InvalidInputError(f"{path}: rows must have {len(header)} values")
    return M


def _gnuplot(path, csv_name, title, xlabel, ylabel, series, logx=False):
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             f"set title '{title}'", f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
    if logx:
        lines.append("set logscale x")
    plots = [f"'{csv_name}' using {x}:{y}{extra} with linespoints title '{t}'"
             for x, y, t, extra in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    return _write(path, "\n".join(lines) + "\n")


def _floats(text):
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


# ---------------------------------------------------------------------------
# datasets on disk: <name>_x.csv, <name>_y.csv and a <name>.meta sidecar


def _write_dataset(out, name, meta, X, Y):
    files = {"measurements": f"{name}_y.csv", "signals": f"{name}_x.csv" if X is not None else ""}
    _write(out / files["measurements"], _matrix_csv(Y, "y"))
    if X is not None:
        _write(out / files["signals"], _matrix_csv(X, "x"))
    cp = configparser.ConfigParser(interpolation=None)
    cp["dataset"] = {k: str(v) for k, v in {**meta, **files}.items()}
    buf = io.StringIO()
    cp.write(buf)
    return _write(out / f"{name}.meta", buf.getvalue())


def load_dataset(meta_path):
    """Read a dataset written by ``gen``.

    Returns ``(meta, X or None, Y, spec, A or None)``.
    """
    meta_path = Path(meta_path)
    cp = configparser.ConfigParser(interpolation=None)
    if not cp.read(meta_path):
        raise InvalidArgumentError(f"cannot read dataset metadata {meta_path}")
    if "dataset" not in cp:
        raise InvalidInputError(f"{meta_path}: missing [dataset] section")
    meta = dict(cp["dataset"])
    missing = [k for k in ("measurements", "mu1", "mu2") if k not in meta]
    if missing:
        raise InvalidInputError(f"{meta_path}: missing keys {', '.join(missing)}")
    base = meta_path.parent
    Y = _read_matrix(base / meta["measurements"], "y")
    X = _read_matrix(base / meta["signals"], "x") if meta.get("signals") else None
    spec = ClipSpec(float(meta["mu1"]), float(meta["mu2"]))
    A = None
    if meta.get("operator", "none") == "haar":
        A = haar_orthogonal(Y.shape[1], int(meta["operator_seed"])).matrix
    return meta, X, Y, spec, A


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    out = _out_dir(args)
    if args.kind == "subspace":
        ds = SubspaceSpec(args.n, args.k, args.v, args.threshold, args.count, args.seed)
        _, X = gen_subspace_dataset(ds)
        spec = ClipSpec.symmetric(args.threshold)
        meta = dict(kind="subspace", n=args.n, k=args.k, v=repr(args.v), count=args.count,
                    seed=args.seed, mu1=repr(spec.mu1), mu2=repr(spec.mu2), operator="none")
        Y = clip(X, spec)
    else:
        spec = ClipSpec(args.mu1, args.mu2)
        X = gen_cone(ConeSpec(digit_fixture(), args.amplitude_mean, args.count, args.seed))
        meta = dict(kind="cone", n=X.shape[1], amplitude_mean=repr(args.amplitude_mean),
                    count=args.count, seed=args.seed, mu1=repr(spec.mu1), mu2=repr(spec.mu2),
                    operator=args.operator)
        Z = X
        if args.operator == "haar":
            meta["operator_seed"] = args.seed + 1
            Z = X @ haar_orthogonal(X.shape[1], args.seed + 1).matrix.T
        Y = clip(Z, spec)
    path = _write_dataset(out, args.name, meta, None if args.measurements_only else X, Y)
    print(f"wrote {len(Y)} items of length {Y.shape[1]} to {path}")
    return 0


def cmd_train(args):
    out = _out_dir(args)
    meta, X, Y, spec, A = load_dataset(args.dataset)
    # with an orthogonal operator, train on z = A x (same losses, same SDR)
    Z = None if X is None else (X if A is None else X @ A.T)
    supervised = args.mode not in trainer.SELF_SUPERVISED_MODES
    if supervised and Z is None:
        raise MissingGroundTruthError(
            f"mode {args.mode} needs signals but {args.dataset} has measurements only")
    n = Y.shape[1]
    idx_tr, idx_te = split(np.arange(len(Y)), args.train_fraction, args.seed)
    widths = (n,) + (args.hidden,) * (args.depth - 1) + (n,)
    mlp = MLPConfig(widths, skip_blend=args.skip_blend, clip_spec=spec)
    params = init_params(mlp, args.seed)
    tc = trainer.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
        loss_mode=args.mode, seed=args.seed, eval_every=args.eval_every,
        loss_config=LossConfig(args.lam, GroupSampler(args.g_min, args.g_max), args.ei_samples))
    eval_set = None if Z is None else (Z[idx_te], Y[idx_te])
    params, report = trainer.fit(tc, params, Y[idx_tr], spec,
                                 x=Z[idx_tr] if supervised else None, eval_set=eval_set)
    trainer.save_checkpoint(params, out / f"{args.name}.dclp")
    _write(out / f"{args.name}_report.csv", report.to_csv())
    _gnuplot(out / f"{args.name}_report.gp", f"{args.name}_report.csv", "training loss",
             "epoch", "loss", [(1, 2, "loss", "")])
    if eval_set is None:
        print("final mean test SDR: n/a (no ground truth)")
    else:
        print(f"final mean test SDR: {report.metrics[-1]:.4f} dB")
    return 0


def _injectivity_row(args_m):
    args, m = args_m
    spec = theory_lab.InjectivityTrialSpec(
        cone_dim=args.k, ambient_n=args.n, measurement_m=m, threshold=args.mu,
        radius=args.radius_factor * theory_lab.radius_bound(args.k, m, args.mu),
        pair_count=args.pairs, seed=trainer.cell_seed(args.seed, m),
        pairs_per_operator=args.pairs_per_operator)
    rep = theory_lab.injectivity_trial(spec)
    return dict(m=m, radius=spec.resolved_radius(),
                radius_bound=theory_lab.radius_bound(args.k, m, args.mu),
                pairs=rep.pairs_tested, collisions=rep.collisions,
                collision_rate=rep.collision_rate,
                mean_saturated_fraction=rep.mean_saturated_fraction)


INJECTIVITY_COLUMNS = ("m", "radius", "radius_bound", "pairs", "collisions", "collision_rate",
                       "mean_saturated_fraction")


def _pool_map(fn, jobs, workers):
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_theory_injectivity(args):
    out = _out_dir(args)
    for m in args.m:  # surface infeasible regimes before any work
        theory_lab.radius_bound(args.k, m, args.mu)
    rows = _pool_map(_injectivity_row, [(args, m) for m in args.m], args.workers)
    _write(out / "injectivity.csv", trainer.rows_to_csv(rows, INJECTIVITY_COLUMNS))
    _gnuplot(out / "injectivity.gp", "injectivity.csv", "collision rate", "m", "rate",
             [(1, 6, "collision rate", "")], logx=True)
    for r in rows:
        print(f"k={args.k} m={r['m']} R={r['radius']:.6g} collisions={r['collisions']}"
              f"/{r['pairs']} rate={r['collision_rate']:.6g}")
    return 0


def cmd_theory_degenerate(args):
    out = _out_dir(args)
    rows = []
    for op in args.operator:
        rep = theory_lab.degenerate_axis_trial(args.n, args.mu, args.pairs, args.seed, op)
        rows.append(dict(operator=op, pairs=rep.pairs_tested, collisions=rep.collisions,
                         collision_rate=rep.collision_rate))
        print(f"operator={op} collisions={rep.collisions}/{rep.pairs_tested} "
              f"rate={rep.collision_rate:.6g}")
    _write(out / "degenerate.csv",
           trainer.rows_to_csv(rows, ("operator", "pairs", "collisions", "collision_rate")))
    return 0


def cmd_theory_saturation(args):
    out = _out_dir(args)
    rows = []
    for i, norm in enumerate(args.norm):
        emp, ana = theory_lab.saturation_fraction(norm, args.mu, args.m, args.trials,
                                                  trainer.cell_seed(args.seed, i))
        rows.append(dict(norm=norm, mu=args.mu, m=args.m, empirical=emp, analytic=ana))
        print(f"norm={norm:g} mu={args.mu:g} empirical={emp:.4f} analytic={ana:.4f}")
    _write(out / "saturation.csv",
           trainer.rows_to_csv(rows, ("norm", "mu", "m", "empirical", "analytic")))
    return 0


def cmd_theory_l1(args):
    out = _out_dir(args)
    res = theory_lab.l1_concentration(args.k, args.n, args.m, args.samples, args.seed,
                                      args.operators)
    rows = [dict(k=args.k, m=r.m, violation_rate=r.violation_rate, mean_ratio=r.mean_ratio)
            for r in res]
    for r in rows:
        print(f"k={args.k} m={r['m']} violation_rate={r['violation_rate']:.6g} "
              f"mean_ratio={r['mean_ratio']:.6g}")
    _write(out / "l1.csv", trainer.rows_to_csv(rows, ("k", "m", "violation_rate", "mean_ratio")))
    return 0


def cmd_theory_identify(args):
    out = _out_dir(args)
    truth = None
    if args.input:
        _, _, Y, spec, A = load_dataset(args.input)
        if A is not None:
            raise InvalidArgumentError("identify expects measurements without an operator")
    elif args.fixture == "remark":
        spec, Y1, Y2 = theory_lab.remark_counterexample(args.mu1, args.mu2, args.count, args.seed)
        Y = np.vstack([Y1, Y2])
    else:
        Y, truth = theory_lab.two_ray_fixture(args.count, args.mu, args.seed)
        spec = ClipSpec.symmetric(args.mu)
    D = theory_lab.conic_extension(Y, spec, angle_tol=args.angle_tol)
    _write(out / "directions.csv", _matrix_csv(D, "d"))
    msg = f"recovered {len(D)} directions"
    if truth is not None:
        msg += f"; hausdorff distance to truth {theory_lab.hausdorff(D, truth):.3g}"
    print(msg)
    return 0


def cmd_theory_boxdim(args):
    out = _out_dir(args)
    P = theory_lab.sphere_points(args.dim, args.n, args.samples, args.seed)
    counts = [theory_lab.covering_number(P, e) for e in args.eps]
    est = theory_lab.box_dim_estimate(P, args.eps)
    rows = [dict(eps=e, covering_number=c) for e, c in zip(args.eps, counts)]
    _write(out / "boxdim.csv", trainer.rows_to_csv(rows, ("eps", "covering_number")))
    print(f"sphere dim={args.dim} in R^{args.n}: box-dimension estimate {est:.4f}")
    return 0


def _hqs_item(job):
    x, y, config, spec = job
    xhat = baseline_hqs.hqs_declip(y, config, spec)
    return xhat, sdr(x, y), sdr(x, xhat)


def cmd_baseline(args):
    out = _out_dir(args)
    if args.input:
        _, X, Y, spec, A = load_dataset(args.input)
        if A is not None:
            raise InvalidArgumentError("the HQS baseline supports datasets without an operator")
        if X is None:
            raise MissingGroundTruthError("baseline scoring needs signals")
    else:
        X, Y, spec = baseline_hqs.dct_sparse_fixture(args.n, args.active, args.v, args.count,
                                                     args.seed, args.mu)
    config = baseline_hqs.HQSConfig.geometric(
        args.iterations, args.gamma, args.tau0, args.factor,
        prox_condition=args.prox_condition, exact_saturated=args.exact_saturated)
    res = _pool_map(_hqs_item, [(x, y, config, spec) for x, y in zip(X, Y)], args.workers)
    rows = [dict(id=i, sdr_identity=a, sdr_method=b) for i, (_, a, b) in enumerate(res)]
    _write(out / "baseline.csv", trainer.rows_to_csv(rows, ("id", "sdr_identity", "sdr_method")))
    _write(out / "baseline_xhat.csv", _matrix_csv(np.array([r[0] for r in res]), "x"))
    ident = float(np.mean([r["sdr_identity"] for r in rows]))
    method = float(np.mean([r["sdr_method"] for r in rows]))
    print(f"mean SDR identity={ident:.4f} dB hqs={method:.4f} dB over {len(rows)} items")
    return 0


def cmd_sweep(args):
    out = _out_dir(args)
    tc = trainer.TrainConfig.synthetic(learning_rate=args.lr, epochs=args.epochs,
                                       batch_size=args.batch_size)
    cfg = trainer.SweepConfig(ambient_dim=args.n, count=args.count, threshold=args.threshold,
                              train_fraction=args.train_fraction, hidden=args.hidden,
                              depth=args.depth, skip_blend=args.skip_blend, train=tc,
                              seed=args.seed)
    rows = trainer.grid_sweep(args.k, args.v, cfg, args.workers)
    _write(out / "sweep.csv", trainer.rows_to_csv(rows, trainer.SWEEP_COLUMNS))
    _gnuplot(out / "sweep.gp", "sweep.csv", "mean test SDR", "row", "SDR (dB)",
             [(0, 4, "mean SDR", "")])
    for r in rows:
        print(f"{r['method']} k={r['k']} v={r['v']:g} mean_sdr={r['mean_sdr']:.4f}")
    return 0


def cmd_dynrange(args):
    out = _out_dir(args)
    tc = trainer.TrainConfig.cone(learning_rate=args.lr, epochs=args.epochs,
                                  batch_size=args.batch_size)
    cfg = experiments.DynRangeConfig(count=args.count, amplitude_mean=args.amplitude_mean,
                                     mu1=args.mu1, mu2=args.mu2,
                                     train_fraction=args.train_fraction, hidden=args.hidden,
                                     depth=args.depth, train=tc, seed=args.seed)
    res = experiments.dynamic_range_experiment(cfg, workers=args.workers)
    _write(out / "dynrange.csv", trainer.rows_to_csv(res.rows, experiments.DYNRANGE_COLUMNS))
    _gnuplot(out / "dynrange.gp", "dynrange.csv", "dynamic range", "true", "reconstructed",
             [(3, 4, "MC+EI", ""), (3, 5, "NMC+EI", ""), (3, 3, "identity line", "")])
    print(f"median relative dynamic-range error MC+EI={res.median_error_mc:.4f} "
          f"NMC+EI={res.median_error_nmc:.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--config", help="INI file supplying defaults for this command")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")


def build_parser():
    parser = argparse.ArgumentParser(prog="declip", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    p = sub.add_parser("gen", help="generate a dataset")
    p.add_argument("--kind", choices=("subspace", "cone"), default="subspace")
    p.add_argument("--name", default="dataset")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--v", type=float, default=0.2)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--amplitude-mean", type=float, default=2.0)
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.4)
    p.add_argument("--operator", choices=("none", "haar"), default="haar")
    p.add_argument("--measurements-only", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=cmd_gen)
    commands["gen"] = p

    p = sub.add_parser("train", help="train a network on a generated dataset")
    p.add_argument("--dataset", required=False, help="path to a .meta file written by gen")
    p.add_argument("--name", default="model")
    p.add_argument("--mode", choices=trainer.LOSS_MODES, default=trainer.SELF_MC_EI)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--skip-blend", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--g-min", type=float, default=0.5)
    p.add_argument("--g-max", type=float, default=1.5)
    p.add_argument("--ei-samples", type=int, default=1)
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--eval-every", type=int, default=0)
    p.set_defaults(func=cmd_train)
    commands["train"] = p

    p = sub.add_parser("theory", help="Monte Carlo checks of the recovery theory")
    tsub = p.add_subparsers(dest="sub", required=True)
    t = tsub.add_parser("injectivity", help="collision rate of eta(A.) on a bounded cone")
    t.add_argument("--k", type=int, default=2)
    t.add_argument("--n", type=int, default=50)
    t.add_argument("--m", type=_ints, default=[20, 40, 80, 160])
    t.add_argument("--mu", type=float, default=1.0)
    t.add_argument("--radius-factor", type=float, default=0.5)
    t.add_argument("--pairs", type=int, default=10_000)
    t.add_argument("--pairs-per-operator", type=int, default=100)
    t.set_defaults(func=cmd_theory_injectivity)
    commands["theory.injectivity"] = t

    t = tsub.add_parser("degenerate", help="axis-aligned cone with and without rotation")
    t.add_argument("--n", type=int, default=50)
    t.add_argument("--mu", type=float, default=1.0)
    t.add_argument("--pairs", type=int, default=10_000)
    t.add_argument("--operator", type=lambda s: s.split(","), default=["identity", "haar"])
    t.set_defaults(func=cmd_theory_degenerate)
    commands["theory.degenerate"] = t

    t = tsub.add_parser("saturation", help="saturated fraction of Gaussian projections")
    t.add_argument("--norm", type=_floats, default=[1.0])
    t.add_argument("--mu", type=float, default=1.0)
    t.add_argument("--m", type=int, default=1000)
    t.add_argument("--trials", type=int, default=100)
    t.set_defaults(func=cmd_theory_saturation)
    commands["theory.saturation"] = t

    t = tsub.add_parser("l1", help="l1 concentration of Gaussian embeddings")
    t.add_argument("--k", type=int, default=5)
    t.add_argument("--n", type=int, default=100)
    t.add_argument("--m", type=_ints, default=[100, 400])
    t.add_argument("--samples", type=int, default=10_000)
    t.add_argument("--operators", type=int, default=100)
    t.set_defaults(func=cmd_theory_l1)
    commands["theory.l1"] = t

    t = tsub.add_parser("identify", help="recover cone directions from measurements")
    t.add_argument("--input", help="dataset .meta file (default: built-in fixture)")
    t.add_argument("--fixture", choices=("two-ray", "remark"), default="two-ray")
    t.add_argument("--count", type=int, default=10_000)
    t.add_argument("--mu", type=float, default=1.0)
    t.add_argument("--mu1", type=float, default=0.5)
    t.add_argument("--mu2", type=float, default=1.0)
    t.add_argument("--angle-tol", type=float, default=1e-6)
    t.set_defaults(func=cmd_theory_identify)
    commands["theory.identify"] = t

    t = tsub.add_parser("boxdim", help="box-counting dimension of a sampled sphere")
    t.add_argument("--dim", type=int, default=1)
    t.add_argument("--n", type=int, default=10)
    t.add_argument("--samples", type=int, default=4000)
    t.add_argument("--eps", type=_floats, default=[0.05, 0.1, 0.2])
    t.set_defaults(func=cmd_theory_boxdim)
    commands["theory.boxdim"] = t

    p = sub.add_parser("baseline", help="HQS declipping baseline")
    p.add_argument("--input", help="dataset .meta file (default: DCT-sparse fixture)")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--active", type=int, default=5)
    p.add_argument("--v", type=float, default=0.2)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--gamma", type=float, default=10.0)
    p.add_argument("--tau0", type=float, default=1.0)
    p.add_argument("--factor", type=float, default=0.8)
    p.add_argument("--prox-condition", choices=("y", "x"), default="y")
    p.add_argument("--exact-saturated", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_baseline)
    commands["baseline"] = p

    p = sub.add_parser("sweep", help="supervised vs self-supervised grid over (k, v)")
    p.add_argument("--k", type=_ints, default=[1, 3, 5])
    p.add_argument("--v", type=_floats, default=[0.1, 0.2, 0.3])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--skip-blend", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=100)
    p.set_defaults(func=cmd_sweep)
    commands["sweep"] = p

    p = sub.add_parser("dynrange", help="dynamic range of MC+EI vs NMC+EI reconstructions")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--amplitude-mean", type=float, default=2.0)
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.4)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=50)
    p.set_defaults(func=cmd_dynrange)
    commands["dynrange"] = p

    for p in commands.values():
        _common(p)
    return parser, commands


def _config_argv(path, section, command_parser):
    """Translate the ``[section]`` of an INI file into command-line tokens."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}".replace("\n", " "))
    extra = [s for s in cp.sections() if s != section]
    if extra:
        raise ConfigError(f"{path}: unknown section [{extra[0]}] (expected [{section}])")
    if section not in cp:
        return []
    actions = {a.dest: a for a in command_parser._actions
               if a.option_strings and a.dest not in ("help", "config")}
    argv = []
    for key, value in cp[section].items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
        action = actions[dest]
        flag = action.option_strings[0]
        if isinstance(action, argparse.BooleanOptionalAction):
            try:
                on = cp[section].getboolean(key)
            except ValueError:
                raise ConfigError(f"{path}: {key} must be a boolean, got {value!r}")
            argv.append(flag if on else "--no-" + flag[2:])
        else:
            argv += [flag, value]
    return argv


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()
    args = parser.parse_args(argv)
    section = args.command + (f".{args.sub}" if args.command == "theory" else "")
    try:
        if args.config:
            head = 2 if args.command == "theory" else 1
            pre = _config_argv(args.config, section, commands[section])
            args = parser.parse_args(argv[:head] + pre + argv[head:])
        if args.command == "train" and not args.dataset:
            raise InvalidArgumentError("train needs --dataset")
        if args.workers < 1:
            raise InvalidArgumentError("--workers must be >= 1")
        return args.func(args)
    except DeclipError as e:
        print(f"error: {e.code}: {e}".replace("\n", " "), file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: io: {e}".replace("\n", " "), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
