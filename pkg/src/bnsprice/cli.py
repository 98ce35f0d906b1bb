"""Command-line entry point: ``bnsprice <subcommand>`` or ``python -m bnsprice``.

Exit status is 0 on success, 1 on validation errors (bad flags, inadmissible
parameters) and 2 on I/O errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from threadpoolctl import threadpool_limits

from . import __version__
from .blackscholes import bs_call
from .dataset import (ANCHOR, DESK_SPLIT, PAPER_SPLIT, DatasetFormatError, Scaler, generate_dataset,
                      load_dataset, save_dataset, split_sizes)
from .experiments import gnuplot_script, surrogate_prices, sweep, sweep_summary, sweep_to_csv, variable_set
from .model import AdmissibilityError, BnsParams, OptionSpec, check_assumption
from .network import (PAPER_TRAIN, ModelFormatError, TrainConfig, evaluate_rmse, load_model, save_model,
                      train)
from .pricer import price_call_mc
from .simulation import SimConfig, draw_jumps, make_rng, simulate_variance_path
from .sobol import DirectionTableError, load_direction_table

log = logging.getLogger("bnsprice")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_model_params(sp, defaults=True):
    d = ANCHOR
    g = sp.add_argument_group("model parameters (defaults: calibration anchor)")
    g.add_argument("--set", choices=["a", "b", "c"], help="use a fixed experiment parameter set (sets --t too)")
    g.add_argument("--s0", type=float, default=d.s0, help="spot price (default %(default)s)")
    g.add_argument("--alpha", type=float, default=0.5, help="drift of S under P (default %(default)s)")
    g.add_argument("--rho", type=float, default=d.rho, help="default %(default)s")
    g.add_argument("--lambda", dest="lam", type=float, default=d.lam, help="default %(default)s")
    g.add_argument("--a", type=float, default=d.a, help="default %(default)s")
    g.add_argument("--b", type=float, default=d.b, help="default %(default)s")
    g.add_argument("--sigma0-sq", type=float, default=d.sigma0_sq, help="default %(default)s")
    g.add_argument("--t", type=float, default=1.0, help="maturity in years (default %(default)s)")


def _add_sim(sp, paths=1000):
    g = sp.add_argument_group("Monte Carlo")
    g.add_argument("--paths", type=int, default=paths, help="paths per price (default %(default)s)")
    g.add_argument("--dt", type=float, default=0.01, help="time step (default %(default)s)")
    g.add_argument("--eps", type=float, default=1e-4, help="jump truncation level (default %(default)s)")
    g.add_argument("--seed", type=int, default=0, help="random seed (default %(default)s)")
    g.add_argument("--no-control-variate", action="store_true", help="plain path averages without the S_T control")


def _sim_config(args) -> SimConfig:
    return SimConfig(n_paths=args.paths, dt=args.dt, eps_trunc=args.eps, seed=args.seed,
                     control_variate=not args.no_control_variate)


def _params(args) -> tuple[BnsParams, float]:
    if getattr(args, "set", None):
        return variable_set(args.set, args.s0)
    try:
        return BnsParams(args.s0, args.alpha, args.rho, args.lam, args.a, args.b, args.sigma0_sq), args.t
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_gen_data(args):
    if args.sobol_file:
        with open(args.sobol_file) as fh:
            table = load_direction_table(fh)
    else:
        table = None
    n = args.n if args.n is not None else (sum(PAPER_SPLIT) if args.full else sum(DESK_SPLIT))
    if args.full and n == sum(PAPER_SPLIT):
        split = PAPER_SPLIT
    elif n == sum(DESK_SPLIT):
        split = DESK_SPLIT
    else:
        split = split_sizes(n)
    cfg = _sim_config(args)
    t0 = time.perf_counter()

    def progress(done, total):
        log.info("labelled %d/%d records (%.0fs)", done, total, time.perf_counter() - t0)

    ds = generate_dataset(n, cfg, split, seed=args.seed, threads=args.threads, table=table, progress=progress)
    save_dataset(args.out, ds)
    if args.scaler_out:
        ds.fit_scaler().save(args.scaler_out)
    print(f"wrote {n} records to {args.out} (train/val/test = {split[0]}/{split[1]}/{split[2]}) "
          f"in {time.perf_counter() - t0:.1f}s")


def cmd_train(args):
    ds = load_dataset(args.data)
    scaler = Scaler.load(args.scaler) if args.scaler else None
    base = PAPER_TRAIN if args.paper_scale else TrainConfig()
    cfg = TrainConfig(batch_size=args.batch or base.batch_size, epochs=args.epochs or base.epochs,
                      lr0=args.lr or base.lr0, seed=args.seed, val_every=args.val_every or base.val_every)

    def progress(epoch, loss, val):
        log.info("epoch %d: train half-MSE %.5g, validation half-MSE %.5g", epoch, loss, val)

    model, rep = train(ds, cfg, scaler, progress)
    save_model(args.out, model)
    if args.report:
        _write(args.report, json.dumps(dict(
            train_loss=rep.train_loss, val_epochs=rep.val_epochs, val_loss=rep.val_loss,
            best_epoch=rep.best_epoch, best_val=rep.best_val, test_rmse=rep.test_rmse,
            n_updates=rep.n_updates), indent=1) + "\n")
    print(f"best epoch {rep.best_epoch} (validation half-MSE {rep.best_val:.6g}); "
          f"test RMSE {rep.test_rmse:.6g}; {rep.n_updates} updates")


def cmd_eval(args):
    ds = load_dataset(args.data)
    model = load_model(args.model)
    sub = ds.subset(args.split) if args.split != "all" else ds
    if len(sub) == 0:
        raise UsageError(f"no records in split {args.split!r}")
    print(f"RMSE ({args.split}, {len(sub)} records): {evaluate_rmse(model, sub.inputs, sub.mc):.10g}")


def _refuse_if_inadmissible(p, maturity):
    rep = check_assumption(p, maturity)
    if not rep.passed:
        raise AdmissibilityError(f"parameters violate the admissibility conditions: {rep}")


def cmd_price(args):
    p, maturity = _params(args)
    if args.k is None:
        raise UsageError("--k is required")
    opt = OptionSpec(args.k, maturity)
    _refuse_if_inadmissible(p, maturity)
    if args.model:
        price = surrogate_prices(load_model(args.model), p, maturity, [args.k])[0]
        print(f"surrogate price {price:.10g}")
    if args.mc or not args.model:
        est = price_call_mc(p, opt, _sim_config(args), make_rng(args.seed, 2), method=args.method)
        print(f"mc price {est.price:.10g} std_err {est.std_err:.6g} mean_weight {est.mean_weight:.10g} "
              f"paths {est.n_paths}")


def cmd_sweep(args):
    p, maturity = _params(args)
    _refuse_if_inadmissible(p, maturity)
    model = load_model(args.model) if args.model else None
    rows = sweep(p, maturity, model, _sim_config(args))
    _write(args.out, sweep_to_csv(rows))
    if args.gnuplot:
        _write(args.gnuplot, gnuplot_script(args.out, f"set {args.set}" if args.set else ""))
    s = sweep_summary(rows)
    print(f"wrote {len(rows)} strikes to {args.out}; max |relative error| {s['max_abs_rel']:.4g}; "
          f"fraction within 0.15: {s['frac_within']:.3f}")


def cmd_bs(args):
    print(f"{float(bs_call(args.s0, args.sigma, args.k, args.t)):.10g}")


def cmd_check(args):
    p, maturity = _params(args)
    rep = check_assumption(p, maturity)
    print(rep)
    if not rep.passed:
        return 1


def cmd_simulate_variance(args):
    p, maturity = _params(args)
    cfg = _sim_config(args)
    lines = ["path,t,sigma_sq"]
    for i in range(args.paths):
        rng = make_rng(args.seed, 3, i)
        grid, sig = simulate_variance_path(p, maturity, draw_jumps(p, maturity, cfg, rng), cfg)
        lines += [f"{i},{t:.17g},{s:.17g}" for t, s in zip(grid, sig)]
    _write(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.paths} variance paths to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    ap = _Parser(prog="bnsprice", description="IG-OU BNS call pricing: MC under the MMM and a neural surrogate.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, formatter_class=fmt)
        sp.set_defaults(func=func)
        sp.add_argument("--threads", type=int, default=1, help="worker threads/processes; 1 is bit-reproducible")
        sp.add_argument("-v", "--verbose", action="store_true", help="progress logging")
        return sp

    sp = add("gen-data", cmd_gen_data, "generate a labelled teaching dataset")
    sp.add_argument("--n", type=int, default=None, help="number of records (default 6000, or 100000 with --full)")
    _add_sim(sp)
    sp.add_argument("--out", required=True, help="dataset CSV path")
    sp.add_argument("--scaler-out", help="write the training-split scaler here")
    sp.add_argument("--full", action="store_true", help="full size: 100000 records split 98000/1000/1000")
    sp.add_argument("--sobol-file", default=os.environ.get("BNS_SOBOL_FILE"),
                    help="direction-number file (env BNS_SOBOL_FILE)")

    sp = add("train", cmd_train, "train the surrogate network")
    sp.add_argument("--data", required=True)
    sp.add_argument("--scaler", help="scaler file (default: fit on the training split)")
    sp.add_argument("--epochs", type=int, help="default 800, or 4000 with --paper-scale")
    sp.add_argument("--batch", type=int, help="batch size (default 128)")
    sp.add_argument("--lr", type=float, help="initial learning rate (default 0.006)")
    sp.add_argument("--val-every", type=int, help="validation interval in epochs (default 50)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="model file path")
    sp.add_argument("--report", help="write the training report as JSON")
    sp.add_argument("--paper-scale", action="store_true", help="4000 epochs")

    sp = add("eval", cmd_eval, "RMSE of a model on a dataset split")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--split", default="test", choices=["train", "val", "test", "all"])

    sp = add("price", cmd_price, "price one call by MC and/or the surrogate")
    _add_model_params(sp)
    sp.add_argument("--k", type=float, help="strike")
    sp.add_argument("--mc", action="store_true", help="Monte Carlo price (default when no --model)")
    sp.add_argument("--model", help="surrogate model file")
    sp.add_argument("--method", choices=["mmm", "weighted"], default="mmm",
                    help="simulate under the MMM directly or under P with density weights")
    _add_sim(sp)

    sp = add("sweep", cmd_sweep, "MC vs surrogate along the strike grid S0/2..3S0/2")
    _add_model_params(sp)
    sp.add_argument("--model", help="surrogate model file (dl column is 0 without it)")
    sp.add_argument("--out", required=True, help="sweep CSV path")
    sp.add_argument("--gnuplot", help="also write a gnuplot script for the CSV")
    _add_sim(sp, paths=10000)

    sp = add("bs", cmd_bs, "zero-rate Black-Scholes call price")
    sp.add_argument("--s0", type=float, default=ANCHOR.s0)
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--k", type=float, required=True)
    sp.add_argument("--t", type=float, required=True)

    sp = add("check", cmd_check, "evaluate the admissibility conditions")
    _add_model_params(sp)

    sp = add("simulate-variance", cmd_simulate_variance, "dump variance paths as CSV (path,t,sigma_sq)")
    _add_model_params(sp)
    _add_sim(sp, paths=10)
    sp.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args) or 0
    except (UsageError, AdmissibilityError, ValueError, DatasetFormatError, ModelFormatError,
            DirectionTableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
