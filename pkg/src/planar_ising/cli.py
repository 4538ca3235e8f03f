"""``planar-ising`` command line.

Exit codes: 0 success, 1 runtime failure (bad data, non-planar model, ...),
2 bad flags, 3 structure learning did not converge (the model is still written).
Diagnostics go to stderr; data goes to files.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .errors import BadDims, NonPlanar, PlanarIsingError, TooLarge
from .fit import FitConfig, average_log_likelihood
from .graph import draw, is_planar
from .ising import IsingModel, MomentSet, empirical_moments, extend_zero_field, restrict_extended
from .kacward import BRUTE_FORCE_MAX_N, brute_force_inference, general_moments, infer
from .learn import LearnConfig, StopRule, learn
from .sampling import SampleConfig, gen_model, gibbs_sample, parse_kind

log = logging.getLogger("planar_ising")

FIT_MODES = {"zero-field": "zero_field_planar", "outer-planar": "outer_planar", "mixed": "mixed"}


class CommandError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi but got {text!r}") from None
    if hi < lo:
        raise argparse.ArgumentTypeError("range upper bound is below lower bound")
    return lo, hi


def _stop_rule(text: str) -> StopRule:
    try:
        return StopRule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _variables(model: IsingModel) -> IsingModel:
    """The distribution over the named variables (auxiliary vertex folded into fields)."""
    return restrict_extended(model) if model.aux_vertex is not None else model


def _load_model(path) -> tuple[IsingModel, Optional[list[str]]]:
    try:
        model, _, names = io.read_model(path)
    except (OSError, ValueError, KeyError, TypeError, PlanarIsingError) as exc:
        raise CommandError(f"cannot read model {path}: {exc}") from None
    return model, names


def _flags(args) -> dict:
    return {k: (str(v) if isinstance(v, (Path, StopRule)) else v)
            for k, v in vars(args).items() if k not in ("handler", "parser")}


def cmd_gen(args) -> int:
    started = time.time()
    try:
        kind, dims = parse_kind(args.kind)
    except BadDims as exc:
        args.parser.error(str(exc))
    try:
        model, emb = gen_model(kind, dims, args.range, args.min_abs, args.seed)
    except (BadDims, PlanarIsingError) as exc:
        raise CommandError(f"generation failed: {exc}") from None
    positions = emb.coords
    if not model.is_zero_field:
        # store the planar zero-field extension; the auxiliary vertex carries the fields
        model = extend_zero_field(model)
        positions = draw(model.graph).coords
    io.write_model(args.out, model, positions)
    io.write_manifest(args.out, "gen", _flags(args), seed=args.seed, outputs=[args.out], started=started)
    log.info("wrote %s: %d vertices, %d edges", args.out, model.n, model.graph.m)
    return 0


def cmd_sample(args) -> int:
    started = time.time()
    model, names = _load_model(args.model)
    target = _variables(model)
    cfg = SampleConfig(args.num, burn_in=args.burn, thin=args.thin, seed=args.seed, chains=args.chains)
    samples = gibbs_sample(target, cfg)
    io.write_samples(args.out, samples, names)
    io.write_manifest(args.out, "sample", _flags(args), seed=args.seed, inputs=[args.model],
                      outputs=[args.out], started=started)
    return 0


def _read_targets(args) -> tuple[MomentSet, Optional[list[str]]]:
    if args.samples is not None:
        try:
            names, data = io.read_samples(args.samples, zero_one=args.zero_one)
        except OSError as exc:
            raise CommandError(f"cannot read samples: {exc}") from None
        except PlanarIsingError as exc:
            raise CommandError(str(exc)) from None
        return empirical_moments(data), names
    try:
        ms = io.read_moments(args.moments, n=args.n, sample_count=args.num_samples)
    except OSError as exc:
        raise CommandError(f"cannot read moments: {exc}") from None
    except PlanarIsingError as exc:
        raise CommandError(str(exc)) from None
    return ms, None


def cmd_fit(args) -> int:
    started = time.time()
    targets, names = _read_targets(args)
    if args.stop.kind in ("aic", "bic") and not targets.sample_count:
        raise CommandError(f"--stop {args.stop.kind} needs a sample count; pass --num-samples with --moments")
    cfg = LearnConfig(mode=FIT_MODES[args.mode], stop=args.stop, max_edges=args.max_edges,
                      fit=FitConfig(grad_tol=args.grad_tol))
    try:
        result = learn(targets, cfg)
    except PlanarIsingError as exc:
        raise CommandError(f"fit failed: {exc}") from None
    model = result.extended if result.extended is not None else result.model
    io.write_model(args.out, model, draw(model.graph).coords, names)
    trace_path = args.trace or Path(str(args.out) + ".trace.csv")
    result.trace.write_csv(trace_path)
    notes = [] if result.converged else ["parameter fitting did not converge; best model written"]
    io.write_manifest(args.out, "fit", _flags(args), inputs=[args.samples or args.moments],
                      outputs=[args.out, trace_path], started=started, notes=notes)
    accepted = result.trace.accepted
    log.info("selected %d edges; training avg LL %.6f", len(accepted),
             accepted[-1].avg_ll if accepted else result.trace.initial_ll)
    if not result.converged:
        log.error("parameter fitting did not converge")
        return 3
    return 0


def _infer_moments(model: IsingModel, brute: bool) -> tuple[float, np.ndarray, np.ndarray, str]:
    if brute:
        logZ, ms = brute_force_inference(model)
        return logZ, ms.first.copy(), ms.on_edges(model.graph), "brute-force"
    if model.is_zero_field:
        if not is_planar(model.graph):
            raise NonPlanar("zero-field model is not planar")
        r = infer(model)
        return r.logZ, np.zeros(model.n), r.edge_moments, "kac-ward"
    if not is_planar(extend_zero_field(model).graph) and model.n > BRUTE_FORCE_MAX_N:
        raise NonPlanar(f"extended model is not planar and n > {BRUTE_FORCE_MAX_N}")
    return general_moments(model)


def cmd_infer(args) -> int:
    started = time.time()
    model, _ = _load_model(args.model)
    model = _variables(model)
    try:
        logZ, first, edge, method = _infer_moments(model, args.brute_force)
    except TooLarge as exc:
        raise CommandError(str(exc)) from None
    except PlanarIsingError as exc:
        raise CommandError(f"inference failed: {exc}") from None
    with open(args.out, "w") as fh:
        if args.query == "logz":
            fh.write("quantity,value\n")
            fh.write(f"logz,{float(logZ)!r}\n")
        else:
            fh.write("i,j,mu\n")
            for (u, v), mu in zip(model.graph.edges, edge):
                fh.write(f"{u},{v},{float(mu)!r}\n")
            for i, mu in enumerate(first):
                fh.write(f"{i},{float(mu)!r}\n")
    notes = [f"method: {method}"]
    if method == "brute-force" and not args.brute_force:
        notes.append("non-planar field model; fell back to exhaustive enumeration")
    io.write_manifest(args.out, "infer", _flags(args), inputs=[args.model], outputs=[args.out],
                      started=started, notes=notes)
    return 0


def cmd_eval(args) -> int:
    model, _ = _load_model(args.model)
    try:
        _, data = io.read_samples(args.samples, zero_one=args.zero_one)
    except OSError as exc:
        raise CommandError(f"cannot read samples: {exc}") from None
    except PlanarIsingError as exc:
        raise CommandError(str(exc)) from None
    model = _variables(model)
    if data.shape[1] != model.n:
        raise CommandError(f"samples have {data.shape[1]} columns, model has {model.n} variables")
    try:
        ll = average_log_likelihood(model, empirical_moments(data))
    except PlanarIsingError as exc:
        raise CommandError(f"evaluation failed: {exc}") from None
    print(f"{ll:.10f}")
    return 0


def cmd_export_dot(args) -> int:
    started = time.time()
    model, names = _load_model(args.model)
    if names is not None and len(names) < model.n:
        names = list(names) + [f"aux{v}" for v in range(len(names), model.n)]
    io.write_dot(args.out, model, names)
    io.write_manifest(args.out, "export-dot", _flags(args), inputs=[args.model], outputs=[args.out],
                      started=started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planar-ising", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a random planar model")
    g.add_argument("--kind", required=True, help="grid:RxC, outerplanar:N or random-planar:N")
    g.add_argument("--range", type=_range, default=(-1.0, 1.0), help="parameter range lo,hi")
    g.add_argument("--min-abs", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(handler=cmd_gen, parser=g)

    s = sub.add_parser("sample", parents=[common], help="draw Gibbs samples from a model")
    s.add_argument("--model", type=Path, required=True)
    s.add_argument("--num", type=_positive, required=True)
    s.add_argument("--burn", type=_non_negative, default=1000)
    s.add_argument("--thin", type=_non_negative, default=10)
    s.add_argument("--chains", type=_positive, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(handler=cmd_sample)

    f = sub.add_parser("fit", parents=[common], help="learn a planar model from samples or moments")
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", type=Path)
    src.add_argument("--moments", type=Path)
    f.add_argument("--zero-one", action="store_true", help="samples are coded 0/1 instead of -1/+1")
    f.add_argument("--n", type=_positive, default=None, help="variable count for --moments")
    f.add_argument("--num-samples", type=_positive, default=None, help="sample count behind --moments")
    f.add_argument("--mode", choices=sorted(FIT_MODES), default="zero-field")
    f.add_argument("--stop", type=_stop_rule, default=StopRule(), help="maximal, gamma:V, aic or bic")
    f.add_argument("--max-edges", type=_non_negative, default=None)
    f.add_argument("--grad-tol", type=float, default=1e-8)
    f.add_argument("--out", type=Path, required=True)
    f.add_argument("--trace", type=Path, default=None)
    f.set_defaults(handler=cmd_fit)

    i = sub.add_parser("infer", parents=[common], help="exact log-partition or moments")
    i.add_argument("--model", type=Path, required=True)
    i.add_argument("--query", choices=["logz", "moments"], required=True)
    i.add_argument("--brute-force", action="store_true", help=f"enumerate all states (n <= {BRUTE_FORCE_MAX_N})")
    i.add_argument("--out", type=Path, required=True)
    i.set_defaults(handler=cmd_infer)

    e = sub.add_parser("eval", parents=[common], help="average log-likelihood per sample")
    e.add_argument("--model", type=Path, required=True)
    e.add_argument("--samples", type=Path, required=True)
    e.add_argument("--zero-one", action="store_true")
    e.set_defaults(handler=cmd_eval)

    d = sub.add_parser("export-dot", parents=[common], help="write the model graph as DOT")
    d.add_argument("--model", type=Path, required=True)
    d.add_argument("--out", type=Path, required=True)
    d.set_defaults(handler=cmd_export_dot)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.handler(args)
    except CommandError as exc:
        print(f"planar-ising {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
