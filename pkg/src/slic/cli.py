"""``slicc``: check, compile, transform, sample and fit programs from the shell.

Exit codes: 0 success, 1 runtime failure, 2 type/parse/usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import SlicError, StaticError

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- helpers -------------------------------------------------------------------------


def _sha256(path: str | None) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_source(path: str) -> str:
    return Path(path).read_text()


def _read_data(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as f:
        out = json.load(f)
    if not isinstance(out, dict):
        raise SlicError(f"{path}: data must be a JSON object")
    return out


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("SLICC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SLICC_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _parse(path: str):
    from .frontend import parse

    return parse(_read_source(path))


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


class Manifest:
    """Inputs, settings and version needed to reproduce one invocation."""

    def __init__(self, argv: list[str], args):
        self.record = {
            "tool": "slicc",
            "version": __version__,
            "command": list(argv),
            "input": args.file if hasattr(args, "file") else None,
            "input_sha256": _sha256(getattr(args, "file", None)),
            "data": getattr(args, "data", None),
            "data_sha256": _sha256(getattr(args, "data", None)),
            "seed": None,
            "config": {},
        }

    def write(self, path: str | None) -> None:
        if path is None:
            return
        Path(path).write_text(json.dumps(self.record, indent=2, sort_keys=True) + "\n")


def _manifest_path(args, out: str | None) -> str | None:
    if getattr(args, "manifest", None):
        return args.manifest
    if out and out != "-":
        return out + ".manifest.json"
    return None


# -- subcommands ------------------------------------------------------------------------


def cmd_check(args, man: Manifest) -> int:
    from .levels import infer

    typed = infer(_parse(args.file))
    _write(typed.describe() + "\n" if typed.describe() else "", args.output)
    man.write(_manifest_path(args, args.output))
    return 0


def cmd_compile(args, man: Manifest) -> int:
    from .levels import infer
    from .shredder import emit, shred

    text = emit(shred(infer(_parse(args.file))))
    _write(text, args.output)
    man.write(_manifest_path(args, args.output))
    return 0


def _names(spec: str | None) -> list[str] | None:
    if spec is None or spec == "":
        return None
    return [s.strip() for s in spec.split(",") if s.strip()]


def cmd_transform(args, man: Manifest) -> int:
    from . import condind, reparam
    from .frontend import parse, pretty
    from .levels import infer

    if args.marginalize is None and args.ncp is None and args.vip is None:
        raise UsageError("transform needs at least one of --marginalize, --ncp, --vip")
    program = _parse(args.file)
    steps = []
    if args.marginalize is not None:
        typed, plan = condind.marginalize(infer(program), _names(args.marginalize), cap=args.cap)
        program = typed.program
        steps.append({"marginalize": plan.order})
    if args.ncp is not None:
        program = reparam.ncp(program, _names(args.ncp))
        steps.append({"ncp": _names(args.ncp) or "all"})
    if args.vip is not None:
        lam = _lambda_spec(args.vip)
        program = reparam.vip(program, lam)
        steps.append({"vip": lam if isinstance(lam, float) else dict(lam)})
    text = pretty(program)
    text = text + "\n" if text else ""
    infer(parse(text))  # output must re-parse and re-check
    _write(text, args.output)
    man.record["config"] = {"steps": steps, "cap": args.cap}
    man.write(_manifest_path(args, args.output))
    return 0


def _lambda_spec(spec: str):
    from .reparam import LambdaMap

    try:
        return float(spec)
    except ValueError:
        pass
    return LambdaMap.from_json(Path(spec).read_text())


def _model(args):
    from .runtime.model import Model

    return Model(_parse(args.file), _read_data(args.data))


def cmd_sample(args, man: Manifest) -> int:
    from .inference import HmcConfig, hmc, interleaved_hmc

    cfg = HmcConfig(
        step_size=args.eps, steps=args.steps, iterations=args.iters, warmup=args.warmup,
        seed=_seed(args), max_delta_h=args.max_delta_h,
    )
    if args.interleaved:
        draws = interleaved_hmc(_parse(args.file), _read_data(args.data), cfg)
    else:
        draws = hmc(_model(args), None, cfg)
    _write(draws.to_csv(), args.output)
    man.record["seed"] = cfg.seed
    man.record["config"] = dataclasses.asdict(cfg) | {"interleaved": bool(args.interleaved)}
    man.write(_manifest_path(args, args.output))
    if args.output and args.output != "-":
        sys.stderr.write(f"{len(draws)} draws, {draws.divergences} divergent\n")
    return 0


def cmd_vi(args, man: Manifest) -> int:
    from .inference import AdviConfig, advi

    cfg = AdviConfig(steps=args.iters, samples=args.samples, lr=args.lr, seed=_seed(args))
    res = advi(_model(args), None, cfg)
    cfg_dict = dataclasses.asdict(cfg)
    _write(res.guide.to_json({"config": cfg_dict, "std": [float(x) for x in res.guide.std]}), args.output)
    if args.elbo:
        Path(args.elbo).write_text(res.elbo_csv())
    man.record["seed"] = cfg.seed
    man.record["config"] = cfg_dict
    man.write(_manifest_path(args, args.output))
    return 0


def cmd_vip(args, man: Manifest) -> int:
    from .reparam import VipConfig, vip_optimize

    cfg = VipConfig(steps=args.iters, samples=args.samples, lr=args.lr, seed=_seed(args))
    res = vip_optimize(_parse(args.file), _read_data(args.data), cfg)
    _write(res.lam.to_json(), args.out)
    if args.elbo:
        Path(args.elbo).write_text("step,elbo\n" + "".join(f"{i},{e!r}\n" for i, e in enumerate(res.elbo)))
    man.record["seed"] = cfg.seed
    man.record["config"] = dataclasses.asdict(cfg)
    man.write(_manifest_path(args, args.out))
    return 0


def cmd_rerun(args, man: Manifest) -> int:
    rec = json.loads(Path(args.manifest_file).read_text())
    for key, path_key in (("input_sha256", "input"), ("data_sha256", "data")):
        if rec.get(path_key) is not None and _sha256(rec[path_key]) != rec.get(key):
            raise SlicError(f"{rec[path_key]} changed since the manifest was written")
    argv = list(rec["command"])
    if rec.get("seed") is not None and "--seed" not in argv:
        argv += ["--seed", str(rec["seed"])]
    return main(argv)


# -- argument parsing ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slicc", description="Compile and run blockless probabilistic programs.")
    p.add_argument("--version", action="version", version=f"slicc {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, out=True):
        sp.add_argument("file")
        if out:
            sp.add_argument("-o", "--output")
        sp.add_argument("--manifest", help="where to write the run manifest")

    sp = sub.add_parser("check", help="infer and print variable levels")
    common(sp)
    sp.set_defaults(run=cmd_check)

    sp = sub.add_parser("compile", help="print the blocked program")
    common(sp)
    sp.set_defaults(run=cmd_compile)

    sp = sub.add_parser("transform", help="marginalise discretes and/or reparameterise")
    common(sp)
    sp.add_argument("--marginalize", default=None, metavar="z1,z2", help="bare flag: every discrete")
    sp.add_argument("--ncp", default=None, metavar="names", help="bare flag: every eligible site")
    sp.add_argument("--vip", metavar="LAMBDA|file.json")
    sp.add_argument("--cap", type=int, default=10 ** 6, help="largest factor table allowed")
    sp.set_defaults(run=cmd_transform)

    from .inference import AdviConfig, HmcConfig

    h = HmcConfig()
    sp = sub.add_parser("sample", help="run HMC and write draws as CSV")
    common(sp)
    sp.add_argument("--data")
    sp.add_argument("--iters", type=int, default=h.iterations, help="total iterations including warmup")
    sp.add_argument("--warmup", type=int, default=h.warmup)
    sp.add_argument("--eps", type=float, default=h.step_size)
    sp.add_argument("--steps", type=int, default=h.steps)
    sp.add_argument("--max-delta-h", type=float, default=h.max_delta_h)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--interleaved", action="store_true")
    sp.set_defaults(run=cmd_sample)

    a = AdviConfig()
    sp = sub.add_parser("vi", help="fit a mean-field guide; writes guide JSON")
    common(sp)
    sp.add_argument("--data")
    sp.add_argument("--iters", type=int, default=a.steps)
    sp.add_argument("--samples", type=int, default=a.samples)
    sp.add_argument("--lr", type=float, default=a.lr)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--elbo", help="CSV file for the ELBO trace")
    sp.set_defaults(run=cmd_vi)

    from .reparam import VipConfig

    v = VipConfig()
    sp = sub.add_parser("vip", help="choose VIP weights; writes a name -> lambda JSON map")
    common(sp, out=False)
    sp.add_argument("--data")
    sp.add_argument("--out", "-o")
    sp.add_argument("--iters", type=int, default=v.steps)
    sp.add_argument("--samples", type=int, default=v.samples)
    sp.add_argument("--lr", type=float, default=v.lr)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--elbo", help="CSV file for the ELBO trace")
    sp.set_defaults(run=cmd_vip)

    sp = sub.add_parser("rerun", help="repeat the run recorded in a manifest")
    sp.add_argument("manifest_file")
    sp.set_defaults(run=cmd_rerun)
    return p


def _report(e: SlicError, path: str | None) -> None:
    where = path or "slicc"
    if e.span is not None:
        where += f":{e.span}"
    msg = f"{where}: error: {e.message}"
    if e.related is not None:
        msg += f"\n{path or 'slicc'}:{e.related}: note: related location"
    chain = getattr(e, "chain", None)
    if chain:
        msg += "\n  " + "\n  ".join(str(c) for c in chain)
    sys.stderr.write(msg + "\n")


_OPTIONAL_LISTS = ("--marginalize", "--ncp")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # a bare list flag means "all"; a list is only taken from the --flag=a,b form
    parse_argv = [f"{a}=" if a in _OPTIONAL_LISTS else a for a in argv]
    try:
        args = parser.parse_args(parse_argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        return args.run(args, Manifest(argv, args))
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return 2
    except SlicError as e:
        _report(e, getattr(locals().get("args"), "file", None))
        return e.exit_code if isinstance(e, StaticError) else 1
    except OSError as e:
        sys.stderr.write(f"slicc: error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
