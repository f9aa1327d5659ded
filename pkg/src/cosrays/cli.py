"""Command-line front end: every pipeline as a batch subcommand."""
from __future__ import annotations

import argparse
import io
import json
import sys

from . import __version__
from .classify import classify_csv, escape_radius, make_classifier
from .dimension import (ParabolaParams, Window, box_dimension, escape_fraction, escape_time,
                        mask_points, sample_S, to_gray, write_pgm)
from .errors import CosRaysError
from .fmt import dumps
from .mapcore import make_map
from .rays import extend_ray, sample_tail
from .symbolic import address_from_json, address_of_orbit, make_partition, tail_threshold


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_complex(text: str) -> complex:
    """'0.5', '0.5,0.1' (re,im) or a Python complex literal such as '0.5+0.1j'."""
    text = text.strip()
    if "," in text:
        re_, im_ = text.split(",", 1)
        return complex(float(re_), float(im_))
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return v


def window_arg(text: str) -> Window:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("window is re_min,re_max,im_min,im_max")
    try:
        return Window(*parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--a", type=parse_complex, default=complex(0.5), help="coefficient of e^z")
    common.add_argument("--b", type=parse_complex, default=complex(0.5), help="coefficient of e^-z")
    common.add_argument("-o", "--output", help="output file (default: standard output)")

    p = _Parser(prog="cosrays", description="Dynamic rays and escaping points of a e^z + b e^-z.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ray", parents=[common], help="sample a ray tail, optionally extend it")
    s.add_argument("--addr", required=True, help="address generator as JSON")
    s.add_argument("--t-lo", default="auto", help="lowest tail potential, or 'auto' for T_s")
    s.add_argument("--t-hi", type=float, required=True)
    s.add_argument("-n", "--count", type=int, default=32)
    s.add_argument("--tol", type=positive, default=1e-12)
    s.add_argument("--extend-to", type=float, help="pull the ray back down to this potential")
    s.add_argument("--format", choices=["csv", "json"], default="csv")

    s = sub.add_parser("classify", parents=[common], help="classify points from a CSV of re,im")
    s.add_argument("input", help="CSV path, or '-' for standard input")
    s.add_argument("--k-max", type=int, default=24)
    s.add_argument("--t-tol", type=positive, default=1e-9)

    s = sub.add_parser("address", parents=[common], help="strip itinerary of one point")
    s.add_argument("--z", type=parse_complex, required=True)
    s.add_argument("--k-max", type=int, default=24)

    s = sub.add_parser("constants", parents=[common], help="map constants and thresholds")
    s.add_argument("--addr", help="address generator as JSON (adds T_s)")

    s = sub.add_parser("dimension", parents=[common], help="box-count the sampled parabola set")
    s.add_argument("--p", type=positive, default=2.0)
    s.add_argument("--xi", type=positive, default=20.0)
    s.add_argument("--k-horizon", type=int, default=12)
    s.add_argument("--grid", type=int, nargs=2, default=[2048, 1024], metavar=("NX", "NY"))
    s.add_argument("--window", type=window_arg)
    s.add_argument("--format", choices=["json", "pgm"], default="json")

    s = sub.add_parser("render", parents=[common], help="escape-time raster as binary PGM")
    s.add_argument("--window", type=window_arg, default=Window(-10, 10, -10, 10))
    s.add_argument("--size", type=int, nargs=2, default=[512, 512], metavar=("W", "H"))
    s.add_argument("--budget", type=int, default=40)

    s = sub.add_parser("fraction", parents=[common], help="Monte Carlo escape fraction")
    s.add_argument("--window", type=window_arg, required=True)
    s.add_argument("--samples", type=int, default=10 ** 4)
    s.add_argument("--budget", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    return p


def _config(args) -> dict:
    cfg = {"command": args.command}
    for k, v in sorted(vars(args).items()):
        if k in ("command", "output"):
            continue
        if isinstance(v, Window):
            v = v.as_list()
        elif isinstance(v, complex):
            v = [v.real, v.imag]
        cfg[k] = v
    return cfg


def _provenance(args) -> str:
    return json.dumps(_config(args), separators=(",", ":"), default=str)


def _emit(args, data) -> None:
    if isinstance(data, bytes):
        if args.output:
            with open(args.output, "wb") as fh:
                fh.write(data)
        else:
            sys.stdout.buffer.write(data)
        return
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)


def _addr(text: str):
    try:
        return address_from_json(json.loads(text))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad --addr: {exc}") from exc


def cmd_ray(args, m):
    addr = _addr(args.addr)
    t_lo = tail_threshold(m, addr) if args.t_lo == "auto" else float(args.t_lo)
    if args.count < 2:
        raise UsageError("-n must be at least 2")
    ray = sample_tail(m, addr, t_lo, args.t_hi, args.count, args.tol)
    if args.extend_to is not None:
        ray = extend_ray(ray, args.extend_to, tol=args.tol)
    if args.format == "json":
        return ray.to_json(_config(args))
    return ray.to_csv(_provenance(args))


def cmd_classify(args, m):
    if args.k_max < 8:
        raise UsageError("--k-max must be at least 8")
    text = sys.stdin.read() if args.input == "-" else open(args.input).read()
    return classify_csv(make_classifier(m, args.k_max, args.t_tol), text, _provenance(args))


def cmd_address(args, m):
    orb = address_of_orbit(make_partition(m), args.z, args.k_max)
    return dumps({"config": _config(args), "symbols": [s.to_json() for s in orb.symbols],
                  "status": orb.status, "k": orb.k, "last": orb.last})


def cmd_constants(args, m):
    out = {"config": _config(args)}
    out.update(m.as_dict())
    out["orientation"] = m.orientation
    out["R_escape"] = escape_radius(m)
    if args.addr:
        addr = _addr(args.addr)
        out["t_s"] = addr.minimal_potential()
        out["T_s"] = tail_threshold(m, addr)
    return dumps(out)


def cmd_dimension(args, m):
    params = ParabolaParams(args.p, args.xi)
    mask, window = sample_S(m, params, args.k_horizon, args.window, tuple(args.grid))
    if args.format == "pgm":
        buf = io.BytesIO()
        write_pgm(buf, mask.astype("uint8") * 255, _provenance(args))
        return buf.getvalue()
    report = box_dimension(mask_points(mask, window), p=args.p,
                           metadata={"grid": list(args.grid), "k_horizon": args.k_horizon,
                                     "window": window.as_list()})
    return dumps({"config": _config(args), "members": int(mask.sum()), **report.to_json()})


def cmd_render(args, m):
    times = escape_time(m, args.window, tuple(args.size), args.budget, escape_radius(m) + 2)
    buf = io.BytesIO()
    write_pgm(buf, to_gray(times, args.budget), _provenance(args))
    return buf.getvalue()


def cmd_fraction(args, m):
    if args.samples < 1 or args.budget < 0:
        raise UsageError("--samples must be positive and --budget nonnegative")
    frac = escape_fraction(m, args.window, args.samples, args.budget, args.seed)
    return dumps({"config": _config(args), "fraction": frac})


COMMANDS = {"ray": cmd_ray, "classify": cmd_classify, "address": cmd_address,
            "constants": cmd_constants, "dimension": cmd_dimension, "render": cmd_render,
            "fraction": cmd_fraction}


def _fail(code: int, obj: dict) -> int:
    sys.stderr.write(json.dumps(obj) + "\n")
    return code


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        m = make_map(args.a, args.b)
        _emit(args, COMMANDS[args.command](args, m))
    except UsageError as exc:
        return _fail(1, {"error": "UsageError", "message": str(exc)})
    except CosRaysError as exc:
        if isinstance(exc, ValueError):  # bad parameters (zero coefficient, below T_s)
            return _fail(1, exc.to_dict())
        return _fail(2, exc.to_dict())
    except (ValueError, OSError) as exc:
        return _fail(1, {"error": type(exc).__name__, "message": str(exc)})
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return 0


def main() -> None:
    sys.exit(run())
