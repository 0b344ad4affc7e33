"""``aqds`` command-line front end."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .gf2 import BitString
from .messaging import (
    MessagingError,
    decode_bundle,
    decode_shares,
    decode_signer_key,
    encode_bundle,
    encode_shares,
    encode_signer_key,
    sign,
    split_keys,
    verify,
)
from .params import BaselineParams, Config, ConfigError, ProtocolParams, coerce, load_config
from .selftest import FAULTS, run_selftest
from .sweep import distances, entropy_profile, rate_curve

CSV_VERSION = 1
RATE_COLUMNS = ("l", "N", "protocol", "R_sig", "n", "n_z", "h_min", "h_max", "H_total", "feasible")
PROFILE_COLUMNS = ("l", "h_min", "h_max", "H_total", "h_min_fraction", "h_max_fraction", "feasible")

EXIT_ACCEPT, EXIT_REJECT, EXIT_MALFORMED = 0, 1, 2


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    if isinstance(v, str):
        return v
    return "%.6e" % v


def write_csv(out: TextIO, kind: str, columns: Sequence[str], rows) -> None:
    out.write(f"# aqds {kind} csv v{CSV_VERSION}\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(_fmt(getattr(row, c)) for c in columns) + "\n")


# ---------------------------------------------------------------------------
# config flags


def _flag(prefix: str, name: str) -> str:
    return "--" + prefix + name.replace("_", "-")


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("parameters", "override individual config keys")
    for f in dataclasses.fields(ProtocolParams):
        if f.name == "N":  # every command that uses N has its own --N
            continue
        g.add_argument(_flag("", f.name), dest=f"proto__{f.name}", metavar="V", default=None)
    for f in dataclasses.fields(BaselineParams):
        g.add_argument(_flag("baseline-", f.name), dest=f"base__{f.name}", metavar="V", default=None)


def _config(args: argparse.Namespace) -> Config:
    cfg = load_config(args.config)
    proto: dict = {}
    base: dict = {}
    for key, raw in vars(args).items():
        if raw is None or "__" not in key:
            continue
        kind, name = key.split("__", 1)
        cls = ProtocolParams if kind == "proto" else BaselineParams
        types = {f.name: str(f.type) for f in dataclasses.fields(cls)}
        try:
            (proto if kind == "proto" else base)[name] = coerce(types[name], raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {_flag('' if kind == 'proto' else 'baseline-', name)}: {exc}") from None
    try:
        return Config(cfg.protocol.replace(**proto), cfg.baseline.replace(**base))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _open_out(path: Optional[str]) -> TextIO:
    return open(path, "w", newline="") if path else sys.stdout


# ---------------------------------------------------------------------------
# commands


def cmd_rate_curve(args: argparse.Namespace) -> int:
    cfg = _config(args)
    protos = ("async", "baseline") if args.protocol == "both" else (args.protocol,)
    rows = rate_curve(
        cfg, distances(args.l_min, args.l_max, args.step), args.N or [cfg.protocol.N],
        args.m, args.eps_target, protos, args.jobs,
    )
    out = _open_out(args.out)
    try:
        write_csv(out, "rate-curve", RATE_COLUMNS, rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_entropy_profile(args: argparse.Namespace) -> int:
    cfg = _config(args)
    rows = entropy_profile(cfg.protocol, distances(args.l_min, args.l_max, args.step), args.N or cfg.protocol.N, args.jobs)
    out = _open_out(args.out)
    try:
        write_csv(out, "entropy-profile", PROFILE_COLUMNS, rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_keygen(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    shares = split_keys(rng, args.n)
    p_a = BitString.random(rng, args.n)
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / "alice.key").write_bytes(encode_signer_key(shares.party("alice"), p_a))
    (d / "bob.share").write_bytes(encode_shares(shares.party("bob")))
    (d / "charlie.share").write_bytes(encode_shares(shares.party("charlie")))
    print(f"wrote alice.key, bob.share, charlie.share to {d}")
    return 0


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise MessagingError(f"cannot read {path}: {exc.strerror}") from None


def cmd_sign(args: argparse.Namespace) -> int:
    try:
        raw = _read(args.doc)
        if not raw:
            raise MessagingError("document is empty")
        doc = BitString.from_bytes(raw, 8 * len(raw))
        shares, p_a = decode_signer_key(_read(args.key))
        bundle = sign(doc, shares, p_a)
        Path(args.out).write_bytes(encode_bundle(bundle))
    except (MessagingError, OSError) as exc:
        print(f"aqds sign: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        bundle = decode_bundle(_read(args.bundle))
        own = decode_shares(_read(args.own))
        other = decode_shares(_read(args.counterpart))
        verdict = verify(bundle, own, other)
    except MessagingError as exc:
        print(f"aqds verify: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    print(verdict.value)
    return EXIT_ACCEPT if verdict else EXIT_REJECT


def cmd_selftest(args: argparse.Namespace) -> int:
    cfg = _config(args)
    report = run_selftest(cfg, mc_bins=args.mc_bins, seed=args.seed, fault=args.fault)
    out = _open_out(args.out)
    try:
        out.write(report.to_json() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# parser


def _sweep_args(p: argparse.ArgumentParser, default_max: float) -> None:
    p.add_argument("--l-min", type=float, default=0.0, help="first total distance in km (default 0)")
    p.add_argument("--l-max", type=float, default=default_max, help=f"last total distance in km (default {default_max:g})")
    p.add_argument("--step", type=float, default=10.0, help="distance step in km (default 10)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqds", description="Asynchronous MDI quantum digital signature toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value config file (default: $AQDS_CONFIG, then built-in values)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate-curve", help="signature rate against distance for both protocols")
    _sweep_args(p, 800.0)
    p.add_argument("--N", type=float, action="append", help="pulse-pair count; repeat for several (default: config N)")
    p.add_argument("--m", type=int, default=1000, help="document length in bits (default 1000)")
    p.add_argument("--eps-target", type=float, default=1e-10, help="security target (default 1e-10)")
    p.add_argument("--protocol", choices=("both", "async", "baseline"), default="both")
    _add_param_flags(p)
    p.set_defaults(func=cmd_rate_curve)

    p = sub.add_parser("entropy-profile", help="min- and max-entropy budget against distance")
    _sweep_args(p, 600.0)
    p.add_argument("--N", type=float, help="pulse-pair count (default: config N)")
    _add_param_flags(p)
    p.set_defaults(func=cmd_entropy_profile)

    p = sub.add_parser("keygen", help="write a demo signer key and two verifier share files")
    p.add_argument("--n", type=int, default=32, help="key segment length in bits (default 32)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("sign", help="sign a document file")
    p.add_argument("doc")
    p.add_argument("key", help="signer key file from keygen")
    p.add_argument("--out", required=True, help="bundle file to write")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("verify", help="verify a bundle; exit 0 accept, 1 reject, 2 malformed")
    p.add_argument("bundle")
    p.add_argument("own", help="this verifier's share file")
    p.add_argument("counterpart", help="the other verifier's share file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("selftest", help="run the self-test battery and print a JSON report")
    p.add_argument("--mc-bins", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--fault", choices=FAULTS, help="inject a known defect (for testing the tests)")
    p.add_argument("--out")
    _add_param_flags(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"aqds: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"aqds: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
