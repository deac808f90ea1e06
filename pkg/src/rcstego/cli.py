"""Operator-facing command line.

Exit codes: 0 success, 1 usage, 2 codec error, 3 provider error. Every run
is reproducible from its flags, key material and provider files — the only
randomness is behind explicit --seed flags. RCSTEGO_KEY_FILE names a
default key file for the rrc codec.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import shlex
import sys
from fractions import Fraction
from pathlib import Path

from . import codec_rrc, codec_vanilla, fixtures, metrics
from .errors import CodecError, ProviderError, StegoError
from .exact import unit_interval
from .keystream import DEFAULT_RESOLUTION, OffsetStream, StegoKey
from .provider import (
    NgramModel,
    NgramProvider,
    RemoteProvider,
    load_table_file,
    train_ngram,
)
from .stegotext import dump_stegotext, load_stegotext

KEY_FILE_ENV = "RCSTEGO_KEY_FILE"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_provider_flags(p: _Parser) -> None:
    p.add_argument("--provider", choices=["ngram", "table", "remote", "demo", "binary"],
                   default="demo")
    p.add_argument("--model", help="n-gram model file (provider=ngram)")
    p.add_argument("--table", help="table fixture JSON file (provider=table)")
    p.add_argument("--connect", help="HOST:PORT of a distribution server (provider=remote)")
    p.add_argument("--spawn", help="command line to spawn a stdio server (provider=remote)")
    p.add_argument("--verify-remote", action="store_true",
                   help="double-probe remote responses for byte-identical determinism")
    p.add_argument("--prompt", help="prompt text (ngram provider)")
    p.add_argument("--prompt-ids", help="comma-separated prompt token ids")


def _add_key_flags(p: _Parser) -> None:
    p.add_argument("--key-hex", help="key bytes as hex (rrc)")
    p.add_argument("--key-file", help="file holding raw key bytes (rrc)")
    p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION,
                   help="offset grid is 2**-resolution (default %(default)s)")


def _add_message_flags(p: _Parser) -> None:
    p.add_argument("--message-hex", help="message as hex, zero-padded to --bits")
    p.add_argument("--message-file", help="file whose leading bits form the message")
    p.add_argument("--message-bits", help="message as a literal 0/1 string")
    p.add_argument("--random-message", action="store_true", help="draw the message from --seed")
    p.add_argument("--seed", type=int, help="seed for --random-message / trials")


def build_parser() -> _Parser:
    top = _Parser(prog="rcstego", description=__doc__)
    top.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-ngram", parents=[], help="train an n-gram model file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, required=True, help="number of conditioning tokens")
    p.add_argument("--smoothing", default="1", help="add-k smoothing constant (decimal)")
    p.add_argument("--mode", choices=["char", "word"], default="char")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_ngram)

    p = sub.add_parser("embed", help="embed a message into a stegotext file")
    _add_provider_flags(p)
    _add_key_flags(p)
    _add_message_flags(p)
    p.add_argument("--codec", choices=["rrc", "vanilla"], default="rrc")
    p.add_argument("--bits", type=int, required=True, help="message length l")
    p.add_argument("--out", required=True, help="stegotext output file")
    p.add_argument("--report", help="write the session report JSON here instead of stdout")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover the message from a stegotext file")
    _add_provider_flags(p)
    _add_key_flags(p)
    p.add_argument("--codec", choices=["rrc", "vanilla"], default="rrc")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--stegotext", required=True)
    p.add_argument("--out", help="write recovered bits (ASCII 0/1) here")
    p.add_argument("--verify-against", help="bits file to compare; sets the verified flag")
    p.add_argument("--report", help="write the report JSON here instead of stdout")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("roundtrip", help="embed+extract N random messages")
    _add_provider_flags(p)
    _add_key_flags(p)
    p.add_argument("--codec", choices=["rrc", "vanilla"], default="rrc")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report", help="write the report JSON here instead of stdout")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("bench", help="utilization/speed matrix over message lengths")
    _add_provider_flags(p)
    _add_key_flags(p)
    p.add_argument("--codec", choices=["rrc", "vanilla"], default="rrc")
    p.add_argument("--lengths", required=True, help="comma-separated message lengths")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report", help="write JSONL records here instead of stdout")
    p.add_argument("--pretty", action="store_true", help="also print an aligned table")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze-distortion",
                       help="exact induced-vs-model probabilities of the vanilla codec")
    p.add_argument("--bits", type=int, default=16)
    p.add_argument("--table", help="table fixture JSON; its first step is analyzed")
    p.set_defaults(func=cmd_analyze_distortion)

    return top


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for name, value in obj.items():
        attr = name.replace("-", "_")
        if getattr(args, attr, None) in (None, False):
            setattr(args, attr, value)


def _resolve_provider(args):
    kind = args.provider
    if kind == "ngram":
        if not args.model:
            raise UsageError("--provider ngram needs --model")
        model = NgramModel.load(args.model)
        if not args.prompt:
            raise UsageError("--provider ngram needs --prompt")
        ctx = model.encode_text(args.prompt)
        if len(ctx) < model.order:
            raise UsageError(f"prompt must supply at least {model.order} token(s)")
        return NgramProvider(model), ctx
    if kind == "table":
        if not args.table:
            raise UsageError("--provider table needs --table")
        provider = load_table_file(args.table)
        return provider, provider.prompt
    if kind == "remote":
        ids = _parse_ids(args.prompt_ids)
        if args.connect:
            host, _, port = args.connect.rpartition(":")
            return RemoteProvider.connect_tcp(host, int(port),
                                              verify_determinism=args.verify_remote), ids
        if args.spawn:
            return RemoteProvider.spawn_stdio(shlex.split(args.spawn),
                                              verify_determinism=args.verify_remote), ids
        raise UsageError("--provider remote needs --connect or --spawn")
    if kind == "binary":
        return fixtures.uniform_binary_provider(), _parse_ids(args.prompt_ids)
    return fixtures.mixed_table_provider(), _parse_ids(args.prompt_ids)


def _parse_ids(s) -> tuple[int, ...]:
    if not s:
        return ()
    return tuple(int(x) for x in str(s).split(","))


def _resolve_key(args, codec: str):
    explicit = args.key_hex or args.key_file
    if codec == "vanilla":
        if explicit:
            raise UsageError("the vanilla codec takes no key")
        return None
    if args.key_hex:
        key = StegoKey.from_hex(args.key_hex)
    elif args.key_file:
        key = StegoKey(Path(args.key_file).read_bytes())
    elif os.environ.get(KEY_FILE_ENV):
        key = StegoKey(Path(os.environ[KEY_FILE_ENV]).read_bytes())
    else:
        raise UsageError(f"rrc needs --key-hex, --key-file or ${KEY_FILE_ENV}")
    return OffsetStream(key, args.resolution)


def _resolve_message(args, length: int) -> str:
    sources = [args.message_hex is not None, args.message_file is not None,
               args.message_bits is not None, bool(args.random_message)]
    if sum(sources) != 1:
        raise UsageError("pick exactly one of --message-hex/--message-file/"
                         "--message-bits/--random-message")
    if args.message_hex is not None:
        value = int(args.message_hex, 16)
        if value >= (1 << length):
            raise UsageError(f"hex message does not fit in {length} bits")
        return format(value, f"0{length}b")
    if args.message_file is not None:
        data = Path(args.message_file).read_bytes()
        if len(data) * 8 < length:
            raise UsageError(f"message file holds {len(data) * 8} bits, need {length}")
        bits = "".join(format(b, "08b") for b in data)
        return bits[:length]
    if args.message_bits is not None:
        bits = args.message_bits
        if len(bits) != length or any(c not in "01" for c in bits):
            raise UsageError(f"--message-bits must be exactly {length} chars of 0/1")
        return bits
    if args.seed is None:
        raise UsageError("--random-message requires --seed")
    return format(random.Random(args.seed).getrandbits(length), f"0{length}b")


def _emit(obj: dict, path: str | None) -> None:
    line = json.dumps(obj)
    if path:
        with open(path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
    else:
        print(line)


def cmd_train_ngram(args) -> int:
    desc = train_ngram(args.corpus, args.order, args.smoothing, args.out, args.mode)
    print(json.dumps(desc.to_json()))
    return 0


def cmd_embed(args) -> int:
    provider, ctx = _resolve_provider(args)
    key = _resolve_key(args, args.codec)
    message = _resolve_message(args, args.bits)
    tokens, report = metrics.run_embed_session(provider, ctx, args.codec, args.bits,
                                               message, key=key, compute_kl=args.codec == "rrc")
    dump_stegotext(tokens, args.out)
    out = {"command": "embed", "codec": args.codec, "stegotext": args.out}
    out.update(report.to_json())
    del out["per_step_entropy"], out["kl_per_step"]
    out["kl_max"] = max((float(k) for k in report.kl_per_step), default=None)
    _emit(out, args.report)
    provider.close()
    return 0


def cmd_extract(args) -> int:
    provider, ctx = _resolve_provider(args)
    key = _resolve_key(args, args.codec)
    tokens = load_stegotext(args.stegotext)
    if args.codec == "rrc":
        bits = codec_rrc.extract_rrc(provider, ctx, key, args.bits, tokens)
    else:
        bits = codec_vanilla.extract_vanilla(provider, ctx, args.bits, tokens)
    if args.out:
        Path(args.out).write_text(bits + "\n", encoding="utf-8")
    out = {"command": "extract", "codec": args.codec, "message_bits": args.bits,
           "tokens": len(tokens)}
    if args.verify_against:
        expected = Path(args.verify_against).read_text(encoding="utf-8").strip()
        out["verified"] = bits == expected
    if not args.out:
        out["bits"] = bits
    _emit(out, args.report)
    provider.close()
    return 0


def cmd_roundtrip(args) -> int:
    provider, ctx = _resolve_provider(args)
    rng = random.Random(args.seed)
    succeeded = 0
    for _ in range(args.trials):
        message = format(rng.getrandbits(args.bits), f"0{args.bits}b")
        if args.codec == "rrc":
            key = OffsetStream(StegoKey(rng.randbytes(32)), args.resolution)
            tokens = codec_rrc.embed_rrc(provider, ctx, key, args.bits, message)
            back = codec_rrc.extract_rrc(provider, ctx, key, args.bits, tokens)
        else:
            tokens = codec_vanilla.embed_vanilla(provider, ctx, args.bits, message)
            back = codec_vanilla.extract_vanilla(provider, ctx, args.bits, tokens)
        succeeded += back == message
    _emit({"command": "roundtrip", "codec": args.codec, "bits": args.bits,
           "trials": args.trials, "succeeded": succeeded}, args.report)
    provider.close()
    return 0 if succeeded == args.trials else 2


def cmd_bench(args) -> int:
    provider, ctx = _resolve_provider(args)
    lengths = [int(x) for x in args.lengths.split(",")]
    key = _resolve_key(args, args.codec) if args.codec == "rrc" else None
    resolution = key.resolution if key else DEFAULT_RESOLUTION
    records = metrics.bench(provider, ctx, args.codec, lengths, args.trials,
                            seed=args.seed, resolution=resolution)
    for rec in records:
        _emit(rec.to_json(), args.report)
    if args.pretty:
        print(f"{'bits':>6} {'capacity':>9} {'util %':>7} {'bits/s':>10} {'runtime s':>10} {'fail':>5}")
        for rec in records:
            print(f"{rec.length:>6} {rec.mean_capacity:>9.3f} {rec.mean_utilization:>7.2f} "
                  f"{rec.mean_speed:>10.1f} {rec.mean_runtime:>10.4f} {rec.failures:>5}")
    provider.close()
    return 0


def cmd_analyze_distortion(args) -> int:
    if args.table:
        step = load_table_file(args.table).steps[0]
        names = {}
    else:
        step = fixtures.demo_step()
        names = fixtures.DEMO_TOKEN_TEXT
    rows = metrics.analyze_vanilla_distortion(step, unit_interval(args.bits), args.bits)
    for row in rows:
        label = f"token {row.token}" + (f" ({names[row.token]})" if row.token in names else "")
        print(f"{label}: model {row.model_prob} induced {row.induced_prob} diff {row.diff}")
    total = sum((r.induced_prob for r in rows), Fraction(0))
    print(f"induced total: {total}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except UsageError as e:
        print(f"rcstego: error: {e}", file=sys.stderr)
        return 1
    except ProviderError as e:
        print(f"rcstego: provider error: {e}", file=sys.stderr)
        return 3
    except CodecError as e:
        print(f"rcstego: codec error: {e}", file=sys.stderr)
        return 2
    except StegoError as e:
        print(f"rcstego: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
