"""Bridge process: answers wire-protocol requests with the model's softmax.

Protocol (line-delimited JSON, UTF-8, one object per line — see the core
repo's docs/protocol.md): requests carry {"v": 1, "op": ...} where op is
"next" (context token ids -> tokens + probabilities as decimal strings),
"ping" (health check) or "detokenize". Responses repeat the version and set
"ok". A malformed frame is answered with an error frame and the connection
is closed.

Probabilities are emitted as fixed-point decimal strings with ``precision``
fractional digits after an exact renormalization, so the emitted vector
sums to 1 within len(vocab)/2 * 10**-precision — comfortably inside the
10**-(precision-2) contract. Responses are deterministic for identical
requests within one process lifetime: the model is seeded, runs on CPU
under no_grad, and nothing here depends on request history.
"""

from __future__ import annotations

import argparse
import json
import socketserver
import sys
from dataclasses import dataclass
from fractions import Fraction

from .model import ALPHABET, TinyCausalLM

PROTOCOL_VERSION = 1
MIN_PRECISION = 30  # digits; below this the exact core may see unstable strings


@dataclass
class BridgeConfig:
    seed: int = 0
    dim: int = 32
    heads: int = 2
    layers: int = 2
    alphabet: str = ALPHABET
    device: str = "cpu"
    precision: int = 40

    def __post_init__(self) -> None:
        if self.precision < MIN_PRECISION:
            raise ValueError(f"precision must be >= {MIN_PRECISION} digits")
        if self.device != "cpu":
            raise ValueError("only cpu inference is supported")


def decimal_string(x: Fraction, digits: int) -> str:
    """Fixed-point decimal rendering of x >= 0, rounded half-up at ``digits``."""
    scale = 10**digits
    scaled = x * scale
    n = (2 * scaled.numerator + scaled.denominator) // (2 * scaled.denominator)
    whole, frac = divmod(n, scale)
    return f"{whole}.{frac:0{digits}d}"


class Bridge:
    def __init__(self, config: BridgeConfig | None = None):
        self.config = config or BridgeConfig()
        self.model = TinyCausalLM(
            seed=self.config.seed,
            dim=self.config.dim,
            heads=self.config.heads,
            layers=self.config.layers,
            alphabet=self.config.alphabet,
        )

    def distribution_strings(self, context: list[int]) -> tuple[list[int], list[str]]:
        floats = self.model.next_token_probs(context)
        exact = [Fraction(p) for p in floats]  # float -> exact binary expansion
        total = sum(exact)
        normalized = [q / total for q in exact]
        probs = [decimal_string(q, self.config.precision) for q in normalized]
        return list(range(len(probs))), probs

    def handle(self, req: dict) -> dict:
        op = req.get("op")
        if req.get("v") != PROTOCOL_VERSION:
            return self._err(f"unsupported protocol version {req.get('v')!r}")
        if op == "ping":
            return {"v": PROTOCOL_VERSION, "ok": True, "pong": True}
        if op == "next":
            context = req.get("context")
            if not isinstance(context, list) or not context:
                return self._err("next needs a non-empty context list")
            try:
                tokens, probs = self.distribution_strings(context)
            except ValueError as e:
                return self._err(str(e))
            return {"v": PROTOCOL_VERSION, "ok": True, "tokens": tokens, "probs": probs}
        if op == "detokenize":
            try:
                text = self.model.decode(req.get("tokens", []))
            except (TypeError, IndexError):
                return self._err("bad token ids")
            return {"v": PROTOCOL_VERSION, "ok": True, "text": text}
        return self._err(f"unknown op {op!r}")

    @staticmethod
    def _err(message: str) -> dict:
        return {"v": PROTOCOL_VERSION, "ok": False, "error": message}

    def serve_stream(self, rfile, wfile) -> None:
        """One request in flight at a time; close after a protocol violation."""
        for line in rfile:
            try:
                req = json.loads(line)
            except json.JSONDecodeError as e:
                self._send(wfile, self._err(f"malformed frame: {e}"))
                return
            resp = self.handle(req)
            self._send(wfile, resp)
            if not resp["ok"] and "version" in resp.get("error", ""):
                return

    @staticmethod
    def _send(wfile, obj: dict) -> None:
        wfile.write(json.dumps(obj, separators=(",", ":")).encode() + b"\n")
        wfile.flush()


def serve_stdio(bridge: Bridge) -> None:
    bridge.serve_stream(sys.stdin.buffer, sys.stdout.buffer)


def make_tcp_server(bridge: Bridge, host: str, port: int) -> socketserver.ThreadingTCPServer:
    """One connection per thread; each connection serializes its requests."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            bridge.serve_stream(self.rfile, self.wfile)

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)


def serve_tcp(bridge: Bridge, host: str, port: int) -> None:
    with make_tcp_server(bridge, host, port) as server:
        print(f"lm-bridge listening on {server.server_address[0]}:{server.server_address[1]}",
              file=sys.stderr, flush=True)
        server.serve_forever()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lm-bridge", description=__doc__)
    parser.add_argument("--transport", choices=["stdio", "tcp"], default="stdio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7332)
    parser.add_argument("--seed", type=int, default=0, help="pins the model parameters")
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--heads", type=int, default=2)
    parser.add_argument("--layers", type=int, default=2)
    parser.add_argument("--precision", type=int, default=40,
                        help=f"decimal digits per probability (>= {MIN_PRECISION})")
    args = parser.parse_args(argv)
    bridge = Bridge(BridgeConfig(seed=args.seed, dim=args.dim, heads=args.heads,
                                 layers=args.layers, precision=args.precision))
    if args.transport == "stdio":
        serve_stdio(bridge)
    else:
        serve_tcp(bridge, args.host, args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
