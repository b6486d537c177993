"""Command line entry: train the two nets, or serve a checkpoint dir.

Exit codes match the simulator's convention: 0 success, 1 usage error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .train import TrainConfig, train_completer, train_denoiser


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainConfig(
        dataset=args.dataset,
        out=args.out,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        target_drop=args.target_drop,
    )
    nets = ("denoiser", "completer") if args.net == "both" else (args.net,)
    for net in nets:
        result = (train_denoiser if net == "denoiser" else train_completer)(cfg)
        print(
            f"{net}: best val L1 {result.best_val:.4f} at epoch {result.best_epoch} "
            f"({result.drop * 100.0:.1f}% below epoch 0) -> {result.checkpoint}"
        )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .serve import serve  # torch import is slow; keep usage errors snappy

    host, _, port = args.addr.rpartition(":")
    if not port.isdigit():
        raise ValueError(f"--addr must look like host:port, got {args.addr!r}")
    server = serve(args.checkpoints, host or "127.0.0.1", int(port), echo=args.echo)
    mode = "echo" if args.echo else f"checkpoints {args.checkpoints}"
    print(f"serving {mode} on {server.server_address[0]}:{server.port}", flush=True)
    try:
        server._thread.join()  # runs until interrupted
    except KeyboardInterrupt:
        server.stop()
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="planpredict", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train denoiser and/or completer on a triplet dataset")
    p.add_argument("--dataset", required=True, help="directory holding index.jsonl")
    p.add_argument("--out", default="checkpoints")
    p.add_argument("--net", choices=("both", "denoiser", "completer"), default="both")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-drop", type=float, default=None,
                   help="stop early once validation L1 fell by this fraction")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="answer prediction requests on host:port")
    p.add_argument("--checkpoints", default="checkpoints", help="dir with denoiser.pt and completer.pt")
    p.add_argument("--addr", default="127.0.0.1:7071")
    p.add_argument("--echo", action="store_true", help="bypass the nets, answer with the request")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 0
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
