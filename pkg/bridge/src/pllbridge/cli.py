"""Bridge CLI: load one model, serve it on one port."""

from __future__ import annotations

import argparse
import sys

from .models import StartupError, load_model
from .server import BridgeServer


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pllbridge",
        description="Serve a masked language model behind the pllbench wire protocol.",
    )
    parser.add_argument(
        "--model", required=True,
        help="transformers model id / checkpoint dir, or toy:<table.json>",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8590)
    parser.add_argument("--device", default="cpu", help="torch device (cpu, cuda, cuda:0, ...)")
    parser.add_argument("--batch-size", type=int, default=8, dest="batch_size",
                        help="masked positions per forward pass")
    parser.add_argument("--max-tokens", type=int, default=None, dest="max_tokens",
                        help="override the served token maximum")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = load_model(
            args.model,
            device=args.device,
            batch_size=args.batch_size,
            max_tokens=args.max_tokens,
        )
    except StartupError as exc:
        print(f"startup failure: {exc}", file=sys.stderr)
        return 1
    server = BridgeServer(model, host=args.host, port=args.port)
    print(f"serving {model.name} (max_tokens={model.max_tokens}) at {server.endpoint}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
