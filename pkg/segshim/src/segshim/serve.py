"""Run the shim under uvicorn.

``segshim --mock --port 8765`` serves the deterministic box-interior
backend; pointing SEG_BACKEND at a ``module:factory`` (with
SEG_MODEL_PATH for the weights) serves a real promptable segmenter
behind the same wire contract. Requests are handled sequentially per
model instance; clients should tolerate latency, not reordering.
"""

from __future__ import annotations

import argparse
import os

from .app import create_app
from .backends import MockBackend, load_backend


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="segshim")
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("SEG_PORT", "8765"))
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument(
        "--mock", action="store_true",
        help="serve box interiors as masks; no model required",
    )
    parser.add_argument(
        "--backend", default=os.environ.get("SEG_BACKEND"),
        help="backend factory as module:callable (ignored with --mock)",
    )
    parser.add_argument(
        "--model-path", default=os.environ.get("SEG_MODEL_PATH"),
        help="weights location handed to the backend factory",
    )
    args = parser.parse_args(argv)

    if args.mock or not args.backend:
        backend = MockBackend()
    else:
        backend = load_backend(args.backend, args.model_path)

    import uvicorn

    uvicorn.run(create_app(backend), host=args.host, port=args.port, workers=1)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
