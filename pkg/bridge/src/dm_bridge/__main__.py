"""Run the bridge under uvicorn: ``python -m dm_bridge`` or ``dm-bridge``."""

from __future__ import annotations

import argparse
import sys

from .config import BridgeConfig
from .errors import BridgeError
from .service import create_app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dm-bridge",
        description="Serve /v1/augment, /v1/fill-mask and /v1/health over the "
        "model named by BRIDGE_MODEL (default: the echo double).",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8900)
    args = parser.parse_args(argv)

    try:
        app = create_app(BridgeConfig.from_env())
    except BridgeError as exc:
        print(f"dm-bridge: {exc}", file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
