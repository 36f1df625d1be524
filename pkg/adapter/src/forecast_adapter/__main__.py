"""Command-line entry point: `python3 -m forecast_adapter` or `forecast-adapter`."""

import argparse
import sys

from . import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="forecast-adapter",
        description="Serve a forecasting model over the stresscast stdio protocol (v1).",
    )
    parser.add_argument(
        "--mode",
        choices=["persistence"],
        default="persistence",
        help="built-in predictor to serve (wrap your own model via forecast_adapter.serve)",
    )
    parser.add_argument("--name", help="adapter name reported in the handshake")
    args = parser.parse_args(argv)
    return serve(name=args.name or f"forecast-adapter/{args.mode}")


if __name__ == "__main__":
    sys.exit(main())
