"""Command-line entry point for dump export."""

from __future__ import annotations

import argparse
import sys

from .export import ExportConfig, export_batch


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tokexport",
        description="Export VLM token-embedding dumps")
    p.add_argument("--model", required=True,
                   help="checkpoint id, or 'synthetic' for the offline backend")
    p.add_argument("--source", action="append", required=True, dest="sources",
                   help="image path or 'synthetic:WxH' spec (repeatable)")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--prompt", default="Describe the image.")
    p.add_argument("--capture-agent", action="store_true")
    p.add_argument("--agent-model", default=None)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExportConfig(
            model=args.model, sources=args.sources,
            output_dir=args.output_dir, prompt=args.prompt,
            capture_agent=args.capture_agent, agent_model=args.agent_model,
            max_samples=args.max_samples, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        written = export_batch(config)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
