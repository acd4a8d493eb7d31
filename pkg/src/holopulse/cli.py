"""Command-line client for the pipeline service.

Every subcommand builds a request and sends it to the HTTP API: against a
remote server when ``--url`` is given, otherwise against an in-process
instance of the app (no server needed). ``serve`` starts the service.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .service import create_app


def _request(args, endpoint: str, payload: dict) -> dict:
    async def _post() -> httpx.Response:
        if args.url:
            async with httpx.AsyncClient(base_url=args.url, timeout=600.0) as client:
                return await client.post(endpoint, json=payload)
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://holopulse", timeout=600.0
        ) as client:
            return await client.post(endpoint, json=payload)

    response = asyncio.run(_post())
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(1)
    return response.json()


def _cmd_extract(args) -> int:
    params = {
        "theta": args.theta,
        "dilation_radius": args.dilation,
        "min_len": args.min_len,
        "half_window": args.half_window,
        "smooth_width": args.smooth_width,
    }
    if args.min_separation is not None:
        params["min_separation"] = args.min_separation
    body = {
        "stack_path": args.stack,
        "vessel_mask_path": args.mask,
        "out_dir": args.out,
        "params": params,
    }
    summary = _request(args, "/extract", body)
    print(
        f"extracted {summary['segment_count']} segments, "
        f"{summary['artery_seed_count']} artery seeds; "
        f"{len(summary['systolic_peaks'])} systolic / "
        f"{len(summary['diastolic_valleys'])} diastolic frames"
    )
    print(f"artifacts written to {summary['out_dir']}")
    return 0


def _cmd_evaluate(args) -> int:
    body = {"pred_path": args.pred, "gt_path": args.gt, "out_path": args.out}
    result = _request(args, "/evaluate", body)
    print(result["table"])
    print(f"report written to {result['out_path']}")
    return 0


def _cmd_phantom(args) -> int:
    result = _request(args, "/phantom", {"spec_path": args.spec, "out_dir": args.out})
    kinds = ", ".join(f"{v['kind']}({v['pixel_count']} px)" for v in result["vessels"])
    print(f"phantom {result['dims']} with {kinds}")
    print(f"artifacts written to {result['out_dir']}")
    return 0


def _cmd_info(args) -> int:
    result = _request(args, "/info", {"path": args.path})
    fields = {k: v for k, v in result.items() if v is not None}
    print(json.dumps(fields, indent=2, sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holopulse",
        description="Cardiac pulse analysis for power Doppler image stacks",
    )
    parser.add_argument("--url", default=None, help="remote service URL (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run the pulse pipeline on a stack + vessel mask")
    p.add_argument("stack", help="stack header (.json)")
    p.add_argument("mask", help="binary vessel mask (.pgm)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--theta", type=float, default=0.3, help="artery upstroke threshold")
    p.add_argument("--dilation", type=int, default=2, help="segment dilation radius (px)")
    p.add_argument("--min-len", type=int, default=5, help="minimum segment length (px)")
    p.add_argument("--half-window", type=int, default=2, help="frames around each peak")
    p.add_argument(
        "--min-separation", type=int, default=None,
        help="minimum frames between peaks (default: frames/8)",
    )
    p.add_argument("--smooth-width", type=int, default=1, help="signal box-smoothing width")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("evaluate", help="score a predicted mask against ground truth")
    p.add_argument("pred", help="predicted class mask (.pgm)")
    p.add_argument("gt", help="ground-truth class mask (.pgm)")
    p.add_argument("--out", required=True, help="metrics report path (.json)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("phantom", help="generate a synthetic pulsatile stack")
    p.add_argument("spec", help="phantom spec (.json)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("info", help="print container/mask header fields")
    p.add_argument("path", help=".json header or .pgm mask")
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8099)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
