"""Command-line front door.

    ccmtune tune --image photo.png --prompt vibrant --out-dir out/
    ccmtune apply --image photo.png --matrix out/matrix.json --out styled.png
    ccmtune experiment --corpus kodak/ --out-dir report/ --sweep-tau 0.25,0.5,1.0
    ccmtune serve --listen 127.0.0.1:8080 --config service.json

Exit codes: 0 ok, 1 usage/config, 2 backend failure, 3 non-finite loss,
4 invalid matrix, 5 bind failure. Every run writes its fully-resolved
config next to its artifacts so results are reproducible from disk alone.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from dataclasses import replace
from pathlib import Path

from . import ccm
from .embedding import RemoteBackend, SyntheticBackend, load_graph_backend
from .errors import BackendUnavailableError, CcmTuneError, DecodeError, MatrixFormatError, NonFiniteLossError
from .experiment import vibrant_dull_experiment
from .image import decode_image, encode_display
from .metrics import colorfulness
from .objective import PromptSpec, TwoPromptSpec
from .optimizer import ConfigError, TuneConfig, config_to_dict, tune

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BACKEND = 2
EXIT_NON_FINITE = 3
EXIT_BAD_MATRIX = 4
EXIT_BIND = 5


def build_backend(selector: str):
    """Resolve "synthetic", "remote:<url>", or "graph:<manifest path>"."""
    kind, _, rest = selector.partition(":")
    if kind == "synthetic" and not rest:
        return SyntheticBackend()
    if kind == "remote" and rest:
        return RemoteBackend(rest)
    if kind == "graph" and rest:
        return load_graph_backend(rest)
    raise ConfigError("backend", f"unrecognized backend selector {selector!r}")


def _add_tune_flags(p: argparse.ArgumentParser, prompt_required=True):
    if prompt_required:
        p.add_argument("--prompt", required=True, help="style keyword for the objective")
    else:
        p.add_argument("--prompt", default="vibrant",
                       help="style keyword (the harness substitutes vibrant/dull)")
    p.add_argument("--prompt-b", help="second keyword; enables two-prompt interpolation")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--template", choices=["A", "B", "C", "D"], default="B")
    p.add_argument("--content", help="content description (template D)")
    p.add_argument("--tau", type=float, default=0.25)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--optimizer", choices=["adam", "adamw", "sgd"], default="adam")
    p.add_argument("--grad", choices=["auto", "analytic", "fd", "spsa"], default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshot-every", type=int, default=50)
    p.add_argument("--backend", default="synthetic",
                   help="synthetic | remote:<url> | graph:<manifest.json>")


def _prompt_spec(args, keyword: str) -> PromptSpec:
    content = args.content if args.template == "D" else None
    return PromptSpec(args.template, keyword, content)


def _tune_config(args) -> TuneConfig:
    if args.template == "D" and not args.content:
        raise ConfigError("content", "--content is required with --template D")
    prompt = _prompt_spec(args, args.prompt)
    if args.prompt_b:
        objective = TwoPromptSpec(prompt, _prompt_spec(args, args.prompt_b),
                                  alpha=args.alpha, temperature=args.temperature)
    else:
        objective = prompt
    grad = {"fd": "fd_central"}.get(args.grad, args.grad)
    return TuneConfig(
        objective=objective,
        tau=args.tau,
        iterations=args.iters,
        learning_rate=args.lr,
        optimizer_kind=args.optimizer,
        gradient_strategy=grad,
        seed=args.seed,
        snapshot_every=args.snapshot_every,
        backend=args.backend,
    )


def cmd_tune(args) -> int:
    try:
        config = _tune_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        image_bytes = Path(args.image).read_bytes()
        img = decode_image(image_bytes)
    except (OSError, DecodeError) as exc:
        print(f"error: cannot read image: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(config_to_dict(config), indent=2))

    try:
        backend = build_backend(args.backend)
        result = tune(img, config, backend)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendUnavailableError as exc:
        print(f"error: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except NonFiniteLossError as exc:
        print(f"error: non-finite loss: {exc}", file=sys.stderr)
        return EXIT_NON_FINITE

    output = ccm.apply(result.final_matrix, img)
    output_png = encode_display(output)
    (out_dir / "matrix.json").write_text(
        ccm.matrix_to_json(result.final_matrix, result.final_params))
    (out_dir / "output.png").write_bytes(output_png)
    (out_dir / "trajectory.jsonl").write_text(result.trajectory.to_jsonl())
    (out_dir / "snapshots.json").write_text(result.trajectory.snapshots_json())

    final = result.trajectory.records[-1]
    delta_c = colorfulness(decode_image(output_png)) - colorfulness(decode_image(image_bytes))
    summary = {
        "final_loss": final.loss,
        "final_similarity": final.sim_a,
        "final_similarity_b": final.sim_b,
        "final_p_a": final.p_a,
        "delta_C_vs_input": delta_c,
        "iterations": final.iteration,
        "wall_time_s": result.wall_time,
        "out_dir": str(out_dir),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"final similarity: {final.sim_a:.6f}")
    print(f"delta colorfulness vs input: {delta_c:+.3f}")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_apply(args) -> int:
    try:
        image_bytes = Path(args.image).read_bytes()
        matrix_text = Path(args.matrix).read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        matrix = ccm.matrix_from_json(matrix_text)
    except MatrixFormatError as exc:
        print(f"error: invalid matrix: {exc}", file=sys.stderr)
        return EXIT_BAD_MATRIX
    try:
        img = decode_image(image_bytes)
    except DecodeError as exc:
        print(f"error: cannot decode image: {exc}", file=sys.stderr)
        return EXIT_USAGE
    Path(args.out).write_bytes(encode_display(ccm.apply(matrix, img)))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    corpus_dir = Path(args.corpus)
    paths = sorted(p for p in corpus_dir.glob("*")
                   if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    if not paths:
        print(f"error: no images found in {corpus_dir}", file=sys.stderr)
        return EXIT_USAGE
    images = []
    for p in paths:
        try:
            images.append((p.stem, decode_image(p.read_bytes())))
        except DecodeError as exc:
            print(f"skipping {p.name}: {exc}", file=sys.stderr)
    if not images:
        print("error: no decodable images in corpus", file=sys.stderr)
        return EXIT_USAGE

    try:
        base_config = _tune_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    taus = [float(t) for t in args.sweep_tau.split(",")] if args.sweep_tau else [args.tau]

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        backend = build_backend(args.backend)
    except (ConfigError, BackendUnavailableError) as exc:
        print(f"error: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND

    sweeps = []
    any_success = False
    for tau in taus:
        report = vibrant_dull_experiment(images, replace(base_config, tau=tau),
                                         backend, jobs=args.jobs)
        any_success = any_success or bool(report.per_image)
        suffix = f"_tau{tau:g}" if len(taus) > 1 else ""
        (out_dir / f"report{suffix}.csv").write_text(report.to_csv())
        summary = report.summary_dict()
        summary["tau"] = tau
        sweeps.append(summary)
        for image_id, error in report.failures:
            print(f"image {image_id} failed: {error}", file=sys.stderr)
        print(f"tau={tau:g}: delta_C={report.delta_c:.3f} "
              f"delta_clip_iqa={report.delta_clip_iqa:.4f} "
              f"images={len(report.per_image)}")

    summary_doc = sweeps[0] if len(sweeps) == 1 else {"sweeps": sweeps}
    (out_dir / "summary.json").write_text(json.dumps(summary_doc, indent=2))
    print(json.dumps(summary_doc if len(sweeps) > 1 else sweeps[0]))
    return EXIT_OK if any_success else EXIT_BACKEND


def cmd_serve(args) -> int:
    from .service import create_app, load_service_config
    from .service.config import ServiceConfigError

    try:
        config = load_service_config(args.config)
    except ServiceConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    host, _, port_text = args.listen.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        print(f"error: invalid --listen {args.listen!r}", file=sys.stderr)
        return EXIT_USAGE
    host = host or "127.0.0.1"

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        print(f"error: cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_BIND
    finally:
        probe.close()

    import uvicorn
    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccmtune", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_tune = sub.add_parser("tune", help="tune a matrix for one image and prompt")
    p_tune.add_argument("--image", required=True)
    p_tune.add_argument("--out-dir", default="ccmtune-out")
    _add_tune_flags(p_tune)
    p_tune.set_defaults(func=cmd_tune)

    p_apply = sub.add_parser("apply", help="apply an exported matrix to an image")
    p_apply.add_argument("--image", required=True)
    p_apply.add_argument("--matrix", required=True)
    p_apply.add_argument("--out", required=True)
    p_apply.set_defaults(func=cmd_apply)

    p_exp = sub.add_parser("experiment", help="run the vibrant/dull harness over a corpus")
    p_exp.add_argument("--corpus", required=True)
    p_exp.add_argument("--out-dir", default="ccmtune-report")
    p_exp.add_argument("--sweep-tau", help="comma-separated clip levels, e.g. 0.25,0.5,1.0")
    p_exp.add_argument("--jobs", type=int, default=1)
    _add_tune_flags(p_exp, prompt_required=False)
    p_exp.set_defaults(func=cmd_experiment)

    p_serve = sub.add_parser("serve", help="run the HTTP job service")
    p_serve.add_argument("--listen", default="127.0.0.1:8080")
    p_serve.add_argument("--config", help="service config JSON (or CCMTUNE_CONFIG)")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CcmTuneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND if isinstance(exc, BackendUnavailableError) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
