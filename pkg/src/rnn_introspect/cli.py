"""Command-line surface.

    rnn-introspect train            fit the RNN and write checkpoint + metrics
    rnn-introspect experiment       run perturbation experiment 1, 2, 3 (or the
                                    1+2 co-plot "12") against a checkpoint
    rnn-introspect analyze          PCA dimensionality, t-SNE embeddings and
                                    k-NN purity from a checkpoint
    rnn-introspect reproduce-paper  chain train -> experiments -> analyze with
                                    the study defaults

Exit codes: 0 success, 2 usage, 3 data/parse error, 4 numeric failure,
5 I/O error. Every command writes its artifacts atomically and finishes
with a manifest.json listing their checksums.
"""

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import embedding, geometry, idx, perturb, rnn, svg, training
from .manifest import ManifestWriter

DEFAULT_TIMESTEPS = "4,14,28"
DEFAULT_SUBSAMPLE = 2000
PURITY_KS = (5, 10, 20)
EXP_KINDS = {1: perturb.Kind.BLANK_TAIL, 2: perturb.Kind.TRUNCATE, 3: perturb.Kind.PAD_BLANK}
EXP_DEFAULT_GRIDS = {1: "1..27", 2: "1..27", 3: "0..500"}


def parse_grid(text: str) -> list:
    """Grid syntax: "a..b", "a..b:step", or comma-separated integers."""
    text = text.strip()
    if ".." in text:
        body, _, step_text = text.partition(":")
        lo_text, _, hi_text = body.partition("..")
        lo, hi = int(lo_text), int(hi_text)
        step = int(step_text) if step_text else 1
        if step < 1 or hi < lo:
            raise ValueError(f"bad grid range {text!r}")
        return list(range(lo, hi + 1, step))
    values = [int(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError(f"empty grid {text!r}")
    return values


def parse_timesteps(text: str) -> list:
    steps = sorted({int(v) for v in text.split(",") if v.strip()})
    if not steps:
        raise ValueError(f"empty timestep list {text!r}")
    return steps


def _load_limited(images, labels, limit=None):
    dataset = idx.load_dataset(images, labels)
    if limit is not None:
        dataset = dataset.subset(np.arange(min(limit, len(dataset))))
    return dataset


def run_train(
    train_images,
    train_labels,
    out_dir,
    test_images=None,
    test_labels=None,
    seed=0,
    epochs=30,
    batch_size=64,
    lr=1e-3,
    limit=None,
    precision="float32",
    output_bias=True,
    resume=None,
    checkpoint_name="checkpoint.ckpt",
    quiet=False,
):
    os.makedirs(out_dir, exist_ok=True)
    config = training.TrainConfig(
        epochs=epochs, batch_size=batch_size, lr=lr, seed=seed,
        precision=precision, output_bias=output_bias,
    )
    config.validate()
    train_set = _load_limited(train_images, train_labels, limit)
    eval_set = None
    inputs = {"train_images": train_images, "train_labels": train_labels}
    if test_images and test_labels:
        eval_set = _load_limited(test_images, test_labels)
        inputs.update({"test_images": test_images, "test_labels": test_labels})
    if resume:
        inputs["resume"] = resume

    writer = ManifestWriter(
        out_dir,
        "train",
        {**dataclasses.asdict(config), "limit": limit},
        {"seed": seed},
        inputs,
    )
    resume_ckpt = training.load_checkpoint(resume) if resume else None

    def report(entry):
        if not quiet:
            test = "" if entry.test_acc is None else f" test_acc={entry.test_acc:.4f}"
            print(
                f"epoch {entry.epoch}/{config.epochs} "
                f"train_loss={entry.train_loss:.4f} train_acc={entry.train_acc:.4f}{test}",
                flush=True,
            )

    result = training.train(config, train_set, eval_set, resume_from=resume_ckpt, on_epoch=report)
    ckpt_path = writer.write_bytes(
        "checkpoint", checkpoint_name, training.checkpoint_to_bytes(result.checkpoint)
    )
    writer.write_text("metrics", "metrics.csv", training.metrics_to_csv(result.metrics))
    writer.finish()
    return ckpt_path


def _curve_series(curve: perturb.AccuracyCurve) -> svg.Series:
    if curve.kind == perturb.Kind.PAD_BLANK:
        xs = [p.amount for p in curve.points]
        name = "appended blank rows"
    else:
        xs = [p.shown_rows for p in curve.points]
        name = "blank tail" if curve.kind == perturb.Kind.BLANK_TAIL else "truncated"
    return svg.Series(name=name, xs=xs, ys=[p.accuracy for p in curve.points])


def run_experiment(
    checkpoint,
    test_images,
    test_labels,
    out_dir,
    exp: str,
    grid=None,
    limit=None,
    quiet=False,
):
    if exp not in ("1", "2", "3", "12"):
        raise ValueError(f"--exp must be 1, 2, 3 or 12, got {exp!r}")
    os.makedirs(out_dir, exist_ok=True)
    ckpt = training.load_checkpoint(checkpoint)
    test_set = _load_limited(test_images, test_labels, limit)
    numbers = [1, 2] if exp == "12" else [int(exp)]

    writer = ManifestWriter(
        out_dir,
        "experiment",
        {"exp": exp, "grid": grid, "limit": limit},
        {},
        {"checkpoint": checkpoint, "test_images": test_images, "test_labels": test_labels},
    )
    curves = {}
    for number in numbers:
        amounts = parse_grid(grid) if grid else parse_grid(EXP_DEFAULT_GRIDS[number])
        curve = perturb.accuracy_sweep(ckpt.params, test_set, EXP_KINDS[number], amounts)
        curves[number] = curve
        writer.write_text(
            f"exp{number}_curve", f"exp{number}_curve.csv", perturb.curve_to_csv(curve)
        )
        if not quiet:
            print(f"experiment {number}: {len(curve.points)} grid points", flush=True)

    if exp == "12":
        chart = svg.line_chart(
            [_curve_series(curves[1]), _curve_series(curves[2])],
            title="Accuracy with blanked tails vs truncated inputs",
            x_label="image rows shown",
            y_label="test accuracy",
        )
        writer.write_text("exp12_curve_svg", "exp12_curve.svg", chart)
    else:
        number = numbers[0]
        curve = curves[number]
        x_label = "blank rows appended" if number == 3 else "image rows shown"
        chart = svg.line_chart(
            [_curve_series(curve)],
            title=f"Perturbation experiment {number}",
            x_label=x_label,
            y_label="test accuracy",
        )
        writer.write_text(
            f"exp{number}_curve_svg", f"exp{number}_curve.svg", chart
        )
    writer.finish()


def _embedding_csv(embeddings: dict) -> str:
    lines = ["point_id,x,y,label,timestep"]
    for t in sorted(embeddings):
        emb = embeddings[t]
        for i, ((x, y), label) in enumerate(zip(emb.points, emb.labels)):
            lines.append(f"{i},{x!r},{y!r},{int(label)},{t}")
    return "\n".join(lines) + "\n"


def _purity_csv(rows: list) -> str:
    lines = ["timestep,k,purity"]
    for t, k, value in rows:
        lines.append(f"{t},{k},{value!r}")
    return "\n".join(lines) + "\n"


def run_analyze(
    checkpoint,
    test_images,
    test_labels,
    out_dir,
    timesteps=DEFAULT_TIMESTEPS,
    subsample=DEFAULT_SUBSAMPLE,
    perplexity=30.0,
    seed=0,
    tsne_iterations=1000,
    limit=None,
    quiet=False,
):
    os.makedirs(out_dir, exist_ok=True)
    ckpt = training.load_checkpoint(checkpoint)
    test_set = _load_limited(test_images, test_labels, limit)
    steps = parse_timesteps(timesteps) if isinstance(timesteps, str) else sorted(set(timesteps))

    size = min(subsample, len(test_set))
    sample = (
        geometry.stratified_subsample(test_set, size, seed)
        if size < len(test_set)
        else test_set
    )

    writer = ManifestWriter(
        out_dir,
        "analyze",
        {
            "timesteps": steps,
            "subsample": size,
            "perplexity": perplexity,
            "tsne_iterations": tsne_iterations,
            "limit": limit,
        },
        {"seed": seed, "subsample_seed": seed, "tsne_seed": seed},
        {"checkpoint": checkpoint, "test_images": test_images, "test_labels": test_labels},
    )

    curve = geometry.dimensionality_curve(ckpt.params, sample)
    writer.write_text("spectra", "spectra.csv", geometry.spectra_to_csv(curve))
    dim_series = [
        svg.Series(
            name="all classes",
            xs=[e.timestep for e in curve],
            ys=[e.overall.dim90 for e in curve],
            color="#000000",
        )
    ]
    per_class_points = {}
    for entry in curve:
        for result in entry.per_class:
            per_class_points.setdefault(result.scope, []).append((entry.timestep, result.dim90))
    for cls in sorted(per_class_points):
        pts = per_class_points[cls]
        dim_series.append(
            svg.Series(
                name=f"class {cls}",
                xs=[t for t, _ in pts],
                ys=[d for _, d in pts],
                color=svg.PALETTE[int(cls) % len(svg.PALETTE)],
            )
        )
    writer.write_text(
        "dimensionality_svg",
        "dimensionality.svg",
        svg.line_chart(
            dim_series,
            title="Components needed for 90% explained variance",
            x_label="timestep",
            y_label="dim90",
        ),
    )

    states = geometry.capture_states(ckpt.params, sample, steps)
    purity_rows = []
    for t in steps:
        for k in PURITY_KS:
            purity_rows.append((t, k, geometry.knn_purity(states[t].states, states[t].labels, k)))
    writer.write_text("purity", "purity.csv", _purity_csv(purity_rows))

    embeddings = {}
    for t in steps:
        if not quiet:
            print(f"t-SNE at timestep {t} ({len(sample)} points)...", flush=True)
        emb = embedding.tsne(
            states[t], perplexity=perplexity, iterations=tsne_iterations, seed=seed
        )
        embeddings[t] = emb
        writer.write_text(
            f"tsne_t{t}_svg",
            f"tsne_t{t}.svg",
            svg.scatter_chart(
                emb.points, emb.labels, title=f"Hidden states at timestep {t} (t-SNE)"
            ),
        )
    writer.write_text("embedding", "embedding.csv", _embedding_csv(embeddings))
    writer.finish()


def run_reproduce(args) -> None:
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    writer = ManifestWriter(
        out_dir,
        "reproduce-paper",
        {
            "seed": args.seed,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "lr": args.lr,
            "limit": args.limit,
            "subsample": args.subsample,
            "perplexity": args.perplexity,
            "timesteps": args.timesteps,
            "tsne_iterations": args.tsne_iterations,
        },
        {"seed": args.seed},
        {
            "train_images": args.train_images,
            "train_labels": args.train_labels,
            "test_images": args.test_images,
            "test_labels": args.test_labels,
        },
    )
    ckpt_path = run_train(
        args.train_images,
        args.train_labels,
        os.path.join(out_dir, "train"),
        test_images=args.test_images,
        test_labels=args.test_labels,
        seed=args.seed,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        limit=args.limit,
    )
    run_experiment(
        ckpt_path, args.test_images, args.test_labels,
        os.path.join(out_dir, "exp12"), exp="12",
    )
    run_experiment(
        ckpt_path, args.test_images, args.test_labels,
        os.path.join(out_dir, "exp3"), exp="3",
    )
    run_analyze(
        ckpt_path, args.test_images, args.test_labels,
        os.path.join(out_dir, "analyze"),
        timesteps=args.timesteps,
        subsample=args.subsample,
        perplexity=args.perplexity,
        seed=args.seed,
        tsne_iterations=args.tsne_iterations,
    )
    for sub in ("train", "exp12", "exp3", "analyze"):
        base = os.path.join(out_dir, sub)
        for name in sorted(os.listdir(base)):
            if name != "manifest.json":
                writer.record(f"{sub}/{name}", os.path.join(base, name))
    writer.finish()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnn-introspect",
        description="Sequential-MNIST RNN training and hidden-state introspection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_test_flags(p, required):
        p.add_argument("--test-images", required=required)
        p.add_argument("--test-labels", required=required)

    p_train = sub.add_parser("train", help="train the RNN and write a checkpoint")
    p_train.add_argument("--train-images", required=True)
    p_train.add_argument("--train-labels", required=True)
    add_test_flags(p_train, required=False)
    p_train.add_argument("--out-dir", required=True)
    p_train.add_argument("--checkpoint", default="checkpoint.ckpt",
                         help="checkpoint filename inside --out-dir")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--epochs", type=int, default=30)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--lr", type=float, default=1e-3)
    p_train.add_argument("--limit", type=int, default=None,
                         help="use only the first N training examples")
    p_train.add_argument("--precision", choices=("float32", "float64"), default="float32")
    p_train.add_argument("--no-output-bias", action="store_true")
    p_train.add_argument("--resume", default=None, help="checkpoint to resume from")

    p_exp = sub.add_parser("experiment", help="perturbation accuracy sweeps")
    p_exp.add_argument("--exp", required=True, choices=("1", "2", "3", "12"))
    p_exp.add_argument("--checkpoint", required=True)
    add_test_flags(p_exp, required=True)
    p_exp.add_argument("--out-dir", required=True)
    p_exp.add_argument("--grid", default=None, help='e.g. "1..27", "0..500:5" or "0,1,5"')
    p_exp.add_argument("--limit", type=int, default=None)

    p_an = sub.add_parser("analyze", help="PCA dimensionality, t-SNE, k-NN purity")
    p_an.add_argument("--checkpoint", required=True)
    add_test_flags(p_an, required=True)
    p_an.add_argument("--out-dir", required=True)
    p_an.add_argument("--timesteps", default=DEFAULT_TIMESTEPS)
    p_an.add_argument("--subsample", type=int, default=DEFAULT_SUBSAMPLE)
    p_an.add_argument("--perplexity", type=float, default=30.0)
    p_an.add_argument("--seed", type=int, default=0)
    p_an.add_argument("--tsne-iterations", type=int, default=1000)
    p_an.add_argument("--limit", type=int, default=None)

    p_rep = sub.add_parser("reproduce-paper", help="train + experiments + analysis")
    p_rep.add_argument("--train-images", required=True)
    p_rep.add_argument("--train-labels", required=True)
    add_test_flags(p_rep, required=True)
    p_rep.add_argument("--out-dir", required=True)
    p_rep.add_argument("--seed", type=int, default=0)
    p_rep.add_argument("--epochs", type=int, default=30)
    p_rep.add_argument("--batch-size", type=int, default=64)
    p_rep.add_argument("--lr", type=float, default=1e-3)
    p_rep.add_argument("--limit", type=int, default=None)
    p_rep.add_argument("--subsample", type=int, default=DEFAULT_SUBSAMPLE)
    p_rep.add_argument("--perplexity", type=float, default=30.0)
    p_rep.add_argument("--timesteps", default=DEFAULT_TIMESTEPS)
    p_rep.add_argument("--tsne-iterations", type=int, default=1000)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        if args.command == "train":
            run_train(
                args.train_images, args.train_labels, args.out_dir,
                test_images=args.test_images, test_labels=args.test_labels,
                seed=args.seed, epochs=args.epochs, batch_size=args.batch_size,
                lr=args.lr, limit=args.limit, precision=args.precision,
                output_bias=not args.no_output_bias, resume=args.resume,
                checkpoint_name=args.checkpoint,
            )
        elif args.command == "experiment":
            run_experiment(
                args.checkpoint, args.test_images, args.test_labels, args.out_dir,
                exp=args.exp, grid=args.grid, limit=args.limit,
            )
        elif args.command == "analyze":
            run_analyze(
                args.checkpoint, args.test_images, args.test_labels, args.out_dir,
                timesteps=args.timesteps, subsample=args.subsample,
                perplexity=args.perplexity, seed=args.seed,
                tsne_iterations=args.tsne_iterations, limit=args.limit,
            )
        elif args.command == "reproduce-paper":
            run_reproduce(args)
    except (
        idx.IdxFormatError,
        idx.CountMismatchError,
        idx.DimensionMismatchError,
        training.CorruptFileError,
        training.VersionMismatchError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (
        training.NonFiniteLossError,
        embedding.NonFiniteEmbeddingError,
        rnn.NonFiniteGradientError,
        rnn.NonFiniteInputError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
