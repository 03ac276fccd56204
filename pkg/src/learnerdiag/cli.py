"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or configuration, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments as ex
from .data import DataError
from .diagnosers import ConfigError, load_checkpoint, save_checkpoint
from .io import load_response_logs, load_skill_matrix, save_response_logs, save_skill_matrix
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger("learnerdiag")


def _seed_list(raw: str):
    try:
        seeds = [int(s) for s in raw.replace(";", ",").split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {raw!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _int_list(raw: str):
    try:
        return [int(s) for s in raw.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list {raw!r}") from None


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--config", help="JSON experiment config; flags given on the command line win")
    if data:
        p.add_argument("--responses", help="responses.jsonl")
        p.add_argument("--qmatrix", help="q_matrix.csv")
        p.add_argument("--task", choices=["cls", "reg"])
        p.add_argument("--family")
        p.add_argument("--seeds", type=_seed_list, help="comma separated seeds")
        p.add_argument("--lr", type=float)
        p.add_argument("--ld1", type=int)
        p.add_argument("--ld2", type=int)
        p.add_argument("--latent-skills", type=int, dest="latent_skills")
        p.add_argument("--max-epochs", type=int, dest="max_epochs")
        p.add_argument("--patience", type=int)
        p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="learnerdiag", description="Diagnose learner ability from response logs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("reliability", "held-out response prediction over seeds"),
                        ("consistency", "rank correlation of overall ability vs accuracy/MAE"),
                        ("diagnose", "write per-learner ability and per-sample factor tables")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "diagnose":
            p.add_argument("--model", help="checkpoint to load instead of fitting")

    p = sub.add_parser("stability", help="rank agreement across disjoint sample partitions")
    _common(p)
    p.add_argument("--sizes", type=_int_list, help="partition sizes, e.g. 10,20,40,80,160")

    p = sub.add_parser("search", help="random hyperparameter search")
    _common(p)
    p.add_argument("--budget", type=int)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--family", default="irt", choices=["irt", "mirt", "mf", "camilla_base"])
    p.add_argument("--learners", type=int, default=100)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--skills", type=int, default=3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--task", choices=["cls", "reg"], default="cls")
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--out", required=True)
    return parser


def _config_from_args(args) -> ex.ExperimentConfig:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    hparams = dict(doc.get("hparams", {}))
    for key in ("lr", "ld1", "ld2", "latent_skills"):
        value = getattr(args, key, None)
        if value is not None:
            hparams[key] = value
    doc["hparams"] = hparams
    flag_map = {"responses": "responses", "qmatrix": "qmatrix", "family": "family", "seeds": "seeds",
                "out": "out", "max_epochs": "max_epochs", "patience": "patience",
                "batch_size": "batch_size", "budget": "budget", "model": "model",
                "sizes": "partition_sizes"}
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[key] = value
    if getattr(args, "task", None):
        doc["task_kind"] = args.task
    return ex.ExperimentConfig.from_dict(doc)


def _load_data(config: ex.ExperimentConfig):
    if not config.responses:
        raise ConfigError("--responses is required")
    responses = load_response_logs(config.responses, config.task_kind)
    skills = load_skill_matrix(config.qmatrix, responses.sample_names) if config.qmatrix else None
    return responses, skills


def _run(args) -> None:
    if args.command == "synth":
        spec = SyntheticSpec(family=args.family, n_learners=args.learners, n_samples=args.samples,
                             n_skills=args.skills, seed=args.seed, task_kind=args.task, density=args.density)
        data = generate_synthetic(spec)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_response_logs(data.responses, out / "responses.jsonl")
        if data.skills is not None:
            save_skill_matrix(data.skills, data.responses.sample_names, out / "q_matrix.csv")
        planted = {k: np.asarray(v).tolist() for k, v in data.planted.items()}
        (out / "planted.json").write_text(json.dumps(planted), encoding="utf-8")
        log.info("wrote %d triples to %s", len(data.responses), out)
        return

    config = _config_from_args(args)
    responses, skills = _load_data(config)
    out = Path(config.out)
    if args.command == "reliability":
        ex.dump_report(ex.run_reliability(responses, skills, config), out / "reliability.json")
    elif args.command == "consistency":
        ex.dump_report(ex.run_rank_consistency(responses, skills, config), out / "consistency.json")
    elif args.command == "stability":
        ex.dump_report(ex.run_rank_stability(responses, skills, config), out / "stability.json")
    elif args.command == "search":
        ex.dump_report(ex.run_hyperparam_search(responses, skills, config), out / "search.json")
    elif args.command == "diagnose":
        if config.model:
            model = load_checkpoint(config.model)
            if (model.n_learners, model.n_samples) != (responses.n_learners, responses.n_samples):
                raise ConfigError("checkpoint does not match the response log dimensions")
        else:
            model = ex.fit_full(config, responses, skills, config.seeds[0])
            out.mkdir(parents=True, exist_ok=True)
            save_checkpoint(model, out / "model.json")
        ex.write_diagnose_report(model, responses, out)
    log.info("%s finished; output in %s", args.command, out)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except (DataError, ConfigError, ValueError, IndexError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
