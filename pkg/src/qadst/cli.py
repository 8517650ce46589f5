"""Command line interface.

Subcommands cover the full workflow: preprocess a raw MultiWOZ-style
distribution, generate a synthetic corpus, train, evaluate, run domain
expansion, and predict (batch or interactive).

Exit codes: 0 success, 2 usage or input validation errors, 1 anything
else.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import (
    Corpus,
    Dialogue,
    Turn,
    convert_span_slots_to_value,
    dialogue_from_json,
    ingest_multiwoz,
    load_corpus,
    save_corpus,
    state_to_json,
)
from .errors import ValidationError
from .evaluation import evaluate_states, normalize_state
from .model import ModelConfig
from .ontology import load_ontology
from .synthetic import SyntheticConfig, generate_synthetic
from .trainer import (
    TrainConfig,
    domain_expansion,
    load_checkpoint,
    save_checkpoint,
    train,
)

_BOOLS = {"true": True, "false": False, "on": True, "off": False, "yes": True, "no": False}


def _parse_value(text: str):
    lowered = text.strip().lower()
    if lowered in _BOOLS:
        return _BOOLS[lowered]
    if lowered in ("none", "null"):
        return None
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            continue
    return text.strip()


def parse_config_file(path) -> dict:
    """key=value per line; # starts a comment; values are parsed as
    bool/int/float/none when they look like one."""
    options = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        options[key.strip()] = _parse_value(value)
    return options


def split_config_options(options: dict) -> tuple[dict, dict]:
    model_keys = set(ModelConfig.__dataclass_fields__)
    train_keys = set(TrainConfig.__dataclass_fields__)
    model_kwargs, train_kwargs = {}, {}
    for key, value in options.items():
        if key in model_keys:
            model_kwargs[key] = value
        elif key in train_keys:
            train_kwargs[key] = value
        else:
            raise ValidationError(f"unknown config key {key!r}")
    return model_kwargs, train_kwargs


def _gather_configs(args) -> tuple[ModelConfig, TrainConfig, dict]:
    options = parse_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {}
    for key in ("seed", "epochs", "lr", "patience", "context_window"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "graph", None) is not None:
        overrides["graph"] = args.graph == "on"
    if getattr(args, "domain", None):
        overrides["domains"] = tuple(args.domain)
    options.update(overrides)
    domains = options.pop("domains", None)
    model_kwargs, train_kwargs = split_config_options(options)
    if domains is not None:
        train_kwargs["domains"] = domains
    model_config = ModelConfig(**model_kwargs)
    train_config = TrainConfig(**train_kwargs)
    echo = {"model": model_config.as_dict(), "train": train_config.as_dict()}
    return model_config, train_config, echo


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(args) -> int:
    ontology = load_ontology(args.ontology)
    corpus, report = ingest_multiwoz(args.raw, ontology)
    if args.span_mode == "value":
        ontology = convert_span_slots_to_value(ontology, corpus.split_dialogues("train"))
        corpus = Corpus.build(corpus.dialogues, corpus.splits, ontology)
    out = _out_dir(args)
    save_corpus(corpus, out / "corpus.json")
    (out / "ontology.json").write_text(ontology.to_json())
    (out / "vocab.json").write_text(json.dumps(corpus.vocabulary.to_dict(), indent=0))
    (out / "ingestion_report.json").write_text(json.dumps(report.as_dict(), indent=2))
    print(
        f"kept {report.dialogues_kept} dialogues "
        f"({report.dialogues_excluded} excluded), {report.triples_kept} state triples"
    )
    return 0


def cmd_gen_synthetic(args) -> int:
    config = SyntheticConfig(
        n_train=args.n_train, n_dev=args.n_dev, n_test=args.n_test, seed=args.seed or 13
    )
    corpus, ontology = generate_synthetic(config)
    out = _out_dir(args)
    save_corpus(corpus, out / "corpus.json")
    (out / "ontology.json").write_text(ontology.to_json())
    print(f"wrote {len(corpus.dialogues)} dialogues to {out}")
    return 0


def cmd_train(args) -> int:
    ontology = load_ontology(args.ontology)
    corpus = load_corpus(args.input, ontology)
    model_config, train_config, echo = _gather_configs(args)
    out = _out_dir(args)
    (out / "config.json").write_text(json.dumps(echo, indent=2))
    result = train(
        corpus,
        ontology,
        model_config=model_config,
        train_config=train_config,
        log_path=out / "train_log.jsonl",
    )
    save_checkpoint(
        result.runtime,
        out / "checkpoint",
        metrics={"history_tail": result.history[-1] if result.history else None},
    )
    dev = corpus.split_dialogues("dev")
    if dev:
        report = result.runtime.evaluate(dev)
        report.save(out / "dev_report.json")
        print(f"dev joint {report.joint:.4f} slot {report.slot:.4f}")
    print(f"checkpoint written to {out / 'checkpoint'}")
    return 0


def _load_prediction_file(path) -> dict[str, list[dict]]:
    payload = json.loads(Path(path).read_text())
    out = {}
    for record in payload:
        turns = []
        for turn in record["turns"]:
            turns.append({(e["domain"], e["slot"]): e["value"] for e in turn})
        out[record["dialogue_id"]] = turns
    return out


def cmd_evaluate(args) -> int:
    if not args.checkpoint and not args.predictions:
        raise ValidationError("evaluate needs --checkpoint or --predictions")
    ontology = None
    runtime = None
    if args.checkpoint:
        runtime = load_checkpoint(args.checkpoint)
        ontology = runtime.ontology
    else:
        if not args.ontology:
            raise ValidationError("--predictions mode needs --ontology")
        ontology = load_ontology(args.ontology)
    corpus = load_corpus(args.input, ontology)
    dialogues = corpus.split_dialogues(args.split) or corpus.dialogues

    golds, preds = [], []
    if runtime is not None:
        use_graph = None if args.graph is None else args.graph == "on"
        for dialogue in dialogues:
            examples = runtime.examples(dialogue)
            preds.append(runtime.model.predict_dialogue(examples, use_graph=use_graph))
            golds.append([example.state for example in examples])
    else:
        table = _load_prediction_file(args.predictions)
        for dialogue in dialogues:
            if dialogue.dialogue_id not in table:
                raise ValidationError(f"predictions missing dialogue {dialogue.dialogue_id!r}")
            predicted = table[dialogue.dialogue_id]
            if len(predicted) != len(dialogue.turns):
                raise ValidationError(
                    f"predictions for {dialogue.dialogue_id!r} have {len(predicted)} turns, "
                    f"dialogue has {len(dialogue.turns)}"
                )
            preds.append(predicted)
            golds.append([normalize_state(t.state) for t in dialogue.turns])
    report = evaluate_states(preds, golds, ontology)
    if args.out:
        report.save(args.out)
    print(json.dumps(report.as_dict(), indent=2))
    return 0


def cmd_expand_domain(args) -> int:
    ontology = load_ontology(args.ontology)
    corpus = load_corpus(args.input, ontology)
    model_config, train_config, _ = _gather_configs(args)
    report = domain_expansion(
        corpus,
        ontology,
        target_domain=args.domain[0],
        fraction=args.fraction,
        mode=args.mode,
        seed=args.seed or 0,
        model_config=model_config,
        train_config=train_config,
    )
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
    print(json.dumps(report, indent=2))
    return 0


def _interactive_loop(runtime) -> int:
    print("type user turns; :reset starts a new dialogue, :quit exits")
    turns: list[Turn] = []
    while True:
        try:
            line = input("user> ").strip()
        except EOFError:
            return 0
        if not line:
            continue
        if line == ":quit":
            return 0
        if line == ":reset":
            turns = []
            print("(new dialogue)")
            continue
        turns.append(Turn(agent="", user=line, state={}))
        dialogue = Dialogue(dialogue_id="interactive", turns=tuple(turns))
        state = runtime.predict_states(dialogue)[-1]
        if state:
            for (domain, slot), value in sorted(state.items()):
                print(f"  {domain} {slot} = {value}")
        else:
            print("  (no slots tracked yet)")


def cmd_predict(args) -> int:
    runtime = load_checkpoint(args.checkpoint)
    if args.interactive:
        return _interactive_loop(runtime)
    if not args.input:
        raise ValidationError("predict needs --input or --interactive")
    payload = json.loads(Path(args.input).read_text())
    if isinstance(payload, dict) and "dialogues" in payload:
        payload = payload["dialogues"]
    records = []
    for entry in payload:
        dialogue = dialogue_from_json(entry)
        states = runtime.predict_states(dialogue)
        records.append(
            {
                "dialogue_id": dialogue.dialogue_id,
                "turns": [state_to_json(state) for state in states],
            }
        )
    text = json.dumps(records, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qadst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="ingest a raw MultiWOZ-style distribution")
    p.add_argument("--raw", required=True, help="directory with data.json and split lists")
    p.add_argument("--ontology", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--span-mode", choices=("span", "value"), default="span",
                   help="value: rebuild span slots as value lists collected from training data")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-train", type=int, default=50)
    p.add_argument("--n-dev", type=int, default=10)
    p.add_argument("--n-test", type=int, default=10)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("train", help="train a tracker")
    p.add_argument("--input", required=True, help="canonical corpus JSON")
    p.add_argument("--ontology", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--graph", choices=("on", "off"), default=None)
    p.add_argument("--context-window", type=int, default=None)
    p.add_argument("--domain", action="append", help="restrict training to these domains")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint or a prediction file")
    p.add_argument("--input", required=True, help="canonical corpus JSON with gold states")
    p.add_argument("--checkpoint")
    p.add_argument("--predictions", help="prediction file to score instead of a checkpoint")
    p.add_argument("--ontology", help="required with --predictions")
    p.add_argument("--split", default="test")
    p.add_argument("--graph", choices=("on", "off"), default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("expand-domain", help="scratch vs finetune on a small domain sample")
    p.add_argument("--input", required=True)
    p.add_argument("--ontology", required=True)
    p.add_argument("--domain", action="append", required=True)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--mode", choices=("scratch", "finetune"), default="finetune")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--graph", choices=("on", "off"), default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_expand_domain)

    p = sub.add_parser("predict", help="predict states for dialogues")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", help="JSON list of dialogues (or canonical corpus)")
    p.add_argument("--interactive", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
