"""Training loop, runtime bundle, and checkpointing.

Optimization: Adam, summed cross-entropy over a dialogue's turns per
step, dropout on GRU inputs, word dropout on context tokens.  The
dialogue graph during training is built from the model's own detached
predictions at earlier turns of the same dialogue, never from gold
labels.
"""
from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .corpus import Corpus, Dialogue, PreprocessReport, TurnExample, Vocabulary, build_turn_examples
from .errors import CheckpointMismatch, TrainingDiverged, ValidationError
from .evaluation import EvalReport, evaluate_states, normalize_state
from .model import DstModel, ModelConfig
from .ontology import Ontology, Question, parse_ontology
from .reader import compute_loss

CHECKPOINT_FORMAT = 1


@dataclass
class TrainConfig:
    epochs: int = 50
    lr: float = 1e-3
    seed: int = 0
    patience: int = 10
    context_window: int | None = None
    domains: tuple[str, ...] | None = None
    stop_at_train_joint: float | None = None
    divergence_threshold: float = 1e6

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown train config keys: {sorted(unknown)}")
        data = dict(data)
        if data.get("domains") is not None:
            data["domains"] = tuple(data["domains"])
        return cls(**data)


@dataclass
class Runtime:
    """Everything needed to run a trained tracker on raw dialogues."""

    model: DstModel
    ontology: Ontology
    context_window: int | None = None

    def examples(self, dialogue: Dialogue, report: PreprocessReport | None = None) -> list[TurnExample]:
        return build_turn_examples(
            dialogue,
            self.ontology,
            self.model.questions,
            context_window=self.context_window,
            report=report,
        )

    def predict_states(self, dialogue: Dialogue, use_graph: bool | None = None) -> list[dict]:
        examples = self.examples(dialogue)
        raw = self.model.predict_dialogue(examples, use_graph=use_graph)
        return [normalize_state(state) for state in raw]

    def evaluate(self, dialogues: list[Dialogue], pairs=None, use_graph: bool | None = None) -> EvalReport:
        preds, golds = [], []
        for dialogue in dialogues:
            examples = self.examples(dialogue)
            preds.append(self.model.predict_dialogue(examples, use_graph=use_graph))
            golds.append([example.state for example in examples])
        return evaluate_states(preds, golds, self.ontology, pairs=pairs)


@dataclass
class TrainResult:
    runtime: Runtime
    history: list[dict] = field(default_factory=list)
    best_epoch: int | None = None
    stopped_early: bool = False
    preprocess_report: PreprocessReport = field(default_factory=PreprocessReport)


def _seed_everything(seed: int):
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def _select_questions(model: DstModel, domains) -> list[Question]:
    if domains is None:
        return model.questions
    domains = set(domains)
    unknown = domains - set(model.ontology.domains)
    if unknown:
        raise ValidationError(f"domain filter references unknown domains: {sorted(unknown)}")
    questions = [q for q in model.questions if q.domain in domains]
    if not questions:
        raise ValidationError("domain filter leaves no questions to train on")
    return questions


def train(
    corpus: Corpus,
    ontology: Ontology,
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
    model: DstModel | None = None,
    log_path=None,
) -> TrainResult:
    """Fit a tracker on the corpus train split.

    Early stopping watches dev joint accuracy over the trained domains
    (skipped when there is no dev split); the best weights are restored
    at the end.  Pass ``model`` to continue training an existing one.
    """
    cfg = train_config or TrainConfig()
    _seed_everything(cfg.seed)
    if model is None:
        model = DstModel(ontology, corpus.vocabulary, model_config)
    questions = _select_questions(model, cfg.domains)
    pairs = [q.pair for q in questions]
    runtime = Runtime(model=model, ontology=ontology, context_window=cfg.context_window)

    report = PreprocessReport()
    train_dialogues = corpus.split_dialogues("train")
    dev_dialogues = corpus.split_dialogues("dev")
    if not train_dialogues:
        raise ValidationError("corpus has no train split")
    train_examples = {d.dialogue_id: runtime.examples(d, report) for d in train_dialogues}

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    log_file = open(log_path, "w") if log_path else None
    history: list[dict] = []
    best_joint = -1.0
    best_epoch = None
    best_state = None
    since_best = 0
    stopped_early = False

    try:
        for epoch in range(cfg.epochs):
            model.train()
            order = list(train_dialogues)
            random.Random(cfg.seed * 100003 + epoch).shuffle(order)
            sums = {"loss_v": 0.0, "loss_st": 0.0, "loss_span": 0.0}
            n_turns = 0
            for dialogue in order:
                graph = model.new_graph() if model.config.graph else None
                optimizer.zero_grad()
                total = None
                for example in train_examples[dialogue.dialogue_id]:
                    outputs = model.forward_turn(example, graph, questions=questions)
                    loss_v, loss_st, loss_span = compute_loss(outputs, example.labels)
                    turn_total = loss_v + loss_st + loss_span
                    total = turn_total if total is None else total + turn_total
                    sums["loss_v"] += loss_v.item()
                    sums["loss_st"] += loss_st.item()
                    sums["loss_span"] += loss_span.item()
                    n_turns += 1
                    if graph is not None:
                        graph = graph.update(model.decode(outputs, example, questions=questions))
                if total is not None:
                    total_value = total.item()
                    if not math.isfinite(total_value) or total_value > cfg.divergence_threshold:
                        raise TrainingDiverged(
                            f"loss diverged at epoch {epoch}",
                            diagnostics={"epoch": epoch, "loss": total_value},
                        )
                    total.backward()
                    optimizer.step()

            record = {
                "epoch": epoch,
                "loss_v": sums["loss_v"] / max(n_turns, 1),
                "loss_st": sums["loss_st"] / max(n_turns, 1),
                "loss_span": sums["loss_span"] / max(n_turns, 1),
                "dev_joint": None,
                "dev_slot": None,
            }
            if dev_dialogues:
                dev_report = runtime.evaluate(dev_dialogues, pairs=pairs)
                record["dev_joint"] = dev_report.joint
                record["dev_slot"] = dev_report.slot
                if dev_report.joint > best_joint:
                    best_joint = dev_report.joint
                    best_epoch = epoch
                    best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
                    since_best = 0
                else:
                    since_best += 1
            history.append(record)
            if log_file:
                log_file.write(json.dumps(record) + "\n")
                log_file.flush()

            if cfg.stop_at_train_joint is not None:
                train_report = runtime.evaluate(train_dialogues, pairs=pairs)
                if train_report.joint >= cfg.stop_at_train_joint:
                    stopped_early = True
                    break
            if dev_dialogues and since_best > cfg.patience:
                stopped_early = True
                break
    finally:
        if log_file:
            log_file.close()

    # keep the best dev weights unless training was cut off by the
    # train-joint target (then the current weights are the point)
    if best_state is not None and cfg.stop_at_train_joint is None:
        model.load_state_dict(best_state)
    return TrainResult(
        runtime=runtime,
        history=history,
        best_epoch=best_epoch,
        stopped_early=stopped_early,
        preprocess_report=report,
    )


# ---------------------------------------------------------------------------
# checkpointing


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_checkpoint(runtime: Runtime, path, metrics: dict | None = None):
    """Write a self-contained checkpoint directory: weights, ontology,
    vocabulary, and a manifest binding them together with content hashes."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "ontology.json").write_text(runtime.ontology.to_json())
    (path / "vocab.json").write_text(json.dumps(runtime.model.vocabulary.to_dict(), indent=0))
    torch.save(runtime.model.state_dict(), path / "weights.pt")
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "model_config": runtime.model.config.as_dict(),
        "context_window": runtime.context_window,
        "hashes": {
            "ontology.json": _sha256(path / "ontology.json"),
            "vocab.json": _sha256(path / "vocab.json"),
            "weights.pt": _sha256(path / "weights.pt"),
        },
        "metrics": metrics or {},
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_checkpoint(path) -> Runtime:
    path = Path(path)
    manifest_file = path / "manifest.json"
    if not manifest_file.exists():
        raise CheckpointMismatch(f"no manifest.json under {path}")
    manifest = json.loads(manifest_file.read_text())
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointMismatch(f"unsupported checkpoint format {manifest.get('format')}")
    for name, expected in manifest["hashes"].items():
        actual = _sha256(path / name)
        if actual != expected:
            raise CheckpointMismatch(f"{name} hash mismatch: manifest {expected}, file {actual}")
    ontology = parse_ontology(json.loads((path / "ontology.json").read_text()))
    vocabulary = Vocabulary.from_dict(json.loads((path / "vocab.json").read_text()))
    config = ModelConfig.from_dict(manifest["model_config"])
    model = DstModel(ontology, vocabulary, config)
    try:
        model.load_state_dict(torch.load(path / "weights.pt", weights_only=True))
    except RuntimeError as exc:
        raise CheckpointMismatch(f"weights do not fit the declared config: {exc}") from exc
    model.eval()
    return Runtime(model=model, ontology=ontology, context_window=manifest.get("context_window"))


# ---------------------------------------------------------------------------
# domain expansion


def _mentions(dialogue: Dialogue, domain: str) -> bool:
    return domain in dialogue.mentioned_domains()


def stratified_sample(dialogues: list[Dialogue], fraction: float, seed: int) -> list[Dialogue]:
    """Dialogue-level sample, stratified by the set of domains a
    dialogue mentions so single- and multi-domain dialogues both appear."""
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    rng = random.Random(seed)
    groups: dict[frozenset, list[Dialogue]] = {}
    for dialogue in sorted(dialogues, key=lambda d: d.dialogue_id):
        groups.setdefault(frozenset(dialogue.mentioned_domains()), []).append(dialogue)
    sample: list[Dialogue] = []
    for key in sorted(groups, key=sorted):
        members = groups[key]
        k = round(fraction * len(members))
        sample.extend(rng.sample(members, k))
    if not sample:
        largest = max(groups.values(), key=len)
        sample.append(rng.choice(largest))
    return sorted(sample, key=lambda d: d.dialogue_id)


def domain_expansion(
    corpus: Corpus,
    ontology: Ontology,
    target_domain: str,
    fraction: float = 0.1,
    mode: str = "finetune",
    seed: int = 0,
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
    finetune_lr: float | None = None,
) -> dict:
    """Measure how well the tracker picks up a new domain from a small
    dialogue sample.

    scratch: train only on the sample, target-domain questions only.
    finetune: pretrain on dialogues not mentioning the target (questions
    of the other domains), then continue on the sample; ``finetune_lr``,
    when set, lowers the step size of the continuation so the sample
    does not wash out what pretraining learned.
    Reported joint accuracy covers target-domain pairs on test dialogues
    that mention the target.
    """
    if target_domain not in ontology.domains:
        raise ValidationError(f"unknown domain {target_domain!r}")
    if mode not in ("scratch", "finetune"):
        raise ValidationError(f"mode must be scratch or finetune, got {mode!r}")
    base_cfg = train_config or TrainConfig()

    train_dialogues = corpus.split_dialogues("train")
    target_pool = [d for d in train_dialogues if _mentions(d, target_domain)]
    other_pool = [d for d in train_dialogues if not _mentions(d, target_domain)]
    if not target_pool:
        raise ValidationError(f"no training dialogues mention {target_domain!r}")
    sample = stratified_sample(target_pool, fraction, seed)

    other_domains = tuple(d for d in ontology.domains if d != target_domain)
    model = None
    if mode == "finetune" and other_pool:
        pre_cfg = TrainConfig.from_dict({**base_cfg.as_dict(), "domains": other_domains})
        pre_corpus = Corpus(
            corpus.dialogues,
            {
                "train": [d.dialogue_id for d in other_pool],
                "dev": [i for i in corpus.splits.get("dev", [])],
            },
            corpus.vocabulary,
        )
        model = train(pre_corpus, ontology, model_config, pre_cfg).runtime.model

    target_overrides: dict = {"domains": (target_domain,)}
    if mode == "finetune" and finetune_lr is not None:
        target_overrides["lr"] = finetune_lr
    target_cfg = TrainConfig.from_dict({**base_cfg.as_dict(), **target_overrides})
    sample_corpus = Corpus(
        corpus.dialogues,
        {"train": [d.dialogue_id for d in sample], "dev": []},
        corpus.vocabulary,
    )
    result = train(sample_corpus, ontology, model_config, target_cfg, model=model)

    test_dialogues = [
        d for d in corpus.split_dialogues("test") if _mentions(d, target_domain)
    ] or [d for d in corpus.split_dialogues("dev") if _mentions(d, target_domain)]
    pairs = [p for p in ontology.pairs() if p[0] == target_domain]
    report = result.runtime.evaluate(test_dialogues, pairs=pairs)
    return {
        "mode": mode,
        "domain": target_domain,
        "fraction": fraction,
        "seed": seed,
        "sample_size": len(sample),
        "test_dialogues": len(test_dialogues),
        "joint": report.joint,
        "slot": report.slot,
    }
