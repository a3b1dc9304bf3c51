"""Uniform classifier interface: builtin reference backends plus adapters.

Builtin kinds (oracle, majority, uniform_random, noisy_oracle,
endpoint_adversary) exist so the metrics pipeline is testable without any
trained model. External classifiers attach through three adapters:

- ``file``:       a cached prediction file (line-delimited JSON rows),
- ``subprocess``: a child process speaking a rid-matched JSON-lines protocol,
- ``http``:       POST {url}/v1/predict with order-aligned batches.

Randomized builtin backends derive all randomness from a stable 64-bit hash
of (seed, example_id, span), so results never depend on batch composition,
batch order, or worker count. External backends receive realized text only;
gold labels and span indices are never sent over the wire.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import os
import random
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, replace
from typing import Mapping, NamedTuple, Sequence

import httpx

from .corpus import (
    ENTAILED,
    TASK_CHOICE,
    TASK_ENTAILMENT,
    ChoiceInstance,
    EntailmentInstance,
    Example,
    SpanGold,
    SpanRef,
    TaskInstance,
    enumerate_spans,
    realize_span,
)

log = logging.getLogger("coherencekit.backends")

NORMALIZATION_TOLERANCE = 1e-6

BUILTIN_KINDS = ("oracle", "majority", "uniform_random", "noisy_oracle", "endpoint_adversary")
ADAPTER_KINDS = ("file", "subprocess", "http")
GOLD_BACKED_KINDS = ("oracle", "noisy_oracle", "endpoint_adversary")


class BackendError(RuntimeError):
    """A backend failed to produce usable predictions."""


@dataclass(frozen=True)
class Distribution:
    """Classifier posterior over classes; must be normalized, never renormalized here."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.probs) < 2:
            raise BackendError(f"distribution needs at least 2 classes, got {len(self.probs)}")
        if any(p < 0.0 for p in self.probs):
            raise BackendError(f"negative probability in {self.probs}")
        total = sum(self.probs)
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise BackendError(f"probabilities sum to {total:.8f}, not 1 within {NORMALIZATION_TOLERANCE}")

    def argmax(self) -> int:
        best = 0
        for i in range(1, len(self.probs)):
            if self.probs[i] > self.probs[best]:
                best = i
        return best


class PredictionKey(NamedTuple):
    example_id: str
    span: SpanRef


GoldMaps = Mapping[str, Mapping[SpanRef, SpanGold]]


@dataclass(frozen=True)
class BackendConfig:
    kind: str
    majority_class: str | None = None
    seed: int = 0
    flip_prob: float = 0.0
    sharpness: float = 0.9
    path: str | None = None
    command: str | None = None
    url: str | None = None
    timeout: float = 30.0
    retries: int = 3
    max_in_flight: int = 4
    renormalize: bool = False

    @classmethod
    def parse(cls, spec: str, *, seed: int = 0, renormalize: bool = False) -> "BackendConfig":
        """Parse a CLI backend spec like ``oracle``, ``file:preds.jsonl``,
        ``majority:not_entailed``, ``noisy_oracle:seed=3,flip_prob=0.1,sharpness=0.6``,
        ``subprocess:python -m pyadapter --stdio`` or ``http:http://host:8100``."""
        kind, _, arg = spec.partition(":")
        kind = kind.strip()
        base = cls(kind=kind, seed=seed, renormalize=renormalize)
        if kind in ("oracle", "endpoint_adversary"):
            if arg:
                raise ValueError(f"backend kind {kind!r} takes no argument")
            return base
        if kind == "majority":
            if not arg:
                raise ValueError("majority backend needs a class, e.g. majority:not_entailed")
            return replace(base, majority_class=arg)
        if kind == "uniform_random":
            return replace(base, seed=int(arg)) if arg else base
        if kind == "noisy_oracle":
            params = {}
            if arg:
                for pair in arg.split(","):
                    key, _, value = pair.partition("=")
                    params[key.strip()] = value.strip()
            unknown = set(params) - {"seed", "flip_prob", "sharpness"}
            if unknown:
                raise ValueError(f"unknown noisy_oracle parameters: {sorted(unknown)}")
            return replace(
                base,
                seed=int(params.get("seed", seed)),
                flip_prob=float(params.get("flip_prob", 0.0)),
                sharpness=float(params.get("sharpness", 0.9)),
            )
        if kind == "file":
            if not arg:
                raise ValueError("file backend needs a path, e.g. file:preds.jsonl")
            return replace(base, path=arg)
        if kind == "subprocess":
            if not arg:
                raise ValueError("subprocess backend needs a command")
            return replace(base, command=arg)
        if kind == "http":
            if not arg:
                raise ValueError("http backend needs a URL")
            return replace(base, url=arg.rstrip("/"))
        raise ValueError(f"unknown backend kind {kind!r}")

    def validate(self) -> None:
        if self.kind not in BUILTIN_KINDS + ADAPTER_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if not 0.0 <= self.sharpness <= 1.0:
            raise ValueError(f"sharpness must be in [0, 1], got {self.sharpness}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


class Backend:
    """Handle answering predict_batch; obtain one via open_backend()."""

    # None means safe for any number of concurrent predict_batch calls
    max_concurrency: int | None = None

    def predict_batch(
        self, items: Sequence[tuple[PredictionKey, TaskInstance]]
    ) -> list[Distribution]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self) -> "Backend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _stable_hash(seed: int, key: PredictionKey, domain: str) -> int:
    digest = hashlib.blake2b(
        f"{domain}|{seed}|{key.example_id}|{key.span.start}|{key.span.end}".encode(),
        digest_size=8,
    ).digest()
    return int.from_bytes(digest, "big")


def _gold_for(gold_maps: GoldMaps, key: PredictionKey) -> SpanGold:
    try:
        return gold_maps[key.example_id][key.span]
    except KeyError as exc:
        raise BackendError(
            f"gold-backed backend has no gold for example {key.example_id!r} "
            f"span ({key.span.start}, {key.span.end})"
        ) from exc


def _gold_class(gold: SpanGold) -> int | None:
    """0-based class the gold demands, or None for non-confident expectations."""
    if gold.task == TASK_ENTAILMENT:
        return 1 if gold.label == ENTAILED else 0
    if gold.confident_on is None:
        return None
    return gold.confident_on - 1


def _one_hot(index: int, n: int) -> Distribution:
    return Distribution(tuple(1.0 if i == index else 0.0 for i in range(n)))


def _uniform(n: int) -> Distribution:
    return Distribution(tuple(1.0 / n for _ in range(n)))


class OracleBackend(Backend):
    def __init__(self, gold_maps: GoldMaps):
        self._gold = gold_maps

    def predict_batch(self, items):
        out = []
        for key, instance in items:
            cls = _gold_class(_gold_for(self._gold, key))
            out.append(_uniform(instance.num_classes) if cls is None else _one_hot(cls, instance.num_classes))
        return out


class MajorityBackend(Backend):
    def __init__(self, majority_class: str):
        self._class = majority_class

    def _index(self, instance: TaskInstance) -> int:
        if instance.task == TASK_ENTAILMENT:
            if self._class in ("entailed", "not_entailed"):
                return 1 if self._class == "entailed" else 0
        try:
            index = int(self._class) - 1
        except ValueError:
            raise BackendError(f"majority class {self._class!r} is not valid for {instance.task}")
        if not 0 <= index < instance.num_classes:
            raise BackendError(f"majority class {self._class!r} out of range")
        return index

    def predict_batch(self, items):
        return [_one_hot(self._index(instance), instance.num_classes) for _, instance in items]


class UniformRandomBackend(Backend):
    def __init__(self, seed: int):
        self._seed = seed

    def predict_batch(self, items):
        out = []
        for key, instance in items:
            rng = random.Random(_stable_hash(self._seed, key, "uniform_random"))
            raw = [rng.expovariate(1.0) for _ in range(instance.num_classes)]
            total = sum(raw)
            out.append(Distribution(tuple(x / total for x in raw)))
        return out


class NoisyOracleBackend(Backend):
    """Soft oracle: gold class gets ``sharpness`` mass, the rest is uniform.

    With probability ``flip_prob`` (keyed per span) the peak moves to another
    class. Spans whose gold expectation is non-confidence stay uniform.
    """

    def __init__(self, gold_maps: GoldMaps, seed: int, flip_prob: float, sharpness: float):
        self._gold = gold_maps
        self._seed = seed
        self._flip_prob = flip_prob
        self._sharpness = sharpness

    def predict_batch(self, items):
        out = []
        for key, instance in items:
            n = instance.num_classes
            cls = _gold_class(_gold_for(self._gold, key))
            if cls is None:
                out.append(_uniform(n))
                continue
            rng = random.Random(_stable_hash(self._seed, key, "noisy_oracle"))
            if self._flip_prob > 0 and rng.random() < self._flip_prob:
                others = [i for i in range(n) if i != cls]
                cls = others[rng.randrange(len(others))]
            rest = (1.0 - self._sharpness) / (n - 1)
            out.append(Distribution(tuple(self._sharpness if i == cls else rest for i in range(n))))
        return out


class EndpointAdversaryBackend(Backend):
    """Gold-perfect on full spans, fixed positive answer on proper sub-spans.

    Entailment sub-spans always get probability 1.0 on "entailed"; choice
    sub-spans get probability 1.0 on choice 1. Maximal accuracy with minimal
    coherence, as a deterministic fixture.
    """

    def __init__(self, gold_maps: GoldMaps):
        self._gold = gold_maps
        self._full: dict[str, SpanRef] = {
            ex_id: SpanRef(1, max(span.end for span in gold_map))
            for ex_id, gold_map in gold_maps.items()
        }

    def predict_batch(self, items):
        out = []
        for key, instance in items:
            n = instance.num_classes
            if self._full.get(key.example_id) == key.span:
                cls = _gold_class(_gold_for(self._gold, key))
                out.append(_uniform(n) if cls is None else _one_hot(cls, n))
            elif instance.task == TASK_ENTAILMENT:
                out.append(Distribution((0.0, 1.0)))
            else:
                out.append(_one_hot(0, n))
        return out


def _distribution_from_row(probs, *, renormalize: bool, where: str) -> Distribution:
    if not isinstance(probs, list) or not all(isinstance(p, (int, float)) for p in probs):
        raise BackendError(f"{where}: probs must be a list of numbers")
    values = [float(p) for p in probs]
    if renormalize:
        total = sum(values)
        if total <= 0:
            raise BackendError(f"{where}: cannot renormalize non-positive mass")
        values = [v / total for v in values]
    try:
        return Distribution(tuple(values))
    except BackendError as exc:
        raise BackendError(f"{where}: {exc}") from exc


class FileBackend(Backend):
    """Serves predictions from a cached file; fully loaded and validated at open."""

    def __init__(self, path: str, *, renormalize: bool = False):
        self._path = path
        self._rows: dict[PredictionKey, Distribution] = {}
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise BackendError(f"cannot open prediction file {path!r}: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                where = f"{path}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise BackendError(f"{where}: malformed JSON: {exc.msg}") from exc
                try:
                    key = PredictionKey(str(obj["id"]), SpanRef(int(obj["start"]), int(obj["end"])))
                    probs = obj["probs"]
                except (KeyError, TypeError, ValueError) as exc:
                    raise BackendError(f"{where}: rows need id/start/end/probs") from exc
                if key in self._rows:
                    raise BackendError(f"{where}: duplicate prediction for {_key_name(key)}")
                self._rows[key] = _distribution_from_row(probs, renormalize=renormalize, where=where)

    def predict_batch(self, items):
        out = []
        for key, instance in items:
            dist = self._rows.get(key)
            if dist is None:
                raise BackendError(f"prediction file {self._path!r} has no row for {_key_name(key)}")
            out.append(dist)
        return out


def _key_name(key: PredictionKey) -> str:
    return f"id={key.example_id!r} span=({key.span.start}, {key.span.end})"


def instance_to_wire(instance: TaskInstance) -> dict:
    """Wire form of a realized instance: text only, no gold, no span indices."""
    if isinstance(instance, EntailmentInstance):
        return {
            "task": TASK_ENTAILMENT,
            "premise": list(instance.premise),
            "hypothesis": instance.hypothesis,
        }
    assert isinstance(instance, ChoiceInstance)
    return {"task": TASK_CHOICE, "choices": [list(c) for c in instance.choices]}


class SubprocessBackend(Backend):
    """Line-protocol child process; strictly one in-flight pipeline.

    Requests are ``{"rid": int, ...instance fields...}`` written to the
    child's stdin, one per line; responses ``{"rid": int, "probs": [...]}``
    may arrive in any order and are matched back by rid.
    """

    max_concurrency = 1

    def __init__(self, command: str, *, renormalize: bool = False):
        self._command = command
        self._renormalize = renormalize
        self._lock = threading.Lock()
        self._next_rid = 0
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise BackendError(f"cannot spawn backend command {command!r}: {exc}") from exc

    def predict_batch(self, items):
        with self._lock:
            rids = []
            for key, instance in items:
                rid = self._next_rid
                self._next_rid += 1
                rids.append(rid)
                request = {"rid": rid} | instance_to_wire(instance)
                try:
                    self._proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
                except (BrokenPipeError, OSError) as exc:
                    raise BackendError(f"backend process pipe broke: {exc}") from exc
            try:
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise BackendError(f"backend process pipe broke: {exc}") from exc

            pending = set(rids)
            responses: dict[int, Distribution] = {}
            while pending:
                line = self._proc.stdout.readline()
                if not line:
                    raise BackendError(
                        f"backend process exited with {len(pending)} responses outstanding"
                    )
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise BackendError(f"malformed response line from backend: {line!r}") from exc
                rid = obj.get("rid")
                if rid not in pending:
                    raise BackendError(f"backend answered unknown rid {rid!r}")
                if "probs" not in obj:
                    detail = obj.get("error", "no probs in response")
                    raise BackendError(f"backend error for rid {rid}: {detail}")
                responses[rid] = _distribution_from_row(
                    obj["probs"], renormalize=self._renormalize, where=f"rid {rid}"
                )
                pending.remove(rid)
            return [responses[rid] for rid in rids]

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()
        else:
            self._proc.wait()


class HttpBackend(Backend):
    """POST {url}/v1/predict with order-aligned instance batches."""

    def __init__(self, url: str, *, timeout: float = 30.0, retries: int = 3,
                 max_in_flight: int = 4, renormalize: bool = False,
                 backoff_base: float = 0.25):
        self.max_concurrency = max_in_flight
        self._url = url.rstrip("/") + "/v1/predict"
        self._retries = retries
        self._renormalize = renormalize
        self._backoff_base = backoff_base
        self._client = httpx.Client(timeout=timeout)

    def predict_batch(self, items):
        body = {"instances": [instance_to_wire(instance) for _, instance in items]}
        content = json.dumps(body, ensure_ascii=False).encode("utf-8")
        last_error = "unknown error"
        for attempt in range(self._retries + 1):
            if attempt:
                delay = self._backoff_base * (2 ** (attempt - 1))
                log.debug("retrying %s after %.2fs (%s)", self._url, delay, last_error)
                time.sleep(delay)
            try:
                response = self._client.post(
                    self._url, content=content, headers={"content-type": "application/json"}
                )
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
                continue
            if response.status_code // 100 != 2:
                last_error = f"HTTP {response.status_code}: {response.text[:200]}"
                continue
            try:
                rows = response.json()["probs"]
            except (ValueError, KeyError) as exc:
                raise BackendError(f"malformed response from {self._url}: {exc}") from exc
            if not isinstance(rows, list) or len(rows) != len(items):
                raise BackendError(
                    f"{self._url} returned {len(rows) if isinstance(rows, list) else '?'} rows "
                    f"for {len(items)} instances"
                )
            return [
                _distribution_from_row(row, renormalize=self._renormalize, where=f"{self._url} row {i}")
                for i, row in enumerate(rows)
            ]
        raise BackendError(f"{self._url} failed after {self._retries + 1} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()


def open_backend(config: BackendConfig, gold_maps: GoldMaps | None = None) -> Backend:
    """Open a backend handle; gold maps are required for gold-backed kinds."""
    config.validate()
    if config.kind in GOLD_BACKED_KINDS and gold_maps is None:
        raise ValueError(f"backend kind {config.kind!r} requires gold access")
    if config.kind == "oracle":
        return OracleBackend(gold_maps)
    if config.kind == "majority":
        return MajorityBackend(config.majority_class)
    if config.kind == "uniform_random":
        return UniformRandomBackend(config.seed)
    if config.kind == "noisy_oracle":
        return NoisyOracleBackend(gold_maps, config.seed, config.flip_prob, config.sharpness)
    if config.kind == "endpoint_adversary":
        return EndpointAdversaryBackend(gold_maps)
    if config.kind == "file":
        return FileBackend(config.path, renormalize=config.renormalize)
    if config.kind == "subprocess":
        return SubprocessBackend(config.command, renormalize=config.renormalize)
    return HttpBackend(
        config.url,
        timeout=config.timeout,
        retries=config.retries,
        max_in_flight=config.max_in_flight,
        renormalize=config.renormalize,
    )


# ---------------------------------------------------------------------------
# prediction engine


def prediction_items(examples: Sequence[Example]) -> list[tuple[PredictionKey, TaskInstance]]:
    """Every (example, enumerated span) pair in deterministic dataset order.

    Discarded choice examples (no positive choice) are excluded from
    coherence evaluation, so no predictions are requested for them.
    """
    items = []
    for ex in examples:
        if ex.task == TASK_CHOICE and ex.positive is None:
            continue
        for span in enumerate_spans(ex.n_units):
            items.append((PredictionKey(ex.id, span), realize_span(ex, span)))
    return items


def collect_predictions(
    backend: Backend,
    examples: Sequence[Example],
    *,
    batch_size: int = 32,
    workers: int = 1,
) -> dict[PredictionKey, Distribution]:
    """Run the backend over every sub-span of every example.

    Batches are fixed-size slices of the deterministic item order; the worker
    count is capped by the backend's declared concurrency and never changes
    the result. Each returned distribution is checked against the instance's
    class count.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    items = prediction_items(examples)
    batches = [items[i : i + batch_size] for i in range(0, len(items), batch_size)]
    if backend.max_concurrency is not None:
        workers = min(workers, backend.max_concurrency)

    if workers <= 1 or len(batches) <= 1:
        batch_results = [backend.predict_batch(batch) for batch in batches]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            batch_results = list(pool.map(backend.predict_batch, batches))

    predictions: dict[PredictionKey, Distribution] = {}
    for batch, dists in zip(batches, batch_results):
        if len(dists) != len(batch):
            raise BackendError(f"backend returned {len(dists)} results for {len(batch)} instances")
        for (key, instance), dist in zip(batch, dists):
            if len(dist.probs) != instance.num_classes:
                raise BackendError(
                    f"backend returned {len(dist.probs)} classes for {_key_name(key)} "
                    f"(expected {instance.num_classes})"
                )
            predictions[key] = dist
    return predictions


def cache_predictions(
    backend: Backend,
    examples: Sequence[Example],
    out_path: str,
    *,
    batch_size: int = 32,
    workers: int = 1,
) -> int:
    """Write one prediction row per (example, span) to a prediction file.

    Rows are written in deterministic dataset order. On backend failure the
    partial file is removed. Returns the number of rows written.
    """
    predictions = collect_predictions(backend, examples, batch_size=batch_size, workers=workers)
    tmp_path = out_path + ".partial"
    try:
        with open(tmp_path, "w", encoding="utf-8") as fh:
            for ex in examples:
                for span in enumerate_spans(ex.n_units):
                    key = PredictionKey(ex.id, span)
                    if key not in predictions:
                        continue
                    row = {"id": ex.id, "start": span.start, "end": span.end,
                           "probs": list(predictions[key].probs)}
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        os.replace(tmp_path, out_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return len(predictions)
