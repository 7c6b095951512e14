"""Per-class semantic neighbor graphs from a batched LLM pipeline.

The vocabulary is split into batches, each batch is rendered into one
deterministic prompt asking for a JSON object mapping class names to
semantic neighbors chosen strictly from the vocabulary, and the responses
are merged and post-filtered (out-of-vocabulary, self, duplicate, and
ambiguous names dropped) into a per-class neighbor graph over label
indices.

Two providers are available: a live HTTP provider with retry/backoff, and
a fixture provider that replays canned responses keyed by prompt hash,
which is the default for tests and offline runs.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Protocol

import requests

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 20
DEFAULT_MAX_NEIGHBORS = 5

ENDPOINT_ENV = "CUEKIT_LLM_ENDPOINT"
API_KEY_ENV = "CUEKIT_LLM_API_KEY"

DROP_REASONS = ("oov", "self", "duplicate", "ambiguous")


class ProviderError(Exception):
    """Base class for provider failures."""


class MissingFixtureError(ProviderError):
    """Fixture directory has no response for this prompt."""


class RetryExhaustedError(ProviderError):
    """Live provider failed more times than the retry limit allows."""


class MalformedPayloadError(ProviderError):
    """Live provider returned a transport payload we cannot interpret."""


@dataclass
class NeighborGraph:
    """Sorted, duplicate-free neighbor index lists, one per class."""

    classes: list[str]
    neighbors: list[list[int]]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        num_classes = len(self.classes)
        if len(self.neighbors) != num_classes:
            raise ValueError(
                f"{len(self.neighbors)} neighbor lists for {num_classes} classes"
            )
        for cls, neigh in enumerate(self.neighbors):
            if any(v < 0 or v >= num_classes for v in neigh):
                raise ValueError(f"class {cls} has a neighbor index outside [0, {num_classes})")
            if cls in neigh:
                raise ValueError(f"class {cls} lists itself as a neighbor")
            if sorted(set(neigh)) != list(neigh):
                raise ValueError(f"class {cls} neighbor list is not sorted and duplicate-free")

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "neighbors": [list(n) for n in self.neighbors], "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, doc: dict) -> "NeighborGraph":
        return cls(
            classes=list(doc["classes"]),
            neighbors=[[int(i) for i in row] for row in doc["neighbors"]],
            meta=dict(doc.get("meta", {})),
        )


def save_graph(path: str | Path, graph: NeighborGraph) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_graph(path: str | Path) -> NeighborGraph:
    return NeighborGraph.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class RawLlmResponse:
    """One batch response: raw text plus the extracted name mapping."""

    text: str
    parsed: dict[str, list[str]]
    parse_failed: bool = False


@dataclass
class DropRecord:
    cls: str
    dropped_name: str
    reason: str

    def to_dict(self) -> dict:
        return {"class": self.cls, "dropped_name": self.dropped_name, "reason": self.reason}


@dataclass
class FilterReport:
    """Everything the post-filter removed, plus classes no response covered."""

    drops: list[DropRecord] = field(default_factory=list)
    uncovered: list[str] = field(default_factory=list)

    def to_json_list(self) -> list[dict]:
        return [d.to_dict() for d in self.drops]


def batch_labels(class_names: list[str], batch_size: int) -> list[list[str]]:
    """Consecutive order-preserving batches covering every class once."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    return [list(class_names[i : i + batch_size]) for i in range(0, len(class_names), batch_size)]


def render_prompt(batch: list[str], full_vocabulary: list[str], max_neighbors: int) -> str:
    """Deterministic instruction template for one batch.

    Embeds the candidate vocabulary, the classes to annotate, and the
    neighbor budget, and requires a single JSON object in response.
    """
    if not batch:
        raise ValueError("batch must contain at least one class name")
    missing = [name for name in batch if name not in full_vocabulary]
    if missing:
        raise ValueError(f"batch names not in the vocabulary: {missing}")
    vocab = ", ".join(full_vocabulary)
    targets = ", ".join(batch)
    return (
        "You are annotating semantic similarity between category names.\n"
        f"Candidate vocabulary (the only allowed answers): {vocab}\n"
        f"For each of the following categories: {targets}\n"
        f"list up to {max_neighbors} categories from the candidate vocabulary that are "
        "semantically closest to it. Select semantic neighbors strictly from the candidate "
        "vocabulary, never invent new names, and never include the category itself.\n"
        "Respond with exactly one JSON object mapping each category name to an array of "
        "neighbor names, and nothing else."
    )


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def extract_first_json_object(text: str) -> Optional[dict]:
    """First top-level JSON object in the text, tolerating surrounding prose."""
    decoder = json.JSONDecoder()
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            start = text.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            return obj
        start = text.find("{", start + 1)
    return None


def _coerce_name_list(value: object) -> list[str]:
    if isinstance(value, str):
        return [value]
    if isinstance(value, list):
        return [v for v in value if isinstance(v, str)]
    return []


def parse_response(text: str) -> RawLlmResponse:
    """Extract the class -> neighbor-names mapping from raw response text."""
    obj = extract_first_json_object(text)
    if obj is None:
        return RawLlmResponse(text=text, parsed={}, parse_failed=True)
    parsed = {str(key): _coerce_name_list(value) for key, value in obj.items()}
    return RawLlmResponse(text=text, parsed=parsed, parse_failed=False)


class LlmProvider(Protocol):
    name: str
    model_id: str

    def complete(self, prompt: str) -> str: ...


class FixtureProvider:
    """Replays canned responses stored as <sha256(prompt)>.txt files."""

    name = "fixture"

    def __init__(self, fixture_dir: str | Path, model_id: str = "fixture"):
        self.fixture_dir = Path(fixture_dir)
        self.model_id = model_id

    def path_for(self, prompt: str) -> Path:
        return self.fixture_dir / f"{prompt_hash(prompt)}.txt"

    def store(self, prompt: str, response_text: str) -> Path:
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        path = self.path_for(prompt)
        path.write_text(response_text, encoding="utf-8")
        return path

    def complete(self, prompt: str) -> str:
        path = self.path_for(prompt)
        if not path.exists():
            raise MissingFixtureError(
                f"no fixture for prompt hash {prompt_hash(prompt)} in {self.fixture_dir}"
            )
        return path.read_text(encoding="utf-8")


class LiveProvider:
    """HTTP provider: POST {model, prompt, temperature: 0} with retry/backoff."""

    name = "live"

    TRANSIENT = (requests.ConnectionError, requests.Timeout)

    def __init__(
        self,
        endpoint: Optional[str] = None,
        model_id: str = "",
        api_key: Optional[str] = None,
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
        timeout: float = 60.0,
        session: Optional[requests.Session] = None,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV, "")
        if not self.endpoint:
            raise ValueError(f"live provider needs an endpoint (flag or ${ENDPOINT_ENV})")
        self.model_id = model_id
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self.timeout = timeout
        self.session = session or requests.Session()
        self._sleep = sleep

    def complete(self, prompt: str) -> str:
        body = {"model": self.model_id, "prompt": prompt, "temperature": 0}
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self.session.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout
                )
                if resp.status_code >= 500:
                    raise requests.ConnectionError(f"server error {resp.status_code}")
                resp.raise_for_status()
                return self._extract_text(resp.json())
            except self.TRANSIENT as err:
                last_error = err
                if attempt < self.max_retries:
                    delay = self.backoff_seconds * (2**attempt)
                    logger.warning("transient provider failure (%s); retrying in %.1fs", err, delay)
                    self._sleep(delay)
        raise RetryExhaustedError(
            f"provider failed {self.max_retries + 1} times; last error: {last_error}"
        )

    @staticmethod
    def _extract_text(payload: object) -> str:
        # Accept the common response shapes behind one interface.
        if isinstance(payload, dict):
            if isinstance(payload.get("text"), str):
                return payload["text"]
            if isinstance(payload.get("completion"), str):
                return payload["completion"]
            choices = payload.get("choices")
            if isinstance(choices, list) and choices:
                first = choices[0]
                if isinstance(first, dict):
                    message = first.get("message")
                    if isinstance(message, dict) and isinstance(message.get("content"), str):
                        return message["content"]
                    if isinstance(first.get("text"), str):
                        return first["text"]
        raise MalformedPayloadError(f"cannot find response text in payload: {payload!r:.200}")


def query_provider(prompt: str, provider: LlmProvider) -> RawLlmResponse:
    """Send one prompt and parse the reply; transport errors propagate."""
    return parse_response(provider.complete(prompt))


def _normalize(name: str) -> str:
    return name.strip().lower()


def filter_and_align(
    parsed_responses: Iterable[tuple[str, list[str]]] | dict[str, list[str]],
    class_names: list[str],
    max_neighbors: Optional[int] = None,
    meta: Optional[dict] = None,
) -> tuple[NeighborGraph, FilterReport]:
    """Merge raw name mappings into an index graph, dropping bad entries.

    Names match classes case-insensitively after trimming whitespace; names
    whose normalized form matches several classes are ambiguous and dropped,
    as are out-of-vocabulary names, self-references, and duplicates.  Every
    class absent from the responses gets an empty list and a coverage
    warning.  Filtering is total: no response content can make it fail.
    """
    if isinstance(parsed_responses, dict):
        pairs = list(parsed_responses.items())
    else:
        pairs = list(parsed_responses)

    norm_index: dict[str, list[int]] = {}
    for idx, name in enumerate(class_names):
        norm_index.setdefault(_normalize(name), []).append(idx)

    def resolve(name: str) -> tuple[Optional[int], str]:
        hits = norm_index.get(_normalize(name), [])
        if not hits:
            return None, "oov"
        if len(hits) > 1:
            return None, "ambiguous"
        return hits[0], ""

    report = FilterReport()
    accepted: dict[int, list[int]] = {}
    covered: set[int] = set()
    for key, names in pairs:
        if not isinstance(key, str):
            report.drops.append(DropRecord(cls=str(key), dropped_name=str(key), reason="oov"))
            continue
        cls_idx, fail = resolve(key)
        if cls_idx is None:
            report.drops.append(DropRecord(cls=key, dropped_name=key, reason=fail))
            continue
        covered.add(cls_idx)
        bucket = accepted.setdefault(cls_idx, [])
        for name in names:
            if not isinstance(name, str):
                continue
            target, fail = resolve(name)
            if target is None:
                report.drops.append(DropRecord(cls=class_names[cls_idx], dropped_name=name, reason=fail))
            elif target == cls_idx:
                report.drops.append(DropRecord(cls=class_names[cls_idx], dropped_name=name, reason="self"))
            elif target in bucket:
                report.drops.append(DropRecord(cls=class_names[cls_idx], dropped_name=name, reason="duplicate"))
            else:
                bucket.append(target)

    neighbors: list[list[int]] = []
    for idx in range(len(class_names)):
        bucket = accepted.get(idx, [])
        if max_neighbors is not None:
            bucket = bucket[:max_neighbors]  # budget applies in response order
        neighbors.append(sorted(bucket))
        if idx not in covered:
            report.uncovered.append(class_names[idx])
    if report.uncovered:
        logger.warning(
            "no response covered %d class(es): %s",
            len(report.uncovered),
            ", ".join(report.uncovered[:10]),
        )
    graph = NeighborGraph(classes=list(class_names), neighbors=neighbors, meta=meta or {})
    return graph, report


def build_neighbor_graph(
    class_names: list[str],
    provider: LlmProvider,
    batch_size: int = DEFAULT_BATCH_SIZE,
    max_neighbors: int = DEFAULT_MAX_NEIGHBORS,
    concurrency: int = 1,
) -> tuple[NeighborGraph, FilterReport]:
    """Run the whole pipeline: batch, prompt, query, parse, filter, align."""
    batches = batch_labels(class_names, batch_size)
    prompts = [render_prompt(batch, class_names, max_neighbors) for batch in batches]

    if concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            responses = list(pool.map(lambda p: query_provider(p, provider), prompts))
    else:
        responses = [query_provider(prompt, provider) for prompt in prompts]

    pairs: list[tuple[str, list[str]]] = []
    for response in responses:
        if response.parse_failed:
            logger.warning("response could not be parsed as JSON; skipping batch")
            continue
        pairs.extend(response.parsed.items())

    meta = {
        "provider": provider.name,
        "model_id": provider.model_id,
        "batch_size": batch_size,
        "max_neighbors": max_neighbors,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    return filter_and_align(pairs, class_names, max_neighbors=max_neighbors, meta=meta)
