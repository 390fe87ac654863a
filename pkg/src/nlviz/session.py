"""Interactive refinement sessions: one dataset, up to three models,
append-only query chain, per-model fan-out per turn.

Refinements always resend the whole chain; providers keep no conversation
state, so completion and chat models behave identically across turns.
Sessions persist as append-only JSONL files, one record per turn.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .chart import ChartExtract, chart_from_wire, chart_to_wire
from .errors import (
    BadDataset,
    GatewayError,
    NoBaseQuery,
    SandboxUnavailable,
    TooManyModels,
)
from .gateway import ModelParams, ModelSpec, Provider
from .pipeline import DEFAULT_TIMEOUT_S, ExecError, run_completion
from .prompts import (
    PromptTemplates,
    QueryChain,
    append_refinement,
    build_prompt,
    default_templates,
    shape_request,
)
from .sandbox import SandboxClient
from .tabular import DatasetProfile, load_delimited, profile_columns

MAX_MODELS = 3


@dataclass(frozen=True)
class ModelResult:
    model_name: str
    script: str = ""
    chart: ChartExtract | None = None
    image_ref: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "script": self.script,
            "chart": chart_to_wire(self.chart) if self.chart else None,
            "image_ref": self.image_ref,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelResult":
        chart = data.get("chart")
        return cls(
            model_name=data["model_name"],
            script=data.get("script", ""),
            chart=chart_from_wire(chart) if chart else None,
            image_ref=data.get("image_ref"),
            error=data.get("error"),
        )


@dataclass(frozen=True)
class Turn:
    effective_query: str
    results: dict[str, ModelResult]

    def to_dict(self) -> dict:
        return {
            "effective_query": self.effective_query,
            "results": {name: r.to_dict() for name, r in self.results.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Turn":
        return cls(
            effective_query=data["effective_query"],
            results={k: ModelResult.from_dict(v) for k, v in data["results"].items()},
        )


@dataclass
class SessionState:
    session_id: str
    dataset_name: str
    profile: DatasetProfile
    models: list[ModelSpec]
    chain: QueryChain = field(default_factory=lambda: QueryChain(base_query=""))
    turns: list[Turn] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "dataset": self.dataset_name,
            "models": [
                {"provider_id": m.provider_id, "model_name": m.model_name, "mode": m.mode}
                for m in self.models
            ],
            "base_query": self.chain.base_query,
            "refinements": list(self.chain.refinements),
            "turns": [t.to_dict() for t in self.turns],
        }


class SessionEngine:
    """Owns the pipeline wiring and the per-session write locks."""

    def __init__(
        self,
        datasets_dir: str | Path,
        provider: Provider,
        sandbox: SandboxClient,
        state_dir: str | Path | None = None,
        templates: PromptTemplates | None = None,
        params: ModelParams | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        want_images: bool = False,
    ) -> None:
        self.datasets_dir = Path(datasets_dir)
        self.provider = provider
        self.sandbox = sandbox
        self.state_dir = Path(state_dir) if state_dir else None
        self.templates = templates or default_templates()
        self.params = params or ModelParams()
        self.timeout_s = timeout_s
        self.want_images = want_images
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- datasets -------------------------------------------------------------

    def list_datasets(self) -> list[str]:
        return sorted(p.stem for p in self.datasets_dir.glob("*.csv"))

    def _load_profile(self, dataset_ref: str) -> DatasetProfile:
        path = self.datasets_dir / f"{dataset_ref}.csv"
        if not path.is_file():
            raise BadDataset(f"unknown dataset {dataset_ref!r}")
        return profile_columns(load_delimited(path, name=dataset_ref))

    # -- lifecycle ------------------------------------------------------------

    def create_session(self, dataset_ref: str, models: list[ModelSpec]) -> SessionState:
        if not models:
            raise TooManyModels("select at least one model")
        if len(models) > MAX_MODELS:
            raise TooManyModels(f"at most {MAX_MODELS} models per session")
        profile = self._load_profile(dataset_ref)
        session = SessionState(
            session_id=uuid.uuid4().hex[:12],
            dataset_name=dataset_ref,
            profile=profile,
            models=list(models),
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        self._persist_header(session)
        return session

    def get_session(self, session_id: str) -> SessionState:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise BadDataset(f"unknown session {session_id!r}")

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[session_id]

    # -- turns ----------------------------------------------------------------

    def post_query(self, session_id: str, text: str) -> Turn:
        session = self.get_session(session_id)
        with self._lock_for(session_id):
            if not session.turns:
                session.chain = QueryChain(base_query=text)
            else:
                session.chain = append_refinement(session.chain, text)
            return self._run_turn(session)

    def refine_query(self, session_id: str, text: str) -> Turn:
        session = self.get_session(session_id)
        with self._lock_for(session_id):
            if not session.turns:
                raise NoBaseQuery("refinement before any base query")
            session.chain = append_refinement(session.chain, text)
            return self._run_turn(session)

    def _run_turn(self, session: SessionState) -> Turn:
        effective = session.chain.effective_query()
        prompt = build_prompt(session.profile, session.chain, self.templates)

        # Fan out per model; one model's failure never hides another's result.
        with ThreadPoolExecutor(max_workers=len(session.models)) as pool:
            results = list(pool.map(
                lambda m: self._run_model(prompt, m, session), session.models
            ))
        turn = Turn(
            effective_query=effective,
            results={r.model_name: r for r in results},
        )
        session.turns.append(turn)
        self._persist_turn(session, turn)
        return turn

    def _run_model(self, prompt, model: ModelSpec, session: SessionState) -> ModelResult:
        request = shape_request(prompt, model, self.templates, self.params)
        try:
            completion = self.provider.submit(request, model)
        except GatewayError as exc:
            return ModelResult(model_name=model.model_name, error=f"provider: {exc}")
        try:
            script, result, image_path = run_completion(
                prompt, completion, session.profile.table, self.sandbox,
                self.timeout_s, want_image=self.want_images,
            )
        except SandboxUnavailable as exc:
            return ModelResult(model_name=model.model_name, error=f"sandbox: {exc}")
        if isinstance(result, ExecError):
            return ModelResult(
                model_name=model.model_name, script=script.full_text,
                error=f"{result.kind}: {result.message}",
            )
        return ModelResult(
            model_name=model.model_name, script=script.full_text,
            chart=result, image_ref=self._register_image(image_path),
        )

    def _register_image(self, image_path: str | None) -> str | None:
        """Move a runner-produced image under the state dir; the ref is the
        filename served by GET /images/{ref}."""
        if image_path is None or self.state_dir is None:
            return None
        src = Path(image_path)
        if not src.is_file():
            return None
        images_dir = self.state_dir / "images"
        images_dir.mkdir(parents=True, exist_ok=True)
        ref = f"{uuid.uuid4().hex[:16]}{src.suffix or '.png'}"
        dest = images_dir / ref
        dest.write_bytes(src.read_bytes())
        try:
            src.unlink()
        except OSError:
            pass
        return ref

    # -- persistence ----------------------------------------------------------

    def _session_file(self, session: SessionState) -> Path | None:
        if self.state_dir is None:
            return None
        return self.state_dir / f"{session.session_id}.jsonl"

    def _persist_header(self, session: SessionState) -> None:
        path = self._session_file(session)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "kind": "session",
            "session_id": session.session_id,
            "dataset": session.dataset_name,
            "models": [
                {"provider_id": m.provider_id, "model_name": m.model_name, "mode": m.mode}
                for m in session.models
            ],
        }
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")

    def _persist_turn(self, session: SessionState, turn: Turn) -> None:
        path = self._session_file(session)
        if path is None:
            return
        record = {"kind": "turn", **turn.to_dict()}
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def load_session_file(self, path: str | Path) -> SessionState:
        """Rebuild a session from its append-only record."""
        lines = Path(path).read_text("utf-8").splitlines()
        if not lines:
            raise BadDataset(f"empty session file {path}")
        header = json.loads(lines[0])
        models = [ModelSpec(**m) for m in header["models"]]
        session = SessionState(
            session_id=header["session_id"],
            dataset_name=header["dataset"],
            profile=self._load_profile(header["dataset"]),
            models=models,
        )
        queries: list[str] = []
        for line in lines[1:]:
            record = json.loads(line)
            if record.get("kind") != "turn":
                continue
            turn = Turn.from_dict(record)
            session.turns.append(turn)
            queries.append(turn.effective_query)
        if queries:
            session.chain = _chain_from_effective(queries)
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session


def _chain_from_effective(effective_queries: list[str]) -> QueryChain:
    """Recover the chain from successive effective queries; each turn's query
    extends the previous one."""
    base = effective_queries[0]
    chain = QueryChain(base_query=base)
    prev = base
    for eff in effective_queries[1:]:
        suffix = eff[len(prev):].lstrip() if eff.startswith(prev) else eff
        if suffix:
            chain = append_refinement(chain, suffix)
        prev = eff
    return chain
