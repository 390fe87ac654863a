"""Two-part prompt construction and provider-shape framing.

A prompt has a docstring-style description listing the dataset columns and
the user request verbatim, plus a code stub that loads the dataset into the
tabular handle. The stub is byte-identical to the prefix later prepended to
the generated script, so the provider's continuation splices cleanly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .errors import EmptyRefinement, TemplateError
from .tabular import DatasetProfile

ALLOWED_PLACEHOLDERS = frozenset({"columns", "query", "version", "handle"})

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class QueryChain:
    """A base query plus ordered refinements; value semantics throughout."""

    base_query: str
    refinements: tuple[str, ...] = ()

    def effective_query(self) -> str:
        parts = [self.base_query, *self.refinements]
        return " ".join(p for p in parts if p != "")


def append_refinement(chain: QueryChain, text: str) -> QueryChain:
    if text == "":
        raise EmptyRefinement("refinement text must be non-empty")
    return replace(chain, refinements=chain.refinements + (text,))


@dataclass(frozen=True)
class EngineeredPrompt:
    description_part: str
    code_part: str
    substitutions: dict[str, str] = field(default_factory=dict)

    def full_prompt(self) -> str:
        return self.description_part + self.code_part


@dataclass(frozen=True)
class PromptTemplates:
    description: str
    code: str
    chat_system: str
    version_tag: str = "3.10"
    handle: str = "df"

    def __post_init__(self) -> None:
        for label, text in (("description", self.description), ("code", self.code)):
            unknown = set(_PLACEHOLDER_RE.findall(text)) - ALLOWED_PLACEHOLDERS
            if unknown:
                raise TemplateError(
                    f"{label} template has unknown placeholders: {sorted(unknown)}"
                )


def _read_default(name: str) -> str:
    return resources.files("nlviz").joinpath(f"data/templates/{name}").read_text("utf-8")


def default_templates(version_tag: str = "3.10", handle: str = "df") -> PromptTemplates:
    return PromptTemplates(
        description=_read_default("description.txt"),
        code=_read_default("code.txt"),
        chat_system=_read_default("chat_system.txt").strip(),
        version_tag=version_tag,
        handle=handle,
    )


def load_templates(directory: str | Path, version_tag: str = "3.10",
                   handle: str = "df") -> PromptTemplates:
    """Load template config files from a directory; validated at startup."""
    directory = Path(directory)
    return PromptTemplates(
        description=(directory / "description.txt").read_text("utf-8"),
        code=(directory / "code.txt").read_text("utf-8"),
        chat_system=(directory / "chat_system.txt").read_text("utf-8").strip(),
        version_tag=version_tag,
        handle=handle,
    )


def _substitute(template: str, values: dict[str, str]) -> str:
    # Placeholders are bit-exact tokens; plain replacement, no format() escaping.
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def build_prompt(profile: DatasetProfile, chain: QueryChain,
                 templates: PromptTemplates | None = None) -> EngineeredPrompt:
    """Pure function of (profile, chain, template config)."""
    templates = templates or default_templates()
    columns = ", ".join(f"'{name}'" for name in profile.column_names)
    query = chain.effective_query()
    values = {
        "columns": columns,
        "query": query,
        "version": templates.version_tag,
        "handle": templates.handle,
    }
    return EngineeredPrompt(
        description_part=_substitute(templates.description, values),
        code_part=_substitute(templates.code, values),
        substitutions=values,
    )


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ProviderRequest:
    mode: str  # completion | chat
    prompt_text: str | None = None
    messages: tuple[ChatMessage, ...] = ()
    params: "ModelParams | None" = None

    def payload_text(self) -> str:
        """User-visible content, identical across modes."""
        if self.mode == "completion":
            return self.prompt_text or ""
        return "".join(m.content for m in self.messages if m.role == "user")


def shape_request(prompt: EngineeredPrompt, model: "ModelSpec",
                  templates: PromptTemplates | None = None,
                  params: "ModelParams | None" = None) -> ProviderRequest:
    """Frame the same engineered content for a completion or chat provider."""
    from .gateway import ModelParams  # local import to keep modules acyclic

    templates = templates or default_templates()
    params = params or ModelParams()
    content = prompt.full_prompt()
    if model.mode == "completion":
        return ProviderRequest(mode="completion", prompt_text=content, params=params)
    if model.mode == "chat":
        return ProviderRequest(
            mode="chat",
            messages=(
                ChatMessage(role="system", content=templates.chat_system),
                ChatMessage(role="user", content=content),
            ),
            params=params,
        )
    raise ValueError(f"unknown provider mode {model.mode!r}")
