"""Prompt templates, reply parsing, and evolve-region splicing.

Templates ship as asset files, one per stage, pinned by golden tests and a
checksum manifest. Rendering is literal placeholder substitution only; word
limits inside the templates are instructions to the model, never validated
against replies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

STAGES = ("analysis", "gen1", "gen2", "error", "metacognition")

PLACEHOLDERS: dict[str, frozenset[str]] = {
    "analysis": frozenset({"problem"}),
    "gen1": frozenset({"problem", "init_code", "init_eval", "code"}),
    "gen2": frozenset({"metacognition", "init_code", "init_eval", "code"}),
    "error": frozenset({"code_str", "str_error"}),
    "metacognition": frozenset({"thoughts", "errors", "code"}),
}

# gen1/gen2 share the code-format contract as their system role; the other
# stages each have their own role text.
_SYSTEM_FILES = {
    "analysis": "system_analysis.txt",
    "gen1": "system_generation.txt",
    "gen2": "system_generation.txt",
    "error": "system_error.txt",
    "metacognition": "system_metacognition.txt",
}

EVOLVE_START = "#EVOLVE-START"
EVOLVE_END = "#EVOLVE-END"

EMPTY_HISTORY = "(no history)"
NO_ERRORS = "(none)"
DIGEST_CHAR_LIMIT = 2000


class PromptError(ValueError):
    pass


class ExtractionError(ValueError):
    """Reply could not be parsed into (thought, code); feeds the repair loop."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class ExtractedArtifact:
    thought: str
    code: str
    entry_name: str


def _asset(name: str) -> str:
    return (resources.files("mela.assets.prompts") / name).read_text(encoding="utf-8")


def template_body(stage: str) -> str:
    if stage not in STAGES:
        raise PromptError(f"unknown stage {stage!r}")
    return _asset(f"{stage}.txt")


def system_role(stage: str) -> str:
    if stage not in STAGES:
        raise PromptError(f"unknown stage {stage!r}")
    return _asset(_SYSTEM_FILES[stage])


def render(stage: str, bindings: dict[str, str]) -> tuple[str, str]:
    """Render one stage into (system_role, user_prompt).

    Bindings must cover the stage's placeholder set exactly; substitution is
    literal text replacement, so template braces like the ``{}`` brackets
    instruction survive untouched.
    """
    expected = PLACEHOLDERS.get(stage)
    if expected is None:
        raise PromptError(f"unknown stage {stage!r}")
    missing = sorted(expected - bindings.keys())
    extra = sorted(bindings.keys() - expected)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing placeholders: {', '.join(missing)}")
        if extra:
            parts.append(f"unexpected placeholders: {', '.join(extra)}")
        raise PromptError(f"{stage}: " + "; ".join(parts))
    body = template_body(stage)
    for name in sorted(expected):
        body = body.replace("{" + name + "}", bindings[name])
    return system_role(stage), body


_FENCE_RE = re.compile(r"```(?:python)?[ \t]*\n(.*?)```", re.DOTALL)
_DEF_RE = re.compile(r"^\s*def\s+([A-Za-z_]\w*)\s*\(", re.MULTILINE)
_THOUGHT_LABEL_RE = re.compile(r"^\s*thought process\s*:\s*", re.IGNORECASE)


def _first_brace_block(text: str) -> str | None:
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return text[start + 1 : i]
    return None


def extract_artifacts(reply: str) -> ExtractedArtifact:
    """Parse a model reply into its thought block and fenced code.

    The thought is the first balanced brace block (an optional leading
    "thought process:" label is stripped); the code is the first fenced
    block; the entry name comes from the first function definition inside.
    Each failure mode raises a distinct ExtractionError.
    """
    match = _FENCE_RE.search(reply)
    if match is None:
        raise ExtractionError("missing code fence")
    code = match.group(1)
    # The thought block lives outside the code fence.
    prose = reply[: match.start()] + reply[match.end() :]
    thought = _first_brace_block(prose)
    if thought is None:
        raise ExtractionError("missing thought block")
    thought = _THOUGHT_LABEL_RE.sub("", thought).strip()
    if not thought:
        raise ExtractionError("empty thought block")
    def_match = _DEF_RE.search(code)
    if def_match is None:
        raise ExtractionError("no function definition in code block")
    return ExtractedArtifact(thought=thought, code=code, entry_name=def_match.group(1))


def evolve_region(code: str) -> str:
    """The text strictly between the evolve markers."""
    _, region, _ = _split_on_markers(code)
    return region


def splice_evolve_region(seed_code: str, new_region: str) -> str:
    """Replace the marked region, leaving every byte outside it unchanged."""
    prefix, _, suffix = _split_on_markers(seed_code)
    return prefix + new_region + suffix


def _split_on_markers(code: str) -> tuple[str, str, str]:
    starts = code.count(EVOLVE_START)
    ends = code.count(EVOLVE_END)
    if starts != 1 or ends != 1:
        raise PromptError(
            f"expected exactly one {EVOLVE_START}/{EVOLVE_END} pair, "
            f"found {starts} start / {ends} end markers"
        )
    start = code.index(EVOLVE_START) + len(EVOLVE_START)
    end = code.index(EVOLVE_END)
    if end < start:
        raise PromptError("evolve markers out of order")
    return code[:start], code[start:end], code[end:]


def _truncate(text: str, limit: int) -> str:
    if len(text) <= limit:
        return text
    return text[:limit] + "\n[truncated]"


def build_history_digest(population, limit: int = DIGEST_CHAR_LIMIT) -> str:
    """Render (thought, fitness) pairs sorted by fitness ascending.

    Only individuals with a fitness participate; deterministic and bounded,
    for the {init_eval} and {thoughts} placeholders.
    """
    scored = [ind for ind in population if ind.fitness is not None]
    if not scored:
        return EMPTY_HISTORY
    scored.sort(key=lambda ind: (ind.fitness, ind.id))
    lines = []
    for ind in scored:
        lines.append(f"fitness={ind.fitness!r}")
        lines.append(f"thought: {ind.thought}" if ind.thought else "thought: (none)")
    return _truncate("\n".join(lines), limit)


def build_error_digest(population, limit: int = DIGEST_CHAR_LIMIT) -> str:
    """Render every recorded error message, for the {errors} placeholder."""
    lines = []
    for ind in population:
        for err in ind.errors:
            lines.append(err.message)
    if not lines:
        return NO_ERRORS
    return _truncate("\n".join(lines), limit)


def verify_manifest() -> list[str]:
    """Compare shipped prompt assets against the checksum manifest."""
    import hashlib

    manifest = _asset("MANIFEST.sha256")
    mismatches = []
    for line in manifest.splitlines():
        if not line.strip():
            continue
        digest, name = line.split()
        actual = hashlib.sha256(_asset(name).encode("utf-8")).hexdigest()
        if actual != digest:
            mismatches.append(name)
    return mismatches
