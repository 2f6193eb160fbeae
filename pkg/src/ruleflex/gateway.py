"""Prompt rendering, provider calls, and generation-run capture.

A provider is anything with `complete(messages, config, run_index) -> text`.
The HTTP provider speaks the chat-completion wire shape; the replay provider
serves recorded responses keyed by the sha256 of the rendered prompt, which
makes the whole generation pipeline deterministic and testable offline.
"""

from __future__ import annotations

import concurrent.futures
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .canon import content_id
from .errors import CredentialMissing, FixtureMissing, ProviderError, UnknownStrategy

INSTRUCTION_FOLLOWING = "instruction_following"
IMITATION = "imitation"
CHAIN_OF_THOUGHT = "chain_of_thought"
FEW_SHOT = "few_shot"

STRATEGY_KINDS = (INSTRUCTION_FOLLOWING, IMITATION, CHAIN_OF_THOUGHT, FEW_SHOT)

# Worked exemplar embedded in the few-shot prompt: a complete rule set for a
# neighbouring domain, in exactly the output shape the model should imitate.
FRAUD_EXAMPLE_BLOCK = """allowedTransactionAmount = 50000
transactionType = 'Daily'
currency = 'USD'
fraudDetected = 'NO'

def fraud_detection_rule (transaction_amount, transaction_type, transaction_currency):
    if (transaction_amount <= allowedTransactionAmount) and (transaction_currency != currency):
        fraudDetected == 'POSSIBLE'
    else:
        if (transaction_amount > allowedTransactionAmount) and (transaction_type != transactionType):
            fraudDetected == 'YES'
        else:
            fraudDetected == 'NO'"""

_SME_ROLE_LINE = "You are subject-matter expert (SME)."

_FEW_SHOT_TEMPLATE = (
    _SME_ROLE_LINE
    + """ You are helping a software development team to build software for your domain. You do this by providing rule sets that are executable in Python code, using variables to determine actions/outcomes. Rule set formatting:
\"\"\"\"\"\" The variables used must be collected by digital systems. For example:
Problem domain: Financial services
Objective: Fraud detection
{example_block}
\"\"\"\"\"\"
Problem domain: {domain}
Objective: {objective}"""
)

_IMITATION_TEMPLATE = (
    _SME_ROLE_LINE
    + """
You have spent your career working in the {domain} domain and know its decision rules first-hand. Acting in that role, provide the complete logic rule sets you would apply, written as Python functions over variables that digital systems can collect.
Problem domain: {domain}
Objective: {objective}"""
)

_CHAIN_OF_THOUGHT_TEMPLATE = """Provide logic rule sets, executable as Python code over variables that digital systems can collect, for the problem below.
Problem domain: {domain}
Objective: {objective}
Let's think step by step: first identify the relevant domain-specific variables, then reason about the threshold for each variable, and only then write the rule sets."""

_INSTRUCTION_FOLLOWING_TEMPLATE = """Follow these steps to produce logic rule sets for the problem below.
1. List the domain-specific variables a digital system can collect for this domain.
2. For each variable, decide the thresholds or values that change the outcome.
3. Write each rule set as one Python function using only if/else conditionals whose conditions combine comparisons with 'and'.
4. Assign the outcome variable in every branch.
Problem domain: {domain}
Objective: {objective}"""


@dataclass(frozen=True)
class PromptStrategy:
    kind: str
    template: str


DEFAULT_STRATEGIES: dict[str, PromptStrategy] = {
    INSTRUCTION_FOLLOWING: PromptStrategy(INSTRUCTION_FOLLOWING, _INSTRUCTION_FOLLOWING_TEMPLATE),
    IMITATION: PromptStrategy(IMITATION, _IMITATION_TEMPLATE),
    CHAIN_OF_THOUGHT: PromptStrategy(CHAIN_OF_THOUGHT, _CHAIN_OF_THOUGHT_TEMPLATE),
    FEW_SHOT: PromptStrategy(FEW_SHOT, _FEW_SHOT_TEMPLATE),
}

_PLACEHOLDER_RE = re.compile(r"\{(domain|objective|example_block)\}")


def render_prompt(strategy: str | PromptStrategy, domain: str, objective: str) -> list[dict]:
    """Render a strategy to the single-turn message sequence sent per call."""
    if isinstance(strategy, str):
        if strategy not in DEFAULT_STRATEGIES:
            raise UnknownStrategy(strategy)
        strategy = DEFAULT_STRATEGIES[strategy]
    elif strategy.kind not in STRATEGY_KINDS:
        raise UnknownStrategy(strategy.kind)
    text = strategy.template.format(domain=domain, objective=objective, example_block=FRAUD_EXAMPLE_BLOCK)
    leftover = _PLACEHOLDER_RE.search(text)
    if leftover:
        raise ValueError(f"template left placeholder {leftover.group(0)} unresolved")
    return [{"role": "user", "content": text}]


def prompt_key(messages: list[dict]) -> str:
    """Fixture key: sha256 over the canonical JSON of the message sequence."""
    return content_id(messages)


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    temperature: float = 1.0
    max_response_tokens: int = 3000
    credential_env: str = "RULEFLEX_API_KEY"

    def __post_init__(self):
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if self.max_response_tokens <= 0:
            raise ValueError("max_response_tokens must be positive")

    def snapshot(self) -> dict:
        """Serializable view; the credential itself is never written out."""
        return {
            "endpoint": self.endpoint,
            "model": self.model,
            "temperature": self.temperature,
            "max_response_tokens": self.max_response_tokens,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ProviderConfig":
        return cls(
            endpoint=doc.get("endpoint", cls.endpoint),
            model=doc.get("model", cls.model),
            temperature=doc.get("temperature", 1.0),
            max_response_tokens=doc.get("max_response_tokens", 3000),
            credential_env=doc.get("credential_env", "RULEFLEX_API_KEY"),
        )


class HttpChatProvider:
    """Chat-completion HTTP client: one retry on transport failure, none on
    application (non-2xx) errors, 120 s timeout."""

    requires_credential = True

    def __init__(self, timeout: float = 120.0, session: requests.Session | None = None):
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, messages: list[dict], config: ProviderConfig, run_index: int = 0) -> str:
        key = os.environ.get(config.credential_env)
        if not key:
            raise CredentialMissing(f"environment variable {config.credential_env} is not set")
        body = {
            "model": config.model,
            "temperature": config.temperature,
            "max_tokens": config.max_response_tokens,
            "messages": messages,
        }
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        last_exc: Exception | None = None
        for attempt in range(2):
            try:
                resp = self.session.post(config.endpoint, json=body, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code // 100 != 2:
                raise ProviderError(resp.status_code, resp.text)
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        raise ProviderError(0, f"transport failure after retry: {last_exc}")


class ReplayProvider:
    """Deterministic stand-in serving recorded responses from fixture files.

    Lookup order: `<sha256>_r<run_index>.txt` (per-repetition recordings for
    consistency experiments), then `<sha256>.txt`. A miss is a hard error —
    replay mode never falls through to a live call.
    """

    requires_credential = False

    def __init__(self, fixtures_dir: str | Path):
        self.fixtures_dir = Path(fixtures_dir)

    def complete(self, messages: list[dict], config: ProviderConfig, run_index: int = 0) -> str:
        key = prompt_key(messages)
        for name in (f"{key}_r{run_index}.txt", f"{key}.txt"):
            path = self.fixtures_dir / name
            if path.exists():
                return path.read_text(encoding="utf-8")
        raise FixtureMissing(key)


_REPLAY_EPOCH = "1970-01-01T00:00:00+00:00"


def _now_iso() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S+00:00", time.gmtime())


@dataclass
class GenerationRun:
    """One prompt -> response interaction, with its parse results attached."""

    run_index: int
    strategy_kind: str
    config: dict                      # provider snapshot, credential redacted
    prompt_messages: list[dict]
    response_text: str | None
    started_at: str
    finished_at: str
    domain: str = ""
    objective: str = ""
    error: dict | None = None
    ruleset_ids: list[str] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def prompt_sha256(self) -> str:
        return prompt_key(self.prompt_messages)

    def run_ref(self) -> dict:
        """Stable reference embeddable in rule-set provenance before the run
        document itself is hashed (avoids id circularity)."""
        return {"prompt_sha256": self.prompt_sha256, "run_index": self.run_index, "model": self.config["model"]}

    def to_wire(self) -> dict:
        return {
            "run_index": self.run_index,
            "strategy": self.strategy_kind,
            "config": self.config,
            "prompt": self.prompt_messages,
            "prompt_sha256": self.prompt_sha256,
            "domain": self.domain,
            "objective": self.objective,
            "response": self.response_text,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "error": self.error,
            "parse": {"ruleset_ids": self.ruleset_ids, "diagnostics": self.diagnostics},
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "GenerationRun":
        return cls(
            run_index=doc["run_index"],
            strategy_kind=doc["strategy"],
            config=doc["config"],
            prompt_messages=doc["prompt"],
            response_text=doc.get("response"),
            started_at=doc["started_at"],
            finished_at=doc["finished_at"],
            domain=doc.get("domain", ""),
            objective=doc.get("objective", ""),
            error=doc.get("error"),
            ruleset_ids=doc.get("parse", {}).get("ruleset_ids", []),
            diagnostics=doc.get("parse", {}).get("diagnostics", []),
        )


def generate(
    provider,
    config: ProviderConfig,
    strategy: str | PromptStrategy,
    domain: str,
    objective: str,
    repeat: int,
    workspace=None,
    max_in_flight: int = 4,
) -> list[GenerationRun]:
    """Fan out `repeat` independent single-prompt calls and parse each
    response immediately.

    Failed calls are recorded as runs carrying the error; the other
    repetitions still happen. With a workspace attached, every parsed rule
    set and every run document is persisted before this returns. Replay runs
    get fixed timestamps so their documents are byte-reproducible.
    """
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    if provider.requires_credential and not os.environ.get(config.credential_env):
        raise CredentialMissing(f"environment variable {config.credential_env} is not set")
    messages = render_prompt(strategy, domain, objective)
    kind = strategy if isinstance(strategy, str) else strategy.kind
    deterministic = not provider.requires_credential

    def call(i: int) -> GenerationRun:
        started = _REPLAY_EPOCH if deterministic else _now_iso()
        try:
            text = provider.complete(messages, config, run_index=i)
            error = None
        except ProviderError as exc:
            text = None
            error = {"status": exc.status, "body": exc.body[:500]}
        finished = _REPLAY_EPOCH if deterministic else _now_iso()
        return GenerationRun(
            run_index=i,
            strategy_kind=kind,
            config=config.snapshot(),
            prompt_messages=messages,
            response_text=text,
            started_at=started,
            finished_at=finished,
            domain=domain,
            objective=objective,
            error=error,
        )

    with concurrent.futures.ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        runs = list(pool.map(call, range(repeat)))

    from .codeparse import parse_response  # deferred: avoids a module cycle
    from .model import Provenance

    for run in runs:
        if run.response_text is None:
            continue
        registry = workspace.registry if workspace is not None else None
        if registry is None:
            from .model import default_registry

            registry = default_registry()
        outcome_spec = workspace.outcome_spec if workspace is not None else None
        parsed = parse_response(
            run.response_text,
            registry,
            outcome_spec=outcome_spec,
            domain=domain,
            objective=objective,
            provenance=Provenance.generated(run.run_ref()),
        )
        run.diagnostics = [d.to_json() for d in parsed.diagnostics]
        if workspace is not None:
            workspace.save_registry()
            run.ruleset_ids = [workspace.store("ruleset", rs.to_wire()) for rs in parsed.rulesets]
        else:
            run.ruleset_ids = [rs.content_id() for rs in parsed.rulesets]
    if workspace is not None:
        for run in runs:
            workspace.store("run", run.to_wire())
    return runs
