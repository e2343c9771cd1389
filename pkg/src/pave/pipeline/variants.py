"""Pipeline variants.

Each variant runs a fixed sequence of stage calls for one example and returns
the committed answer together with its audit trace:

- baseline: draft from the raw context
- importance_weighting: weighted decomposition, then a draft from the weighted facts
- support_scoring: draft, score and optional revision, all against the raw context
- pave: decomposition, draft, score against the facts, optional revision

Stage calls go through the retry policy; a parse failure gets one extra call
with the same prompt, tallied as a retry rather than a stage call.
"""

import logging
from datetime import datetime, timezone
from typing import Callable, List, Optional, Tuple, Type, TypeVar

from ..ai.retry_helpers import RetryPolicy, complete_with_retry
from ..ai.service import AIService, CompletionRequest
from ..core.config import PipelineConfig
from ..core.exceptions import (
    AIServiceError,
    BackendExhaustedError,
    DecompositionFailedError,
    DraftFailedError,
    ParseError,
    PipelineError,
)
from ..core.models import (
    AuditTrace,
    Draft,
    EvidenceContext,
    FactList,
    FinalAnswer,
    FinalizationDecision,
    Question,
    Stage,
    SupportAssessment,
    TaskKind,
    Variant,
    gate,
)
from ..data.dataset import ExampleRecord
from ..models.run_result import RunOutcome
from ..prompts.parsers import ParseOutcome, parse_draft, parse_fact_list, parse_score
from ..prompts.renderers import PromptRenderer, fingerprint

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _now() -> datetime:
    return datetime.now(timezone.utc)


class _StageCaller:
    """Backend access for a single example, with call accounting."""

    def __init__(
        self,
        backend: AIService,
        policy: RetryPolicy,
        example_id: str,
        store_prompts: bool = False,
    ):
        self.backend = backend
        self.policy = policy
        self.example_id = example_id
        self.store_prompts = store_prompts
        self.backend_calls = 0
        self.retry_calls = 0
        self.fingerprints: List[str] = []
        self.prompts: List[str] = []
        self.stage_errors: List[Tuple[str, str]] = []

    def _send(self, stage: Stage, request: CompletionRequest) -> str:
        try:
            return complete_with_retry(self.backend, request, self.policy).text
        except AIServiceError as e:
            raise BackendExhaustedError(
                f"{stage.value} call failed after retries: {e}",
                stage=stage.value,
                example_id=self.example_id,
            ) from e

    def call(self, stage: Stage, request: CompletionRequest) -> str:
        """One logical stage call."""
        digest = fingerprint(request)
        self.fingerprints.append(digest)
        if self.store_prompts:
            self.prompts.append(f"{request.system_text}\n\n{request.user_text}")
        logger.debug(f"[{self.example_id}] {stage.value} call ({digest[:12]})")
        self.backend_calls += 1
        return self._send(stage, request)

    def call_parsed(
        self,
        stage: Stage,
        request: CompletionRequest,
        parser: Callable[[str], ParseOutcome[T]],
        failure: Type[PipelineError],
    ) -> T:
        """Stage call whose output must parse, with one format retry."""
        text = self.call(stage, request)
        try:
            outcome = parser(text)
        except ParseError as e:
            self.stage_errors.append((stage.value, type(e).__name__))
            logger.warning(
                f"[{self.example_id}] {stage.value} output unusable ({e}); retrying once"
            )
            self.retry_calls += 1
            text = self._send(stage, request)
            try:
                outcome = parser(text)
            except ParseError as retry_error:
                raise failure(
                    f"{stage.value} output unusable after retry: {retry_error}",
                    stage=stage.value,
                    example_id=self.example_id,
                ) from retry_error

        for warning in outcome.warnings:
            logger.debug(f"[{self.example_id}] {stage.value}: {warning}")
        return outcome.value


class ValidationPipeline:
    """Runs the configured variant over single examples."""

    def __init__(
        self,
        config: PipelineConfig,
        backend: AIService,
        renderer: Optional[PromptRenderer] = None,
        retry_policy: Optional[RetryPolicy] = None,
    ):
        """Initialize the pipeline.

        Args:
            config: Pipeline settings shared by every example
            backend: Completion backend
            renderer: Prompt renderer (default: built-in templates, config decoding)
            retry_policy: Backend retry policy (default: RetryPolicy())
        """
        self.config = config
        self.backend = backend
        self.renderer = renderer or PromptRenderer(
            temperature=config.temperature, seed=config.seed
        )
        self.retry_policy = retry_policy or RetryPolicy()

    def run(self, record: ExampleRecord) -> RunOutcome:
        """Run the configured variant on one dataset record."""
        runners = {
            Variant.BASELINE: self.run_baseline,
            Variant.IMPORTANCE_WEIGHTING: self.run_importance_weighting,
            Variant.SUPPORT_SCORING: self.run_support_scoring,
            Variant.PAVE: self.run_pave,
        }
        return runners[self.config.variant](
            record.question_value, record.context, record.task_kind
        )

    # ------------------------------------------------------------------
    # Variants
    # ------------------------------------------------------------------

    def run_pave(
        self, question: Question, context: EvidenceContext, task_kind: TaskKind = TaskKind.SPAN
    ) -> RunOutcome:
        """Decompose, draft from facts, score against facts, revise below tau.

        Raises:
            DecompositionFailedError: No facts after the format retry
            DraftFailedError: No draft or revised answer after the format retry
            BackendExhaustedError: Backend kept failing
        """
        self._require(Variant.PAVE)
        started_at = _now()
        caller = self._caller(question)

        facts = self._decompose(caller, question, context, weighted=False)
        draft = self._draft(caller, question, task_kind, facts=facts)
        support, final = self._score_and_revise(caller, question, draft, task_kind, facts=facts)
        return self._outcome(
            caller, question, Variant.PAVE, facts, draft, support, final, started_at
        )

    def run_baseline(
        self, question: Question, context: EvidenceContext, task_kind: TaskKind = TaskKind.SPAN
    ) -> RunOutcome:
        """Single draft call from the raw context."""
        self._require(Variant.BASELINE)
        started_at = _now()
        caller = self._caller(question)

        draft = self._draft(caller, question, task_kind, context=context)
        final = FinalAnswer(
            text=draft.answer, was_revised=False, backend_calls=caller.backend_calls
        )
        return self._outcome(
            caller, question, Variant.BASELINE, FactList(), draft, None, final, started_at
        )

    def run_support_scoring(
        self, question: Question, context: EvidenceContext, task_kind: TaskKind = TaskKind.SPAN
    ) -> RunOutcome:
        """Draft, score and revise against the raw context, without decomposition."""
        self._require(Variant.SUPPORT_SCORING)
        started_at = _now()
        caller = self._caller(question)

        draft = self._draft(caller, question, task_kind, context=context)
        support, final = self._score_and_revise(
            caller, question, draft, task_kind, context=context
        )
        return self._outcome(
            caller, question, Variant.SUPPORT_SCORING, FactList(), draft, support, final, started_at
        )

    def run_importance_weighting(
        self, question: Question, context: EvidenceContext, task_kind: TaskKind = TaskKind.SPAN
    ) -> RunOutcome:
        """Weighted decomposition and a draft from the weighted facts; no scoring."""
        self._require(Variant.IMPORTANCE_WEIGHTING)
        started_at = _now()
        caller = self._caller(question)

        facts = self._decompose(caller, question, context, weighted=True)
        draft = self._draft(caller, question, task_kind, facts=facts)
        final = FinalAnswer(
            text=draft.answer, was_revised=False, backend_calls=caller.backend_calls
        )
        return self._outcome(
            caller, question, Variant.IMPORTANCE_WEIGHTING, facts, draft, None, final, started_at
        )

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    def _require(self, variant: Variant) -> None:
        if self.config.variant != variant:
            raise ValueError(
                f"pipeline configured for {self.config.variant.value}, not {variant.value}"
            )

    def _caller(self, question: Question) -> _StageCaller:
        return _StageCaller(
            self.backend, self.retry_policy, question.id, store_prompts=self.config.store_prompts
        )

    def _decompose(
        self, caller: _StageCaller, question: Question, context: EvidenceContext, weighted: bool
    ) -> FactList:
        request = self.renderer.render_decompose(
            question, context, self.config.max_facts, weighted=weighted
        )
        facts = caller.call_parsed(
            Stage.DECOMPOSE,
            request,
            lambda text: parse_fact_list(text, weighted, self.config.max_facts),
            DecompositionFailedError,
        )
        logger.debug(f"[{question.id}] decomposed into {facts.n} fact(s)")
        return facts

    def _draft(
        self,
        caller: _StageCaller,
        question: Question,
        task_kind: TaskKind,
        facts: Optional[FactList] = None,
        context: Optional[EvidenceContext] = None,
    ) -> Draft:
        request = self.renderer.render_draft(
            question, facts=facts, context=context, task_kind=task_kind
        )
        return caller.call_parsed(Stage.DRAFT, request, parse_draft, DraftFailedError)

    def _score(
        self,
        caller: _StageCaller,
        question: Question,
        draft: Draft,
        facts: Optional[FactList],
        context: Optional[EvidenceContext],
    ) -> SupportAssessment:
        request = self.renderer.render_score(question, draft, facts=facts, context=context)
        support = parse_score(caller.call(Stage.SCORE, request))
        if not support.parse_ok:
            caller.stage_errors.append((Stage.SCORE.value, "UnparseableSupport"))
            logger.warning(f"[{question.id}] support score unparseable; treating as 0.0")
        return support

    def _score_and_revise(
        self,
        caller: _StageCaller,
        question: Question,
        draft: Draft,
        task_kind: TaskKind,
        facts: Optional[FactList] = None,
        context: Optional[EvidenceContext] = None,
    ) -> Tuple[SupportAssessment, FinalAnswer]:
        """Score the draft and revise while support stays below tau.

        The trace keeps the first score. With max_revisions=1 the revised
        answer is final and never re-scored.
        """
        tau = self.config.tau
        support = self._score(caller, question, draft, facts, context)
        current, current_support = draft, support
        revisions = 0

        while gate(current_support, tau) == FinalizationDecision.REVISE:
            logger.info(
                f"[{question.id}] support {current_support.score:.2f} < tau {tau:.2f}; revising"
            )
            request = self.renderer.render_revise(
                question,
                current,
                current_support,
                facts=facts,
                context=context,
                task_kind=task_kind,
            )
            current = caller.call_parsed(Stage.REVISE, request, parse_draft, DraftFailedError)
            revisions += 1
            if revisions >= self.config.max_revisions:
                break
            current_support = self._score(caller, question, current, facts, context)

        if not revisions:
            logger.info(
                f"[{question.id}] support {support.score:.2f} >= tau {tau:.2f}; keeping draft"
            )

        final = FinalAnswer(
            text=current.answer,
            was_revised=revisions > 0,
            backend_calls=caller.backend_calls,
            revisions=revisions,
        )
        return support, final

    def _outcome(
        self,
        caller: _StageCaller,
        question: Question,
        variant: Variant,
        facts: FactList,
        draft: Draft,
        support: Optional[SupportAssessment],
        final: FinalAnswer,
        started_at: datetime,
    ) -> RunOutcome:
        trace = AuditTrace(
            question_id=question.id,
            variant=variant,
            facts=facts,
            draft=draft,
            support=support,
            final=final,
            tau_used=self.config.tau,
            started_at=started_at,
            ended_at=_now(),
            prompt_fingerprints=tuple(caller.fingerprints),
            prompts=tuple(caller.prompts) if self.config.store_prompts else None,
        )
        return RunOutcome(
            final=final,
            trace=trace,
            stage_errors=list(caller.stage_errors),
            retry_calls=caller.retry_calls,
        )
