"""Unit tests for the pipeline variants."""

import pytest
from conftest import DRAFT_TEXT, FACTS_TEXT, REVISED_TEXT, WEIGHTED_FACTS_TEXT, make_record
from hypothesis import given, settings
from hypothesis import strategies as st

from pave.ai.scripted import ScriptedBackend
from pave.ai.service import AIService
from pave.core.config import PipelineConfig
from pave.core.exceptions import (
    BackendExhaustedError,
    DecompositionFailedError,
    DraftFailedError,
    ServerError,
)
from pave.core.models import (
    FinalizationDecision,
    Stage,
    TaskKind,
    Variant,
    stage_from_text,
    validate_trace,
)
from pave.pipeline.variants import ValidationPipeline


def scripted(score="SUPPORT: 0.9", **overrides):
    """Backend with one response per stage, overridable per stage."""
    script = {
        "decompose": [FACTS_TEXT],
        "draft": [DRAFT_TEXT],
        "score": [score] if isinstance(score, str) else list(score),
        "revise": [REVISED_TEXT],
    }
    script.update(overrides)
    return ScriptedBackend(by_stage=script)


def stages(backend):
    return [stage for stage, _ in backend.requests]


class AlwaysDown(AIService):
    """Backend whose every call fails with a retryable error."""

    def _complete(self, request):
        raise ServerError("503 Service Unavailable")

    def validate_config(self):
        return True


class TestPave:
    """Tests for the full pave variant."""

    def test_keep_path(self, question, context, fast_policy):
        """Test that a supported draft is kept after three calls."""
        backend = scripted()
        config = PipelineConfig(tau=0.7)
        outcome = ValidationPipeline(config, backend, retry_policy=fast_policy).run_pave(
            question, context
        )

        trace = outcome.trace
        assert outcome.final.text == "Paris"
        assert outcome.final.was_revised is False
        assert outcome.final.backend_calls == 3
        assert stages(backend) == [Stage.DECOMPOSE, Stage.DRAFT, Stage.SCORE]
        assert trace.facts.n == 2
        assert trace.support.score == pytest.approx(0.9)
        assert trace.decision == FinalizationDecision.KEEP
        assert len(trace.prompt_fingerprints) == 3
        assert trace.prompts is None
        assert outcome.clean
        assert validate_trace(trace, config) == []

    def test_revise_path(self, question, context, fast_policy):
        """Test that a weakly supported draft is revised once."""
        backend = scripted(score="Premise 2 is unrelated.\nSUPPORT: 0.2")
        config = PipelineConfig(tau=0.7)
        outcome = ValidationPipeline(config, backend, retry_policy=fast_policy).run_pave(
            question, context
        )

        assert outcome.final.text == "Paris, France"
        assert outcome.final.was_revised is True
        assert outcome.final.revisions == 1
        assert outcome.final.backend_calls == 4
        assert stages(backend)[-1] == Stage.REVISE
        assert outcome.trace.draft.answer == "Paris"
        assert outcome.trace.support.score == pytest.approx(0.2)
        assert validate_trace(outcome.trace, config) == []

    def test_score_at_tau_is_kept(self, question, context, fast_policy):
        """Test that the gate boundary is inclusive."""
        backend = scripted(score="SUPPORT: 0.70")
        outcome = ValidationPipeline(
            PipelineConfig(tau=0.7), backend, retry_policy=fast_policy
        ).run_pave(question, context)
        assert outcome.final.was_revised is False
        assert outcome.final.backend_calls == 3

    def test_scoring_sees_facts_not_passages(self, question, context, fast_policy):
        """Test that drafting and scoring are grounded in the decomposed facts."""
        backend = scripted()
        ValidationPipeline(PipelineConfig(), backend, retry_policy=fast_policy).run_pave(
            question, context
        )
        _, score_request = backend.requests[2]
        assert "[1] The Eiffel Tower is in Paris." in score_request.user_text
        assert "[Passage 1]" not in score_request.user_text

    def test_unparseable_score_forces_revision(self, question, context, fast_policy):
        """Test that an unreadable score counts as 0.0."""
        backend = scripted(score="I cannot tell.")
        outcome = ValidationPipeline(
            PipelineConfig(tau=0.1), backend, retry_policy=fast_policy
        ).run_pave(question, context)
        assert outcome.trace.support.parse_ok is False
        assert outcome.final.was_revised is True
        assert ("score", "UnparseableSupport") in outcome.stage_errors
        assert not outcome.clean

    def test_decomposition_fails_after_retry(self, question, context, fast_policy):
        """Test that two empty decompositions abort the example."""
        backend = scripted(decompose=["", ""])
        pipeline = ValidationPipeline(PipelineConfig(), backend, retry_policy=fast_policy)
        with pytest.raises(DecompositionFailedError) as excinfo:
            pipeline.run_pave(question, context)
        assert excinfo.value.stage == "decompose"
        assert excinfo.value.example_id == "q1"
        assert backend.call_count == 2

    def test_format_retry_recovers(self, question, context, fast_policy):
        """Test that one bad decomposition is retried without counting as a stage call."""
        backend = scripted(decompose=["Sorry, here you go:", FACTS_TEXT])
        outcome = ValidationPipeline(
            PipelineConfig(), backend, retry_policy=fast_policy
        ).run_pave(question, context)
        assert outcome.final.backend_calls == 3
        assert outcome.retry_calls == 1
        assert outcome.stage_errors == [("decompose", "EmptyFactListError")]
        assert backend.call_count == 4

    def test_draft_fails_after_retry(self, question, context, fast_policy):
        """Test that two blank drafts abort the example."""
        backend = scripted(draft=["   ", ""])
        pipeline = ValidationPipeline(PipelineConfig(), backend, retry_policy=fast_policy)
        with pytest.raises(DraftFailedError):
            pipeline.run_pave(question, context)

    def test_backend_exhaustion(self, question, context, fast_policy):
        """Test that persistent backend errors surface as BackendExhaustedError."""
        backend = AlwaysDown()
        pipeline = ValidationPipeline(PipelineConfig(), backend, retry_policy=fast_policy)
        with pytest.raises(BackendExhaustedError) as excinfo:
            pipeline.run_pave(question, context)
        assert excinfo.value.stage == "decompose"
        assert backend.call_count == fast_policy.max_attempts

    def test_store_prompts(self, question, context, fast_policy):
        """Test that rendered prompts are kept on request."""
        outcome = ValidationPipeline(
            PipelineConfig(store_prompts=True), scripted(), retry_policy=fast_policy
        ).run_pave(question, context)
        assert len(outcome.trace.prompts) == 3
        assert stage_from_text(outcome.trace.prompts[0]) == Stage.DECOMPOSE

    def test_max_facts_caps_the_trace(self, question, context, fast_policy):
        """Test that decomposition output is truncated to max_facts."""
        many = "\n".join(f"{i}. fact number {i}" for i in range(1, 10))
        config = PipelineConfig(max_facts=4)
        outcome = ValidationPipeline(
            config, scripted(decompose=[many]), retry_policy=fast_policy
        ).run_pave(question, context)
        assert outcome.trace.facts.n == 4
        assert validate_trace(outcome.trace, config) == []

    def test_wrong_variant(self, question, context):
        """Test that a variant method refuses a differently configured pipeline."""
        pipeline = ValidationPipeline(PipelineConfig(variant=Variant.BASELINE), scripted())
        with pytest.raises(ValueError):
            pipeline.run_pave(question, context)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_call_count_contract(self, ten_thousandths):
        """Test backend_calls == 3 + was_revised for any support score."""
        value = ten_thousandths / 10_000
        record = make_record()
        backend = scripted(score=f"SUPPORT: {value:.4f}")
        outcome = ValidationPipeline(PipelineConfig(tau=0.7), backend).run_pave(
            record.question_value, record.context
        )
        assert outcome.final.was_revised == (value < 0.7)
        assert outcome.final.backend_calls == 3 + int(value < 0.7)
        assert backend.call_count == outcome.final.backend_calls


class TestMultipleRevisions:
    """Tests for max_revisions above one."""

    def test_rescores_until_supported(self, question, context, fast_policy):
        """Test a second scoring round that clears the threshold."""
        backend = scripted(score=["SUPPORT: 0.1", "SUPPORT: 0.9"])
        outcome = ValidationPipeline(
            PipelineConfig(max_revisions=3), backend, retry_policy=fast_policy
        ).run_pave(question, context)
        assert outcome.final.revisions == 1
        assert outcome.final.backend_calls == 5
        assert stages(backend)[-1] == Stage.SCORE

    def test_stops_at_max_revisions(self, question, context, fast_policy):
        """Test that the revision loop is bounded."""
        backend = scripted(
            score=["SUPPORT: 0.1", "SUPPORT: 0.2"],
            revise=[REVISED_TEXT, "ANSWER: Paris\nRATIONALE: Premise 1."],
        )
        config = PipelineConfig(max_revisions=2)
        outcome = ValidationPipeline(config, backend, retry_policy=fast_policy).run_pave(
            question, context
        )
        assert outcome.final.revisions == 2
        assert outcome.final.backend_calls == 6
        assert outcome.final.text == "Paris"
        assert outcome.trace.support.score == pytest.approx(0.1)
        assert validate_trace(outcome.trace, config) == []


class TestAblationVariants:
    """Tests for baseline, support_scoring and importance_weighting."""

    def test_baseline(self, question, context, fast_policy):
        """Test a single draft call from the raw context."""
        backend = scripted()
        config = PipelineConfig(variant=Variant.BASELINE)
        outcome = ValidationPipeline(config, backend, retry_policy=fast_policy).run_baseline(
            question, context
        )
        assert stages(backend) == [Stage.DRAFT]
        assert context.passages[0] in backend.requests[0][1].user_text
        assert outcome.final.backend_calls == 1
        assert outcome.trace.facts.n == 0
        assert outcome.trace.support is None
        assert validate_trace(outcome.trace, config) == []

    @pytest.mark.parametrize(
        "score,calls,revised", [("SUPPORT: 0.95", 2, False), ("SUPPORT: 0.3", 3, True)]
    )
    def test_support_scoring(self, question, context, fast_policy, score, calls, revised):
        """Test scoring against the raw context without decomposition."""
        backend = scripted(score=score)
        config = PipelineConfig(variant=Variant.SUPPORT_SCORING)
        outcome = ValidationPipeline(
            config, backend, retry_policy=fast_policy
        ).run_support_scoring(question, context)
        assert Stage.DECOMPOSE not in stages(backend)
        assert outcome.final.backend_calls == calls
        assert outcome.final.was_revised is revised
        assert "[Passage 1]" in backend.requests[1][1].user_text
        assert validate_trace(outcome.trace, config) == []

    def test_support_scoring_unparseable_score(self, question, context, fast_policy):
        """Test that an unreadable score forces revision in support_scoring too."""
        backend = scripted(score="no score here")
        outcome = ValidationPipeline(
            PipelineConfig(variant=Variant.SUPPORT_SCORING), backend, retry_policy=fast_policy
        ).run_support_scoring(question, context)
        assert outcome.final.was_revised is True
        assert outcome.final.backend_calls == 3

    def test_importance_weighting(self, question, context, fast_policy):
        """Test weighted facts and a salience-aware draft, without scoring."""
        backend = scripted(decompose=[WEIGHTED_FACTS_TEXT])
        config = PipelineConfig(variant=Variant.IMPORTANCE_WEIGHTING)
        outcome = ValidationPipeline(
            config, backend, retry_policy=fast_policy
        ).run_importance_weighting(question, context)
        assert stages(backend) == [Stage.DECOMPOSE, Stage.DRAFT]
        assert [f.salience for f in outcome.trace.facts] == [0.9, 0.2]
        assert "[salience 0.90]" in backend.requests[1][1].user_text
        assert outcome.trace.support is None
        assert outcome.final.backend_calls == 2
        assert validate_trace(outcome.trace, config) == []

    def test_run_dispatches_on_variant(self, fast_policy):
        """Test record dispatch with the record's task kind."""
        record = make_record(task_kind=TaskKind.LABEL3, gold="yes", question="Is it in Paris?")
        backend = scripted(draft=["ANSWER: yes\nRATIONALE: stated."])
        config = PipelineConfig(variant=Variant.BASELINE)
        outcome = ValidationPipeline(config, backend, retry_policy=fast_policy).run(record)
        assert outcome.final.text == "yes"
        assert "exactly one word: yes, no, or maybe" in backend.requests[0][1].user_text
