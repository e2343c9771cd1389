"""Unit tests for judging and accuracy metrics."""

from decimal import Decimal

import pytest
from conftest import make_predictions
from hypothesis import given
from hypothesis import strategies as st

from pave.ai.retry_helpers import RetryPolicy
from pave.ai.scripted import ScriptedBackend
from pave.ai.service import AIService
from pave.core.exceptions import (
    BackendExhaustedError,
    EmptyInputError,
    EvaluationError,
    ServerError,
    UndefinedAtPerfectBaselineError,
)
from pave.core.models import Stage
from pave.evaluation.metrics import (
    EvalResult,
    accuracy,
    judge_label3,
    judge_span,
    length_bucket,
    length_diagnostics,
    normalize_answer,
    relative_error_reduction,
)


class TestJudges:
    """Tests for the label and span judges."""

    @pytest.mark.parametrize(
        "predicted,gold,expected",
        [
            ("yes", "yes", True),
            ("Yes.", "yes", True),
            ("maybe", "no", False),
            ("yes and no", "yes", False),
        ],
    )
    def test_judge_label3(self, predicted, gold, expected):
        """Test exact agreement after label normalization."""
        assert judge_label3(predicted, gold) is expected

    def test_normalize_answer(self):
        """Test lowercasing and removal of punctuation, articles and spaces."""
        assert normalize_answer("The  Eiffel Tower!") == "eiffel tower"
        assert normalize_answer("an apple, a pear") == "apple pear"

    @pytest.mark.parametrize(
        "predicted,expected",
        [
            ("the Eiffel Tower", True),
            ("Eiffel tower.", True),
            ("the tower", True),
            ("Louvre", False),
            ("", False),
        ],
    )
    def test_judge_span_normalized(self, predicted, expected):
        """Test normalized matching against gold and alternatives."""
        assert judge_span(predicted, "Eiffel Tower", alternatives=["The Tower"]) is expected

    @given(
        st.text(alphabet="aAnThe .,!Paris", min_size=1, max_size=20).filter(str.strip),
        st.text(alphabet="aAnThe .,!Paris", min_size=1, max_size=20).filter(str.strip),
    )
    def test_judge_span_normalized_is_symmetric(self, first, second):
        """Test that swapping prediction and gold gives the same verdict."""
        assert judge_span(first, second) == judge_span(second, first)

    def test_judge_span_model_judge(self):
        """Test that the judge backend decides with a yes/no reply."""
        backend = ScriptedBackend(by_stage={"judge": ["Yes, they match.", "no"]})
        assert judge_span(
            "the iron lady", "Eiffel Tower", mode="model_judge", backend=backend, question="Which?"
        )
        assert not judge_span("Louvre", "Eiffel Tower", mode="model_judge", backend=backend)
        assert [stage for stage, _ in backend.requests] == [Stage.JUDGE, Stage.JUDGE]

    def test_empty_prediction_skips_the_judge(self):
        """Test that an empty prediction is wrong without a backend call."""
        backend = ScriptedBackend()
        assert judge_span("  ", "Paris", mode="model_judge", backend=backend) is False
        assert backend.call_count == 0

    def test_judge_span_errors(self):
        """Test unknown modes, a missing backend and judge failures."""
        with pytest.raises(ValueError):
            judge_span("Paris", "Paris", mode="fuzzy")
        with pytest.raises(ValueError):
            judge_span("Paris", "Paris", mode="model_judge")

        class Down(AIService):
            def _complete(self, request):
                raise ServerError("503")

            def validate_config(self):
                return True

        with pytest.raises(BackendExhaustedError) as excinfo:
            judge_span(
                "Paris",
                "Paris",
                mode="model_judge",
                backend=Down(),
                retry_policy=RetryPolicy(max_attempts=1),
            )
        assert excinfo.value.stage == "judge"


class TestAccuracy:
    """Tests for accuracy and EvalResult."""

    @pytest.mark.parametrize(
        "correct,expected",
        [
            (712, "71.20"),
            (698, "69.80"),
            (719, "71.90"),
            (733, "73.30"),
            (624, "62.40"),
            (477, "47.70"),
            (636, "63.60"),
            (951, "95.10"),
        ],
    )
    def test_reference_accuracies(self, correct, expected):
        """Test accuracies of 1000-example runs."""
        result = accuracy(make_predictions([True] * correct + [False] * (1000 - correct)))
        assert result.n == 1000
        assert result.accuracy_pct == Decimal(expected)

    def test_two_decimals_half_up(self):
        """Test 4638 of 5000 and half-up rounding."""
        assert EvalResult("pave", n=5000, correct=4638).accuracy_pct == Decimal("92.76")
        assert EvalResult("pave", n=8, correct=1).accuracy_pct == Decimal("12.50")
        assert EvalResult("pave", n=3, correct=2).accuracy_pct == Decimal("66.67")

    def test_empty(self):
        """Test that accuracy of nothing is an error."""
        with pytest.raises(EmptyInputError):
            accuracy([])

    def test_mixed_variants(self):
        """Test that one call covers one variant."""
        mixed = make_predictions([True], variant="pave") + make_predictions(
            [False], variant="baseline", ids=["other"]
        )
        with pytest.raises(EvaluationError):
            accuracy(mixed)

    def test_invalid_result(self):
        """Test EvalResult bounds."""
        with pytest.raises(ValueError):
            EvalResult("pave", n=0, correct=0)
        with pytest.raises(ValueError):
            EvalResult("pave", n=2, correct=3)

    @given(st.lists(st.booleans(), min_size=1, max_size=200), st.randoms())
    def test_order_does_not_matter(self, flags, rng):
        """Test that shuffling a prediction log leaves its accuracy unchanged."""
        predictions = make_predictions(flags)
        shuffled = list(predictions)
        rng.shuffle(shuffled)
        assert accuracy(shuffled) == accuracy(predictions)

    def test_to_dict(self):
        """Test the serialized accuracy."""
        data = EvalResult("pave", n=4, correct=3, dataset="squad").to_dict()
        assert data == {
            "variant": "pave",
            "n": 4,
            "correct": 3,
            "accuracy_pct": 75.0,
            "dataset": "squad",
        }


class TestRelativeErrorReduction:
    """Tests for relative_error_reduction."""

    @pytest.mark.parametrize(
        "baseline,new,expected",
        [
            (62.40, 95.10, "87.0"),
            (71.20, 73.30, "7.3"),
            (Decimal("50.00"), Decimal("50.00"), "0.0"),
            ("80", "70", "-50.0"),
        ],
    )
    def test_values(self, baseline, new, expected):
        """Test reductions including zero and negative changes."""
        assert relative_error_reduction(baseline, new) == Decimal(expected)

    def test_perfect_baseline(self):
        """Test that a perfect baseline leaves the reduction undefined."""
        with pytest.raises(UndefinedAtPerfectBaselineError):
            relative_error_reduction(100, 100)

    @given(st.integers(min_value=0, max_value=9999))
    def test_perfect_new_accuracy(self, hundredths):
        """Test that reaching 100% removes all of the baseline's errors."""
        baseline = Decimal(hundredths) / 100
        assert relative_error_reduction(baseline, 100) == Decimal("100.0")
        assert relative_error_reduction(baseline, baseline) == Decimal("0.0")

    @given(
        st.integers(min_value=0, max_value=99),
        st.integers(min_value=0, max_value=100),
        st.integers(min_value=0, max_value=100),
    )
    def test_strictly_increasing_in_new_accuracy(self, baseline, first, second):
        """Test that a higher new accuracy always gives a higher reduction."""
        if first == second:
            return
        low, high = sorted((first, second))
        assert relative_error_reduction(baseline, low) < relative_error_reduction(baseline, high)


class TestLengthDiagnostics:
    """Tests for answer length diagnostics."""

    @pytest.mark.parametrize(
        "tokens,bucket",
        [(0, "1-2"), (1, "1-2"), (2, "1-2"), (3, "3-4"), (4, "3-4"), (5, "5+"), (40, "5+")],
    )
    def test_length_bucket(self, tokens, bucket):
        """Test bucket boundaries."""
        assert length_bucket(tokens) == bucket

    def test_odd_median(self):
        """Test the median of 71 answer lengths."""
        lengths = [1] * 35 + [2] + [5] * 35
        stats = length_diagnostics(make_predictions([True] * 71, answer_lengths=lengths))
        assert stats.median_pred_tokens == Decimal("2")

    def test_even_median(self):
        """Test the median of four lengths."""
        stats = length_diagnostics(make_predictions([True] * 4, answer_lengths=[1, 2, 3, 4]))
        assert stats.median_pred_tokens == Decimal("2.5")

    def test_bucket_accuracy(self):
        """Test per-bucket accuracy with one decimal."""
        flags = [True] * 20 + [False] * 10 + [True] * 29 + [False]
        gold_lengths = [1] * 30 + [6] * 30
        stats = length_diagnostics(make_predictions(flags, gold_lengths=gold_lengths))
        assert stats.bucket_accuracy == {"1-2": Decimal("66.7"), "5+": Decimal("96.7")}
        assert stats.bucket_counts == {"1-2": 30, "5+": 30}

    def test_gold_texts_override_lengths(self):
        """Test that supplied gold texts are recounted."""
        predictions = make_predictions([True, False], ids=["a", "b"], gold_lengths=[1, 1])
        gold = {"a": "one two three", "b": "one two three four"}
        stats = length_diagnostics(predictions, gold=gold)
        assert stats.median_gold_tokens == Decimal("3.5")
        assert stats.bucket_accuracy == {"3-4": Decimal("50.0")}

    def test_empty(self):
        """Test that diagnostics of nothing are an error."""
        with pytest.raises(EmptyInputError):
            length_diagnostics([])
