import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symris.montecarlo import (
    SUMMARY_HEAD,
    Kind,
    OutcomeClass,
    TrialLedger,
    TrialResult,
    checkpoint_schedule,
    checkpoints_to_csv,
    classify_state,
    estimate,
    ledgers_to_csv,
    penultimate_cut,
    refine_order,
    refined_labels,
    refined_to_csv,
    run_trials,
    x_set,
)
from symris.sampling import MethodParams, RngStream, generate
from symris.spectra import PartitionFlags
from symris.symspace import SymState


def fake_result(i: int, label: str, n: int = 6) -> TrialResult:
    if label.startswith("PPT_BE_"):
        ks = tuple(int(x) for x in label[7:].split("_"))
        outcome = OutcomeClass.make(Kind.PPT_BE, n, ks)
    else:
        outcome = OutcomeClass.make(Kind(label), n)
    return TrialResult(i, outcome, PartitionFlags(n, {k: 0.0 for k in range(1, n // 2 + 1)}))


def fake_ledger(ancilla: int, counts: dict[str, int], n_qubits: int = 6) -> TrialLedger:
    labels = [lab for lab, c in counts.items() for _ in range(c)]
    results = [fake_result(i, lab, n_qubits) for i, lab in enumerate(labels)]
    return TrialLedger.from_results(MethodParams("MI", n_qubits, ancilla), 0, results)


class TestLabels:
    def test_refined_n6(self):
        assert refined_labels(6) == [
            "PPT_BE_1", "PPT_BE_2", "PPT_BE_3",
            "PPT_BE_1_2", "PPT_BE_1_3", "PPT_BE_2_3", "PPT_BE_1_2_3",
        ]

    @pytest.mark.parametrize("n,pen,xs", [(4, 1, (2,)), (5, 1, (2,)), (6, 2, (1, 3)), (7, 2, (1, 3)), (9, 3, (1, 2, 4))])
    def test_x_set(self, n, pen, xs):
        assert penultimate_cut(n) == pen
        assert x_set(n) == xs

    def test_x_undefined_below_four(self):
        assert x_set(3) is None
        assert OutcomeClass.make(Kind.PPT_BE, 3, (1,)).tag == "ALL"

    def test_tags(self):
        assert OutcomeClass.make(Kind.PPT_BE, 6, (1, 2, 3)).tag == "ALL"
        assert OutcomeClass.make(Kind.PPT_BE, 6, (3, 1)).tag == "X"
        assert OutcomeClass.make(Kind.PPT_BE, 6, (3, 1)).label == "PPT_BE_1_3"
        assert OutcomeClass.make(Kind.PPT_BE, 6, (1,)).tag == "plain"

    def test_invalid(self):
        with pytest.raises(ValueError):
            OutcomeClass.make(Kind.PPT_BE, 4, ())
        with pytest.raises(ValueError):
            OutcomeClass.make(Kind.SEP, 4, (1,))


class TestClassify:
    def test_dicke_npt(self):
        outcome, flags, cert = classify_state(SymState.dicke(2, 4))
        assert outcome.kind is Kind.NPT and cert is None

    def test_mms_sep(self):
        outcome, flags, cert = classify_state(SymState.maximally_mixed(5))
        assert outcome.kind is Kind.SEP and cert.decomposition

    def test_mixed_flags_shortcut(self):
        # N=4 trials with exactly one PPT cut are PPT_BE without running the certifier
        params = MethodParams("MI", 4, 12)
        for i in range(200):
            outcome, flags, cert = classify_state(generate(params, RngStream(7, i)))
            if not flags.all_ppt and not flags.all_npt:
                assert outcome.kind is Kind.PPT_BE and cert is None
                assert outcome.ppt_set == flags.ppt_cuts
                return
        pytest.fail("no mixed-flag state in 200 draws")

    def test_label_consistency(self):
        params = MethodParams("MI", 6, 26)
        for i in range(60):
            outcome, flags, _ = classify_state(generate(params, RngStream(1, i)))
            if outcome.kind is Kind.PPT_BE:
                assert outcome.ppt_set == flags.ppt_cuts


class TestSchedule:
    def test_small(self):
        assert checkpoint_schedule(1) == [1]
        assert checkpoint_schedule(100) == [1, 2, 4, 8, 16, 32, 64, 100]
        assert checkpoint_schedule(128) == [1, 2, 4, 8, 16, 32, 64, 128]

    def test_large(self):
        s = checkpoint_schedule(20000)
        assert s[:14] == [2**i for i in range(14)]
        assert s[14:] == list(range(10000, 20001, 2000))

    @given(st.integers(1, 200000))
    def test_properties(self, n):
        s = checkpoint_schedule(n)
        assert s[-1] == n and all(a < b for a, b in zip(s, s[1:]))


class TestLedger:
    def test_counts_and_probabilities(self):
        led = fake_ledger(10, {"NPT": 5, "PPT_BE_1": 3, "PPT_BE_1_2_3": 1, "SEP": 1})
        assert led.n == 10
        assert led.kind_counts() == {"NPT": 5, "PPT_BE": 4, "SEP": 1, "UNK": 0}
        assert led.probabilities()["PPT_BE"] == pytest.approx(0.4)
        assert led.tag_probability("ALL") == pytest.approx(0.1)
        assert led.tag_probability("X") == 0
        assert led.stderr(0.4) == pytest.approx(np.sqrt(0.024))

    def test_checkpoints_replay(self):
        led = fake_ledger(1, {"NPT": 3, "SEP": 2})
        assert [n for n, _ in led.checkpoints] == [1, 2, 4, 5]
        assert led.checkpoints[-1][1] == led.probabilities()
        rows = list(csv.DictReader(io.StringIO(checkpoints_to_csv(led))))
        assert rows[0]["Delta_NPT"] == ""
        assert float(rows[-1]["P_SEP"]) == pytest.approx(0.4)
        assert float(rows[-1]["Delta_SEP"]) == pytest.approx(0.4 - 0.25)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.sampled_from(["NPT", "PPT_BE_1", "PPT_BE_2_3", "SEP", "UNK"]), min_size=1, max_size=60))
    def test_probabilities_sum_to_one(self, labels):
        results = [fake_result(i, lab) for i, lab in enumerate(labels)]
        led = TrialLedger.from_results(MethodParams("MI", 6, 3), 0, results[::-1])
        assert sum(led.probabilities().values()) == pytest.approx(1.0)
        assert led.labels == labels
        refined = sum(led.label_probability(lab) for lab in refined_labels(6))
        assert refined == pytest.approx(led.probabilities()["PPT_BE"])


class TestRefineOrder:
    def test_order_and_floor(self):
        ledgers = [
            fake_ledger(10, {"NPT": 95, "PPT_BE_1": 5}),
            fake_ledger(12, {"NPT": 80, "PPT_BE_1": 15, "PPT_BE_1_2": 5}),
            fake_ledger(14, {"NPT": 50, "PPT_BE_1": 30, "PPT_BE_1_2": 15, "PPT_BE_1_2_3": 5}),
            fake_ledger(16, {"NPT": 30, "PPT_BE_1": 30, "PPT_BE_1_2": 25, "PPT_BE_1_2_3": 15}),
        ]
        order = refine_order(ledgers)
        assert [a.label for a in order] == ["PPT_BE_1", "PPT_BE_1_2", "PPT_BE_1_2_3"]
        assert [a.ancilla for a in order] == [12, 14, 16]
        # floor 0.1 crossed between 0.05 at 10 and 0.15 at 12
        assert order[0].crossing == pytest.approx(11.0)

    def test_ties_broken_by_interpolation(self):
        ledgers = [
            fake_ledger(10, {"NPT": 99, "PPT_BE_1": 1}),
            fake_ledger(12, {"NPT": 20, "PPT_BE_1": 70, "PPT_BE_1_2": 10}),
        ]
        order = refine_order(ledgers)
        assert [a.label for a in order] == ["PPT_BE_1", "PPT_BE_1_2"]


class TestExecution:
    def test_worker_independence(self):
        params = MethodParams("MI", 4, 12)
        one = run_trials(params, range(40), 5, workers=1)
        two = run_trials(params, range(40), 5, workers=3)
        assert [r.outcome for r in one] == [r.outcome for r in two]
        assert [r.flags.min_eig for r in one] == [r.flags.min_eig for r in two]

    def test_subset_reproduces(self):
        params = MethodParams("MII", 4, 30)
        full = run_trials(params, range(30), 9)
        part = run_trials(params, [29, 3], 9)
        assert [r.outcome for r in part] == [full[29].outcome, full[3].outcome]

    def test_estimate_and_csv(self):
        ledgers = [estimate(MethodParams("MI", 4, a), 50, 2) for a in (1, 30)]
        assert ledgers[0].probabilities()["NPT"] > 0.9
        assert ledgers[1].probabilities()["SEP"] > 0.9
        rows = list(csv.DictReader(io.StringIO(ledgers_to_csv(ledgers[::-1]))))
        assert list(rows[0])[: len(SUMMARY_HEAD)] == SUMMARY_HEAD
        assert [int(r["ancilla"]) for r in rows] == [1, 30]
        for r in rows:
            assert sum(float(r[h]) for h in SUMMARY_HEAD[4:]) == pytest.approx(1.0)
        long = list(csv.DictReader(io.StringIO(refined_to_csv(ledgers))))
        assert sum(int(r["count"]) for r in long) == 100

    def test_estimate_rejects_zero(self):
        with pytest.raises(ValueError):
            estimate(MethodParams("MI", 4, 2), 0, 1)
