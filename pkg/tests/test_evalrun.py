"""Evaluation runs: accounting, resumability, reports, comparison."""

import json

import pytest

from conflictlab.errors import (
    BudgetExceeded,
    EmptyRun,
    IoFailure,
    SplitMismatch,
)
from conflictlab.evalrun import (
    CSV_HEADER,
    ReportFormat,
    RunRecord,
    compare_runs,
    derive_run_id,
    emit_report,
    read_run,
    run_eval,
    tabulate,
    write_run,
)
from conflictlab.gateway import (
    P1,
    P2,
    ModelVerdict,
    OracleBackend,
    RequestMode,
    scripted_confusion_backend,
)
from conflictlab.metrics import ConfusionMatrix
from conflictlab.model import (
    ConflictLabel,
    DatasetManifest,
    Frame,
    Observation,
    Provenance,
    Split,
)

FIG3_P2 = ConfusionMatrix(tp=48, fp=10, fn=22, tn=60)
FIG3_P1 = ConfusionMatrix(tp=28, fp=4, fn=42, tn=66)


def make_obs(obs_id: str, label: ConflictLabel, split=Split.TEST) -> Observation:
    frames = tuple(
        Frame(
            index=k,
            time_offset=0.5 * k,
            width_px=64,
            height_px=64,
            source_id=obs_id,
            image_bytes=f"img-{obs_id}-{k}".encode(),
        )
        for k in range(3)
    )
    return Observation(
        id=obs_id,
        frames=frames,
        provenance=Provenance.SYNTHETIC,
        ground_truth=label,
        split=split,
    )


def balanced_manifest(n_per_class: int = 70) -> DatasetManifest:
    observations = []
    for i in range(n_per_class):
        observations.append(make_obs(f"obs-c{i:03d}", ConflictLabel.CONFLICT))
    for i in range(n_per_class):
        observations.append(make_obs(f"obs-n{i:03d}", ConflictLabel.NO_CONFLICT))
    return DatasetManifest(observations, seed=11)


class CountingBackend:
    """Pass-through wrapper that counts completions."""

    def __init__(self, inner):
        self.inner = inner
        self.backend_id = inner.backend_id
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        return self.inner.complete(request)


class InterruptingBackend:
    """Simulates an operator interrupt after ``after`` successful replies."""

    def __init__(self, inner, after: int):
        self.inner = inner
        self.backend_id = inner.backend_id
        self.after = after
        self.done = 0

    def complete(self, request):
        if self.done >= self.after:
            raise KeyboardInterrupt
        self.done += 1
        return self.inner.complete(request)


class BudgetedBackend:
    """Raises BudgetExceeded once ``budget`` requests have been spent."""

    def __init__(self, inner, budget: int):
        self.inner = inner
        self.backend_id = inner.backend_id
        self.budget = budget
        self.spent = 0

    def complete(self, request):
        if self.spent >= self.budget:
            raise BudgetExceeded(f"budget of {self.budget} spent")
        self.spent += 1
        return self.inner.complete(request)


class ConstantBackend:
    backend_id = "constant"

    def __init__(self, text: str):
        self.text = text

    def complete(self, request):
        return self.text


class MappedBackend:
    backend_id = "mapped"

    def __init__(self, answers: dict, default: str = "yes"):
        self.answers = answers
        self.default = default

    def complete(self, request):
        return self.answers.get(request.observation_id, self.default)


# -- running ------------------------------------------------------------------


class TestRunEval:
    def test_oracle_run_is_diagonal_and_fully_conformant(self):
        manifest = balanced_manifest()
        backend = OracleBackend.from_observations(manifest.observations)
        run = run_eval(backend, P2, manifest, Split.TEST)
        assert len(run.verdicts) == 140
        assert run.excluded == []
        assert all(v.conformant for v in run.verdicts)
        matrix, metrics, conformance = tabulate(run)
        assert matrix == ConfusionMatrix(tp=70, fp=0, fn=0, tn=70)
        assert metrics.accuracy == 1.0
        assert conformance["conformance_rate"] == 1.0

    def test_scripted_p2_run_reproduces_target_matrix(self):
        manifest = balanced_manifest()
        backend = scripted_confusion_backend(FIG3_P2, manifest.observations)
        run = run_eval(backend, P2, manifest, Split.TEST)
        matrix, metrics, _ = tabulate(run)
        assert matrix == FIG3_P2
        assert metrics.accuracy == pytest.approx(108 / 140, abs=1e-12)

    def test_scripted_p1_run_accuracy(self):
        manifest = balanced_manifest()
        backend = scripted_confusion_backend(FIG3_P1, manifest.observations)
        run = run_eval(backend, P1, manifest, Split.TEST)
        _, metrics, _ = tabulate(run)
        assert metrics.accuracy == pytest.approx(94 / 140, abs=1e-12)

    def test_balanced_split_macro_recall_equals_accuracy(self):
        manifest = balanced_manifest()
        backend = scripted_confusion_backend(FIG3_P2, manifest.observations)
        run = run_eval(backend, P2, manifest, Split.TEST)
        _, metrics, _ = tabulate(run)
        assert metrics.macro_recall == pytest.approx(metrics.accuracy, abs=1e-12)

    def test_verdict_and_excluded_counts_partition_the_split(self):
        manifest = balanced_manifest(5)
        answers = {"obs-c001": "maybe a conflict", "obs-n003": "cannot tell"}
        run = run_eval(MappedBackend(answers), P2, manifest, Split.TEST)
        assert len(run.verdicts) + len(run.excluded) == 10
        excluded_ids = {oid for oid, _ in run.excluded}
        assert excluded_ids == {"obs-c001", "obs-n003"}
        for _, reason in run.excluded:
            assert "Unparseable" in reason
        matrix, _, conformance = tabulate(run)
        assert matrix.total + conformance["excluded_count"] == 10

    def test_non_conformant_replies_counted_in_matrix_and_rate(self):
        manifest = balanced_manifest(2)
        run = run_eval(ConstantBackend("Yes."), P2, manifest, Split.TEST)
        matrix, _, conformance = tabulate(run)
        assert matrix.total == 4
        assert matrix.tp == 2 and matrix.fp == 2
        assert conformance["conformance_rate"] == 0.0
        assert conformance["non_conformant_count"] == 4

    def test_empty_split_raises(self):
        manifest = balanced_manifest(2)
        with pytest.raises(EmptyRun):
            run_eval(ConstantBackend("yes"), P2, manifest, Split.TRAIN)

    def test_all_excluded_tabulation_raises_empty_run(self):
        manifest = balanced_manifest(2)
        run = run_eval(ConstantBackend("shrug"), P2, manifest, Split.TEST)
        assert len(run.excluded) == 4
        with pytest.raises(EmptyRun):
            tabulate(run)

    def test_run_id_is_deterministic_and_input_sensitive(self):
        manifest = balanced_manifest(3)
        backend = OracleBackend.from_observations(manifest.observations)
        run_a = run_eval(backend, P2, manifest, Split.TEST)
        run_b = run_eval(backend, P2, manifest, Split.TEST)
        run_c = run_eval(backend, P1, manifest, Split.TEST)
        assert run_a.run_id == run_b.run_id
        assert run_a.run_id != run_c.run_id
        assert run_a.run_id.startswith("run-")

    def test_latency_uses_injected_timer(self):
        manifest = DatasetManifest(
            [make_obs("obs-a", ConflictLabel.CONFLICT)], seed=1, imbalance_tolerance=1
        )
        ticks = iter([10.0, 10.012])
        run = run_eval(
            OracleBackend({"obs-a": ConflictLabel.CONFLICT}),
            P2,
            manifest,
            Split.TEST,
            timer=lambda: next(ticks),
        )
        assert run.verdicts[0].latency_ms == 12

    def test_rationale_mode_fields_flow_into_verdicts(self):
        manifest = DatasetManifest(
            [make_obs("obs-a", ConflictLabel.CONFLICT)], seed=1, imbalance_tolerance=1
        )
        reply = "verdict: yes\nexplanation: close gap.\nrecommendation: hold sub road."
        run = run_eval(
            ConstantBackend(reply),
            P2,
            manifest,
            Split.TEST,
            mode=RequestMode.VERDICT_WITH_RATIONALE,
        )
        verdict = run.verdicts[0]
        assert verdict.label is ConflictLabel.CONFLICT
        assert verdict.conformant is False
        assert verdict.explanation == "close gap."
        assert verdict.recommendation == "hold sub road."


# -- resumability -------------------------------------------------------------


class TestResume:
    def test_interrupt_then_resume_covers_split_exactly_once(self, tmp_path):
        manifest = balanced_manifest()  # 140 observations
        scripted = scripted_confusion_backend(FIG3_P2, manifest.observations)
        transcript = tmp_path / "transcript.jsonl"

        flaky = InterruptingBackend(scripted, after=50)
        with pytest.raises(KeyboardInterrupt):
            run_eval(flaky, P2, manifest, Split.TEST, transcript_path=transcript)
        assert sum(1 for _ in transcript.open()) == 50

        counted = CountingBackend(scripted)
        run = run_eval(counted, P2, manifest, Split.TEST, transcript_path=transcript)
        assert counted.calls == 90  # only the remaining observations are queried
        assert len(run.verdicts) == 140
        assert len({v.observation_id for v in run.verdicts}) == 140
        matrix, _, _ = tabulate(run)
        assert matrix == FIG3_P2

    def test_resumed_report_matches_uninterrupted_report_byte_for_byte(self, tmp_path):
        manifest = balanced_manifest()
        scripted = scripted_confusion_backend(FIG3_P2, manifest.observations)

        straight = run_eval(
            scripted, P2, manifest, Split.TEST,
            transcript_path=tmp_path / "straight.jsonl",
        )
        flaky = InterruptingBackend(scripted, after=77)
        with pytest.raises(KeyboardInterrupt):
            run_eval(
                flaky, P2, manifest, Split.TEST,
                transcript_path=tmp_path / "resumed.jsonl",
            )
        resumed = run_eval(
            scripted, P2, manifest, Split.TEST,
            transcript_path=tmp_path / "resumed.jsonl",
        )
        for fmt, name in [
            (ReportFormat.JSON, "r.json"),
            (ReportFormat.CSV, "r.csv"),
            (ReportFormat.MARKDOWN, "r.md"),
        ]:
            a = emit_report(straight, fmt, tmp_path / f"straight-{name}")
            b = emit_report(resumed, fmt, tmp_path / f"resumed-{name}")
            assert a.read_bytes() == b.read_bytes()

    def test_completed_transcript_means_zero_new_queries(self, tmp_path):
        manifest = balanced_manifest(4)
        oracle = OracleBackend.from_observations(manifest.observations)
        transcript = tmp_path / "t.jsonl"
        run_eval(oracle, P2, manifest, Split.TEST, transcript_path=transcript)

        counted = CountingBackend(oracle)
        run = run_eval(counted, P2, manifest, Split.TEST, transcript_path=transcript)
        assert counted.calls == 0
        assert len(run.verdicts) == 8

    def test_budget_abort_preserves_transcript_for_resume(self, tmp_path):
        manifest = balanced_manifest(10)
        oracle = OracleBackend.from_observations(manifest.observations)
        transcript = tmp_path / "t.jsonl"

        with pytest.raises(BudgetExceeded):
            run_eval(
                BudgetedBackend(oracle, budget=7),
                P2,
                manifest,
                Split.TEST,
                transcript_path=transcript,
            )
        assert sum(1 for _ in transcript.open()) == 7

        run = run_eval(oracle, P2, manifest, Split.TEST, transcript_path=transcript)
        assert len(run.verdicts) == 20

    def test_torn_final_line_is_dropped_and_reevaluated(self, tmp_path):
        manifest = balanced_manifest(3)
        oracle = OracleBackend.from_observations(manifest.observations)
        transcript = tmp_path / "t.jsonl"
        run_eval(oracle, P2, manifest, Split.TEST, transcript_path=transcript)

        whole = transcript.read_text().splitlines()
        torn = "\n".join(whole[:-1]) + "\n" + whole[-1][: len(whole[-1]) // 2]
        transcript.write_text(torn)

        counted = CountingBackend(oracle)
        run = run_eval(counted, P2, manifest, Split.TEST, transcript_path=transcript)
        assert counted.calls == 1
        assert len(run.verdicts) == 6

    def test_corrupt_middle_line_raises_io_failure(self, tmp_path):
        manifest = balanced_manifest(3)
        oracle = OracleBackend.from_observations(manifest.observations)
        transcript = tmp_path / "t.jsonl"
        run_eval(oracle, P2, manifest, Split.TEST, transcript_path=transcript)

        whole = transcript.read_text().splitlines()
        whole[1] = whole[1][:10]
        transcript.write_text("\n".join(whole) + "\n")
        with pytest.raises(IoFailure):
            run_eval(oracle, P2, manifest, Split.TEST, transcript_path=transcript)

    def test_foreign_transcript_raises_io_failure(self, tmp_path):
        manifest = balanced_manifest(3)
        oracle = OracleBackend.from_observations(manifest.observations)
        transcript = tmp_path / "t.jsonl"
        transcript.write_text(
            json.dumps({"kind": "excluded", "observation_id": "alien", "reason": "x"})
            + "\n"
        )
        with pytest.raises(IoFailure):
            run_eval(oracle, P2, manifest, Split.TEST, transcript_path=transcript)


# -- record validation and persistence ----------------------------------------


def small_run() -> RunRecord:
    manifest = balanced_manifest(3)
    backend = OracleBackend.from_observations(manifest.observations)
    return run_eval(backend, P2, manifest, Split.TEST)


class TestRunRecord:
    def test_duplicate_observation_rejected(self):
        run = small_run()
        with pytest.raises(ValueError):
            RunRecord(
                run_id=run.run_id,
                backend_id=run.backend_id,
                prompt_id=run.prompt_id,
                split=run.split,
                mode=run.mode,
                started_at=run.started_at,
                finished_at=run.finished_at,
                verdicts=run.verdicts + [run.verdicts[0]],
                excluded=run.excluded,
                truth_by_id=run.truth_by_id,
            )

    def test_incomplete_coverage_rejected(self):
        run = small_run()
        with pytest.raises(ValueError):
            RunRecord(
                run_id=run.run_id,
                backend_id=run.backend_id,
                prompt_id=run.prompt_id,
                split=run.split,
                mode=run.mode,
                started_at=run.started_at,
                finished_at=run.finished_at,
                verdicts=run.verdicts[:-1],
                excluded=run.excluded,
                truth_by_id=run.truth_by_id,
            )

    def test_round_trip_through_disk(self, tmp_path):
        run = small_run()
        path = write_run(run, tmp_path / "run.json")
        loaded = read_run(path)
        assert loaded == run

    def test_read_run_rejects_wrong_schema(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(json.dumps({"schema": "something/else"}))
        with pytest.raises(IoFailure):
            read_run(path)

    def test_retabulating_persisted_run_is_bit_identical(self, tmp_path):
        manifest = balanced_manifest()
        backend = scripted_confusion_backend(FIG3_P2, manifest.observations)
        run = run_eval(backend, P2, manifest, Split.TEST)
        report_a = emit_report(run, ReportFormat.JSON, tmp_path / "a.json")
        loaded = read_run(write_run(run, tmp_path / "run.json"))
        report_b = emit_report(loaded, ReportFormat.JSON, tmp_path / "b.json")
        assert report_a.read_bytes() == report_b.read_bytes()

    def test_derive_run_id_changes_with_any_input(self):
        base = derive_run_id("b", "p2", Split.TEST, RequestMode.VERDICT_ONLY, "c", "d")
        assert base != derive_run_id(
            "b2", "p2", Split.TEST, RequestMode.VERDICT_ONLY, "c", "d"
        )
        assert base != derive_run_id(
            "b", "p1", Split.TEST, RequestMode.VERDICT_ONLY, "c", "d"
        )
        assert base != derive_run_id(
            "b", "p2", Split.VAL, RequestMode.VERDICT_ONLY, "c", "d"
        )
        assert base != derive_run_id(
            "b", "p2", Split.TEST, RequestMode.VERDICT_WITH_RATIONALE, "c", "d"
        )
        assert base != derive_run_id(
            "b", "p2", Split.TEST, RequestMode.VERDICT_ONLY, "c2", "d"
        )
        assert base != derive_run_id(
            "b", "p2", Split.TEST, RequestMode.VERDICT_ONLY, "c", "d2"
        )


# -- reports ------------------------------------------------------------------


class TestReports:
    def fig3_run(self) -> RunRecord:
        manifest = balanced_manifest()
        backend = scripted_confusion_backend(FIG3_P2, manifest.observations)
        return run_eval(backend, P2, manifest, Split.TEST)

    def test_json_report_round_trips_tabulation_exactly(self, tmp_path):
        run = self.fig3_run()
        matrix, metrics, conformance = tabulate(run)
        path = emit_report(run, ReportFormat.JSON, tmp_path / "r.json")
        payload = json.loads(path.read_text())
        assert payload["matrix"] == matrix.to_dict()
        assert payload["metrics"]["accuracy"] == metrics.accuracy
        assert payload["metrics"]["macro_f1"] == metrics.macro_f1
        assert payload["conformance"] == conformance
        assert payload["run_id"] == run.run_id
        assert payload["config_hash"] == run.config_hash

    def test_markdown_embeds_the_2x2_matrix(self, tmp_path):
        run = self.fig3_run()
        text = emit_report(run, ReportFormat.MARKDOWN, tmp_path / "r.md").read_text()
        assert "| actual yes   | 48 | 22 |" in text
        assert "| actual no    | 10 | 60 |" in text
        assert "0.771429" in text

    def test_csv_header_matches_golden_bytes(self, tmp_path):
        run = self.fig3_run()
        text = emit_report(run, ReportFormat.CSV, tmp_path / "r.csv").read_text()
        golden = (
            "run_id,backend_id,prompt_id,split,mode,config_hash,split_size,"
            "evaluated,excluded_count,tp,fp,fn,tn,accuracy,conflict_precision,"
            "conflict_recall,conflict_f1,no_conflict_precision,no_conflict_recall,"
            "no_conflict_f1,macro_precision,macro_recall,macro_f1,weighted_f1,"
            "conformance_rate\n"
        )
        assert CSV_HEADER == golden
        assert text.splitlines(keepends=True)[0] == golden
        assert len(text.splitlines()) == 2

    def test_csv_row_carries_matrix_and_accuracy(self, tmp_path):
        run = self.fig3_run()
        text = emit_report(run, ReportFormat.CSV, tmp_path / "r.csv").read_text()
        header, row = text.splitlines()
        values = dict(zip(header.split(","), row.split(",")))
        assert values["tp"] == "48"
        assert values["fp"] == "10"
        assert values["fn"] == "22"
        assert values["tn"] == "60"
        assert float(values["accuracy"]) == pytest.approx(108 / 140, abs=1e-12)

    def test_excluded_listed_in_reports(self, tmp_path):
        manifest = balanced_manifest(2)
        answers = {"obs-c000": "dunno"}
        run = run_eval(MappedBackend(answers), P2, manifest, Split.TEST)
        payload = json.loads(
            emit_report(run, ReportFormat.JSON, tmp_path / "r.json").read_text()
        )
        assert len(payload["excluded"]) == 1
        assert payload["excluded"][0][0] == "obs-c000"
        md = emit_report(run, ReportFormat.MARKDOWN, tmp_path / "r.md").read_text()
        assert "obs-c000" in md


# -- comparison ---------------------------------------------------------------


class TestCompareRuns:
    def test_p2_ranks_above_p1(self):
        manifest = balanced_manifest()
        run_p2 = run_eval(
            scripted_confusion_backend(FIG3_P2, manifest.observations),
            P2,
            manifest,
            Split.TEST,
        )
        run_p1 = run_eval(
            scripted_confusion_backend(FIG3_P1, manifest.observations),
            P1,
            manifest,
            Split.TEST,
        )
        table = compare_runs([run_p1, run_p2])
        assert table["rows"][0]["prompt_id"] == "p2"
        assert table["rows"][0]["best"] is True
        assert table["rows"][1]["best"] is False
        assert table["best_run_id"] == run_p2.run_id
        assert table["rows"][0]["accuracy"] == pytest.approx(108 / 140, abs=1e-12)
        assert table["rows"][1]["accuracy"] == pytest.approx(94 / 140, abs=1e-12)

    def test_single_run_rejected(self):
        run = small_run()
        with pytest.raises(SplitMismatch):
            compare_runs([run])

    def test_mixed_splits_rejected(self):
        manifest_test = balanced_manifest(3)
        val_obs = [
            make_obs(f"obs-v{i}", label, Split.VAL)
            for i, label in enumerate(
                [ConflictLabel.CONFLICT, ConflictLabel.NO_CONFLICT] * 2
            )
        ]
        manifest_val = DatasetManifest(val_obs, seed=5)
        run_test = run_eval(
            OracleBackend.from_observations(manifest_test.observations),
            P2,
            manifest_test,
            Split.TEST,
        )
        run_val = run_eval(
            OracleBackend.from_observations(manifest_val.observations),
            P2,
            manifest_val,
            Split.VAL,
        )
        with pytest.raises(SplitMismatch):
            compare_runs([run_test, run_val])

    def test_tie_broken_by_run_id_lexicographic(self):
        run_a = small_run()
        import dataclasses

        run_b = dataclasses.replace(run_a, run_id="run-zzzzzzzzzzzzzzzz")
        run_c = dataclasses.replace(run_a, run_id="run-aaaaaaaaaaaaaaaa")
        table = compare_runs([run_b, run_c])
        assert [r["run_id"] for r in table["rows"]] == [
            "run-aaaaaaaaaaaaaaaa",
            "run-zzzzzzzzzzzzzzzz",
        ]
