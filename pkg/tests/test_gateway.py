"""Prompt templates, request building, verdict parsing, and backends."""

import os
import threading
import time
from dataclasses import replace
from pathlib import Path

import httpx
import pytest

from conflictlab.errors import (
    BudgetExceeded,
    InconsistentTarget,
    MissingFrame,
    RemoteError,
    Timeout,
    UnknownObservation,
    UnlabeledObservation,
    Unparseable,
)
from conflictlab.gateway import (
    P1,
    P2,
    PROMPTS,
    ChatRequest,
    ContentPart,
    GenerationParams,
    ModelVerdict,
    OracleBackend,
    PartKind,
    RemoteBackend,
    RemoteConfig,
    RequestMode,
    build_request,
    invoke,
    parse_verdict,
    scripted_confusion_backend,
)
from conflictlab.gateway.request import RATIONALE_INSTRUCTION
from conflictlab.metrics import ConfusionMatrix, confusion_from_pairs
from conflictlab.model import ConflictLabel, Frame, Observation, Provenance

FIXTURES = Path(__file__).parent / "fixtures"


def make_obs(
    obs_id: str,
    label: ConflictLabel | None = ConflictLabel.CONFLICT,
    with_bytes: bool = True,
    image_refs: tuple[str, str, str] | None = None,
) -> Observation:
    frames = tuple(
        Frame(
            index=k,
            time_offset=0.5 * k,
            width_px=64,
            height_px=64,
            source_id=obs_id,
            image_bytes=f"img-{obs_id}-{k}".encode() if with_bytes else None,
            image_ref=None if image_refs is None else image_refs[k],
        )
        for k in range(3)
    )
    return Observation(
        id=obs_id, frames=frames, provenance=Provenance.SYNTHETIC, ground_truth=label
    )


def minimal_request(observation_id: str) -> ChatRequest:
    return ChatRequest(
        system="s",
        user_parts=(ContentPart(kind=PartKind.IMAGE, image_bytes=b"x"),),
        model_id="m",
        params=GenerationParams(),
        observation_id=observation_id,
        prompt_id="p2",
        mode=RequestMode.VERDICT_ONLY,
    )


def balanced_observations(n_per_class: int) -> list[Observation]:
    obs = []
    for i in range(n_per_class):
        obs.append(make_obs(f"obs-c{i:03d}", ConflictLabel.CONFLICT))
    for i in range(n_per_class):
        obs.append(make_obs(f"obs-n{i:03d}", ConflictLabel.NO_CONFLICT))
    return obs


# -- prompt templates ---------------------------------------------------------


class TestPrompts:
    def test_p1_matches_frozen_fixture_byte_for_byte(self):
        fixture = (FIXTURES / "prompt_p1.txt").read_text(encoding="utf-8")
        assert P1.system_text == fixture

    def test_p2_matches_frozen_fixture_byte_for_byte(self):
        fixture = (FIXTURES / "prompt_p2.txt").read_text(encoding="utf-8")
        assert P2.system_text == fixture

    def test_p1_opening_words(self):
        assert P1.system_text.startswith(
            "You are a traffic control AI analyzing drone footage"
        )

    def test_p2_mentions_parked_car_rule(self):
        assert "Ignore parked cars" in P2.system_text

    def test_registry_and_lexicon(self):
        assert set(PROMPTS) == {"p1", "p2"}
        for template in PROMPTS.values():
            assert template.lexicon_map == {
                "yes": ConflictLabel.CONFLICT,
                "no": ConflictLabel.NO_CONFLICT,
            }


# -- build_request ------------------------------------------------------------


class TestBuildRequest:
    def test_system_text_is_verbatim(self):
        obs = make_obs("obs-1")
        for template in (P1, P2):
            req = build_request(template, obs)
            assert req.system == template.system_text
            assert req.prompt_id == template.id

    def test_verdict_only_parts_are_exactly_three_images_in_frame_order(self):
        obs = make_obs("obs-1")
        req = build_request(P2, obs, RequestMode.VERDICT_ONLY)
        assert len(req.user_parts) == 3
        assert all(p.kind is PartKind.IMAGE for p in req.user_parts)
        assert [p.image_bytes for p in req.user_parts] == [
            b"img-obs-1-0",
            b"img-obs-1-1",
            b"img-obs-1-2",
        ]

    def test_rationale_mode_appends_layout_instruction_last(self):
        obs = make_obs("obs-1")
        req = build_request(P2, obs, RequestMode.VERDICT_WITH_RATIONALE)
        assert len(req.user_parts) == 4
        assert [p.kind for p in req.user_parts[:3]] == [PartKind.IMAGE] * 3
        tail = req.user_parts[-1]
        assert tail.kind is PartKind.TEXT
        assert tail.text == RATIONALE_INSTRUCTION
        for key in ("verdict:", "explanation:", "recommendation:"):
            assert key in tail.text
        assert req.params.max_answer_tokens > GenerationParams().max_answer_tokens

    def test_default_params_are_deterministic_temperature_zero(self):
        obs = make_obs("obs-1")
        req = build_request(P1, obs)
        assert req.params.temperature == 0.0

    def test_deterministic_and_side_effect_free(self):
        obs = make_obs("obs-1")
        assert build_request(P2, obs) == build_request(P2, obs)

    def test_observation_id_carried_through(self):
        obs = make_obs("obs-42")
        assert build_request(P1, obs).observation_id == "obs-42"

    def test_missing_bytes_and_ref_raises(self):
        obs = make_obs("obs-1", with_bytes=False)
        with pytest.raises(MissingFrame):
            build_request(P2, obs)

    def test_relative_ref_without_root_raises(self):
        obs = make_obs("obs-1", with_bytes=False, image_refs=("a.png", "b.png", "c.png"))
        with pytest.raises(MissingFrame):
            build_request(P2, obs)

    def test_unreadable_ref_raises(self, tmp_path):
        obs = make_obs("obs-1", with_bytes=False, image_refs=("a.png", "b.png", "c.png"))
        with pytest.raises(MissingFrame):
            build_request(P2, obs, image_root=tmp_path)

    def test_image_root_resolution_reads_files(self, tmp_path):
        for k, name in enumerate(("a.png", "b.png", "c.png")):
            (tmp_path / name).write_bytes(f"disk-{k}".encode())
        obs = make_obs("obs-1", with_bytes=False, image_refs=("a.png", "b.png", "c.png"))
        req = build_request(P2, obs, image_root=tmp_path)
        assert [p.image_bytes for p in req.user_parts] == [b"disk-0", b"disk-1", b"disk-2"]

    def test_in_memory_bytes_win_over_refs(self, tmp_path):
        obs = make_obs("obs-1", with_bytes=True)
        req = build_request(P2, obs, image_root=tmp_path)
        assert req.user_parts[0].image_bytes == b"img-obs-1-0"


# -- parse_verdict ------------------------------------------------------------


class TestParseVerdict:
    def test_exact_yes_is_conformant(self):
        parsed = parse_verdict("yes")
        assert parsed.label is ConflictLabel.CONFLICT
        assert parsed.conformant is True

    def test_exact_no_is_conformant(self):
        parsed = parse_verdict("no")
        assert parsed.label is ConflictLabel.NO_CONFLICT
        assert parsed.conformant is True

    def test_label_wire_round_trips_conformant(self):
        for label in ConflictLabel:
            parsed = parse_verdict(label.wire)
            assert parsed.label is label
            assert parsed.conformant is True

    def test_surrounding_whitespace_still_conformant(self):
        parsed = parse_verdict("  yes\n")
        assert parsed.label is ConflictLabel.CONFLICT
        assert parsed.conformant is True

    def test_capitalized_with_period_recovers_non_conformant(self):
        parsed = parse_verdict("No.")
        assert parsed.label is ConflictLabel.NO_CONFLICT
        assert parsed.conformant is False

    def test_outside_lexicon_is_unparseable(self):
        with pytest.raises(Unparseable):
            parse_verdict("maybe a conflict")

    def test_empty_reply_is_unparseable(self):
        with pytest.raises(Unparseable):
            parse_verdict("   \n ")

    def test_first_token_of_first_line_wins(self):
        parsed = parse_verdict("yes, the van and the car converge\nmore detail here")
        assert parsed.label is ConflictLabel.CONFLICT
        assert parsed.conformant is False

    def test_quoted_token_recovers(self):
        parsed = parse_verdict('"yes"')
        assert parsed.label is ConflictLabel.CONFLICT
        assert parsed.conformant is False

    def test_rationale_layout_extracts_all_three_fields(self):
        raw = (
            "verdict: yes\n"
            "explanation: the southbound car enters while the van crosses.\n"
            "recommendation: hold the sub-road signal two seconds longer."
        )
        parsed = parse_verdict(raw)
        assert parsed.label is ConflictLabel.CONFLICT
        assert parsed.conformant is False
        assert parsed.explanation == "the southbound car enters while the van crosses."
        assert parsed.recommendation == "hold the sub-road signal two seconds longer."

    def test_rationale_layout_verdict_line_beats_first_token(self):
        raw = "Assessment below.\nverdict: no\nexplanation: clear gap."
        parsed = parse_verdict(raw)
        assert parsed.label is ConflictLabel.NO_CONFLICT
        assert parsed.explanation == "clear gap."

    def test_wrapped_explanation_lines_are_joined(self):
        raw = (
            "verdict: yes\n"
            "explanation: the car keeps speed\n"
            "and the van does not yield.\n"
            "recommendation: reroute."
        )
        parsed = parse_verdict(raw)
        assert parsed.explanation == "the car keeps speed and the van does not yield."
        assert parsed.recommendation == "reroute."

    def test_rationale_verdict_outside_lexicon_is_unparseable(self):
        with pytest.raises(Unparseable):
            parse_verdict("verdict: unclear\nexplanation: hmm.")

    def test_case_insensitive_layout_keys(self):
        parsed = parse_verdict("Verdict: Yes\nExplanation: close approach.")
        assert parsed.label is ConflictLabel.CONFLICT
        assert parsed.explanation == "close approach."


# -- ModelVerdict -------------------------------------------------------------


class TestModelVerdict:
    def test_negative_latency_rejected(self):
        with pytest.raises(ValueError):
            ModelVerdict(
                observation_id="o",
                label=ConflictLabel.CONFLICT,
                raw_text="yes",
                conformant=True,
                latency_ms=-1,
                backend_id="b",
            )

    def test_record_round_trip(self):
        verdict = ModelVerdict(
            observation_id="obs-7",
            label=ConflictLabel.NO_CONFLICT,
            raw_text="verdict: no\nexplanation: clear.",
            conformant=False,
            latency_ms=12,
            backend_id="oracle",
            explanation="clear.",
            recommendation=None,
        )
        assert ModelVerdict.from_record(verdict.to_record()) == verdict


# -- oracle backend -----------------------------------------------------------


class TestOracleBackend:
    def test_returns_ground_truth_wire_token(self):
        obs = [
            make_obs("obs-a", ConflictLabel.CONFLICT),
            make_obs("obs-b", ConflictLabel.NO_CONFLICT),
        ]
        backend = OracleBackend.from_observations(obs)
        assert invoke(backend, minimal_request("obs-a")) == "yes"
        assert invoke(backend, minimal_request("obs-b")) == "no"

    def test_replies_parse_back_to_truth_conformant(self):
        obs = balanced_observations(5)
        backend = OracleBackend.from_observations(obs)
        for o in obs:
            parsed = parse_verdict(backend.complete(minimal_request(o.id)))
            assert parsed.label is o.ground_truth
            assert parsed.conformant is True

    def test_rationale_mode_reply_carries_scoreable_text(self):
        obs = balanced_observations(2)
        backend = OracleBackend.from_observations(obs)
        for o in obs:
            request = replace(minimal_request(o.id),
                              mode=RequestMode.VERDICT_WITH_RATIONALE)
            parsed = parse_verdict(backend.complete(request))
            assert parsed.label is o.ground_truth
            assert parsed.conformant is False  # structured, not a bare token
            assert parsed.explanation
            assert parsed.recommendation

    def test_rationale_explanation_uses_scenario_facts_when_known(self):
        from conflictlab.sim import sample_scenario

        scenario = next(
            sample_scenario(seed) for seed in range(100)
            if sample_scenario(seed).oracle_label is ConflictLabel.CONFLICT
            and sample_scenario(seed).conflict_pairs
        )
        o = replace(make_obs("obs-a", ConflictLabel.CONFLICT),
                    scenario_ref=scenario.id)
        backend = OracleBackend.from_observations([o], {scenario.id: scenario})
        request = replace(minimal_request("obs-a"),
                          mode=RequestMode.VERDICT_WITH_RATIONALE)
        parsed = parse_verdict(backend.complete(request))
        pair_id = scenario.conflict_pairs[0][0]
        assert pair_id in parsed.explanation

    def test_unknown_observation_raises(self):
        backend = OracleBackend({"obs-a": ConflictLabel.CONFLICT})
        with pytest.raises(UnknownObservation):
            backend.complete(minimal_request("obs-z"))

    def test_unlabeled_observation_rejected_at_construction(self):
        with pytest.raises(UnlabeledObservation):
            OracleBackend.from_observations([make_obs("obs-a", label=None)])


# -- scripted confusion backend ----------------------------------------------


class TestScriptedConfusionBackend:
    def tabulate(self, backend, observations) -> ConfusionMatrix:
        pairs = []
        for o in observations:
            raw = backend.complete(minimal_request(o.id))
            pairs.append((o.ground_truth, parse_verdict(raw).label))
        return confusion_from_pairs(pairs)

    def test_reproduces_headline_matrix_over_70_70(self):
        obs = balanced_observations(70)
        target = ConfusionMatrix(tp=48, fp=10, fn=22, tn=60)
        backend = scripted_confusion_backend(target, obs)
        assert self.tabulate(backend, obs) == target

    def test_perfect_target_gives_perfect_predictions(self):
        obs = balanced_observations(70)
        target = ConfusionMatrix(tp=70, fp=0, fn=0, tn=70)
        backend = scripted_confusion_backend(target, obs)
        for o in obs:
            assert backend.complete(minimal_request(o.id)) == o.ground_truth.wire

    def test_inconsistent_conflict_total_raises(self):
        obs = balanced_observations(70)
        with pytest.raises(InconsistentTarget):
            scripted_confusion_backend(ConfusionMatrix(tp=49, fp=10, fn=22, tn=60), obs)

    def test_inconsistent_no_conflict_total_raises(self):
        obs = balanced_observations(70)
        with pytest.raises(InconsistentTarget):
            scripted_confusion_backend(ConfusionMatrix(tp=48, fp=10, fn=22, tn=61), obs)

    def test_errors_are_assigned_to_lowest_ids_within_class(self):
        obs = balanced_observations(3)  # conflict ids obs-c000..002, no obs-n000..002
        target = ConfusionMatrix(tp=2, fp=1, fn=1, tn=2)
        backend = scripted_confusion_backend(target, obs)
        assert backend.complete(minimal_request("obs-c000")) == "no"
        assert backend.complete(minimal_request("obs-c001")) == "yes"
        assert backend.complete(minimal_request("obs-c002")) == "yes"
        assert backend.complete(minimal_request("obs-n000")) == "yes"
        assert backend.complete(minimal_request("obs-n001")) == "no"
        assert backend.complete(minimal_request("obs-n002")) == "no"

    def test_input_order_does_not_matter(self):
        obs = balanced_observations(10)
        target = ConfusionMatrix(tp=7, fp=2, fn=3, tn=8)
        forward = scripted_confusion_backend(target, obs)
        backward = scripted_confusion_backend(target, list(reversed(obs)))
        for o in obs:
            assert forward.complete(minimal_request(o.id)) == backward.complete(
                minimal_request(o.id)
            )

    def test_unlabeled_observation_rejected(self):
        obs = balanced_observations(2) + [make_obs("obs-u", label=None)]
        with pytest.raises(UnlabeledObservation):
            scripted_confusion_backend(ConfusionMatrix(tp=2, fp=0, fn=0, tn=2), obs)

    def test_unknown_observation_raises(self):
        obs = balanced_observations(2)
        backend = scripted_confusion_backend(ConfusionMatrix(tp=2, fp=0, fn=0, tn=2), obs)
        with pytest.raises(UnknownObservation):
            backend.complete(minimal_request("obs-zzz"))


# -- remote backend -----------------------------------------------------------


def ok_response(text: str) -> httpx.Response:
    return httpx.Response(
        200, json={"choices": [{"message": {"role": "assistant", "content": text}}]}
    )


CFG = dict(endpoint="https://example.test/v1/chat", model_id="vision-model")


class TestRemoteBackend:
    def test_success_path_returns_content_and_encodes_request(self):
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["body"] = request.read()
            seen["url"] = str(request.url)
            import json

            payload = json.loads(seen["body"])
            seen["payload"] = payload
            return ok_response("yes")

        backend = RemoteBackend(
            RemoteConfig(**CFG), transport=httpx.MockTransport(handler)
        )
        obs = make_obs("obs-1")
        req = build_request(P2, obs, model_id="vision-model")
        assert invoke(backend, req) == "yes"

        payload = seen["payload"]
        assert seen["url"] == CFG["endpoint"]
        assert payload["model"] == "vision-model"
        assert payload["temperature"] == 0.0
        assert payload["messages"][0] == {"role": "system", "content": P2.system_text}
        content = payload["messages"][1]["content"]
        assert [part["type"] for part in content] == ["image_url"] * 3
        import base64

        for k, part in enumerate(content):
            url = part["image_url"]["url"]
            assert url.startswith("data:image/png;base64,")
            assert base64.b64decode(url.split(",", 1)[1]) == f"img-obs-1-{k}".encode()

    def test_rationale_request_carries_trailing_text_part(self):
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            import json

            seen["payload"] = json.loads(request.read())
            return ok_response("verdict: no\nexplanation: e\nrecommendation: r")

        backend = RemoteBackend(
            RemoteConfig(**CFG), transport=httpx.MockTransport(handler)
        )
        req = build_request(P2, make_obs("obs-1"), RequestMode.VERDICT_WITH_RATIONALE)
        invoke(backend, req)
        content = seen["payload"]["messages"][1]["content"]
        assert [part["type"] for part in content] == ["image_url"] * 3 + ["text"]
        assert content[-1]["text"] == RATIONALE_INSTRUCTION

    def test_two_transient_failures_then_success_succeeds_on_third_attempt(self):
        calls = {"n": 0}
        delays: list[float] = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(500, text="server error")
            if calls["n"] == 2:
                raise httpx.ConnectTimeout("slow", request=request)
            return ok_response("no")

        backend = RemoteBackend(
            RemoteConfig(**CFG, retries=2, backoff_base_s=0.25),
            transport=httpx.MockTransport(handler),
            sleeper=delays.append,
        )
        assert invoke(backend, build_request(P1, make_obs("obs-1"))) == "no"
        assert calls["n"] == 3
        assert delays == [0.25, 0.5]  # exponential, deterministic

    def test_timeout_on_every_attempt_raises_timeout(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            raise httpx.ReadTimeout("slow", request=request)

        backend = RemoteBackend(
            RemoteConfig(**CFG, retries=2),
            transport=httpx.MockTransport(handler),
            sleeper=lambda s: None,
        )
        with pytest.raises(Timeout):
            invoke(backend, build_request(P1, make_obs("obs-1")))
        assert calls["n"] == 3

    def test_429_is_retried(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(429, text="rate limited")
            return ok_response("yes")

        backend = RemoteBackend(
            RemoteConfig(**CFG, retries=1),
            transport=httpx.MockTransport(handler),
            sleeper=lambda s: None,
        )
        assert invoke(backend, build_request(P1, make_obs("obs-1"))) == "yes"
        assert calls["n"] == 2

    def test_client_error_is_terminal_without_retry(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(404, text="nope")

        backend = RemoteBackend(
            RemoteConfig(**CFG, retries=3),
            transport=httpx.MockTransport(handler),
            sleeper=lambda s: None,
        )
        with pytest.raises(RemoteError):
            invoke(backend, build_request(P1, make_obs("obs-1")))
        assert calls["n"] == 1

    def test_persistent_server_error_raises_remote_error_after_retries(self):
        def handler(request: httpx.Request) -> httpx.Response:
            return httpx.Response(503, text="down")

        backend = RemoteBackend(
            RemoteConfig(**CFG, retries=2),
            transport=httpx.MockTransport(handler),
            sleeper=lambda s: None,
        )
        with pytest.raises(RemoteError):
            invoke(backend, build_request(P1, make_obs("obs-1")))

    def test_budget_counts_attempts_and_aborts(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(500, text="down")

        backend = RemoteBackend(
            RemoteConfig(**CFG, retries=5, request_budget=2),
            transport=httpx.MockTransport(handler),
            sleeper=lambda s: None,
        )
        with pytest.raises(BudgetExceeded):
            invoke(backend, build_request(P1, make_obs("obs-1")))
        assert calls["n"] == 2
        assert backend.requests_sent == 2

    def test_budget_spent_across_requests(self):
        def handler(request: httpx.Request) -> httpx.Response:
            return ok_response("yes")

        backend = RemoteBackend(
            RemoteConfig(**CFG, request_budget=2),
            transport=httpx.MockTransport(handler),
            sleeper=lambda s: None,
        )
        req = build_request(P1, make_obs("obs-1"))
        invoke(backend, req)
        invoke(backend, req)
        with pytest.raises(BudgetExceeded):
            invoke(backend, req)

    def test_auth_token_header_from_environment(self):
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["auth"] = request.headers.get("Authorization")
            return ok_response("yes")

        os.environ["CONFLICTLAB_TEST_TOKEN"] = "sekrit"
        try:
            backend = RemoteBackend(
                RemoteConfig(**CFG, auth_token_env="CONFLICTLAB_TEST_TOKEN"),
                transport=httpx.MockTransport(handler),
            )
            invoke(backend, build_request(P1, make_obs("obs-1")))
        finally:
            del os.environ["CONFLICTLAB_TEST_TOKEN"]
        assert seen["auth"] == "Bearer sekrit"

    def test_missing_auth_token_env_fails_fast(self):
        os.environ.pop("CONFLICTLAB_NO_SUCH_TOKEN", None)
        with pytest.raises(RemoteError):
            RemoteBackend(
                RemoteConfig(**CFG, auth_token_env="CONFLICTLAB_NO_SUCH_TOKEN"),
                transport=httpx.MockTransport(lambda r: ok_response("yes")),
            )

    def test_malformed_response_body_raises_remote_error(self):
        def handler(request: httpx.Request) -> httpx.Response:
            return httpx.Response(200, json={"unexpected": "shape"})

        backend = RemoteBackend(
            RemoteConfig(**CFG), transport=httpx.MockTransport(handler)
        )
        with pytest.raises(RemoteError):
            invoke(backend, build_request(P1, make_obs("obs-1")))

    def test_max_in_flight_bounds_concurrency(self):
        lock = threading.Lock()
        state = {"active": 0, "peak": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            with lock:
                state["active"] += 1
                state["peak"] = max(state["peak"], state["active"])
            time.sleep(0.01)
            with lock:
                state["active"] -= 1
            import json

            payload = json.loads(request.read())
            # Echo nothing sensitive; answer depends only on arrival.
            return ok_response("yes" if payload["model"] else "no")

        backend = RemoteBackend(
            RemoteConfig(**CFG, max_in_flight=2),
            transport=httpx.MockTransport(handler),
            sleeper=lambda s: None,
        )
        requests = [build_request(P1, make_obs(f"obs-{i}")) for i in range(8)]
        results: dict[str, str] = {}

        def worker(req):
            results[req.observation_id] = invoke(backend, req)

        threads = [threading.Thread(target=worker, args=(r,)) for r in requests]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert state["peak"] <= 2
        assert set(results) == {f"obs-{i}" for i in range(8)}
        assert all(v == "yes" for v in results.values())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RemoteConfig(endpoint="")
        with pytest.raises(ValueError):
            RemoteConfig(endpoint="https://x", timeout_s=0)
        with pytest.raises(ValueError):
            RemoteConfig(endpoint="https://x", retries=-1)
        with pytest.raises(ValueError):
            RemoteConfig(endpoint="https://x", max_in_flight=0)
        with pytest.raises(ValueError):
            RemoteConfig(endpoint="https://x", request_budget=0)
