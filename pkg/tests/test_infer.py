import pytest

from secinf.drbg import Drbg
from secinf.field import FieldParams, TOY_PARAMS
from secinf.infer import (DeviationPlan, InferConfig, consistency_q,
                          run_inference)
from secinf.models import FcSpec, ModelSpec, make_input, make_mlp

F44 = FieldParams()


def tiny_model(params=F44, dims=(8, 4, 4), seed=b"tiny", bound=7):
    return make_mlp(params, dims, seed, weight_bound=2, input_bound=bound)


def test_honest_run_matches_oracle():
    model = tiny_model()
    t0 = make_input(model, b"x1")
    cfg = InferConfig(n=16, seed=101)
    out = run_inference(model, t0, cfg)
    assert not out["client"]["abort"] and not out["server"]["abort"]
    assert out["client"]["logits"] == model.forward(t0)


def test_honest_run_toy_field():
    model = make_mlp(TOY_PARAMS, (4, 3, 2), b"toy", weight_bound=1,
                     input_bound=1)
    t0 = make_input(model, b"x2")
    out = run_inference(model, t0, InferConfig(n=8, seed=7))
    assert out["client"]["logits"] == model.forward(t0)


def test_single_linear_layer_model():
    model = tiny_model(dims=(6, 3))
    t0 = make_input(model, b"x3")
    out = run_inference(model, t0, InferConfig(n=8, seed=9))
    assert out["client"]["logits"] == model.forward(t0)


@pytest.mark.parametrize("site", ["nonlin", "lin_t", "lin_d", "q"])
def test_each_deviation_class_aborts(site):
    model = tiny_model()
    t0 = make_input(model, b"x4")
    dev = DeviationPlan(site=site, layer=1, index=1, delta=3)
    out = run_inference(model, t0, InferConfig(n=16, seed=33), deviation=dev)
    assert out["client"]["abort"] and out["server"]["abort"]
    assert out["client"]["logits"] is None


def test_zero_delta_is_honest():
    model = tiny_model()
    t0 = make_input(model, b"x5")
    dev = DeviationPlan(site="nonlin", layer=1, index=0, delta=0)
    out = run_inference(model, t0, InferConfig(n=16, seed=5), deviation=dev)
    assert not out["client"]["abort"]


def test_consistency_q_hand_built():
    """r_1 - k_1 = (1,0,...) aborts unless s_1[0] = 0, i.e. w.p. 1/p."""
    params = TOY_PARAMS
    rng = Drbg(b"hand-q")
    hits = 0
    trials = 10_000
    for _ in range(trials):
        s = [rng.field_vector(17, 4)]
        sp = [rng.field_vector(17, 4)]
        q = consistency_q([[1, 0, 0, 0]], [[0, 0, 0, 0]], [[0, 0, 0, 0]],
                          s, sp, params)
        if q == 0:
            hits += 1
    assert abs(hits / trials - 1 / 17) < 0.01


def test_q_share_tamper_always_aborts():
    params = TOY_PARAMS
    # q = q0 + q1 + delta is nonzero for any delta != 0 when q0 + q1 = 0
    for delta in range(1, 17):
        assert (0 + delta) % 17 != 0


def test_deterministic_transcripts_given_seed():
    model = tiny_model()
    t0 = make_input(model, b"x6")
    a = run_inference(model, t0, InferConfig(n=16, seed=77))
    b = run_inference(model, t0, InferConfig(n=16, seed=77))
    assert a["client"]["transcript"] == b["client"]["transcript"]
    assert a["server"]["transcript"] == b["server"]["transcript"]
    c = run_inference(model, t0, InferConfig(n=16, seed=78))
    assert c["client"]["transcript"] != a["client"]["transcript"]


def test_range_validation_rejects_overflow():
    params = TOY_PARAMS  # p = 17, half = 9
    rows = [[3, 3], [3, 3]]
    model = ModelSpec(params=params,
                      layers=[FcSpec(rows=rows, n_o=2, n_i=2)],
                      input_bound=2)
    with pytest.raises(ValueError):
        model.validate_ranges()


def test_negative_intermediates_exercise_relu():
    model = make_mlp(F44, (6, 5, 3), b"neg", weight_bound=3, input_bound=9)
    found = False
    for s in range(40):
        t0 = make_input(model, seed=s)
        mid = model.layers[0]
        pre = [sum(w * x for w, x in zip(row, t0)) for row in mid.rows]
        if any(v < 0 for v in pre):
            found = True
            out = run_inference(model, t0, InferConfig(n=8, seed=s))
            assert out["client"]["logits"] == model.forward(t0)
            break
    assert found, "no input produced a negative pre-activation"
