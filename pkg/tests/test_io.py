import json

import numpy as np
import pytest

from semirandom_ug import io
from semirandom_ug.core import Labeling, integral_solution
from semirandom_ug.generators import GenConfig, generate
from semirandom_ug.lp import LPWeights


@pytest.mark.parametrize("linear", [False, True])
def test_instance_and_truth_roundtrip(tmp_path, linear):
    inst, truth = generate(GenConfig(n=12, k=3, eps=0.2, model=1, deg=4, seed=1, linear=linear))
    path = tmp_path / "inst.json"
    io.write_json(path, io.instance_to_json(inst))
    assert io.instance_from_json(io.read_json(path)) == inst
    io.write_json(io.truth_path(path), io.truth_to_json(truth))
    back = io.truth_from_json(io.read_json(tmp_path / "inst.truth.json"), inst.k)
    assert np.array_equal(back.corrupted, truth.corrupted)
    assert back.planted == truth.planted and back.model == 1


def test_solution_weights_labeling_roundtrip():
    lab = Labeling([0, 2, 1], 3)
    sol = integral_solution(lab, "crude")
    assert np.array_equal(io.solution_from_json(io.solution_to_json(sol, 1.0)).vectors, sol.vectors)
    w = LPWeights(np.full((3, 3), 1 / 3), 0.5)
    w2 = io.weights_from_json(io.weights_to_json(w))
    assert np.array_equal(w2.x, w.x) and w2.objective == 0.5
    assert io.labeling_from_json(io.labeling_to_json(lab)) == lab


def test_dumps_is_canonical():
    a = io.dumps({"b": np.float64(0.1), "a": np.arange(3)})
    b = io.dumps({"a": [0, 1, 2], "b": 0.1})
    assert a == b


def test_version_check(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"format_version": 99}))
    with pytest.raises(io.FormatError):
        io.read_json(p)


def test_bad_solution_size():
    doc = io.solution_to_json(integral_solution(Labeling([0, 1], 2), "crude"))
    doc["d"] = 7
    with pytest.raises(io.FormatError):
        io.solution_from_json(doc)
