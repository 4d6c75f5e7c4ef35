import json
import math
from fractions import Fraction

from anticyclo.errors import PreconditionError, VerificationError
from anticyclo.reports import dumps, error_report, file_hash, normalize, success, write_report
from anticyclo.weights import Weight


def test_normalize():
    assert normalize(Fraction(1, 2)) == "1/2"
    assert normalize(Fraction(4)) == 4
    assert normalize(math.inf) is None
    assert normalize(0.1234567891) == 0.123457
    assert normalize({1: (Weight.of((1, 0), (0,)),)}) == {"1": [{"mu": [1, 0], "lambda": [0]}]}


def test_dumps_is_deterministic():
    a = dumps({"b": 1, "a": [Fraction(1, 3)]})
    b = dumps({"a": [Fraction(1, 3)], "b": 1})
    assert a == b
    assert json.loads(a) == {"a": ["1/3"], "b": 1}


def test_success_and_errors():
    assert success(h=5)["status"] == "success"
    report = error_report(PreconditionError("weights.not_dominant", "bad weight"))
    assert report == {"status": "error", "code": "weights.not_dominant", "message": "bad weight", "exit_status": 2}
    assert error_report(VerificationError("x.y"))["exit_status"] == 3


def test_write_report_and_hash(tmp_path):
    path = str(tmp_path / "report.json")
    text = write_report(success(crit=[0, 5]), path)
    with open(path) as f:
        assert f.read() == text + "\n"
    assert file_hash(path) == file_hash(path)
    assert len(file_hash(path)) == 16
