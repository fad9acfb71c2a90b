import json

import pytest

from mfnipr.instance import decimal, from_json, load, parse_decimal, save, to_json
from mfnipr.netgen import GenParams, generate
from mfnipr.network import ValidationError


@pytest.fixture
def inst():
    return generate(GenParams(seed=3, num_users=20, variant="organizational"))


class TestDecimal:
    @pytest.mark.parametrize("x,text", [(0.5, "0.5"), (2.0, "2"), (-0.0, "0"), (1 / 3, "0.333333")])
    def test_format(self, x, text):
        assert decimal(x) == text

    def test_too_many_digits(self):
        with pytest.raises(ValidationError, match="six fraction digits"):
            parse_decimal("0.1234567", "x")

    def test_wrong_type(self):
        with pytest.raises(ValidationError, match="decimal string"):
            parse_decimal(0.5, "x")


class TestRoundTrip:
    def test_json_round_trip(self, inst):
        back = from_json(json.loads(json.dumps(to_json(inst))))
        assert back.network == inst.network
        assert back.rules == inst.rules
        assert back.leadership == inst.leadership

    def test_file_round_trip(self, inst, tmp_path):
        path = tmp_path / "inst.json"
        save(inst, path)
        first = path.read_bytes()
        save(load(path), path)
        assert path.read_bytes() == first


class TestErrors:
    def test_missing_top_level(self, inst):
        data = to_json(inst)
        del data["arcs"]
        with pytest.raises(ValidationError, match="'arcs'"):
            from_json(data)

    def test_missing_node_field(self, inst):
        data = to_json(inst)
        del data["nodes"][2]["capacity"]
        with pytest.raises(ValidationError, match=r"nodes\[2\].*'capacity'"):
            from_json(data)

    def test_bad_arc(self, inst):
        data = to_json(inst)
        data["arcs"][0] = [1]
        with pytest.raises(ValidationError, match=r"arcs\[0\]"):
            from_json(data)

    def test_bad_leader(self, inst):
        data = to_json(inst)
        data["leadership"]["nodes"] = [10**6]
        with pytest.raises(ValidationError, match="leadership.nodes"):
            from_json(data)

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError, match="invalid JSON"):
            load(path)
