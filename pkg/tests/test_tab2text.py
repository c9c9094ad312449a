import string

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tecollapse.errors import ConfigError, FormatError, IntegrityError
from tecollapse.tab2text import (
    Column,
    EmbeddingMatrix,
    FileEncoder,
    MockEncoder,
    TableSchema,
    encode_dataset,
    mock_encode,
    read_embedding_file,
    serialize_row,
    write_embedding_file,
)

SCHEMA = TableSchema(
    columns=(Column("age", "numeric", "age"), Column("job", "categorical", "occupation")),
    label="y",
    instruction="Predict the income class",
)


def test_single_column_template():
    s = TableSchema(columns=(Column("age", "numeric", "age"),))
    assert serialize_row({"age": 30}, s).text == "The age is 30. "


def test_serialization_is_deterministic_and_local():
    a = serialize_row({"age": 30, "job": "sales"}, SCHEMA)
    b = serialize_row({"age": 30, "job": "sales"}, SCHEMA)
    c = serialize_row({"age": 31, "job": "sales"}, SCHEMA)
    assert a == b
    assert a.text.replace("30", "31") == c.text
    assert a.encoder_input() == "Instruct: Predict the income class\nQuery: " + a.text


@given(st.text(string.ascii_letters, min_size=1, max_size=8), st.text(string.ascii_letters, min_size=1, max_size=8))
@settings(max_examples=200, deadline=None)
def test_rows_differing_in_one_value_differ_only_there(v1, v2):
    t1 = serialize_row({"age": 40, "job": v1}, SCHEMA).text
    t2 = serialize_row({"age": 40, "job": v2}, SCHEMA).text
    prefix = "The age is 40. The occupation is "
    assert t1 == prefix + v1 + ". " and t2 == prefix + v2 + ". "


def test_unknown_template():
    with pytest.raises(ConfigError):
        serialize_row({"age": 1, "job": "x"}, SCHEMA, "prose")


def test_mock_encode_unit_norm_and_deterministic():
    v = mock_encode("hello", 64, 7)
    assert v.dtype == np.float32 and v.shape == (64,)
    assert abs(float(np.linalg.norm(v.astype(np.float64))) - 1.0) < 1e-6
    assert mock_encode("hello", 64, 7).tobytes() == v.tobytes()
    assert mock_encode("hello", 64, 8).tobytes() != v.tobytes()


def test_mock_encode_distinct_texts_nearly_orthogonal():
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(1000):
        a, b = f"row-{i}-{rng.integers(1 << 30)}", f"row-{i}-{rng.integers(1 << 30)}-b"
        worst = max(worst, abs(float(mock_encode(a, 64, 3) @ mock_encode(b, 64, 3))))
    assert worst < 0.5


def test_encode_dataset_shape():
    rows = [{"age": a, "job": "x"} for a in (20, 30, 40)]
    m = encode_dataset(rows, SCHEMA, MockEncoder(dim=8, seed=1), "t")
    assert m.rows.shape == (3, 8)
    assert m.encoder_id == "mock-d8-s1"


def test_csem_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    m = EmbeddingMatrix("enc", rng.standard_normal((17, 5)).astype(np.float32), "CA")
    write_embedding_file(m, tmp_path / "a.csem")
    back = read_embedding_file(tmp_path / "a.csem")
    assert back == m
    assert back.rows.tobytes() == m.rows.tobytes()


def test_csv_round_trip(tmp_path):
    m = EmbeddingMatrix("enc", np.array([[0.1, -2.5], [3.0, 1e-7]], dtype=np.float32), "src")
    write_embedding_file(m, tmp_path / "a.csv")
    assert read_embedding_file(tmp_path / "a.csv") == m


def test_csem_corruptions_report_offsets(tmp_path):
    m = EmbeddingMatrix("e", np.ones((3, 4), dtype=np.float32), "s")
    p = tmp_path / "a.csem"
    write_embedding_file(m, p)
    data = p.read_bytes()
    body = len(data) - 3 * 4 * 4

    p.write_bytes(b"XSEM" + data[4:])
    with pytest.raises(FormatError) as e:
        read_embedding_file(p)
    assert e.value.offset == 0

    p.write_bytes(data[:-5])
    with pytest.raises(FormatError) as e:
        read_embedding_file(p)
    assert e.value.offset == body + 2 * 16

    p.write_bytes(data + b"\0")
    with pytest.raises(FormatError) as e:
        read_embedding_file(p)
    assert e.value.offset == len(data)

    bad = bytearray(data)
    bad[body + 16:body + 20] = np.array([np.nan], dtype="<f4").tobytes()
    p.write_bytes(bytes(bad))
    with pytest.raises(FormatError) as e:
        read_embedding_file(p)
    assert e.value.offset == body + 16


def test_file_encoder_row_mismatch(tmp_path):
    m = EmbeddingMatrix("e5", np.ones((2, 4), dtype=np.float32))
    write_embedding_file(m, tmp_path / "e.csem")
    rows = [{"age": a, "job": "x"} for a in range(3)]
    with pytest.raises(IntegrityError):
        encode_dataset(rows, SCHEMA, FileEncoder(tmp_path / "e.csem"), "t")
