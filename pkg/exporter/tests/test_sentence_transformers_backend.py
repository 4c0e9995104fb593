"""Exercises the real sentence-transformers code path with a tiny local
model, so no network or model hub access is needed."""

import json

import numpy as np
import pytest

torch = pytest.importorskip("torch")
st_lib = pytest.importorskip("sentence_transformers")

from embx_exporter import ExportJob, export
from claimrank.embeddings import read_matrix

from test_export import write_prepared, PREPARED


@pytest.fixture(scope="module")
def tiny_model_dir(tmp_path_factory):
    from transformers import BertConfig, BertModel, BertTokenizerFast
    from sentence_transformers import SentenceTransformer, models

    root = tmp_path_factory.mktemp("tiny-encoder")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + list(
        "abcdefghijklmnopqrstuvwxyz"
    )
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(vocab))
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab), hidden_size=32, num_hidden_layers=1,
        num_attention_heads=2, intermediate_size=37, max_position_embeddings=64,
    )
    hf_dir = root / "hf"
    BertModel(config).save_pretrained(hf_dir)
    tokenizer.save_pretrained(hf_dir)
    encoder = SentenceTransformer(
        modules=[
            models.Transformer(str(hf_dir), max_seq_length=32),
            models.Pooling(32),
        ]
    )
    st_dir = root / "st"
    encoder.save(str(st_dir))
    return str(st_dir)


def test_st_export_round_trips_through_primary_importer(tiny_model_dir, tmp_path):
    prepared = tmp_path / "prepared.jsonl"
    write_prepared(prepared, PREPARED)
    out = tmp_path / "posts.embx"
    job = ExportJob(
        model=tiny_model_dir, input_path=str(prepared), channel="english",
        kind="post", out_path=str(out), batch_size=2,
    )
    assert export(job) == 3
    matrix = read_matrix(out)
    assert matrix.renormalized == 0
    assert matrix.ids == ["p1", "p2", "p3"]
    assert matrix.dim == 32
    # identical input texts embed identically
    a = matrix.vector("p1").astype(np.float64)
    b = matrix.vector("p3").astype(np.float64)
    assert float(np.dot(a, b)) == pytest.approx(1.0, abs=1e-6)


def test_st_export_is_deterministic(tiny_model_dir, tmp_path):
    prepared = tmp_path / "prepared.jsonl"
    write_prepared(prepared, PREPARED)
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.embx"
        export(ExportJob(
            model=tiny_model_dir, input_path=str(prepared), channel="original",
            kind="factcheck", out_path=str(out),
        ))
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
