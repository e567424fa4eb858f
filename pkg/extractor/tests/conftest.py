"""Builds tiny encoder checkpoints on disk so tests never touch the network.

Both checkpoints share a whitespace WordLevel tokenizer with no special
tokens besides [PAD]/[UNK]; hidden sizes differ on purpose so header
checks can tell the two models apart.
"""

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from transformers import (
    BartConfig,
    BartModel,
    PreTrainedTokenizerFast,
    RobertaConfig,
    RobertaModel,
)

WORDS = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf",
         "hotel", "india", "juliet", "kilo", "lima", "mike", "november",
         "oscar", "papa"]

BART_HIDDEN = 16
ROBERTA_HIDDEN = 12


def make_tokenizer():
    vocab = {"[PAD]": 0, "[UNK]": 1}
    for w in WORDS:
        vocab[w] = len(vocab)
    tok = Tokenizer(WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    return PreTrainedTokenizerFast(tokenizer_object=tok, pad_token="[PAD]",
                                   unk_token="[UNK]")


@pytest.fixture(scope="session")
def bart_ckpt(tmp_path_factory):
    path = tmp_path_factory.mktemp("bart-ckpt")
    tok = make_tokenizer()
    cfg = BartConfig(
        vocab_size=len(tok.get_vocab()), d_model=BART_HIDDEN,
        encoder_layers=1, decoder_layers=1,
        encoder_attention_heads=2, decoder_attention_heads=2,
        encoder_ffn_dim=32, decoder_ffn_dim=32,
        max_position_embeddings=128,
        pad_token_id=0, bos_token_id=1, eos_token_id=1,
        decoder_start_token_id=1, forced_eos_token_id=None)
    torch.manual_seed(0)
    BartModel(cfg).save_pretrained(path)
    tok.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def roberta_ckpt(tmp_path_factory):
    path = tmp_path_factory.mktemp("roberta-ckpt")
    tok = make_tokenizer()
    cfg = RobertaConfig(
        vocab_size=len(tok.get_vocab()), hidden_size=ROBERTA_HIDDEN,
        num_hidden_layers=1, num_attention_heads=2, intermediate_size=24,
        max_position_embeddings=130, pad_token_id=0, type_vocab_size=1)
    torch.manual_seed(1)
    RobertaModel(cfg).save_pretrained(path)
    tok.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def corpus_docs():
    """24 documents, 3 classes, texts drawn from the tokenizer vocabulary."""
    docs = []
    for c, label in enumerate(["conspiracy", "reliable", "satire"]):
        for j in range(8):
            words = [WORDS[(c * 5 + j + k) % len(WORDS)] for k in range(4 + j % 3)]
            docs.append({"id": f"{label[:4]}-{j:02d}", "text": " ".join(words),
                         "label": label})
    return docs
