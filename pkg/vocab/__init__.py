"""Словарь, токенизация и дискретная окрестность предложения."""

from .models import PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN, Sentence, Vocab
from .builder import build_vocab, decode, encode, load_vocab, save_vocab, tokenize
from .neighborhood import hamming, perturbation_budget

__all__ = [
    "PAD_ID",
    "PAD_TOKEN",
    "UNK_ID",
    "UNK_TOKEN",
    "Sentence",
    "Vocab",
    "build_vocab",
    "decode",
    "encode",
    "load_vocab",
    "save_vocab",
    "tokenize",
    "hamming",
    "perturbation_budget",
]
