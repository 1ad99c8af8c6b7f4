"""Синтетический корпус тематической классификации и ввод/вывод TSV."""

from .models import Example, SynthSpec, Split
from .synth import KeywordOracle, generate, load_spec, save_spec, split
from .tsv import load_tsv, save_tsv

__all__ = [
    "Example",
    "SynthSpec",
    "Split",
    "KeywordOracle",
    "generate",
    "load_spec",
    "save_spec",
    "split",
    "load_tsv",
    "save_tsv",
]
