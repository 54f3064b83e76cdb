"""Joint lemmatization and POS tagging over CoNLL-U corpora with lemma-rule classes."""

__version__ = "0.1.0"
